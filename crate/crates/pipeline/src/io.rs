//! Panel CSV reading and writing.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use co2_core::data::{csv_header, Observation, PanelDataset, DEFAULT_YEARS, FEATURES, N_FEATURES};

use crate::error::{io_err, PipelineError, Result};

/// Reads and validates a panel CSV. Rows keep their file order.
pub fn load_panel(path: &Path) -> Result<PanelDataset> {
    let file = File::open(path).map_err(io_err(path))?;
    read_panel(file)
}

pub fn read_panel<R: Read>(reader: R) -> Result<PanelDataset> {
    read_panel_with_years(reader, DEFAULT_YEARS)
}

pub fn read_panel_with_years<R: Read>(reader: R, years: (i32, i32)) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let expected = csv_header();
    for name in &expected {
        if !header.iter().any(|h| h == name) {
            return Err(PipelineError::Schema(format!("missing column '{name}'")));
        }
    }
    if let Some(extra) = header.iter().find(|h| !expected.contains(&h.as_str())) {
        return Err(PipelineError::Schema(format!("unexpected column '{extra}'")));
    }
    if header.len() != expected.len() {
        return Err(PipelineError::Schema("duplicate column in header".into()));
    }
    let pos = |name: &str| header.iter().position(|h| h == name).expect("checked above");
    let country_at = pos("country");
    let year_at = pos("year");
    let feature_at: Vec<usize> = FEATURES.iter().map(|f| pos(f.column)).collect();
    let target_at = pos(co2_core::data::TARGET_COLUMN);

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based file line of the record, counting the header
        let row = i + 2;
        let cell = |at: usize| record.get(at).unwrap_or("");
        let number = |at: usize| -> Result<f64> {
            let raw = cell(at);
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| PipelineError::Parse {
                row,
                column: header[at].clone(),
                value: raw.to_owned(),
            })
        };
        let country = cell(country_at);
        if country.is_empty() {
            return Err(PipelineError::Parse { row, column: "country".into(), value: String::new() });
        }
        let year = cell(year_at).parse::<i32>().map_err(|_| PipelineError::Parse {
            row,
            column: "year".into(),
            value: cell(year_at).to_owned(),
        })?;
        let mut features = [0.0; N_FEATURES];
        for (f, &at) in features.iter_mut().zip(&feature_at) {
            *f = number(at)?;
        }
        rows.push(Observation { country: country.to_owned(), year, features, target: number(target_at)? });
    }
    Ok(PanelDataset::new(rows, years)?)
}

pub fn write_panel<W: Write>(writer: W, data: &PanelDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header())?;
    for r in data.rows() {
        let mut record = vec![r.country.clone(), r.year.to_string()];
        record.extend(r.features.iter().map(f64::to_string));
        record.push(r.target.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| PipelineError::Csv(e.into()))?;
    Ok(())
}

pub fn save_panel(path: &Path, data: &PanelDataset) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_panel(std::io::BufWriter::new(file), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use co2_core::reporting::{generate_synthetic, SyntheticSpec};

    fn header() -> String {
        csv_header().join(",")
    }

    fn line(country: &str, year: i32) -> String {
        let mut cells = vec![country.to_string(), year.to_string()];
        cells.extend((0..=N_FEATURES).map(|j| format!("{}.5", j + 1)));
        cells.join(",")
    }

    #[test]
    fn three_rows() {
        let text = format!("{}\n{}\n{}\n{}\n", header(), line("USA", 2001), line("USA", 2002), line("FRA", 2001));
        let d = read_panel(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.rows()[2].country, "FRA");
        assert_eq!(d.rows()[0].features[0], 1.5);
        assert_eq!(d.rows()[0].target, 11.5);
    }

    #[test]
    fn missing_feature_is_named() {
        let cols: Vec<&str> = csv_header().into_iter().filter(|c| *c != "gdp_usd").collect();
        let err = read_panel(format!("{}\n", cols.join(",")).as_bytes()).unwrap_err();
        assert!(err.to_string().contains("gdp_usd"), "{err}");
    }

    #[test]
    fn extra_column_is_named() {
        let err = read_panel(format!("{},bonus\n", header()).as_bytes()).unwrap_err();
        assert!(err.to_string().contains("bonus"));
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        let bad = line("USA", 2001).replacen("3.5", "abc", 1);
        let err = read_panel(format!("{}\n{}\n{}\n", header(), line("USA", 2000), bad).as_bytes()).unwrap_err();
        match err {
            PipelineError::Parse { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (3, "population", "abc"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn duplicate_rows_rejected() {
        let text = format!("{}\n{}\n{}\n", header(), line("USA", 2001), line("USA", 2001));
        assert!(matches!(read_panel(text.as_bytes()), Err(PipelineError::Core(co2_core::Error::Duplicate { .. }))));
    }

    #[test]
    fn round_trip_is_exact() {
        let d = generate_synthetic(&SyntheticSpec { n_countries: 3, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_panel(&mut buf, &d).unwrap();
        assert_eq!(read_panel(buf.as_slice()).unwrap(), d);
        let mut again = Vec::new();
        write_panel(&mut again, &read_panel(buf.as_slice()).unwrap()).unwrap();
        assert_eq!(buf, again);
    }
}
