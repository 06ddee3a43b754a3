//! CSV and JSON interchange.
//!
//! CSV layout: one sample per row, comma-separated values, with an optional
//! final label column (`stable` / `unstable`). A header row is detected when
//! its first field does not parse as a number. Values are written with Rust's
//! shortest round-trip formatting, so save/load is bit-exact.
//!
//! JSON layout for datasets:
//! `{"fs": 60.0, "samples": [{"values": [...], "label": "stable"}, ...]}`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{AngleMatrix, Label, LabeledDataset, LabeledSample, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Json,
}

impl DataFormat {
    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => DataFormat::Json,
            _ => DataFormat::Csv,
        }
    }
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub values: Vec<f64>,
    pub label: Option<Label>,
}

fn parse_value(field: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("row {row}, column {col}: cannot parse {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("row {row}, column {col}: non-finite value {field:?}")));
    }
    Ok(v)
}

fn is_numeric_token(s: &str) -> bool {
    s.trim().parse::<f64>().is_ok()
}

/// Reads comma-separated rows. Rows must all have the same width and either
/// all or none carry a trailing label token.
pub fn read_csv_rows(reader: impl Read) -> Result<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    if let Some(first) = records.first() {
        if !first.get(0).map(is_numeric_token).unwrap_or(false) {
            records.remove(0);
        }
    }
    if records.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }

    let width = records[0].len();
    let mut rows = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        if rec.len() != width {
            return Err(Error::Format(format!("row {r} has {} fields, expected {width}", rec.len())));
        }
        let last = rec.get(width - 1).unwrap_or("");
        let (n_values, label) = if is_numeric_token(last) {
            (width, None)
        } else {
            (width - 1, Some(last.parse::<Label>()?))
        };
        let values = (0..n_values)
            .map(|c| parse_value(&rec[c], r, c))
            .collect::<Result<Vec<_>>>()?;
        rows.push(Row { values, label });
    }
    let labeled = rows[0].label.is_some();
    if rows.iter().any(|r| r.label.is_some() != labeled) {
        return Err(Error::Format("some rows carry a label column and some do not".into()));
    }
    Ok(rows)
}

pub fn write_csv_rows(writer: impl Write, rows: &[Row]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for row in rows {
        let mut first = true;
        for v in &row.values {
            if !first {
                w.write_all(b",")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        if let Some(l) = row.label {
            write!(w, ",{l}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonSample {
    values: Vec<f64>,
    label: Label,
}

#[derive(Serialize, Deserialize)]
struct JsonDataset {
    fs: f64,
    samples: Vec<JsonSample>,
}

fn dataset_from_rows(rows: Vec<Row>, fs: f64) -> Result<LabeledDataset> {
    let samples = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let label = r
                .label
                .ok_or_else(|| Error::Label(format!("row {i} has no label column")))?;
            Ok(LabeledSample::new(Signal::new(r.values, fs)?, label))
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(samples)
}

/// Parses a labeled dataset. `fs` applies to CSV input, which carries no rate.
pub fn parse_dataset(text: &str, format: DataFormat, fs: f64) -> Result<LabeledDataset> {
    match format {
        DataFormat::Csv => dataset_from_rows(read_csv_rows(text.as_bytes())?, fs),
        DataFormat::Json => {
            if text.trim().is_empty() {
                return Err(Error::Format("empty JSON document".into()));
            }
            let raw: JsonDataset =
                serde_json::from_str(text).map_err(|e| Error::Format(format!("bad dataset JSON: {e}")))?;
            let rows = raw
                .samples
                .into_iter()
                .map(|s| Row { values: s.values, label: Some(s.label) })
                .collect();
            dataset_from_rows(rows, raw.fs)
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat, fs: f64) -> Result<LabeledDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, format, fs)
}

pub fn dataset_to_string(d: &LabeledDataset, format: DataFormat) -> Result<String> {
    match format {
        DataFormat::Csv => {
            let mut buf = Vec::new();
            write_csv_rows(&mut buf, &dataset_rows(d))?;
            Ok(String::from_utf8(buf).expect("csv output is utf-8"))
        }
        DataFormat::Json => {
            let raw = JsonDataset {
                fs: d.fs().unwrap_or(1.0),
                samples: d
                    .samples()
                    .iter()
                    .map(|s| JsonSample { values: s.signal.samples().to_vec(), label: s.label })
                    .collect(),
            };
            Ok(serde_json::to_string(&raw)?)
        }
    }
}

pub fn save_dataset(path: impl AsRef<Path>, d: &LabeledDataset, format: DataFormat) -> Result<()> {
    std::fs::write(path, dataset_to_string(d, format)?)?;
    Ok(())
}

fn dataset_rows(d: &LabeledDataset) -> Vec<Row> {
    d.samples()
        .iter()
        .map(|s| Row { values: s.signal.samples().to_vec(), label: Some(s.label) })
        .collect()
}

/// Loads signals, keeping any labels that are present.
pub fn load_signal_rows(path: impl AsRef<Path>, fs: f64) -> Result<(Vec<Signal>, Option<Vec<Label>>)> {
    let rows = read_csv_rows(File::open(path)?)?;
    let labels: Option<Vec<Label>> = rows.iter().map(|r| r.label).collect();
    let signals = rows
        .into_iter()
        .map(|r| Signal::new(r.values, fs))
        .collect::<Result<Vec<_>>>()?;
    Ok((signals, labels))
}

pub fn save_signal_rows(path: impl AsRef<Path>, signals: &[Signal], labels: Option<&[Label]>) -> Result<()> {
    let rows: Vec<Row> = signals
        .iter()
        .enumerate()
        .map(|(i, s)| Row { values: s.samples().to_vec(), label: labels.map(|l| l[i]) })
        .collect();
    write_csv_rows(File::create(path)?, &rows)
}

pub fn load_angle_matrix(path: impl AsRef<Path>, fs: f64) -> Result<AngleMatrix> {
    let rows = read_csv_rows(File::open(path)?)?;
    if rows.iter().any(|r| r.label.is_some()) {
        return Err(Error::Format("angle matrix rows must be purely numeric".into()));
    }
    AngleMatrix::new(rows.into_iter().map(|r| r.values).collect(), fs)
}

/// Reads a comma/newline separated list of non-negative weights.
pub fn load_weights(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| parse_value(t, 0, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row_text(n: usize, label: &str) -> String {
        let vals: Vec<String> = (0..n).map(|i| format!("{}", i as f64 * 0.01)).collect();
        format!("{},{label}", vals.join(","))
    }

    #[test]
    fn csv_two_rows_of_400() {
        let text = format!("{}\n{}\n", row_text(400, "stable"), row_text(400, "unstable"));
        let d = parse_dataset(&text, DataFormat::Csv, 60.0).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.sample_len(), Some(400));
        assert_eq!(d.class_counts(), (1, 1));
    }

    #[test]
    fn header_row_is_skipped() {
        let text = "v0,v1,v2,label\n1,2,3,stable\n4,5,6,unstable\n";
        let d = parse_dataset(text, DataFormat::Csv, 60.0).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.samples()[1].signal.samples(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn empty_file_is_format_error() {
        assert!(matches!(parse_dataset("", DataFormat::Csv, 60.0), Err(Error::Format(_))));
        assert!(matches!(parse_dataset("", DataFormat::Json, 60.0), Err(Error::Format(_))));
    }

    #[test]
    fn nan_is_data_error() {
        let text = "1,NaN,3,stable\n";
        assert!(matches!(parse_dataset(text, DataFormat::Csv, 60.0), Err(Error::Data(_))));
    }

    #[test]
    fn ragged_rows_are_format_error() {
        let text = "1,2,3,stable\n1,2,stable\n";
        assert!(matches!(parse_dataset(text, DataFormat::Csv, 60.0), Err(Error::Format(_))));
    }

    #[test]
    fn unknown_label_token() {
        let text = "1,2,3,wobbly\n";
        assert!(matches!(parse_dataset(text, DataFormat::Csv, 60.0), Err(Error::Label(_))));
    }

    fn arb_dataset() -> impl Strategy<Value = LabeledDataset> {
        (2usize..12, 1usize..6).prop_flat_map(|(len, n)| {
            proptest::collection::vec(
                (proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, len), any::<bool>()),
                n,
            )
            .prop_map(|rows| {
                let samples = rows
                    .into_iter()
                    .map(|(v, u)| {
                        let l = if u { Label::Unstable } else { Label::Stable };
                        LabeledSample::new(Signal::new(v, 60.0).unwrap(), l)
                    })
                    .collect();
                LabeledDataset::new(samples).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(d in arb_dataset(), json in any::<bool>()) {
            let fmt = if json { DataFormat::Json } else { DataFormat::Csv };
            let text = dataset_to_string(&d, fmt).unwrap();
            let back = parse_dataset(&text, fmt, 60.0).unwrap();
            prop_assert_eq!(back.len(), d.len());
            for (a, b) in back.samples().iter().zip(d.samples()) {
                prop_assert_eq!(a.label, b.label);
                for (x, y) in a.signal.samples().iter().zip(b.signal.samples()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
