use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{BerRecord, RuntimeRecord, StatRecord};
use crate::error::{Error, Result};

/// Result file encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

/// A row type with a fixed CSV header.
pub trait Record: Serialize {
    const HEADER: &'static [&'static str];
}

impl Record for BerRecord {
    const HEADER: &'static [&'static str] = &[
        "scheme",
        "n_ris",
        "n_rx",
        "k",
        "snr_db",
        "trials",
        "bit_errors",
        "total_bits",
        "ber",
        "seed",
    ];
}

impl Record for StatRecord {
    const HEADER: &'static [&'static str] = &[
        "n_ris",
        "k",
        "n_rx",
        "realizations",
        "mean_lambda1",
        "var_lambda1",
        "seed",
    ];
}

impl Record for RuntimeRecord {
    const HEADER: &'static [&'static str] = &[
        "n_ris",
        "n_rx",
        "realizations",
        "mean_solve_seconds",
        "mean_min_gain",
        "unconverged",
        "seed",
    ];
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn ser_err(path: &Path, message: impl ToString) -> Error {
    Error::Serialize {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Writes `records` to `path`, replacing any existing file.
///
/// CSV always starts with the header row, even for an empty list; JSON is a
/// single array.
pub fn emit_results<T: Record>(records: &[T], path: &Path, format: OutputFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
            w.write_record(T::HEADER).map_err(|e| ser_err(path, e))?;
            for r in records {
                w.serialize(r).map_err(|e| ser_err(path, e))?;
            }
            w.flush().map_err(|e| io_err(path, e))?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, records).map_err(|e| ser_err(path, e))?;
            out.write_all(b"\n").map_err(|e| io_err(path, e))?;
        }
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Reads a JSON array written by [`emit_results`].
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| ser_err(path, e))
}

/// `f64` that may be infinite: finite values are plain numbers, infinities
/// are the strings `"inf"` / `"-inf"`.
pub(crate) mod extended_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    struct ExtVisitor;

    impl Visitor<'_> for ExtVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or \"inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => v.parse().map_err(E::custom),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(snr_db: f64) -> BerRecord {
        BerRecord {
            scheme: "grqsm-optimal".into(),
            n_ris: 64,
            n_rx: 8,
            k: 2,
            snr_db,
            trials: 100,
            bit_errors: 3,
            total_bits: 1000,
            ber: 0.003,
            seed: 42,
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_results::<BerRecord>(&[], &path, OutputFormat::Csv).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "scheme,n_ris,n_rx,k,snr_db,trials,bit_errors,total_bits,ber,seed\n"
        );
    }

    #[test]
    fn csv_rows_follow_the_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let rows = [record(-5.5), record(0.0), record(f64::INFINITY)];
        emit_results(&rows, &path, OutputFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(text.ends_with('\n'));
        assert_eq!(lines[1], "grqsm-optimal,64,8,2,-5.5,100,3,1000,0.003,42");
        assert_eq!(lines[3], "grqsm-optimal,64,8,2,inf,100,3,1000,0.003,42");
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.json");
        let rows = vec![record(3.25), record(f64::INFINITY)];
        emit_results(&rows, &path, OutputFormat::Json).unwrap();
        let back: Vec<BerRecord> = read_json(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn unwritable_path_reports_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("x.csv");
        let err = emit_results(&[record(0.0)], &path, OutputFormat::Csv).unwrap_err();
        assert!(matches!(&err, Error::Io { path: p, .. } if p == &path));
        assert!(err.to_string().contains("x.csv"));
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert_eq!("json".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
