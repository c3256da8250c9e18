//! Campaign CSV output.
//!
//! The header is fixed; `bits` is an integer or `inf`; `value` carries 12
//! significant digits in scientific notation (`NaN` for infeasible rows);
//! `infeasible` is `true` or `false`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::ResultRecord;

pub const CSV_HEADER: &str = "experiment_id,seed,N,G,total_K,L,bits,problem,precoder_kind,metric_name,value,infeasible";

/// Value column text: 12 significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.11e}")
    }
}

fn csv_error(label: &str, e: ::csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: label.to_string(),
        line,
        message: e.to_string(),
    }
}

pub fn format_csv(records: &[ResultRecord]) -> String {
    let mut w = ::csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let fields: Vec<&str> = CSV_HEADER.split(',').collect();
    w.write_record(&fields).expect("in-memory write");
    for r in records {
        w.write_record([
            r.experiment_id.clone(),
            r.seed.to_string(),
            r.n_antennas.to_string(),
            r.groups.to_string(),
            r.total_k.to_string(),
            r.n_paths.to_string(),
            r.bits.to_string(),
            r.problem.to_string(),
            r.precoder_kind.to_string(),
            r.metric.to_string(),
            format_value(r.value),
            r.infeasible.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
}

pub fn emit_csv(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str, label: &str) -> Result<Vec<ResultRecord>> {
    let mut reader = ::csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| csv_error(label, e))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Parse {
            path: label.to_string(),
            line: 1,
            message: format!("expected header `{CSV_HEADER}`"),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(label, e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let err = |i: usize| Error::Parse {
            path: label.to_string(),
            line,
            message: format!("bad {} `{}`", CSV_HEADER.split(',').nth(i).unwrap_or("field"), &row[i]),
        };
        macro_rules! field {
            ($i:expr) => {
                row[$i].parse().map_err(|_| err($i))?
            };
        }
        records.push(ResultRecord {
            experiment_id: row[0].to_string(),
            seed: field!(1),
            n_antennas: field!(2),
            groups: field!(3),
            total_k: field!(4),
            n_paths: field!(5),
            bits: field!(6),
            problem: field!(7),
            precoder_kind: field!(8),
            metric: field!(9),
            value: field!(10),
            infeasible: field!(11),
        });
    }
    Ok(records)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{Metric, PrecoderKind, Problem};
    use crate::hybrid::Resolution;

    fn rec(value: f64, infeasible: bool) -> ResultRecord {
        ResultRecord {
            experiment_id: "t".into(),
            seed: u64::MAX,
            n_antennas: 8,
            groups: 1,
            total_k: 7,
            n_paths: 4,
            bits: Resolution::Bits(3),
            problem: Problem::Mmf,
            precoder_kind: PrecoderKind::HybridQuantized,
            metric: Metric::RatioToFd,
            value,
            infeasible,
        }
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(format_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_record_two_lines() {
        let text = format_csv(&[rec(0.5, false)]);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "t,18446744073709551615,8,1,7,4,3,MMF,HybridQuantized,ratio_to_fd,5.00000000000e-1,false"
        );
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_value(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(format_value(-1234.5), "-1.23450000000e3");
        assert_eq!(format_value(f64::NAN), "NaN");
    }

    #[test]
    fn round_trip_is_exact_on_printed_values() {
        let records = vec![rec(0.123456789012, false), rec(f64::NAN, true), rec(42.0, false)];
        let text = format_csv(&records);
        let back = parse_csv(&text, "mem").unwrap();
        assert_eq!(format_csv(&back), text);
        assert_eq!(back[0].value, 0.123456789012);
        assert!(back[1].value.is_nan() && back[1].infeasible);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(parse_csv("nope\n", "x").is_err());
        let bad = format!("{CSV_HEADER}\nt,1,8,1,7,4,3,MMF,HybridQuantized,ratio_to_fd,abc,false\n");
        assert!(matches!(parse_csv(&bad, "x"), Err(Error::Parse { line: 2, .. })));
    }
}
