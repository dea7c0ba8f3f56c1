//! Sweep tables as CSV.
//!
//! Numbers are written in shortest round-trip scientific notation, so parsing
//! a table gives back bit-identical values; undefined values are written as
//! `nan`.

use std::io::{Read, Write};

use crate::dephasing::SweepRecord;
use crate::error::{Error, Result};

/// Columns present in every table.
pub const COLUMNS: [&str; 8] = [
    "param_name",
    "param_value",
    "dg_n",
    "dg_p",
    "ratio",
    "postselect_prob",
    "fisher_n",
    "fisher_p",
];

/// Columns appended when likelihood-maximizer biases are included.
pub const ORACLE_COLUMNS: [&str; 2] = ["dg_n_oracle", "dg_p_oracle"];

pub fn header(oracle: bool) -> Vec<&'static str> {
    let mut h = COLUMNS.to_vec();
    if oracle {
        h.extend(ORACLE_COLUMNS);
    }
    h
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}

pub fn parse_number(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

fn row(r: &SweepRecord, oracle: bool) -> Vec<String> {
    let mut out = vec![r.param_name.clone()];
    out.extend(
        [
            r.param_value,
            r.dg_n,
            r.dg_p,
            r.ratio,
            r.postselect_prob,
            r.fisher_n,
            r.fisher_p,
        ]
        .map(format_number),
    );
    if oracle {
        out.push(format_number(r.dg_n_oracle.unwrap_or(f64::NAN)));
        out.push(format_number(r.dg_p_oracle.unwrap_or(f64::NAN)));
    }
    out
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Malformed {
        line,
        message: e.to_string(),
    }
}

/// Writes a header and one row per record, LF-terminated.
pub fn write_csv<W: Write>(out: W, records: &[SweepRecord], oracle: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header(oracle)).map_err(csv_error)?;
    for r in records {
        w.write_record(row(r, oracle)).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Malformed {
        line: 0,
        message: e.to_string(),
    })
}

pub fn to_csv_string(records: &[SweepRecord], oracle: bool) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records, oracle).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Parses a table written by [`write_csv`]; oracle columns are optional.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let head: Vec<String> = rd.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let oracle = match head.len() {
        8 => false,
        10 => true,
        n => {
            return Err(Error::Malformed {
                line: 1,
                message: format!("expected 8 or 10 columns, found {n}"),
            })
        }
    };
    if head.iter().map(String::as_str).ne(header(oracle)) {
        return Err(Error::Malformed {
            line: 1,
            message: format!("unexpected header {head:?}"),
        });
    }
    let mut records = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = i + 2;
        let num = |j: usize| -> Result<f64> {
            parse_number(&rec[j]).ok_or_else(|| Error::Malformed {
                line,
                message: format!("column {} is not a number: '{}'", head[j], &rec[j]),
            })
        };
        records.push(SweepRecord {
            param_name: rec[0].to_string(),
            param_value: num(1)?,
            dg_n: num(2)?,
            dg_p: num(3)?,
            ratio: num(4)?,
            postselect_prob: num(5)?,
            fisher_n: num(6)?,
            fisher_p: num(7)?,
            dg_n_oracle: if oracle { Some(num(8)?) } else { None },
            dg_p_oracle: if oracle { Some(num(9)?) } else { None },
        });
    }
    Ok(records)
}
