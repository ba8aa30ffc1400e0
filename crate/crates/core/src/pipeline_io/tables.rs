//! Reference Bell and Wigner case tables as CSV.

use crate::analysis::{bell_cases, wigner_cases, BellCase, WignerCase, WIGNER_LIMIT};
use crate::spin_models::MeasurementAxis;
use thiserror::Error;

pub const BELL_TABLE_COLUMNS: [&str; 9] = [
    "case_id",
    "a_deg",
    "b_deg",
    "a_prime_deg",
    "b_prime_deg",
    "qm",
    "limit",
    "exp",
    "exp_err",
];

pub const WIGNER_TABLE_COLUMNS: [&str; 7] = ["case_id", "a_deg", "b_deg", "c_deg", "limit", "exp", "exp_err"];

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("table header is {found:?}, expected {expected:?}")]
    Header { found: String, expected: String },
    #[error("row {row}: bad value {value:?} in column `{column}`")]
    Field { row: usize, column: &'static str, value: String },
}

fn to_csv(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii table")
}

fn two(x: f64) -> String {
    format!("{x:.2}")
}

fn angle(a: MeasurementAxis) -> String {
    a.angle_deg().to_string()
}

/// `(bell.csv, wigner.csv)` reference tables.
pub fn emit_reference_tables() -> (String, String) {
    let bell = bell_cases()
        .into_iter()
        .map(|c| {
            vec![
                c.id.to_string(),
                angle(c.a),
                angle(c.b),
                angle(c.a_prime),
                angle(c.b_prime),
                two(c.qm_prediction),
                two(c.limit),
                two(c.reference_value),
                two(c.reference_error),
            ]
        })
        .collect();
    let wigner = wigner_cases()
        .into_iter()
        .map(|c| {
            vec![
                c.id.to_string(),
                angle(c.a),
                angle(c.b),
                angle(c.c),
                two(WIGNER_LIMIT),
                two(c.reference_value),
                two(c.reference_error),
            ]
        })
        .collect();
    (to_csv(&BELL_TABLE_COLUMNS, bell), to_csv(&WIGNER_TABLE_COLUMNS, wigner))
}

fn records(text: &str, expected: &[&'static str]) -> Result<Vec<csv::StringRecord>, TableError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(TableError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
            expected: expected.join(","),
        });
    }
    Ok(r.records().collect::<Result<_, _>>()?)
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    row: usize,
    i: usize,
    columns: &[&'static str],
) -> Result<T, TableError> {
    rec[i].parse().map_err(|_| TableError::Field {
        row,
        column: columns[i],
        value: rec[i].to_string(),
    })
}

pub fn parse_bell_table(text: &str) -> Result<Vec<BellCase>, TableError> {
    let cols = &BELL_TABLE_COLUMNS;
    records(text, cols)?
        .iter()
        .enumerate()
        .map(|(row, r)| {
            let f = |i| field::<f64>(r, row + 1, i, cols);
            Ok(BellCase {
                id: field(r, row + 1, 0, cols)?,
                a: MeasurementAxis::new(f(1)?),
                b: MeasurementAxis::new(f(2)?),
                a_prime: MeasurementAxis::new(f(3)?),
                b_prime: MeasurementAxis::new(f(4)?),
                qm_prediction: f(5)?,
                limit: f(6)?,
                reference_value: f(7)?,
                reference_error: f(8)?,
            })
        })
        .collect()
}

pub fn parse_wigner_table(text: &str) -> Result<Vec<WignerCase>, TableError> {
    let cols = &WIGNER_TABLE_COLUMNS;
    records(text, cols)?
        .iter()
        .enumerate()
        .map(|(row, r)| {
            let f = |i| field::<f64>(r, row + 1, i, cols);
            let limit = f(4)?;
            if limit != WIGNER_LIMIT {
                return Err(TableError::Field {
                    row: row + 1,
                    column: cols[4],
                    value: r[4].to_string(),
                });
            }
            Ok(WignerCase {
                id: field(r, row + 1, 0, cols)?,
                a: MeasurementAxis::new(f(1)?),
                b: MeasurementAxis::new(f(2)?),
                c: MeasurementAxis::new(f(3)?),
                reference_value: f(5)?,
                reference_error: f(6)?,
            })
        })
        .collect()
}
