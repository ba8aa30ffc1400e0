//! Event files: CSV with a schema line, a header row and an end marker.
//!
//! ```text
//! # spinpair-events schema=1 truth=1
//! event_id,source_tag,t1_ns,...
//! 0,hydrogen,175,...
//! # end events=1
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the in-memory events bit for bit.

use crate::kinematics::{EventSource, FourVector, PairEvent, Scatter, Truth};
use crate::spin_models::{HiddenState, SourceKind, SourceModelSpec};
use std::io::{BufRead, Write};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "# spinpair-events";
const END_MARKER: &str = "# end events=";

pub const BASE_COLUMNS: [&str; 16] = [
    "event_id",
    "source_tag",
    "t1_ns",
    "t2_ns",
    "e1",
    "px1",
    "py1",
    "pz1",
    "e2",
    "px2",
    "py2",
    "pz2",
    "th1_deg",
    "phi1_deg",
    "th2_deg",
    "phi2_deg",
];

pub const TRUTH_COLUMNS: [&str; 4] = ["spin_model", "hidden_azimuth_deg", "random_pair", "bunch_offset"];

/// Written in place of the hidden azimuth when the model has none.
pub const NO_HIDDEN_AZIMUTH: f64 = -1.0;

#[derive(Debug, Error)]
pub enum EventFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line 1: expected `{MAGIC} schema=N truth=0|1`, found {found:?}")]
    MissingSchemaLine { found: String },
    #[error("line 1: unsupported event schema {found:?} (this build reads schema={SCHEMA_VERSION})")]
    UnsupportedSchema { found: String },
    #[error("line 2: header column {position} is {found:?}, expected {expected:?}")]
    Header {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount { line: u64, expected: usize, found: usize },
    #[error("line {line}: bad value {value:?} in column `{column}`")]
    Field {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("file ends after {events_read} events without an end marker (truncated?)")]
    Truncated { events_read: u64 },
    #[error("end marker declares {declared} events but {read} were read")]
    CountMismatch { declared: u64, read: u64 },
    #[error("line {line}: data after the end marker")]
    TrailingData { line: u64 },
    #[error("event {0} has no scatter angles or hit times and cannot be written")]
    Incomplete(u64),
}

fn columns(truth: bool) -> Vec<&'static str> {
    let mut c = BASE_COLUMNS.to_vec();
    if truth {
        c.extend(TRUTH_COLUMNS);
    }
    c
}

pub struct EventWriter<W: Write> {
    out: csv::Writer<W>,
    truth: bool,
    written: u64,
    record: csv::StringRecord,
}

impl<W: Write> EventWriter<W> {
    pub fn new(mut inner: W, truth: bool) -> Result<Self, EventFileError> {
        writeln!(inner, "{MAGIC} schema={SCHEMA_VERSION} truth={}", u8::from(truth))?;
        let mut out = csv::WriterBuilder::new().from_writer(inner);
        out.write_record(columns(truth)).map_err(csv_write)?;
        Ok(EventWriter {
            out,
            truth,
            written: 0,
            record: csv::StringRecord::new(),
        })
    }

    pub fn write(&mut self, e: &PairEvent) -> Result<(), EventFileError> {
        let (Some([s1, s2]), Some((t1, t2))) = (e.scatter, e.times) else {
            return Err(EventFileError::Incomplete(e.event_id));
        };
        let r = &mut self.record;
        r.clear();
        r.push_field(&e.event_id.to_string());
        r.push_field(e.source.tag());
        for x in [t1, t2, e.p1.e, e.p1.px, e.p1.py, e.p1.pz, e.p2.e, e.p2.px, e.p2.py, e.p2.pz] {
            r.push_field(&x.to_string());
        }
        for x in [s1.theta_deg, s1.phi_deg, s2.theta_deg, s2.phi_deg] {
            r.push_field(&x.to_string());
        }
        if self.truth {
            let t = e.truth.unwrap_or_else(Truth::unpolarized);
            r.push_field(&t.spin_model.tag());
            r.push_field(&t.hidden.lambda_deg().unwrap_or(NO_HIDDEN_AZIMUTH).to_string());
            r.push_field(if t.random_pair { "1" } else { "0" });
            r.push_field(&t.bunch_offset.to_string());
        }
        self.out.write_record(&*r).map_err(csv_write)?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    /// Write the end marker and return the underlying writer.
    pub fn finish(mut self) -> Result<W, EventFileError> {
        self.out.flush()?;
        let mut inner = self.out.into_inner().map_err(|e| EventFileError::Io(e.into_error()))?;
        writeln!(inner, "{END_MARKER}{}", self.written)?;
        inner.flush()?;
        Ok(inner)
    }
}

fn csv_write(e: csv::Error) -> EventFileError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => EventFileError::Io(io),
        other => EventFileError::Csv {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Streaming reader; iterate to get events. The end marker is checked
/// when the data runs out.
pub struct EventReader<R: BufRead> {
    records: csv::StringRecordsIntoIter<R>,
    truth: bool,
    n_columns: usize,
    read: u64,
    done: bool,
}

fn parse_schema_line(line: &str) -> Result<bool, EventFileError> {
    let found = line.trim_end().to_string();
    let rest = found
        .strip_prefix(MAGIC)
        .ok_or_else(|| EventFileError::MissingSchemaLine { found: found.clone() })?;
    let mut schema = None;
    let mut truth = None;
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("schema", v)) => schema = Some(v.to_string()),
            Some(("truth", "0")) => truth = Some(false),
            Some(("truth", "1")) => truth = Some(true),
            _ => return Err(EventFileError::MissingSchemaLine { found: found.clone() }),
        }
    }
    match schema {
        Some(v) if v == SCHEMA_VERSION.to_string() => {}
        Some(v) => return Err(EventFileError::UnsupportedSchema { found: v }),
        None => return Err(EventFileError::MissingSchemaLine { found }),
    }
    truth.ok_or(EventFileError::MissingSchemaLine { found })
}

impl<R: BufRead> EventReader<R> {
    pub fn new(mut input: R) -> Result<Self, EventFileError> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let truth = parse_schema_line(&first)?;

        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let header = csv.headers().map_err(|e| csv_read(e, 2))?.clone();
        let want = columns(truth);
        for position in 0..want.len().max(header.len()) {
            let expected = want.get(position).copied().unwrap_or("<none>");
            let found = header.get(position).unwrap_or("<none>");
            if expected != found {
                return Err(EventFileError::Header {
                    position: position + 1,
                    expected: expected.to_string(),
                    found: found.to_string(),
                });
            }
        }
        Ok(EventReader {
            records: csv.into_records(),
            truth,
            n_columns: want.len(),
            read: 0,
            done: false,
        })
    }

    pub fn has_truth(&self) -> bool {
        self.truth
    }

    fn finish_with_marker(&mut self, rec: &csv::StringRecord, line: u64) -> Result<(), EventFileError> {
        let declared = rec[0]
            .strip_prefix(END_MARKER)
            .and_then(|n| n.trim().parse::<u64>().ok())
            .ok_or_else(|| EventFileError::Field {
                line,
                column: "end marker",
                value: rec[0].to_string(),
            })?;
        if declared != self.read {
            return Err(EventFileError::CountMismatch {
                declared,
                read: self.read,
            });
        }
        if let Some(next) = self.records.next() {
            let line = next.map(|r| line_of(&r)).unwrap_or(line + 1);
            return Err(EventFileError::TrailingData { line });
        }
        Ok(())
    }

    fn parse(&self, rec: &csv::StringRecord, line: u64) -> Result<PairEvent, EventFileError> {
        let text = |i: usize| &rec[i];
        let num = |i: usize| -> Result<f64, EventFileError> {
            rec[i].parse::<f64>().map_err(|_| EventFileError::Field {
                line,
                column: columns(true)[i],
                value: rec[i].to_string(),
            })
        };
        let bad = |i: usize| EventFileError::Field {
            line,
            column: columns(true)[i],
            value: rec[i].to_string(),
        };

        let event_id: u64 = text(0).parse().map_err(|_| bad(0))?;
        let source = EventSource::from_tag(text(1)).ok_or_else(|| bad(1))?;
        let times = (num(2)?, num(3)?);
        let p1 = FourVector::new(num(4)?, num(5)?, num(6)?, num(7)?);
        let p2 = FourVector::new(num(8)?, num(9)?, num(10)?, num(11)?);
        let scatter = [
            Scatter {
                theta_deg: num(12)?,
                phi_deg: num(13)?,
            },
            Scatter {
                theta_deg: num(14)?,
                phi_deg: num(15)?,
            },
        ];
        let truth = if self.truth {
            let spin_model = SourceModelSpec::from_tag(text(16)).ok_or_else(|| bad(16))?;
            let azimuth = num(17)?;
            let hidden = match spin_model.kind {
                SourceKind::QuantumSinglet => HiddenState::Entangled,
                SourceKind::LhvVector | SourceKind::LhvDeterministic => {
                    if !(0.0..360.0).contains(&azimuth) {
                        return Err(bad(17));
                    }
                    HiddenState::Lhv { lambda_deg: azimuth }
                }
                SourceKind::UnpolarizedBackground => HiddenState::Unpolarized,
            };
            let random_pair = match text(18) {
                "0" => false,
                "1" => true,
                _ => return Err(bad(18)),
            };
            let bunch_offset: i32 = text(19).parse().map_err(|_| bad(19))?;
            Some(Truth {
                spin_model,
                hidden,
                random_pair,
                bunch_offset,
            })
        } else {
            None
        };
        Ok(PairEvent {
            event_id,
            source,
            p1,
            p2,
            scatter: Some(scatter),
            times: Some(times),
            truth,
        })
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    // csv counts lines from the header; the schema line comes first
    rec.position().map_or(0, |p| p.line() + 1)
}

fn csv_read(e: csv::Error, fallback_line: u64) -> EventFileError {
    let line = e.position().map_or(fallback_line, |p| p.line() + 1);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => EventFileError::Io(io),
        csv::ErrorKind::Utf8 { err, .. } => EventFileError::Csv {
            line,
            message: format!("invalid UTF-8: {err}"),
        },
        other => EventFileError::Csv {
            line,
            message: format!("{other:?}"),
        },
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<PairEvent, EventFileError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = match self.records.next() {
            None => Err(EventFileError::Truncated { events_read: self.read }),
            Some(Err(e)) => Err(csv_read(e, 0)),
            Some(Ok(rec)) => {
                let line = line_of(&rec);
                if rec.len() == 1 && rec[0].starts_with('#') {
                    self.done = true;
                    return self.finish_with_marker(&rec, line).err().map(Err);
                }
                if rec.len() != self.n_columns {
                    Err(EventFileError::FieldCount {
                        line,
                        expected: self.n_columns,
                        found: rec.len(),
                    })
                } else {
                    self.parse(&rec, line).inspect(|_| self.read += 1)
                }
            }
        };
        if item.is_err() {
            self.done = true;
        }
        Some(item)
    }
}

/// Read a whole file into memory.
pub fn read_events<R: BufRead>(input: R) -> Result<Vec<PairEvent>, EventFileError> {
    EventReader::new(input)?.collect()
}
