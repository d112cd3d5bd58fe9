//! Trace CSV files: one abscissa column (`time_s` or `detuning_hz`), an
//! `excitation` column and an optional `excitation_err` column.
//!
//! Values are written in their shortest round-trip decimal form, so a
//! write/read cycle reproduces every value exactly.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abscissa {
    /// s
    Time,
    /// Hz, from the carrier.
    Detuning,
}

impl Abscissa {
    pub fn column(self) -> &'static str {
        match self {
            Abscissa::Time => "time_s",
            Abscissa::Detuning => "detuning_hz",
        }
    }

    fn from_column(name: &str) -> Option<Self> {
        match name {
            "time_s" => Some(Abscissa::Time),
            "detuning_hz" => Some(Abscissa::Detuning),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub abscissa: Abscissa,
    pub x: Vec<f64>,
    pub excitation: Vec<f64>,
    pub excitation_err: Option<Vec<f64>>,
}

/// A malformed trace file, located by 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for TraceError {}

/// Shortest decimal that parses back to `v`; exponent form outside
/// [1e-4, 1e15) keeps long runs of zeros out of the file.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl TraceFile {
    pub fn new(abscissa: Abscissa, x: Vec<f64>, excitation: Vec<f64>, excitation_err: Option<Vec<f64>>) -> Self {
        debug_assert_eq!(x.len(), excitation.len());
        Self { abscissa, x, excitation, excitation_err }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn write<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.abscissa.column(), "excitation"];
        if self.excitation_err.is_some() {
            header.push("excitation_err");
        }
        w.write_record(&header)?;
        for i in 0..self.x.len() {
            let mut row = vec![format_value(self.x[i]), format_value(self.excitation[i])];
            if let Some(err) = &self.excitation_err {
                row.push(format_value(err[i]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        self.write(std::io::BufWriter::new(file)).map_err(|e| CliError::io(path, e))
    }

    pub fn read<R: Read>(input: R) -> Result<Self, TraceError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(input);
        let mut records = reader.records();

        let header = match records.next() {
            Some(r) => r.map_err(|e| csv_error(e, 1))?,
            None => return Err(TraceError { line: 1, message: "missing header row".into() }),
        };
        let cols: Vec<&str> = header.iter().collect();
        let abscissa = cols.first().and_then(|c| Abscissa::from_column(c));
        let has_err = match (abscissa, &cols[1..]) {
            (Some(_), ["excitation"]) => false,
            (Some(_), ["excitation", "excitation_err"]) => true,
            _ => {
                return Err(TraceError {
                    line: 1,
                    message: format!(
                        "bad header `{}`; expected time_s or detuning_hz, then excitation[, excitation_err]",
                        cols.join(",")
                    ),
                })
            }
        };
        let width = if has_err { 3 } else { 2 };

        let mut trace = TraceFile {
            abscissa: abscissa.expect("matched above"),
            x: Vec::new(),
            excitation: Vec::new(),
            excitation_err: has_err.then(Vec::new),
        };
        for record in records {
            let record = record.map_err(|e| csv_error(e, 0))?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            if record.len() != width {
                return Err(TraceError {
                    line,
                    message: format!("expected {width} fields, found {}", record.len()),
                });
            }
            let mut values = [0.0; 3];
            for (k, field) in record.iter().enumerate() {
                values[k] = field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| TraceError {
                    line,
                    message: format!("`{field}` in column {} is not a finite number", k + 1),
                })?;
            }
            trace.x.push(values[0]);
            trace.excitation.push(values[1]);
            if let Some(err) = &mut trace.excitation_err {
                err.push(values[2]);
            }
        }
        Ok(trace)
    }

    /// Reads a trace, reporting parse failures as "path: line N: ...".
    pub fn load(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::read(std::io::BufReader::new(file)).map_err(|e| CliError::io(path, e))
    }
}

fn csv_error(e: csv::Error, fallback_line: u64) -> TraceError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    TraceError { line, message: e.to_string() }
}
