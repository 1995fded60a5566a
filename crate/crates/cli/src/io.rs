//! Signal CSV files: header `t,y[,state][,speed]`, one sample per row.
//! `state` holds the 0-based state index (0 right turn, 1 straight, 2 left
//! turn).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalRecord {
    pub t: f64,
    pub y: f64,
    pub state: Option<usize>,
    /// km/h
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Columns {
    pub state: bool,
    pub speed: bool,
}

impl Columns {
    fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["t", "y"];
        if self.state {
            h.push("state");
        }
        if self.speed {
            h.push("speed");
        }
        h
    }
}

/// Opens `path` for reading; `-` is standard input.
pub fn open_input(path: &Path) -> CliResult<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(std::io::stdin().lock()));
    }
    let f = File::open(path).map_err(|e| CliError::io(path.display(), e))?;
    Ok(Box::new(BufReader::with_capacity(1 << 16, f)))
}

/// Opens `path` for writing; `None` or `-` is standard output.
pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let f = File::create(p).map_err(|e| CliError::io(p.display(), e))?;
            Ok(Box::new(BufWriter::with_capacity(1 << 16, f)))
        }
        _ => Ok(Box::new(BufWriter::new(std::io::stdout().lock()))),
    }
}

pub struct SignalReader<R: Read> {
    rdr: csv::Reader<R>,
    idx_t: usize,
    idx_y: usize,
    idx_state: Option<usize>,
    idx_speed: Option<usize>,
    width: usize,
    record: csv::StringRecord,
    line: u64,
}

impl<R: Read> SignalReader<R> {
    /// Reads the header. An empty input yields a reader with no rows.
    pub fn new(input: R) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
        let header = rdr.headers()?.clone();
        let find = |name: &str| header.iter().position(|h| h == name);
        let (idx_t, idx_y) = if header.is_empty() {
            (0, 1)
        } else {
            match (find("t"), find("y")) {
                (Some(t), Some(y)) => (t, y),
                _ => {
                    return Err(CliError::Validation(format!(
                        "CSV header must contain columns t and y (got {:?})",
                        header.iter().collect::<Vec<_>>()
                    )))
                }
            }
        };
        Ok(Self {
            idx_t,
            idx_y,
            idx_state: find("state"),
            idx_speed: find("speed"),
            width: header.len(),
            rdr,
            record: csv::StringRecord::new(),
            line: 1,
        })
    }

    pub fn columns(&self) -> Columns {
        Columns { state: self.idx_state.is_some(), speed: self.idx_speed.is_some() }
    }

    /// 1-based line number of the last row returned.
    pub fn line(&self) -> u64 {
        self.line
    }

    /// `Ok(None)` at end of input; `Ok(Some(Err(_)))` for a malformed row.
    pub fn next_row(&mut self) -> CliResult<Option<Result<SignalRecord, String>>> {
        match self.rdr.read_record(&mut self.record) {
            Ok(false) => Ok(None),
            Ok(true) => {
                self.line = self.record.position().map_or(self.line + 1, |p| p.line());
                Ok(Some(self.parse()))
            }
            Err(e) if e.is_io_error() => Err(e.into()),
            Err(e) => {
                self.line += 1;
                Ok(Some(Err(e.to_string())))
            }
        }
    }

    fn parse(&self) -> Result<SignalRecord, String> {
        let r = &self.record;
        if r.len() != self.width {
            return Err(format!("expected {} fields, found {}", self.width, r.len()));
        }
        let num = |i: usize, name: &str| -> Result<f64, String> {
            let s = &r[i];
            let x: f64 = s.parse().map_err(|_| format!("{name} is not a number: {s:?}"))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(format!("{name} is not finite: {s:?}"))
            }
        };
        let t = num(self.idx_t, "t")?;
        let y = num(self.idx_y, "y")?;
        let state = match self.idx_state {
            Some(i) => Some(r[i].parse::<usize>().map_err(|_| format!("state is not a label: {:?}", &r[i]))?),
            None => None,
        };
        let speed = self.idx_speed.map(|i| num(i, "speed")).transpose()?;
        Ok(SignalRecord { t, y, state, speed })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Signal {
    pub columns: Columns,
    pub records: Vec<SignalRecord>,
    /// Rows skipped as malformed, with their line numbers.
    pub malformed: Vec<(u64, String)>,
}

impl Signal {
    pub fn y(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y).collect()
    }

    /// The state column, if every row has one.
    pub fn states(&self) -> Option<Vec<usize>> {
        self.records.iter().map(|r| r.state).collect()
    }
}

/// Reads a whole signal. Malformed rows and rows whose `t` does not
/// increase are skipped and reported; more than `malformed_limit` of them
/// is a validation error.
pub fn read_signal<R: Read>(input: R, malformed_limit: f64) -> CliResult<Signal> {
    let mut rdr = SignalReader::new(input)?;
    let mut sig = Signal { columns: rdr.columns(), ..Default::default() };
    let mut rows = 0u64;
    while let Some(row) = rdr.next_row()? {
        rows += 1;
        let checked = row.and_then(|rec| match sig.records.last() {
            Some(prev) if rec.t <= prev.t => Err(format!("t = {} does not increase (previous {})", rec.t, prev.t)),
            _ => Ok(rec),
        });
        match checked {
            Ok(rec) => sig.records.push(rec),
            Err(msg) => sig.malformed.push((rdr.line(), msg)),
        }
    }
    check_malformed(sig.malformed.len() as u64, rows, malformed_limit)?;
    Ok(sig)
}

pub fn check_malformed(malformed: u64, rows: u64, limit: f64) -> CliResult<()> {
    if rows > 0 && malformed as f64 > limit * rows as f64 {
        return Err(CliError::Validation(format!(
            "{malformed} of {rows} rows are malformed (limit {:.2}%)",
            100.0 * limit
        )));
    }
    Ok(())
}

/// Prints up to ten malformed-row warnings and a total.
pub fn warn_malformed(malformed: &[(u64, String)]) {
    for (line, msg) in malformed.iter().take(10) {
        eprintln!("warning: skipping line {line}: {msg}");
    }
    if malformed.len() > 10 {
        eprintln!("warning: {} malformed rows skipped in total", malformed.len());
    }
}

pub struct SignalWriter<W: Write> {
    wtr: csv::Writer<W>,
    columns: Columns,
    fields: Vec<String>,
}

impl<W: Write> SignalWriter<W> {
    pub fn new(out: W, columns: Columns) -> CliResult<Self> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        wtr.write_record(columns.header())?;
        Ok(Self { wtr, columns, fields: Vec::with_capacity(4) })
    }

    pub fn write(&mut self, rec: &SignalRecord) -> CliResult<()> {
        self.fields.clear();
        self.fields.push(rec.t.to_string());
        self.fields.push(rec.y.to_string());
        if self.columns.state {
            let s = rec.state.ok_or_else(|| CliError::Validation("record without state".into()))?;
            self.fields.push(s.to_string());
        }
        if self.columns.speed {
            let v = rec.speed.ok_or_else(|| CliError::Validation("record without speed".into()))?;
            self.fields.push(v.to_string());
        }
        self.wtr.write_record(&self.fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<W> {
        self.wtr.flush()?;
        self.wtr.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

pub fn write_signal<W: Write>(out: W, columns: Columns, records: &[SignalRecord]) -> CliResult<W> {
    let mut w = SignalWriter::new(out, columns)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}
