//! CSV form of the per-episode log.
//!
//! Columns: `episode, return, steps, reached_goal, vat_remain_rate,
//! rescue_rate, epsilon, loss_mean`. `reached_goal` is `0` or `1`; an
//! undefined rate or a missing loss is an empty field. Floats use the
//! shortest representation that parses back to the same value, so a
//! written file re-reads exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::learner::RunRecord;

pub const CSV_HEADER: [&str; 8] = [
    "episode",
    "return",
    "steps",
    "reached_goal",
    "vat_remain_rate",
    "rescue_rate",
    "epsilon",
    "loss_mean",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record_fields(r: &RunRecord) -> [String; 8] {
    [
        r.episode.to_string(),
        r.env_return.to_string(),
        r.steps.to_string(),
        u8::from(r.reached_goal).to_string(),
        opt(r.vat_remain_rate),
        opt(r.rescue_rate),
        r.epsilon.to_string(),
        opt(r.loss_mean),
    ]
}

/// Streams records to a CSV sink, header first.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(CSV_HEADER).map_err(csv_err)?;
        Ok(RecordWriter { inner })
    }

    pub fn write(&mut self, r: &RunRecord) -> Result<()> {
        self.inner.write_record(record_fields(r)).map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

pub fn write_records<W: Write>(sink: W, records: &[RunRecord]) -> Result<W> {
    let mut w = RecordWriter::new(sink)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub fn to_csv_string(records: &[RunRecord]) -> String {
    let bytes = write_records(Vec::new(), records).expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

pub fn save_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_records(file, records)?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(row: usize, name: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("csv row {row}: bad {name} value {s:?}")))
}

fn parse_opt(row: usize, name: &str, s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field(row, name, s).map(Some)
    }
}

pub fn read_records<R: Read>(source: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(source);
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Config(format!("unexpected csv header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let n = i + 1;
        let f = |k: usize| row.get(k).unwrap_or("");
        let reached_goal = match f(3) {
            "0" => false,
            "1" => true,
            other => return Err(Error::Config(format!("csv row {n}: bad reached_goal value {other:?}"))),
        };
        out.push(RunRecord {
            episode: parse_field(n, "episode", f(0))?,
            env_return: parse_field(n, "return", f(1))?,
            steps: parse_field(n, "steps", f(2))?,
            reached_goal,
            vat_remain_rate: parse_opt(n, "vat_remain_rate", f(4))?,
            rescue_rate: parse_opt(n, "rescue_rate", f(5))?,
            epsilon: parse_field(n, "epsilon", f(6))?,
            loss_mean: parse_opt(n, "loss_mean", f(7))?,
        });
    }
    Ok(out)
}

pub fn load_records(path: &Path) -> Result<Vec<RunRecord>> {
    read_records(std::io::BufReader::new(std::fs::File::open(path)?))
}
