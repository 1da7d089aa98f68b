//! Plain-text formats for logged data, classification data and trained
//! policies.
//!
//! Logged data is delimited text with the header
//! `context_0,..,context_{d-1},action,reward,propensity`, or one JSON object
//! per line with the same field names. Floats are written in the shortest
//! form that parses back to the same bits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde_json::{Map, Number, Value};

use super::{BanditError, ClassificationData, LoggedInteraction, Policy, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> BanditError {
    BanditError::Parse { line, msg: msg.into() }
}

fn csv_err(e: csv::Error) -> BanditError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse_err(line, e.to_string())
}

fn parse_f64(s: &str, line: usize, field: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("field {field}: cannot parse {s:?} as a number")))
}

fn parse_usize(s: &str, line: usize, field: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("field {field}: cannot parse {s:?} as an index")))
}

/// Checks that `headers` is `prefix_0..prefix_{d-1}` followed by `tail`.
fn check_header(headers: &csv::StringRecord, prefix: &str, tail: &[&str]) -> Result<usize> {
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    if cols.len() < tail.len() || cols[cols.len() - tail.len()..] != *tail {
        return Err(parse_err(1, format!("header must end with {}", tail.join(","))));
    }
    let d = cols.len() - tail.len();
    for (i, c) in cols[..d].iter().enumerate() {
        if *c != format!("{prefix}_{i}") {
            return Err(parse_err(1, format!("expected column {prefix}_{i}, found {c:?}")));
        }
    }
    Ok(d)
}

pub fn write_log_csv<W: Write>(writer: W, log: &[LoggedInteraction]) -> Result<()> {
    let d = log.first().map_or(0, |r| r.context.len());
    let mut w = BufWriter::new(writer);
    let mut header: Vec<String> = (0..d).map(|i| format!("context_{i}")).collect();
    header.extend(["action", "reward", "propensity"].map(String::from));
    writeln!(w, "{}", header.join(","))?;
    for rec in log {
        if rec.context.len() != d {
            return Err(BanditError::DimensionMismatch {
                expected: d,
                got: rec.context.len(),
            });
        }
        for x in &rec.context {
            write!(w, "{x:?},")?;
        }
        writeln!(w, "{},{:?},{:?}", rec.action, rec.reward, rec.propensity)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log_csv<R: Read>(reader: R) -> Result<Vec<LoggedInteraction>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let d = check_header(rdr.headers().map_err(csv_err)?, "context", &["action", "reward", "propensity"])?;
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = i + 2;
        let context = (0..d)
            .map(|j| parse_f64(&row[j], line, &format!("context_{j}")))
            .collect::<Result<Vec<_>>>()?;
        let action = parse_usize(&row[d], line, "action")?;
        let reward = parse_f64(&row[d + 1], line, "reward")?;
        let propensity = parse_f64(&row[d + 2], line, "propensity")?;
        out.push(
            LoggedInteraction::new(context, action, reward, propensity)
                .map_err(|e| parse_err(line, e.to_string()))?,
        );
    }
    Ok(out)
}

fn json_number(x: f64) -> Result<Value> {
    Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| BanditError::Io(format!("{x} cannot be written as JSON")))
}

pub fn write_log_jsonl<W: Write>(writer: W, log: &[LoggedInteraction]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for rec in log {
        let mut obj = Map::new();
        for (j, &x) in rec.context.iter().enumerate() {
            obj.insert(format!("context_{j}"), json_number(x)?);
        }
        obj.insert("action".into(), Value::from(rec.action));
        obj.insert("reward".into(), json_number(rec.reward)?);
        obj.insert("propensity".into(), json_number(rec.propensity)?);
        let text = serde_json::to_string(&Value::Object(obj)).map_err(|e| BanditError::Io(e.to_string()))?;
        writeln!(w, "{text}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log_jsonl<R: Read>(reader: R) -> Result<Vec<LoggedInteraction>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> =
            serde_json::from_str(&text).map_err(|e| parse_err(line_no, e.to_string()))?;
        let num = |key: &str| -> Result<f64> {
            obj.get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| parse_err(line_no, format!("missing or non-numeric field {key}")))
        };
        let mut context = Vec::new();
        while let Some(v) = obj.get(&format!("context_{}", context.len())) {
            let x = v
                .as_f64()
                .ok_or_else(|| parse_err(line_no, format!("non-numeric field context_{}", context.len())))?;
            context.push(x);
        }
        let action = obj
            .get("action")
            .and_then(Value::as_u64)
            .ok_or_else(|| parse_err(line_no, "missing or non-integer field action"))? as usize;
        let known = context.len() + 3;
        if obj.len() != known {
            return Err(parse_err(line_no, "unexpected fields in record"));
        }
        out.push(
            LoggedInteraction::new(context, action, num("reward")?, num("propensity")?)
                .map_err(|e| parse_err(line_no, e.to_string()))?,
        );
    }
    if let Some(first) = out.first() {
        let d = first.context.len();
        if let Some(bad) = out.iter().find(|r| r.context.len() != d) {
            return Err(BanditError::DimensionMismatch {
                expected: d,
                got: bad.context.len(),
            });
        }
    }
    Ok(out)
}

fn is_jsonl(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json" | "ndjson"))
}

/// Reads a log, choosing the line-object format for `.jsonl`/`.json`/`.ndjson`
/// files and delimited text otherwise.
pub fn read_log(path: &Path) -> Result<Vec<LoggedInteraction>> {
    let file = File::open(path)?;
    if is_jsonl(path) {
        read_log_jsonl(file)
    } else {
        read_log_csv(file)
    }
}

pub fn write_log(path: &Path, log: &[LoggedInteraction]) -> Result<()> {
    let file = File::create(path)?;
    if is_jsonl(path) {
        write_log_jsonl(file, log)
    } else {
        write_log_csv(file, log)
    }
}

/// Reads `feature_0,..,feature_{d-1},label`; the class count is `max label + 1`.
pub fn read_classification_csv<R: Read>(reader: R) -> Result<ClassificationData> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let d = check_header(rdr.headers().map_err(csv_err)?, "feature", &["label"])?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = i + 2;
        features.push(
            (0..d)
                .map(|j| parse_f64(&row[j], line, &format!("feature_{j}")))
                .collect::<Result<Vec<_>>>()?,
        );
        labels.push(parse_usize(&row[d], line, "label")?);
    }
    ClassificationData::from_rows(features, labels)
}

pub fn write_classification_csv<W: Write>(writer: W, data: &ClassificationData) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let mut header: Vec<String> = (0..data.dim()).map(|i| format!("feature_{i}")).collect();
    header.push("label".into());
    writeln!(w, "{}", header.join(","))?;
    for (x, y) in data.features.iter().zip(&data.labels) {
        for v in x {
            write!(w, "{v:?},")?;
        }
        writeln!(w, "{y}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_classification(path: &Path) -> Result<ClassificationData> {
    read_classification_csv(File::open(path)?)
}

/// Writes a linear policy as a header line `K d temperature kind` followed by
/// `K` whitespace-separated weight rows. Deterministic policies record
/// temperature 0.
pub fn write_policy<W: Write>(writer: W, policy: &Policy) -> Result<()> {
    let (weights, temperature, kind) = match policy {
        Policy::LinearSoftmax { weights, temperature } => (weights, *temperature, "softmax"),
        Policy::Deterministic { weights } => (weights, 0.0, "deterministic"),
        _ => {
            return Err(BanditError::InvalidPolicy(
                "only linear policies have a weight-file form".into(),
            ))
        }
    };
    let mut w = BufWriter::new(writer);
    let d = weights.first().map_or(0, Vec::len);
    writeln!(w, "{} {} {:?} {}", weights.len(), d, temperature, kind)?;
    for row in weights {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", cells.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_policy<R: Read>(reader: R) -> Result<Policy> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty policy file"))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(parse_err(1, "header must be `K d temperature kind`"));
    }
    let k = parse_usize(parts[0], 1, "K")?;
    let d = parse_usize(parts[1], 1, "d")?;
    let temperature = parse_f64(parts[2], 1, "temperature")?;
    let mut weights = Vec::with_capacity(k);
    for i in 0..k {
        let line_no = i + 2;
        let text = lines
            .next()
            .ok_or_else(|| parse_err(line_no, "missing weight row"))??;
        let row = text
            .split_whitespace()
            .map(|s| parse_f64(s, line_no, "weight"))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != d {
            return Err(parse_err(line_no, format!("expected {d} weights, found {}", row.len())));
        }
        weights.push(row);
    }
    match parts[3] {
        "softmax" => Policy::linear_softmax(weights, temperature),
        "deterministic" => Policy::deterministic(weights),
        other => Err(parse_err(1, format!("unknown policy kind {other:?}"))),
    }
}

pub fn save_policy(path: &Path, policy: &Policy) -> Result<()> {
    write_policy(File::create(path)?, policy)
}

pub fn load_policy(path: &Path) -> Result<Policy> {
    read_policy(File::open(path)?)
}
