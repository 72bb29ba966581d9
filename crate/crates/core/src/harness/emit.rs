//! CSV and JSON serialization of sweep rows.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which round-trips
//! every finite `f64`. CSV spells non-finite values `NaN`, `inf`, `-inf`;
//! JSON writes them as `null`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::harness::config::Format;
use crate::harness::sweep::VerificationRow;
use crate::norming::SampleSize;

pub const HEADER: [&str; 15] = [
    "v",
    "p",
    "r",
    "n",
    "x",
    "exact",
    "limit",
    "err",
    "scaled_err1",
    "target1",
    "scaled_err2",
    "target2",
    "theta_deficit",
    "remainder_bound",
    "error",
];

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn floats(row: &VerificationRow) -> [f64; 11] {
    [
        row.x,
        row.exact,
        row.limit,
        row.err,
        row.scaled_err1,
        row.target1,
        row.scaled_err2,
        row.target2,
        row.theta_deficit,
        row.remainder_bound,
        f64::NAN,
    ]
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub fn to_csv(rows: &[VerificationRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    // writing into a Vec cannot fail
    w.write_record(HEADER).expect("in-memory write");
    for row in rows {
        let mut rec = vec![fmt_float(row.v), fmt_float(row.p), row.r.to_string(), row.n.to_string()];
        rec.extend(floats(row)[..10].iter().map(|&f| fmt_float(f)));
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn json_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn json_n(n: SampleSize) -> String {
    match n {
        SampleSize::Exact(k) => k.to_string(),
        SampleSize::Log(_) => Value::String(n.to_string()).to_string(),
    }
}

/// A JSON array with one object per line.
pub fn to_json(rows: &[VerificationRow]) -> Vec<u8> {
    let mut out = String::from("[");
    for (i, row) in rows.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let mut fields = vec![
            format!("\"v\":{}", json_float(row.v)),
            format!("\"p\":{}", json_float(row.p)),
            format!("\"r\":{}", row.r),
            format!("\"n\":{}", json_n(row.n)),
        ];
        for (name, value) in HEADER[4..14].iter().zip(floats(row)) {
            fields.push(format!("\"{name}\":{}", json_float(value)));
        }
        let error = match &row.error {
            Some(e) => Value::String(e.clone()).to_string(),
            None => "null".into(),
        };
        fields.push(format!("\"error\":{error}"));
        out.push('{');
        out.push_str(&fields.join(","));
        out.push('}');
    }
    out.push_str(if rows.is_empty() { "]\n" } else { "\n]\n" });
    out.into_bytes()
}

pub fn render(rows: &[VerificationRow], format: Format) -> Vec<u8> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
    }
}

/// Writes `rows` to `path`, or to standard output when `path` is `None`.
pub fn emit(rows: &[VerificationRow], format: Format, path: Option<&Path>) -> Result<()> {
    let bytes = render(rows, format);
    match path {
        Some(p) => fs::write(p, bytes).map_err(io_err(p)),
        None => std::io::stdout().write_all(&bytes).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("bad number {s:?}")))
}

pub fn from_csv(bytes: &[u8]) -> Result<Vec<VerificationRow>> {
    let bad = |e: csv::Error| Error::Config(format!("csv: {e}"));
    let mut rdr = csv::Reader::from_reader(bytes);
    let header = rdr.headers().map_err(bad)?;
    if header.iter().ne(HEADER) {
        return Err(Error::Config(format!("unexpected csv header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(bad)?;
        let f = |i: usize| parse_float(&rec[i]);
        rows.push(VerificationRow {
            v: f(0)?,
            p: f(1)?,
            r: rec[2].parse().map_err(|_| Error::Config(format!("bad rank {:?}", &rec[2])))?,
            n: rec[3].parse()?,
            x: f(4)?,
            exact: f(5)?,
            limit: f(6)?,
            err: f(7)?,
            scaled_err1: f(8)?,
            target1: f(9)?,
            scaled_err2: f(10)?,
            target2: f(11)?,
            theta_deficit: f(12)?,
            remainder_bound: f(13)?,
            error: Some(rec[14].to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}

fn row_from_json(obj: &Value) -> Result<VerificationRow> {
    let bad = |k: &str| Error::Config(format!("json row: bad or missing {k:?}"));
    let f = |k: &str| match obj.get(k) {
        Some(Value::Null) => Ok(f64::NAN),
        Some(v) => v.as_f64().ok_or_else(|| bad(k)),
        None => Err(bad(k)),
    };
    let n = match obj.get("n") {
        Some(Value::Number(k)) => SampleSize::Exact(k.as_u64().ok_or_else(|| bad("n"))?),
        Some(Value::String(s)) => s.parse()?,
        _ => return Err(bad("n")),
    };
    Ok(VerificationRow {
        v: f("v")?,
        p: f("p")?,
        r: obj.get("r").and_then(Value::as_u64).and_then(|r| u32::try_from(r).ok()).ok_or_else(|| bad("r"))?,
        n,
        x: f("x")?,
        exact: f("exact")?,
        limit: f("limit")?,
        err: f("err")?,
        scaled_err1: f("scaled_err1")?,
        target1: f("target1")?,
        scaled_err2: f("scaled_err2")?,
        target2: f("target2")?,
        theta_deficit: f("theta_deficit")?,
        remainder_bound: f("remainder_bound")?,
        error: obj.get("error").and_then(Value::as_str).map(str::to_string),
    })
}

pub fn from_json(bytes: &[u8]) -> Result<Vec<VerificationRow>> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| Error::Config(format!("json: {e}")))?;
    let Value::Array(items) = value else {
        return Err(Error::Config("json: expected an array of rows".into()));
    };
    items.iter().map(row_from_json).collect()
}

pub fn parse(bytes: &[u8], format: Format) -> Result<Vec<VerificationRow>> {
    match format {
        Format::Csv => from_csv(bytes),
        Format::Json => from_json(bytes),
    }
}
