//! Line-oriented text format for trained models:
//!
//! ```text
//! smximodel v1
//! dims t=<T> u=<u> p=<p> f=<F> tau=<τ>
//! w          F lines of 2T values
//! c          1 line of F values
//! a1         τ lines of uF values
//! b1         1 line of τ values
//! a2         pT lines of τ values
//! b2         1 line of pT values
//! end
//! ```
//!
//! Values are written in shortest round-trip decimal form, so loading a
//! saved model reproduces it bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::model::{FineDetectorModel, ModelDims, Params};

pub const MODEL_MAGIC: &str = "smximodel";
pub const MODEL_VERSION: u32 = 1;

fn layout(d: &ModelDims) -> [(&'static str, usize, usize); 6] {
    [
        ("w", d.f, d.channels()),
        ("c", 1, d.f),
        ("a1", d.tau, d.flat_len()),
        ("b1", 1, d.tau),
        ("a2", d.output_len(), d.tau),
        ("b2", 1, d.output_len()),
    ]
}

pub fn model_to_text<T: Real>(model: &FineDetectorModel<T>) -> String {
    let d = model.dims();
    let mut out = format!("{MODEL_MAGIC} v{MODEL_VERSION}\n");
    let _ = writeln!(out, "dims t={} u={} p={} f={} tau={}", d.t, d.u, d.p, d.f, d.tau);
    for ((name, rows, cols), values) in layout(d).into_iter().zip(model.params().groups()) {
        out.push_str(name);
        out.push('\n');
        for r in 0..rows {
            let line: Vec<String> = values[r * cols..(r + 1) * cols].iter().map(|x| x.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

pub fn model_from_text<T: Real>(text: &str) -> Result<FineDetectorModel<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines.next().ok_or_else(|| malformed("empty file"))?;
    let mut head = header.split_whitespace();
    if head.next() != Some(MODEL_MAGIC) {
        return Err(malformed(format!("missing '{MODEL_MAGIC}' header")));
    }
    let version = head.next().and_then(|v| v.strip_prefix('v')).and_then(|v| v.parse::<u32>().ok());
    match version {
        Some(MODEL_VERSION) => {}
        Some(v) => return Err(malformed(format!("unsupported version v{v}, expected v{MODEL_VERSION}"))),
        None => return Err(malformed("unreadable version in header")),
    }

    let (ln, dims_line) = lines.next().ok_or_else(|| malformed("missing dims line"))?;
    let mut fields = dims_line.split_whitespace();
    if fields.next() != Some("dims") {
        return Err(malformed(format!("line {ln}: expected 'dims'")));
    }
    let mut vals = [None; 5];
    for kv in fields {
        let (k, v) = kv.split_once('=').ok_or_else(|| malformed(format!("line {ln}: bad field '{kv}'")))?;
        let slot = ["t", "u", "p", "f", "tau"]
            .iter()
            .position(|&n| n == k)
            .ok_or_else(|| malformed(format!("line {ln}: unknown dimension '{k}'")))?;
        vals[slot] = Some(v.parse::<usize>().map_err(|_| malformed(format!("line {ln}: bad value '{v}'")))?);
    }
    let get = |i: usize| vals[i].ok_or_else(|| malformed(format!("line {ln}: incomplete dims")));
    let dims = ModelDims {
        t: get(0)?,
        u: get(1)?,
        p: get(2)?,
        f: get(3)?,
        tau: get(4)?,
    };
    dims.validate().map_err(|e| malformed(e.to_string()))?;

    let mut params = Params::<T>::zeros(&dims);
    for ((name, rows, cols), dst) in layout(&dims).into_iter().zip(params.groups_mut()) {
        let (ln, section) = lines.next().ok_or_else(|| malformed(format!("missing section '{name}'")))?;
        if section != name {
            return Err(malformed(format!("line {ln}: expected section '{name}', found '{section}'")));
        }
        dst.clear();
        for _ in 0..rows {
            let (ln, row) = lines.next().ok_or_else(|| malformed(format!("section '{name}' is truncated")))?;
            let before = dst.len();
            for tok in row.split_whitespace() {
                let x = tok
                    .parse::<T>()
                    .map_err(|_| malformed(format!("line {ln}: bad number '{tok}'")))?;
                dst.push(x);
            }
            if dst.len() - before != cols {
                return Err(malformed(format!(
                    "line {ln}: section '{name}' row has {} values, expected {cols}",
                    dst.len() - before
                )));
            }
        }
    }
    match lines.next() {
        Some((_, "end")) => {}
        _ => return Err(malformed("missing 'end' marker")),
    }
    FineDetectorModel::from_params(dims, params).map_err(|e| malformed(e.to_string()))
}

pub fn model_save<T: Real>(model: &FineDetectorModel<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_text(model))?;
    Ok(())
}

pub fn model_load<T: Real>(path: impl AsRef<Path>) -> Result<FineDetectorModel<T>> {
    model_from_text(&std::fs::read_to_string(path)?)
}
