//! Supervised training data for the fine detector and its CSV form.

use rayon::prelude::*;

use crate::channel::NoiseSpec;
use crate::error::{Error, Result};
use crate::DeepExample;

use super::ber::{batch_rng, worker_pool, FRAMES_PER_BATCH};
use super::link::Link;

/// Stream lane reserved for training data.
const DATASET_LANE: u64 = u64::MAX;

/// `size` subblock/target pairs at `snr_db`, all `L` groups of each frame
/// in order, truncated to exactly `size`.
pub fn generate_dataset(link: &Link, snr_db: f64, size: usize, seed: u64) -> Result<Vec<DeepExample>> {
    if size == 0 {
        return Err(Error::Config("dataset size must be at least 1".into()));
    }
    let noise = NoiseSpec::from_snr_db(snr_db)?;
    let groups = link.layout().groups;
    let frames = size.div_ceil(groups);
    let batches = frames.div_ceil(FRAMES_PER_BATCH);
    let pool = worker_pool()?;
    let chunks: Vec<Result<Vec<DeepExample>>> = pool.install(|| {
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = batch_rng(seed, DATASET_LANE, b as u64);
                let n = FRAMES_PER_BATCH.min(frames - b * FRAMES_PER_BATCH);
                let mut out = Vec::with_capacity(n * groups);
                for _ in 0..n {
                    let frame = link.simulate_frame(&mut rng, Some(&noise))?;
                    out.extend(link.training_examples(&frame)?);
                }
                Ok(out)
            })
            .collect()
    });
    let mut data = Vec::with_capacity(frames * groups);
    for chunk in chunks {
        data.extend(chunk?);
    }
    data.truncate(size);
    Ok(data)
}

/// Header `x0..x{n-1},s0..s{k-1}`, one example per row.
pub fn dataset_to_csv(data: &[DeepExample]) -> Result<String> {
    let first = data.first().ok_or_else(|| Error::DatasetFormat("empty dataset".into()))?;
    let (n_in, n_out) = (first.input.len(), first.target.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = (0..n_in).map(|i| format!("x{i}")).chain((0..n_out).map(|i| format!("s{i}")));
    w.write_record(header).map_err(csv_error)?;
    for ex in data {
        if ex.input.len() != n_in || ex.target.len() != n_out {
            return Err(Error::DatasetFormat("examples have inconsistent shapes".into()));
        }
        w.write_record(ex.input.iter().chain(&ex.target).map(f32::to_string))
            .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::DatasetFormat(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::DatasetFormat(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::DatasetFormat(e.to_string())
}

pub fn dataset_from_csv(text: &str) -> Result<Vec<DeepExample>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let cols: Vec<String> = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
    let n_in = cols.iter().take_while(|c| c.starts_with('x')).count();
    let n_out = cols.len() - n_in;
    let expected = (0..n_in).map(|i| format!("x{i}")).chain((0..n_out).map(|i| format!("s{i}")));
    if n_in == 0 || n_out == 0 || !expected.zip(&cols).all(|(e, c)| e == *c) {
        return Err(Error::DatasetFormat("header must be x0..x{n-1},s0..s{k-1}".into()));
    }
    let mut data = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let values = record
            .iter()
            .map(str::parse::<f32>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::DatasetFormat(format!("row {}: {e}", i + 1)))?;
        let (x, s) = values.split_at(n_in);
        data.push(DeepExample {
            input: x.to_vec(),
            target: s.to_vec(),
        });
    }
    if data.is_empty() {
        return Err(Error::DatasetFormat("no examples".into()));
    }
    Ok(data)
}
