//! Monte Carlo bit-error-rate sweeps.
//!
//! Frames are generated in fixed-size batches. Batch `b` at SNR index `i`
//! draws from its own ChaCha stream derived from `(seed, i, b)`, batches are
//! evaluated in parallel waves and merged in batch order, so results do not
//! depend on the worker count. Every receiver sees the same frames.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::NoiseSpec;
use crate::detect::joint_ml_feasible;
use crate::error::{Error, Result};
use crate::im::Bit;
use crate::neural::Workspace;
use crate::DeepModel;

use super::link::Link;

/// Frames per Monte Carlo batch.
pub const FRAMES_PER_BATCH: usize = 64;
/// Batches evaluated per parallel wave.
pub const BATCHES_PER_WAVE: usize = 16;
/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "SMXIM_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    Zf,
    Ml,
    Deep,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 3] = [ReceiverKind::Zf, ReceiverKind::Ml, ReceiverKind::Deep];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::Zf => "zf",
            ReceiverKind::Ml => "ml",
            ReceiverKind::Deep => "deep",
        }
    }
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown receiver '{s}', expected zf, ml or deep")))
    }
}

/// Per-SNR stopping rule: stop once every receiver has at least
/// `min_errors` errors over at least `min_bits` bits, or after `max_bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StoppingRule {
    pub min_errors: u64,
    pub max_bits: u64,
    pub min_bits: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_bits: 10_000_000,
            min_bits: 0,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_errors == 0 || self.max_bits == 0 {
            return Err(Error::Config("min_errors and max_bits must be positive".into()));
        }
        if self.min_bits > self.max_bits {
            return Err(Error::Config(format!(
                "min_bits = {} exceeds max_bits = {}",
                self.min_bits, self.max_bits
            )));
        }
        Ok(())
    }

    pub fn satisfied(&self, bits: u64, errors: u64) -> bool {
        bits >= self.max_bits || (errors >= self.min_errors && bits >= self.min_bits)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimPlan {
    pub snr_db: Vec<f64>,
    pub stopping: StoppingRule,
    pub seed: u64,
    pub receivers: Vec<ReceiverKind>,
    /// Disables the noise term.
    pub noiseless: bool,
    pub ml_guard: u64,
}

impl SimPlan {
    pub fn from_settings(s: &super::config::SimSettings) -> Self {
        Self {
            snr_db: s.snr_db.clone(),
            stopping: s.stopping_rule(),
            seed: s.seed,
            receivers: s.receivers.clone(),
            noiseless: false,
            ml_guard: s.ml_guard,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if self.receivers.is_empty() {
            return Err(Error::Config("no receivers selected".into()));
        }
        if let Some(bad) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("SNR {bad} dB is not finite")));
        }
        self.stopping.validate()
    }
}

/// Counts for one receiver at one SNR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerPoint {
    pub receiver: ReceiverKind,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        self.errors as f64 / self.bits as f64
    }

    /// Normal-approximation 95% half-width.
    pub fn ci95(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        let p = self.ber();
        1.96 * (p * (1.0 - p) / self.bits as f64).sqrt()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.ber() - self.ci95(), self.ber() + self.ci95())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BerReport {
    pub points: Vec<BerPoint>,
}

pub const CSV_HEADER: &str = "receiver,snr_db,bits,errors,ber,ci95";

impl BerReport {
    pub fn point(&self, receiver: ReceiverKind, snr_db: f64) -> Option<&BerPoint> {
        self.points.iter().find(|p| p.receiver == receiver && p.snr_db == snr_db)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut write = || -> csv::Result<()> {
            w.write_record(CSV_HEADER.split(','))?;
            for p in &self.points {
                w.write_record([
                    p.receiver.to_string(),
                    p.snr_db.to_string(),
                    p.bits.to_string(),
                    p.errors.to_string(),
                    format!("{:e}", p.ber()),
                    format!("{:e}", p.ci95()),
                ])?;
            }
            Ok(())
        };
        write().expect("writing to memory");
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("ASCII output")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            receiver: ReceiverKind,
            snr_db: f64,
            bits: u64,
            errors: u64,
        }
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(|e| Error::DatasetFormat(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        if header.join(",") != CSV_HEADER {
            return Err(Error::DatasetFormat(format!("BER CSV header must be {CSV_HEADER}")));
        }
        let points = r
            .deserialize::<Row>()
            .map(|row| {
                let row = row.map_err(|e| Error::DatasetFormat(e.to_string()))?;
                Ok(BerPoint {
                    receiver: row.receiver,
                    snr_db: row.snr_db,
                    bits: row.bits,
                    errors: row.errors,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { points })
    }
}

/// Worker count from `SMXIM_THREADS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn worker_pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Independent generator for batch `batch` of lane `lane`.
pub fn batch_rng(seed: u64, lane: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ lane.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(batch);
    rng
}

fn bit_errors(a: &[Bit], b: &[Bit]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Errors per receiver over one batch of frames.
fn run_batch(
    link: &Link,
    plan: &SimPlan,
    noise: Option<&NoiseSpec>,
    model: Option<&DeepModel>,
    mut rng: ChaCha8Rng,
) -> Result<Vec<u64>> {
    let frames = (0..FRAMES_PER_BATCH)
        .map(|_| link.simulate_frame(&mut rng, noise))
        .collect::<Result<Vec<_>>>()?;
    let needs_psi = plan.receivers.iter().any(|r| *r != ReceiverKind::Ml);
    let psis = if needs_psi {
        frames.iter().map(|f| link.coarse(f)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    plan.receivers
        .iter()
        .map(|r| {
            let detected: Vec<Vec<Bit>> = match r {
                ReceiverKind::Zf => psis.iter().map(|p| link.detect_zf(p)).collect::<Result<_>>()?,
                ReceiverKind::Ml => frames
                    .iter()
                    .map(|f| link.detect_ml(f, plan.ml_guard))
                    .collect::<Result<_>>()?,
                ReceiverKind::Deep => {
                    let model = model.ok_or_else(|| Error::Config("the deep receiver needs a model".into()))?;
                    link.detect_deep(model, &psis, &mut Workspace::new())?
                }
            };
            Ok(frames.iter().zip(&detected).map(|(f, d)| bit_errors(&f.bits, d)).sum())
        })
        .collect()
}

/// Runs every receiver of `plan` over the SNR grid.
pub fn run_ber_sweep(link: &Link, plan: &SimPlan, model: Option<&DeepModel>) -> Result<BerReport> {
    plan.validate()?;
    for r in &plan.receivers {
        match r {
            ReceiverKind::Deep => match model {
                Some(m) => link.check_model(m)?,
                None => return Err(Error::Config("the deep receiver needs a model".into())),
            },
            ReceiverKind::Ml => {
                let slots = link.system().t * link.layout().groups;
                if !joint_ml_feasible(link.codec(), slots, plan.ml_guard) {
                    return Err(Error::MlGuard {
                        candidates: crate::detect::joint_candidate_count(link.codec(), slots).to_string(),
                        limit: plan.ml_guard,
                    });
                }
            }
            ReceiverKind::Zf => {}
        }
    }
    let pool = worker_pool()?;
    let batch_bits = (FRAMES_PER_BATCH * link.frame_bits()) as u64;
    let mut report = BerReport::default();
    for (si, &snr_db) in plan.snr_db.iter().enumerate() {
        let noise = if plan.noiseless {
            None
        } else {
            Some(NoiseSpec::from_snr_db(snr_db)?)
        };
        let mut bits = 0u64;
        let mut errors = vec![0u64; plan.receivers.len()];
        let mut next_batch = 0u64;
        'waves: loop {
            let wave: Vec<Result<Vec<u64>>> = pool.install(|| {
                (next_batch..next_batch + BATCHES_PER_WAVE as u64)
                    .into_par_iter()
                    .map(|b| run_batch(link, plan, noise.as_ref(), model, batch_rng(plan.seed, si as u64, b)))
                    .collect()
            });
            next_batch += BATCHES_PER_WAVE as u64;
            for batch in wave {
                bits += batch_bits;
                for (acc, e) in errors.iter_mut().zip(batch?) {
                    *acc += e;
                }
                if errors.iter().all(|&e| plan.stopping.satisfied(bits, e)) {
                    break 'waves;
                }
            }
        }
        report.points.extend(plan.receivers.iter().zip(&errors).map(|(&receiver, &errors)| BerPoint {
            receiver,
            snr_db,
            bits,
            errors,
        }));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_and_csv_roundtrip() {
        let p = BerPoint {
            receiver: ReceiverKind::Zf,
            snr_db: 10.0,
            bits: 10_000,
            errors: 100,
        };
        assert_eq!(p.ber(), 0.01);
        assert!((p.ci95() - 1.96 * (0.01f64 * 0.99 / 1e4).sqrt()).abs() < 1e-15);
        let report = BerReport { points: vec![p] };
        let csv = report.to_csv();
        assert!(csv.starts_with("receiver,snr_db,bits,errors,ber,ci95\n"));
        assert_eq!(BerReport::from_csv(&csv).unwrap(), report);
    }

    #[test]
    fn stopping_rule() {
        let r = StoppingRule {
            min_errors: 100,
            max_bits: 1000,
            min_bits: 500,
        };
        assert!(!r.satisfied(400, 200));
        assert!(r.satisfied(500, 100));
        assert!(!r.satisfied(999, 99));
        assert!(r.satisfied(1000, 0));
        assert!(StoppingRule { min_bits: 2000, ..r }.validate().is_err());
    }

    #[test]
    fn receiver_names() {
        for r in ReceiverKind::ALL {
            assert_eq!(r.name().parse::<ReceiverKind>().unwrap(), r);
        }
        assert!("mmse".parse::<ReceiverKind>().is_err());
    }

    #[test]
    fn batch_streams_differ() {
        use rand::Rng;
        let mut a = batch_rng(1, 0, 0);
        let mut b = batch_rng(1, 0, 1);
        let mut c = batch_rng(1, 1, 0);
        let (x, y, z): (u64, u64, u64) = (a.random(), b.random(), c.random());
        assert!(x != y && x != z && y != z);
        assert_eq!(batch_rng(1, 0, 0).random::<u64>(), x);
    }
}
