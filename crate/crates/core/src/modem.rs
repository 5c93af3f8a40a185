//! GFDM transmitter matrix, raised-cosine prototype filter and cyclic prefix.
//!
//! OFDM is the `M = 1` case: the prototype collapses to a rectangular window
//! and the transmitter matrix becomes the unitary inverse DFT.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::Real;

/// Waveform dimensioning.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveformConfig {
    /// Subcarriers per subsymbol.
    pub k: usize,
    /// Subsymbols per block.
    pub m: usize,
    /// Raised-cosine roll-off in `[0, 1]`.
    pub rolloff: f64,
    /// Cyclic prefix length in samples.
    pub n_cp: usize,
}

impl WaveformConfig {
    pub fn new(k: usize, m: usize, rolloff: f64, n_cp: usize) -> Result<Self> {
        let cfg = Self { k, m, rolloff, n_cp };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ofdm(k: usize, n_cp: usize) -> Result<Self> {
        Self::new(k, 1, 0.0, n_cp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        if self.m < 1 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::Config(format!("rolloff must lie in [0, 1], got {}", self.rolloff)));
        }
        if self.n_cp > self.n() {
            return Err(Error::Config(format!(
                "n_cp = {} exceeds the block length {}",
                self.n_cp,
                self.n()
            )));
        }
        Ok(())
    }

    /// Samples per block, `K·M`.
    pub fn n(&self) -> usize {
        self.k * self.m
    }
}

/// Real prototype filter with unit energy.
#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeFilter<T> {
    taps: Vec<T>,
}

impl<T: Real> PrototypeFilter<T> {
    /// Normalizes `taps` to unit L2 norm.
    pub fn new(taps: Vec<T>) -> Result<Self> {
        let energy: T = taps.iter().map(|&g| g * g).sum();
        if taps.is_empty() || !(energy > T::zero()) || !energy.is_finite() {
            return Err(Error::Config("prototype filter needs finite taps with nonzero energy".into()));
        }
        let norm = energy.sqrt();
        Ok(Self {
            taps: taps.into_iter().map(|g| g / norm).collect(),
        })
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Raised-cosine window at `x` subsymbol periods from the pulse centre:
/// flat over `|x| ≤ (1−a)/2`, cosine ramp out to `(1+a)/2`.
pub fn raised_cosine_window(x: f64, rolloff: f64) -> f64 {
    let x = x.abs();
    let flat = (1.0 - rolloff) / 2.0;
    let edge = (1.0 + rolloff) / 2.0;
    if x <= flat {
        1.0
    } else if x <= edge {
        0.5 * (1.0 + (std::f64::consts::PI / rolloff * (x - flat)).cos())
    } else {
        0.0
    }
}

/// Circular time-domain raised-cosine pulse spanning one subsymbol.
///
/// The window is centred on the first subsymbol, `(K−1)/2`, and folded
/// modulo `N`; its shifted copies by `K` sum to a constant, so with `M = 1`
/// the pulse is exactly rectangular.
pub fn build_prototype_rc<T: Real>(cfg: &WaveformConfig) -> Result<PrototypeFilter<T>> {
    cfg.validate()?;
    let n = cfg.n() as f64;
    let k = cfg.k as f64;
    let centre = (k - 1.0) / 2.0;
    let taps = (0..cfg.n())
        .map(|i| {
            let base = i as f64 - centre;
            let g: f64 = (-2..=2)
                .map(|wrap| raised_cosine_window((base + wrap as f64 * n) / k, cfg.rolloff))
                .sum();
            T::lit(g)
        })
        .collect();
    PrototypeFilter::new(taps)
}

/// `N×N` GFDM transmitter matrix. Column `m·K + k` carries data position
/// `(k, m)` and holds `g[(n − mK) mod N]·exp(j2πkn/K)`.
pub fn build_gfdm_matrix<T: Real>(g: &PrototypeFilter<T>, cfg: &WaveformConfig) -> Result<ComplexMatrix<T>> {
    cfg.validate()?;
    let (k, n) = (cfg.k, cfg.n());
    if g.len() != n {
        return Err(Error::Dimension(format!(
            "prototype filter has {} taps, waveform needs {n}",
            g.len()
        )));
    }
    let two_pi = T::TAU();
    let kk = T::lit(k as f64);
    Ok(ComplexMatrix::from_fn(n, n, |row, col| {
        let (m_idx, k_idx) = (col / k, col % k);
        let amp = g.taps[(row + n - m_idx * k) % n];
        // Reduce the phase index modulo K before converting to an angle.
        let phase = two_pi * T::lit(((k_idx * row) % k) as f64) / kk;
        Complex::from_polar(amp, phase)
    }))
}

/// Prepends the last `n_cp` samples.
pub fn cp_add<T: Clone>(x: &[T], n_cp: usize) -> Result<Vec<T>> {
    if n_cp > x.len() {
        return Err(Error::Dimension(format!(
            "cyclic prefix of {n_cp} samples exceeds block length {}",
            x.len()
        )));
    }
    let mut out = Vec::with_capacity(x.len() + n_cp);
    out.extend_from_slice(&x[x.len() - n_cp..]);
    out.extend_from_slice(x);
    Ok(out)
}

/// Drops the first `n_cp` samples of a length-`n + n_cp` block.
pub fn cp_remove<T: Clone>(x: &[T], n_cp: usize, n: usize) -> Result<Vec<T>> {
    if x.len() != n + n_cp {
        return Err(Error::Dimension(format!(
            "expected {} samples with prefix, got {}",
            n + n_cp,
            x.len()
        )));
    }
    Ok(x[n_cp..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn one_subsymbol_gives_rectangular_window() {
        for rolloff in [0.0, 0.25, 0.5, 1.0] {
            let cfg = WaveformConfig::new(16, 1, rolloff, 0).unwrap();
            let g = build_prototype_rc::<f64>(&cfg).unwrap();
            for &t in g.taps() {
                assert!((t - 0.25).abs() < 1e-14, "rolloff {rolloff}: tap {t}");
            }
        }
    }

    #[test]
    fn reference_filter_has_unit_energy() {
        let cfg = WaveformConfig::new(32, 3, 0.5, 8).unwrap();
        let g = build_prototype_rc::<f64>(&cfg).unwrap();
        assert_eq!(g.len(), 96);
        let e: f64 = g.taps().iter().map(|t| t * t).sum();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rolloff_is_rectangular_over_first_subsymbol() {
        let cfg = WaveformConfig::new(8, 4, 0.0, 0).unwrap();
        let g = build_prototype_rc::<f64>(&cfg).unwrap();
        let level = 1.0 / 8f64.sqrt();
        for (i, &t) in g.taps().iter().enumerate() {
            let want = if i < 8 { level } else { 0.0 };
            assert!((t - want).abs() < 1e-14, "tap {i}");
        }
    }

    #[test]
    fn ramp_follows_direct_formula() {
        // K=4, M=2, a=0.5: centre 1.5, flat for |x| ≤ 1/4, ramp to 3/4.
        let cfg = WaveformConfig::new(4, 2, 0.5, 0).unwrap();
        let g = build_prototype_rc::<f64>(&cfg).unwrap();
        let raw: Vec<f64> = (0..8)
            .map(|i| {
                let x = (i as f64 - 1.5) / 4.0;
                let x = if x > 1.0 { x - 2.0 } else { x };
                let ax = x.abs();
                if ax <= 0.25 {
                    1.0
                } else if ax <= 0.75 {
                    0.5 * (1.0 + (2.0 * std::f64::consts::PI * (ax - 0.25)).cos())
                } else {
                    0.0
                }
            })
            .collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (t, r) in g.taps().iter().zip(&raw) {
            assert!((t - r / norm).abs() < 1e-14);
        }
    }

    #[test]
    fn hand_evaluated_column() {
        let cfg = WaveformConfig::new(2, 2, 0.0, 0).unwrap();
        let g = PrototypeFilter::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (a, b, c, d) = (g.taps()[0], g.taps()[1], g.taps()[2], g.taps()[3]);
        let mat = build_gfdm_matrix(&g, &cfg).unwrap();
        let col = mat.column(3);
        let want = [c, -d, a, -b];
        for (z, w) in col.iter().zip(want) {
            assert!((z - Complex64::new(w, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn columns_have_unit_norm() {
        let cfg = WaveformConfig::new(32, 3, 0.5, 8).unwrap();
        let g = build_prototype_rc::<f64>(&cfg).unwrap();
        let a = build_gfdm_matrix(&g, &cfg).unwrap();
        for j in 0..a.cols() {
            let norm: f64 = a.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_length_mismatch_is_rejected() {
        let cfg = WaveformConfig::new(4, 2, 0.5, 0).unwrap();
        let g = PrototypeFilter::new(vec![1.0; 4]).unwrap();
        assert!(matches!(build_gfdm_matrix(&g, &cfg), Err(Error::Dimension(_))));
    }

    #[test]
    fn cyclic_prefix_examples() {
        let x = [1, 2, 3, 4];
        assert_eq!(cp_add(&x, 0).unwrap(), x);
        assert_eq!(cp_add(&x, 2).unwrap(), [3, 4, 1, 2, 3, 4]);
        assert_eq!(cp_remove(&[3, 4, 1, 2, 3, 4], 2, 4).unwrap(), x);
        assert_eq!(cp_remove(&x, 0, 4).unwrap(), x);
        assert!(cp_add(&x, 5).is_err());
        assert!(cp_remove(&x, 1, 4).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(WaveformConfig::new(1, 1, 0.5, 0).is_err());
        assert!(WaveformConfig::new(4, 0, 0.5, 0).is_err());
        assert!(WaveformConfig::new(4, 1, 1.5, 0).is_err());
        assert!(WaveformConfig::new(4, 1, 0.5, 5).is_err());
    }
}
