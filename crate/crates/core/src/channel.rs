//! Block-fading frequency-selective MIMO channel and AWGN.

use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Named power-delay profiles selectable from configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PdpKind {
    #[default]
    Uniform,
    Epa,
}

/// Extended Pedestrian A path delays (ns) and powers (dB).
pub const EPA_DELAYS_NS: [f64; 7] = [0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0];
pub const EPA_POWERS_DB: [f64; 7] = [0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8];

/// Per-tap average powers summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerDelayProfile {
    weights: Vec<f64>,
}

impl PowerDelayProfile {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("power-delay profile needs at least one tap".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config(format!("power-delay weights must be nonnegative, got {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Config("power-delay profile has zero total power".into()));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n_ch: usize) -> Result<Self> {
        Self::from_weights(vec![1.0; n_ch])
    }

    /// EPA resampled onto `n_ch` taps: the sample period is chosen so that
    /// the last path (410 ns) lands on tap `n_ch − 1`; each path adds its
    /// linear power to the nearest tap.
    pub fn epa(n_ch: usize) -> Result<Self> {
        if n_ch == 0 {
            return Err(Error::Config("power-delay profile needs at least one tap".into()));
        }
        let mut weights = vec![0.0; n_ch];
        let period = EPA_DELAYS_NS[6] / (n_ch.max(2) - 1) as f64;
        for (&delay, &db) in EPA_DELAYS_NS.iter().zip(&EPA_POWERS_DB) {
            let tap = if n_ch == 1 { 0 } else { (delay / period).round() as usize };
            weights[tap.min(n_ch - 1)] += 10f64.powf(db / 10.0);
        }
        Self::from_weights(weights)
    }

    pub fn named(kind: PdpKind, n_ch: usize) -> Result<Self> {
        match kind {
            PdpKind::Uniform => Self::uniform(n_ch),
            PdpKind::Epa => Self::epa(n_ch),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Impulse responses `h_{r,t}` for every receive/transmit pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    r: usize,
    t: usize,
    taps: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn from_taps(r: usize, t: usize, taps: Vec<Vec<Complex64>>) -> Result<Self> {
        if taps.len() != r * t || taps.is_empty() || taps.iter().any(|h| h.len() != taps[0].len() || h.is_empty()) {
            return Err(Error::Dimension(format!(
                "need {} equal-length impulse responses for R={r}, T={t}",
                r * t
            )));
        }
        Ok(Self { r, t, taps })
    }

    pub fn receive_antennas(&self) -> usize {
        self.r
    }

    pub fn transmit_antennas(&self) -> usize {
        self.t
    }

    pub fn n_ch(&self) -> usize {
        self.taps[0].len()
    }

    /// Impulse response from transmit antenna `t` to receive antenna `r` (0-based).
    pub fn taps(&self, r: usize, t: usize) -> &[Complex64] {
        &self.taps[r * self.t + t]
    }
}

/// Draws tap `i` of every antenna pair from `CN(0, pdp[i])`, pairs in
/// receive-major order.
pub fn draw_channel<R: Rng + ?Sized>(r: usize, t: usize, pdp: &PowerDelayProfile, rng: &mut R) -> ChannelRealization {
    let taps = (0..r * t)
        .map(|_| pdp.weights().iter().map(|&w| complex_gaussian(rng, w)).collect())
        .collect();
    ChannelRealization { r, t, taps }
}

/// Effective `NR×NT` channel whose block `(r, t)` is `H_{r,t}·A`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockChannel {
    matrix: ComplexMatrix<f64>,
    n: usize,
    r: usize,
    t: usize,
}

impl BlockChannel {
    pub fn matrix(&self) -> &ComplexMatrix<f64> {
        &self.matrix
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn receive_antennas(&self) -> usize {
        self.r
    }

    pub fn transmit_antennas(&self) -> usize {
        self.t
    }
}

pub fn build_block_channel(ch: &ChannelRealization, a: &ComplexMatrix<f64>) -> Result<BlockChannel> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!("modulation matrix must be square, got {}x{}", n, a.cols())));
    }
    if ch.n_ch() > n {
        return Err(Error::Dimension(format!("{} taps exceed block length {n}", ch.n_ch())));
    }
    let (r_ant, t_ant) = (ch.r, ch.t);
    let mut h = ComplexMatrix::zeros(n * r_ant, n * t_ant);
    for r in 0..r_ant {
        for t in 0..t_ant {
            let taps = ch.taps(r, t);
            // Row i of the circulant times A: Σ_τ h[τ]·A[(i−τ) mod N, :].
            for i in 0..n {
                let out = &mut h.row_mut(r * n + i)[t * n..(t + 1) * n];
                for (tau, &c) in taps.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    for (o, &x) in out.iter_mut().zip(a.row((i + n - tau) % n)) {
                        *o += c * x;
                    }
                }
            }
        }
    }
    Ok(BlockChannel {
        matrix: h,
        n,
        r: r_ant,
        t: t_ant,
    })
}

/// AWGN level, `SNR(dB) = 10·log₁₀(1/σ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    variance: f64,
}

impl NoiseSpec {
    pub fn from_variance(variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::Config(format!("noise variance must be positive, got {variance}")));
        }
        Ok(Self { variance })
    }

    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::from_variance(10f64.powf(-snr_db / 10.0))
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.variance.log10()
    }
}

/// `y = H̃d + n`; `noise = None` disables the noise term.
pub fn transmit<R: Rng + ?Sized>(
    d: &[Complex64],
    channel: &BlockChannel,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let mut y = channel.matrix.matvec(d)?;
    if let Some(noise) = noise {
        for v in &mut y {
            *v += complex_gaussian(rng, noise.variance);
        }
    }
    Ok(y)
}

/// Linear convolution of a prefixed block with `taps`, truncated to the
/// input length (the tail spilling into the next block is discarded).
pub fn propagate_time_domain(x: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    (0..x.len())
        .map(|i| {
            taps.iter()
                .enumerate()
                .take(i + 1)
                .fold(Complex64::zero(), |acc, (tau, &h)| acc + h * x[i - tau])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{circular_convolve, ComplexMatrix};
    use crate::modem::{build_gfdm_matrix, build_prototype_rc, cp_add, cp_remove, WaveformConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| complex_gaussian(rng, 1.0)).collect()
    }

    #[test]
    fn uniform_taps_have_expected_variance() {
        let pdp = PowerDelayProfile::uniform(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 100_000;
        let mut per_tap = [0.0; 8];
        let mut total = 0.0;
        for _ in 0..draws {
            let ch = draw_channel(1, 1, &pdp, &mut rng);
            for (acc, h) in per_tap.iter_mut().zip(ch.taps(0, 0)) {
                *acc += h.norm_sqr();
            }
            total += ch.taps(0, 0).iter().map(|h| h.norm_sqr()).sum::<f64>();
        }
        for v in per_tap {
            assert!((v / draws as f64 - 0.125).abs() < 0.03 * 0.125);
        }
        assert!((total / draws as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn epa_profile_on_eight_taps() {
        let pdp = PowerDelayProfile::epa(8).unwrap();
        assert_eq!(pdp.len(), 8);
        assert!((pdp.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // period 410/7 ns: paths land on taps 0,1,1,2,2,3,7.
        let lin: Vec<f64> = EPA_POWERS_DB.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        let want = [
            lin[0],
            lin[1] + lin[2],
            lin[3] + lin[4],
            lin[5],
            0.0,
            0.0,
            0.0,
            lin[6],
        ];
        for (w, e) in pdp.weights().iter().zip(want) {
            assert!((w - e / total).abs() < 1e-14);
        }
    }

    #[test]
    fn pdp_validation() {
        assert!(PowerDelayProfile::from_weights(vec![1.0, -0.1]).is_err());
        assert!(PowerDelayProfile::from_weights(vec![]).is_err());
        let p = PowerDelayProfile::from_weights(vec![3.0, 1.0]).unwrap();
        assert_eq!(p.weights(), &[0.75, 0.25]);
    }

    #[test]
    fn trivial_block_channels() {
        let cfg = WaveformConfig::new(4, 2, 0.5, 2).unwrap();
        let a = build_gfdm_matrix(&build_prototype_rc::<f64>(&cfg).unwrap(), &cfg).unwrap();
        let ch = ChannelRealization::from_taps(1, 1, vec![vec![c(1.0, 0.0)]]).unwrap();
        assert_eq!(build_block_channel(&ch, &a).unwrap().matrix(), &a);
        let ch = ChannelRealization::from_taps(1, 1, vec![vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        let shift = crate::linalg::circulant_from_taps(&[c(0.0, 0.0), c(1.0, 0.0)], 8).unwrap();
        let want = shift.matmul(&a).unwrap();
        assert!(build_block_channel(&ch, &a).unwrap().matrix().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn block_channel_matches_per_antenna_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = WaveformConfig::new(4, 2, 0.5, 3).unwrap();
        let a = build_gfdm_matrix(&build_prototype_rc::<f64>(&cfg).unwrap(), &cfg).unwrap();
        let pdp = PowerDelayProfile::uniform(3).unwrap();
        let ch = draw_channel(2, 2, &pdp, &mut rng);
        let hb = build_block_channel(&ch, &a).unwrap();
        let d = random_vec(&mut rng, 16);
        let y = hb.matrix().matvec(&d).unwrap();
        for r in 0..2 {
            let mut want = vec![Complex64::zero(); 8];
            for t in 0..2 {
                let x = a.matvec(&d[t * 8..(t + 1) * 8]).unwrap();
                for (w, v) in want.iter_mut().zip(circular_convolve(ch.taps(r, t), &x)) {
                    *w += v;
                }
            }
            for (a, b) in y[r * 8..(r + 1) * 8].iter().zip(&want) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cp_removal_turns_linear_into_circular_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 16;
        for n_ch in 1..=6 {
            let taps = random_vec(&mut rng, n_ch);
            let x = random_vec(&mut rng, n);
            let n_cp = n_ch - 1;
            let rx = propagate_time_domain(&cp_add(&x, n_cp).unwrap(), &taps);
            let got = cp_remove(&rx, n_cp, n).unwrap();
            let want = crate::linalg::circulant_from_taps(&taps, n).unwrap().matvec(&x).unwrap();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn noise_power_and_determinism() {
        let a = ComplexMatrix::identity(8);
        let ch = ChannelRealization::from_taps(1, 1, vec![vec![c(1.0, 0.0)]]).unwrap();
        let hb = build_block_channel(&ch, &a).unwrap();
        let d = vec![Complex64::zero(); 8];
        let noise = NoiseSpec::from_snr_db(3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 10_000;
        let mut energy = 0.0;
        for _ in 0..trials {
            let y = transmit(&d, &hb, Some(&noise), &mut rng).unwrap();
            energy += y.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let want = 8.0 * noise.variance();
        assert!((energy / trials as f64 - want).abs() < 0.03 * want);

        let d = random_vec(&mut rng, 8);
        let y1 = transmit(&d, &hb, Some(&noise), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let y2 = transmit(&d, &hb, Some(&noise), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(transmit(&d, &hb, None, &mut rng).unwrap(), d);
    }

    #[test]
    fn noiseless_transmit_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = ComplexMatrix::from_fn(6, 6, |_, _| complex_gaussian(&mut rng, 1.0));
        let ch = draw_channel(2, 2, &PowerDelayProfile::uniform(2).unwrap(), &mut rng);
        let hb = build_block_channel(&ch, &a).unwrap();
        let d1 = random_vec(&mut rng, 12);
        let d2 = random_vec(&mut rng, 12);
        let s = c(0.5, -2.0);
        let mix: Vec<_> = d1.iter().zip(&d2).map(|(a, b)| s * a + b).collect();
        let y = transmit(&mix, &hb, None, &mut rng).unwrap();
        let y1 = transmit(&d1, &hb, None, &mut rng).unwrap();
        let y2 = transmit(&d2, &hb, None, &mut rng).unwrap();
        for i in 0..12 {
            assert!((y[i] - (s * y1[i] + y2[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn snr_conversion() {
        let n = NoiseSpec::from_snr_db(10.0).unwrap();
        assert!((n.variance() - 0.1).abs() < 1e-15);
        assert!((n.snr_db() - 10.0).abs() < 1e-12);
        assert!(NoiseSpec::from_variance(0.0).is_err());
    }
}
