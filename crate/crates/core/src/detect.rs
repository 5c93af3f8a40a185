//! Zero-forcing coarse stage, subblock splitting, classical per-group
//! decisions and the exhaustive joint maximum-likelihood detector.
//!
//! Frame bits are laid out antenna-major, group-minor: antenna `t`, group
//! `l` owns bits `(t·L + l)·p .. (t·L + l + 1)·p`.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::channel::BlockChannel;
use crate::error::{Error, Result};
use crate::im::{to_bits, Bit, ImCodec};
use crate::linalg::hermitian_ls_solve;

/// Default limit on the number of joint hypotheses the ML detector will visit.
pub const ML_GUARD_DEFAULT: u64 = 1 << 24;

/// Bit bookkeeping for one frame of `T` antennas × `L` groups × `p` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameLayout {
    pub t: usize,
    pub groups: usize,
    pub bits_per_group: usize,
}

impl FrameLayout {
    pub fn new(t: usize, groups: usize, bits_per_group: usize) -> Self {
        Self {
            t,
            groups,
            bits_per_group,
        }
    }

    pub fn frame_bits(&self) -> usize {
        self.t * self.groups * self.bits_per_group
    }

    /// Bits of antenna `t`, group `l` within a frame.
    pub fn slot<'a>(&self, frame: &'a [Bit], t: usize, l: usize) -> &'a [Bit] {
        let start = (t * self.groups + l) * self.bits_per_group;
        &frame[start..start + self.bits_per_group]
    }

    fn check(&self, frame: &[Bit]) -> Result<()> {
        if frame.len() != self.frame_bits() {
            return Err(Error::BitCount {
                expected: self.frame_bits(),
                got: frame.len(),
            });
        }
        Ok(())
    }

    /// Per-group bit blocks: block `l` concatenates the group-`l` bits of
    /// antennas `0..T` (`p·T` bits), the target layout of the fine detector.
    pub fn split_bits(&self, frame: &[Bit]) -> Result<Vec<Vec<Bit>>> {
        self.check(frame)?;
        Ok((0..self.groups)
            .map(|l| (0..self.t).flat_map(|t| self.slot(frame, t, l).iter().copied()).collect())
            .collect())
    }

    /// Inverse of [`FrameLayout::split_bits`].
    pub fn combine_bits(&self, per_group: &[Vec<Bit>]) -> Result<Vec<Bit>> {
        let block = self.t * self.bits_per_group;
        if per_group.len() != self.groups || per_group.iter().any(|g| g.len() != block) {
            return Err(Error::Dimension(format!(
                "expected {} group blocks of {block} bits",
                self.groups
            )));
        }
        let p = self.bits_per_group;
        let mut frame = Vec::with_capacity(self.frame_bits());
        for t in 0..self.t {
            for g in per_group {
                frame.extend_from_slice(&g[t * p..(t + 1) * p]);
            }
        }
        Ok(frame)
    }
}

/// Equalized per-antenna streams `ψ_t`, each of block length `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseOutput {
    streams: Vec<Vec<Complex64>>,
}

impl CoarseOutput {
    pub fn from_streams(streams: Vec<Vec<Complex64>>) -> Result<Self> {
        if streams.is_empty() || streams.iter().any(|s| s.len() != streams[0].len()) {
            return Err(Error::Dimension("coarse output needs equal-length streams".into()));
        }
        Ok(Self { streams })
    }

    pub fn streams(&self) -> &[Vec<Complex64>] {
        &self.streams
    }

    pub fn antennas(&self) -> usize {
        self.streams.len()
    }

    pub fn block_len(&self) -> usize {
        self.streams[0].len()
    }
}

/// `T×u` subblock `Ψ^l`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SubblockMatrix {
    t: usize,
    u: usize,
    data: Vec<Complex64>,
}

impl SubblockMatrix {
    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let u = rows.first().map_or(0, |r| r.len());
        if u == 0 || rows.iter().any(|r| r.len() != u) {
            return Err(Error::Dimension("subblock rows must be nonempty and equal length".into()));
        }
        Ok(Self {
            t: rows.len(),
            u,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        })
    }

    pub fn antennas(&self) -> usize {
        self.t
    }

    pub fn width(&self) -> usize {
        self.u
    }

    pub fn row(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.u..(t + 1) * self.u]
    }

    pub fn get(&self, t: usize, gamma: usize) -> Complex64 {
        self.data[t * self.u + gamma]
    }
}

/// `(H̃ᴴH̃)⁻¹H̃ᴴy`, unstacked into `T` streams.
pub fn zf_coarse(channel: &BlockChannel, y: &[Complex64]) -> Result<CoarseOutput> {
    let x = hermitian_ls_solve(channel.matrix(), y)?;
    let n = channel.block_len();
    CoarseOutput::from_streams(x.chunks(n).map(<[Complex64]>::to_vec).collect())
}

/// Subblock `l` (0-based) of width `u`: row `t` is `ψ_t[l·u .. (l+1)·u]`.
pub fn split_subblocks(psi: &CoarseOutput, l: usize, u: usize) -> Result<SubblockMatrix> {
    if u == 0 || !psi.block_len().is_multiple_of(u) {
        return Err(Error::Dimension(format!(
            "block length {} is not a multiple of u = {u}",
            psi.block_len()
        )));
    }
    let groups = psi.block_len() / u;
    if l >= groups {
        return Err(Error::Dimension(format!("group {l} out of range 0..{groups}")));
    }
    let rows: Vec<&[Complex64]> = psi.streams.iter().map(|s| &s[l * u..(l + 1) * u]).collect();
    SubblockMatrix::from_rows(&rows)
}

/// Per-antenna, per-group minimum-distance decisions on the ZF output.
pub fn classical_zf_detect(psi: &CoarseOutput, codec: &ImCodec) -> Result<Vec<Bit>> {
    let u = codec.config().u;
    if !psi.block_len().is_multiple_of(u) {
        return Err(Error::Dimension(format!(
            "block length {} is not a multiple of u = {u}",
            psi.block_len()
        )));
    }
    let mut bits = Vec::with_capacity(psi.antennas() * psi.block_len() / u * codec.config().bits_per_group());
    for stream in psi.streams() {
        for group in stream.chunks(u) {
            bits.extend(codec.decode_mindist(group)?);
        }
    }
    Ok(bits)
}

/// Number of joint hypotheses `(αQ^v)^{T·L}`.
pub fn joint_candidate_count(codec: &ImCodec, slots: usize) -> BigUint {
    BigUint::from(codec.config().candidates()).pow(slots as u32)
}

/// Exhaustive search for the frame minimizing `‖y − H̃d‖²`.
///
/// Hypotheses are enumerated lexicographically over slots in frame order
/// (antenna-major, group-minor) with each slot's message value as digit;
/// ties keep the earliest hypothesis.
pub fn joint_ml_detect(y: &[Complex64], channel: &BlockChannel, codec: &ImCodec, guard: u64) -> Result<Vec<Bit>> {
    let n = channel.block_len();
    let u = codec.config().u;
    if !n.is_multiple_of(u) {
        return Err(Error::Dimension(format!("block length {n} is not a multiple of u = {u}")));
    }
    let h = channel.matrix();
    if y.len() != h.rows() {
        return Err(Error::Dimension(format!(
            "observation has {} samples, channel has {} rows",
            y.len(),
            h.rows()
        )));
    }
    let groups = n / u;
    let slots = channel.transmit_antennas() * groups;
    let count = joint_candidate_count(codec, slots);
    if count > BigUint::from(guard) {
        return Err(Error::MlGuard {
            candidates: count.to_string(),
            limit: guard,
        });
    }

    // contrib[s][c] = H̃ restricted to slot s applied to codeword c.
    let rows = h.rows();
    let contrib: Vec<Vec<Vec<Complex64>>> = (0..slots)
        .map(|s| {
            let col0 = s * u;
            codec
                .codebook()
                .iter()
                .map(|word| {
                    (0..rows)
                        .map(|i| {
                            word.iter()
                                .enumerate()
                                .filter(|(_, w)| !w.is_zero())
                                .fold(Complex64::zero(), |acc, (j, &w)| acc + h.get(i, col0 + j) * w)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    struct Search<'a> {
        contrib: &'a [Vec<Vec<Complex64>>],
        best: f64,
        best_digits: Vec<usize>,
        digits: Vec<usize>,
    }
    impl Search<'_> {
        fn visit(&mut self, slot: usize, residual: &[Complex64]) {
            if slot == self.contrib.len() {
                let metric: f64 = residual.iter().map(|z| z.norm_sqr()).sum();
                if metric < self.best {
                    self.best = metric;
                    self.best_digits.clone_from(&self.digits);
                }
                return;
            }
            let mut next = vec![Complex64::zero(); residual.len()];
            for (c, v) in self.contrib[slot].iter().enumerate() {
                for ((o, &r), &x) in next.iter_mut().zip(residual).zip(v) {
                    *o = r - x;
                }
                self.digits[slot] = c;
                self.visit(slot + 1, &next);
            }
        }
    }
    let mut search = Search {
        contrib: &contrib,
        best: f64::INFINITY,
        best_digits: vec![0; slots],
        digits: vec![0; slots],
    };
    search.visit(0, y);

    let p = codec.config().bits_per_group();
    Ok(search.best_digits.iter().flat_map(|&m| to_bits(m, p)).collect())
}

/// Convenience for callers that only need a size check.
pub fn joint_ml_feasible(codec: &ImCodec, slots: usize, guard: u64) -> bool {
    joint_candidate_count(codec, slots)
        .to_u64()
        .is_some_and(|c| c <= guard)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_block_channel, draw_channel, ChannelRealization, PowerDelayProfile};
    use crate::im::ImConfig;
    use crate::linalg::ComplexMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn split_counting_vector() {
        let streams: Vec<Vec<Complex64>> = (1..=2).map(|t| (0..96).map(|i| c((t * 100 + i) as f64)).collect()).collect();
        let psi = CoarseOutput::from_streams(streams).unwrap();
        let blk = split_subblocks(&psi, 1, 4).unwrap();
        assert_eq!(blk.row(0), &[c(104.0), c(105.0), c(106.0), c(107.0)]);
        assert_eq!(blk.row(1), &[c(204.0), c(205.0), c(206.0), c(207.0)]);
        assert!(split_subblocks(&psi, 24, 4).is_err());
        let whole = split_subblocks(&psi, 0, 96).unwrap();
        assert_eq!(whole.row(1), psi.streams()[1].as_slice());
    }

    #[test]
    fn zf_identity_channel_returns_observation() {
        let ch = ChannelRealization::from_taps(1, 1, vec![vec![c(1.0)]]).unwrap();
        let hb = build_block_channel(&ch, &ComplexMatrix::identity(4)).unwrap();
        let y = vec![c(1.0), Complex64::new(0.0, 2.0), c(-3.0), c(0.5)];
        assert_eq!(zf_coarse(&hb, &y).unwrap().streams()[0], y);
    }

    #[test]
    fn layout_explicit_interleaving() {
        // T=2, L=2, p=2: frame [a0 a1 | b0 b1 | c0 c1 | d0 d1] is antenna 0
        // groups (a, b) then antenna 1 groups (c, d).
        let layout = FrameLayout::new(2, 2, 2);
        let frame = vec![1, 2, 3, 4, 5, 6, 7, 8];
        let groups = layout.split_bits(&frame).unwrap();
        assert_eq!(groups, vec![vec![1, 2, 5, 6], vec![3, 4, 7, 8]]);
        assert_eq!(layout.combine_bits(&groups).unwrap(), frame);
        let single = FrameLayout::new(1, 1, 4);
        assert_eq!(single.combine_bits(&[vec![0, 1, 1, 0]]).unwrap(), vec![0, 1, 1, 0]);
        assert!(layout.combine_bits(&groups[..1]).is_err());
        assert!(layout.split_bits(&frame[..7]).is_err());
    }

    #[test]
    fn ml_guard_refuses_large_searches() {
        let codec = ImCodec::new(ImConfig::new(4, 2, 2).unwrap()).unwrap();
        let ch = ChannelRealization::from_taps(2, 2, vec![vec![c(1.0)]; 4]).unwrap();
        let hb = build_block_channel(&ch, &ComplexMatrix::identity(32)).unwrap();
        let y = vec![Complex64::zero(); 64];
        match joint_ml_detect(&y, &hb, &codec, ML_GUARD_DEFAULT) {
            Err(Error::MlGuard { candidates, .. }) => assert_eq!(candidates, BigUint::from(16u32).pow(16).to_string()),
            other => panic!("expected guard error, got {other:?}"),
        }
        assert!(!joint_ml_feasible(&codec, 16, ML_GUARD_DEFAULT));
        assert!(joint_ml_feasible(&codec, 2, ML_GUARD_DEFAULT));
    }

    #[test]
    fn ml_tiny_noiseless_is_exact() {
        let codec = ImCodec::new(ImConfig::new(4, 2, 2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pdp = PowerDelayProfile::uniform(2).unwrap();
        for m in 0..16usize {
            let ch = draw_channel(1, 1, &pdp, &mut rng);
            let hb = build_block_channel(&ch, &ComplexMatrix::identity(4)).unwrap();
            let bits = to_bits(m, 4);
            let d = codec.encode(&bits).unwrap().symbols;
            let y = hb.matrix().matvec(&d).unwrap();
            assert_eq!(joint_ml_detect(&y, &hb, &codec, ML_GUARD_DEFAULT).unwrap(), bits);
        }
    }

    #[test]
    fn classical_decision_is_deterministic() {
        let codec = ImCodec::new(ImConfig::new(4, 2, 4).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let streams: Vec<Vec<Complex64>> = (0..2)
            .map(|_| (0..8).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
            .collect();
        let psi = CoarseOutput::from_streams(streams).unwrap();
        let a = classical_zf_detect(&psi, &codec).unwrap();
        assert_eq!(a.len(), 2 * 2 * 6);
        assert_eq!(a, classical_zf_detect(&psi, &codec).unwrap());
    }
}
