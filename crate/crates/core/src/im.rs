//! Index-modulation encoder/decoder.
//!
//! A group of `u` subcarriers carries `p = p_i + p_q` bits: the first `p_i`
//! bits pick one of `α = 2^{p_i}` activation patterns from a lookup table,
//! the remaining `p_q = v·log₂Q` bits are mapped onto the `v` active
//! positions in ascending index order.

use std::fmt::Write as _;

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bit values are stored one per byte, `0` or `1`.
pub type Bit = u8;

/// Index-modulation dimensioning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImConfig {
    pub u: usize,
    pub v: usize,
    pub q: usize,
}

impl ImConfig {
    pub fn new(u: usize, v: usize, q: usize) -> Result<Self> {
        if v < 1 || v > u {
            return Err(Error::Config(format!("need 1 <= v <= u, got u={u}, v={v}")));
        }
        if q != 2 && q != 4 {
            return Err(Error::Config(format!("constellation order q must be 2 or 4, got {q}")));
        }
        let cfg = Self { u, v, q };
        if cfg.index_bits() < 1 {
            return Err(Error::Config(format!(
                "C({u},{v}) = {} patterns cannot carry an index bit",
                binomial(u, v)
            )));
        }
        Ok(cfg)
    }

    /// `p_i = ⌊log₂ C(u, v)⌋`.
    pub fn index_bits(&self) -> usize {
        floor_log2(binomial(self.u, self.v))
    }

    /// `p_q = v·log₂Q`.
    pub fn symbol_bits(&self) -> usize {
        self.v * self.q.trailing_zeros() as usize
    }

    /// `p`, bits per group.
    pub fn bits_per_group(&self) -> usize {
        self.index_bits() + self.symbol_bits()
    }

    /// `α`, number of activation patterns in use.
    pub fn patterns(&self) -> usize {
        1 << self.index_bits()
    }

    /// `αQ^v = 2^p`, number of distinct group hypotheses.
    pub fn candidates(&self) -> usize {
        1 << self.bits_per_group()
    }

    pub fn modulation(&self) -> Modulation {
        if self.q == 2 {
            Modulation::Bpsk
        } else {
            Modulation::Qam4
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn floor_log2(x: usize) -> usize {
    if x == 0 {
        0
    } else {
        (usize::BITS - 1 - x.leading_zeros()) as usize
    }
}

/// Big-endian bits of `value`, `width` wide.
pub fn to_bits(value: usize, width: usize) -> Vec<Bit> {
    (0..width).rev().map(|i| ((value >> i) & 1) as Bit).collect()
}

/// Big-endian integer value of `bits`.
pub fn from_bits(bits: &[Bit]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Activation patterns; row `i` is selected by the index bits with value `i`.
/// Indices are stored 0-based and printed 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImLookupTable {
    u: usize,
    rows: Vec<Vec<usize>>,
}

impl ImLookupTable {
    /// The `(u, v) = (4, 2)` table: `00→{1,2}, 01→{2,3}, 10→{3,4}, 11→{1,4}`.
    pub fn default_u4_v2() -> Self {
        Self {
            u: 4,
            rows: vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
        }
    }

    /// The `(4, 2)` table, or the first `α` combinations in lexicographic
    /// order for other dimensions.
    pub fn for_config(cfg: &ImConfig) -> Self {
        if (cfg.u, cfg.v) == (4, 2) {
            return Self::default_u4_v2();
        }
        let rows = combinations(cfg.u, cfg.v).into_iter().take(cfg.patterns()).collect();
        Self { u: cfg.u, rows }
    }

    pub fn from_rows(u: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.is_empty() || !rows.len().is_power_of_two() {
            return Err(Error::Config(format!("lookup table needs 2^k rows, got {}", rows.len())));
        }
        let v = rows[0].len();
        for row in &rows {
            if row.len() != v || row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&i| i >= u) {
                return Err(Error::Config(format!("invalid lookup row {row:?}")));
            }
        }
        let mut sorted = rows.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != rows.len() {
            return Err(Error::Config("lookup table rows must be distinct".into()));
        }
        Ok(Self { u, rows })
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &[usize] {
        &self.rows[index]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `bits,indices` CSV with space-separated 1-based indices.
    pub fn to_csv(&self) -> String {
        let width = floor_log2(self.rows.len());
        let mut out = String::from("bits,indices\n");
        for (i, row) in self.rows.iter().enumerate() {
            let bits: String = to_bits(i, width).iter().map(|b| char::from(b'0' + b)).collect();
            let idx: Vec<String> = row.iter().map(|j| (j + 1).to_string()).collect();
            let _ = writeln!(out, "{bits},{}", idx.join(" "));
        }
        out
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(n, k));
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    Qam4,
}

/// Unit-average-energy constellation. BPSK maps `0→+1, 1→−1`; 4-QAM is
/// Gray labelled `(b₁b₂) → ((±1) + j(±1))/√2`, with `b₁` the real sign and
/// `b₂` the imaginary sign, `0→+`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let points = match modulation {
            Modulation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            Modulation::Qam4 => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                (0..4)
                    .map(|label| {
                        let re = if label & 0b10 == 0 { s } else { -s };
                        let im = if label & 0b01 == 0 { s } else { -s };
                        Complex64::new(re, im)
                    })
                    .collect()
            }
        };
        Self { modulation, points }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.points.len().trailing_zeros() as usize
    }

    /// Points indexed by their big-endian bit label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn map(&self, bits: &[Bit]) -> Result<Complex64> {
        if bits.len() != self.bits_per_symbol() {
            return Err(Error::BitCount {
                expected: self.bits_per_symbol(),
                got: bits.len(),
            });
        }
        Ok(self.points[from_bits(bits)])
    }

    /// Nearest-point inverse of [`Constellation::map`].
    pub fn demap(&self, z: Complex64) -> Vec<Bit> {
        let best = self
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| (z - a.1).norm_sqr().total_cmp(&(z - b.1).norm_sqr()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        to_bits(best, self.bits_per_symbol())
    }
}

/// One encoded group: its message and the `u`-length subblock.
#[derive(Clone, Debug, PartialEq)]
pub struct ImGroup {
    pub bits: Vec<Bit>,
    pub symbols: Vec<Complex64>,
}

pub fn im_group_encode(
    bits: &[Bit],
    cfg: &ImConfig,
    table: &ImLookupTable,
    constellation: &Constellation,
) -> Result<ImGroup> {
    let p = cfg.bits_per_group();
    if bits.len() != p {
        return Err(Error::BitCount {
            expected: p,
            got: bits.len(),
        });
    }
    if table.len() != cfg.patterns() || table.u != cfg.u || table.row(0).len() != cfg.v {
        return Err(Error::Dimension(format!(
            "lookup table ({} rows of {}) does not fit u={}, v={}",
            table.len(),
            table.row(0).len(),
            cfg.u,
            cfg.v
        )));
    }
    let (index_bits, symbol_bits) = bits.split_at(cfg.index_bits());
    let mut symbols = vec![Complex64::zero(); cfg.u];
    let per_symbol = constellation.bits_per_symbol();
    for (&pos, chunk) in table.row(from_bits(index_bits)).iter().zip(symbol_bits.chunks(per_symbol)) {
        symbols[pos] = constellation.map(chunk)?;
    }
    Ok(ImGroup {
        bits: bits.to_vec(),
        symbols,
    })
}

/// Exhaustive minimum-distance decision over all `αQ^v` hypotheses, ties
/// resolved toward the lowest message value.
pub fn im_group_decode_mindist(
    phi: &[Complex64],
    cfg: &ImConfig,
    table: &ImLookupTable,
    constellation: &Constellation,
) -> Result<Vec<Bit>> {
    ImCodec::with_parts(*cfg, table.clone(), constellation.clone())?.decode_mindist(phi)
}

/// Encoder/decoder with the full hypothesis codebook precomputed; entry `i`
/// of the codebook is the subblock for message value `i`.
#[derive(Clone, Debug)]
pub struct ImCodec {
    cfg: ImConfig,
    table: ImLookupTable,
    constellation: Constellation,
    codebook: Vec<Vec<Complex64>>,
}

impl ImCodec {
    pub fn new(cfg: ImConfig) -> Result<Self> {
        Self::with_parts(cfg, ImLookupTable::for_config(&cfg), Constellation::new(cfg.modulation()))
    }

    pub fn with_parts(cfg: ImConfig, table: ImLookupTable, constellation: Constellation) -> Result<Self> {
        let p = cfg.bits_per_group();
        let codebook = (0..cfg.candidates())
            .map(|m| im_group_encode(&to_bits(m, p), &cfg, &table, &constellation).map(|g| g.symbols))
            .collect::<Result<_>>()?;
        Ok(Self {
            cfg,
            table,
            constellation,
            codebook,
        })
    }

    pub fn config(&self) -> &ImConfig {
        &self.cfg
    }

    pub fn table(&self) -> &ImLookupTable {
        &self.table
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn codebook(&self) -> &[Vec<Complex64>] {
        &self.codebook
    }

    pub fn encode(&self, bits: &[Bit]) -> Result<ImGroup> {
        let p = self.cfg.bits_per_group();
        if bits.len() != p {
            return Err(Error::BitCount {
                expected: p,
                got: bits.len(),
            });
        }
        Ok(ImGroup {
            bits: bits.to_vec(),
            symbols: self.codebook[from_bits(bits)].clone(),
        })
    }

    /// Message value of the nearest codeword.
    pub fn nearest(&self, phi: &[Complex64]) -> Result<usize> {
        if phi.len() != self.cfg.u {
            return Err(Error::Dimension(format!(
                "subblock has {} entries, expected u = {}",
                phi.len(),
                self.cfg.u
            )));
        }
        let mut best = (0, f64::INFINITY);
        for (m, cand) in self.codebook.iter().enumerate() {
            let d: f64 = phi.iter().zip(cand).map(|(a, b)| (a - b).norm_sqr()).sum();
            if d < best.1 {
                best = (m, d);
            }
        }
        Ok(best.0)
    }

    pub fn decode_mindist(&self, phi: &[Complex64]) -> Result<Vec<Bit>> {
        Ok(to_bits(self.nearest(phi)?, self.cfg.bits_per_group()))
    }
}

/// Places `L` subblocks contiguously into an `N`-length block.
pub fn gfdm_symbol_assemble(groups: &[ImGroup], n: usize) -> Result<Vec<Complex64>> {
    let total: usize = groups.iter().map(|g| g.symbols.len()).sum();
    if total != n || groups.windows(2).any(|w| w[0].symbols.len() != w[1].symbols.len()) {
        return Err(Error::Dimension(format!(
            "{} groups totalling {total} subcarriers do not fill N = {n}",
            groups.len()
        )));
    }
    Ok(groups.iter().flat_map(|g| g.symbols.iter().copied()).collect())
}

/// Inverse of [`gfdm_symbol_assemble`]: the `u`-length subblocks of `d`.
pub fn gfdm_symbol_split(d: &[Complex64], u: usize) -> Result<Vec<Vec<Complex64>>> {
    if u == 0 || !d.len().is_multiple_of(u) {
        return Err(Error::Dimension(format!("block of {} is not a multiple of u = {u}", d.len())));
    }
    Ok(d.chunks(u).map(<[Complex64]>::to_vec).collect())
}
