use rand::Rng;

use crate::detect::SubblockMatrix;
use crate::error::{Error, Result};
use crate::im::Bit;
use crate::scalar::Real;

/// Architecture dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    /// Transmit antennas.
    pub t: usize,
    /// Subcarriers per group.
    pub u: usize,
    /// Bits per group and antenna.
    pub p: usize,
    /// Convolution kernels.
    pub f: usize,
    /// Hidden width of the fully connected stage.
    pub tau: usize,
}

impl ModelDims {
    /// Input channels of the convolution: real and imaginary part per antenna.
    pub fn channels(&self) -> usize {
        2 * self.t
    }

    pub fn input_len(&self) -> usize {
        2 * self.t * self.u
    }

    /// Length of the flattened convolution output, `u·F`.
    pub fn flat_len(&self) -> usize {
        self.u * self.f
    }

    pub fn output_len(&self) -> usize {
        self.p * self.t
    }

    /// Offset of `(γ, part, t)` in an input tensor of shape `(u, 2, T)`;
    /// `part` is 0 for the real and 1 for the imaginary component.
    pub fn input_index(&self, gamma: usize, part: usize, t: usize) -> usize {
        gamma * 2 * self.t + part * self.t + t
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.u == 0 || self.p == 0 || self.f == 0 || self.tau == 0 {
            return Err(Error::Config(format!("model dimensions must be positive, got {self:?}")));
        }
        Ok(())
    }
}

/// Trainable tensors, all row-major.
///
/// * `w`: `F × 2T`, column `2t` weights `Re ψ_t`, column `2t+1` weights `Im ψ_t`
/// * `c`: `F`
/// * `a1`: `τ × uF`, columns in flatten order `f·u + γ`
/// * `b1`: `τ`
/// * `a2`: `pT × τ`
/// * `b2`: `pT`
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T> {
    pub w: Vec<T>,
    pub c: Vec<T>,
    pub a1: Vec<T>,
    pub b1: Vec<T>,
    pub a2: Vec<T>,
    pub b2: Vec<T>,
}

impl<T: Real> Params<T> {
    pub const NAMES: [&'static str; 6] = ["w", "c", "a1", "b1", "a2", "b2"];

    pub fn zeros(d: &ModelDims) -> Self {
        Self {
            w: vec![T::zero(); d.f * d.channels()],
            c: vec![T::zero(); d.f],
            a1: vec![T::zero(); d.tau * d.flat_len()],
            b1: vec![T::zero(); d.tau],
            a2: vec![T::zero(); d.output_len() * d.tau],
            b2: vec![T::zero(); d.output_len()],
        }
    }

    pub fn groups(&self) -> [&[T]; 6] {
        [&self.w, &self.c, &self.a1, &self.b1, &self.a2, &self.b2]
    }

    pub fn groups_mut(&mut self) -> [&mut Vec<T>; 6] {
        [&mut self.w, &mut self.c, &mut self.a1, &mut self.b1, &mut self.a2, &mut self.b2]
    }

    pub fn len(&self) -> usize {
        self.groups().iter().map(|g| g.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape_matches(&self, d: &ModelDims) -> bool {
        let z = Self::zeros(d);
        let same = self.groups().iter().zip(z.groups()).all(|(a, b)| a.len() == b.len());
        same
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|g| g.iter().all(|x| x.is_finite()))
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::lit(x.to_f64().unwrap_or(f64::NAN))).collect();
        Params {
            w: conv(&self.w),
            c: conv(&self.c),
            a1: conv(&self.a1),
            b1: conv(&self.b1),
            a2: conv(&self.a2),
            b2: conv(&self.b2),
        }
    }
}

/// The fine stage: a width-1 convolution over the `u` positions of a
/// subblock followed by a two-layer fully connected network.
#[derive(Clone, Debug, PartialEq)]
pub struct FineDetectorModel<T> {
    dims: ModelDims,
    params: Params<T>,
}

pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<T: Real> FineDetectorModel<T> {
    pub fn zeros(dims: ModelDims) -> Result<Self> {
        dims.validate()?;
        Ok(Self {
            params: Params::zeros(&dims),
            dims,
        })
    }

    pub fn from_params(dims: ModelDims, params: Params<T>) -> Result<Self> {
        dims.validate()?;
        if !params.shape_matches(&dims) {
            return Err(Error::Dimension(format!("parameter shapes do not match {dims:?}")));
        }
        if !params.is_finite() {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        Ok(Self { dims, params })
    }

    /// Zero-mean uniform initialization on `±1/√fan_in` per layer.
    pub fn random<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(dims)?;
        let fan_in = [dims.channels(), dims.channels(), dims.flat_len(), dims.flat_len(), dims.tau, dims.tau];
        for (group, fan) in model.params.groups_mut().into_iter().zip(fan_in) {
            let bound = 1.0 / (fan as f64).sqrt();
            for x in group.iter_mut() {
                *x = T::lit(rng.random_range(-bound..bound));
            }
        }
        Ok(model)
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    pub fn cast<U: Real>(&self) -> FineDetectorModel<U> {
        FineDetectorModel {
            dims: self.dims,
            params: self.params.cast(),
        }
    }

    fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
        if got != want {
            return Err(Error::Dimension(format!("{what} has length {got}, model expects {want}")));
        }
        Ok(())
    }

    /// `Θ` as an `F×u` row-major matrix, which is also the flattened
    /// feature-major vector `[θ₁(1)…θ₁(u), …, θ_F(1)…θ_F(u)]`.
    pub fn cnn_forward(&self, input: &[T]) -> Result<Vec<T>> {
        let d = &self.dims;
        Self::check_len("input", input.len(), d.input_len())?;
        let ch = d.channels();
        let mut theta = Vec::with_capacity(d.flat_len());
        for f in 0..d.f {
            let kernel = &self.params.w[f * ch..(f + 1) * ch];
            for gamma in 0..d.u {
                let mut acc = self.params.c[f];
                for t in 0..d.t {
                    acc += input[d.input_index(gamma, 0, t)] * kernel[2 * t]
                        + input[d.input_index(gamma, 1, t)] * kernel[2 * t + 1];
                }
                theta.push(acc.tanh());
            }
        }
        Ok(theta)
    }

    /// `ŝ = σ(a₂·tanh(a₁θ + b₁) + b₂)`.
    pub fn fcnn_forward(&self, theta: &[T]) -> Result<Vec<T>> {
        let d = &self.dims;
        Self::check_len("flattened feature vector", theta.len(), d.flat_len())?;
        let flat = d.flat_len();
        let hidden: Vec<T> = (0..d.tau)
            .map(|i| {
                let row = &self.params.a1[i * flat..(i + 1) * flat];
                (row.iter().zip(theta).map(|(&a, &x)| a * x).sum::<T>() + self.params.b1[i]).tanh()
            })
            .collect();
        Ok((0..d.output_len())
            .map(|o| {
                let row = &self.params.a2[o * d.tau..(o + 1) * d.tau];
                sigmoid(row.iter().zip(&hidden).map(|(&a, &h)| a * h).sum::<T>() + self.params.b2[o])
            })
            .collect())
    }

    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        self.fcnn_forward(&self.cnn_forward(input)?)
    }

    /// Hard bits, `ŝ ≥ 0.5 → 1`.
    pub fn detect_bits(&self, input: &[T]) -> Result<Vec<Bit>> {
        Ok(threshold_bits(&self.forward(input)?))
    }
}

pub fn threshold_bits<T: Real>(soft: &[T]) -> Vec<Bit> {
    let half = T::lit(0.5);
    soft.iter().map(|&s| Bit::from(s >= half)).collect()
}

/// Real `(u, 2, T)` input tensor of a subblock.
pub fn subblock_input<T: Real>(psi: &SubblockMatrix) -> Vec<T> {
    let (t_ant, u) = (psi.antennas(), psi.width());
    let mut out = vec![T::zero(); 2 * t_ant * u];
    for gamma in 0..u {
        for t in 0..t_ant {
            let z = psi.get(t, gamma);
            out[gamma * 2 * t_ant + t] = T::lit(z.re);
            out[gamma * 2 * t_ant + t_ant + t] = T::lit(z.im);
        }
    }
    out
}

/// Euclidean loss `‖s − ŝ‖`.
pub fn loss_eval<T: Real>(s: &[T], s_hat: &[T]) -> Result<T> {
    if s.len() != s_hat.len() {
        return Err(Error::Dimension(format!("loss of lengths {} and {}", s.len(), s_hat.len())));
    }
    Ok(s.iter().zip(s_hat).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt())
}

/// One supervised pair: subblock tensor and its `pT` target bits.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample<T> {
    pub input: Vec<T>,
    pub target: Vec<T>,
}

impl<T: Real> TrainingExample<T> {
    pub fn from_subblock(psi: &SubblockMatrix, bits: &[Bit]) -> Self {
        Self {
            input: subblock_input(psi),
            target: bits.iter().map(|&b| T::lit(f64::from(b))).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> TrainingExample<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::lit(x.to_f64().unwrap_or(f64::NAN))).collect();
        TrainingExample {
            input: conv(&self.input),
            target: conv(&self.target),
        }
    }
}
