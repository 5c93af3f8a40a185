//! One configured SMX-IM link: transmitter, channel and receivers.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{build_block_channel, draw_channel, transmit, BlockChannel, NoiseSpec, PowerDelayProfile};
use crate::detect::{classical_zf_detect, joint_ml_detect, split_subblocks, zf_coarse, CoarseOutput, FrameLayout};
use crate::error::{Error, Result};
use crate::im::{gfdm_symbol_assemble, Bit, ImCodec};
use crate::linalg::ComplexMatrix;
use crate::modem::{build_gfdm_matrix, build_prototype_rc};
use crate::neural::{subblock_input, threshold_bits, Workspace};
use crate::{DeepExample, DeepModel};

use super::config::SystemConfig;

/// A simulated frame: source bits, channel realization and observation.
#[derive(Clone, Debug)]
pub struct Frame {
    pub bits: Vec<Bit>,
    pub channel: BlockChannel,
    pub y: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct Link {
    system: SystemConfig,
    a: ComplexMatrix<f64>,
    codec: ImCodec,
    layout: FrameLayout,
    pdp: PowerDelayProfile,
}

impl Link {
    pub fn new(system: &SystemConfig) -> Result<Self> {
        system.validate()?;
        let wf = system.waveform()?;
        let g = build_prototype_rc::<f64>(&wf)?;
        let a = build_gfdm_matrix(&g, &wf)?;
        let codec = ImCodec::new(system.im()?)?;
        let layout = FrameLayout::new(system.t, system.groups(), codec.config().bits_per_group());
        let pdp = PowerDelayProfile::named(system.pdp, system.n_ch)?;
        Ok(Self {
            system: system.clone(),
            a,
            codec,
            layout,
            pdp,
        })
    }

    pub fn system(&self) -> &SystemConfig {
        &self.system
    }

    pub fn modulation_matrix(&self) -> &ComplexMatrix<f64> {
        &self.a
    }

    pub fn codec(&self) -> &ImCodec {
        &self.codec
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn pdp(&self) -> &PowerDelayProfile {
        &self.pdp
    }

    pub fn frame_bits(&self) -> usize {
        self.layout.frame_bits()
    }

    pub fn random_bits<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Bit> {
        (0..self.frame_bits()).map(|_| Bit::from(rng.random::<bool>())).collect()
    }

    /// Stacked data vectors `[d_1; …; d_T]` of a frame.
    pub fn modulate(&self, bits: &[Bit]) -> Result<Vec<Complex64>> {
        if bits.len() != self.frame_bits() {
            return Err(Error::BitCount {
                expected: self.frame_bits(),
                got: bits.len(),
            });
        }
        let n = self.system.n();
        let mut d = Vec::with_capacity(self.system.t * n);
        for t in 0..self.system.t {
            let groups = (0..self.layout.groups)
                .map(|l| self.codec.encode(self.layout.slot(bits, t, l)))
                .collect::<Result<Vec<_>>>()?;
            d.extend(gfdm_symbol_assemble(&groups, n)?);
        }
        Ok(d)
    }

    pub fn draw_block_channel<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BlockChannel> {
        let ch = draw_channel(self.system.r, self.system.t, &self.pdp, rng);
        build_block_channel(&ch, &self.a)
    }

    /// Draws bits, then the channel, then the noise, in that order.
    pub fn simulate_frame<R: Rng + ?Sized>(&self, rng: &mut R, noise: Option<&NoiseSpec>) -> Result<Frame> {
        let bits = self.random_bits(rng);
        let channel = self.draw_block_channel(rng)?;
        let y = transmit(&self.modulate(&bits)?, &channel, noise, rng)?;
        Ok(Frame { bits, channel, y })
    }

    pub fn coarse(&self, frame: &Frame) -> Result<CoarseOutput> {
        zf_coarse(&frame.channel, &frame.y)
    }

    pub fn detect_zf(&self, psi: &CoarseOutput) -> Result<Vec<Bit>> {
        classical_zf_detect(psi, &self.codec)
    }

    pub fn detect_ml(&self, frame: &Frame, guard: u64) -> Result<Vec<Bit>> {
        joint_ml_detect(&frame.y, &frame.channel, &self.codec, guard)
    }

    /// Fine-detector input tensors of all `L` subblocks.
    pub fn subblock_inputs(&self, psi: &CoarseOutput) -> Result<Vec<Vec<f32>>> {
        (0..self.layout.groups)
            .map(|l| Ok(subblock_input(&split_subblocks(psi, l, self.system.u)?)))
            .collect()
    }

    /// Training pairs of one frame, one per group.
    pub fn training_examples(&self, frame: &Frame) -> Result<Vec<DeepExample>> {
        let psi = self.coarse(frame)?;
        let targets = self.layout.split_bits(&frame.bits)?;
        (0..self.layout.groups)
            .map(|l| Ok(DeepExample::from_subblock(&split_subblocks(&psi, l, self.system.u)?, &targets[l])))
            .collect()
    }

    pub fn check_model(&self, model: &DeepModel) -> Result<()> {
        let d = model.dims();
        let p = self.codec.config().bits_per_group();
        if d.t != self.system.t || d.u != self.system.u || d.p != p {
            return Err(Error::Dimension(format!(
                "model expects t={}, u={}, p={} but the link has t={}, u={}, p={p}",
                d.t, d.u, d.p, self.system.t, self.system.u
            )));
        }
        Ok(())
    }

    /// Two-stage detection of several frames with one batched forward pass.
    pub fn detect_deep(&self, model: &DeepModel, psis: &[CoarseOutput], ws: &mut Workspace<f32>) -> Result<Vec<Vec<Bit>>> {
        self.check_model(model)?;
        if psis.is_empty() {
            return Ok(Vec::new());
        }
        let inputs = psis
            .iter()
            .map(|psi| self.subblock_inputs(psi))
            .collect::<Result<Vec<_>>>()?;
        let flat: Vec<&[f32]> = inputs.iter().flatten().map(Vec::as_slice).collect();
        ws.forward(model, flat.into_iter())?;
        let out_len = model.dims().output_len();
        let groups = self.layout.groups;
        (0..psis.len())
            .map(|fi| {
                let per_group: Vec<Vec<Bit>> = (0..groups)
                    .map(|l| threshold_bits(&ws.output(fi * groups + l, out_len)))
                    .collect();
                self.layout.combine_bits(&per_group)
            })
            .collect()
    }
}
