//! Block-fading Rayleigh multipath generation, CP-aware propagation and
//! AWGN injection at a specified Eb/N0.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ofdm::TdFrame;
use crate::sigproc::FirTaps;

/// One block-fading draw: the FIR taps (first path exactly one) and the
/// power-delay profile they were drawn from.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    h: FirTaps,
    pdp: Vec<f64>,
}

impl ChannelRealization {
    pub fn taps(&self) -> &FirTaps {
        &self.h
    }

    pub fn pdp(&self) -> &[f64] {
        &self.pdp
    }
}

/// Noise level description: Eb/N0 in dB plus the bits carried per symbol.
/// An infinite `eb_n0_db` is the noiseless sentinel.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub eb_n0_db: f64,
    pub bits_per_symbol: u32,
}

/// Exponential power-delay profile `exp(-k / decay)` over `l + 1` taps,
/// normalized to unit total power.
pub fn exponential_pdp(l: usize, decay: f64) -> Vec<f64> {
    let mut pdp: Vec<f64> = (0..=l).map(|k| (-(k as f64) / decay).exp()).collect();
    let total: f64 = pdp.iter().sum();
    for p in &mut pdp {
        *p /= total;
    }
    pdp
}

/// Draws `l + 1` circular complex Gaussian taps with per-tap variance
/// `pdp[k]`, then normalizes so the first path is exactly one.
pub fn draw_channel(rng: &mut impl Rng, l: usize, pdp: &[f64]) -> Result<ChannelRealization> {
    if pdp.len() != l + 1 {
        return Err(Error::LengthMismatch {
            expected: l + 1,
            got: pdp.len(),
        });
    }
    if pdp.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter(
            "power-delay profile entries must be positive and finite".into(),
        ));
    }
    loop {
        let raw: Vec<Complex64> = pdp
            .iter()
            .map(|&power| {
                let sigma = (power / 2.0).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(sigma * re, sigma * im)
            })
            .collect();
        // Guard the normalizing division against a vanishing first path.
        if raw[0].norm() < 1e-8 {
            continue;
        }
        let mut taps = vec![Complex64::new(1.0, 0.0)];
        taps.extend(raw[1..].iter().map(|g| g / raw[0]));
        return Ok(ChannelRealization {
            h: FirTaps::new(taps)?,
            pdp: pdp.to_vec(),
        });
    }
}

/// Convolves the CP-prefixed frame with the channel FIR. Samples needed from
/// before the frame start come from the frame's own cyclic extension, so the
/// last N outputs equal the circular convolution of the last N inputs
/// exactly, and the output keeps the CP structure.
pub fn propagate(frame: &TdFrame, ch: &ChannelRealization) -> Result<TdFrame> {
    let taps = ch.taps().taps();
    let l = ch.taps().order();
    if l + 1 > frame.cp_len() {
        return Err(Error::FirTooLong {
            order: l,
            block: frame.cp_len(),
        });
    }
    let n = frame.fft_len();
    let l_cp = frame.cp_len();
    let body = &frame.samples()[l_cp..];
    let out = (0..n + l_cp)
        .map(|pos| {
            // Time index relative to the FFT window start, kept nonnegative
            // for the modulo by adding full periods.
            let t = pos + 2 * n - l_cp;
            taps.iter()
                .enumerate()
                .map(|(k, hk)| hk * body[(t - k) % n])
                .sum()
        })
        .collect();
    Ok(TdFrame::unchecked(out, n, l_cp))
}

/// Adds white Gaussian noise scaled for the requested Eb/N0: the per-sample
/// complex variance is `P_sig / (bits_per_symbol * 10^(EbN0/10))` with
/// `P_sig` the empirical mean power of the input, split evenly between the
/// real and imaginary parts.
pub fn add_awgn(frame: &TdFrame, spec: &NoiseSpec, rng: &mut impl Rng) -> TdFrame {
    if spec.eb_n0_db.is_infinite() && spec.eb_n0_db > 0.0 {
        return frame.clone();
    }
    let len = frame.samples().len();
    let p_sig = frame.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() / len as f64;
    let variance = p_sig / (spec.bits_per_symbol as f64 * 10f64.powf(spec.eb_n0_db / 10.0));
    let sigma = (variance / 2.0).sqrt();
    let noisy = frame
        .samples()
        .iter()
        .map(|&z| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            z + Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    TdFrame::unchecked(noisy, frame.fft_len(), frame.cp_len())
}
