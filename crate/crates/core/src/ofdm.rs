//! Training-frame construction: Gray-mapped square QAM, the conjugate
//! anti-symmetric pilot layout, IDFT modulation and cyclic-prefix handling.
//!
//! The anti-symmetric subset B is the odd subcarriers: the odd set is closed
//! under `k -> N - k` for even N and excludes the self-mirrored indices 0 and
//! N/2, so `S[N-k] = -conj(S[k])` can hold for every k in B. Even subcarriers
//! carry independent QAM training data so the regression stage sees a
//! full-band excitation.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sigproc::{idft, ComplexSequence};

/// Frequency-domain training symbol with its conjugate anti-symmetric
/// subcarrier subset.
#[derive(Debug, Clone)]
pub struct PilotSymbol {
    s: ComplexSequence,
    b: Vec<usize>,
    n: usize,
    constellation_order: usize,
}

impl PilotSymbol {
    /// Frequency-domain symbols `S[0..N-1]`.
    pub fn s(&self) -> &ComplexSequence {
        &self.s
    }

    /// The conjugate anti-symmetric subcarrier indices, ascending.
    pub fn anti_symmetric_bins(&self) -> &[usize] {
        &self.b
    }

    pub fn fft_len(&self) -> usize {
        self.n
    }

    pub fn constellation_order(&self) -> usize {
        self.constellation_order
    }

    /// Mirror image `s_bar[k] = S[(N-k) mod N]`.
    pub fn mirror(&self) -> ComplexSequence {
        let n = self.n;
        ComplexSequence::unchecked((0..n).map(|k| self.s[(n - k) % n]).collect())
    }
}

/// Time-domain frame of `n + l_cp` samples, the cyclic prefix first.
///
/// Frames produced by `modulate` satisfy `samples[i] == samples[i + n]` for
/// `i < l_cp`; additive noise on a received frame deliberately breaks that
/// copy structure, so it is not enforced here.
#[derive(Debug, Clone, PartialEq)]
pub struct TdFrame {
    samples: Vec<Complex64>,
    n: usize,
    l_cp: usize,
}

impl TdFrame {
    pub fn new(samples: Vec<Complex64>, n: usize, l_cp: usize) -> Result<Self> {
        if samples.len() != n + l_cp {
            return Err(Error::LengthMismatch {
                expected: n + l_cp,
                got: samples.len(),
            });
        }
        if let Some(i) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self { samples, n, l_cp })
    }

    pub(crate) fn unchecked(samples: Vec<Complex64>, n: usize, l_cp: usize) -> Self {
        debug_assert_eq!(samples.len(), n + l_cp);
        Self { samples, n, l_cp }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn fft_len(&self) -> usize {
        self.n
    }

    pub fn cp_len(&self) -> usize {
        self.l_cp
    }

    /// Applies `f` elementwise, keeping the frame geometry.
    pub(crate) fn map(&self, f: impl Fn(Complex64) -> Complex64) -> TdFrame {
        TdFrame::unchecked(self.samples.iter().map(|&z| f(z)).collect(), self.n, self.l_cp)
    }
}

fn bits_per_symbol(m: usize) -> Result<u32> {
    match m {
        4 => Ok(2),
        16 => Ok(4),
        64 => Ok(6),
        _ => Err(Error::UnsupportedConstellation(m)),
    }
}

/// Gray-coded PAM level for one axis: `bits` most-significant-first.
fn gray_level(bits: u32, width: u32) -> f64 {
    // Gray decode, then map 0..2^w-1 onto -(2^w-1)..+(2^w-1) step 2.
    let mut value = bits;
    let mut shift = width / 2 + (width & 1);
    while shift > 0 {
        value ^= value >> shift;
        shift /= 2;
    }
    (2 * value) as f64 - ((1u32 << width) - 1) as f64
}

fn qam_scale(m: usize) -> f64 {
    // Unit average power for the square constellation: E|p|^2 = 2(M-1)/3.
    (2.0 * (m as f64 - 1.0) / 3.0).sqrt().recip()
}

/// Maps the symbol index (bits most-significant-first, I axis in the high
/// half) onto the unit-average-power Gray constellation.
fn qam_point(index: u32, m: usize) -> Complex64 {
    let bps = bits_per_symbol(m).expect("validated order");
    let half = bps / 2;
    let i_bits = index >> half;
    let q_bits = index & ((1 << half) - 1);
    let scale = qam_scale(m);
    Complex64::new(gray_level(i_bits, half) * scale, gray_level(q_bits, half) * scale)
}

/// Gray-mapped square M-QAM with unit average constellation power.
pub fn qam_map(bits: &[u8], m: usize) -> Result<ComplexSequence> {
    let bps = bits_per_symbol(m)?;
    if bits.is_empty() || bits.len() % bps as usize != 0 {
        return Err(Error::BitCount {
            bits: bits.len(),
            bits_per_symbol: bps,
        });
    }
    let points = bits
        .chunks(bps as usize)
        .map(|chunk| {
            let index = chunk
                .iter()
                .fold(0u32, |acc, &b| (acc << 1) | u32::from(b != 0));
            qam_point(index, m)
        })
        .collect();
    Ok(ComplexSequence::unchecked(points))
}

fn draw_qam(rng: &mut impl Rng, m: usize) -> Complex64 {
    let bps = bits_per_symbol(m).expect("validated order");
    qam_point(rng.gen_range(0..(1u32 << bps)), m)
}

/// Builds one training symbol: every odd subcarrier pair `(k, N-k)` carries a
/// fresh QAM draw and its negated conjugate, every even subcarrier an
/// independent QAM draw.
pub fn build_pilot_symbol(rng: &mut impl Rng, n: usize, m: usize) -> Result<PilotSymbol> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "FFT length must be a power of two >= 8, got {n}"
        )));
    }
    bits_per_symbol(m)?;

    let mut s = vec![Complex64::new(0.0, 0.0); n];
    for k in (1..n / 2).step_by(2) {
        let point = draw_qam(rng, m);
        s[k] = point;
        s[n - k] = -point.conj();
    }
    for k in (0..n).step_by(2) {
        s[k] = draw_qam(rng, m);
    }

    let b = (1..n).step_by(2).collect();
    Ok(PilotSymbol {
        s: ComplexSequence::unchecked(s),
        b,
        n,
        constellation_order: m,
    })
}

/// IDFT modulation with cyclic-prefix insertion: the last `l_cp` time-domain
/// samples are copied in front.
pub fn modulate(pilot: &PilotSymbol, l_cp: usize) -> Result<TdFrame> {
    let n = pilot.fft_len();
    if l_cp >= n {
        return Err(Error::InvalidParameter(format!(
            "cyclic prefix {l_cp} must be shorter than the FFT length {n}"
        )));
    }
    let u = idft(pilot.s());
    let mut samples = Vec::with_capacity(n + l_cp);
    samples.extend_from_slice(&u[n - l_cp..]);
    samples.extend_from_slice(&u);
    Ok(TdFrame::unchecked(samples, n, l_cp))
}

/// Drops the cyclic prefix, returning the last N samples.
pub fn remove_cp(frame: &TdFrame) -> ComplexSequence {
    ComplexSequence::unchecked(frame.samples()[frame.cp_len()..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn qam16_corner_point() {
        let out = qam_map(&[0, 0, 0, 0], 16).unwrap();
        let expected = c(-3.0, -3.0) / 10f64.sqrt();
        assert!((out[0] - expected).norm() < 1e-12);
    }

    #[test]
    fn qpsk_points_gray_adjacent() {
        let out = qam_map(&[0, 0, 0, 1, 1, 1, 1, 0], 4).unwrap();
        let s = 2f64.sqrt();
        let expected = [c(-1.0, -1.0), c(-1.0, 1.0), c(1.0, 1.0), c(1.0, -1.0)];
        for (got, want) in out.iter().zip(expected.iter()) {
            assert!((got - want / s).norm() < 1e-12);
        }
        // Consecutive Gray codes differ in exactly one axis step.
        for pair in out.windows(2) {
            let d = pair[1] - pair[0];
            assert!((d.re.abs() < 1e-12) ^ (d.im.abs() < 1e-12));
        }
    }

    #[test]
    fn qam_constellations_have_unit_average_power() {
        for &m in &[4usize, 16, 64] {
            let mean_power: f64 = (0..m as u32)
                .map(|idx| qam_point(idx, m).norm_sqr())
                .sum::<f64>()
                / m as f64;
            assert!(
                (mean_power - 1.0).abs() < 1e-12,
                "M={m} mean power {mean_power}"
            );
        }
    }

    #[test]
    fn qam_rejects_ragged_bits() {
        assert!(matches!(
            qam_map(&[0, 1, 0], 16),
            Err(Error::BitCount { .. })
        ));
        assert!(matches!(
            qam_map(&[0, 1], 8),
            Err(Error::UnsupportedConstellation(8))
        ));
    }

    #[test]
    fn pilot_anti_symmetry_is_exact() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let pilot = build_pilot_symbol(&mut rng, 64, 16).unwrap();
        let s = pilot.s();
        let n = pilot.fft_len();
        for &k in pilot.anti_symmetric_bins() {
            let mirror = s[(n - k) % n];
            assert_eq!(s[k] + mirror.conj(), c(0.0, 0.0), "bin {k}");
            assert_eq!(s[k] - (-s[k].conj()).conj(), 2.0 * s[k], "bin {k}");
        }
        // 0 and N/2 are not in B.
        assert!(!pilot.anti_symmetric_bins().contains(&0));
        assert!(!pilot.anti_symmetric_bins().contains(&(n / 2)));
    }

    #[test]
    fn pilot_mirror_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let pilot = build_pilot_symbol(&mut rng, 32, 16).unwrap();
        let mirror = pilot.mirror();
        let n = pilot.fft_len();
        for k in 0..n {
            assert_eq!(mirror[k], pilot.s()[(n - k) % n]);
        }
    }

    #[test]
    fn pilot_antisymmetric_example() {
        // S[k] = 1 + j on an odd bin forces S[N-k] = -1 + j.
        let point = c(1.0, 1.0);
        assert_eq!(-point.conj(), c(-1.0, 1.0));
    }

    #[test]
    fn modulate_dc_subcarrier_gives_flat_frame() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut pilot = build_pilot_symbol(&mut rng, 16, 16).unwrap();
        let n = pilot.fft_len();
        pilot.s = ComplexSequence::new({
            let mut v = vec![c(0.0, 0.0); n];
            v[0] = c(n as f64, 0.0);
            v
        })
        .unwrap();
        let frame = modulate(&pilot, 4).unwrap();
        assert_eq!(frame.samples().len(), n + 4);
        for z in frame.samples() {
            assert!((z - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn modulate_frame_geometry_and_tail_copy() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let pilot = build_pilot_symbol(&mut rng, 2048, 16).unwrap();
        let frame = modulate(&pilot, 512).unwrap();
        assert_eq!(frame.samples().len(), 2560);
        for i in 0..frame.cp_len() {
            assert_eq!(frame.samples()[i], frame.samples()[i + frame.fft_len()]);
        }
    }

    #[test]
    fn remove_cp_inverts_modulate_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let pilot = build_pilot_symbol(&mut rng, 256, 16).unwrap();
        let frame = modulate(&pilot, 64).unwrap();
        let u = idft(pilot.s());
        let recovered = remove_cp(&frame);
        assert_eq!(recovered.len(), 256);
        assert_eq!(recovered.as_slice(), u.as_slice());
    }

    #[test]
    fn remove_cp_order_convention() {
        // Prefix-first layout: [c, d, a, b, c, d] with N=4, L_CP=2 recovers [a, b, c, d].
        let u = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        let frame = TdFrame::new(vec![u[2], u[3], u[0], u[1], u[2], u[3]], 4, 2).unwrap();
        assert_eq!(remove_cp(&frame).as_slice(), &u);
    }

    #[test]
    fn tdframe_rejects_bad_length() {
        assert!(matches!(
            TdFrame::new(vec![c(0.0, 0.0); 5], 4, 2),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
