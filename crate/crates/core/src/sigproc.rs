//! Complex-sequence primitives: DFT/IDFT, FIR diagonalization and circular
//! convolution through the circulant identity.
//!
//! Convention: the forward transform is unnormalized,
//! `X[m] = sum_n x[n] exp(-j 2 pi m n / N)`, and the inverse carries the
//! `1/N` factor, so `idft(dft(v)) == v`. Every downstream scale factor in
//! the estimation chain follows from this single choice.

use std::cell::RefCell;
use std::ops::Deref;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

fn first_non_finite(values: &[Complex64]) -> Option<usize> {
    values
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
}

/// Ordered complex baseband samples.
///
/// Construction rejects empty or non-finite input, so the transforms below
/// never see NaN or infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSequence {
    values: Vec<Complex64>,
}

impl ComplexSequence {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(i) = first_non_finite(&values) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self { values })
    }

    /// Construction path for values that are finite by construction.
    pub(crate) fn unchecked(values: Vec<Complex64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(first_non_finite(&values).is_none());
        Self { values }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.values
    }
}

impl Deref for ComplexSequence {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.values
    }
}

/// Finite impulse response `h_0 ... h_L`; the order `L` is in samples of delay.
///
/// `h_0 == 1` is an invariant of channel draws, not of this type: estimated
/// responses carry whatever scale the estimator produced.
#[derive(Debug, Clone, PartialEq)]
pub struct FirTaps {
    taps: Vec<Complex64>,
}

impl FirTaps {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(i) = first_non_finite(&taps) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self { taps })
    }

    /// Single unit tap: the identity channel.
    pub fn identity() -> Self {
        Self {
            taps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Channel order `L` (number of delay samples).
    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }
}

/// Unnormalized forward DFT.
pub fn dft(v: &ComplexSequence) -> ComplexSequence {
    let mut buf = v.as_slice().to_vec();
    plan_forward(buf.len()).process(&mut buf);
    ComplexSequence::unchecked(buf)
}

/// Inverse DFT with the 1/N factor.
pub fn idft(v: &ComplexSequence) -> ComplexSequence {
    let n = v.len();
    let mut buf = v.as_slice().to_vec();
    plan_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for z in &mut buf {
        *z *= scale;
    }
    ComplexSequence::unchecked(buf)
}

/// Diagonal of the DFT-diagonalized circulant of `h`: `h` zero-padded to
/// length `n` and forward-transformed.
pub fn dft_of_fir(h: &FirTaps, n: usize) -> Result<ComplexSequence> {
    if h.order() + 1 > n {
        return Err(Error::FirTooLong {
            order: h.order(),
            block: n,
        });
    }
    let mut padded = h.taps().to_vec();
    padded.resize(n, Complex64::new(0.0, 0.0));
    Ok(dft(&ComplexSequence::unchecked(padded)))
}

/// Applies the circulant matrix of `h` to `x` (circular convolution of the
/// two sequences), evaluated through the frequency domain.
pub fn circulant_apply(h: &FirTaps, x: &ComplexSequence) -> Result<ComplexSequence> {
    let n = x.len();
    let lambda = dft_of_fir(h, n)?;
    let mut fd = dft(x).into_vec();
    for (z, l) in fd.iter_mut().zip(lambda.iter()) {
        *z *= l;
    }
    Ok(idft(&ComplexSequence::unchecked(fd)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_sequence(rng: &mut impl Rng, n: usize) -> ComplexSequence {
        ComplexSequence::new(
            (0..n)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        )
        .unwrap()
    }

    /// Direct O(N^2) transform, the independent oracle for the FFT path.
    fn dft_direct(v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        (0..n)
            .map(|m| {
                (0..n)
                    .map(|k| {
                        let angle = -2.0 * PI * (m * k) as f64 / n as f64;
                        v[k] * c(angle.cos(), angle.sin())
                    })
                    .sum()
            })
            .collect()
    }

    /// Direct circular convolution, the independent summation oracle.
    fn circular_convolve_direct(h: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|out| {
                h.iter()
                    .enumerate()
                    .map(|(k, hk)| hk * x[(out + n - k) % n])
                    .sum()
            })
            .collect()
    }

    fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(
            ComplexSequence::new(vec![]),
            Err(Error::EmptySequence)
        ));
        assert!(matches!(
            ComplexSequence::new(vec![c(1.0, 0.0), c(f64::NAN, 0.0)]),
            Err(Error::NonFiniteSample(1))
        ));
        assert!(matches!(
            FirTaps::new(vec![c(0.0, f64::INFINITY)]),
            Err(Error::NonFiniteSample(0))
        ));
    }

    #[test]
    fn dft_dc_sequence() {
        let v = ComplexSequence::new(vec![c(1.0, 0.0); 4]).unwrap();
        let out = dft(&v);
        assert!((out[0] - c(4.0, 0.0)).norm() < 1e-12);
        for k in 1..4 {
            assert!(out[k].norm() < 1e-12, "bin {k} not zero: {}", out[k]);
        }
    }

    #[test]
    fn dft_impulse_is_flat() {
        let v = ComplexSequence::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let out = dft(&v);
        for k in 0..4 {
            assert!((out[k] - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn idft_dc_subcarrier() {
        let mut v = vec![c(0.0, 0.0); 8];
        v[0] = c(8.0, 0.0);
        let out = idft(&ComplexSequence::new(v).unwrap());
        for z in out.iter() {
            assert!((z - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for &n in &[8usize, 64, 2048] {
            let v = random_sequence(&mut rng, n);
            let back = idft(&dft(&v));
            let scale: f64 = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(
                max_abs_diff(&v, &back) < 1e-10 * scale,
                "round trip failed at N={n}"
            );

            let time_energy: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            let freq_energy: f64 = dft(&v).iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
            assert!(
                (time_energy - freq_energy).abs() < 1e-10 * time_energy,
                "Parseval failed at N={n}"
            );
        }
    }

    #[test]
    fn matches_direct_transform() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for &n in &[8usize, 64] {
            let v = random_sequence(&mut rng, n);
            let fast = dft(&v);
            let slow = dft_direct(&v);
            assert!(max_abs_diff(&fast, &slow) < 1e-10);
        }
    }

    #[test]
    fn dft_of_fir_identity_is_flat() {
        let lambda = dft_of_fir(&FirTaps::identity(), 16).unwrap();
        for z in lambda.iter() {
            assert!((z - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn dft_of_fir_two_point() {
        let h = FirTaps::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let lambda = dft_of_fir(&h, 2).unwrap();
        assert!((lambda[0] - c(0.0, 0.0)).norm() < 1e-12);
        assert!((lambda[1] - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn circulant_identity_channel() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let x = random_sequence(&mut rng, 32);
        let y = circulant_apply(&FirTaps::identity(), &x).unwrap();
        assert!(max_abs_diff(&x, &y) < 1e-12);
    }

    #[test]
    fn circulant_two_path_impulse() {
        let h = FirTaps::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let x = ComplexSequence::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let y = circulant_apply(&h, &x).unwrap();
        let expected = [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(max_abs_diff(&y, &expected) < 1e-12);
    }

    #[test]
    fn circulant_rejects_long_fir() {
        let h = FirTaps::new(vec![c(1.0, 0.0); 5]).unwrap();
        let x = ComplexSequence::new(vec![c(1.0, 0.0); 4]).unwrap();
        assert!(matches!(
            circulant_apply(&h, &x),
            Err(Error::FirTooLong { .. })
        ));
    }

    #[test]
    fn circulant_matches_direct_convolution() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for &n in &[8usize, 64, 2048] {
            let taps: Vec<Complex64> = (0..5.min(n))
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let h = FirTaps::new(taps).unwrap();
            let x = random_sequence(&mut rng, n);
            let fast = circulant_apply(&h, &x).unwrap();
            let slow = circular_convolve_direct(h.taps(), &x);
            let scale: f64 = slow.iter().map(|z| z.norm()).fold(1.0, f64::max);
            assert!(
                max_abs_diff(&fast, &slow) < 1e-10 * scale,
                "convolution mismatch at N={n}"
            );
        }
    }

    #[test]
    fn circulant_diagonalization_property() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for &n in &[8usize, 64, 2048] {
            let taps: Vec<Complex64> = (0..4.min(n))
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let h = FirTaps::new(taps).unwrap();
            let x = random_sequence(&mut rng, n);

            let lhs = dft(&circulant_apply(&h, &x).unwrap());
            let lambda = dft_of_fir(&h, n).unwrap();
            let rhs: Vec<Complex64> = dft(&x)
                .iter()
                .zip(lambda.iter())
                .map(|(xf, l)| xf * l)
                .collect();
            let scale: f64 = rhs.iter().map(|z| z.norm()).fold(1.0, f64::max);
            assert!(
                max_abs_diff(&lhs, &rhs) < 1e-10 * scale,
                "diagonalization failed at N={n}"
            );
        }
    }
}
