//! Hammerstein parameter separation: a delayed odd-order polynomial
//! regressor models the memoryless transmitter nonlinearity, the multipath
//! FIR enters as the Kronecker factor, and two least-squares stages split
//! the joint coefficient vector into the nonlinear coefficients and the
//! channel estimate.
//!
//! The first stage solves `r ~ Phi h_b` for the stacked product
//! `h_b = h (x) b`; because the channel draw pins `h_0 = 1`, the leading
//! block of `h_b` is the coefficient vector itself. The second stage
//! collapses each delay block through the recovered coefficients and solves
//! for the FIR alone. The split is unique only up to the `h_0` scale; when
//! data was generated with `h_0 = c != 1` the two factors trade the scale
//! `c` while their Kronecker product stays invariant.

use num_complex::Complex64;

pub use crate::linalg::ComplexMatrix;

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::ofdm::TdFrame;
use crate::sigproc::FirTaps;

/// Regressor geometry: highest polynomial order `P` (odd, `(P+1)/2` basis
/// terms) and the assumed channel order for estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisConfig {
    poly_order: usize,
    channel_order: usize,
}

impl BasisConfig {
    pub fn new(poly_order: usize, channel_order: usize) -> Result<Self> {
        if poly_order == 0 || poly_order % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "polynomial order must be odd and positive, got {poly_order}"
            )));
        }
        Ok(Self {
            poly_order,
            channel_order,
        })
    }

    pub fn poly_order(&self) -> usize {
        self.poly_order
    }

    pub fn channel_order(&self) -> usize {
        self.channel_order
    }

    /// Number of basis terms `(P + 1) / 2`.
    pub fn basis_count(&self) -> usize {
        (self.poly_order + 1) / 2
    }
}

/// Separated estimate: nonlinear coefficients `b_1, b_3, ..., b_P`, the
/// channel taps, and the stage-two residual norm.
#[derive(Debug, Clone)]
pub struct HammersteinEstimate {
    pub b_hat: Vec<Complex64>,
    pub h_hat: FirTaps,
    pub residual_norm: f64,
    /// Normal-equations residual ratio `||Phi^H (r - Phi x)|| / ||r||` of
    /// the two least-squares stages, computed on every separation.
    pub orthogonality: [f64; 2],
}

/// Odd-order baseband basis term `u |u|^(2(p-1))` for `p >= 1`.
///
/// The linear factor `u` keeps the model complex-valued and phase-aware; a
/// magnitude-only basis could not reproduce a complex received signal.
pub fn basis_eval(u: Complex64, p: usize) -> Complex64 {
    debug_assert!(p >= 1);
    u * u.norm_sqr().powi(p as i32 - 1)
}

/// `sum_p b_p u |u|^(2(p-1))` evaluated by Horner's rule on `|u|^2`.
fn polynomial_output(u: Complex64, b: &[Complex64]) -> Complex64 {
    let m2 = u.norm_sqr();
    let mut acc = Complex64::new(0.0, 0.0);
    for &coeff in b.iter().rev() {
        acc = acc * m2 + coeff;
    }
    u * acc
}

/// Delay-and-sum with zero fill for the leading rows:
/// `out[t] = sum_y h[y] base[t - y]`.
fn delayed_mix(base: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    (0..base.len())
        .map(|t| {
            taps.iter()
                .take(t + 1)
                .enumerate()
                .map(|(y, hy)| hy * base[t - y])
                .sum()
        })
        .collect()
}

/// The full regressor: `(L_est + 1)` delay blocks of `(P + 1) / 2` basis
/// columns each. Block `y` holds the `y`-sample-delayed frame through every
/// basis term, zero-filled for the first `y` rows.
pub fn basis_matrix(frame: &TdFrame, cfg: &BasisConfig) -> ComplexMatrix {
    let samples = frame.samples();
    let rows = samples.len();
    let nb = cfg.basis_count();
    let blocks = cfg.channel_order() + 1;
    let mut phi = ComplexMatrix::zeros(rows, blocks * nb);
    for (t, &u) in samples.iter().enumerate() {
        let m2 = u.norm_sqr();
        let mut term = u;
        for p in 0..nb {
            for y in 0..blocks {
                if t + y < rows {
                    phi.column_mut(y * nb + p)[t + y] = term;
                }
            }
            term *= m2;
        }
    }
    phi
}

/// Noiseless Hammerstein output `Phi (h (x) b)`: the synthetic-data oracle
/// for the separation stage.
pub fn forward_model(frame: &TdFrame, b: &[Complex64], h: &FirTaps) -> Result<TdFrame> {
    if b.is_empty() {
        return Err(Error::EmptySequence);
    }
    let base: Vec<Complex64> = frame
        .samples()
        .iter()
        .map(|&u| polynomial_output(u, b))
        .collect();
    let out = delayed_mix(&base, h.taps());
    TdFrame::new(out, frame.fft_len(), frame.cp_len())
}

/// Condition guard on the normal-equations matrix, as a square of the
/// R-diagonal estimate for the scaled regressor.
const MAX_GRAM_CONDITION: f64 = 1e12;

fn guarded_lstsq(phi: &ComplexMatrix, rhs: &[Complex64]) -> Result<crate::linalg::LstsqSolution> {
    let sol = lstsq(phi, rhs)?;
    let gram_cond = sol.cond_estimate * sol.cond_estimate;
    if !gram_cond.is_finite() || gram_cond > MAX_GRAM_CONDITION {
        return Err(Error::IllConditioned(gram_cond));
    }
    Ok(sol)
}

/// `||Phi^H (r - Phi x)|| / ||r||`: zero for an exact least-squares
/// solution, bounded by rounding otherwise.
fn gradient_ratio(phi: &ComplexMatrix, rhs: &[Complex64], x: &[Complex64]) -> f64 {
    let fit = phi.matvec(x);
    let resid: Vec<Complex64> = rhs.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let gradient = phi.conj_transpose_matvec(&resid);
    let g_norm = gradient.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let rhs_norm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    g_norm / rhs_norm.max(f64::MIN_POSITIVE)
}

/// Two-stage least-squares separation of the received frame into nonlinear
/// coefficients and channel taps, given the known transmitted frame.
pub fn separate(
    received: &TdFrame,
    frame: &TdFrame,
    cfg: &BasisConfig,
) -> Result<HammersteinEstimate> {
    if received.samples().len() != frame.samples().len()
        || received.fft_len() != frame.fft_len()
    {
        return Err(Error::LengthMismatch {
            expected: frame.samples().len(),
            got: received.samples().len(),
        });
    }
    if cfg.channel_order() + 1 >= frame.cp_len() {
        return Err(Error::InvalidParameter(format!(
            "estimation channel order {} does not fit the cyclic prefix {}",
            cfg.channel_order(),
            frame.cp_len()
        )));
    }

    let rhs = received.samples();
    let phi = basis_matrix(frame, cfg);
    let stage1 = guarded_lstsq(&phi, rhs)?;
    let orth1 = gradient_ratio(&phi, rhs, &stage1.x);

    // h_0 is one by the channel-draw convention, so the leading block of the
    // stacked solution is the coefficient vector itself.
    let b_hat = stage1.x[..cfg.basis_count()].to_vec();

    // Stage two: collapse each delay block through b_hat and refit the FIR.
    let base: Vec<Complex64> = frame
        .samples()
        .iter()
        .map(|&u| polynomial_output(u, &b_hat))
        .collect();
    let rows = base.len();
    let blocks = cfg.channel_order() + 1;
    let mut phi_b = ComplexMatrix::zeros(rows, blocks);
    for y in 0..blocks {
        let col = phi_b.column_mut(y);
        col[y..rows].copy_from_slice(&base[..rows - y]);
    }
    let stage2 = guarded_lstsq(&phi_b, rhs)?;
    let orth2 = gradient_ratio(&phi_b, rhs, &stage2.x);
    debug_assert!(
        orth1 <= 1e-8 && orth2 <= 1e-8,
        "normal-equations residuals {orth1:.3e} / {orth2:.3e} above 1e-8"
    );

    Ok(HammersteinEstimate {
        b_hat,
        h_hat: FirTaps::new(stage2.x)?,
        residual_norm: stage2.residual_norm,
        orthogonality: [orth1, orth2],
    })
}
