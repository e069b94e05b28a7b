//! Best IQ-imbalance combination search. On the conjugate anti-symmetric
//! pilot bins the direct term cancels and the received spectrum reduces to
//! `K Lambda_B s_B` times the imbalance combination, so a per-candidate
//! linear gain turns into a closed-form combination estimate; each candidate
//! is then scored by the residual of the full linear-chain model and the
//! minimizer wins.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::PilotSymbol;
use crate::sigproc::{dft, dft_of_fir, ComplexSequence, FirTaps};

/// Candidate linear-gain grid, strictly increasing.
#[derive(Debug, Clone)]
pub struct KGrid {
    values: Vec<f64>,
}

impl KGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty gain grid".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(Error::InvalidParameter(
                "gain candidates must be finite and nonzero".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "gain candidates must be strictly increasing".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Uniform grid over `[center (1 - rel_span), center (1 + rel_span)]`.
    pub fn uniform(center: f64, rel_span: f64, points: usize) -> Result<Self> {
        if !(center > 0.0) || !(rel_span > 0.0 && rel_span < 1.0) || points < 1 {
            return Err(Error::InvalidParameter(format!(
                "bad grid request: center {center}, span {rel_span}, points {points}"
            )));
        }
        if points == 1 {
            return Self::new(vec![center]);
        }
        let lo = center * (1.0 - rel_span);
        let hi = center * (1.0 + rel_span);
        let step = (hi - lo) / (points - 1) as f64;
        Self::new((0..points).map(|i| lo + step * i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Search outcome: the winning combination, the gain it was read at, the
/// winning cost and the whole cost profile over the grid.
#[derive(Debug, Clone)]
pub struct IqEstimate {
    pub combo: Complex64,
    pub k_best: f64,
    pub cost: f64,
    pub per_k_costs: Vec<f64>,
}

/// Channel spectrum restricted to the anti-symmetric bins, in bin order.
pub fn lambda_on_b(h_hat: &FirTaps, bins: &[usize], n: usize) -> Result<ComplexSequence> {
    let lambda = dft_of_fir(h_hat, n)?;
    let values: Vec<Complex64> = bins.iter().map(|&k| lambda[k]).collect();
    ComplexSequence::new(values)
}

/// Bins whose pilot-weighted channel response falls below this fraction of
/// the median are excluded from the ratio mean: the dot-divide amplifies
/// noise without bound in deep fades.
const FADE_EXCLUSION_FRACTION: f64 = 1e-3;

/// Mean of `r_fd_b ./ (lambda_b .* s_b)` over the bins that survive the
/// fade guard.
fn ratio_mean(
    r_fd_b: &[Complex64],
    lambda_b: &[Complex64],
    s_b: &[Complex64],
) -> Result<Complex64> {
    let denominators: Vec<Complex64> = lambda_b
        .iter()
        .zip(s_b)
        .map(|(l, s)| l * s)
        .collect();
    let mut magnitudes: Vec<f64> = denominators.iter().map(|d| d.norm()).collect();
    magnitudes.sort_by(f64::total_cmp);
    let median = if magnitudes.len() % 2 == 1 {
        magnitudes[magnitudes.len() / 2]
    } else {
        0.5 * (magnitudes[magnitudes.len() / 2 - 1] + magnitudes[magnitudes.len() / 2])
    };
    if median == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let threshold = FADE_EXCLUSION_FRACTION * median;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut kept = 0usize;
    for (i, d) in denominators.iter().enumerate() {
        if d.norm() >= threshold {
            sum += r_fd_b[i] / d;
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::DegenerateChannel);
    }
    Ok(sum / kept as f64)
}

/// Combination estimate at one gain candidate: the fade-guarded ratio mean
/// divided by `k`.
pub fn estimate_combo_for_k(
    r_fd_b: &[Complex64],
    lambda_b: &[Complex64],
    s_b: &[Complex64],
    k: f64,
) -> Result<Complex64> {
    if r_fd_b.len() != lambda_b.len() || r_fd_b.len() != s_b.len() {
        return Err(Error::LengthMismatch {
            expected: r_fd_b.len(),
            got: lambda_b.len().min(s_b.len()),
        });
    }
    if k == 0.0 || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("gain candidate {k}")));
    }
    Ok(ratio_mean(r_fd_b, lambda_b, s_b)? / k)
}

/// Shared cost kernel: squared time-domain distance between `r` and the
/// linear-chain model, evaluated in the frequency domain (exact through
/// Parseval with the 1/N inverse convention).
fn cost_against_model(
    r_fd: &[Complex64],
    lambda: &[Complex64],
    s: &[Complex64],
    k: f64,
    combo: Complex64,
) -> f64 {
    let n = s.len();
    let g1 = (Complex64::new(1.0, 0.0) + combo) / 2.0;
    let g2 = (Complex64::new(1.0, 0.0) - combo) / 2.0;
    let mut acc = 0.0;
    for i in 0..n {
        let mirror_conj = s[(n - i) % n].conj();
        let model = k * lambda[i] * (g1 * s[i] + g2 * mirror_conj);
        acc += (r_fd[i] - model).norm_sqr();
    }
    acc / n as f64
}

/// Residual cost of one `(K, combo)` candidate against the CP-stripped
/// received block.
pub fn candidate_cost(
    r: &ComplexSequence,
    h_hat: &FirTaps,
    k: f64,
    combo: Complex64,
    pilot: &PilotSymbol,
) -> Result<f64> {
    let n = pilot.fft_len();
    if r.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: r.len(),
        });
    }
    let r_fd = dft(r);
    let lambda = dft_of_fir(h_hat, n)?;
    Ok(cost_against_model(
        &r_fd,
        &lambda,
        pilot.s(),
        k,
        combo,
    ))
}

/// Full grid search: one combination estimate and one model cost per gain
/// candidate, minimum cost wins, ties break toward the smaller gain.
pub fn search_best_combo(
    r: &ComplexSequence,
    h_hat: &FirTaps,
    pilot: &PilotSymbol,
    grid: &KGrid,
) -> Result<IqEstimate> {
    let n = pilot.fft_len();
    if r.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: r.len(),
        });
    }
    let r_fd = dft(r);
    let lambda = dft_of_fir(h_hat, n)?;
    let s = pilot.s();
    let bins = pilot.anti_symmetric_bins();

    let r_fd_b: Vec<Complex64> = bins.iter().map(|&k| r_fd[k]).collect();
    let lambda_b: Vec<Complex64> = bins.iter().map(|&k| lambda[k]).collect();
    let s_b: Vec<Complex64> = bins.iter().map(|&k| s[k]).collect();
    let mean = ratio_mean(&r_fd_b, &lambda_b, &s_b)?;

    let mut per_k_costs = Vec::with_capacity(grid.values().len());
    let mut best: Option<(usize, f64)> = None;
    for (idx, &k) in grid.values().iter().enumerate() {
        let combo = mean / k;
        let cost = cost_against_model(&r_fd, &lambda, s, k, combo);
        per_k_costs.push(cost);
        // Strict improvement keeps the smallest gain on ties.
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((idx, cost));
        }
    }
    let (idx, cost) = best.expect("grid is nonempty");
    let k_best = grid.values()[idx];
    Ok(IqEstimate {
        combo: mean / k_best,
        k_best,
        cost,
        per_k_costs,
    })
}
