//! Transmitter impairments: IQ modulator imbalance, the memoryless PA
//! nonlinearity with its AM-AM / AM-PM responses, operating-point scaling
//! and EVM measurement of the distorted output.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::{PilotSymbol, TdFrame};
use crate::sigproc::{dft, ComplexSequence};

/// AM-AM form of the PA.
///
/// `RappNormalized` applies the solid-state saturation curve
/// `A(r) = g r [1 + (g r / A_sat)^(2 beta)]^(-1/(2 beta))`, which grows to
/// `A_sat`. `LiteralEq7` keeps the plain rational form
/// `A(r) = g r / [1 + (g r / A_sat)^(2 beta)]`, which rolls off to zero for
/// large drive and is retained for fidelity experiments only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaForm {
    #[default]
    RappNormalized,
    LiteralEq7,
}

/// One emitter's hardware truth: IQ imbalance and PA parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitterProfile {
    /// Amplitude imbalance factor of the IQ modulator.
    pub epsilon: f64,
    /// Phase deviation of the IQ modulator, degrees.
    pub phi_deg: f64,
    /// Common PA perturbation; the shape parameters below scale with `1 + delta`.
    pub delta: f64,
    /// Small-signal amplitude gain.
    pub g_alpha: f64,
    /// Amplitude shape exponent.
    pub beta_alpha: f64,
    /// Saturation amplitude.
    pub a_sat: f64,
    /// Phase-response scale (degrees per unit drive^q1).
    pub alpha_theta: f64,
    /// Phase-response knee.
    pub beta_theta: f64,
    /// Phase-response numerator exponent.
    pub q1: f64,
    /// Phase-response denominator exponent.
    pub q2: f64,
    pub pa_form: PaForm,
}

impl TransmitterProfile {
    /// Builds a profile from the common perturbation: the five shape
    /// parameters derive as `0.81, 1.4, 0.123, 3.8, 3.7` times `1 + delta`.
    pub fn from_common_delta(
        epsilon: f64,
        phi_deg: f64,
        delta: f64,
        g_alpha: f64,
        alpha_theta: f64,
        pa_form: PaForm,
    ) -> Result<Self> {
        let profile = TransmitterProfile {
            epsilon,
            phi_deg,
            delta,
            g_alpha,
            beta_alpha: 0.81 * (1.0 + delta),
            a_sat: 1.4 * (1.0 + delta),
            alpha_theta,
            beta_theta: 0.123 * (1.0 + delta),
            q1: 3.8 * (1.0 + delta),
            q2: 3.7 * (1.0 + delta),
            pa_form,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Balanced modulator and an effectively linear PA with the given gain
    /// (the saturation point is pushed far beyond any realistic drive).
    pub fn linear(gain: f64) -> Self {
        TransmitterProfile {
            epsilon: 1.0,
            phi_deg: 0.0,
            delta: 0.0,
            g_alpha: gain,
            beta_alpha: 0.81,
            a_sat: 1e9,
            alpha_theta: 0.0,
            beta_theta: 0.123,
            q1: 3.8,
            q2: 3.7,
            pa_form: PaForm::RappNormalized,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("g_alpha", self.g_alpha),
            ("beta_alpha", self.beta_alpha),
            ("a_sat", self.a_sat),
            ("beta_theta", self.beta_theta),
            ("q1", self.q1),
            ("q2", self.q2),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !self.phi_deg.is_finite() || !self.alpha_theta.is_finite() || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(
                "phi_deg, alpha_theta and delta must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Checks that the derived shape parameters still obey the common-delta
    /// relation, field by field.
    pub fn matches_common_delta(&self) -> bool {
        let scale = 1.0 + self.delta;
        self.beta_alpha == 0.81 * scale
            && self.a_sat == 1.4 * scale
            && self.beta_theta == 0.123 * scale
            && self.q1 == 3.8 * scale
            && self.q2 == 3.7 * scale
    }
}

/// The complex branch gains of an imbalanced IQ modulator; `g1 + g2 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqGains {
    pub g1: Complex64,
    pub g2: Complex64,
}

/// Branch gains from the imbalance pair: `G1 = (1 + eps e^{j phi}) / 2`,
/// `G2 = (1 - eps e^{j phi}) / 2`, with `phi` given in degrees.
pub fn iq_gains(epsilon: f64, phi_degrees: f64) -> Result<IqGains> {
    if !(epsilon > 0.0) || !epsilon.is_finite() || !phi_degrees.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "imbalance pair out of range: epsilon {epsilon}, phi {phi_degrees} deg"
        )));
    }
    let phi = phi_degrees.to_radians();
    let combo = epsilon * Complex64::new(phi.cos(), phi.sin());
    let g1 = (Complex64::new(1.0, 0.0) + combo) / 2.0;
    // Complement so that g1 + g2 is exactly one.
    let g2 = Complex64::new(1.0 - g1.re, -g1.im);
    Ok(IqGains { g1, g2 })
}

/// Imbalanced modulator output `x[n] = G1 u[n] + G2 conj(u[n])`.
pub fn iq_modulate(frame: &TdFrame, gains: &IqGains) -> TdFrame {
    frame.map(|u| gains.g1 * u + gains.g2 * u.conj())
}

/// Output amplitude over input amplitude at drive `r`; finite `g_alpha` at
/// `r = 0` makes the small-signal limit explicit.
fn amplitude_gain(r: f64, p: &TransmitterProfile) -> f64 {
    let drive = (p.g_alpha * r / p.a_sat).powf(2.0 * p.beta_alpha);
    match p.pa_form {
        PaForm::RappNormalized => p.g_alpha * (1.0 + drive).powf(-1.0 / (2.0 * p.beta_alpha)),
        PaForm::LiteralEq7 => p.g_alpha / (1.0 + drive),
    }
}

/// AM-AM response `A(r)`.
pub fn pa_amplitude(r: f64, p: &TransmitterProfile) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "PA drive must be nonnegative, got {r}"
        )));
    }
    Ok(r * amplitude_gain(r, p))
}

/// AM-PM response `theta(r)` in degrees.
pub fn pa_phase(r: f64, p: &TransmitterProfile) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "PA drive must be nonnegative, got {r}"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(p.alpha_theta * r.powf(p.q1) / (1.0 + (r / p.beta_theta).powf(p.q2)))
}

/// Memoryless PA: each sample keeps its phase plus the AM-PM rotation while
/// its amplitude follows the AM-AM curve.
pub fn pa_apply(frame: &TdFrame, p: &TransmitterProfile) -> TdFrame {
    frame.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            return z;
        }
        let gain = amplitude_gain(r, p);
        let theta = pa_phase(r, p).expect("nonnegative drive").to_radians();
        // z * gain keeps the input phase bit-exact when theta is zero.
        z * gain * Complex64::new(theta.cos(), theta.sin())
    })
}

/// Rescales a frame so the RMS of its samples equals `target_rms`,
/// fixing the PA operating point independent of the FFT length.
pub fn scale_to_rms(frame: &TdFrame, target_rms: f64) -> Result<TdFrame> {
    if !(target_rms > 0.0) || !target_rms.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target RMS must be positive and finite, got {target_rms}"
        )));
    }
    let len = frame.samples().len() as f64;
    let rms = (frame.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() / len).sqrt();
    if rms == 0.0 {
        return Err(Error::InvalidParameter("cannot scale an all-zero frame".into()));
    }
    let factor = target_rms / rms;
    Ok(frame.map(|z| z * factor))
}

/// EVM in dB of the CP-stripped transmitter output against the ideal pilot,
/// after removing the best complex scalar gain.
pub fn measure_evm(x: &ComplexSequence, pilot: &PilotSymbol) -> Result<f64> {
    let s = pilot.s();
    if x.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            got: x.len(),
        });
    }
    let s_energy: f64 = s.iter().map(|z| z.norm_sqr()).sum();
    if s_energy == 0.0 {
        return Err(Error::InvalidParameter("all-zero pilot symbol".into()));
    }
    let fd = dft(x);
    let cross: Complex64 = fd.iter().zip(s.iter()).map(|(a, b)| a * b.conj()).sum();
    let c_hat = cross / s_energy;
    if c_hat.norm() == 0.0 {
        return Err(Error::DegenerateEstimate);
    }
    let err_energy: f64 = fd
        .iter()
        .zip(s.iter())
        .map(|(a, b)| (a / c_hat - b).norm_sqr())
        .sum();
    Ok(10.0 * (err_energy / s_energy).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{build_pilot_symbol, modulate, remove_cp};
    use crate::sigproc::idft;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn table1_profiles() -> Vec<TransmitterProfile> {
        let rows = [
            (0.99, 2.50, 0.01),
            (0.96, 1.00, 0.16),
            (0.97, 0.50, 0.31),
            (0.90, 2.00, 0.11),
            (0.93, 1.40, 0.26),
        ];
        rows.iter()
            .map(|&(eps, phi, delta)| {
                TransmitterProfile::from_common_delta(
                    eps,
                    phi,
                    delta,
                    19.0,
                    -48000.0,
                    PaForm::RappNormalized,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn balanced_gains() {
        let g = iq_gains(1.0, 0.0).unwrap();
        assert_eq!(g.g1, c(1.0, 0.0));
        assert_eq!(g.g2, c(0.0, 0.0));
    }

    #[test]
    fn transmitter1_gains() {
        let g = iq_gains(0.99, 2.5).unwrap();
        assert!((g.g1 - c(0.994529, 0.021592)).norm() < 1e-6);
        assert!((g.g2 - c(0.005471, -0.021592)).norm() < 1e-6);
    }

    #[test]
    fn gains_sum_to_one_exactly() {
        for (eps, phi) in [(0.99, 2.5), (0.96, 1.0), (0.97, 0.5), (0.90, 2.0), (0.93, 1.4)] {
            let g = iq_gains(eps, phi).unwrap();
            assert_eq!(g.g1 + g.g2, c(1.0, 0.0), "eps {eps}, phi {phi}");
        }
    }

    #[test]
    fn iq_modulate_identity_and_real_input() {
        let frame = TdFrame::new(vec![c(0.3, -0.2), c(-1.0, 0.5), c(0.1, 0.0)], 2, 1).unwrap();
        let balanced = iq_gains(1.0, 0.0).unwrap();
        assert_eq!(iq_modulate(&frame, &balanced), frame);

        // Real input passes through any gains because G1 + G2 = 1.
        let real = TdFrame::new(vec![c(0.7, 0.0), c(-0.4, 0.0), c(1.0, 0.0)], 2, 1).unwrap();
        let skew = iq_gains(0.9, 2.0).unwrap();
        let out = iq_modulate(&real, &skew);
        for (a, b) in out.samples().iter().zip(real.samples()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn iq_modulate_imaginary_sample() {
        let frame = TdFrame::new(vec![c(0.0, 1.0), c(0.0, 1.0)], 1, 1).unwrap();
        let gains = IqGains {
            g1: c(0.9, 0.0),
            g2: c(0.1, 0.0),
        };
        let out = iq_modulate(&frame, &gains);
        assert!((out.samples()[0] - c(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn iq_modulate_invertible() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let pilot = build_pilot_symbol(&mut rng, 64, 16).unwrap();
        let frame = modulate(&pilot, 16).unwrap();
        let g = iq_gains(0.9, 2.0).unwrap();
        let out = iq_modulate(&frame, &g);
        let det = g.g1.norm_sqr() - g.g2.norm_sqr();
        for (y, u) in out.samples().iter().zip(frame.samples()) {
            let back = (g.g1.conj() * y - g.g2 * y.conj()) / det;
            assert!((back - u).norm() < 1e-12);
        }
    }

    #[test]
    fn pa_amplitude_limits() {
        let p = &table1_profiles()[0];
        assert_eq!(pa_amplitude(0.0, p).unwrap(), 0.0);
        // Small-signal limit A(r)/r -> g_alpha in both forms.
        for form in [PaForm::RappNormalized, PaForm::LiteralEq7] {
            let mut q = p.clone();
            q.pa_form = form;
            let r = 1e-9;
            assert!((pa_amplitude(r, &q).unwrap() / r - q.g_alpha).abs() < 1e-3);
        }
        // At g_alpha * r = A_sat the normalized form gives A_sat * 2^(-1/(2 beta)).
        let r = p.a_sat / p.g_alpha;
        let expected = p.a_sat * 2f64.powf(-1.0 / (2.0 * p.beta_alpha));
        assert!((pa_amplitude(r, p).unwrap() - expected).abs() < 1e-12);
        assert!(pa_amplitude(-1.0, p).is_err());
    }

    #[test]
    fn pa_amplitude_monotone_and_bounded() {
        let p = &table1_profiles()[2];
        let mut previous = 0.0;
        for i in 1..=4000 {
            let r = i as f64 * 0.01;
            let a = pa_amplitude(r, p).unwrap();
            assert!(a > previous, "not increasing at r = {r}");
            assert!(a < p.a_sat, "exceeded saturation at r = {r}");
            previous = a;
        }
    }

    #[test]
    fn pa_phase_basics() {
        let p = &table1_profiles()[0];
        assert_eq!(pa_phase(0.0, p).unwrap(), 0.0);
        let mut zero_scale = p.clone();
        zero_scale.alpha_theta = 0.0;
        assert_eq!(pa_phase(0.7, &zero_scale).unwrap(), 0.0);
        assert!(pa_phase(-0.1, p).is_err());
    }

    #[test]
    fn pa_phase_decays_when_denominator_exponent_dominates() {
        // With q2 > q1 the response vanishes at large drive; the fleet has
        // q1 slightly above q2, so its response grows instead (benign at
        // the small operating amplitudes).
        let mut p = table1_profiles()[0].clone();
        p.q1 = 2.0;
        let far = pa_phase(1.0e6, &p).unwrap();
        assert!(far.abs() < 1e-3, "theta at large drive: {far}");

        let fleet = &table1_profiles()[0];
        assert!(pa_phase(1.0e6, fleet).unwrap().abs() > 1.0);
    }

    #[test]
    fn pa_apply_linear_profile() {
        let p = TransmitterProfile::linear(3.0);
        let frame = TdFrame::new(vec![c(0.2, -0.1), c(-0.5, 0.4), c(0.0, 0.9)], 2, 1).unwrap();
        let out = pa_apply(&frame, &p);
        for (y, u) in out.samples().iter().zip(frame.samples()) {
            assert!((y - 3.0 * u).norm() < 1e-12 * u.norm().max(1.0));
        }
    }

    #[test]
    fn pa_apply_amplitude_and_phase_contract() {
        let p = &table1_profiles()[1];
        let frame = TdFrame::new(vec![c(0.05, 0.02), c(-0.03, 0.08), c(0.1, 0.0)], 2, 1).unwrap();
        let out = pa_apply(&frame, p);
        for (y, u) in out.samples().iter().zip(frame.samples()) {
            let r = u.norm();
            assert!((y.norm() - pa_amplitude(r, p).unwrap()).abs() < 1e-12);
            let expected_phase = u.arg() + pa_phase(r, p).unwrap().to_radians();
            let mut dphi = y.arg() - expected_phase;
            while dphi > std::f64::consts::PI {
                dphi -= 2.0 * std::f64::consts::PI;
            }
            while dphi < -std::f64::consts::PI {
                dphi += 2.0 * std::f64::consts::PI;
            }
            assert!(dphi.abs() < 1e-12);
        }
    }

    #[test]
    fn pa_apply_pure_rotation() {
        // theta = 90 degrees turns a positive-real sample purely imaginary.
        let mut p = TransmitterProfile::linear(1.0);
        p.alpha_theta = 90.0;
        p.q1 = 1e-9; // r^q1 ~ 1 at r = 1
        p.beta_theta = 1e9; // knee far away
        let frame = TdFrame::new(vec![c(1.0, 0.0), c(1.0, 0.0)], 1, 1).unwrap();
        let out = pa_apply(&frame, &p);
        assert!(out.samples()[0].re.abs() < 1e-6);
        assert!(out.samples()[0].im > 0.99);
    }

    #[test]
    fn pa_apply_preserves_phase_without_am_pm() {
        let p = TransmitterProfile::linear(19.0);
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let pilot = build_pilot_symbol(&mut rng, 64, 16).unwrap();
        let frame = modulate(&pilot, 16).unwrap();
        let out = pa_apply(&frame, &p);
        for (y, u) in out.samples().iter().zip(frame.samples()) {
            if u.norm() > 0.0 {
                // A real gain rescales both components, so atan2 may move
                // by an ulp but no more.
                assert!((y.arg() - u.arg()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn scale_to_rms_sets_operating_point() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let pilot = build_pilot_symbol(&mut rng, 256, 16).unwrap();
        let frame = modulate(&pilot, 64).unwrap();
        let scaled = scale_to_rms(&frame, 0.05).unwrap();
        let len = scaled.samples().len() as f64;
        let rms = (scaled.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() / len).sqrt();
        assert!((rms - 0.05).abs() < 1e-12);
        assert!(scale_to_rms(&frame, 0.0).is_err());
    }

    #[test]
    fn evm_distortionless_and_gain_invariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let pilot = build_pilot_symbol(&mut rng, 256, 16).unwrap();
        let u = idft(pilot.s());
        let evm = measure_evm(&u, &pilot).unwrap();
        assert!(evm <= -100.0, "distortionless EVM was {evm} dB");

        let doubled = ComplexSequence::new(u.iter().map(|z| 2.0 * z).collect()).unwrap();
        let evm2 = measure_evm(&doubled, &pilot).unwrap();
        assert!(evm2 <= -100.0, "gain-scaled EVM was {evm2} dB");

        let rotated =
            ComplexSequence::new(u.iter().map(|z| z * c(0.0, -0.7)).collect()).unwrap();
        let evm3 = measure_evm(&rotated, &pilot).unwrap();
        assert!(evm3 <= -100.0, "rotated EVM was {evm3} dB");
    }

    #[test]
    fn evm_sees_distortion() {
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let pilot = build_pilot_symbol(&mut rng, 256, 16).unwrap();
        let profile = &table1_profiles()[0];
        let frame = scale_to_rms(&modulate(&pilot, 64).unwrap(), 0.05).unwrap();
        let gains = iq_gains(profile.epsilon, profile.phi_deg).unwrap();
        let out = pa_apply(&iq_modulate(&frame, &gains), profile);
        let evm = measure_evm(&remove_cp(&out), &pilot).unwrap();
        assert!(evm > -60.0 && evm < -5.0, "EVM {evm} dB out of plausible range");
    }

    #[test]
    fn common_delta_layout() {
        let p = TransmitterProfile::from_common_delta(
            0.96,
            1.0,
            0.16,
            19.0,
            -48000.0,
            PaForm::RappNormalized,
        )
        .unwrap();
        assert!(p.matches_common_delta());
        assert_eq!(p.beta_alpha, 0.81 * 1.16);
        assert_eq!(p.a_sat, 1.4 * 1.16);
        assert_eq!(p.beta_theta, 0.123 * 1.16);
        assert_eq!(p.q1, 3.8 * 1.16);
        assert_eq!(p.q2, 3.7 * 1.16);

        let mut broken = p.clone();
        broken.q1 = 4.0;
        assert!(!broken.matches_common_delta());
    }
}
