//! Fingerprint features. The nonlinear pair F1/F2 normalizes the higher
//! polynomial coefficients by the leading one and pairs each ratio with the
//! imbalance-combination magnitude, which makes both coordinates invariant
//! to the h0-scale ambiguity of the separation. The envelope baseline Fe
//! correlates the received envelope against rectangle and triangle
//! templates and inherits the channel instead.

use crate::error::{Error, Result};
use crate::hammerstein::HammersteinEstimate;
use crate::iq_est::IqEstimate;
use crate::ofdm::TdFrame;

/// Transmitter identity, 1-based in the five-transmitter scenario.
pub type TxLabel = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    F1,
    F2,
    Fe,
}

impl FeatureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureKind::F1 => "F1",
            FeatureKind::F2 => "F2",
            FeatureKind::Fe => "Fe",
        }
    }
}

/// One labeled 2-D feature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureSample {
    pub label: TxLabel,
    pub kind: FeatureKind,
    pub coords: [f64; 2],
}

/// F1 and F2 from one separated estimate and one imbalance search:
/// `F1 = (|b3|/|b1|, |combo|)`, `F2 = (|b5|/|b1|, |combo|)`.
pub fn nonlinear_features(
    label: TxLabel,
    est: &HammersteinEstimate,
    iq: &IqEstimate,
) -> Result<(FeatureSample, FeatureSample)> {
    if est.b_hat.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 coefficients for the ratio features, got {}",
            est.b_hat.len()
        )));
    }
    let b1 = est.b_hat[0].norm();
    if b1 == 0.0 {
        return Err(Error::DegenerateEstimate);
    }
    let combo_mag = iq.combo.norm();
    let f1 = FeatureSample {
        label,
        kind: FeatureKind::F1,
        coords: [est.b_hat[1].norm() / b1, combo_mag],
    };
    let f2 = FeatureSample {
        label,
        kind: FeatureKind::F2,
        coords: [est.b_hat[2].norm() / b1, combo_mag],
    };
    Ok((f1, f2))
}

/// Resemble coefficients of the CP-inclusive received envelope against the
/// rectangle and the symmetric unit-peak triangle of the same length.
pub fn envelope_features(label: TxLabel, received: &TdFrame) -> Result<FeatureSample> {
    let envelope: Vec<f64> = received.samples().iter().map(|z| z.norm()).collect();
    let energy: f64 = envelope.iter().map(|e| e * e).sum();
    if energy == 0.0 {
        return Err(Error::InvalidParameter("all-zero received frame".into()));
    }
    let e_norm = energy.sqrt();
    let len = envelope.len();

    let rect_dot: f64 = envelope.iter().sum();
    let rect_norm = (len as f64).sqrt();
    let f_c = rect_dot / (e_norm * rect_norm);

    let triangle = |i: usize| -> f64 {
        let x = i as f64 / (len - 1) as f64;
        1.0 - (2.0 * x - 1.0).abs()
    };
    let mut tri_dot = 0.0;
    let mut tri_energy = 0.0;
    for (i, e) in envelope.iter().enumerate() {
        let t = triangle(i);
        tri_dot += e * t;
        tri_energy += t * t;
    }
    let f_i = tri_dot / (e_norm * tri_energy.sqrt());

    Ok(FeatureSample {
        label,
        kind: FeatureKind::Fe,
        coords: [f_c, f_i],
    })
}
