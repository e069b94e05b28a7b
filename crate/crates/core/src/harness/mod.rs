//! Experiment drivers: the per-frame fingerprint pipeline, single
//! experiments at one Eb/N0, Monte Carlo sweeps over the grid, and the EVM
//! calibration scan that pins the PA operating point.

mod config;
mod emit;
mod seed;

pub use config::{
    CalibrationConfig, ChannelConfig, ChannelRedraw, ExperimentConfig, KGridConfig,
    TransmitterConfig, CALIBRATED_INPUT_RMS,
};
pub use emit::{
    emit_calibration, emit_montecarlo, emit_plot_data, emit_single_experiment, PlotFigure,
};

use crate::channel::{add_awgn, draw_channel, exponential_pdp, propagate, NoiseSpec};
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::features::{envelope_features, nonlinear_features, FeatureKind, FeatureSample, TxLabel};
use crate::frontend::{iq_gains, iq_modulate, measure_evm, pa_apply, scale_to_rms, TransmitterProfile};
use crate::hammerstein::{separate, BasisConfig};
use crate::iq_est::{search_best_combo, KGrid};
use crate::knn::{accuracy, fit, AccuracyReport};
use crate::ofdm::{build_pilot_symbol, modulate, remove_cp, PilotSymbol, TdFrame};
use seed::{child_rng, child_seed};

/// The reference per-transmitter EVM figures the calibration scan targets,
/// in dB.
pub const TARGET_EVM_DB: [f64; 5] = [-16.04, -17.13, -15.94, -16.99, -16.95];

/// EVM acceptance band for a calibrated fleet, in dB.
pub const EVM_BAND_DB: (f64, f64) = (-19.0, -14.0);

/// The three feature points extracted from one received frame.
#[derive(Debug, Clone, Copy)]
pub struct FingerprintSamples {
    pub f1: FeatureSample,
    pub f2: FeatureSample,
    pub fe: FeatureSample,
}

impl FingerprintSamples {
    pub fn of_kind(&self, kind: FeatureKind) -> FeatureSample {
        match kind {
            FeatureKind::F1 => self.f1,
            FeatureKind::F2 => self.f2,
            FeatureKind::Fe => self.fe,
        }
    }
}

/// Full fingerprint extraction for one received frame, given the known
/// transmitted frame and pilot. Step numbering follows the method summary:
/// CP removal and pilot-bin extraction, separation, channel spectrum,
/// grid search, then the two feature constructions.
pub fn fingerprint_pipeline(
    received: &TdFrame,
    frame: &TdFrame,
    pilot: &PilotSymbol,
    cfg: &ExperimentConfig,
    label: TxLabel,
) -> Result<FingerprintSamples> {
    // Step 1: strip the CP; the anti-symmetric bins are gathered inside the
    // search, which works on the same spectrum.
    let r = remove_cp(received);

    // Step 2: Hammerstein separation against the known frame.
    let basis = BasisConfig::new(cfg.poly_order, cfg.channel_order_est)
        .map_err(|e| e.at_step(2))?;
    let est = separate(received, frame, &basis).map_err(|e| e.at_step(2))?;

    // Steps 3-5: candidate grid around the effective linear gain prior
    // |b1|, combination estimate and residual cost per candidate, minimum
    // cost wins.
    let k0 = est.b_hat[0].norm();
    if !(k0 > 0.0) || !k0.is_finite() {
        return Err(Error::DegenerateEstimate.at_step(4));
    }
    let grid = KGrid::uniform(k0, cfg.k_grid.rel_span, cfg.k_grid.points)
        .map_err(|e| e.at_step(4))?;
    let iq = search_best_combo(&r, &est.h_hat, pilot, &grid).map_err(|e| e.at_step(5))?;

    // Step 6: nonlinear ratio features.
    let (f1, f2) = nonlinear_features(label, &est, &iq).map_err(|e| e.at_step(6))?;

    // Step 7: envelope baseline on the CP-inclusive frame.
    let fe = envelope_features(label, received).map_err(|e| e.at_step(7))?;

    Ok(FingerprintSamples { f1, f2, fe })
}

/// Seed of Monte Carlo cell `(eb_n0_index, trial)`, exposed so any single
/// trial can be re-run in isolation.
pub fn experiment_seed(master_seed: u64, eb_n0_index: usize, trial: usize) -> u64 {
    child_seed(
        master_seed,
        seed::DOMAIN_EXPERIMENT,
        [eb_n0_index as u32, trial as u32, 0, 0],
    )
}

fn synthesize_and_fingerprint(
    cfg: &ExperimentConfig,
    profiles: &[TransmitterProfile],
    pdp: &[f64],
    eb_n0_db: f64,
    exp_seed: u64,
    tx: usize,
    sample: usize,
) -> Result<FingerprintSamples> {
    let mut pilot_rng = child_rng(exp_seed, seed::DOMAIN_PILOT, [tx as u32, sample as u32, 0, 0]);
    let pilot = build_pilot_symbol(&mut pilot_rng, cfg.fft_len, cfg.constellation_order)?;
    let frame = modulate(&pilot, cfg.cp_len)?;

    // Transmit chain: operating-point scaling, imbalanced modulator, PA.
    let profile = &profiles[tx];
    let scaled = scale_to_rms(&frame, cfg.input_rms)?;
    let gains = iq_gains(profile.epsilon, profile.phi_deg)?;
    let distorted = pa_apply(&iq_modulate(&scaled, &gains), profile);

    let channel_index = match cfg.channel_redraw {
        ChannelRedraw::PerSample => sample as u32,
        ChannelRedraw::PerExperiment => 0,
    };
    let mut channel_rng = child_rng(exp_seed, seed::DOMAIN_CHANNEL, [tx as u32, channel_index, 0, 0]);
    let ch = draw_channel(&mut channel_rng, cfg.channel.order, pdp)?;
    let clean = propagate(&distorted, &ch)?;

    let mut noise_rng = child_rng(exp_seed, seed::DOMAIN_NOISE, [tx as u32, sample as u32, 0, 0]);
    let received = add_awgn(
        &clean,
        &NoiseSpec {
            eb_n0_db,
            bits_per_symbol: cfg.bits_per_symbol(),
        },
        &mut noise_rng,
    );

    // The receiver-known reference is the unscaled frame: the operating
    // point is transmitter-side gain and gets absorbed into the estimated
    // nonlinearity.
    fingerprint_pipeline(&received, &frame, &pilot, cfg, (tx + 1) as TxLabel)
}

/// One experiment: per-transmitter sample generation, first/last split,
/// k-NN fit and scoring per feature kind.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub eb_n0_db: f64,
    pub f1: AccuracyReport,
    pub f2: AccuracyReport,
    pub fe: AccuracyReport,
    /// All generated samples, transmitter-major then sample order.
    pub samples: Vec<FingerprintSamples>,
}

impl ExperimentReport {
    pub fn report_for(&self, kind: FeatureKind) -> &AccuracyReport {
        match kind {
            FeatureKind::F1 => &self.f1,
            FeatureKind::F2 => &self.f2,
            FeatureKind::Fe => &self.fe,
        }
    }
}

pub fn run_single_experiment(
    cfg: &ExperimentConfig,
    eb_n0_db: f64,
    seed: u64,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let profiles = cfg.profiles()?;
    let pdp = exponential_pdp(cfg.channel.order, cfg.channel.pdp_decay);
    let spt = cfg.samples_per_tx;
    let total = profiles.len() * spt;

    let outcomes = map_indexed(total, |flat| {
        synthesize_and_fingerprint(cfg, &profiles, &pdp, eb_n0_db, seed, flat / spt, flat % spt)
    });
    let samples: Vec<FingerprintSamples> = outcomes.into_iter().collect::<Result<_>>()?;

    let score = |kind: FeatureKind| -> Result<AccuracyReport> {
        let mut train = Vec::with_capacity(profiles.len() * cfg.train_split);
        let mut test = Vec::with_capacity(total - profiles.len() * cfg.train_split);
        for (flat, sample) in samples.iter().enumerate() {
            let point = sample.of_kind(kind);
            if flat % spt < cfg.train_split {
                train.push(point);
            } else {
                test.push(point);
            }
        }
        let model = fit(&train)?;
        accuracy(&model, &test, &cfg.k_list)
    };

    Ok(ExperimentReport {
        eb_n0_db,
        f1: score(FeatureKind::F1)?,
        f2: score(FeatureKind::F2)?,
        fe: score(FeatureKind::Fe)?,
        samples,
    })
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub eb_n0_index: usize,
    pub eb_n0_db: f64,
    pub trial: usize,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone)]
pub struct TrialFailure {
    pub eb_n0_index: usize,
    pub eb_n0_db: f64,
    pub trial: usize,
    pub message: String,
}

/// Mean classification rate per `(feature, k, Eb/N0)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub feature: FeatureKind,
    pub k: usize,
    pub eb_n0_db: f64,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct MonteCarloReport {
    pub eb_n0_grid_db: Vec<f64>,
    pub k_list: Vec<usize>,
    pub trials_requested: usize,
    pub completed: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
}

impl MonteCarloReport {
    /// Population mean and std of the per-trial rates, per summary cell, in
    /// feature-major order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for kind in [FeatureKind::F1, FeatureKind::F2, FeatureKind::Fe] {
            for &k in &self.k_list {
                for (index, &eb_n0_db) in self.eb_n0_grid_db.iter().enumerate() {
                    let rates: Vec<f64> = self
                        .completed
                        .iter()
                        .filter(|t| t.eb_n0_index == index)
                        .filter_map(|t| t.report.report_for(kind).rate_at(k))
                        .collect();
                    let trials = rates.len();
                    let (mean, std) = if trials > 0 {
                        let mean = rates.iter().sum::<f64>() / trials as f64;
                        let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
                            / trials as f64;
                        (mean, var.sqrt())
                    } else {
                        (f64::NAN, f64::NAN)
                    };
                    rows.push(SummaryRow {
                        feature: kind,
                        k,
                        eb_n0_db,
                        mean_rate: mean,
                        std_rate: std,
                        trials,
                    });
                }
            }
        }
        rows
    }

    /// Mean rate across trials and every configured k at one grid point.
    pub fn mean_rate_over_k(&self, kind: FeatureKind, eb_n0_index: usize) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for trial in self.completed.iter().filter(|t| t.eb_n0_index == eb_n0_index) {
            for &k in &self.k_list {
                if let Some(rate) = trial.report.report_for(kind).rate_at(k) {
                    sum += rate;
                    count += 1;
                }
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }
}

/// The full sweep: every `(Eb/N0, trial)` cell runs one independent
/// experiment whose seed derives from the master seed and the cell indices.
pub fn run_montecarlo(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let grid = cfg.eb_n0_grid_db.clone();
    let cells = grid.len() * cfg.trials;
    let outcomes = map_indexed(cells, |flat| {
        let eb_n0_index = flat / cfg.trials;
        let trial = flat % cfg.trials;
        let seed = experiment_seed(cfg.master_seed, eb_n0_index, trial);
        (eb_n0_index, trial, run_single_experiment(cfg, grid[eb_n0_index], seed))
    });

    let mut completed = Vec::with_capacity(cells);
    let mut failures = Vec::new();
    for (eb_n0_index, trial, outcome) in outcomes {
        let eb_n0_db = grid[eb_n0_index];
        match outcome {
            Ok(report) => completed.push(TrialResult {
                eb_n0_index,
                eb_n0_db,
                trial,
                report,
            }),
            Err(e) => failures.push(TrialFailure {
                eb_n0_index,
                eb_n0_db,
                trial,
                message: e.to_string(),
            }),
        }
    }
    Ok(MonteCarloReport {
        eb_n0_grid_db: grid,
        k_list: cfg.k_list.clone(),
        trials_requested: cfg.trials,
        completed,
        failures,
    })
}

/// One scan point of the calibration sweep.
#[derive(Debug, Clone)]
pub struct CalibrationRow {
    pub input_rms: f64,
    /// Per-transmitter EVM in dB, fleet order.
    pub evm_db: Vec<f64>,
    /// Sum of squared deviations from the reference targets.
    pub sse: f64,
    /// Whether every transmitter lands inside the acceptance band.
    pub in_band: bool,
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub rows: Vec<CalibrationRow>,
    /// Index of the least-squares-best row among those in band, if any.
    pub chosen: Option<usize>,
    pub target_evm_db: Vec<f64>,
}

impl CalibrationReport {
    pub fn chosen_row(&self) -> Option<&CalibrationRow> {
        self.chosen.map(|i| &self.rows[i])
    }
}

/// Per-transmitter EVM at one operating point, averaged (as linear error
/// ratios) over the given pilots.
pub fn fleet_evm_db(
    profiles: &[TransmitterProfile],
    pilots: &[(PilotSymbol, TdFrame)],
    input_rms: f64,
) -> Result<Vec<f64>> {
    profiles
        .iter()
        .map(|profile| {
            let gains = iq_gains(profile.epsilon, profile.phi_deg)?;
            let mut ratio_sum = 0.0;
            for (pilot, frame) in pilots {
                let scaled = scale_to_rms(frame, input_rms)?;
                let out = pa_apply(&iq_modulate(&scaled, &gains), profile);
                let evm_db = measure_evm(&remove_cp(&out), pilot)?;
                ratio_sum += 10f64.powf(evm_db / 20.0);
            }
            Ok(20.0 * (ratio_sum / pilots.len() as f64).log10())
        })
        .collect()
}

/// The pilot/frame pairs the calibration scan measures EVM on, derived from
/// the master seed so scans and acceptance checks agree.
pub fn calibration_pilots(cfg: &ExperimentConfig) -> Result<Vec<(PilotSymbol, TdFrame)>> {
    (0..cfg.calibration.frames)
        .map(|i| {
            let mut rng = child_rng(
                cfg.master_seed,
                seed::DOMAIN_CALIBRATION,
                [i as u32, 0, 0, 0],
            );
            let pilot = build_pilot_symbol(&mut rng, cfg.fft_len, cfg.constellation_order)?;
            let frame = modulate(&pilot, cfg.cp_len)?;
            Ok((pilot, frame))
        })
        .collect()
}

/// Scans the operating-point RMS geometrically over the configured interval
/// and reports per-transmitter EVM at each point; the least-squares-best
/// in-band point is the calibration pick. No in-band point is a non-fatal
/// outcome: the report simply carries no chosen row.
pub fn calibrate_evm(cfg: &ExperimentConfig) -> Result<CalibrationReport> {
    cfg.validate()?;
    let profiles = cfg.profiles()?;
    let cal = &cfg.calibration;
    let pilots = calibration_pilots(cfg)?;

    let ratio = (cal.rms_max / cal.rms_min).powf(1.0 / (cal.points - 1) as f64);
    let targets: Vec<f64> = profiles
        .iter()
        .enumerate()
        .map(|(i, _)| TARGET_EVM_DB[i.min(TARGET_EVM_DB.len() - 1)])
        .collect();

    let scales: Vec<f64> = (0..cal.points)
        .map(|i| cal.rms_min * ratio.powi(i as i32))
        .collect();
    let rows: Vec<CalibrationRow> = map_indexed(scales.len(), |i| {
        let input_rms = scales[i];
        let evm_db = fleet_evm_db(&profiles, &pilots, input_rms)?;
        let sse = evm_db
            .iter()
            .zip(&targets)
            .map(|(got, want)| (got - want) * (got - want))
            .sum();
        let in_band = evm_db
            .iter()
            .all(|&e| e >= EVM_BAND_DB.0 && e <= EVM_BAND_DB.1);
        Ok(CalibrationRow {
            input_rms,
            evm_db,
            sse,
            in_band,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let chosen = rows
        .iter()
        .enumerate()
        .filter(|(_, row)| row.in_band)
        .min_by(|a, b| a.1.sse.total_cmp(&b.1.sse))
        .map(|(i, _)| i);

    Ok(CalibrationReport {
        rows,
        chosen,
        target_evm_db: targets,
    })
}
