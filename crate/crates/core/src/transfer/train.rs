use std::time::Instant;

use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use super::config::TrainConfig;
use super::log::{EpochRecord, RunMode, TrainLog};
use super::mask::{make_transfer_mask, FreezeMask};
use crate::channel::Dataset;
use crate::equalizer::{EqualizerModel, EqualizerTopology, Polarization, WindowView, Workspace};
use crate::error::{Error, Result};
use crate::metrics::model_q;
use crate::rng::{derive_seed, seeded};
use crate::tensor::{adam_step, AdamState};

const INIT_TAG: u64 = 0x1417;
const SHUFFLE_TAG: u64 = 0x5348;

/// Contiguous train/validation/test splits of one system's data.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub validate: Dataset,
    pub test: Dataset,
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub log: TrainLog,
    /// Parameters at the best validation Q.
    pub best: EqualizerModel,
    /// Parameters after the last epoch.
    pub last: EqualizerModel,
    /// SHA-256 of the frozen groups, before training and after each epoch.
    pub frozen_digests: Vec<String>,
}

/// Number of symbols kept by [`subsample`].
pub fn subsample_len(n: usize, fraction: f64) -> usize {
    (fraction * n as f64).round() as usize
}

/// Contiguous prefix of `round(fraction · N)` symbols.
pub fn subsample(ds: &Dataset, fraction: f64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction {fraction} outside (0, 1]")));
    }
    Ok(ds.slice(0..subsample_len(ds.len(), fraction)))
}

/// Hex SHA-256 over the ids and value bytes of every frozen group.
pub fn frozen_digest(model: &EqualizerModel, flags: &[bool]) -> String {
    let mut h = Sha256::new();
    for (p, &trainable) in model.params.iter().zip(flags) {
        if !trainable {
            h.update(p.id.as_bytes());
            h.update(p.value_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Q in dB, with "no signal" mapped to −∞ so a log can still be written.
fn q_or_floor(model: &EqualizerModel, ds: &Dataset) -> Result<f64> {
    match model_q(model, ds) {
        Ok(r) => Ok(r.q_db),
        Err(Error::NoSignal(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Minibatch Adam over the windows of
/// `subsample(data.train, config.data_fraction)`.
pub fn train(
    model: &mut EqualizerModel,
    data: &Splits,
    config: &TrainConfig,
    mask: &FreezeMask,
    mode: RunMode,
) -> Result<TrainRun> {
    config.validate()?;
    let flags = mask.flags_for(model)?;
    let train_ds = subsample(&data.train, config.data_fraction)?;
    let m = model.topology.window_half;
    let mut views = vec![WindowView::new(&train_ds, m, Polarization::X)?];
    if config.both_polarizations {
        views.push(WindowView::new(&train_ds, m, Polarization::Y)?);
    }
    let per_view = views[0].len();
    let mut order: Vec<usize> = (0..views.len() * per_view).collect();
    let mut adam = AdamState::new(config.adam(), &model.params);
    let mut ws = Workspace::default();
    let mut log = TrainLog::new(mode, train_ds.format, train_ds.launch_power_dbm, config.data_fraction);
    let initial_digest = frozen_digest(model, &flags);
    let mut digests = vec![initial_digest.clone()];
    let mut best = model.clone();
    let mut best_val = f64::NEG_INFINITY;
    let start = Instant::now();

    let mut windows: Vec<&[f64]> = Vec::with_capacity(config.batch_size);
    let mut labels: Vec<[f64; 2]> = Vec::with_capacity(config.batch_size);
    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut seeded(derive_seed(derive_seed(config.seed, SHUFFLE_TAG), epoch as u64)));
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            windows.clear();
            labels.clear();
            for &idx in chunk {
                let view = &views[idx / per_view];
                let k = idx % per_view;
                windows.push(view.features(k));
                labels.push(view.label(k));
            }
            model.zero_grad();
            let loss = match model.batch_loss_masked(&windows, &labels, &mut ws, &flags) {
                Ok(l) if l.is_finite() => l,
                Ok(l) => return Err(Error::Diverged { epoch, batch: b, loss: l }),
                Err(Error::NonFinite(_)) => {
                    return Err(Error::Diverged {
                        epoch,
                        batch: b,
                        loss: f64::NAN,
                    })
                }
                Err(e) => return Err(e),
            };
            adam_step(&mut model.params, &mut adam, &flags)?;
            loss_sum += loss * chunk.len() as f64;
        }
        let digest = frozen_digest(model, &flags);
        if digest != initial_digest {
            return Err(Error::Config(format!("frozen parameters changed in epoch {epoch}")));
        }
        digests.push(digest);
        if epoch % config.eval_every == 0 || epoch == config.epochs {
            let val_q_db = q_or_floor(model, &data.validate)?;
            let test_q_db = q_or_floor(model, &data.test)?;
            if val_q_db > best_val || log.selected_epoch.is_none() {
                best_val = val_q_db;
                best = model.clone();
                log.selected_epoch = Some(epoch);
            }
            log.records.push(EpochRecord {
                epoch,
                train_loss: loss_sum / order.len() as f64,
                val_q_db,
                test_q_db,
                wall_s: if config.record_wall_time {
                    start.elapsed().as_secs_f64()
                } else {
                    0.0
                },
            });
        }
    }
    Ok(TrainRun {
        log,
        best,
        last: model.clone(),
        frozen_digests: digests,
    })
}

/// Source model: fresh initialization, everything trainable.
pub fn train_source(topology: EqualizerTopology, data: &Splits, config: &TrainConfig) -> Result<TrainRun> {
    let mut model = EqualizerModel::build(topology, derive_seed(config.seed, INIT_TAG))?;
    let mask = FreezeMask::all_trainable(&model);
    train(&mut model, data, config, &mask, RunMode::Source)
}

/// Target model trained from random initialization, without transfer.
pub fn train_from_scratch(topology: EqualizerTopology, data: &Splits, config: &TrainConfig) -> Result<TrainRun> {
    let mut model = EqualizerModel::build(topology, derive_seed(config.seed, INIT_TAG))?;
    let mask = FreezeMask::all_trainable(&model);
    train(&mut model, data, config, &mask, RunMode::TargetScratch)
}

/// Starts from the source parameters with fresh Adam moments and retrains
/// only the conv layer on the target data.
pub fn transfer(source: &EqualizerModel, target: &Splits, config: &TrainConfig) -> Result<TrainRun> {
    let mut model = source.clone();
    model.zero_grad();
    let mask = make_transfer_mask(&model);
    train(&mut model, target, config, &mask, RunMode::TargetTl)
}

/// Q of the untouched source model on target data, −∞ when it carries no
/// signal (BER ≥ 0.5).
pub fn evaluate_snn(source: &EqualizerModel, target: &Dataset) -> Result<f64> {
    q_or_floor(source, target)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::channel::{gen_symbols, ModulationFormat};

    fn tiny() -> EqualizerTopology {
        EqualizerTopology {
            window_half: 2,
            conv_filters: 3,
            conv_kernel: 3,
            lstm_hidden: 4,
        }
    }

    /// Mildly distorted 16-QAM: a fixed ISI tap plus deterministic noise.
    fn splits(n: usize, seed: u64) -> Splits {
        let f = ModulationFormat::Qam16;
        let s = gen_symbols(f, n, seed);
        let isi = |v: &[Complex64]| -> Vec<Complex64> {
            (0..v.len())
                .map(|k| v[k] + 0.15 * v[(k + 1) % v.len()] * Complex64::new(0.0, 1.0))
                .collect()
        };
        let ds = Dataset::from_received(isi(&s.x), isi(&s.y), s.x, s.y, f, 0.0, seed).unwrap();
        let n = ds.len();
        Splits {
            train: ds.slice(0..n * 8 / 10),
            validate: ds.slice(n * 8 / 10..n * 9 / 10),
            test: ds.slice(n * 9 / 10..n),
        }
    }

    fn config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 32,
            lr: 3e-3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn subsample_is_prefix() {
        let d = splits(1250, 1).train;
        assert_eq!(d.len(), 1000);
        assert_eq!(subsample(&d, 1.0).unwrap().rx_x, d.rx_x);
        let half = subsample(&d, 0.5).unwrap();
        assert_eq!(half.len(), 500);
        assert_eq!(half.tx_y[..], d.tx_y[..500]);
        assert!(subsample(&d, 0.0).is_err());
    }

    #[test]
    fn all_frozen_changes_nothing() {
        let data = splits(600, 2);
        let mut model = EqualizerModel::build(tiny(), 3).unwrap();
        let before = model.clone();
        let mask = FreezeMask::all_frozen(&model);
        let run = train(&mut model, &data, &config(3), &mask, RunMode::TargetTl).unwrap();
        assert_eq!(model.to_checkpoint_bytes(), before.to_checkpoint_bytes());
        let losses: Vec<f64> = run.log.records.iter().map(|r| r.train_loss).collect();
        // Only the summation order changes with the shuffle.
        assert!(losses.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12 * w[0]));
        assert!(run.frozen_digests.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let data = splits(1500, 4);
        let run = train_source(tiny(), &data, &config(5)).unwrap();
        let r = &run.log.records;
        assert_eq!(r.len(), 5);
        assert!(r[4].train_loss < r[0].train_loss);
        let again = train_source(tiny(), &data, &config(5)).unwrap();
        assert_eq!(run.log.to_csv(), again.log.to_csv());
        assert_eq!(run.best, again.best);
    }

    #[test]
    fn transfer_mask_freezes_all_but_conv() {
        let data = splits(800, 5);
        let source = train_source(tiny(), &data, &config(1)).unwrap().best;
        let run = transfer(&source, &data, &config(3)).unwrap();
        for (a, b) in source.params.iter().zip(&run.last.params) {
            if EqualizerModel::is_conv_group(&a.id) {
                assert_ne!(a.value_bytes(), b.value_bytes(), "{}", a.id);
            } else {
                assert_eq!(a.value_bytes(), b.value_bytes(), "{}", a.id);
            }
        }
        assert_eq!(run.frozen_digests.len(), 4);
        assert!(run.frozen_digests.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn snn_matches_source_log_on_source_test_data() {
        let data = splits(800, 6);
        let run = train_source(tiny(), &data, &config(2)).unwrap();
        let q = evaluate_snn(&run.last, &data.test).unwrap();
        assert_eq!(q, run.log.final_test_q().unwrap());
        assert_eq!(q, evaluate_snn(&run.last, &data.test).unwrap());
    }

    #[test]
    fn best_model_tracks_validation() {
        let data = splits(800, 7);
        let run = train_source(tiny(), &data, &config(4)).unwrap();
        let sel = run.log.selected_epoch.unwrap();
        let best_val = run.log.records.iter().map(|r| r.val_q_db).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(run.log.records[sel - 1].val_q_db, best_val);
        assert_eq!(q_or_floor(&run.best, &data.validate).unwrap(), best_val);
    }
}
