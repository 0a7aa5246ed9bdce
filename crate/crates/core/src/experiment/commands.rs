use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, SystemSpec};
use super::pool::run_pool;
use crate::channel::io::{read_dataset, write_dataset};
use crate::channel::{simulate, Dataset};
use crate::equalizer::EqualizerModel;
use crate::error::{Error, Result};
use crate::metrics::{no_nn_q, QReport};
use crate::transfer::{evaluate_snn, train_from_scratch, train_source, transfer, RunMode, Splits, TrainLog, TrainRun};

pub fn dataset_path(cfg: &ExperimentConfig, system: &SystemSpec) -> PathBuf {
    cfg.output_dir.join("data").join(format!("{}.cteqds", system.label()))
}

pub fn source_checkpoint_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("source.ckpt")
}

fn curves_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.join("curves");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub system: SystemSpec,
    pub path: PathBuf,
    pub no_nn: QReport,
}

fn generate_one(cfg: &ExperimentConfig, system: &SystemSpec) -> Result<(Dataset, PathBuf)> {
    let ds = simulate(system.format, &cfg.tx_for(system), &cfg.link_params())?;
    let path = dataset_path(cfg, system);
    ensure_parent(&path)?;
    write_dataset(&path, &ds)?;
    Ok((ds, path))
}

/// Simulates and writes the source and every target dataset.
pub fn cmd_generate(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<GeneratedDataset>> {
    cfg.validate()?;
    let systems: Vec<SystemSpec> = std::iter::once(cfg.source).chain(cfg.targets.iter().copied()).collect();
    run_pool(&systems, jobs, |s| {
        let (ds, path) = generate_one(cfg, s)?;
        let (_, _, test) = ds.split(&cfg.split)?;
        Ok(GeneratedDataset {
            system: *s,
            path,
            no_nn: no_nn_q(&test)?,
        })
    })
    .into_iter()
    .collect()
}

/// Reads a previously generated dataset when it matches the configuration,
/// otherwise simulates (and stores) it.
pub fn load_or_generate(cfg: &ExperimentConfig, system: &SystemSpec) -> Result<Dataset> {
    let tx = cfg.tx_for(system);
    if let Ok(ds) = read_dataset(dataset_path(cfg, system)) {
        if ds.format == system.format
            && ds.launch_power_dbm == system.power_dbm
            && ds.seed == tx.seed
            && ds.len() == tx.n_symbols
        {
            return Ok(ds);
        }
    }
    Ok(generate_one(cfg, system)?.0)
}

fn splits(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Splits> {
    let (train, validate, test) = ds.split(&cfg.split)?;
    Ok(Splits { train, validate, test })
}

/// Trains the source model, stores its best-validation checkpoint and log.
pub fn cmd_train_source(cfg: &ExperimentConfig) -> Result<TrainRun> {
    cfg.validate()?;
    let data = splits(cfg, &load_or_generate(cfg, &cfg.source)?)?;
    let run = train_source(cfg.topology, &data, &cfg.source_train_config())?;
    let path = source_checkpoint_path(cfg);
    ensure_parent(&path)?;
    run.best.save(&path)?;
    run.log.write_csv(curves_dir(cfg)?)?;
    Ok(run)
}

#[derive(Debug, Clone)]
pub struct TargetOutcome {
    pub system: SystemSpec,
    /// TL runs (one per fraction), from-scratch, SNN and no-NN, in that order.
    pub logs: Vec<TrainLog>,
    pub manifest: PathBuf,
}

#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub source_sha256: String,
    pub targets: Vec<TargetOutcome>,
}

enum Job {
    Transfer(usize, f64),
    Scratch(usize),
}

/// Transfer, from-scratch and baseline curves for every target system.
/// Requires the source checkpoint written by [`cmd_train_source`].
pub fn cmd_transfer(cfg: &ExperimentConfig, jobs: usize) -> Result<TransferOutcome> {
    cfg.validate()?;
    let ckpt_path = source_checkpoint_path(cfg);
    let bytes = fs::read(&ckpt_path).map_err(|e| Error::io(&ckpt_path, e))?;
    let source_sha256 = hex::encode(Sha256::digest(&bytes));
    let source = EqualizerModel::from_checkpoint_bytes(&bytes)?;
    if source.topology != cfg.topology {
        return Err(Error::Topology {
            expected: cfg.topology.descriptor(),
            found: source.topology.descriptor(),
        });
    }
    let data: Vec<Splits> = cfg
        .targets
        .iter()
        .map(|t| splits(cfg, &load_or_generate(cfg, t)?))
        .collect::<Result<_>>()?;

    let mut work = Vec::new();
    for t in 0..cfg.targets.len() {
        work.extend(cfg.fractions.iter().map(|&f| Job::Transfer(t, f)));
        work.push(Job::Scratch(t));
    }
    let runs = run_pool(&work, jobs, |job| match *job {
        Job::Transfer(t, f) => {
            let c = crate::transfer::TrainConfig {
                data_fraction: f,
                ..cfg.train
            };
            transfer(&source, &data[t], &c).map(|r| r.log)
        }
        // Scratch runs always use the full training split.
        Job::Scratch(t) => train_from_scratch(
            cfg.topology,
            &data[t],
            &crate::transfer::TrainConfig {
                data_fraction: 1.0,
                ..cfg.train
            },
        )
        .map(|r| r.log),
    });
    let mut runs = runs.into_iter();

    let dir = curves_dir(cfg)?;
    let mut targets = Vec::new();
    for (system, split) in cfg.targets.iter().zip(&data) {
        let mut logs: Vec<TrainLog> = (0..=cfg.fractions.len())
            .map(|_| runs.next().expect("one run per job"))
            .collect::<Result<_>>()?;
        let (epochs, fmt, p) = (cfg.train.epochs, system.format, system.power_dbm);
        let snn_val = evaluate_snn(&source, &split.validate)?;
        let snn_test = evaluate_snn(&source, &split.test)?;
        logs.push(TrainLog::constant(RunMode::SnnEval, fmt, p, epochs, snn_val, snn_test));
        let (nv, nt) = (no_nn_q(&split.validate)?.q_db, no_nn_q(&split.test)?.q_db);
        logs.push(TrainLog::constant(RunMode::NoNn, fmt, p, epochs, nv, nt));

        let mut manifest = format!("panel {}\nsource_checkpoint_sha256 {source_sha256}\n", system.label());
        for log in &logs {
            log.write_csv(&dir)?;
            writeln!(manifest, "run {}", log.file_name()).unwrap();
        }
        let manifest_path = dir.join(format!("manifest_{}.txt", system.label()));
        fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
        targets.push(TargetOutcome {
            system: *system,
            logs,
            manifest: manifest_path,
        });
    }
    Ok(TransferOutcome { source_sha256, targets })
}
