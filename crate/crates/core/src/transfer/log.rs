use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::channel::ModulationFormat;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "epoch,train_loss,val_q_db,test_q_db,wall_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunMode {
    Source,
    TargetTl,
    TargetScratch,
    SnnEval,
    NoNn,
}

impl RunMode {
    pub fn tag(self) -> &'static str {
        match self {
            RunMode::Source => "source",
            RunMode::TargetTl => "tl",
            RunMode::TargetScratch => "scratch",
            RunMode::SnnEval => "snn",
            RunMode::NoNn => "no_nn",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [
            RunMode::Source,
            RunMode::TargetTl,
            RunMode::TargetScratch,
            RunMode::SnnEval,
            RunMode::NoNn,
        ]
        .into_iter()
        .find(|m| m.tag() == tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_q_db: f64,
    pub test_q_db: f64,
    pub wall_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub mode: RunMode,
    pub format: ModulationFormat,
    pub launch_power_dbm: f64,
    pub data_fraction: f64,
    pub records: Vec<EpochRecord>,
    /// Epoch of the retained best-validation parameters.
    pub selected_epoch: Option<usize>,
}

impl TrainLog {
    pub fn new(mode: RunMode, format: ModulationFormat, launch_power_dbm: f64, data_fraction: f64) -> Self {
        Self {
            mode,
            format,
            launch_power_dbm,
            data_fraction,
            records: Vec::new(),
            selected_epoch: None,
        }
    }

    /// A flat curve, for the baselines that involve no training.
    pub fn constant(
        mode: RunMode,
        format: ModulationFormat,
        launch_power_dbm: f64,
        epochs: usize,
        val_q_db: f64,
        test_q_db: f64,
    ) -> Self {
        let mut log = Self::new(mode, format, launch_power_dbm, 1.0);
        log.records = (1..=epochs)
            .map(|epoch| EpochRecord {
                epoch,
                train_loss: f64::NAN,
                val_q_db,
                test_q_db,
                wall_s: 0.0,
            })
            .collect();
        log
    }

    pub fn final_test_q(&self) -> Option<f64> {
        self.records.last().map(|r| r.test_q_db)
    }

    pub fn test_q_at(&self, epoch: usize) -> Option<f64> {
        self.records.iter().find(|r| r.epoch == epoch).map(|r| r.test_q_db)
    }

    pub fn percent(&self) -> u32 {
        (self.data_fraction * 100.0).round() as u32
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}dBm_frac{}.csv",
            self.mode.tag(),
            self.format.tag(),
            self.launch_power_dbm,
            self.percent()
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(out, "{},{},{},{},{}", r.epoch, r.train_loss, r.val_q_db, r.test_q_db, r.wall_s).unwrap();
        }
        out
    }

    /// Parses records back; run metadata comes from the file name.
    pub fn records_from_csv(text: &str) -> Result<Vec<EpochRecord>> {
        let bad = |m: String| Error::format("train log", m);
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(bad("missing header".into()));
        }
        let mut records: Vec<EpochRecord> = Vec::new();
        for line in lines {
            let v: Vec<&str> = line.split(',').collect();
            if v.len() != 5 {
                return Err(bad(format!("bad row {line:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
            let epoch: usize = v[0].parse().map_err(|_| bad(format!("bad epoch {:?}", v[0])))?;
            if records.last().is_some_and(|r| r.epoch >= epoch) {
                return Err(bad("epochs must increase".into()));
            }
            records.push(EpochRecord {
                epoch,
                train_loss: num(v[1])?,
                val_q_db: num(v[2])?,
                test_q_db: num(v[3])?,
                wall_s: num(v[4])?,
            });
        }
        Ok(records)
    }

    pub fn write_csv(&self, dir: impl AsRef<Path>) -> Result<std::path::PathBuf> {
        let path = dir.as_ref().join(self.file_name());
        fs::write(&path, self.to_csv()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
