use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{FiberParams, LinkParams, ModulationFormat, SplitFractions, TxConfig};
use crate::equalizer::EqualizerTopology;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::transfer::TrainConfig;

/// Total symbols per dataset at paper scale; the 0.8 training split is
/// 262144 symbols.
pub const PAPER_SCALE_SYMBOLS: usize = 327_680;

/// One transmission system: modulation format at a launch power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub format: ModulationFormat,
    pub power_dbm: f64,
}

impl SystemSpec {
    pub fn label(&self) -> String {
        format!("{}_{}dBm", self.format.tag(), self.power_dbm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub source: SystemSpec,
    pub targets: Vec<SystemSpec>,
    /// Training-data fractions for the transfer runs.
    pub fractions: Vec<f64>,
    pub fiber: FiberParams,
    pub link: LinkSettings,
    pub tx: TxConfig,
    pub split: SplitFractions,
    pub topology: EqualizerTopology,
    pub train: TrainConfig,
    /// Epochs for the source model; `train.epochs` is used for target runs.
    pub source_epochs: usize,
}

/// Amplifier and integration settings; the fiber has its own section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSettings {
    pub noise_figure_db: f64,
    pub step_km: f64,
    pub noise_off: bool,
}

impl Default for LinkSettings {
    fn default() -> Self {
        let l = LinkParams::default();
        Self {
            noise_figure_db: l.noise_figure_db,
            step_km: l.step_km,
            noise_off: l.noise_off,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let at = |format, power_dbm| SystemSpec { format, power_dbm };
        Self {
            output_dir: PathBuf::from("runs"),
            source: at(ModulationFormat::Qam16, 5.0),
            targets: vec![
                at(ModulationFormat::Qam32, 2.0),
                at(ModulationFormat::Qam64, 2.0),
                at(ModulationFormat::Qam128, 2.0),
            ],
            fractions: vec![1.0, 0.5, 0.2, 0.1],
            fiber: FiberParams::default(),
            link: LinkSettings::default(),
            tx: TxConfig::default(),
            split: SplitFractions::default(),
            topology: EqualizerTopology::default(),
            train: TrainConfig::default(),
            source_epochs: 50,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.fiber.validate()?;
        self.tx.validate()?;
        self.split.validate()?;
        self.topology.validate()?;
        self.train.validate()?;
        if self.targets.is_empty() {
            return Err(Error::Config("at least one target system is required".into()));
        }
        if self.fractions.is_empty() || self.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::Config("fractions must be non-empty and in (0, 1]".into()));
        }
        if self.source_epochs == 0 {
            return Err(Error::Config("source_epochs must be at least 1".into()));
        }
        for s in std::iter::once(&self.source).chain(&self.targets) {
            if !s.power_dbm.is_finite() {
                return Err(Error::Config("launch powers must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn link_params(&self) -> LinkParams {
        LinkParams {
            fiber: self.fiber,
            noise_figure_db: self.link.noise_figure_db,
            step_km: self.link.step_km,
            noise_off: self.link.noise_off,
        }
    }

    /// Transmitter settings for one system. Every system gets its own data
    /// seed derived from `tx.seed` and its label.
    pub fn tx_for(&self, system: &SystemSpec) -> TxConfig {
        let tag = system
            .label()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        TxConfig {
            launch_power_dbm: system.power_dbm,
            seed: derive_seed(self.tx.seed, tag),
            ..self.tx
        }
    }

    pub fn apply_paper_scale(&mut self) {
        self.tx.n_symbols = PAPER_SCALE_SYMBOLS;
    }

    pub fn source_train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.source_epochs,
            data_fraction: 1.0,
            ..self.train
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_describe_the_reference_setting() {
        let c = ExperimentConfig::default();
        assert_eq!(c.source.format, ModulationFormat::Qam16);
        assert_eq!(c.source.power_dbm, 5.0);
        assert_eq!(c.targets.len(), 3);
        assert!(c.targets.iter().all(|t| t.power_dbm == 2.0));
        assert_eq!(c.fiber.n_spans, 9);
        assert_eq!(c.tx.symbol_rate_gbd, 34.4);
        let (train, _, _) = c.split.sizes(c.tx.n_symbols);
        assert_eq!(train, 1 << 16);
        let mut p = c.clone();
        p.apply_paper_scale();
        assert_eq!(p.split.sizes(p.tx.n_symbols).0, 262_144);
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let partial = "source_epochs = 3\n[train]\nepochs = 2\n";
        let p = ExperimentConfig::from_toml(partial).unwrap();
        assert_eq!((p.source_epochs, p.train.epochs, p.train.batch_size), (3, 2, 256));
        assert!(ExperimentConfig::from_toml("[train]\nepoch = 2\n").is_err());
        assert!(ExperimentConfig::from_toml("sauce_epochs = 2\n").is_err());
        assert!(ExperimentConfig::from_toml("fractions = [0.0]\n").is_err());
    }

    #[test]
    fn systems_get_distinct_data_seeds() {
        let c = ExperimentConfig::default();
        let seeds: std::collections::HashSet<u64> = std::iter::once(&c.source)
            .chain(&c.targets)
            .map(|s| c.tx_for(s).seed)
            .collect();
        assert_eq!(seeds.len(), 4);
        assert_eq!(c.tx_for(&c.targets[0]).launch_power_dbm, 2.0);
    }
}
