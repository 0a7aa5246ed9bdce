use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::channel::ModulationFormat;
use crate::error::{Error, Result};
use crate::metrics::{epochs_to_reach, reduction_percent};
use crate::transfer::{subsample_len, RunMode, TrainLog};

/// Threshold for "best Q reached": within this many dB of the final Q.
pub const PLATEAU_MARGIN_DB: f64 = 0.1;

/// Epoch counts and training-set sizes behind the headline reductions.
const REFERENCE_EPOCHS: (f64, f64) = (50.0, 4.0);
const REFERENCE_TRAIN_SYMBOLS: usize = 262_144;
const REFERENCE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct PanelSummary {
    pub panel: String,
    /// (column name, final test Q) per curve.
    pub final_q: Vec<(String, f64)>,
    pub tl_epochs_to_plateau: Option<usize>,
    pub scratch_epochs_to_plateau: Option<usize>,
    pub epoch_reduction_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub panels: Vec<PanelSummary>,
    pub reference_epoch_reduction_percent: f64,
    pub reference_subsampled_symbols: usize,
    pub reference_data_reduction_percent: f64,
    pub summary_path: PathBuf,
}

fn parse_file_name(name: &str) -> Option<(RunMode, ModulationFormat, f64, u32)> {
    let stem = name.strip_suffix(".csv")?;
    let modes = [
        RunMode::NoNn,
        RunMode::SnnEval,
        RunMode::TargetScratch,
        RunMode::TargetTl,
        RunMode::Source,
    ];
    let (mode, rest) = modes
        .into_iter()
        .find_map(|m| stem.strip_prefix(m.tag()).and_then(|r| r.strip_prefix('_')).map(|r| (m, r)))?;
    let mut parts = rest.split('_');
    let format = parts.next()?.parse().ok()?;
    let power = parts.next()?.strip_suffix("dBm")?.parse().ok()?;
    let pct = parts.next()?.strip_prefix("frac")?.parse().ok()?;
    parts.next().is_none().then_some((mode, format, power, pct))
}

fn read_log(dir: &Path, name: &str) -> Result<TrainLog> {
    let (mode, format, power, pct) =
        parse_file_name(name).ok_or_else(|| Error::format("train log", format!("bad file name {name:?}")))?;
    let path = dir.join(name);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut log = TrainLog::new(mode, format, power, pct as f64 / 100.0);
    log.records = TrainLog::records_from_csv(&text)?;
    Ok(log)
}

fn column(log: &TrainLog) -> String {
    format!("{}_{}", log.mode.tag(), log.percent())
}

fn fmt_q(v: Option<f64>) -> String {
    v.map(|q| format!("{q}")).unwrap_or_default()
}

/// Epoch-indexed merge of a panel's curves (test Q per column).
pub fn panel_csv(logs: &[TrainLog]) -> String {
    let epochs: BTreeSet<usize> = logs.iter().flat_map(|l| l.records.iter().map(|r| r.epoch)).collect();
    let mut out = String::from("epoch");
    for l in logs {
        write!(out, ",{}", column(l)).unwrap();
    }
    out.push('\n');
    for e in epochs {
        write!(out, "{e}").unwrap();
        for l in logs {
            write!(out, ",{}", fmt_q(l.test_q_at(e))).unwrap();
        }
        out.push('\n');
    }
    out
}

fn summarize(panel: &str, logs: &[TrainLog]) -> PanelSummary {
    let find = |mode: RunMode| logs.iter().find(|l| l.mode == mode && l.percent() == 100);
    let plateau = |log: Option<&TrainLog>| {
        let log = log?;
        epochs_to_reach(log, log.final_test_q()? - PLATEAU_MARGIN_DB)
    };
    let tl = plateau(find(RunMode::TargetTl));
    let scratch = plateau(find(RunMode::TargetScratch));
    PanelSummary {
        panel: panel.to_string(),
        final_q: logs
            .iter()
            .filter_map(|l| Some((column(l), l.final_test_q()?)))
            .collect(),
        tl_epochs_to_plateau: tl,
        scratch_epochs_to_plateau: scratch,
        epoch_reduction_percent: tl.zip(scratch).map(|(t, s)| reduction_percent(s as f64, t as f64)),
    }
}

/// Reads every panel manifest under `output_dir/curves`, writes the merged
/// panel CSVs and `summary.txt`. Deterministic in its inputs.
pub fn cmd_report(output_dir: impl AsRef<Path>) -> Result<Report> {
    let dir = output_dir.as_ref().join("curves");
    let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut manifests: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("manifest_") && n.ends_with(".txt"))
        })
        .collect();
    manifests.sort();

    let mut panels = Vec::new();
    for m in &manifests {
        let text = fs::read_to_string(m).map_err(|e| Error::io(m, e))?;
        let mut panel = None;
        let mut logs = Vec::new();
        for line in text.lines() {
            match line.split_once(' ') {
                Some(("panel", p)) => panel = Some(p.to_string()),
                Some(("run", name)) => logs.push(read_log(&dir, name)?),
                _ => {}
            }
        }
        let panel = panel.ok_or_else(|| Error::format("manifest", format!("{} has no panel line", m.display())))?;
        let path = dir.join(format!("panel_{panel}.csv"));
        fs::write(&path, panel_csv(&logs)).map_err(|e| Error::io(&path, e))?;
        panels.push(summarize(&panel, &logs));
    }

    let sub = subsample_len(REFERENCE_TRAIN_SYMBOLS, REFERENCE_FRACTION);
    let report = Report {
        reference_epoch_reduction_percent: reduction_percent(REFERENCE_EPOCHS.0, REFERENCE_EPOCHS.1),
        reference_subsampled_symbols: sub,
        reference_data_reduction_percent: reduction_percent(REFERENCE_TRAIN_SYMBOLS as f64, sub as f64),
        summary_path: output_dir.as_ref().join("summary.txt"),
        panels,
    };
    fs::write(&report.summary_path, render(&report)).map_err(|e| Error::io(&report.summary_path, e))?;
    Ok(report)
}

fn render(r: &Report) -> String {
    let opt = |v: Option<usize>| v.map_or("never".to_string(), |e| e.to_string());
    let mut out = String::new();
    writeln!(out, "# plateau = first epoch with test Q >= final Q - {PLATEAU_MARGIN_DB} dB").unwrap();
    for p in &r.panels {
        writeln!(out, "\n[{}]", p.panel).unwrap();
        for (name, q) in &p.final_q {
            writeln!(out, "final_q_db {name} {q:.4}").unwrap();
        }
        writeln!(out, "plateau_epoch tl_100 {}", opt(p.tl_epochs_to_plateau)).unwrap();
        writeln!(out, "plateau_epoch scratch_100 {}", opt(p.scratch_epochs_to_plateau)).unwrap();
        match p.epoch_reduction_percent {
            Some(v) => writeln!(out, "epoch_reduction_percent {v:.1}").unwrap(),
            None => writeln!(out, "epoch_reduction_percent n/a").unwrap(),
        }
    }
    writeln!(out, "\n[reference]").unwrap();
    writeln!(
        out,
        "epoch_reduction_percent {:.1} ({} -> {} epochs)",
        r.reference_epoch_reduction_percent, REFERENCE_EPOCHS.0, REFERENCE_EPOCHS.1
    )
    .unwrap();
    writeln!(
        out,
        "data_reduction_percent {:.1} ({} -> {} symbols)",
        r.reference_data_reduction_percent, REFERENCE_TRAIN_SYMBOLS, r.reference_subsampled_symbols
    )
    .unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::EpochRecord;

    fn log(mode: RunMode, frac: f64, qs: &[f64]) -> TrainLog {
        let mut l = TrainLog::new(mode, ModulationFormat::Qam32, 2.0, frac);
        l.records = qs
            .iter()
            .enumerate()
            .map(|(i, &q)| EpochRecord {
                epoch: i + 1,
                train_loss: 0.5,
                val_q_db: q,
                test_q_db: q,
                wall_s: 0.0,
            })
            .collect();
        l
    }

    #[test]
    fn file_names_parse_back() {
        for l in [
            log(RunMode::NoNn, 1.0, &[]),
            log(RunMode::TargetTl, 0.1, &[]),
            TrainLog::new(RunMode::Source, ModulationFormat::Qam16, -1.5, 0.2),
        ] {
            let (m, f, p, pct) = parse_file_name(&l.file_name()).unwrap();
            assert_eq!((m, f, p, pct), (l.mode, l.format, l.launch_power_dbm, l.percent()));
        }
        assert!(parse_file_name("tl_qam32_2dBm.csv").is_none());
    }

    #[test]
    fn report_is_idempotent_and_computes_reductions() {
        let dir = tempfile::tempdir().unwrap();
        let curves = dir.path().join("curves");
        fs::create_dir_all(&curves).unwrap();
        let logs = [
            log(RunMode::TargetTl, 1.0, &[5.0, 6.0, 6.5, 6.55, 6.6, 6.6]),
            log(RunMode::TargetScratch, 1.0, &[2.0, 3.0, 4.0, 5.0, 6.0, 6.6]),
            log(RunMode::NoNn, 1.0, &[3.0; 6]),
        ];
        let mut manifest = String::from("panel qam32_2dBm\nsource_checkpoint_sha256 00\n");
        for l in &logs {
            l.write_csv(&curves).unwrap();
            manifest.push_str(&format!("run {}\n", l.file_name()));
        }
        fs::write(curves.join("manifest_qam32_2dBm.txt"), manifest).unwrap();

        let a = cmd_report(dir.path()).unwrap();
        let summary = fs::read(&a.summary_path).unwrap();
        let panel = fs::read(curves.join("panel_qam32_2dBm.csv")).unwrap();
        let b = cmd_report(dir.path()).unwrap();
        assert_eq!(a, b);
        assert_eq!(summary, fs::read(&b.summary_path).unwrap());
        assert_eq!(panel, fs::read(curves.join("panel_qam32_2dBm.csv")).unwrap());

        let p = &a.panels[0];
        assert_eq!(p.tl_epochs_to_plateau, Some(3));
        assert_eq!(p.scratch_epochs_to_plateau, Some(6));
        assert_eq!(p.epoch_reduction_percent, Some(50.0));
        assert_eq!(a.reference_subsampled_symbols, 26_214);
        assert!((a.reference_epoch_reduction_percent - 92.0).abs() < 1e-12);
        assert!((a.reference_data_reduction_percent - 90.0).abs() < 0.01);
        let text = String::from_utf8(panel).unwrap();
        assert!(text.starts_with("epoch,tl_100,scratch_100,no_nn_100\n1,5,2,3\n"));
    }
}
