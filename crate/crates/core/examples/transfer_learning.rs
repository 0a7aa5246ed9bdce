//! Trains a small source equalizer on 16-QAM at 5 dBm, then moves it to
//! 32-QAM at 2 dBm by retraining only the conv layer.
//!
//!   cargo run --release --example transfer_learning -- [n_symbols] [epochs]

use cteq::channel::{simulate, LinkParams, ModulationFormat, SplitFractions, TxConfig};
use cteq::equalizer::EqualizerTopology;
use cteq::metrics::no_nn_q;
use cteq::transfer::{evaluate_snn, make_transfer_mask, train_from_scratch, train_source, transfer, Splits, TrainConfig};

fn splits(format: ModulationFormat, power: f64, n: usize, seed: u64) -> cteq::Result<Splits> {
    let tx = TxConfig {
        n_symbols: n,
        launch_power_dbm: power,
        seed,
        ..TxConfig::default()
    };
    let (train, validate, test) = simulate(format, &tx, &LinkParams::default())?.split(&SplitFractions::default())?;
    Ok(Splits { train, validate, test })
}

fn main() -> cteq::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(16384, |a| a.parse().expect("n_symbols"));
    let epochs = args.next().map_or(8, |a| a.parse().expect("epochs"));
    let topo = EqualizerTopology {
        window_half: 6,
        conv_filters: 16,
        conv_kernel: 5,
        lstm_hidden: 16,
    };
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };

    let source_data = splits(ModulationFormat::Qam16, 5.0, n, 1)?;
    let target_data = splits(ModulationFormat::Qam32, 2.0, n, 2)?;
    println!("no-NN Q: source {:.2} dB, target {:.2} dB", no_nn_q(&source_data.test)?.q_db, no_nn_q(&target_data.test)?.q_db);

    let source = train_source(topo, &source_data, &cfg)?;
    println!("source final test Q {:.2} dB", source.log.final_test_q().unwrap_or(f64::NAN));
    println!("SNN on target {:.2} dB", evaluate_snn(&source.best, &target_data.test)?);

    let mask = make_transfer_mask(&source.best);
    println!(
        "transfer mask: {} of {} groups trainable",
        mask.trainable_count(&source.best)?,
        source.best.params.len()
    );
    let tl = transfer(&source.best, &target_data, &cfg)?;
    let scratch = train_from_scratch(topo, &target_data, &cfg)?;
    let unchanged = tl.frozen_digests.windows(2).all(|w| w[0] == w[1]);
    println!("frozen groups unchanged across epochs: {unchanged}");
    println!("epoch  TL[dB]  scratch[dB]");
    for (a, b) in tl.log.records.iter().zip(&scratch.log.records) {
        println!("{:>5}  {:>6.2}  {:>11.2}", a.epoch, a.test_q_db, b.test_q_db);
    }
    Ok(())
}
