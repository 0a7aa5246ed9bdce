//! Simulates a short 16-QAM transmission over the default 9 x 50 km link,
//! stores the dataset and reports the CDC-only Q-factor.
//!
//!   cargo run --example simulate_link -- [n_symbols] [launch_dbm]

use cteq::channel::io::{read_dataset, write_dataset};
use cteq::channel::{simulate, LinkParams, ModulationFormat, TxConfig};
use cteq::metrics::no_nn_q;

fn main() -> cteq::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_symbols = args.next().map_or(8192, |a| a.parse().expect("n_symbols"));
    let launch = args.next().map_or(5.0, |a| a.parse().expect("launch power"));
    let tx = TxConfig {
        n_symbols,
        launch_power_dbm: launch,
        ..TxConfig::default()
    };
    let link = LinkParams::default();
    println!(
        "{} spans x {} km, D = {} ps/nm/km, gamma = {} 1/W/km",
        link.fiber.n_spans, link.fiber.span_km, link.fiber.dispersion_ps_nm_km, link.fiber.gamma_per_w_km
    );

    let ds = simulate(ModulationFormat::Qam16, &tx, &link)?;
    let q = no_nn_q(&ds)?;
    println!("{} symbols at {launch} dBm: no-NN Q = {:.2} dB (BER {:.3e})", ds.len(), q.q_db, q.ber_source.ber);

    let path = std::env::temp_dir().join("cteq_simulate_link.cteqds");
    write_dataset(&path, &ds)?;
    let back = read_dataset(&path)?;
    assert_eq!(back.rx_x, ds.rx_x);
    println!("dataset written to {}", path.display());
    Ok(())
}
