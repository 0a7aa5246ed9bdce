//! BER <-> Q-factor conversion table.

use cteq::metrics::{ber_to_q_db, q_db_to_ber};

fn main() -> cteq::Result<()> {
    println!("{:>12}  {:>8}", "BER", "Q [dB]");
    for ber in [0.4, 0.158655, 0.1, 0.0227501, 1e-2, 3.8e-3, 1e-3, 1e-4, 1e-6, 1e-9] {
        println!("{ber:>12.4e}  {:>8.3}", ber_to_q_db(ber)?);
    }
    println!();
    for q in [0.0, 3.0, 6.0, 9.0, 12.0] {
        println!("Q = {q:>4.1} dB  ->  BER {:.4e}", q_db_to_ber(q));
    }
    Ok(())
}
