//! Fourth-order central finite differences against the hand-written backward pass of a
//! tiny conv + biLSTM + dense equalizer, every parameter coordinate.

use cteq::equalizer::{EqualizerModel, EqualizerTopology, Workspace, N_FEATURES};
use rand::Rng;

fn main() -> cteq::Result<()> {
    let topo = EqualizerTopology {
        window_half: 3,
        conv_filters: 3,
        conv_kernel: 3,
        lstm_hidden: 4,
    };
    let mut model = EqualizerModel::build(topo, 5)?;
    let mut rng = cteq::rng::seeded(6);
    let windows: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..topo.window_len() * N_FEATURES).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let refs: Vec<&[f64]> = windows.iter().map(Vec::as_slice).collect();
    let labels: Vec<[f64; 2]> = (0..6).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();

    let mut ws = Workspace::default();
    model.zero_grad();
    model.batch_loss(&refs, &labels, &mut ws, true)?;
    let analytic: Vec<Vec<f64>> = model.params.iter().map(|p| p.grad.data().to_vec()).collect();

    let h = 1e-3;
    for g in 0..model.params.len() {
        let mut worst = 0.0f64;
        for i in 0..model.params[g].len() {
            let orig = model.params[g].value.data()[i];
            let mut at = |d: f64| {
                model.params[g].value.data_mut()[i] = orig + d;
                model.batch_loss(&refs, &labels, &mut ws, false)
            };
            // fourth-order central difference
            let num = (8.0 * (at(h)? - at(-h)?) - (at(2.0 * h)? - at(-2.0 * h)?)) / (12.0 * h);
            model.params[g].value.data_mut()[i] = orig;
            let a = analytic[g][i];
            worst = worst.max((a - num).abs() / a.abs().max(num.abs()).max(1e-7));
        }
        println!("{:<14} {:>4} coords  max rel err {worst:.2e}", model.params[g].id, model.params[g].len());
    }
    Ok(())
}
