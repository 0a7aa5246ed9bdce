use num_complex::Complex64;
use rand::Rng;

use crate::channel::{apply_dispersion, cdc_compensate, propagate_span, DualPolWaveform, FiberParams};
use crate::equalizer::{EqualizerModel, EqualizerTopology, Workspace, N_FEATURES};
use crate::error::Result;
use crate::metrics::ber_to_q_db;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn gaussian(n: usize, dt: f64, t0: f64, peak_w: f64) -> Result<DualPolWaveform> {
    let x: Vec<Complex64> = (0..n)
        .map(|k| {
            let t = (k as f64 - n as f64 / 2.0) * dt;
            Complex64::new(peak_w.sqrt() * (-t * t / (2.0 * t0 * t0)).exp(), 0.0)
        })
        .collect();
    DualPolWaveform::new(x.clone(), x, 1.0 / dt, peak_w)
}

fn rms_width(w: &DualPolWaveform) -> f64 {
    let dt = 1.0 / w.sample_rate_hz;
    let n = w.len() as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (k, v) in w.x_pol.iter().enumerate() {
        let t = (k as f64 - n / 2.0) * dt;
        let p = v.norm_sqr();
        m0 += p;
        m1 += p * t;
        m2 += p * t * t;
    }
    (m2 / m0 - (m1 / m0).powi(2)).sqrt()
}

fn dispersion_check() -> Result<CheckOutcome> {
    let fiber = FiberParams::default();
    let t0 = 5e-12;
    let w = gaussian(8192, 0.25e-12, t0, 1e-3)?;
    let length = 2.0 * fiber.dispersion_length_km(t0);
    let out = apply_dispersion(&w, fiber.beta2_s2_per_km(), length);
    let ratio = rms_width(&out) / rms_width(&w);
    let expected = (1.0 + (fiber.beta2_s2_per_km() * length / (t0 * t0)).powi(2)).sqrt();
    let rel = (ratio - expected).abs() / expected;
    Ok(outcome("dispersion broadening", rel < 1e-3, format!("relative error {rel:.2e}")))
}

fn spm_energy_check() -> Result<CheckOutcome> {
    let fiber = FiberParams {
        alpha_db_per_km: 0.0,
        dispersion_ps_nm_km: 0.0,
        n_spans: 1,
        ..FiberParams::default()
    };
    let w = gaussian(4096, 0.5e-12, 10e-12, 0.05)?;
    let out = propagate_span(&w, &fiber, 0.5)?;
    let rel = (out.energy() - w.energy()).abs() / w.energy();
    Ok(outcome("SPM energy conservation", rel < 1e-9, format!("relative change {rel:.2e}")))
}

fn cdc_check() -> Result<CheckOutcome> {
    let fiber = FiberParams::default();
    let w = gaussian(4096, 1e-12, 10e-12, 1e-3)?;
    let back = cdc_compensate(
        &apply_dispersion(&w, fiber.beta2_s2_per_km(), fiber.link_length_km()),
        &fiber,
    );
    let rms = back.rms_diff(&w);
    Ok(outcome("dispersion then CDC identity", rms < 1e-9, format!("rms {rms:.2e}")))
}

fn q_conversion_check() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (ber, q) in [(1e-3, 9.80), (0.0227501, 6.02), (0.158655, 0.0)] {
        worst = worst.max((ber_to_q_db(ber)? - q).abs());
    }
    Ok(outcome("Q conversions", worst < 0.01, format!("max deviation {worst:.4} dB")))
}

fn gradient_check() -> Result<CheckOutcome> {
    let topo = EqualizerTopology {
        window_half: 2,
        conv_filters: 2,
        conv_kernel: 3,
        lstm_hidden: 4,
    };
    let mut model = EqualizerModel::build(topo, 17)?;
    let mut rng = seeded(18);
    for p in &mut model.params {
        p.value.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(-0.3..0.3));
    }
    let wins: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..topo.window_len() * N_FEATURES).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect();
    let refs: Vec<&[f64]> = wins.iter().map(Vec::as_slice).collect();
    let labels: Vec<[f64; 2]> = (0..4).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let mut ws = Workspace::default();
    model.zero_grad();
    model.batch_loss(&refs, &labels, &mut ws, true)?;
    let analytic: Vec<Vec<f64>> = model.params.iter().map(|p| p.grad.data().to_vec()).collect();
    // fourth-order central stencil; h = 1e-3 keeps roundoff and
    // truncation both near 1e-13 absolute
    let h = 1e-3;
    let (mut worst, mut count) = (0.0f64, 0usize);
    for g in 0..model.params.len() {
        for i in 0..model.params[g].len() {
            let orig = model.params[g].value.data()[i];
            let mut at = |d: f64| -> Result<f64> {
                model.params[g].value.data_mut()[i] = orig + d;
                model.batch_loss(&refs, &labels, &mut ws, false)
            };
            let num = (8.0 * (at(h)? - at(-h)?) - (at(2.0 * h)? - at(-2.0 * h)?)) / (12.0 * h);
            model.params[g].value.data_mut()[i] = orig;
            let a = analytic[g][i];
            worst = worst.max((a - num).abs() / a.abs().max(num.abs()).max(1e-7));
            count += 1;
        }
    }
    Ok(outcome(
        "model gradients vs finite differences",
        worst < 1e-5 && count >= 200,
        format!("{count} coordinates, max relative error {worst:.2e}"),
    ))
}

fn checkpoint_check() -> Result<CheckOutcome> {
    let model = EqualizerModel::build(EqualizerTopology::default(), 3)?;
    let bytes = model.to_checkpoint_bytes();
    let same = EqualizerModel::from_checkpoint_bytes(&bytes)?.to_checkpoint_bytes() == bytes;
    Ok(outcome("checkpoint round trip", same, format!("{} bytes", bytes.len())))
}

/// Fast oracle suite. The CLI exits non-zero unless every check passes.
pub fn selftest() -> Vec<CheckOutcome> {
    let checks: [(&'static str, fn() -> Result<CheckOutcome>); 6] = [
        ("model gradients vs finite differences", gradient_check),
        ("dispersion broadening", dispersion_check),
        ("SPM energy conservation", spm_energy_check),
        ("dispersion then CDC identity", cdc_check),
        ("Q conversions", q_conversion_check),
        ("checkpoint round trip", checkpoint_check),
    ];
    checks
        .iter()
        .map(|(name, f)| f().unwrap_or_else(|e| outcome(name, false, format!("error: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
