//! Property tests over the public API.

use num_complex::Complex64;
use proptest::prelude::*;

use cteq::channel::{gen_symbols, qam_demap_hard, Dataset, ModulationFormat};
use cteq::equalizer::{window_dataset, EqualizerModel, EqualizerTopology};
use cteq::metrics::{ber_to_q_db, count_ber, epochs_to_reach, q_db_to_ber};
use cteq::transfer::{make_transfer_mask, subsample, subsample_len, EpochRecord, RunMode, TrainLog};

const FORMATS: [ModulationFormat; 4] = [
    ModulationFormat::Qam16,
    ModulationFormat::Qam32,
    ModulationFormat::Qam64,
    ModulationFormat::Qam128,
];

fn format() -> impl Strategy<Value = ModulationFormat> {
    prop::sample::select(FORMATS.to_vec())
}

fn topology() -> impl Strategy<Value = EqualizerTopology> {
    (1usize..5, 1usize..5, 1usize..4, 1usize..5).prop_map(|(m, f, k, h)| EqualizerTopology {
        window_half: m,
        conv_filters: f,
        conv_kernel: 2 * k - 1,
        lstm_hidden: h,
    })
}

fn noisy_dataset(format: ModulationFormat, n: usize, seed: u64, sigma: f64) -> Dataset {
    let s = gen_symbols(format, n, seed);
    let mut k = 0.0f64;
    let mut jitter = |v: &Complex64| {
        k += 1.0;
        v + Complex64::new((k * 12.9898).sin(), (k * 78.233).cos()) * sigma
    };
    let rx_x = s.x.iter().map(&mut jitter).collect();
    let rx_y = s.y.iter().map(&mut jitter).collect();
    Dataset::from_received(rx_x, rx_y, s.x, s.y, format, 2.0, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_is_strictly_decreasing_in_ber(a in 1e-6f64..0.4, b in 1e-6f64..0.4) {
        prop_assume!((a - b).abs() > 1e-12);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(ber_to_q_db(lo).unwrap() > ber_to_q_db(hi).unwrap());
    }

    #[test]
    fn q_round_trip(q in -3.0f64..15.0) {
        let back = ber_to_q_db(q_db_to_ber(q)).unwrap();
        prop_assert!((back - q).abs() < 1e-9, "{} -> {}", q, back);
    }

    #[test]
    fn demap_inverts_map_under_small_noise(fmt in format(), label in 0u32..128, dx in -0.45f64..0.45, dy in -0.45f64..0.45) {
        let label = label % fmt.order() as u32;
        let p = fmt.point(label);
        // neighbouring points sit 2 grid units apart in the unnormalized grid
        let (gx, gy) = fmt.grid_point(label);
        let unit = p.norm() / ((gx * gx + gy * gy) as f64).sqrt();
        let q = p + Complex64::new(dx, dy) * unit;
        prop_assert_eq!(qam_demap_hard(q, fmt), label);
    }

    #[test]
    fn ber_ignores_symbol_order(fmt in format(), seed in 0u64..1000, rot in 1usize..200) {
        let ds = noisy_dataset(fmt, 400, seed, 0.3);
        let (ax, ay) = ds.aligned_rx();
        let (lx, ly) = ds.tx_labels();
        let base = count_ber((&ax, &ay), (&lx, &ly), fmt).unwrap();
        let spin = |v: &[Complex64]| { let mut v = v.to_vec(); v.rotate_left(rot); v };
        let spin_l = |v: &[u32]| { let mut v = v.to_vec(); v.rotate_left(rot); v };
        let moved = count_ber((&spin(&ax), &spin(&ay)), (&spin_l(&lx), &spin_l(&ly)), fmt).unwrap();
        prop_assert_eq!(base, moved);
    }

    #[test]
    fn window_count_drops_edges(n in 20usize..200, m in 1usize..9) {
        let ds = noisy_dataset(ModulationFormat::Qam16, n, 3, 0.05);
        prop_assert_eq!(window_dataset(&ds, m).unwrap().len(), n - 2 * m);
    }

    #[test]
    fn subsamples_are_nested_prefixes(n in 10usize..500, a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let ds = noisy_dataset(ModulationFormat::Qam16, n, 4, 0.05);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(subsample_len(n, lo) > 0);
        let small = subsample(&ds, lo).unwrap();
        let big = subsample(&ds, hi).unwrap();
        prop_assert!(small.len() <= big.len());
        prop_assert_eq!(&big.tx_x[..small.len()], &small.tx_x[..]);
    }

    #[test]
    fn transfer_mask_selects_exactly_conv(topo in topology(), seed in 0u64..100) {
        let model = EqualizerModel::build(topo, seed).unwrap();
        let flags = make_transfer_mask(&model).flags_for(&model).unwrap();
        for (p, t) in model.params.iter().zip(flags) {
            prop_assert_eq!(t, p.id.starts_with("conv."), "{}", p.id);
        }
    }

    #[test]
    fn checkpoint_bytes_round_trip(topo in topology(), seed in 0u64..100) {
        let model = EqualizerModel::build(topo, seed).unwrap();
        let bytes = model.to_checkpoint_bytes();
        let back = EqualizerModel::from_checkpoint_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_checkpoint_bytes(), bytes);
    }

    #[test]
    fn epochs_to_reach_is_monotone(qs in prop::collection::vec(-2.0f64..8.0, 1..40), a in -2.0f64..8.0, b in -2.0f64..8.0) {
        let mut log = TrainLog::new(RunMode::TargetTl, ModulationFormat::Qam32, 2.0, 1.0);
        log.records = qs.iter().enumerate().map(|(i, &q)| EpochRecord {
            epoch: i + 1,
            train_loss: 0.0,
            val_q_db: q,
            test_q_db: q,
            wall_s: 0.0,
        }).collect();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        match (epochs_to_reach(&log, lo), epochs_to_reach(&log, hi)) {
            (Some(x), Some(y)) => prop_assert!(x <= y),
            (None, Some(_)) => prop_assert!(false, "lower target unreachable but higher reached"),
            _ => {}
        }
    }
}
