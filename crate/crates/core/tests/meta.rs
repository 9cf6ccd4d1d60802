mod common;

use common::{low_rank, ridge_gd, rmse};
use mib_core::data::DataMatrix;
use mib_core::imputers::{self, ImputerSpec};
use mib_core::masking::{apply_mcar_mask, Mask, MaskedCell};
use mib_core::meta::{assemble_training_set, fit_meta, mib_complete, predict_meta, FjMode, MetaModel, MibImputer};
use mib_core::rng::Stream;
use proptest::prelude::*;

fn random_complete(n: usize, d: usize, s: &mut Stream) -> DataMatrix {
    DataMatrix::from_dense(n, d, (0..n * d).map(|_| s.normal()).collect()).unwrap()
}

/// `k` random completions, a truth matrix and a mask over `cells` random positions.
fn random_problem(k: usize, n: usize, d: usize, cells: usize, seed: u64) -> (Vec<DataMatrix>, Mask) {
    let mut s = Stream::new(seed);
    let comps: Vec<DataMatrix> = (0..k).map(|_| random_complete(n, d, &mut s)).collect();
    let picks = s.subset(n * d, cells);
    let cells = picks
        .into_iter()
        .map(|p| MaskedCell {
            row: p / d,
            col: p % d,
            truth: s.normal(),
        })
        .collect();
    (comps, Mask::from_cells(n, d, cells, seed, 0.0).unwrap())
}

#[test]
fn assembly_of_two_cells() {
    let a = DataMatrix::from_dense(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let b = DataMatrix::from_dense(3, 2, vec![-1.0, -2.0, -3.0, -4.0, -5.0, -6.0]).unwrap();
    let cells = vec![
        MaskedCell { row: 2, col: 0, truth: 9.0 },
        MaskedCell { row: 0, col: 1, truth: 7.0 },
    ];
    let mask = Mask::from_cells(3, 2, cells, 0, 0.0).unwrap();
    let ts = assemble_training_set(&[a, b], &mask, 2).unwrap();
    assert_eq!(ts.width(), 4);
    assert_eq!(ts.row(0), &[2.0, -2.0, 0.0, 1.0]);
    assert_eq!(ts.row(1), &[5.0, -5.0, 1.0, 0.0]);
    assert_eq!(ts.y, vec![7.0, 9.0]);
    assert_eq!(ts.positions, vec![(0, 1), (2, 0)]);
}

#[test]
fn seven_imputers_twenty_columns_is_width_27() {
    let (comps, mask) = random_problem(7, 10, 20, 30, 1);
    let ts = assemble_training_set(&comps, &mask, 20).unwrap();
    assert_eq!(ts.width(), 27);
    assert_eq!(ts.x.len(), 30 * 27);
}

#[test]
fn one_hot_columns_count_cells_per_column() {
    let (comps, mask) = random_problem(3, 12, 5, 25, 2);
    let ts = assemble_training_set(&comps, &mask, 5).unwrap();
    let counts = mask.column_counts();
    for j in 0..5 {
        let sum: f64 = (0..ts.len()).map(|z| ts.row(z)[3 + j]).sum();
        assert_eq!(sum, counts[j] as f64);
    }
    assert!((0..ts.len()).all(|z| ts.row(z)[3..].iter().sum::<f64>() == 1.0));
}

#[test]
fn ridge_matches_gradient_descent() {
    // 50 cells, K = 3, d = 6: a 50 x 9 design
    let (comps, mask) = random_problem(3, 20, 6, 50, 3);
    let ts = assemble_training_set(&comps, &mask, 6).unwrap();
    let eps = 0.5;
    let model = fit_meta(&ts, eps).unwrap();
    let gd = ridge_gd(&ts.x, ts.len(), ts.width(), &ts.y, eps, 20_000);
    for (a, b) in model.weights.iter().chain([&model.intercept]).zip(&gd) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn exact_combination_is_recovered() {
    let mut s = Stream::new(4);
    let a = random_complete(15, 4, &mut s);
    let b = random_complete(15, 4, &mut s);
    let picks = s.subset(60, 30);
    let cells = picks
        .into_iter()
        .map(|p| {
            let (i, j) = (p / 4, p % 4);
            MaskedCell { row: i, col: j, truth: 0.3 * a.value(i, j) + 0.7 * b.value(i, j) }
        })
        .collect();
    let mask = Mask::from_cells(15, 4, cells, 0, 0.0).unwrap();
    let ts = assemble_training_set(&[a, b], &mask, 4).unwrap();
    let model = fit_meta(&ts, 0.0).unwrap();
    assert!((model.weights[0] - 0.3).abs() < 1e-9);
    assert!((model.weights[1] - 0.7).abs() < 1e-9);
    // the min-norm solution puts nothing on the collinear one-hot block
    assert!(model.weights[2..].iter().chain([&model.intercept]).all(|w| w.abs() < 1e-9));
}

#[test]
fn permuting_imputers_permutes_weights() {
    let (comps, mask) = random_problem(4, 15, 3, 35, 5);
    let order = [2, 0, 3, 1];
    let shuffled: Vec<DataMatrix> = order.iter().map(|&i| comps[i].clone()).collect();
    let m1 = fit_meta(&assemble_training_set(&comps, &mask, 3).unwrap(), 1e-6).unwrap();
    let m2 = fit_meta(&assemble_training_set(&shuffled, &mask, 3).unwrap(), 1e-6).unwrap();
    for (slot, &i) in order.iter().enumerate() {
        assert!((m2.weights[slot] - m1.weights[i]).abs() < 1e-9);
    }
    let cells: Vec<(usize, usize)> = (0..15).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
    let p1 = predict_meta(&m1, &comps, &cells, 3).unwrap();
    let p2 = predict_meta(&m2, &shuffled, &cells, 3).unwrap();
    assert!(p1.iter().zip(&p2).all(|(a, b)| (a - b).abs() < 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn training_fit_beats_every_single_imputer(seed in 0u64..100_000, k in 1usize..5) {
        let (comps, mask) = random_problem(k, 12, 4, 30, seed);
        let ts = assemble_training_set(&comps, &mask, 4).unwrap();
        let model = fit_meta(&ts, 0.0).unwrap();
        let meta = rmse(&model.fitted_values(&ts), &ts.y);
        for c in 0..k {
            let single: Vec<f64> = (0..ts.len()).map(|z| ts.row(z)[c]).collect();
            prop_assert!(meta <= rmse(&single, &ts.y) + 1e-9);
        }
    }

    #[test]
    fn prediction_on_training_cells_equals_fitted_values(seed in 0u64..100_000) {
        let (comps, mask) = random_problem(3, 10, 4, 20, seed);
        let ts = assemble_training_set(&comps, &mask, 4).unwrap();
        let model = fit_meta(&ts, 1e-6).unwrap();
        let pred = predict_meta(&model, &comps, &ts.positions, 4).unwrap();
        prop_assert_eq!(pred, model.fitted_values(&ts));
    }
}

fn light_base() -> Vec<ImputerSpec> {
    ["mean", "median", "knn(k=3)", "mf(epochs=40)"].iter().map(|s| s.parse().unwrap()).collect()
}

#[test]
fn stacked_imputer_end_to_end() {
    let full = low_rank(40, 5, 2, 0.1, 6);
    let (masked, mask) = apply_mcar_mask(&full, 0.15, 7, true).unwrap();
    let mib = MibImputer::fit(&masked, &mask, &light_base(), 1e-6, FjMode::OneHot).unwrap();

    let train = mib.training_rmse();
    for f in &mib.base {
        let out = f.transform(&masked).unwrap();
        let pred: Vec<f64> = mask.cells().iter().map(|c| out.value(c.row, c.col)).collect();
        let truth: Vec<f64> = mask.cells().iter().map(|c| c.truth).collect();
        assert!(train <= rmse(&pred, &truth) + 1e-3, "{} beat the stack", f.spec());
    }

    // fresh gaps on the training rows
    let (probe, _) = apply_mcar_mask(&full, 0.2, 8, true).unwrap();
    let out = mib.transform(&probe).unwrap();
    assert!(out.is_complete());
    for i in 0..40 {
        for j in 0..5 {
            if let Some(v) = probe.get(i, j) {
                assert_eq!(out.value(i, j).to_bits(), v.to_bits());
            }
        }
    }
    let comps: Vec<DataMatrix> = mib.base.iter().map(|f| f.transform(&probe).unwrap()).collect();
    let cells = probe.missing_cells();
    let direct = predict_meta(&mib.model, &comps, &cells, 5).unwrap();
    for (&(i, j), v) in cells.iter().zip(direct) {
        assert_eq!(out.value(i, j).to_bits(), v.to_bits());
    }
}

#[test]
fn saved_model_predicts_identically() {
    let full = low_rank(30, 4, 2, 0.1, 9);
    let (masked, mask) = apply_mcar_mask(&full, 0.2, 10, false).unwrap();
    let mib = MibImputer::fit(&masked, &mask, &light_base(), 1e-6, FjMode::OneHotStats).unwrap();
    let mut back = MetaModel::from_text(&mib.model.to_text()).unwrap();
    // a fit-time diagnostic, not part of the saved model
    assert!(back.normal_residual.is_nan());
    back.normal_residual = mib.model.normal_residual;
    assert_eq!(back, mib.model);
    let a = mib.transform(&masked).unwrap();
    let b = mib_complete(&back, &mib.base, &masked).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mismatched_roster_is_rejected() {
    let full = low_rank(20, 3, 1, 0.1, 11);
    let (masked, mask) = apply_mcar_mask(&full, 0.2, 12, false).unwrap();
    let mib = MibImputer::fit(&masked, &mask, &light_base(), 1e-6, FjMode::OneHot).unwrap();
    let mut base = mib.base.clone();
    base.swap(0, 1);
    assert!(mib_complete(&mib.model, &base, &masked).is_err());
    let fewer = vec![imputers::fit(&ImputerSpec::Mean, &masked).unwrap()];
    assert!(mib_complete(&mib.model, &fewer, &masked).is_err());
}
