mod common;

use std::time::Instant;

use common::rng;
use extremis::sim::{random_support, sample};
use extremis::{
    DamexModel, DamexParams, Error, FeatureMatrix, FeatureSubset, KChoice, MembershipMode,
};
use rand::Rng;

fn comonotone(n: usize, d: usize) -> FeatureMatrix {
    let col: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + i as f64).collect();
    FeatureMatrix::from_columns(&vec![col; d]).unwrap()
}

/// Log of a simulated sample, so strictly increasing maps stay finite.
fn log_sample(seed: u64, n: usize) -> (FeatureMatrix, FeatureMatrix) {
    let mut rng = rng(seed);
    let spec = random_support(6, 4, 0.2, &mut rng).unwrap();
    let train = sample(&spec, n, &mut rng).unwrap().map_columns(|_, x| x.ln()).unwrap();
    let test = sample(&spec, n / 2, &mut rng).unwrap().map_columns(|_, x| x.ln()).unwrap();
    (train, test)
}

#[test]
fn comonotone_fit_is_one_full_cone() {
    let model = DamexModel::fit(&comonotone(400, 3), DamexParams::default().with_epsilon(0.2)).unwrap();
    let entries = model.representation().sorted_entries();
    assert_eq!(entries, vec![(FeatureSubset::full(3), 1.0)]);
}

#[test]
fn countermonotone_fit_has_two_singletons() {
    let up: Vec<f64> = (1..=6).map(f64::from).collect();
    let down: Vec<f64> = up.iter().rev().cloned().collect();
    let data = FeatureMatrix::from_columns(&[up, down]).unwrap();
    let params = DamexParams::default()
        .with_k(KChoice::Fixed(2))
        .with_epsilon(0.9)
        .with_p(0.0);
    let model = DamexModel::fit(&data, params).unwrap();
    assert_eq!(
        model.representation().sorted_entries(),
        vec![(FeatureSubset::singleton(0), 1.0), (FeatureSubset::singleton(1), 1.0)]
    );
}

#[test]
fn scoring_examples() {
    let model = DamexModel::fit(&comonotone(400, 3), DamexParams::default().with_epsilon(0.2)).unwrap();
    let rec = model.score(&[1e6, 1e6, 1e6]).unwrap();
    assert_eq!(rec.subset, Some(FeatureSubset::full(3)));
    assert_eq!(rec.radius, 800.0);
    assert_eq!(rec.score, 1.0 / 800.0);

    // large in one coordinate only: a sub-cone the model never charged
    let rec = model.score(&[1e6, -1.0, -1.0]).unwrap();
    assert_eq!(rec.subset, Some(FeatureSubset::singleton(0)));
    assert_eq!(rec.score, 0.0);

    let near = model.score(&[390.0, 390.0, 390.0]).unwrap();
    let far = model.score(&[399.0, 399.0, 399.0]).unwrap();
    assert_eq!(near.subset, far.subset);
    assert!(far.radius > near.radius);
    assert!(far.score < near.score);
}

#[test]
fn fixed_scale_mode_scores_non_extremes_zero() {
    let params = DamexParams::default()
        .with_epsilon(0.2)
        .with_mode(MembershipMode::FixedScaleRectangle);
    let model = DamexModel::fit(&comonotone(400, 3), params).unwrap();
    let rec = model.score(&[5.0, 5.0, 5.0]).unwrap();
    assert_eq!(rec.subset, None);
    assert_eq!(rec.score, 0.0);
    let rec = model.score(&[1e6, 1e6, 1e6]).unwrap();
    assert_eq!(rec.subset, Some(FeatureSubset::full(3)));
}

#[test]
fn batch_scoring_contract() {
    let (train, test) = log_sample(41, 4000);
    let model = DamexModel::fit(&train, DamexParams::default()).unwrap();
    assert!(model.score_rows(&[]).unwrap().is_empty());

    let total = model.representation().total_mass();
    let n = model.n_train() as f64;
    for rec in model.score_batch(&train).unwrap() {
        assert!(rec.score.is_finite() && rec.score >= 0.0);
        assert!(rec.score <= total);
        assert!(rec.score <= total / rec.radius + 1e-15);
        assert!((1.0..=2.0 * n).contains(&rec.radius));
        assert!(!rec.subset.unwrap().is_empty());
    }

    let records = model.score_batch(&test).unwrap();
    assert!(records.iter().enumerate().all(|(i, r)| r.row == i));
    let order: Vec<usize> = (0..test.n()).rev().collect();
    let reversed = model.score_batch(&test.select_rows(&order).unwrap()).unwrap();
    for (i, rec) in reversed.iter().enumerate() {
        let orig = &records[order[i]];
        assert_eq!((rec.score, rec.radius, rec.subset), (orig.score, orig.radius, orig.subset));
    }

    let narrow = FeatureMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
    assert!(matches!(
        model.score_batch(&narrow),
        Err(Error::DimensionMismatch { expected: 6, got: 2 })
    ));
}

/// Representation JSON and every score record under `g` applied to all
/// columns of train and test.
fn fingerprint(train: &FeatureMatrix, test: &FeatureMatrix, g: &dyn Fn(f64) -> f64) -> (String, String) {
    let train = train.map_columns(|_, x| g(x)).unwrap();
    let test = test.map_columns(|_, x| g(x)).unwrap();
    let model = DamexModel::fit(&train, DamexParams::default().with_epsilon(0.1)).unwrap();
    let rep = serde_json::to_string(model.representation()).unwrap();
    let scores = serde_json::to_string(&model.score_batch(&test).unwrap()).unwrap();
    (rep, scores)
}

#[test]
fn strictly_increasing_maps_change_nothing() {
    let (train, test) = log_sample(42, 5000);
    let base = fingerprint(&train, &test, &|x| x);
    assert!(base.0.contains("mass"));
    let maps: [&dyn Fn(f64) -> f64; 3] = [&|x| x.exp(), &|x| x * x * x, &|x| 3.5 * x + 7.0];
    for g in maps {
        assert_eq!(fingerprint(&train, &test, g), base);
    }
}

#[test]
fn save_load_round_trip_is_bit_exact() {
    let (train, _) = log_sample(43, 3000);
    for mode in [MembershipMode::SelfScaledCone, MembershipMode::FixedScaleRectangle] {
        let model = DamexModel::fit(&train, DamexParams::default().with_epsilon(0.1).with_mode(mode)).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let loaded = DamexModel::load(buf.as_slice()).unwrap();
        assert_eq!(loaded, model);

        let mut rng = rng(44);
        for _ in 0..100 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..12.0)).collect();
            let (a, b) = (model.score(&x).unwrap(), loaded.score(&x).unwrap());
            assert_eq!(a.score.to_bits(), b.score.to_bits());
            assert_eq!(a.radius.to_bits(), b.radius.to_bits());
            assert_eq!(a.subset, b.subset);
        }
    }
}

#[test]
fn damaged_model_files_are_rejected() {
    let model = DamexModel::fit(&comonotone(50, 2), DamexParams::default().with_epsilon(0.3)).unwrap();
    let mut buf = Vec::new();
    model.save(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();

    let truncated = &text[..text.len() / 2];
    assert!(matches!(DamexModel::load(truncated.as_bytes()), Err(Error::Parse { .. })));

    let future = text.replacen("\"version\":1", "\"version\":7", 1);
    assert!(matches!(
        DamexModel::load(future.as_bytes()),
        Err(Error::Version { found: 7, supported: 1 })
    ));
}

#[test]
fn parameter_errors() {
    let data = comonotone(20, 2);
    let bad = [
        DamexParams::default().with_k(KChoice::Fixed(21)),
        DamexParams::default().with_k(KChoice::Fixed(0)),
        DamexParams::default().with_epsilon(0.0),
        DamexParams::default().with_epsilon(1.0),
        DamexParams::default().with_p(-0.1),
    ];
    for params in bad {
        assert!(matches!(DamexModel::fit(&data, params), Err(Error::Parameter(_))), "{params:?}");
    }
}

fn fit_seconds(data: &FeatureMatrix) -> f64 {
    (0..3)
        .map(|_| {
            let start = Instant::now();
            DamexModel::fit(data, DamexParams::default()).unwrap();
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn fit_time_grows_like_n_log_n() {
    let mut rng = rng(45);
    let spec = random_support(8, 5, 0.1, &mut rng).unwrap();
    let big = sample(&spec, 400_000, &mut rng).unwrap();
    let half = big.select_rows(&(0..200_000).collect::<Vec<_>>()).unwrap();
    fit_seconds(&half);
    let (t1, t2) = (fit_seconds(&half), fit_seconds(&big));
    eprintln!("fit: {t1:.3}s at n = 2e5, {t2:.3}s at n = 4e5");
    assert!(t2 / t1 < 2.4, "doubling n: {t1:.3}s -> {t2:.3}s");
}
