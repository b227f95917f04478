//! Independent reference implementations shared by the integration tests.
//! Everything here counts directly from raw data in O(n^2) or O(n 2^d)
//! and never calls the library code it checks.

#![allow(dead_code)]

use extremis::{standardize_training, FeatureMatrix, FeatureSubset, MarginalRanker};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn all_distinct(col: &[f64]) -> bool {
    let mut s = col.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).all(|w| w[0] < w[1])
}

/// Distinct-valued columns with a shared heavy-tailed factor on a random
/// subset of features, so that joint extremes of several sizes occur.
pub fn dependent_matrix<R: Rng>(rng: &mut R, n: usize, d: usize) -> FeatureMatrix {
    loop {
        let groups: Vec<usize> = (0..d).map(|_| rng.random_range(0..3)).collect();
        let mut cols = vec![Vec::with_capacity(n); d];
        for _ in 0..n {
            let shared: [f64; 3] = std::array::from_fn(|_| 1.0 / rng.random::<f64>().max(1e-300));
            for (j, col) in cols.iter_mut().enumerate() {
                let own = 1.0 / rng.random::<f64>().max(1e-300);
                let mix = if groups[j] == 0 { own } else { shared[groups[j]].max(own) };
                col.push(mix * (1.0 + 0.1 * j as f64));
            }
        }
        if cols.iter().all(|c| all_distinct(c)) {
            return FeatureMatrix::from_columns(&cols).unwrap();
        }
    }
}

/// Independent columns, each a random permutation of `n` distinct values.
pub fn permutation_matrix<R: Rng>(rng: &mut R, n: usize, d: usize) -> FeatureMatrix {
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            let mut c: Vec<f64> = (0..n).map(|i| i as f64 * 0.75 - 10.0).collect();
            c.shuffle(rng);
            c
        })
        .collect();
    FeatureMatrix::from_columns(&cols).unwrap()
}

/// Columns with repeated values drawn from a small alphabet.
pub fn tied_matrix<R: Rng>(rng: &mut R, n: usize, d: usize) -> FeatureMatrix {
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| rng.random_range(0..5) as f64).collect())
        .collect();
    FeatureMatrix::from_columns(&cols).unwrap()
}

/// `V̂_i^j = n / #{l : X_l^j >= X_i^j}`.
pub fn brute_standardize(data: &FeatureMatrix) -> Vec<Vec<f64>> {
    let (n, d) = (data.n(), data.d());
    (0..n)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let at_or_above = (0..n).filter(|&l| data.get(l, j) >= data.get(i, j)).count();
                    n as f64 / at_or_above as f64
                })
                .collect()
        })
        .collect()
}

/// Count of rows in each `(n/k) R_α^ε`, scanning every nonempty subset.
pub fn brute_mass_counts(v: &[Vec<f64>], k: usize, eps: f64) -> Vec<(FeatureSubset, usize)> {
    let n = v.len();
    let d = v[0].len();
    let radial = n as f64 / k as f64;
    let cut = eps * radial;
    let mut out = Vec::new();
    for bits in 1u64..(1u64 << d) {
        let count = v
            .iter()
            .filter(|row| {
                row.iter().cloned().fold(f64::MIN, f64::max) >= radial
                    && (0..d).all(|j| (bits >> j & 1 == 1) == (row[j] > cut))
            })
            .count();
        if count > 0 {
            out.push((FeatureSubset::from_bits(bits), count));
        }
    }
    out
}

fn sorted_columns(data: &FeatureMatrix) -> Vec<Vec<f64>> {
    (0..data.d())
        .map(|j| {
            let mut c = data.column(j);
            c.sort_by(f64::total_cmp);
            c
        })
        .collect()
}

/// `X_i^j >= X^j_(n-⌊k x⌋+1)` given column `j` sorted ascending; empty
/// when `⌊k x⌋ = 0`.
fn at_or_above_level(sorted: &[f64], value: f64, k: usize, x: f64) -> bool {
    let m = (k as f64 * x).floor() as usize;
    m > 0 && value >= sorted[sorted.len() - m]
}

pub fn brute_stdf(data: &FeatureMatrix, k: usize, x: &[f64]) -> usize {
    let sorted = sorted_columns(data);
    (0..data.n())
        .filter(|&i| (0..data.d()).any(|j| at_or_above_level(&sorted[j], data.get(i, j), k, x[j])))
        .count()
}

pub fn brute_g(
    data: &FeatureMatrix,
    k: usize,
    x: &[f64],
    z: &[f64],
    alpha: FeatureSubset,
    beta: FeatureSubset,
) -> usize {
    let sorted = sorted_columns(data);
    (0..data.n())
        .filter(|&i| {
            alpha
                .indices()
                .all(|j| at_or_above_level(&sorted[j], data.get(i, j), k, x[j]))
                && beta
                    .indices()
                    .all(|j| !at_or_above_level(&sorted[j], data.get(i, j), k, z[j]))
        })
        .count()
}

/// Count of a `1/k`-quantized value.
pub fn as_count(value: f64, k: usize) -> usize {
    let c = value * k as f64;
    assert!((c - c.round()).abs() < 1e-6, "{value} is not a multiple of 1/{k}");
    c.round() as usize
}

/// ε in (0, 1) with `k/ε` not an integer, so strict and weak cuts on the
/// `n/m` lattice of standardized values coincide.
pub fn off_lattice_epsilon<R: Rng>(rng: &mut R, k: usize) -> f64 {
    loop {
        let eps = rng.random_range(0.02..0.9);
        let q = k as f64 / eps;
        if (q - q.round()).abs() > 1e-6 {
            return eps;
        }
    }
}

/// Mann-Whitney over all positive/negative pairs.
pub fn brute_roc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Average precision by scanning every distinct score as a threshold.
pub fn brute_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let positives = labels.iter().filter(|&&l| l).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut prev_tp = 0usize;
    let mut ap = 0.0;
    for t in thresholds {
        let selected: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = selected.iter().filter(|&&i| labels[i]).count();
        if tp > prev_tp {
            ap += ((tp - prev_tp) as f64 / positives) * (tp as f64 / selected.len() as f64);
        }
        prev_tp = tp;
    }
    ap
}

/// Checks that the four marginal tail conditions agree on one dataset, for
/// every `k` and every `x` in `grid`. Returns the number of disagreements.
pub fn rank_equivalence_violations(data: &FeatureMatrix, grid: &[f64]) -> usize {
    let (n, d) = (data.n(), data.d());
    let ranker = MarginalRanker::fit(data);
    let v = standardize_training(data);
    let mut violations = 0;
    for j in 0..d {
        let col = data.column(j);
        let sorted = ranker.sorted_column(j);
        // any strictly decreasing map plays the role of 1 - F_j
        let u: Vec<f64> = col.iter().map(|&x| -x).collect();
        let mut u_sorted = u.clone();
        u_sorted.sort_by(f64::total_cmp);
        for k in 1..=n {
            for &x in grid {
                let m = (k as f64 / x).floor() as usize;
                if m == 0 || m > n {
                    continue;
                }
                for i in 0..n {
                    let above = n - ranker.count_below(j, col[i]);
                    let c1 = (above as f64 / n as f64) <= (k as f64 / x) / n as f64;
                    let c2 = v[i].coords()[j] >= (n as f64 / k as f64) * x;
                    let c3 = col[i] >= sorted[n - m];
                    let c4 = u[i] <= u_sorted[m - 1];
                    if !(c1 == c2 && c2 == c3 && c3 == c4) {
                        violations += 1;
                    }
                }
            }
        }
    }
    violations
}

/// Powers of two: every threshold product and quotient below is exact.
pub fn dyadic_grid() -> Vec<f64> {
    (-3..=3).map(|e| 2f64.powi(e)).collect()
}

/// Runs the mass estimator, `l_n`, `g_n` and the rectangle identity against
/// direct counting on `data` with randomly drawn `(k, ε, x, z, α, β)`.
/// Returns one line per disagreement.
pub fn oracle_disagreements<R: Rng>(data: &FeatureMatrix, rng: &mut R) -> Vec<String> {
    let (n, d) = (data.n(), data.d());
    let mut bad = Vec::new();

    let v = standardize_training(data);
    let brute_v = brute_standardize(data);
    if v.iter().map(|p| p.coords().to_vec()).collect::<Vec<_>>() != brute_v {
        bad.push("standardized values differ from direct counting".to_string());
    }

    // k/ε <= n keeps the ε^{-1} levels inside the sample
    let (k, eps) = loop {
        let eps = rng.random_range(0.05..0.9);
        let k_max = ((n as f64 * eps).floor() as usize).max(1);
        let k = rng.random_range(1..=k_max);
        let q = k as f64 / eps;
        if q <= n as f64 && (q - q.round()).abs() > 1e-6 {
            break (k, eps);
        }
    };

    let rep = extremis::estimate_masses(&v, k, eps).unwrap();
    let mut got: Vec<(FeatureSubset, usize)> = rep
        .sorted_entries()
        .into_iter()
        .map(|(a, m)| (a, as_count(m, k)))
        .collect();
    got.sort_by_key(|(a, _)| a.bits());
    let want = brute_mass_counts(&brute_v, k, eps);
    if got != want {
        bad.push(format!("masses (k={k}, eps={eps}): {got:?} vs {want:?}"));
    }
    let extreme_rows = brute_v
        .iter()
        .filter(|row| row.iter().any(|&x| x >= n as f64 / k as f64))
        .count();
    if rep.charged_points() != extreme_rows {
        bad.push(format!("{} charged points, {extreme_rows} extreme rows", rep.charged_points()));
    }

    let counter = extremis::TailCounter::new(data);
    let level = |rng: &mut R| {
        if rng.random_bool(0.15) {
            0.0
        } else {
            rng.random_range(0.0..=n as f64 / k as f64)
        }
    };
    for _ in 0..5 {
        let x: Vec<f64> = (0..d).map(|_| level(rng)).collect();
        let lib = as_count(counter.stdf(k, &x).unwrap(), k);
        let brute = brute_stdf(data, k, &x);
        if lib != brute {
            bad.push(format!("l_n at {x:?}: {lib} vs {brute}"));
        }

        let alpha = FeatureSubset::from_bits(rng.random_range(1..(1u64 << d)));
        let beta = FeatureSubset::from_bits(rng.random_range(0..(1u64 << d)));
        let z: Vec<f64> = (0..d).map(|_| level(rng)).collect();
        let lib = as_count(counter.g(k, &x, &z, alpha, beta).unwrap(), k);
        let brute = brute_g(data, k, &x, &z, alpha, beta);
        if lib != brute {
            bad.push(format!("g_n alpha={alpha} beta={beta}: {lib} vs {brute}"));
        }
    }

    let inv = vec![1.0 / eps; d];
    let full = FeatureSubset::full(d);
    let mut probes = rep.subsets();
    probes.push(FeatureSubset::from_bits(rng.random_range(1..(1u64 << d))));
    for alpha in probes {
        let rest = alpha.complement(d);
        let z: Vec<f64> = (0..d).map(|j| if alpha.contains(j) { 1.0 } else { 1.0 / eps }).collect();
        let inside = as_count(counter.g(k, &inv, &inv, alpha, rest).unwrap(), k);
        let central = as_count(counter.g(k, &inv, &z, alpha, full).unwrap(), k);
        let mass = as_count(rep.mass(alpha), k);
        if inside as i64 - central as i64 != mass as i64 {
            bad.push(format!("rectangle identity at {alpha}: {inside} - {central} != {mass}"));
        }
        let direct = (
            brute_g(data, k, &inv, &inv, alpha, rest),
            brute_g(data, k, &inv, &z, alpha, full),
        );
        if direct != (inside, central) {
            bad.push(format!("rectangle terms at {alpha}: {:?} vs {direct:?}", (inside, central)));
        }
    }
    bad
}
