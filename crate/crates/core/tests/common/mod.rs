//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's numerical code: the oracles work
//! from raw counts or raw strings so a shared bug cannot hide itself.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rsgkit::corpus::{Corpus, RawRow};

/// Mutual information in bits by the textbook double sum
/// `sum_xy p(x,y) log2(p(x,y) / (p(x) p(y)))`.
pub fn mi_double_sum(counts: &[Vec<usize>]) -> f64 {
    let n: usize = counts.iter().flatten().sum();
    let n = n as f64;
    let rows: Vec<f64> = counts.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let cols: Vec<f64> = (0..counts[0].len())
        .map(|j| counts.iter().map(|r| r[j]).sum::<usize>() as f64)
        .collect();
    let mut total = 0.0;
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let pxy = c as f64 / n;
                total += pxy * (pxy / ((rows[i] / n) * (cols[j] / n))).log2();
            }
        }
    }
    total
}

pub fn entropy_closed_form(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.log2()).sum::<f64>()
}

/// Random table of at most `max_dim x max_dim` cells holding `1..=max_n` counts.
pub fn random_table(rng: &mut ChaCha8Rng, max_dim: usize, max_n: usize) -> Vec<Vec<usize>> {
    let r = rng.gen_range(1..=max_dim);
    let c = rng.gen_range(1..=max_dim);
    let n = rng.gen_range(1..=max_n);
    let mut t = vec![vec![0usize; c]; r];
    for _ in 0..n {
        t[rng.gen_range(0..r)][rng.gen_range(0..c)] += 1;
    }
    t
}

/// Dual objective `sum a - 1/2 sum_ij a_i a_j y_i y_j x_i . x_j`.
pub fn dual_objective(rows: &[Vec<f64>], y: &[f64], a: &[f64]) -> f64 {
    let n = rows.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            let k: f64 = rows[i].iter().zip(&rows[j]).map(|(p, q)| p * q).sum();
            quad += a[i] * a[j] * y[i] * y[j] * k;
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 <= a <= c, sum a_i y_i = 0}` by bisection
/// on the multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect()
    };
    let residual = |a: &[f64]| a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>();
    let spread = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-spread, spread);
    // The residual is non-increasing in lambda.
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if residual(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Dense reference solver for the SVM dual: accelerated projected gradient
/// ascent run to a tight fixed point.
pub fn qp_reference(rows: &[Vec<f64>], y: &[f64], c: f64) -> Vec<f64> {
    let n = rows.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| y[i] * y[j] * rows[i].iter().zip(&rows[j]).map(|(p, q)| p * q).sum::<f64>())
                .collect()
        })
        .collect();
    // Trace bounds the largest eigenvalue of the PSD matrix Q.
    let lipschitz = (0..n).map(|i| q[i][i]).sum::<f64>().max(1e-12);
    let step = 1.0 / lipschitz;
    let objective = |a: &[f64]| {
        let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q[i][j] * a[j]).sum::<f64>()).sum();
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let ascent = |z: &[f64]| -> Vec<f64> {
        let moved: Vec<f64> = (0..n)
            .map(|i| z[i] + step * (1.0 - (0..n).map(|j| q[i][j] * z[j]).sum::<f64>()))
            .collect();
        project(&moved, y, c)
    };
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..100_000 {
        let next = ascent(&z);
        // Restart the momentum whenever it stops paying off.
        if objective(&next) < objective(&a) {
            z = a.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = (0..n)
            .map(|i| next[i] + (t - 1.0) / t_next * (next[i] - a[i]))
            .collect();
        a = next;
        t = t_next;
        // Stop only at a fixed point of the plain projected step.
        let plain = ascent(&a);
        if plain.iter().zip(&a).all(|(p, q)| (p - q).abs() < 1e-11) {
            break;
        }
    }
    a
}

/// Class posterior of a Naive Bayes model computed directly from the raw
/// training strings by enumerating the joint `P(c) prod P(v_f | c)`.
pub fn nb_posterior_brute_force(
    training: &[(Vec<Option<String>>, String)],
    classes: &[String],
    vocabularies: &[Vec<String>],
    smoothing: f64,
    query: &[Option<String>],
) -> Vec<f64> {
    let n = training.len() as f64;
    let k = classes.len() as f64;
    let joint: Vec<f64> = classes
        .iter()
        .map(|class| {
            let members: Vec<&(Vec<Option<String>>, String)> =
                training.iter().filter(|(_, l)| l == class).collect();
            let mut p = (members.len() as f64 + smoothing) / (n + smoothing * k);
            for (f, value) in query.iter().enumerate() {
                let Some(value) = value else { continue };
                let defined = members.iter().filter(|(v, _)| v[f].is_some()).count() as f64;
                let hits = members
                    .iter()
                    .filter(|(v, _)| v[f].as_deref() == Some(value.as_str()))
                    .count() as f64;
                p *= (hits + smoothing) / (defined + smoothing * vocabularies[f].len() as f64);
            }
            p
        })
        .collect();
    let z: f64 = joint.iter().sum();
    joint.into_iter().map(|p| p / z).collect()
}

/// Random corpus with `n` objects, `features` categorical features of up to
/// `max_vocab` values, `classes` labels and roughly `missing` missing cells.
pub fn random_corpus(
    rng: &mut ChaCha8Rng,
    n: usize,
    features: usize,
    max_vocab: usize,
    classes: usize,
    missing: f64,
) -> Corpus {
    let vocab: Vec<usize> = (0..features).map(|_| rng.gen_range(1..=max_vocab)).collect();
    let rows: Vec<RawRow> = (0..n)
        .map(|i| RawRow {
            id: format!("r{i}"),
            values: vocab
                .iter()
                .map(|&v| {
                    (rng.gen::<f64>() >= missing).then(|| format!("x{}", rng.gen_range(0..v)))
                })
                .collect(),
            // The first `classes` rows cover every class.
            label: Some(format!("L{}", if i < classes { i } else { rng.gen_range(0..classes) })),
        })
        .collect();
    Corpus::from_rows(
        "id",
        "label",
        (0..features).map(|f| format!("f{f}")).collect(),
        rows,
    )
    .unwrap()
}

/// Value counts of a sequence, for multiset comparisons.
pub fn multiset<T: std::hash::Hash + Eq + Clone>(xs: &[T]) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for x in xs {
        *m.entry(x.clone()).or_insert(0) += 1;
    }
    m
}
