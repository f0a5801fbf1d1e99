//! Two-sample statistics for the law-equality experiments: energy distance
//! with permutation p-values, two-sample Kolmogorov-Smirnov, and chi-square
//! goodness of fit against a Poisson law.

use rand::seq::SliceRandom;
use statrs::distribution::{ChiSquared, ContinuousCDF, Poisson};
use statrs::distribution::Discrete;

use crate::error::{Error, Result};
use crate::rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Two-sample KS statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("KS needs nonempty samples"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample KS p-value (Kolmogorov distribution with the usual
/// finite-sample correction). Conservative for discrete data.
pub fn ks_pvalue(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n * m) as f64 / (n + m) as f64;
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut p = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * p).clamp(0.0, 1.0)
}

/// Two-sample KS test: statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let d = ks_statistic(a, b)?;
    Ok((d, ks_pvalue(d, a.len(), b.len())))
}

/// Chi-square goodness of fit of observed counts against `Poisson(mean)`.
/// Bins `0..tail` are kept separate and the upper tail is lumped so every
/// expected bin count is at least `min_expected`. Returns `(stat, dof, p)`.
pub fn chi_square_poisson_gof(
    observed: &[u64],
    mean: f64,
    min_expected: f64,
) -> Result<(f64, usize, f64)> {
    if observed.is_empty() {
        return Err(Error::invalid("need observed counts"));
    }
    if !(mean > 0.0) {
        return Err(Error::invalid("Poisson mean must be positive"));
    }
    let n = observed.len() as f64;
    let poi = Poisson::new(mean).map_err(|e| Error::invalid(format!("bad mean: {e}")))?;

    // choose the tail cut so that every bin has enough mass
    let mut cut = 0usize;
    let mut cum = 0.0;
    while cum + f64::EPSILON < 1.0 {
        let pmf = poi.pmf(cut as u64);
        let tail_mass = 1.0 - cum - pmf;
        if pmf * n < min_expected || tail_mass * n < min_expected {
            break;
        }
        cum += pmf;
        cut += 1;
    }
    if cut == 0 {
        return Err(Error::invalid(
            "sample too small for a chi-square bin layout",
        ));
    }

    let mut bins = vec![0u64; cut + 1];
    for &x in observed {
        bins[(x as usize).min(cut)] += 1;
    }
    let mut stat = 0.0;
    for (k, &obs) in bins.iter().enumerate() {
        let p = if k < cut { poi.pmf(k as u64) } else { 1.0 - cum };
        let expected = p * n;
        stat += (obs as f64 - expected).powi(2) / expected;
    }
    let dof = cut; // bins - 1
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(format!("{e}")))?;
    let p = 1.0 - chi.cdf(stat);
    Ok((stat, dof, p))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-coordinate pooled standard deviations, floored so constant
/// coordinates pass through unscaled.
pub fn pooled_scale(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<f64>> {
    let dim = a
        .first()
        .or_else(|| b.first())
        .ok_or_else(|| Error::invalid("empty sample sets"))?
        .len();
    if a.iter().chain(b.iter()).any(|v| v.len() != dim) {
        return Err(Error::invalid("inconsistent vector dimensions"));
    }
    let n = (a.len() + b.len()) as f64;
    let mut mean = vec![0.0; dim];
    for v in a.iter().chain(b.iter()) {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / n;
        }
    }
    let mut var = vec![0.0; dim];
    for v in a.iter().chain(b.iter()) {
        for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m) / n;
        }
    }
    Ok(var
        .iter()
        .zip(&mean)
        .map(|(v, m)| {
            let sd = v.sqrt();
            if sd > 1e-12 * (1.0 + m.abs()) {
                sd
            } else {
                1.0
            }
        })
        .collect())
}

fn energy_statistic_scaled(a: &[Vec<f64>], b: &[Vec<f64>], scale: &[f64]) -> f64 {
    let rescale = |v: &Vec<f64>| -> Vec<f64> {
        v.iter().zip(scale).map(|(x, s)| x / s).collect()
    };
    let xs: Vec<Vec<f64>> = a.iter().map(rescale).collect();
    let ys: Vec<Vec<f64>> = b.iter().map(rescale).collect();
    let (n, m) = (xs.len() as f64, ys.len() as f64);

    let mut cross = 0.0;
    for x in &xs {
        for y in &ys {
            cross += euclidean(x, y);
        }
    }
    cross /= n * m;

    let mut within_a = 0.0;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            within_a += euclidean(&xs[i], &xs[j]);
        }
    }
    if xs.len() > 1 {
        within_a *= 2.0 / (n * (n - 1.0));
    }

    let mut within_b = 0.0;
    for i in 0..ys.len() {
        for j in i + 1..ys.len() {
            within_b += euclidean(&ys[i], &ys[j]);
        }
    }
    if ys.len() > 1 {
        within_b *= 2.0 / (m * (m - 1.0));
    }

    2.0 * cross - within_a - within_b
}

/// Energy distance `2 E||a-b|| - E||a-a'|| - E||b-b'||` on coordinates
/// standardized by the pooled per-coordinate scale.
pub fn energy_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("energy distance needs nonempty sets"));
    }
    let scale = pooled_scale(a, b)?;
    Ok(energy_statistic_scaled(a, b, &scale))
}

/// Energy distance on the raw, unstandardized coordinates.
pub fn energy_distance_raw(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("energy distance needs nonempty sets"));
    }
    let dim = a[0].len();
    Ok(energy_statistic_scaled(a, b, &vec![1.0; dim]))
}

/// Label-permutation p-value for the standardized energy statistic, with +1
/// smoothing: `p = (1 + #{perm >= observed}) / (n_perm + 1)`.
///
/// The pooled pairwise-distance matrix is computed once; each permutation
/// only re-sums within-group entries (the cross term follows from the fixed
/// total), so the cost per permutation is `O((n+m)^2 / 2)` lookups.
pub fn permutation_pvalue(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    n_perm: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("permutation test needs nonempty sets"));
    }
    if n_perm < 99 {
        return Err(Error::invalid("need at least 99 permutations"));
    }
    let scale = pooled_scale(a, b)?;
    let pool: Vec<Vec<f64>> = a
        .iter()
        .chain(b.iter())
        .map(|v| v.iter().zip(&scale).map(|(x, s)| x / s).collect())
        .collect();
    let total = pool.len();
    let n = a.len();
    let m = b.len();

    // f32 keeps the matrix in cache-friendly territory; sums run in f64
    let mut dist = vec![0f32; total * total];
    for i in 0..total {
        for j in i + 1..total {
            let d = euclidean(&pool[i], &pool[j]) as f32;
            dist[i * total + j] = d;
            dist[j * total + i] = d;
        }
    }
    let mut grand_total = 0.0f64;
    for i in 0..total {
        for j in i + 1..total {
            grand_total += dist[i * total + j] as f64;
        }
    }

    let stat_for = |labels: &[usize]| -> f64 {
        // labels: indices of the pool forming group A (sorted)
        let mut within_a = 0.0f64;
        for (k, &i) in labels.iter().enumerate() {
            for &j in &labels[k + 1..] {
                within_a += dist[i * total + j] as f64;
            }
        }
        let mut in_a = vec![false; total];
        for &i in labels {
            in_a[i] = true;
        }
        let mut within_b = 0.0f64;
        let b_idx: Vec<usize> = (0..total).filter(|i| !in_a[*i]).collect();
        for (k, &i) in b_idx.iter().enumerate() {
            for &j in &b_idx[k + 1..] {
                within_b += dist[i * total + j] as f64;
            }
        }
        let cross = grand_total - within_a - within_b;
        let nf = n as f64;
        let mf = m as f64;
        let mean_cross = 2.0 * cross / (nf * mf);
        let mean_a = if n > 1 { 2.0 * within_a / (nf * (nf - 1.0)) } else { 0.0 };
        let mean_b = if m > 1 { 2.0 * within_b / (mf * (mf - 1.0)) } else { 0.0 };
        mean_cross - mean_a - mean_b
    };

    let identity: Vec<usize> = (0..n).collect();
    let observed = stat_for(&identity);
    // tolerate summation-order noise when permuted groups tie the observed one
    let eps = 1e-9 * (1.0 + observed.abs());

    let count_for = |k: usize| -> u64 {
        let mut r = rng::stream(seed, k as u64 + 1);
        let mut idx: Vec<usize> = (0..total).collect();
        idx.shuffle(&mut r);
        let mut labels: Vec<usize> = idx[..n].to_vec();
        labels.sort_unstable();
        u64::from(stat_for(&labels) >= observed - eps)
    };

    #[cfg(feature = "parallel")]
    let exceed: u64 = (0..n_perm).into_par_iter().map(count_for).sum();
    #[cfg(not(feature = "parallel"))]
    let exceed: u64 = (0..n_perm).map(count_for).sum();

    let p = (1.0 + exceed as f64) / (n_perm as f64 + 1.0);
    Ok((p, observed))
}
