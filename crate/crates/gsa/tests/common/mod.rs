//! Shared test oracle: Sobol' indices by tensor-grid quadrature.
//!
//! Independent of the pick-freeze estimators under test: conditional means
//! are computed by explicit marginalization of a midpoint-rule tensor grid
//! in probability space, so `Var[E(Y|X_i)]`, `Var[E(Y|X_{-i})]` and closed
//! pair variances come straight from their definitions.

use gsa::distributions::InputSpace;

pub struct QuadratureSobol {
    pub first: Vec<f64>,
    pub total: Vec<f64>,
    /// Closed-complement second-order `S_ij` per pair (i < j).
    pub pairs: Vec<((usize, usize), f64)>,
    pub variance: f64,
}

/// Midpoint-rule tensor grid with `m` nodes per axis. Cost `m^d` model calls;
/// keep `d` small.
pub fn quadrature_sobol(
    space: &InputSpace,
    m: usize,
    f: &dyn Fn(&[f64]) -> f64,
) -> QuadratureSobol {
    let d = space.dimension();
    let nodes: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..m)
                .map(|k| {
                    let u = (k as f64 + 0.5) / m as f64;
                    space.distribution(j).quantile(u).unwrap()
                })
                .collect()
        })
        .collect();

    let total_cells = m.pow(d as u32);
    let mut values = vec![0.0f64; total_cells];
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0f64; d];
    for cell in values.iter_mut() {
        for j in 0..d {
            x[j] = nodes[j][idx[j]];
        }
        *cell = f(&x);
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
        }
    }

    let mean = values.iter().sum::<f64>() / total_cells as f64;
    let variance =
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / total_cells as f64;

    // Variance of E(Y | X_keep): average cells into groups sharing the kept
    // axis indices, then take the variance of the group means.
    let cond_variance = |keep: &[usize]| -> f64 {
        let groups: usize = m.pow(keep.len() as u32);
        let mut sums = vec![0.0f64; groups];
        let mut idx = vec![0usize; d];
        for &v in &values {
            let mut g = 0usize;
            for &j in keep {
                g = g * m + idx[j];
            }
            sums[g] += v;
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < m {
                    break;
                }
                idx[j] = 0;
            }
        }
        let per_group = (total_cells / groups) as f64;
        sums.iter()
            .map(|s| (s / per_group - mean).powi(2))
            .sum::<f64>()
            / groups as f64
    };

    let first: Vec<f64> = (0..d).map(|i| cond_variance(&[i]) / variance).collect();
    let total: Vec<f64> = (0..d)
        .map(|i| {
            let others: Vec<usize> = (0..d).filter(|&j| j != i).collect();
            1.0 - cond_variance(&others) / variance
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let closed = cond_variance(&[i, j]) / variance;
            pairs.push(((i, j), closed - first[i] - first[j]));
        }
    }
    QuadratureSobol { first, total, pairs, variance }
}
