//! Kraskov–Stögbauer–Grassberger mutual-information estimator (algorithm 1).

use ndarray::Array2;
use rayon::prelude::*;
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};

fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Estimates `I(X; Y)` in nats from aligned samples (rows of `x` and `y`).
///
/// Distances use the max-norm, and the joint-space radius is the distance
/// to the `k`-th neighbour. Marginal counts include points strictly inside
/// that radius; when the radius is zero (duplicated points) exact ties are
/// counted instead. No jitter is added, so results are bit-reproducible.
/// Negative estimates are clamped to zero.
pub fn ksg_mi(x: &Array2<f64>, y: &Array2<f64>, k: usize) -> Result<f64> {
    let n = x.nrows();
    if y.nrows() != n {
        return Err(Error::contract(format!("x has {n} samples but y has {}", y.nrows())));
    }
    if k == 0 || n <= k {
        return Err(Error::config(format!("KSG needs n > k >= 1, got n = {n}, k = {k}")));
    }
    if x.iter().chain(y.iter()).any(|v| v.is_nan()) {
        return Err(Error::data("KSG input contains NaN"));
    }

    let dx_cols = x.ncols();
    let dy_cols = y.ncols();
    let xs: Vec<f64> = x.iter().copied().collect();
    let ys: Vec<f64> = y.iter().copied().collect();
    let per_point: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(n - 1), Vec::with_capacity(n - 1), Vec::with_capacity(n - 1)),
            |(dx, dy, joint): &mut (Vec<f64>, Vec<f64>, Vec<f64>), i| {
                dx.clear();
                dy.clear();
                joint.clear();
                let xi = &xs[i * dx_cols..(i + 1) * dx_cols];
                let yi = &ys[i * dy_cols..(i + 1) * dy_cols];
                for j in (0..n).filter(|&j| j != i) {
                    let a = max_norm(xi, &xs[j * dx_cols..(j + 1) * dx_cols]);
                    let b = max_norm(yi, &ys[j * dy_cols..(j + 1) * dy_cols]);
                    dx.push(a);
                    dy.push(b);
                    joint.push(a.max(b));
                }
                let (_, kth, _) = joint.select_nth_unstable_by(k - 1, f64::total_cmp);
                let eps = *kth;
                let within = |d: &f64| if eps > 0.0 { *d < eps } else { *d <= 0.0 };
                let nx = dx.iter().filter(|d| within(d)).count();
                let ny = dy.iter().filter(|d| within(d)).count();
                digamma((nx + 1) as f64) + digamma((ny + 1) as f64)
            },
        )
        .collect();

    let mean = per_point.iter().sum::<f64>() / n as f64;
    let mi = digamma(k as f64) + digamma(n as f64) - mean;
    Ok(mi.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_pair(rho: f64, n: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::zeros((n, 1));
        let mut y = Array2::zeros((n, 1));
        for i in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            x[[i, 0]] = a;
            y[[i, 0]] = rho * a + (1.0 - rho * rho).sqrt() * b;
        }
        (x, y)
    }

    #[test]
    fn independent_uniforms_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_simple_fn((2000, 1), || rng.random::<f64>());
        let y = Array2::from_shape_simple_fn((2000, 1), || rng.random::<f64>());
        assert!(ksg_mi(&x, &y, 3).unwrap() <= 0.05);
    }

    #[test]
    fn correlated_gaussian_matches_analytic_value() {
        let truth = -0.5 * (1.0f64 - 0.81).ln();
        let est = (0..10)
            .map(|s| {
                let (x, y) = gaussian_pair(0.9, 5000, s);
                ksg_mi(&x, &y, 3).unwrap()
            })
            .sum::<f64>()
            / 10.0;
        assert!((est - truth).abs() <= 0.05, "estimate {est} vs {truth}");
    }

    #[test]
    fn identical_variables_with_duplicates_stay_finite() {
        // every value appears five times, so k-th neighbour distances are zero
        let x = Array2::from_shape_fn((200, 1), |(i, _)| (i / 5) as f64);
        let mi = ksg_mi(&x, &x, 3).unwrap();
        assert!(mi.is_finite() && mi > 1.0, "{mi}");
        let distinct = Array2::from_shape_fn((200, 1), |(i, _)| i as f64 * 0.37);
        assert!(ksg_mi(&distinct, &distinct, 3).unwrap() > 3.0);
    }

    #[test]
    fn monotone_transform_invariance() {
        let (x, y) = gaussian_pair(0.6, 2000, 17);
        let base = ksg_mi(&x, &y, 3).unwrap();
        let warped = ksg_mi(&x.mapv(f64::exp), &y.mapv(f64::exp), 3).unwrap();
        assert!((base - warped).abs() <= 0.08, "{base} vs {warped}");
    }

    #[test]
    fn independent_estimates_shrink_with_n() {
        let mut prev = f64::INFINITY;
        for n in [500, 2000, 8000] {
            let (x, y) = gaussian_pair(0.0, n, 23);
            let mi = ksg_mi(&x, &y, 3).unwrap();
            assert!(mi <= prev + 0.02, "n = {n}: {mi} > {prev}");
            prev = mi;
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = Array2::zeros((3, 1));
        assert!(matches!(ksg_mi(&x, &x, 3), Err(Error::Config(_))));
        let mut nan = Array2::zeros((10, 1));
        nan[[4, 0]] = f64::NAN;
        assert!(matches!(ksg_mi(&nan, &nan, 3), Err(Error::Data(_))));
    }
}
