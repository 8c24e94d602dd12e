//! Analytic error bounds and the empirical noise/bias/variance split.

mod bias_variance;
mod bounds;

use serde::{Deserialize, Serialize};

pub use bias_variance::{
    ar1_noise, empirical_bias_variance, BiasVarianceConfig, BiasVarianceReport, HorizonDecomposition, HorizonTrainer,
    LinearDirect, LinearTrainer, TransformerTrainer,
};
pub use bounds::{
    bounds, corollary_check, genf_bound, recurrence_b, recurrence_sequence, scan_genf, BValue, Bounds, CorollaryReport,
    TheoryParams, DEFAULT_ANY_L_TOLERANCE,
};

/// Bias-variance sum of GenF in its corrected form: the mean squared shift
/// `γ` that synthetic data causes in the direct prediction, plus the bias
/// and variance of direct forecasting at `N − L`.
///
/// An earlier statement of the same split also carried the iterative bias
/// and variance at `L` as separate terms; here they live inside `γ`, whose
/// value at `L = N` is the whole iterative error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenfSplit {
    pub gamma_sq: f64,
    pub direct_bias: f64,
    pub direct_variance: f64,
}

impl GenfSplit {
    pub fn total(&self) -> f64 {
        self.gamma_sq + self.direct_bias + self.direct_variance
    }
}

/// Mean of `(f(synthetic) − f(real))²` over paired predictions.
pub fn gamma_sq(with_synthetic: &[f64], with_real: &[f64]) -> crate::Result<f64> {
    if with_synthetic.len() != with_real.len() || with_real.is_empty() {
        return Err(crate::Error::contract("paired predictions must be nonempty and of equal length"));
    }
    Ok(with_synthetic.iter().zip(with_real).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / with_real.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sums_its_parts() {
        let s = GenfSplit { gamma_sq: 0.5, direct_bias: 0.25, direct_variance: 0.125 };
        assert_eq!(s.total(), 0.875);
        assert_eq!(gamma_sq(&[1.0, 3.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert!(gamma_sq(&[1.0], &[]).is_err());
    }
}
