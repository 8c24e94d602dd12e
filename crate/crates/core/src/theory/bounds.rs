use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of the error bounds for direct, iterative and GenF forecasting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryParams {
    /// First- and second-order Lipschitz constants of the iterative forecaster.
    pub l1: f64,
    pub l2: f64,
    pub alpha: f64,
    pub sigma_i: f64,
    pub sigma_d: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Prediction horizon `N`.
    #[serde(alias = "N")]
    pub horizon: usize,
    /// Synthetic window `L`, when a single GenF bound is wanted.
    #[serde(default, alias = "L")]
    pub synthetic_len: Option<usize>,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("l1", self.l1),
            ("l2", self.l2),
            ("alpha", self.alpha),
            ("sigma_i", self.sigma_i),
            ("sigma_d", self.sigma_d),
            ("beta0", self.beta0),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ];
        for (name, v) in reals {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a finite nonnegative number, got {v}")));
            }
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if let Some(l) = self.synthetic_len {
            if l == 0 || l >= self.horizon {
                return Err(Error::config(format!("synthetic length {l} must satisfy 0 < L < N = {}", self.horizon)));
            }
        }
        Ok(())
    }

    pub fn b(&self, k: usize) -> Result<BValue> {
        recurrence_b(self.alpha, self.sigma_i, self.l1, self.l2, k)
    }

    /// `σ_D² β2`, the horizon-free part of the direct bound.
    fn direct_floor(&self) -> f64 {
        self.sigma_d * self.sigma_d * self.beta2
    }
}

/// One term of the quadratic recurrence. `saturated` marks an overflow to `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BValue {
    pub value: f64,
    pub saturated: bool,
}

/// Double-double value `hi + lo`, enough headroom that thirty quadratic
/// steps still round correctly to f64.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Self) -> Self {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (o.hi - bb);
        Self::renorm(s, err + self.lo + o.lo)
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        Self::renorm(p, err + self.hi * o.lo + self.lo * o.hi)
    }
}

/// `b(k)` from `b(1) = α σ_I²` and `b(k+1) = b(k)(L1 + 1 + b(k) L2)`.
pub fn recurrence_b(alpha: f64, sigma_i: f64, l1: f64, l2: f64, k: usize) -> Result<BValue> {
    if k == 0 {
        return Err(Error::contract("the recurrence starts at k = 1"));
    }
    let s = Dd::new(sigma_i);
    let mut b = Dd::new(alpha).mul(s).mul(s);
    let base = Dd::new(l1).add(Dd::new(1.0));
    let l2 = Dd::new(l2);
    for _ in 1..k {
        if !b.hi.is_finite() {
            break;
        }
        b = b.mul(base.add(b.mul(l2)));
    }
    let saturated = !b.hi.is_finite();
    Ok(BValue { value: if saturated { f64::INFINITY } else { b.hi }, saturated })
}

/// `b(1..=k)` in one pass.
pub fn recurrence_sequence(params: &TheoryParams, k: usize) -> Result<Vec<f64>> {
    (1..=k).map(|i| params.b(i).map(|v| v.value)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub u_dir: f64,
    pub u_iter: f64,
    /// Present when the parameters name a synthetic length.
    pub u_genf: Option<f64>,
    /// The iterative recurrence overflowed before `N`.
    pub saturated: bool,
}

/// GenF bound `b(L)² β0 + (N − L − 1) β1 + σ_D² β2` for `0 < L < N`.
pub fn genf_bound(params: &TheoryParams, l: usize) -> Result<f64> {
    if l == 0 || l >= params.horizon {
        return Err(Error::config(format!("synthetic length {l} must satisfy 0 < L < N = {}", params.horizon)));
    }
    let b = params.b(l)?.value;
    // inf * 0 would be NaN; a zero weight silences the iterative part
    let iterative = if params.beta0 == 0.0 { 0.0 } else { b * b * params.beta0 };
    Ok(iterative + (params.horizon - l - 1) as f64 * params.beta1 + params.direct_floor())
}

pub fn bounds(params: &TheoryParams) -> Result<Bounds> {
    params.validate()?;
    let n = params.horizon;
    let b_n = params.b(n)?;
    let u_dir = (n - 1) as f64 * params.beta1 + params.direct_floor();
    let u_genf = params.synthetic_len.map(|l| genf_bound(params, l)).transpose()?;
    Ok(Bounds { u_dir, u_iter: b_n.value * b_n.value, u_genf, saturated: b_n.saturated })
}

/// `U_GenF(L)` for every `L` in `1..N`.
pub fn scan_genf(params: &TheoryParams) -> Result<Vec<(usize, f64)>> {
    params.validate()?;
    (1..params.horizon).map(|l| Ok((l, genf_bound(params, l)?))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub condition_holds: bool,
    /// `min{β1 / b(1)², (b(N)² − σ_D² β2) / b(N−1)²}`.
    pub threshold: f64,
    /// Minimiser of `U_GenF` over `1..N`; absent when `N = 1`.
    pub best_l: Option<usize>,
    pub any_l_regime: bool,
    /// Why the condition failed, when it did for a structural reason.
    pub reason: Option<String>,
    pub bounds: Bounds,
    pub scan: Vec<(usize, f64)>,
}

/// Relative closeness used for the "any L" regime.
pub const DEFAULT_ANY_L_TOLERANCE: f64 = 0.05;

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num > 0.0 {
            f64::INFINITY
        } else {
            f64::NAN
        }
    } else {
        num / den
    }
}

/// Tests the GenF advantage condition and scans `L`.
///
/// The any-`L` regime is reported when the condition holds, `U_dir` and
/// `U_iter` agree to `tolerance` (relative to the larger), and both end
/// points of the scan sit below the smaller of the two. `U_GenF` is convex
/// in `L` because `b` is nonnegative, nondecreasing and convex, so the end
/// points then bound every interior `L`.
pub fn corollary_check(params: &TheoryParams, tolerance: f64) -> Result<CorollaryReport> {
    params.validate()?;
    if !(tolerance >= 0.0) {
        return Err(Error::config("any-L tolerance must be nonnegative"));
    }
    let n = params.horizon;
    let bounds = bounds(&TheoryParams { synthetic_len: None, ..params.clone() })?;
    let scan = scan_genf(params)?;
    let best_l = scan
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|&(l, _)| l);

    let mut reason = None;
    let threshold = if n < 2 {
        reason = Some("no synthetic length fits inside a horizon of 1".to_string());
        f64::NAN
    } else {
        let b1 = params.b(1)?.value;
        let bn = params.b(n)?.value;
        let bn1 = params.b(n - 1)?.value;
        let first = ratio(params.beta1, b1 * b1);
        let gap = bn * bn - params.direct_floor();
        let second = if bn.is_infinite() && bn1.is_infinite() { f64::NAN } else { ratio(gap, bn1 * bn1) };
        if !(gap > 0.0) {
            reason = Some("b(N)² does not exceed σ_D² β2".to_string());
        } else if second.is_nan() {
            reason = Some("the recurrence saturated before N − 1".to_string());
        } else if first.is_nan() {
            reason = Some("β1 and b(1) are both zero".to_string());
        }
        first.min(second)
    };
    let condition_holds = reason.is_none() && params.beta0 < threshold;

    let lower = bounds.u_dir.min(bounds.u_iter);
    let upper = bounds.u_dir.max(bounds.u_iter);
    let close = upper.is_finite() && upper - lower <= tolerance * upper;
    let ends_below = match (scan.first(), scan.last()) {
        (Some(&(_, first)), Some(&(_, last))) => first < lower && last < lower,
        _ => false,
    };
    let any_l_regime = condition_holds && close && ends_below;
    Ok(CorollaryReport { condition_holds, threshold, best_l, any_l_regime, reason, bounds, scan })
}
