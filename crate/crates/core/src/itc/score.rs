use ndarray::{s, Array2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ksg::ksg_mi;
use crate::data::{TimeSeriesDataset, Unit};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// How pairwise unit MI is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiSettings {
    pub k_neighbors: usize,
    /// Maximum aligned time steps used per pair.
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for MiSettings {
    fn default() -> Self {
        Self { k_neighbors: 3, sample_cap: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitScoreTable {
    pub unit_ids: Vec<String>,
    /// `J(P_i)`, the sum of MI with every other unit, in nats.
    pub scores: Vec<f64>,
    /// Symmetric pairwise MI with a zero diagonal.
    pub mi: Array2<f64>,
    /// Pairs whose common length was too short to estimate.
    pub skipped_pairs: usize,
}

impl UnitScoreTable {
    pub fn score(&self, unit_id: &str) -> Option<f64> {
        self.unit_ids.iter().position(|u| u == unit_id).map(|i| self.scores[i])
    }
}

/// MI between two units treated as aligned joint samples of their
/// K-dimensional rows over the common prefix. `None` if too short.
pub fn pair_mi(a: &Unit, b: &Unit, settings: &MiSettings) -> Result<Option<f64>> {
    let common = a.len().min(b.len());
    if common <= settings.k_neighbors {
        return Ok(None);
    }
    let (x, y) = if common > settings.sample_cap {
        // the pair seed is order-independent, so I(a, b) and I(b, a) agree exactly
        let (lo, hi) = if a.id <= b.id { (&a.id, &b.id) } else { (&b.id, &a.id) };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(settings.seed, &["itc-pair", lo, hi]));
        let mut idx = sample(&mut rng, common, settings.sample_cap).into_vec();
        idx.sort_unstable();
        (a.values.select(Axis(0), &idx), b.values.select(Axis(0), &idx))
    } else {
        (a.values.slice(s![..common, ..]).to_owned(), b.values.slice(s![..common, ..]).to_owned())
    };
    ksg_mi(&x, &y, settings.k_neighbors).map(Some)
}

/// `J(P_i) = Σ_{j≠i} I(P_i, P_j)` for one unit.
pub fn unit_score(dataset: &TimeSeriesDataset, unit_id: &str, settings: &MiSettings) -> Result<f64> {
    if dataset.num_units() < 2 {
        return Err(Error::data("unit scoring needs at least 2 units"));
    }
    let target = dataset.unit(unit_id).ok_or_else(|| Error::data(format!("no unit {unit_id:?}")))?;
    let mut total = 0.0;
    for other in dataset.units.iter().filter(|u| u.id != unit_id) {
        if let Some(mi) = pair_mi(target, other, settings)? {
            total += mi;
        }
    }
    Ok(total)
}

/// Scores every unit; pairwise estimates run in parallel.
pub fn score_units(dataset: &TimeSeriesDataset, settings: &MiSettings) -> Result<UnitScoreTable> {
    let n = dataset.num_units();
    if n < 2 {
        return Err(Error::data("unit scoring needs at least 2 units"));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| pair_mi(&dataset.units[i], &dataset.units[j], settings))
        .collect::<Result<Vec<_>>>()?;
    let mut mi = Array2::zeros((n, n));
    let mut skipped = 0;
    for (&(i, j), v) in pairs.iter().zip(values) {
        match v {
            Some(v) => {
                mi[[i, j]] = v;
                mi[[j, i]] = v;
            }
            None => skipped += 1,
        }
    }
    // summed in unit order, matching unit_score exactly
    let scores = (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| mi[[i, j]]).sum()).collect();
    Ok(UnitScoreTable { unit_ids: dataset.unit_ids(), scores, mi, skipped_pairs: skipped })
}
