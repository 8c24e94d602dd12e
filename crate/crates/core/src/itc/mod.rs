//! Information-theoretic clustering: score units by mutual information and
//! split the training units into generator and predictor subsets.

mod ksg;
mod score;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use ksg::ksg_mi;
pub use score::{pair_mi, score_units, unit_score, MiSettings, UnitScoreTable};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItcConfig {
    pub k_neighbors: usize,
    pub gamma_groups: usize,
    pub generator_fraction: f64,
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for ItcConfig {
    fn default() -> Self {
        Self { k_neighbors: 3, gamma_groups: 4, generator_fraction: 0.5, sample_cap: 2000, seed: 0 }
    }
}

impl ItcConfig {
    pub fn mi_settings(&self) -> MiSettings {
        MiSettings { k_neighbors: self.k_neighbors, sample_cap: self.sample_cap, seed: self.seed }
    }

    pub fn validate(&self, units: usize) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::config("k_neighbors must be positive"));
        }
        if self.gamma_groups == 0 || self.gamma_groups > units {
            return Err(Error::config(format!(
                "gamma_groups = {} must be between 1 and the unit count {units}",
                self.gamma_groups
            )));
        }
        if !(self.generator_fraction > 0.0 && self.generator_fraction < 1.0) {
            return Err(Error::config("generator_fraction must lie in (0, 1)"));
        }
        if self.sample_cap <= self.k_neighbors {
            return Err(Error::config("sample_cap must exceed k_neighbors"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assignment {
    Generator,
    Predictor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitAssignment {
    pub unit_id: String,
    pub score: f64,
    /// Zero-based group, 0 holding the highest scores.
    pub group: usize,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItcSplit {
    pub generator_set: TimeSeriesDataset,
    pub predictor_set: TimeSeriesDataset,
    pub assignments: Vec<UnitAssignment>,
    pub table: UnitScoreTable,
}

/// Contiguous group sizes; earlier (higher-score) groups take the remainder.
pub fn group_sizes(units: usize, groups: usize) -> Vec<usize> {
    (0..groups).map(|g| units / groups + usize::from(g < units % groups)).collect()
}

/// Generator units drawn from each group: `floor(fraction · size)`, then the
/// shortfall to `round(fraction · n)` goes one each to the highest-score groups.
pub fn generator_quotas(sizes: &[usize], fraction: f64) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| (fraction * s as f64).floor() as usize).collect();
    let target = (fraction * n as f64).round() as usize;
    let mut missing = target.saturating_sub(quotas.iter().sum());
    while missing > 0 {
        let before = missing;
        for (q, &s) in quotas.iter_mut().zip(sizes) {
            if missing > 0 && *q < s {
                *q += 1;
                missing -= 1;
            }
        }
        if before == missing {
            break;
        }
    }
    quotas
}

/// Splits from a precomputed score table.
pub fn itc_split_with_table(
    dataset: &TimeSeriesDataset,
    table: UnitScoreTable,
    config: &ItcConfig,
) -> Result<ItcSplit> {
    config.validate(dataset.num_units())?;
    let mut order: Vec<usize> = (0..table.unit_ids.len()).collect();
    order.sort_by(|&a, &b| {
        table.scores[b].total_cmp(&table.scores[a]).then_with(|| table.unit_ids[a].cmp(&table.unit_ids[b]))
    });
    let sizes = group_sizes(order.len(), config.gamma_groups);
    let quotas = generator_quotas(&sizes, config.generator_fraction);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut assignments = Vec::with_capacity(order.len());
    let mut start = 0;
    for (g, (&size, &quota)) in sizes.iter().zip(&quotas).enumerate() {
        let members = &order[start..start + size];
        let mut picks: Vec<usize> = members.to_vec();
        picks.shuffle(&mut rng);
        let chosen = &picks[..quota];
        for &m in members {
            assignments.push(UnitAssignment {
                unit_id: table.unit_ids[m].clone(),
                score: table.scores[m],
                group: g,
                assignment: if chosen.contains(&m) { Assignment::Generator } else { Assignment::Predictor },
            });
        }
        start += size;
    }

    let pick = |which: Assignment| -> Vec<String> {
        // keep the dataset's own unit order
        dataset
            .unit_ids()
            .into_iter()
            .filter(|id| assignments.iter().any(|a| &a.unit_id == id && a.assignment == which))
            .collect()
    };
    let generator_set = dataset.subset(&pick(Assignment::Generator), Some("itc-generator"));
    let predictor_set = dataset.subset(&pick(Assignment::Predictor), Some("itc-predictor"));
    Ok(ItcSplit { generator_set, predictor_set, assignments, table })
}

/// Scores the training units and splits them into generator and predictor sets.
pub fn itc_split(dataset: &TimeSeriesDataset, config: &ItcConfig) -> Result<ItcSplit> {
    config.validate(dataset.num_units())?;
    let table = score_units(dataset, &config.mi_settings())?;
    itc_split_with_table(dataset, table, config)
}
