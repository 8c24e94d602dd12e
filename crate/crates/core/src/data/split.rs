use ndarray::s;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SkipReport, TimeSeriesDataset, Unit};
use crate::error::{Error, Result};

/// Fractions for the training, test, and validation subsets, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub test: f64,
    pub val: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.6, test: 0.2, val: 0.2 }
    }
}

impl SplitRatios {
    pub fn new(train: f64, test: f64, val: f64) -> Result<Self> {
        let r = Self { train, test, val };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.test, self.val];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config(format!("split ratios must lie in [0, 1], got {parts:?}")));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("split ratios sum to {total}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: TimeSeriesDataset,
    pub test: TimeSeriesDataset,
    pub val: TimeSeriesDataset,
}

/// Random unit-level partition. Sizes are `round(train·n)`, `round(test·n)`
/// and the remainder.
pub fn split_units(dataset: &TimeSeriesDataset, ratios: SplitRatios, seed: u64) -> Result<Splits> {
    ratios.validate()?;
    let n = dataset.num_units();
    if n < 3 {
        return Err(Error::data(format!("need at least 3 units to split, have {n}")));
    }
    let n_train = (ratios.train * n as f64).round() as usize;
    let n_test = (ratios.test * n as f64).round() as usize;
    if n_train + n_test > n {
        return Err(Error::data("rounded split sizes exceed the unit count"));
    }
    let mut ids = dataset.unit_ids();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, rest) = ids.split_at(n_train);
    let (test, val) = rest.split_at(n_test);
    let mut splits = Splits {
        train: dataset.subset(train, Some("train")),
        test: dataset.subset(test, Some("test")),
        val: dataset.subset(val, Some("val")),
    };
    for part in [&mut splits.train, &mut splits.test, &mut splits.val] {
        part.provenance.seed = Some(seed);
    }
    Ok(splits)
}

/// Cuts every unit's time axis into consecutive train | validation | test
/// segments. Segments shorter than `min_len` are dropped and reported.
pub fn split_chronological(
    dataset: &TimeSeriesDataset,
    ratios: SplitRatios,
    min_len: usize,
) -> Result<(Splits, SkipReport)> {
    ratios.validate()?;
    let mut splits = Splits {
        train: dataset.clone_empty(),
        test: dataset.clone_empty(),
        val: dataset.clone_empty(),
    };
    splits.train.provenance.split = Some("train".into());
    splits.test.provenance.split = Some("test".into());
    splits.val.provenance.split = Some("val".into());
    let mut skips = SkipReport::default();
    for unit in &dataset.units {
        let n = unit.len();
        let train_end = (ratios.train * n as f64).round() as usize;
        let val_end = (train_end + (ratios.val * n as f64).round() as usize).min(n);
        let segments = [
            ("train", 0, train_end, &mut splits.train),
            ("val", train_end, val_end, &mut splits.val),
            ("test", val_end, n, &mut splits.test),
        ];
        for (name, lo, hi, target) in segments {
            if hi - lo < min_len.max(1) {
                skips.push(&unit.id, format!("{name} segment [{lo}, {hi}) shorter than {min_len}"));
                continue;
            }
            target.units.push(Unit {
                id: unit.id.clone(),
                values: unit.values.slice(s![lo..hi, ..]).to_owned(),
                offset: unit.offset + lo,
            });
        }
    }
    Ok((splits, skips))
}
