use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;

use super::{penalty_weights, DimensionDiagnostics, Method, MfSettings, SelectionResult};
use crate::model::{ridge_tune_bic, Dataset};
use crate::path::{last_model_of_size, penalized_path};
use crate::resample::{derive_seed, paired_bootstrap, residual_bootstrap, BootstrapKind};
use crate::{Error, Real, Result};

/// Per-dimension tallies of the models visited by `B` bootstrap paths.
///
/// A replicate whose path never reaches size `j` contributes nothing at
/// `j`, so counts at a dimension may sum to less than `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionTable {
    replicates: usize,
    counts: Vec<BTreeMap<Vec<usize>, usize>>,
}

impl DimensionTable {
    pub fn new(p: usize, replicates: usize) -> Self {
        DimensionTable { replicates, counts: vec![BTreeMap::new(); p] }
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn p(&self) -> usize {
        self.counts.len()
    }

    /// Records one model (its size picks the dimension; the empty model is ignored).
    pub fn record(&mut self, model: Vec<usize>) {
        let j = model.len();
        if j == 0 || j > self.p() {
            return;
        }
        *self.counts[j - 1].entry(model).or_insert(0) += 1;
    }

    /// Distinct models of size `j` with their counts.
    pub fn counts(&self, j: usize) -> &BTreeMap<Vec<usize>, usize> {
        &self.counts[j - 1]
    }

    /// `MF_j`, zero when no replicate visited dimension `j`.
    pub fn mf(&self, j: usize) -> usize {
        self.counts(j).values().copied().max().unwrap_or(0)
    }

    /// `M_j`; equal counts resolve to the lexicographically smallest model.
    pub fn model(&self, j: usize) -> Option<&[usize]> {
        let mf = self.mf(j);
        self.counts(j).iter().find(|(_, &c)| c == mf && c > 0).map(|(m, _)| m.as_slice())
    }

    /// Adds another table's counts; associative and commutative.
    pub fn merge(&mut self, other: &DimensionTable) {
        assert_eq!(self.p(), other.p(), "tables of different width");
        self.replicates += other.replicates;
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (m, c) in theirs {
                *mine.entry(m.clone()).or_insert(0) += c;
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|m| m.is_empty())
    }
}

/// Fits the configured path on each of `B` bootstrap samples (weights
/// recomputed per sample) and tallies the last model of every size.
pub fn mf_table<T: Real>(data: &Dataset<T>, settings: &MfSettings<T>, master_seed: u64) -> Result<DimensionTable> {
    if settings.replicates == 0 {
        return Err(Error::InvalidInput("need at least one bootstrap replicate".into()));
    }
    let p = data.p();
    let steps = settings.steps_for(data);
    let pilot = match settings.bootstrap.kind {
        BootstrapKind::Residual => Some(ridge_tune_bic(data, &settings.bootstrap.pilot_lambda2_grid)?.0),
        BootstrapKind::Paired => None,
    };
    let per_replicate: Vec<Option<Vec<Vec<usize>>>> = (0..settings.replicates)
        .into_par_iter()
        .map(|b| {
            let seed = derive_seed(master_seed, b as u64, 0);
            let sample = match &pilot {
                Some(beta) => residual_bootstrap(data, beta, seed),
                None => paired_bootstrap(data, seed),
            };
            let fit = penalty_weights(&sample, &settings.penalty)
                .and_then(|w| penalized_path(&sample, settings.penalty, w.view(), steps));
            match fit {
                Ok(path) => Some((1..=p).filter_map(|j| last_model_of_size(&path, j)).collect()),
                Err(e) => {
                    warn!("bootstrap replicate {b} dropped: {e}");
                    None
                }
            }
        })
        .collect();
    let mut table = DimensionTable::new(p, settings.replicates);
    for models in per_replicate.into_iter().flatten() {
        for m in models {
            table.record(m);
        }
    }
    Ok(table)
}

/// Maximum-frequency rule over dimensions `1..p−1`, ties to the highest dimension.
pub fn mf_select<T: Real>(table: &DimensionTable) -> Result<SelectionResult<T>> {
    let p = table.p();
    let mut best: Option<(usize, usize)> = None;
    for j in 1..p {
        let mf = table.mf(j);
        if mf == 0 {
            continue;
        }
        if best.is_none_or(|(_, m)| mf >= m) {
            best = Some((j, mf));
        }
    }
    let (dimension, _) = best.ok_or(Error::EmptyTable)?;
    let b = T::from_usize_lossy(table.replicates().max(1));
    let diagnostics = (1..p)
        .map(|j| DimensionDiagnostics {
            dimension: j,
            mf_frequency: T::from_usize_lossy(table.mf(j)) / b,
            model: table.model(j).map(<[usize]>::to_vec),
            mcv: None,
            weight: None,
            wmf: None,
        })
        .collect();
    Ok(SelectionResult {
        dimension,
        model: table.model(dimension).expect("visited dimension").to_vec(),
        method: Method::Mf,
        diagnostics,
        knot_scores: Vec::new(),
        knot: None,
    })
}
