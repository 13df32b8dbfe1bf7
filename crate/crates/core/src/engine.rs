//! The weighted-sum generator.
//!
//! For a configuration `{Y_1 = s_1, …, Y_n = s_n}` the row is
//!
//! ```text
//! p(x | s_1, …, s_n) = Σ_j w_j · p(x | Comp(Y_j = s_j))
//! ```
//!
//! Contributions that land on the same anchor are merged (their weights are
//! added in parent order) before the blend, and a row whose every parent
//! selects one and the same anchor is that anchor exactly, since the weights
//! sum to one.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::elicit::AnchorSet;
use crate::model::{ConfigError, Cpt, Distribution, NetworkSpec, ParentalConfiguration};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("anchor set was elicited for a different network structure")]
    SpecMismatch,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// One summand of a generated row: which anchor, via which parent, at what
/// weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub parent: usize,
    pub anchor: ParentalConfiguration,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    pub cpt: Cpt,
    /// Aligned with `cpt.rows()`: `n` contributions per row in parent order.
    pub per_row_anchors: Vec<Vec<Contribution>>,
}

impl GenerationResult {
    /// The anchor distributions a row was blended from, one per parent.
    pub fn row_anchor_distributions<'a>(&self, anchors: &'a AnchorSet, row: usize) -> Vec<&'a Distribution> {
        self.per_row_anchors[row]
            .iter()
            .map(|c| anchors.get(&c.anchor).expect("contribution names a stored anchor"))
            .collect()
    }
}

fn check_structure(spec: &NetworkSpec, anchors: &AnchorSet) -> Result<(), EngineError> {
    if spec.same_structure(anchors.spec()) {
        Ok(())
    } else {
        Err(EngineError::SpecMismatch)
    }
}

/// The `n` weighted anchors selected by `config`, in parent order.
pub fn row_contributions(
    spec: &NetworkSpec,
    anchors: &AnchorSet,
    config: &ParentalConfiguration,
) -> Result<Vec<Contribution>, EngineError> {
    check_structure(spec, anchors)?;
    let config = ParentalConfiguration::new(spec, config.states().to_vec())?;
    Ok(contributions_unchecked(spec, anchors, &config))
}

fn contributions_unchecked(
    spec: &NetworkSpec,
    anchors: &AnchorSet,
    config: &ParentalConfiguration,
) -> Vec<Contribution> {
    spec.parents
        .iter()
        .enumerate()
        .map(|(j, parent)| Contribution {
            parent: j,
            anchor: anchors.compat().get(j, config.state(j)).clone(),
            weight: parent.weight,
        })
        .collect()
}

fn blend(spec: &NetworkSpec, anchors: &AnchorSet, contributions: &[Contribution]) -> Distribution {
    // merge contributions per distinct anchor, first-occurrence order
    let mut groups: Vec<(&ParentalConfiguration, f64)> = Vec::with_capacity(contributions.len());
    for c in contributions {
        match groups.iter_mut().find(|(a, _)| *a == &c.anchor) {
            Some((_, w)) => *w += c.weight,
            None => groups.push((&c.anchor, c.weight)),
        }
    }
    let lookup = |config: &ParentalConfiguration| anchors.get(config).expect("complete anchor set");

    if let [(only, _)] = groups.as_slice() {
        return lookup(only).clone();
    }

    let mut row = vec![0.0; spec.child_arity()];
    for (config, weight) in groups {
        for (acc, p) in row.iter_mut().zip(lookup(config).values()) {
            *acc += weight * p;
        }
    }
    Distribution::from_blend(row)
}

/// One CPT row by the weighted-sum rule.
pub fn generate_row(
    spec: &NetworkSpec,
    anchors: &AnchorSet,
    config: &ParentalConfiguration,
) -> Result<Distribution, EngineError> {
    let contributions = row_contributions(spec, anchors, config)?;
    Ok(blend(spec, anchors, &contributions))
}

/// The full table, one row per configuration in enumeration order.
pub fn generate_cpt(spec: &NetworkSpec, anchors: &AnchorSet) -> Result<GenerationResult, EngineError> {
    check_structure(spec, anchors)?;
    let configs = crate::model::enumerate_configurations(spec);
    let mut rows = Vec::with_capacity(configs.len());
    let mut per_row_anchors = Vec::with_capacity(configs.len());
    for config in &configs {
        let contributions = contributions_unchecked(spec, anchors, config);
        rows.push(blend(spec, anchors, &contributions));
        per_row_anchors.push(contributions);
    }
    let cpt = Cpt::new(spec.clone(), rows).expect("one row per configuration");
    Ok(GenerationResult { cpt, per_row_anchors })
}

/// Local maxima over the listed state order.
///
/// A maximal run of equal values is a mode when each neighbour outside the
/// run (if any) is strictly lower; it is reported at the run's first index.
/// A flat distribution is therefore a single mode at index 0.
pub fn modality_profile(dist: &Distribution) -> Vec<usize> {
    let v = dist.values();
    let mut modes = Vec::new();
    let mut start = 0;
    while start < v.len() {
        let mut end = start;
        while end + 1 < v.len() && v[end + 1] == v[start] {
            end += 1;
        }
        let left_ok = start == 0 || v[start - 1] < v[start];
        let right_ok = end + 1 == v.len() || v[end + 1] < v[start];
        if left_ok && right_ok {
            modes.push(start);
        }
        start = end + 1;
    }
    modes
}

/// Modes from [`modality_profile`] whose height is at least
/// `min_relative_height` times the tallest mode. Used to flag rows whose
/// mass is genuinely split rather than carrying a small secondary bump.
pub fn prominent_modes(dist: &Distribution, min_relative_height: f64) -> Vec<usize> {
    let v = dist.values();
    let modes = modality_profile(dist);
    let top = modes.iter().map(|&i| v[i]).fold(0.0f64, f64::max);
    modes
        .into_iter()
        .filter(|&i| v[i] >= min_relative_height * top)
        .collect()
}
