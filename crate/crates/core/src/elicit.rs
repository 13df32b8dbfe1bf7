//! Compatibility judgments and the anchor distributions elicited for them.
//!
//! For every parent `Y_i` and state `s` the expert names the configuration
//! `Comp(Y_i = s)` they consider most plausible when `Y_i` holds `s`, then
//! supplies one child distribution per *distinct* such configuration. Shared
//! configurations are asked about once.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{ConfigError, Distribution, NetworkSpec, ParentalConfiguration};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElicitError {
    #[error("unknown parent '{0}'")]
    UnknownParent(String),
    #[error("parent '{parent}' has no state '{state}'")]
    UnknownState { parent: String, state: String },
    #[error("one-to-one correspondence unavailable; supply explicit map ({0})")]
    OneToOneUnavailable(String),
    #[error("compatibility map has no entry for {}", .0.join(", "))]
    MissingEntries(Vec<String>),
    #[error("compatibility entry for {0} is given more than once")]
    DuplicateEntry(String),
    #[error("Comp({parent}={state}) is {config}, which does not put {parent} in state {state}")]
    SelfInconsistent {
        parent: String,
        state: String,
        config: String,
    },
    #[error("missing anchor distribution for {}", .0.join(", "))]
    MissingAnchors(Vec<String>),
    #[error("anchor {0} is not a compatible configuration of any parent state")]
    UnusedAnchor(String),
    #[error("anchor {0} is given more than once")]
    DuplicateAnchor(String),
    #[error("anchor {config} has {found} entries, child has {expected} states")]
    AnchorLength {
        config: String,
        expected: usize,
        found: usize,
    },
    #[error("compatibility map was built for a different network")]
    SpecMismatch,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// `Comp(Y_i = s)` for every parent state, stored as `[parent][state]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityMap {
    spec: NetworkSpec,
    entries: Vec<Vec<ParentalConfiguration>>,
}

impl CompatibilityMap {
    /// Builds a map from `((parent, state), configuration)` entries. Every
    /// parent state must be covered exactly once and each configuration must
    /// put its own parent in its own state.
    pub fn new<I>(spec: &NetworkSpec, entries: I) -> Result<Self, ElicitError>
    where
        I: IntoIterator<Item = ((usize, usize), ParentalConfiguration)>,
    {
        let mut slots: Vec<Vec<Option<ParentalConfiguration>>> = spec
            .parents
            .iter()
            .map(|p| alloc::vec![None; p.arity()])
            .collect();

        for ((parent, state), config) in entries {
            let p = spec
                .parents
                .get(parent)
                .ok_or_else(|| ElicitError::UnknownParent(format!("#{parent}")))?;
            let label = p.states.get(state).ok_or_else(|| ElicitError::UnknownState {
                parent: p.name.clone(),
                state: format!("#{state}"),
            })?;
            // re-check ranges against this spec
            let config = ParentalConfiguration::new(spec, config.states().to_vec())?;
            if config.state(parent) != state {
                return Err(ElicitError::SelfInconsistent {
                    parent: p.name.clone(),
                    state: label.clone(),
                    config: config.display(spec).to_string(),
                });
            }
            if slots[parent][state].replace(config).is_some() {
                return Err(ElicitError::DuplicateEntry(format!("{}={}", p.name, label)));
            }
        }

        let mut missing = Vec::new();
        for (p, row) in slots.iter().enumerate() {
            for (s, slot) in row.iter().enumerate() {
                if slot.is_none() {
                    missing.push(format!(
                        "Comp({}={})",
                        spec.parents[p].name, spec.parents[p].states[s]
                    ));
                }
            }
        }
        if !missing.is_empty() {
            return Err(ElicitError::MissingEntries(missing));
        }

        let entries = slots
            .into_iter()
            .map(|row| row.into_iter().map(Option::unwrap).collect())
            .collect();
        Ok(Self {
            spec: spec.clone(),
            entries,
        })
    }

    /// Label-based constructor: `(parent name, state label, configuration)`.
    pub fn from_labels<'a, I>(spec: &NetworkSpec, entries: I) -> Result<Self, ElicitError>
    where
        I: IntoIterator<Item = (&'a str, &'a str, ParentalConfiguration)>,
    {
        let resolved = entries
            .into_iter()
            .map(|(name, label, config)| {
                let p = spec
                    .parent_index(name)
                    .ok_or_else(|| ElicitError::UnknownParent(name.into()))?;
                let s = spec
                    .state_index(p, label)
                    .ok_or_else(|| ElicitError::UnknownState {
                        parent: name.into(),
                        state: label.into(),
                    })?;
                Ok(((p, s), config))
            })
            .collect::<Result<Vec<_>, ElicitError>>()?;
        Self::new(spec, resolved)
    }

    /// `Comp(Y_i = t) = {Y_1 = t, …, Y_n = t}` for all parents sharing one
    /// state list.
    pub fn diagonal(spec: &NetworkSpec) -> Result<Self, ElicitError> {
        let first = spec
            .parents
            .first()
            .ok_or_else(|| ElicitError::OneToOneUnavailable("network has no parents".into()))?;
        if let Some(other) = spec.parents.iter().find(|p| p.states != first.states) {
            return Err(ElicitError::OneToOneUnavailable(format!(
                "parents '{}' and '{}' have different state lists",
                first.name, other.name
            )));
        }
        let entries = (0..first.arity()).map(|t| ParentalConfiguration::uniform(spec, t));
        let diagonal: Vec<ParentalConfiguration> = entries.collect::<Result<_, _>>()?;
        Ok(Self {
            spec: spec.clone(),
            entries: spec.parents.iter().map(|_| diagonal.clone()).collect(),
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// `Comp(parent = state)` by index.
    pub fn get(&self, parent: usize, state: usize) -> &ParentalConfiguration {
        &self.entries[parent][state]
    }

    /// `Comp(parent = state)` by label.
    pub fn resolve(&self, parent: &str, state: &str) -> Result<&ParentalConfiguration, ElicitError> {
        let p = self
            .spec
            .parent_index(parent)
            .ok_or_else(|| ElicitError::UnknownParent(parent.into()))?;
        let s = self
            .spec
            .state_index(p, state)
            .ok_or_else(|| ElicitError::UnknownState {
                parent: parent.into(),
                state: state.into(),
            })?;
        Ok(self.get(p, s))
    }

    /// `k_1 + … + k_n`.
    pub fn entry_count(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    /// All entries as `((parent, state), configuration)`, parent-major.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), &ParentalConfiguration)> {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(p, row)| row.iter().enumerate().map(move |(s, c)| ((p, s), c)))
    }

    /// Distinct configurations in the image, in first-occurrence order.
    pub fn distinct_configurations(&self) -> Vec<&ParentalConfiguration> {
        let mut seen = BTreeSet::new();
        self.entries()
            .map(|(_, c)| c)
            .filter(|c| seen.insert(*c))
            .collect()
    }

    /// Number of anchor questions the expert has to answer.
    pub fn distinct_anchor_count(&self) -> usize {
        self.entries().map(|(_, c)| c).collect::<BTreeSet<_>>().len()
    }

    /// The `(parent, state)` pairs whose compatible configuration is `config`.
    pub fn sources(&self, config: &ParentalConfiguration) -> Vec<(usize, usize)> {
        self.entries()
            .filter(|(_, c)| *c == config)
            .map(|(key, _)| key)
            .collect()
    }

    /// True for maps equal to [`CompatibilityMap::diagonal`].
    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|((_, s), c)| c.states().iter().all(|&x| x == s))
    }
}

/// A compatibility map together with one distribution per distinct
/// compatible configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    compat: CompatibilityMap,
    anchors: BTreeMap<ParentalConfiguration, Distribution>,
}

impl AnchorSet {
    /// Fails if any image configuration lacks a distribution, if a
    /// distribution is attached to a configuration outside the image, or if
    /// lengths disagree with the child.
    pub fn new<I>(compat: CompatibilityMap, anchors: I) -> Result<Self, ElicitError>
    where
        I: IntoIterator<Item = (ParentalConfiguration, Distribution)>,
    {
        let spec = &compat.spec;
        let image: BTreeSet<&ParentalConfiguration> = compat.entries().map(|(_, c)| c).collect();
        let mut map = BTreeMap::new();
        for (config, dist) in anchors {
            let label = config.display(spec).to_string();
            if !image.contains(&config) {
                return Err(ElicitError::UnusedAnchor(label));
            }
            if dist.len() != spec.child_arity() {
                return Err(ElicitError::AnchorLength {
                    config: label,
                    expected: spec.child_arity(),
                    found: dist.len(),
                });
            }
            if map.insert(config, dist).is_some() {
                return Err(ElicitError::DuplicateAnchor(label));
            }
        }
        let gaps: Vec<String> = compat
            .distinct_configurations()
            .into_iter()
            .filter(|c| !map.contains_key(*c))
            .map(|c| c.display(spec).to_string())
            .collect();
        if !gaps.is_empty() {
            return Err(ElicitError::MissingAnchors(gaps));
        }
        Ok(Self {
            compat,
            anchors: map,
        })
    }

    pub fn compat(&self) -> &CompatibilityMap {
        &self.compat
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.compat.spec
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// Anchors keyed by configuration, in configuration order.
    pub fn iter(&self) -> impl Iterator<Item = (&ParentalConfiguration, &Distribution)> {
        self.anchors.iter()
    }

    pub fn get(&self, config: &ParentalConfiguration) -> Option<&Distribution> {
        self.anchors.get(config)
    }

    /// The distribution elicited for `Comp(parent = state)`.
    pub fn anchor_for(&self, parent: usize, state: usize) -> &Distribution {
        // present by construction
        &self.anchors[self.compat.get(parent, state)]
    }

    /// Every parent state mapped to its anchor. Parent states that share a
    /// compatible configuration share the same stored distribution.
    pub fn expand(&self) -> ExpandedAnchors<'_> {
        ExpandedAnchors {
            by_parent: self
                .compat
                .entries
                .iter()
                .map(|row| row.iter().map(|c| &self.anchors[c]).collect())
                .collect(),
        }
    }

    /// Copy with one anchor distribution replaced.
    pub fn with_anchor(
        &self,
        config: &ParentalConfiguration,
        dist: Distribution,
    ) -> Result<Self, ElicitError> {
        let spec = self.spec();
        let label = config.display(spec).to_string();
        if !self.anchors.contains_key(config) {
            return Err(ElicitError::UnusedAnchor(label));
        }
        if dist.len() != spec.child_arity() {
            return Err(ElicitError::AnchorLength {
                config: label,
                expected: spec.child_arity(),
                found: dist.len(),
            });
        }
        let mut next = self.clone();
        next.anchors.insert(config.clone(), dist);
        Ok(next)
    }
}

/// `(parent, state) → &Distribution`, as produced by [`AnchorSet::expand`].
#[derive(Debug, Clone)]
pub struct ExpandedAnchors<'a> {
    by_parent: Vec<Vec<&'a Distribution>>,
}

impl<'a> ExpandedAnchors<'a> {
    pub fn get(&self, parent: usize, state: usize) -> &'a Distribution {
        self.by_parent[parent][state]
    }

    pub fn parent(&self, parent: usize) -> &[&'a Distribution] {
        &self.by_parent[parent]
    }
}
