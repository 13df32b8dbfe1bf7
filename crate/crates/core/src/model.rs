//! Core domain types: the network around one child node, parental
//! configurations, child distributions and the generated table.
//!
//! All state indices are 0-based. Child state `0` is the first listed child
//! label, parent state `0` the first listed label of that parent.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Absolute tolerance for "sums to 1", applied to weights and distributions.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Sums this close to 1 are float noise and are left untouched on ingest.
const ULP_SLACK: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct ParentSpec {
    pub name: String,
    pub states: Vec<String>,
    /// Relative influence on the child, in `[0, 1]`.
    pub weight: f64,
}

impl ParentSpec {
    pub fn new<S: Into<String>>(name: S, states: &[&str], weight: f64) -> Self {
        Self {
            name: name.into(),
            states: states.iter().map(|s| String::from(*s)).collect(),
            weight,
        }
    }

    pub fn arity(&self) -> usize {
        self.states.len()
    }
}

/// One child node with `m + 1` states and its `n` weighted parents.
///
/// The fields are plain data so that documents can be checked with
/// [`NetworkSpec::validate`] before use. Everything downstream of
/// [`NetworkSpec::into_valid`] assumes a valid spec.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub child_name: String,
    pub child_states: Vec<String>,
    pub parents: Vec<ParentSpec>,
}

impl NetworkSpec {
    pub fn new<S: Into<String>>(child_name: S, child_states: &[&str], parents: Vec<ParentSpec>) -> Self {
        Self {
            child_name: child_name.into(),
            child_states: child_states.iter().map(|s| String::from(*s)).collect(),
            parents,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_spec(self)
    }

    /// Validates and renormalizes weights whose sum is within tolerance of 1.
    pub fn into_valid(mut self) -> Result<Self, ValidationReport> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(report);
        }
        let sum: f64 = self.parents.iter().map(|p| p.weight).sum();
        if (sum - 1.0).abs() > ULP_SLACK {
            for parent in &mut self.parents {
                parent.weight /= sum;
            }
        }
        Ok(self)
    }

    /// Copy of this spec carrying a different weight vector (parent order).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, ValidationReport> {
        let mut spec = self.clone();
        if weights.len() != spec.parents.len() {
            return Err(ValidationReport {
                violations: vec![Violation::new(
                    ViolationCode::WeightCount,
                    Subject::Weights,
                    format!(
                        "expected {} weights, got {}",
                        spec.parents.len(),
                        weights.len()
                    ),
                )],
            });
        }
        for (parent, &w) in spec.parents.iter_mut().zip(weights) {
            parent.weight = w;
        }
        spec.into_valid()
    }

    pub fn parent_count(&self) -> usize {
        self.parents.len()
    }

    /// Number of child states, `m + 1`.
    pub fn child_arity(&self) -> usize {
        self.child_states.len()
    }

    pub fn arities(&self) -> Vec<usize> {
        self.parents.iter().map(ParentSpec::arity).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.parents.iter().map(|p| p.weight).collect()
    }

    /// `k_1 × … × k_n`.
    pub fn configuration_count(&self) -> usize {
        self.parents.iter().map(ParentSpec::arity).product()
    }

    pub fn parent_index(&self, name: &str) -> Option<usize> {
        self.parents.iter().position(|p| p.name == name)
    }

    pub fn state_index(&self, parent: usize, label: &str) -> Option<usize> {
        self.parents.get(parent)?.states.iter().position(|s| s == label)
    }

    pub fn child_state_index(&self, label: &str) -> Option<usize> {
        self.child_states.iter().position(|s| s == label)
    }

    /// True when both specs have the same parents, states and child states,
    /// ignoring weights.
    pub fn same_structure(&self, other: &NetworkSpec) -> bool {
        self.child_states == other.child_states
            && self.parents.len() == other.parents.len()
            && self
                .parents
                .iter()
                .zip(&other.parents)
                .all(|(a, b)| a.name == b.name && a.states == b.states)
    }
}

/// What a violation is about, for locating it in a source document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject {
    Child,
    Parents,
    Parent(usize),
    Weights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationCode {
    EmptyName,
    TooFewChildStates,
    DuplicateChildState,
    NoParents,
    DuplicateParentName,
    TooFewParentStates,
    DuplicateParentState,
    WeightNotFinite,
    WeightOutOfRange,
    WeightSum,
    WeightCount,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptyName => "empty_name",
            ViolationCode::TooFewChildStates => "child_states_too_few",
            ViolationCode::DuplicateChildState => "child_state_duplicate",
            ViolationCode::NoParents => "parents_empty",
            ViolationCode::DuplicateParentName => "parent_name_duplicate",
            ViolationCode::TooFewParentStates => "parent_states_too_few",
            ViolationCode::DuplicateParentState => "parent_state_duplicate",
            ViolationCode::WeightNotFinite => "weight_not_finite",
            ViolationCode::WeightOutOfRange => "weight_out_of_range",
            ViolationCode::WeightSum => "weights_sum",
            ViolationCode::WeightCount => "weight_count",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub subject: Subject,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, subject: Subject, message: String) -> Self {
        Self {
            code,
            subject,
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code.as_str(), self.message)
    }
}

/// Every invariant violation found in a spec. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, subject: Subject, message: String) {
        self.violations.push(Violation::new(code, subject, message));
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ValidationReport {}

fn first_duplicate(labels: &[String]) -> Option<&str> {
    labels
        .iter()
        .enumerate()
        .find(|(i, l)| labels[..*i].contains(l))
        .map(|(_, l)| l.as_str())
}

/// Checks every structural and weight invariant of `spec`.
pub fn validate_spec(spec: &NetworkSpec) -> ValidationReport {
    let mut report = ValidationReport::default();

    if spec.child_name.is_empty() {
        report.push(
            ViolationCode::EmptyName,
            Subject::Child,
            "child name must not be empty".into(),
        );
    }
    if spec.child_states.len() < 2 {
        report.push(
            ViolationCode::TooFewChildStates,
            Subject::Child,
            format!(
                "child '{}' has {} state(s); m+1 >= 2 required",
                spec.child_name,
                spec.child_states.len()
            ),
        );
    }
    if let Some(dup) = first_duplicate(&spec.child_states) {
        report.push(
            ViolationCode::DuplicateChildState,
            Subject::Child,
            format!("child state '{dup}' is listed more than once"),
        );
    }

    if spec.parents.is_empty() {
        report.push(
            ViolationCode::NoParents,
            Subject::Parents,
            "at least one parent is required".into(),
        );
        return report;
    }

    for (i, parent) in spec.parents.iter().enumerate() {
        if parent.name.is_empty() {
            report.push(
                ViolationCode::EmptyName,
                Subject::Parent(i),
                format!("parent #{i} has an empty name"),
            );
        }
        if spec.parents[..i].iter().any(|p| p.name == parent.name) {
            report.push(
                ViolationCode::DuplicateParentName,
                Subject::Parent(i),
                format!("parent name '{}' is used more than once", parent.name),
            );
        }
        if parent.states.len() < 2 {
            report.push(
                ViolationCode::TooFewParentStates,
                Subject::Parent(i),
                format!(
                    "parent '{}' has {} state(s); k_i >= 2 required",
                    parent.name,
                    parent.states.len()
                ),
            );
        }
        if let Some(dup) = first_duplicate(&parent.states) {
            report.push(
                ViolationCode::DuplicateParentState,
                Subject::Parent(i),
                format!("parent '{}' lists state '{dup}' more than once", parent.name),
            );
        }
        if !parent.weight.is_finite() {
            report.push(
                ViolationCode::WeightNotFinite,
                Subject::Parent(i),
                format!("weight of parent '{}' is not a finite number", parent.name),
            );
        } else if !(0.0..=1.0).contains(&parent.weight) {
            report.push(
                ViolationCode::WeightOutOfRange,
                Subject::Parent(i),
                format!(
                    "weight of parent '{}' is {}; must lie in [0, 1]",
                    parent.name, parent.weight
                ),
            );
        }
    }

    if spec.parents.iter().all(|p| p.weight.is_finite()) {
        let sum: f64 = spec.parents.iter().map(|p| p.weight).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            report.push(
                ViolationCode::WeightSum,
                Subject::Weights,
                format!("weights must sum to 1 (sum is {sum})"),
            );
        }
    }

    report
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("configuration has {found} entries but the network has {expected} parents")]
    WrongArity { expected: usize, found: usize },
    #[error("state index {index} out of range for parent '{parent}' ({arity} states)")]
    StateOutOfRange {
        parent: String,
        index: usize,
        arity: usize,
    },
    #[error("unknown parent '{0}'")]
    UnknownParent(String),
    #[error("parent '{parent}' has no state '{state}'")]
    UnknownState { parent: String, state: String },
    #[error("configuration does not assign parent '{0}'")]
    MissingParent(String),
    #[error("configuration assigns parent '{0}' more than once")]
    DuplicateParent(String),
}

/// One state per parent, stored as state indices in parent order.
///
/// The derived ordering is lexicographic with the first parent most
/// significant, which is also the enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParentalConfiguration(Vec<usize>);

impl ParentalConfiguration {
    /// Checks totality and index ranges against `spec`.
    pub fn new(spec: &NetworkSpec, states: Vec<usize>) -> Result<Self, ConfigError> {
        if states.len() != spec.parents.len() {
            return Err(ConfigError::WrongArity {
                expected: spec.parents.len(),
                found: states.len(),
            });
        }
        for (parent, &index) in spec.parents.iter().zip(&states) {
            if index >= parent.arity() {
                return Err(ConfigError::StateOutOfRange {
                    parent: parent.name.clone(),
                    index,
                    arity: parent.arity(),
                });
            }
        }
        Ok(Self(states))
    }

    /// Builds a configuration from `(parent name, state label)` pairs in any
    /// order. Every parent must appear exactly once.
    pub fn from_labels<'a, I>(spec: &NetworkSpec, pairs: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut states: Vec<Option<usize>> = vec![None; spec.parents.len()];
        for (name, label) in pairs {
            let p = spec
                .parent_index(name)
                .ok_or_else(|| ConfigError::UnknownParent(name.into()))?;
            let s = spec
                .state_index(p, label)
                .ok_or_else(|| ConfigError::UnknownState {
                    parent: name.into(),
                    state: label.into(),
                })?;
            if states[p].replace(s).is_some() {
                return Err(ConfigError::DuplicateParent(name.into()));
            }
        }
        let states = states
            .into_iter()
            .enumerate()
            .map(|(p, s)| s.ok_or_else(|| ConfigError::MissingParent(spec.parents[p].name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self(states))
    }

    /// Every parent in the same state index.
    pub fn uniform(spec: &NetworkSpec, state: usize) -> Result<Self, ConfigError> {
        Self::new(spec, vec![state; spec.parents.len()])
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn state(&self, parent: usize) -> usize {
        self.0[parent]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position in [`enumerate_configurations`] order (mixed radix, first
    /// parent most significant).
    pub fn rank(&self, spec: &NetworkSpec) -> usize {
        self.0
            .iter()
            .zip(&spec.parents)
            .fold(0, |acc, (&s, p)| acc * p.arity() + s)
    }

    /// Label view for messages and file output, e.g. `{PM=vh, PT=vl}`.
    pub fn display<'a>(&'a self, spec: &'a NetworkSpec) -> ConfigDisplay<'a> {
        ConfigDisplay { config: self, spec }
    }

    pub fn labels<'a>(&'a self, spec: &'a NetworkSpec) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        spec.parents
            .iter()
            .zip(&self.0)
            .map(|(p, &s)| (p.name.as_str(), p.states[s].as_str()))
    }
}

pub struct ConfigDisplay<'a> {
    config: &'a ParentalConfiguration,
    spec: &'a NetworkSpec,
}

impl fmt::Display for ConfigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (name, label)) in self.config.labels(self.spec).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={label}")?;
        }
        f.write_str("}")
    }
}

/// All `k_1 × … × k_n` configurations, first parent slowest-varying.
pub fn enumerate_configurations(spec: &NetworkSpec) -> Vec<ParentalConfiguration> {
    let arities = spec.arities();
    let total: usize = arities.iter().product();
    let mut out = Vec::with_capacity(total);
    if arities.is_empty() || total == 0 {
        return out;
    }
    let mut current = vec![0usize; arities.len()];
    loop {
        out.push(ParentalConfiguration(current.clone()));
        // odometer increment from the last parent
        let mut pos = arities.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < arities[pos] {
                break;
            }
            current[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("distribution is empty")]
    Empty,
    #[error("entry {index} is not a finite number")]
    NotFinite { index: usize },
    #[error("entry {index} is negative ({value})")]
    Negative { index: usize, value: f64 },
    #[error("entries sum to {sum}, not 1 (tolerance 1e-9)")]
    BadSum { sum: f64 },
    #[error("expected {expected} entries, found {found}")]
    WrongLength { expected: usize, found: usize },
}

/// A probability vector over the child states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Accepts nonnegative entries whose sum is within [`SUM_TOLERANCE`] of 1,
    /// rescaling them to sum to 1 unless the sum is already 1 up to float
    /// rounding.
    pub fn new(mut values: Vec<f64>) -> Result<Self, DistributionError> {
        if values.is_empty() {
            return Err(DistributionError::Empty);
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(DistributionError::NotFinite { index });
            }
            if v < 0.0 {
                return Err(DistributionError::Negative { index, value: v });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(DistributionError::BadSum { sum });
        }
        if (sum - 1.0).abs() > ULP_SLACK {
            values.iter_mut().for_each(|v| *v /= sum);
        }
        Ok(Self(values))
    }

    /// Like [`Distribution::new`] but also checks the length.
    pub fn with_len(values: Vec<f64>, len: usize) -> Result<Self, DistributionError> {
        if values.len() != len {
            return Err(DistributionError::WrongLength {
                expected: len,
                found: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    /// For values produced by convex combination of valid distributions.
    pub(crate) fn from_blend(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| *v >= 0.0));
        debug_assert!((values.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

impl core::ops::Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CptError {
    #[error("table has {found} rows, network needs {expected}")]
    RowCount { expected: usize, found: usize },
    #[error("row {row} has {found} entries, child has {expected} states")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
}

/// The generated table: one distribution per configuration, stored in
/// enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    spec: NetworkSpec,
    rows: Vec<Distribution>,
}

impl Cpt {
    pub fn new(spec: NetworkSpec, rows: Vec<Distribution>) -> Result<Self, CptError> {
        let expected = spec.configuration_count();
        if rows.len() != expected {
            return Err(CptError::RowCount {
                expected,
                found: rows.len(),
            });
        }
        let width = spec.child_arity();
        if let Some((row, d)) = rows.iter().enumerate().find(|(_, d)| d.len() != width) {
            return Err(CptError::RowLength {
                row,
                expected: width,
                found: d.len(),
            });
        }
        Ok(Self { spec, rows })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, config: &ParentalConfiguration) -> Option<&Distribution> {
        if config.len() != self.spec.parents.len() {
            return None;
        }
        self.rows.get(config.rank(&self.spec))
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    /// `(configuration, row)` pairs in enumeration order.
    pub fn iter(&self) -> impl Iterator<Item = (ParentalConfiguration, &Distribution)> {
        enumerate_configurations(&self.spec)
            .into_iter()
            .zip(self.rows.iter())
    }
}
