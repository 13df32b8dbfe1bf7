//! Conditional probability table synthesis for a single Bayesian-network child
//! node.
//!
//! An expert supplies relative parent weights and one child distribution per
//! *compatible* parental configuration. Every row of the full table is then a
//! weighted blend of the anchors selected by that row's parent states, which
//! places it inside the convex hull of those anchors under the flat mixture
//! connection on the probability simplex.
//!
//! The crate is `no_std` and only needs `alloc`:
//!
//! - [`model`]: network specs, parental configurations, distributions, tables.
//! - [`elicit`]: compatibility maps and anchor sets.
//! - [`engine`]: the weighted-sum generator and modality profiles.
//! - [`geometry`]: mixture coordinates, Fisher metric, α-connection
//!   coefficients, geodesics and convex-hull membership.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod elicit;
pub mod engine;
pub mod geometry;
pub mod linalg;
pub mod model;

pub use elicit::{AnchorSet, CompatibilityMap, ElicitError, ExpandedAnchors};
pub use engine::{
    generate_cpt, generate_row, modality_profile, prominent_modes, row_contributions, Contribution, EngineError, GenerationResult,
};
pub use geometry::{
    connection_coefficients, fisher_metric, from_mixture, geodesic_point, hull_membership,
    recover_weights, to_mixture, to_mixture_clamped, ConnectionTensor, GeometryError,
    HullCertificate, HullVerdict, MetricMatrix, SimplexPoint,
};
pub use model::{
    enumerate_configurations, validate_spec, ConfigError, Cpt, Distribution, DistributionError,
    NetworkSpec, ParentSpec, ParentalConfiguration, Subject, ValidationReport, Violation,
    ViolationCode, SUM_TOLERANCE,
};
