//! Row-by-row check that a generated table is what the weighted sum promises:
//! each row is a convex blend of the anchors it was built from, and the
//! mixture connection (α = −1) vanishes at the row's coordinates, so the
//! segments joining those anchors are geodesics.

use cptgen_core::{
    connection_coefficients, generate_cpt, hull_membership, to_mixture_clamped, AnchorSet, Cpt,
    Distribution, EngineError, GenerationResult, GeometryError,
};
use serde::Serialize;
use thiserror::Error;

/// Largest |Γ| accepted at α = −1.
pub const FLATNESS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("table does not match the document's network structure")]
    StructureMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowCheck {
    pub member: bool,
    /// L∞ distance between the row and its best certified blend.
    pub residual: f64,
    /// Simplex weights of the certified blend, one per supplied anchor.
    pub certificate: Vec<f64>,
    /// max |Γ⁽⁻¹⁾| at the row's mixture coordinates.
    pub connection: f64,
    /// Whether zero entries had to be lifted to reach the open simplex.
    pub clamped: bool,
}

impl RowCheck {
    pub fn flat(&self) -> bool {
        self.connection <= FLATNESS_TOLERANCE
    }

    pub fn passed(&self) -> bool {
        self.member && self.flat()
    }
}

/// Checks one row against the anchors it should be a blend of.
pub fn check_row(row: &Distribution, anchors: &[&Distribution]) -> Result<RowCheck, VerifyError> {
    let verdict = hull_membership(row, anchors)?;
    let (point, clamped) = to_mixture_clamped(row)?;
    let connection = connection_coefficients(&point, -1.0).max_abs();
    let cert = verdict.certificate();
    Ok(RowCheck {
        member: verdict.is_member(),
        residual: cert.residual,
        certificate: cert.weights.clone(),
        connection,
        clamped,
    })
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub result: GenerationResult,
    pub rows: Vec<RowCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(RowCheck::passed)
    }

    /// Indices of failing rows.
    pub fn failures(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| !self.rows[i].passed()).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn max_connection(&self) -> f64 {
        self.rows.iter().map(|r| r.connection).fold(0.0, f64::max)
    }
}

/// Generates the full table and checks every row.
pub fn verify(anchors: &AnchorSet) -> Result<VerifyReport, VerifyError> {
    let result = generate_cpt(anchors.spec(), anchors)?;
    verify_result(anchors, result)
}

/// Checks an already generated table against the anchors it came from.
pub fn verify_result(anchors: &AnchorSet, result: GenerationResult) -> Result<VerifyReport, VerifyError> {
    let rows = result
        .cpt
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| check_row(row, &result.row_anchor_distributions(anchors, i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VerifyReport { result, rows })
}

/// Checks a table produced elsewhere (for instance an exported table edited
/// by hand) against the anchors its rows should blend.
pub fn verify_table(anchors: &AnchorSet, table: Cpt) -> Result<VerifyReport, VerifyError> {
    if !table.spec().same_structure(anchors.spec()) {
        return Err(VerifyError::StructureMismatch);
    }
    let mut result = generate_cpt(anchors.spec(), anchors)?;
    result.cpt = table;
    verify_result(anchors, result)
}
