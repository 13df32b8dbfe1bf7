//! Information geometry on the open probability simplex.
//!
//! A distribution over `m + 1` outcomes is written in mixture coordinates
//! `θ = (p(x¹), …, p(xᵐ))`, with `p(x⁰) = 1 − Σθ`. In these coordinates the
//! α-connection with α = −1 has vanishing coefficients, its geodesics are
//! straight segments, and the set of weighted blends of a family of anchors is
//! exactly their convex hull. The functions here compute those objects
//! numerically so generated tables can be checked against them.
//!
//! Log-derivatives of `p(x; θ)` are analytic: for `l ≥ 1`,
//! `∂_i log p(xˡ) = δ_{il} / θˡ`; for `l = 0`, `∂_i log p(x⁰) = −1 / θ⁰`. In
//! both cases the Hessian of `log p(xˡ)` is `−(∂ log p)(∂ log p)ᵀ`.

use alloc::vec;
use alloc::vec::Vec;

use libm::fabs;
use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::model::{Distribution, DistributionError};

/// Floor applied by [`to_mixture_clamped`] to zero entries.
pub const CLAMP_EPSILON: f64 = 1e-12;

/// L∞ reconstruction error below which a point counts as inside the hull.
pub const HULL_TOLERANCE: f64 = 1e-9;

/// Weight of the sum-to-one row in the augmented hull least-squares problem.
const SIMPLEX_ROW_WEIGHT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point is not in the open simplex: {0}")]
    NotInterior(&'static str),
    #[error("distribution entry {index} is {value}; mixture coordinates need strictly positive entries")]
    ZeroEntry { index: usize, value: f64 },
    #[error("geodesic parameter t = {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no anchors given")]
    NoAnchors,
    #[error("point is not in the convex hull of the anchors (L∞ residual {residual:e})")]
    NotInHull { residual: f64 },
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Mixture coordinates of an interior distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    theta: Vec<f64>,
}

impl SimplexPoint {
    /// Requires `θ^i > 0` and `Σθ^i < 1`.
    pub fn new(theta: Vec<f64>) -> Result<Self, GeometryError> {
        if theta.is_empty() {
            return Err(GeometryError::NotInterior("need at least one coordinate"));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(GeometryError::NotInterior("non-finite coordinate"));
        }
        if theta.iter().any(|t| *t <= 0.0) {
            return Err(GeometryError::NotInterior("coordinate <= 0"));
        }
        if theta.iter().sum::<f64>() >= 1.0 {
            return Err(GeometryError::NotInterior("coordinates sum to >= 1"));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `m`, the manifold dimension.
    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `θ⁰ = 1 − Σθ^i`.
    pub fn theta0(&self) -> f64 {
        1.0 - self.theta.iter().sum::<f64>()
    }

    /// `p(xˡ; θ)` for `l = 0..=m`.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.theta.len() + 1);
        p.push(self.theta0());
        p.extend_from_slice(&self.theta);
        p
    }

    /// `∂_i log p(xˡ; θ)` for `i = 1..=m` (0-based in the returned vector).
    fn score(&self, outcome: usize) -> Vec<f64> {
        let m = self.theta.len();
        if outcome == 0 {
            vec![-1.0 / self.theta0(); m]
        } else {
            let mut d = vec![0.0; m];
            d[outcome - 1] = 1.0 / self.theta[outcome - 1];
            d
        }
    }
}

/// Reads off mixture coordinates; every entry must be strictly positive.
pub fn to_mixture(dist: &Distribution) -> Result<SimplexPoint, GeometryError> {
    if let Some((index, &value)) = dist.values().iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(GeometryError::ZeroEntry { index, value });
    }
    SimplexPoint::new(dist.values()[1..].to_vec())
}

/// Like [`to_mixture`], but entries below [`CLAMP_EPSILON`] are raised to it
/// and the vector renormalized. The flag reports whether that happened.
pub fn to_mixture_clamped(dist: &Distribution) -> Result<(SimplexPoint, bool), GeometryError> {
    let values = dist.values();
    if values.iter().all(|v| *v >= CLAMP_EPSILON) {
        return Ok((to_mixture(dist)?, false));
    }
    let mut clamped: Vec<f64> = values.iter().map(|v| v.max(CLAMP_EPSILON)).collect();
    let sum: f64 = clamped.iter().sum();
    clamped.iter_mut().for_each(|v| *v /= sum);
    Ok((SimplexPoint::new(clamped[1..].to_vec())?, true))
}

pub fn from_mixture(point: &SimplexPoint) -> Distribution {
    Distribution::from_blend(point.probabilities())
}

/// Symmetric `m × m` metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    g: Matrix,
}

impl MetricMatrix {
    pub fn dim(&self) -> usize {
        self.g.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.g
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max(fabs(self.g[(i, j)] - self.g[(j, i)]));
            }
        }
        worst
    }

    pub fn is_positive_definite(&self) -> bool {
        linalg::cholesky(&self.g).is_some()
    }
}

/// `g_ij(θ) = Σ_x (∂_i log p)(∂_j log p) p`, summed over all `m + 1` outcomes.
pub fn fisher_metric(point: &SimplexPoint) -> MetricMatrix {
    let m = point.dim();
    let probs = point.probabilities();
    let mut g = Matrix::zeros(m, m);
    for (l, &p) in probs.iter().enumerate() {
        let d = point.score(l);
        for i in 0..m {
            for j in 0..m {
                g[(i, j)] += d[i] * d[j] * p;
            }
        }
    }
    MetricMatrix { g }
}

/// `Γ^{(α)}_{ij,k}` as a dense `m × m × m` array.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionTensor {
    alpha: f64,
    m: usize,
    gamma: Vec<f64>,
}

impl ConnectionTensor {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma[(i * self.m + j) * self.m + k]
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.gamma)
    }

    pub fn values(&self) -> &[f64] {
        &self.gamma
    }
}

/// α-connection coefficients by direct summation over outcomes:
///
/// ```text
/// Γ_{ij,k} = Σ_x [ ∂_i∂_j log p + (1−α)/2 · ∂_i log p · ∂_j log p ] · ∂_k log p · p
/// ```
pub fn connection_coefficients(point: &SimplexPoint, alpha: f64) -> ConnectionTensor {
    let m = point.dim();
    let probs = point.probabilities();
    let half = (1.0 - alpha) / 2.0;
    let mut gamma = vec![0.0; m * m * m];
    for (l, &p) in probs.iter().enumerate() {
        let d = point.score(l);
        for i in 0..m {
            for j in 0..m {
                let hessian = -(d[i] * d[j]);
                let inner = hessian + half * (d[i] * d[j]);
                if inner == 0.0 {
                    continue;
                }
                for k in 0..m {
                    gamma[(i * m + j) * m + k] += inner * d[k] * p;
                }
            }
        }
    }
    ConnectionTensor { alpha, m, gamma }
}

/// Point at parameter `t` on the α = −1 geodesic from `a` to `b`:
/// `θ(t) = (1 − t) θ_a + t θ_b`.
pub fn geodesic_point(a: &SimplexPoint, b: &SimplexPoint, t: f64) -> Result<SimplexPoint, GeometryError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::ParameterOutOfRange(t));
    }
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    let theta = a
        .theta
        .iter()
        .zip(&b.theta)
        .map(|(x, y)| (1.0 - t) * x + t * y)
        .collect();
    Ok(SimplexPoint { theta })
}

/// Simplex weights over the anchors and how well they reproduce the target.
#[derive(Debug, Clone, PartialEq)]
pub struct HullCertificate {
    pub weights: Vec<f64>,
    /// `max_l |Σ_α w_α p_α(xˡ) − q(xˡ)|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HullVerdict {
    Member(HullCertificate),
    /// Carries the best simplex weights found.
    NonMember(HullCertificate),
}

impl HullVerdict {
    pub fn is_member(&self) -> bool {
        matches!(self, HullVerdict::Member(_))
    }

    pub fn certificate(&self) -> &HullCertificate {
        match self {
            HullVerdict::Member(c) | HullVerdict::NonMember(c) => c,
        }
    }

    pub fn residual(&self) -> f64 {
        self.certificate().residual
    }
}

fn anchor_matrix(q: &Distribution, anchors: &[&Distribution]) -> Result<Matrix, GeometryError> {
    if anchors.is_empty() {
        return Err(GeometryError::NoAnchors);
    }
    if let Some(bad) = anchors.iter().find(|a| a.len() != q.len()) {
        return Err(GeometryError::DimensionMismatch {
            expected: q.len(),
            found: bad.len(),
        });
    }
    let cols: Vec<&[f64]> = anchors.iter().map(|a| a.values()).collect();
    Ok(Matrix::from_columns(&cols))
}

fn linf_residual(a: &Matrix, w: &[f64], q: &[f64]) -> f64 {
    a.mul_vec(w)
        .iter()
        .zip(q)
        .fold(0.0, |m, (x, y)| m.max(fabs(x - y)))
}

/// Decides whether `q` is a simplex-weighted blend of `anchors`.
///
/// Solves `min ‖Σ_α w_α p_α − q‖₂` over `w ≥ 0` with the sum-to-one
/// constraint carried as an extra weighted row, then normalizes `w` and
/// reports its L∞ residual. Membership means residual `<` [`HULL_TOLERANCE`].
pub fn hull_membership(q: &Distribution, anchors: &[&Distribution]) -> Result<HullVerdict, GeometryError> {
    let a = anchor_matrix(q, anchors)?;
    let (rows, n) = (a.rows(), a.cols());

    let mut aug = Matrix::zeros(rows + 1, n);
    for i in 0..rows {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)];
        }
    }
    for j in 0..n {
        aug[(rows, j)] = SIMPLEX_ROW_WEIGHT;
    }
    let mut rhs = q.values().to_vec();
    rhs.push(SIMPLEX_ROW_WEIGHT);

    let mut w = linalg::nnls(&aug, &rhs);
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        w = vec![1.0 / n as f64; n];
    }
    let residual = linf_residual(&a, &w, q.values());
    let cert = HullCertificate { weights: w, residual };
    Ok(if residual < HULL_TOLERANCE {
        HullVerdict::Member(cert)
    } else {
        HullVerdict::NonMember(cert)
    })
}

/// Among simplex weights reproducing `q`, the one of least Euclidean norm.
///
/// Duplicate anchors make blend weights non-unique; the minimum-norm choice
/// splits weight evenly across identical anchors. Solved by a primal
/// active-set method started from the hull certificate.
pub fn recover_weights(q: &Distribution, anchors: &[&Distribution]) -> Result<Vec<f64>, GeometryError> {
    let verdict = hull_membership(q, anchors)?;
    let HullVerdict::Member(cert) = verdict else {
        return Err(GeometryError::NotInHull {
            residual: verdict.residual(),
        });
    };
    let a = anchor_matrix(q, anchors)?;
    let (rows, n) = (a.rows(), a.cols());

    // equality system B w = c with B = [A; 1ᵀ]; target is the certified blend
    let mut b = Matrix::zeros(rows + 1, n);
    for i in 0..rows {
        for j in 0..n {
            b[(i, j)] = a[(i, j)];
        }
    }
    for j in 0..n {
        b[(rows, j)] = 1.0;
    }
    let mut c = a.mul_vec(&cert.weights);
    c.push(1.0);

    let mut w = cert.weights.clone();
    let mut fixed: Vec<bool> = w.iter().map(|x| *x == 0.0).collect();
    let step_tol = 1e-15;

    for _ in 0..(4 * n + 20) {
        let free: Vec<usize> = (0..n).filter(|&j| !fixed[j]).collect();
        let b_free = b.select_columns(&free);
        let z_free = linalg::lstsq_min_norm(&b_free, &c);
        let mut z = vec![0.0; n];
        for (&j, &v) in free.iter().zip(&z_free) {
            z[j] = v;
        }
        let p: Vec<f64> = z.iter().zip(&w).map(|(zi, wi)| zi - wi).collect();

        if linalg::max_abs(&p) <= step_tol {
            w = z;
            // multipliers of the active bounds: λ_i = −B_iᵀ ν, with B_Fᵀ ν = 2 w_F
            let nu = linalg::lstsq_min_norm(&b_free.transpose(), &z_free.iter().map(|x| 2.0 * x).collect::<Vec<_>>());
            let bt_nu = b.tmul_vec(&nu);
            let most_negative = (0..n)
                .filter(|&j| fixed[j])
                .map(|j| (j, -bt_nu[j]))
                .filter(|(_, lambda)| *lambda < -1e-12)
                .min_by(|x, y| x.1.total_cmp(&y.1));
            match most_negative {
                Some((j, _)) => fixed[j] = false,
                None => break,
            }
        } else {
            let mut step = 1.0;
            let mut blocking = None;
            for j in 0..n {
                if !fixed[j] && p[j] < 0.0 {
                    let ratio = -w[j] / p[j];
                    if ratio < step {
                        step = ratio;
                        blocking = Some(j);
                    }
                }
            }
            for j in 0..n {
                w[j] += step * p[j];
            }
            if let Some(j) = blocking {
                w[j] = 0.0;
                fixed[j] = true;
            }
        }
    }

    w.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let residual = linf_residual(&a, &w, q.values());
    if residual >= HULL_TOLERANCE {
        return Err(GeometryError::NotInHull { residual });
    }
    Ok(w)
}
