//! Default residual tolerances.

/// Identities that are exact in jet arithmetic.
pub const EXACT: f64 = 1e-9;
/// Fundamental equations and closed-form comparisons.
pub const FUNDAMENTAL: f64 = 1e-8;
/// Catalog closed forms against the computed pipeline.
pub const CLOSED_FORM: f64 = 1e-8;
/// Symmetry of induced tensors.
pub const SYMMETRY: f64 = 1e-10;
/// Equiaffine gate on `|τ|`.
pub const EQUIAFFINE: f64 = 1e-10;
/// Frame-constant para-Hermitian axioms.
pub const PARA_HERMITIAN: f64 = 0.0;
pub const LAGRANGIAN: f64 = 1e-10;
pub const DUALITY: f64 = 1e-10;
pub const RELATIVE_TORSION: f64 = 1e-8;
pub const PULLBACK: f64 = 1e-9;
pub const CUBIC: f64 = 1e-8;
/// Projective conditions on the bundle and Bianchi identity.
pub const PROJECTIVE: f64 = 1e-7;
/// Curvature identities, before scaling by `1 + max |R|`.
pub const CURVATURE: f64 = 1e-7;
pub const DIVERGENCE: f64 = 1e-7;
pub const PRE_GEODESIC: f64 = 1e-6;
/// Relative tolerance of finite-difference oracles.
pub const FINITE_DIFFERENCE: f64 = 1e-5;
/// Relative singular-value threshold for ranks.
pub const RANK: f64 = 1e-8;
