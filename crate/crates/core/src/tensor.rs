//! Curvature, Ricci and covariant derivatives of coordinate connections, the
//! fundamental equations of an affine immersion, and the classical
//! projective-flatness criterion.
//!
//! Conventions: `∇_{∂i}∂_j = Γ^k_ij ∂_k`,
//!
//! ```text
//! R^l_kij = ∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
//! Ric_jk  = R^i_kij
//! ```
//!
//! so `R(∂_i,∂_j)∂_k = R^l_kij ∂_l` and `Ric(Y,Z) = tr{X ↦ R(X,Y)Z}`.
//! Storage: `r[((l·n + k)·n + i)·n + j]`, `ric[j·n + k]`.

use crate::error::{Error, Result};
use crate::expr::ExprMap;
use crate::immersion::{decompose, ImmersionSpec, InducedData};
use crate::jets::{Jet, JetError};
use crate::linalg::max_abs;
use crate::report::{aggregate, ResidualReport, Sample};
use crate::tolerances;

#[derive(Debug, Clone)]
pub struct ConnectionAtPoint {
    pub n: usize,
    pub point: Vec<f64>,
    /// `gamma[(k·n + i)·n + j] = Γ^k_ij`.
    pub gamma: Vec<Jet>,
}

impl ConnectionAtPoint {
    pub fn new(n: usize, point: &[f64], gamma: Vec<Jet>) -> Result<Self> {
        if gamma.len() != n * n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} Christoffel symbols for dimension {n}",
                gamma.len()
            )));
        }
        Ok(ConnectionAtPoint {
            n,
            point: point.to_vec(),
            gamma,
        })
    }

    pub fn order(&self) -> usize {
        self.gamma[0].order()
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.n + i) * self.n + j]
    }

    /// Max `|Γ^k_ij − Γ^k_ji|` over values.
    pub fn torsion(&self) -> f64 {
        let n = self.n;
        let mut t = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    t = t.max((self.gamma(k, i, j).value() - self.gamma(k, j, i).value()).abs());
                }
            }
        }
        t
    }

    pub fn from_induced(d: &InducedData) -> Self {
        ConnectionAtPoint {
            n: d.n,
            point: d.point.clone(),
            gamma: d.gamma.clone(),
        }
    }
}

fn need(order: usize, needed: usize) -> Result<()> {
    if order < needed {
        Err(Error::InsufficientOrder { needed, got: order })
    } else {
        Ok(())
    }
}

fn trunc(j: &Jet, k: usize) -> Jet {
    j.truncate(k).expect("truncation below current order")
}

/// Curvature as jets of order `K − 1`.
pub fn curvature_jets(c: &ConnectionAtPoint) -> Result<Vec<Jet>> {
    need(c.order(), 1)?;
    let n = c.n;
    let k1 = c.order() - 1;
    let g: Vec<Jet> = c.gamma.iter().map(|j| trunc(j, k1)).collect();
    let dg: Vec<Vec<Jet>> = c
        .gamma
        .iter()
        .map(|j| (0..n).map(|i| j.derivative(i)).collect())
        .collect::<std::result::Result<_, JetError>>()?;
    let gi = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let mut r = Vec::with_capacity(n * n * n * n);
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = &dg[gi(l, j, k)][i] - &dg[gi(l, i, k)][j];
                    for m in 0..n {
                        v = v + &g[gi(l, i, m)] * &g[gi(m, j, k)];
                        v = v - &g[gi(l, j, m)] * &g[gi(m, i, k)];
                    }
                    r.push(v);
                }
            }
        }
    }
    Ok(r)
}

/// Ricci jets `Ric_jk = R^i_kij` from curvature jets.
pub fn ricci_jets(n: usize, r: &[Jet]) -> Vec<Jet> {
    let ri = |l: usize, k: usize, i: usize, j: usize| ((l * n + k) * n + i) * n + j;
    let mut ric = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut acc = r[0].zero_like();
            for i in 0..n {
                acc = acc + &r[ri(i, k, i, j)];
            }
            ric.push(acc);
        }
    }
    ric
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub n: usize,
    /// `R^l_kij` at `((l·n + k)·n + i)·n + j`.
    pub r: Vec<f64>,
    /// `Ric_jk` at `j·n + k`.
    pub ric: Vec<f64>,
    /// `(∇_i Ric)_jk` at `(i·n + j)·n + k`, when requested.
    pub grad_ric: Option<Vec<f64>>,
}

impl CurvatureData {
    pub fn r(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        self.r[((l * self.n + k) * self.n + i) * self.n + j]
    }

    pub fn ric(&self, j: usize, k: usize) -> f64 {
        self.ric[j * self.n + k]
    }

    pub fn max_r(&self) -> f64 {
        max_abs(self.r.iter().copied())
    }

    /// `max |R^l_kij + R^l_kji|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut d = 0.0f64;
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        d = d.max((self.r(l, k, i, j) + self.r(l, k, j, i)).abs());
                    }
                }
            }
        }
        d
    }

    /// `max |R(X,Y)Z + R(Y,Z)X + R(Z,X)Y|` over coordinate fields.
    pub fn first_bianchi_defect(&self) -> f64 {
        let n = self.n;
        let mut d = 0.0f64;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let s = self.r(l, k, i, j) + self.r(l, i, j, k) + self.r(l, j, k, i);
                        d = d.max(s.abs());
                    }
                }
            }
        }
        d
    }

    /// `max |Ric_jk − Ric_kj|`.
    pub fn ricci_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut d = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                d = d.max((self.ric(j, k) - self.ric(k, j)).abs());
            }
        }
        d
    }

    /// `max |tr{Z ↦ R(∂_i,∂_j)Z}| = max |Σ_l R^l_lij|`.
    pub fn trace_defect(&self) -> f64 {
        let n = self.n;
        let mut d = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|l| self.r(l, l, i, j)).sum();
                d = d.max(s.abs());
            }
        }
        d
    }
}

/// Curvature and Ricci values; `∇Ric` as well when `with_grad_ric` (needs `K ≥ 2`).
pub fn curvature(c: &ConnectionAtPoint, with_grad_ric: bool) -> Result<CurvatureData> {
    if with_grad_ric {
        need(c.order(), 2)?;
    }
    let r = curvature_jets(c)?;
    let ric = ricci_jets(c.n, &r);
    let grad_ric = if with_grad_ric {
        Some(cov_deriv_02(c, &ric)?.iter().map(Jet::value).collect())
    } else {
        None
    };
    Ok(CurvatureData {
        n: c.n,
        r: r.iter().map(Jet::value).collect(),
        ric: ric.iter().map(Jet::value).collect(),
        grad_ric,
    })
}

/// `(∇_i T)_jk = ∂_i T_jk − Γ^m_ij T_mk − Γ^m_ik T_jm` at `(i·n + j)·n + k`,
/// as jets of order `min(K_T, K_Γ + 1) − 1`.
pub fn cov_deriv_02(c: &ConnectionAtPoint, t: &[Jet]) -> Result<Vec<Jet>> {
    let n = c.n;
    if t.len() != n * n {
        return Err(Error::DimensionMismatch(format!("(0,2) field with {} entries", t.len())));
    }
    need(t[0].order(), 1)?;
    let k = (t[0].order() - 1).min(c.order());
    let g = |a: usize, i: usize, j: usize| trunc(c.gamma(a, i, j), k);
    let tv: Vec<Jet> = t.iter().map(|x| trunc(x, k)).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                let mut v = trunc(&t[j * n + kk].derivative(i)?, k);
                for m in 0..n {
                    v = v - g(m, i, j) * &tv[m * n + kk];
                    v = v - g(m, i, kk) * &tv[j * n + m];
                }
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// `(∇_i S)^k_j = ∂_i S^k_j + Γ^k_im S^m_j − Γ^m_ij S^k_m` at `(i·n + k)·n + j`,
/// for `S` stored as `s[k·n + j] = S^k_j`.
pub fn cov_deriv_11(c: &ConnectionAtPoint, s: &[Jet]) -> Result<Vec<Jet>> {
    let n = c.n;
    if s.len() != n * n {
        return Err(Error::DimensionMismatch(format!("(1,1) field with {} entries", s.len())));
    }
    need(s[0].order(), 1)?;
    let k = (s[0].order() - 1).min(c.order());
    let g = |a: usize, i: usize, j: usize| trunc(c.gamma(a, i, j), k);
    let sv: Vec<Jet> = s.iter().map(|x| trunc(x, k)).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for kk in 0..n {
            for j in 0..n {
                let mut v = trunc(&s[kk * n + j].derivative(i)?, k);
                for m in 0..n {
                    v = v + g(kk, i, m) * &sv[m * n + j];
                    v = v - g(m, i, j) * &sv[kk * n + m];
                }
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// Max-norm residuals of the Gauss, Codazzi I, Codazzi II and Ricci
/// equations at one point (`InducedData` of order ≥ 1).
pub fn fundamental_samples(d: &InducedData) -> Result<Vec<Sample>> {
    need(d.order, 1)?;
    let n = d.n;
    let c = ConnectionAtPoint::from_induced(d);
    let r = curvature_jets(&c)?;
    let nh = cov_deriv_02(&c, &d.h)?;
    let ns = cov_deriv_11(&c, &d.s)?;
    let h = |i: usize, j: usize| d.h(i, j).value();
    let s = |k: usize, i: usize| d.s(k, i).value();
    let tau = |i: usize| d.tau(i).value();
    let mut gauss = 0.0f64;
    let mut cod1 = 0.0f64;
    let mut cod2 = 0.0f64;
    let mut ricci = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let lhs = r[((l * n + k) * n + i) * n + j].value();
                    let rhs = h(j, k) * s(l, i) - h(i, k) * s(l, j);
                    gauss = gauss.max((lhs - rhs).abs());
                }
                let a = nh[(i * n + j) * n + k].value() + tau(i) * h(j, k);
                let b = nh[(j * n + i) * n + k].value() + tau(j) * h(i, k);
                cod1 = cod1.max((a - b).abs());
                let a = ns[(i * n + k) * n + j].value() - tau(i) * s(k, j);
                let b = ns[(j * n + k) * n + i].value() - tau(j) * s(k, i);
                cod2 = cod2.max((a - b).abs());
            }
            let mut lhs = 0.0;
            for m in 0..n {
                lhs += s(m, j) * h(i, m) - s(m, i) * h(m, j);
            }
            let dtau = d.tau(j).d1(i) - d.tau(i).d1(j);
            ricci = ricci.max((lhs - dtau).abs());
        }
    }
    let tol = tolerances::FUNDAMENTAL;
    Ok(vec![
        Sample::new("gauss", gauss, tol),
        Sample::new("codazzi-h", cod1, tol),
        Sample::new("codazzi-s", cod2, tol),
        Sample::new("ricci", ricci, tol),
    ])
}

/// Single-point report form of [`fundamental_samples`].
pub fn fundamental_residuals(d: &InducedData) -> Result<Vec<ResidualReport>> {
    Ok(fundamental_samples(d)?
        .into_iter()
        .map(|s| ResidualReport::single(s.name, &d.point, s.value, s.tolerance))
        .collect())
}

/// `Γ̂^k_ij = Γ^k_ij + ρ_i δ^k_j + ρ_j δ^k_i`.
pub fn projective_change_tm(c: &ConnectionAtPoint, rho: &[Jet]) -> Result<ConnectionAtPoint> {
    let n = c.n;
    if rho.len() != n {
        return Err(Error::DimensionMismatch(format!("1-form with {} entries", rho.len())));
    }
    let mut out = c.clone();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let idx = (k * n + i) * n + j;
                if k == j {
                    out.gamma[idx] = out.gamma[idx].try_add(&rho[i])?;
                }
                if k == i {
                    out.gamma[idx] = out.gamma[idx].try_add(&rho[j])?;
                }
            }
        }
    }
    Ok(out)
}

/// A connection on an open subset of `Rⁿ` that can be sampled as jets.
pub trait ConnectionField: Sync {
    fn dim(&self) -> usize;
    fn connection_at(&self, p: &[f64], order: usize) -> Result<ConnectionAtPoint>;
}

/// Christoffel symbols given as expressions, `n³` components in
/// `(k·n + i)·n + j` order.
#[derive(Debug, Clone)]
pub struct ExprConnection {
    pub n: usize,
    pub gamma: ExprMap,
}

impl ExprConnection {
    pub fn new(n: usize, gamma: ExprMap) -> Result<Self> {
        if gamma.dim_in() != n || gamma.dim_out() != n * n * n {
            return Err(Error::DimensionMismatch(format!(
                "connection needs {} components over {n} variables",
                n * n * n
            )));
        }
        Ok(ExprConnection { n, gamma })
    }

    pub fn flat(n: usize) -> Self {
        let zeros = vec!["0"; n * n * n];
        ExprConnection::new(n, ExprMap::parse(n, &zeros).unwrap()).unwrap()
    }

    /// Flat connection with a single symbol replaced by `expr`.
    pub fn flat_with(n: usize, k: usize, i: usize, j: usize, expr: &str) -> Result<Self> {
        let mut src = vec!["0".to_string(); n * n * n];
        src[(k * n + i) * n + j] = expr.to_string();
        ExprConnection::new(n, ExprMap::parse(n, &src)?)
    }
}

impl ConnectionField for ExprConnection {
    fn dim(&self) -> usize {
        self.n
    }

    fn connection_at(&self, p: &[f64], order: usize) -> Result<ConnectionAtPoint> {
        let g = self
            .gamma
            .eval_jet(p, order)
            .map_err(|e| Error::from(e).at(p))?;
        ConnectionAtPoint::new(self.n, p, g)
    }
}

/// Induced connection of an affine immersion (orders up to 2).
#[derive(Debug, Clone)]
pub struct InducedConnection(pub ImmersionSpec);

impl ConnectionField for InducedConnection {
    fn dim(&self) -> usize {
        self.0.n
    }

    fn connection_at(&self, p: &[f64], order: usize) -> Result<ConnectionAtPoint> {
        Ok(ConnectionAtPoint::from_induced(&decompose(&self.0, p, order)?))
    }
}

/// Projective change of a base connection by a 1-form given as expressions.
#[derive(Debug, Clone)]
pub struct ProjectiveChange<C> {
    pub base: C,
    pub rho: ExprMap,
}

impl<C: ConnectionField> ConnectionField for ProjectiveChange<C> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn connection_at(&self, p: &[f64], order: usize) -> Result<ConnectionAtPoint> {
        let c = self.base.connection_at(p, order)?;
        let rho = self.rho.eval_jet(p, order).map_err(|e| Error::from(e).at(p))?;
        projective_change_tm(&c, &rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Flatness {
    ProjectivelyFlat,
    NotProjectivelyFlat,
    /// Ricci tensor not symmetric; the criterion does not apply.
    HypothesisViolated,
}

#[derive(Debug, Clone)]
pub struct FlatnessCheck {
    pub verdict: Flatness,
    pub reports: Vec<ResidualReport>,
}

/// Scaled residuals of the projective-flatness criterion at one point:
/// Ricci symmetry, trace condition, and the dimension branch (`∇Ric` total
/// symmetry for `n = 2`, the curvature identity for `n ≥ 3`). Each is divided
/// by `1 + max |R|`.
pub fn projective_flat_tm_samples(c: &ConnectionAtPoint) -> Result<Vec<Sample>> {
    let n = c.n;
    if n < 2 {
        return Err(Error::DimensionMismatch("projective flatness needs n ≥ 2".into()));
    }
    let cd = curvature(c, n == 2)?;
    let scale = 1.0 + cd.max_r();
    let tol = tolerances::CURVATURE;
    let mut out = vec![
        Sample::new("ricci-symmetry", cd.ricci_asymmetry() / scale, tol),
        Sample::new("curvature-trace", cd.trace_defect() / scale, tol),
    ];
    if n == 2 {
        let g = cd.grad_ric.as_ref().unwrap();
        let at = |i: usize, j: usize, k: usize| g[(i * n + j) * n + k];
        let mut d = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = at(i, j, k);
                    for w in [at(i, k, j), at(j, i, k), at(j, k, i), at(k, i, j), at(k, j, i)] {
                        d = d.max((v - w).abs());
                    }
                }
            }
        }
        out.push(Sample::new("grad-ricci-symmetry", d / scale, tol));
    } else {
        let nf = (n - 1) as f64;
        let mut d = 0.0f64;
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let di = if l == i { 1.0 } else { 0.0 };
                        let dj = if l == j { 1.0 } else { 0.0 };
                        let rhs = (cd.ric(j, k) * di - cd.ric(i, k) * dj) / nf;
                        d = d.max((cd.r(l, k, i, j) - rhs).abs());
                    }
                }
            }
        }
        out.push(Sample::new("projective-curvature", d / scale, tol));
    }
    Ok(out)
}

/// Jet order the criterion needs for dimension `n`.
pub fn flatness_order(n: usize) -> usize {
    if n == 2 {
        2
    } else {
        1
    }
}

/// Projective-flatness criterion over a grid.
pub fn projective_flat_tm_check<C: ConnectionField>(
    field: &C,
    grid: &[Vec<f64>],
) -> Result<FlatnessCheck> {
    let order = flatness_order(field.dim());
    let per_point = crate::grid::map_points(grid, |p| {
        projective_flat_tm_samples(&field.connection_at(p, order)?)
    });
    let samples = per_point.into_iter().collect::<Result<Vec<_>>>()?;
    let reports = aggregate(
        grid.iter().map(Vec::as_slice).zip(samples.iter().map(Vec::as_slice)),
        false,
    );
    let ricci_ok = reports[0].pass;
    let verdict = if !ricci_ok {
        Flatness::HypothesisViolated
    } else if reports.iter().all(|r| r.pass) {
        Flatness::ProjectivelyFlat
    } else {
        Flatness::NotProjectivelyFlat
    };
    Ok(FlatnessCheck { verdict, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;

    fn jets_at(m: &ExprMap, p: &[f64], k: usize) -> Vec<Jet> {
        m.eval_jet(p, k).unwrap()
    }

    #[test]
    fn flat_connection_has_no_curvature() {
        let c = ExprConnection::flat(3).connection_at(&[0.1, 0.2, 0.3], 2).unwrap();
        let cd = curvature(&c, false).unwrap();
        assert!(cd.r.iter().all(|&v| v == 0.0));
        assert!(cd.ric.iter().all(|&v| v == 0.0));
        let t = ExprMap::parse(3, &["1", "2", "3", "4", "5", "6", "7", "8", "9"]).unwrap();
        let nt = cov_deriv_02(&c, &jets_at(&t, &[0.1, 0.2, 0.3], 1)).unwrap();
        assert!(nt.iter().all(|j| j.max_abs() == 0.0));
    }

    #[test]
    fn identity_is_parallel() {
        let n = 2;
        let src: Vec<String> = (0..8).map(|i| format!("0.3*x1^{} - x2*{}", i % 3, i)).collect();
        // symmetrise in (i, j)
        let mut sym = src.clone();
        for k in 0..n {
            sym[(k * n + 1) * n] = src[(k * n) * n + 1].clone();
        }
        let c = ExprConnection::new(n, ExprMap::parse(n, &sym).unwrap())
            .unwrap()
            .connection_at(&[0.4, -0.2], 2)
            .unwrap();
        let id = ExprMap::parse(n, &["1", "0", "0", "1"]).unwrap();
        let ns = cov_deriv_11(&c, &jets_at(&id, &[0.4, -0.2], 2)).unwrap();
        assert!(ns.iter().all(|j| j.max_abs() < 1e-15));
    }

    #[test]
    fn projective_change_of_flat_by_dx1() {
        let c = ExprConnection::flat(2).connection_at(&[0.0, 0.0], 1).unwrap();
        let rho = ExprMap::parse(2, &["1", "0"]).unwrap().eval_jet(&[0.0, 0.0], 1).unwrap();
        let h = projective_change_tm(&c, &rho).unwrap();
        assert_eq!(h.gamma(0, 0, 0).value(), 2.0);
        assert_eq!(h.gamma(1, 0, 1).value(), 1.0);
        assert_eq!(h.gamma(1, 1, 0).value(), 1.0);
        assert_eq!(h.gamma(0, 1, 1).value(), 0.0);
        assert_eq!(h.gamma(0, 0, 1).value(), 0.0);
        let neg: Vec<Jet> = rho.iter().map(|j| -j).collect();
        let back = projective_change_tm(&h, &neg).unwrap();
        for (a, b) in back.gamma.iter().zip(&c.gamma) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn closed_change_of_flat_is_projectively_flat() {
        let grid = Domain::cube(2, -1.0, 1.0).grid(5);
        let field = ProjectiveChange {
            base: ExprConnection::flat(2),
            rho: ExprMap::parse(2, &["0.1/(1 + 0.1*x1)", "0"]).unwrap(),
        };
        let check = projective_flat_tm_check(&field, &grid).unwrap();
        assert_eq!(check.verdict, Flatness::ProjectivelyFlat);
        let bent = ExprConnection::flat_with(2, 0, 1, 1, "0.5*x1^2").unwrap();
        let check = projective_flat_tm_check(&bent, &grid).unwrap();
        assert_eq!(check.verdict, Flatness::NotProjectivelyFlat);
        assert!(check.reports[2].max_abs >= 1e-2);
    }

    #[test]
    fn nonsymmetric_ricci_violates_hypothesis() {
        // Γ¹₁₂ = Γ¹₂₁ = x1: Σ_l Γ^l_jl is not a gradient
        let c = ExprConnection::new(
            2,
            ExprMap::parse(2, &["0", "x1", "x1", "0", "0", "0", "0", "0"]).unwrap(),
        )
        .unwrap();
        let grid = Domain::cube(2, -1.0, 1.0).grid(3);
        let check = projective_flat_tm_check(&c, &grid).unwrap();
        assert_eq!(check.verdict, Flatness::HypothesisViolated);
    }

    #[test]
    fn insufficient_order_is_reported() {
        let c = ExprConnection::flat(2).connection_at(&[0.0, 0.0], 1).unwrap();
        assert!(matches!(
            curvature(&c, true),
            Err(Error::InsufficientOrder { needed: 2, got: 1 })
        ));
        let c0 = ExprConnection::flat(2).connection_at(&[0.0, 0.0], 0).unwrap();
        assert!(curvature(&c0, false).is_err());
    }
}
