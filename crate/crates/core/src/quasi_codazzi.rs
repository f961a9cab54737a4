//! Quasi-Codazzi structures on `E = E⁺ ⊕ E⁻` in split frames.
//!
//! A coherent tangent bundle of rank `n` is stored as
//!
//! ```text
//! φ(∂_i)      = φ_ia η_a          phi[i·n + a]
//! ∇_{∂i} η_a  = ω_iab η_b         omega[(i·n + a)·n + b]
//! ```
//!
//! For the structure induced by an equiaffine immersion, `E⁺` carries the
//! frame `f_*∂_i` and `E⁻` the dual frame `β^j`, giving
//!
//! ```text
//! φ⁺ = I,   ω⁺_iab = Γ^b_ia,   φ⁻_ia = h_ia,   ω⁻_iab = −Γ^a_ib
//! ```
//!
//! The pairing `θ` is the constant `2n × 2n` matrix with `½ I` off-diagonal
//! blocks and `I = diag(+1, …, −1, …)`.

use crate::error::{Error, Result};
use crate::immersion::{decompose, ImmersionSpec, InducedData};
use crate::jets::{Jet, JetError, JetLu};
use crate::linalg::{self, max_abs};
use crate::report::Sample;
use crate::tensor::{cov_deriv_02, ConnectionAtPoint};
use crate::tolerances;

fn trunc(j: &Jet, k: usize) -> Jet {
    j.truncate(k).expect("truncation below current order")
}

/// A rank-`n` bundle with a bundle map from `TM` and a connection, in a frame.
#[derive(Debug, Clone)]
pub struct CoherentTangentBundle {
    pub n: usize,
    pub phi: Vec<Jet>,
    pub omega: Vec<Jet>,
}

impl CoherentTangentBundle {
    pub fn phi(&self, i: usize, a: usize) -> &Jet {
        &self.phi[i * self.n + a]
    }

    pub fn omega(&self, i: usize, a: usize, b: usize) -> &Jet {
        &self.omega[(i * self.n + a) * self.n + b]
    }

    pub fn order(&self) -> usize {
        self.phi[0].order().min(self.omega[0].order())
    }

    /// `∇_{∂i}(φ(∂_j))` components `P[(i·n + j)·n + b]`, order `K − 1`.
    pub fn covariant_phi(&self) -> Result<Vec<Jet>> {
        let n = self.n;
        if self.phi[0].order() == 0 {
            return Err(Error::InsufficientOrder { needed: 1, got: 0 });
        }
        let k = (self.phi[0].order() - 1).min(self.omega[0].order());
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for b in 0..n {
                    let mut v = trunc(&self.phi(j, b).derivative(i)?, k);
                    for a in 0..n {
                        v = v + trunc(self.phi(j, a), k) * trunc(self.omega(i, a, b), k);
                    }
                    out.push(v);
                }
            }
        }
        Ok(out)
    }

    /// `max |∇_i φ(∂_j) − ∇_j φ(∂_i)|` over components (coordinate fields commute).
    pub fn relative_torsion(&self) -> Result<f64> {
        let n = self.n;
        let p = self.covariant_phi()?;
        let mut r = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for b in 0..n {
                    r = r.max((p[(i * n + j) * n + b].value() - p[(j * n + i) * n + b].value()).abs());
                }
            }
        }
        Ok(r)
    }

    /// Components in the frame `η'_a = M_ab η_b`; `m` must be one order above
    /// the bundle data so that `∂M` is available.
    pub fn reframe(&self, m: &[Jet]) -> Result<CoherentTangentBundle> {
        let n = self.n;
        if m.len() != n * n {
            return Err(Error::DimensionMismatch(format!("frame change with {} entries", m.len())));
        }
        let k = self.order();
        if m[0].order() < k + 1 {
            return Err(Error::InsufficientOrder {
                needed: k + 1,
                got: m[0].order(),
            });
        }
        let mk: Vec<Vec<Jet>> = (0..n)
            .map(|a| (0..n).map(|b| trunc(&m[a * n + b], k)).collect())
            .collect();
        let minv = JetLu::factor(&mk)?.inverse()?;
        let mut phi = Vec::with_capacity(n * n);
        for i in 0..n {
            for d in 0..n {
                let mut v = mk[0][0].zero_like();
                for a in 0..n {
                    v = v + trunc(self.phi(i, a), k) * &minv[a][d];
                }
                phi.push(v);
            }
        }
        let mut omega = Vec::with_capacity(n * n * n);
        for i in 0..n {
            // (∂_i M + M ω_i) M⁻¹
            let mut t = vec![vec![mk[0][0].zero_like(); n]; n];
            for a in 0..n {
                for c in 0..n {
                    let mut v = trunc(&m[a * n + c].derivative(i)?, k);
                    for b in 0..n {
                        v = v + &mk[a][b] * trunc(self.omega(i, b, c), k);
                    }
                    t[a][c] = v;
                }
            }
            for a in 0..n {
                for d in 0..n {
                    let mut v = mk[0][0].zero_like();
                    for c in 0..n {
                        v = v + &t[a][c] * &minv[c][d];
                    }
                    omega.push(v);
                }
            }
        }
        Ok(CoherentTangentBundle { n, phi, omega })
    }
}

/// Split frame data of a quasi-Codazzi structure at one point.
#[derive(Debug, Clone)]
pub struct CoherentBundleData {
    pub n: usize,
    pub point: Vec<f64>,
    pub plus: CoherentTangentBundle,
    pub minus: CoherentTangentBundle,
    /// `θ` in the split frame `(e⁺_1 … e⁺_n, e⁻_1 … e⁻_n)`, row-major `2n × 2n`.
    pub theta: Vec<f64>,
    /// `I` in the split frame.
    pub involution: Vec<f64>,
}

/// `θ` with `½ I` off-diagonal blocks.
pub fn split_theta(n: usize) -> Vec<f64> {
    let m = 2 * n;
    let mut t = vec![0.0; m * m];
    for a in 0..n {
        t[a * m + n + a] = 0.5;
        t[(n + a) * m + a] = 0.5;
    }
    t
}

/// `diag(+1 ×n, −1 ×n)`.
pub fn split_involution(n: usize) -> Vec<f64> {
    let m = 2 * n;
    let mut t = vec![0.0; m * m];
    for a in 0..m {
        t[a * m + a] = if a < n { 1.0 } else { -1.0 };
    }
    t
}

impl CoherentBundleData {
    pub fn order(&self) -> usize {
        self.plus.order().min(self.minus.order())
    }

    pub fn phi_plus(&self, i: usize, a: usize) -> &Jet {
        self.plus.phi(i, a)
    }

    pub fn phi_minus(&self, i: usize, a: usize) -> &Jet {
        self.minus.phi(i, a)
    }

    pub fn omega_plus(&self, i: usize, a: usize, b: usize) -> &Jet {
        self.plus.omega(i, a, b)
    }

    pub fn omega_minus(&self, i: usize, a: usize, b: usize) -> &Jet {
        self.minus.omega(i, a, b)
    }

    fn theta_at(&self, r: usize, c: usize) -> f64 {
        self.theta[r * 2 * self.n + c]
    }

    /// `θ(e⁺_a, e⁻_b)`.
    pub fn pairing(&self, a: usize, b: usize) -> f64 {
        self.theta_at(a, self.n + b)
    }

    /// `Φ(∂_i)` as a `2n` value vector.
    pub fn phi_vector(&self, i: usize) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|a| self.phi_plus(i, a).value())
            .chain((0..n).map(|a| self.phi_minus(i, a).value()))
            .collect()
    }

    /// Connection of `E` as a `2n × 2n` block matrix of jets per direction:
    /// `∇_i ε_c = Σ_d big[i][c][d] ε_d`.
    fn big_connection(&self) -> Vec<Vec<Vec<Jet>>> {
        let n = self.n;
        let zero = self.plus.omega[0].zero_like();
        (0..n)
            .map(|i| {
                let mut m = vec![vec![zero.clone(); 2 * n]; 2 * n];
                for a in 0..n {
                    for b in 0..n {
                        m[a][b] = self.omega_plus(i, a, b).clone();
                        m[n + a][n + b] = self.omega_minus(i, a, b).clone();
                    }
                }
                m
            })
            .collect()
    }

    /// `h_jk = 2θ(Φ⁺∂_j, Φ⁻∂_k)` as jets.
    pub fn pullback_metric(&self) -> Vec<Jet> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        let k = self.plus.phi[0].order().min(self.minus.phi[0].order());
        for j in 0..n {
            for kk in 0..n {
                let mut v = trunc(self.phi_plus(0, 0), k).zero_like();
                for b in 0..n {
                    for c in 0..n {
                        let w = 2.0 * self.pairing(b, c);
                        if w != 0.0 {
                            v = v + (trunc(self.phi_plus(j, b), k) * trunc(self.phi_minus(kk, c), k)).scale(w);
                        }
                    }
                }
                out.push(v);
            }
        }
        out
    }
}

/// Assembles the induced split-frame data from `InducedData` without the
/// equiaffine gate. For `τ ≠ 0` the result is only a formal structure, kept
/// for diagnosing how the axioms fail.
pub fn assemble_induced(d: &InducedData) -> CoherentBundleData {
    let n = d.n;
    let zero = d.h[0].zero_like();
    let mut phi_plus = Vec::with_capacity(n * n);
    let mut omega_plus = Vec::with_capacity(n * n * n);
    let mut omega_minus = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for a in 0..n {
            phi_plus.push(if i == a { zero.constant_like(1.0) } else { zero.clone() });
            for b in 0..n {
                omega_plus.push(d.gamma(b, i, a).clone());
                omega_minus.push(-d.gamma(a, i, b));
            }
        }
    }
    CoherentBundleData {
        n,
        point: d.point.clone(),
        plus: CoherentTangentBundle {
            n,
            phi: phi_plus,
            omega: omega_plus,
        },
        minus: CoherentTangentBundle {
            n,
            phi: d.h.clone(),
            omega: omega_minus,
        },
        theta: split_theta(n),
        involution: split_involution(n),
    }
}

/// Gate on `τ` used by [`build_induced`].
pub fn check_equiaffine(d: &InducedData) -> Result<()> {
    let tau = max_abs(d.tau.iter().map(Jet::value));
    if !(tau <= tolerances::EQUIAFFINE) {
        return Err(Error::NotEquiaffine {
            point: d.point.clone(),
            tau,
        });
    }
    Ok(())
}

/// Induced quasi-Codazzi structure of an equiaffine immersion at `p`, as
/// order-`k` jets (`k ≤ 2`).
pub fn build_induced(spec: &ImmersionSpec, p: &[f64], k: usize) -> Result<CoherentBundleData> {
    let d = decompose(spec, p, k)?;
    check_equiaffine(&d)?;
    Ok(assemble_induced(&d))
}

/// Para-Hermitian axioms: `θ` symmetric and nondegenerate, `I² = id`, equal
/// rank eigenbundles, `θ(I·,·) + θ(·,I·) = 0`. Returns the max defect.
pub fn para_hermitian_residual(b: &CoherentBundleData) -> f64 {
    let m = 2 * b.n;
    let t = |r: usize, c: usize| b.theta[r * m + c];
    let inv = |r: usize, c: usize| b.involution[r * m + c];
    let mut d = 0.0f64;
    let mut trace = 0.0;
    for r in 0..m {
        trace += inv(r, r);
        for c in 0..m {
            d = d.max((t(r, c) - t(c, r)).abs());
            let sq: f64 = (0..m).map(|k| inv(r, k) * inv(k, c)).sum();
            d = d.max((sq - if r == c { 1.0 } else { 0.0 }).abs());
            // (Iᵀ θ + θ I)_rc
            let anti: f64 = (0..m).map(|k| inv(k, r) * t(k, c) + t(r, k) * inv(k, c)).sum();
            d = d.max(anti.abs());
        }
    }
    d = d.max(trace.abs());
    if linalg::rank(&b.theta, m, m, 1e-12) < m {
        d = d.max(1.0);
    }
    d
}

/// `max |θ(Φ∂_i, IΦ∂_j)|`.
pub fn lagrangian_residual(b: &CoherentBundleData) -> f64 {
    let n = b.n;
    let m = 2 * n;
    let vs: Vec<Vec<f64>> = (0..n).map(|i| b.phi_vector(i)).collect();
    let mut d = 0.0f64;
    for vi in &vs {
        for vj in &vs {
            let mut s = 0.0;
            for r in 0..m {
                for c in 0..m {
                    let ivj: f64 = (0..m).map(|k| b.involution[c * m + k] * vj[k]).sum();
                    s += vi[r] * b.theta[r * m + c] * ivj;
                }
            }
            d = d.max(s.abs());
        }
    }
    d
}

/// Rank of `Φ` as a `2n × n` value matrix.
pub fn phi_rank(b: &CoherentBundleData) -> usize {
    let n = b.n;
    let mut vals = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        vals.extend(b.phi_vector(i));
    }
    // rows are Φ(∂_i); rank is the same either way
    linalg::rank(&vals, n, 2 * n, tolerances::RANK)
}

/// `2 · max |∂_kθ(e⁺_a, e⁻_b) − θ(∇⁺_k e⁺_a, e⁻_b) − θ(e⁺_a, ∇⁻_k e⁻_b)|`,
/// with `θ` constant in the split frame. The factor 2 undoes the `½` of the
/// pairing so the residual is in connection-coefficient units.
pub fn duality_residual(b: &CoherentBundleData) -> f64 {
    let n = b.n;
    let mut d = 0.0f64;
    for k in 0..n {
        for a in 0..n {
            for bb in 0..n {
                let mut s = 0.0;
                for c in 0..n {
                    s += b.omega_plus(k, a, c).value() * b.pairing(c, bb);
                    s += b.omega_minus(k, bb, c).value() * b.pairing(a, c);
                }
                d = d.max((2.0 * s).abs());
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

pub fn relative_torsion_residual(b: &CoherentBundleData, side: Side) -> Result<f64> {
    match side {
        Side::Plus => b.plus.relative_torsion(),
        Side::Minus => b.minus.relative_torsion(),
    }
}

/// Cubic tensor `C_ijk = −2{θ(∇⁺_iΦ⁺∂_j, Φ⁻∂_k) − θ(Φ⁺∂_k, ∇⁻_iΦ⁻∂_j)}` as
/// jets at `(i·n + j)·n + k`.
pub fn cubic_tensor(b: &CoherentBundleData) -> Result<Vec<Jet>> {
    let n = b.n;
    let pp = b.plus.covariant_phi()?;
    let pm = b.minus.covariant_phi()?;
    let k = pp[0].order().min(pm[0].order());
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                let mut v = trunc(&pp[0], k).zero_like();
                for a in 0..n {
                    for c in 0..n {
                        let w = b.pairing(a, c);
                        if w == 0.0 {
                            continue;
                        }
                        let t1 = trunc(&pp[(i * n + j) * n + a], k) * trunc(b.phi_minus(kk, c), k);
                        let t2 = trunc(b.phi_plus(kk, a), k) * trunc(&pm[(i * n + j) * n + c], k);
                        v = v + (t1 - t2).scale(-2.0 * w);
                    }
                }
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// Torsion-free connection on `TM` recovered from `Φ⁺` (an isomorphism) and `ω⁺`.
pub fn plus_connection(b: &CoherentBundleData) -> Result<ConnectionAtPoint> {
    let n = b.n;
    let p = b.plus.covariant_phi()?;
    let k = p[0].order();
    let f: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|a| trunc(b.phi_plus(i, a), k)).collect())
        .collect();
    let finv = JetLu::factor(&f)
        .map_err(|e| Error::from(e).at(&b.point))?
        .inverse()?;
    // P_ij· = Γ^m_ij F[m][·]  ⇒  Γ^m_ij = Σ_a P_ija F⁻¹[a][m]
    let mut gamma = vec![p[0].zero_like(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for m in 0..n {
                let mut v = p[0].zero_like();
                for a in 0..n {
                    v = v + &p[(i * n + j) * n + a] * &finv[a][m];
                }
                gamma[(m * n + i) * n + j] = v;
            }
        }
    }
    ConnectionAtPoint::new(n, &b.point, gamma)
}

/// `(max |C − ∇h|, max total-symmetry defect of C)`, with `∇` and `h`
/// recovered from the bundle data. Needs order ≥ 2 for `∇h` of the recovered
/// metric at value level when `Φ⁺` is not constant; order ≥ 1 otherwise.
pub fn cubic_residuals(b: &CoherentBundleData) -> Result<(f64, f64)> {
    let n = b.n;
    let c = cubic_tensor(b)?;
    let conn = plus_connection(b)?;
    let h = b.pullback_metric();
    let nh = cov_deriv_02(&conn, &h)?;
    let mut diff = 0.0f64;
    let mut sym = 0.0f64;
    let at = |i: usize, j: usize, k: usize| c[(i * n + j) * n + k].value();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                diff = diff.max((at(i, j, k) - nh[(i * n + j) * n + k].value()).abs());
                let v = at(i, j, k);
                for w in [at(i, k, j), at(j, i, k), at(j, k, i), at(k, i, j), at(k, j, i)] {
                    sym = sym.max((v - w).abs());
                }
            }
        }
    }
    Ok((diff, sym))
}

/// `max |2θ(Φ⁺∂_i, Φ⁻∂_j) − h_ij|`.
pub fn pullback_metric_residual(b: &CoherentBundleData, d: &InducedData) -> f64 {
    let h = b.pullback_metric();
    max_abs(h.iter().zip(&d.h).map(|(a, b)| a.value() - b.value()))
}

/// Classical dual connection of the nondegenerate pullback metric, read off
/// `ω⁻` through `(Φ⁻)⁻¹`: `Γ*^m_ij h_mb = ∂_i h_jb + h_ja ω⁻_iab`.
pub fn dual_connection(b: &CoherentBundleData) -> Result<ConnectionAtPoint> {
    let n = b.n;
    let p = b.minus.covariant_phi()?;
    let k = p[0].order();
    let hm: Vec<Vec<Jet>> = (0..n)
        .map(|m| (0..n).map(|c| trunc(b.phi_minus(m, c), k)).collect())
        .collect();
    let lu = JetLu::factor(&hm).map_err(|e| match e {
        JetError::Singular { .. } => Error::DegenerateMetric {
            point: b.point.clone(),
        },
        other => Error::from(other),
    })?;
    let hinv = lu.inverse()?;
    let mut gamma = vec![p[0].zero_like(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for m in 0..n {
                let mut v = p[0].zero_like();
                for c in 0..n {
                    v = v + &p[(i * n + j) * n + c] * &hinv[c][m];
                }
                gamma[(m * n + i) * n + j] = v;
            }
        }
    }
    ConnectionAtPoint::new(n, &b.point, gamma)
}

/// `max |∂_i h_jk − h(∇_i∂_j, ∂_k) − h(∂_j, ∇*_i∂_k)|`.
pub fn classical_duality_residual(b: &CoherentBundleData) -> Result<f64> {
    let n = b.n;
    let star = dual_connection(b)?;
    let conn = plus_connection(b)?;
    let h = b.pullback_metric();
    let mut d = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = h[j * n + k].d1(i);
                for m in 0..n {
                    v -= conn.gamma(m, i, j).value() * h[m * n + k].value();
                    v -= star.gamma(m, i, k).value() * h[j * n + m].value();
                }
                d = d.max(v.abs());
            }
        }
    }
    Ok(d)
}

/// Residuals of an isomorphism `F` between two structures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsomorphismResidual {
    pub phi: f64,
    pub involution: f64,
    pub metric: f64,
    pub connection: f64,
}

impl IsomorphismResidual {
    pub fn max(&self) -> f64 {
        max_abs([self.phi, self.involution, self.metric, self.connection])
    }
}

/// `F` acts on split-frame components: `(Fη)_r = Σ_c F[r][c] η_c`, row-major
/// `2n × 2n`, as jets of order ≥ 1.
pub fn isomorphism_residual(
    b1: &CoherentBundleData,
    b2: &CoherentBundleData,
    f: &[Jet],
) -> Result<IsomorphismResidual> {
    let n = b1.n;
    let m = 2 * n;
    if b2.n != n || f.len() != m * m {
        return Err(Error::NotBlockCompatible);
    }
    if f[0].order() < 1 {
        return Err(Error::InsufficientOrder { needed: 1, got: 0 });
    }
    let fv = |r: usize, c: usize| f[r * m + c].value();
    let mut phi = 0.0f64;
    for i in 0..n {
        let v1 = b1.phi_vector(i);
        let v2 = b2.phi_vector(i);
        for r in 0..m {
            let s: f64 = (0..m).map(|c| fv(r, c) * v1[c]).sum();
            phi = phi.max((s - v2[r]).abs());
        }
    }
    let mut inv = 0.0f64;
    let mut metric = 0.0f64;
    for r in 0..m {
        for c in 0..m {
            let a: f64 = (0..m).map(|k| fv(r, k) * b1.involution[k * m + c]).sum();
            let b: f64 = (0..m).map(|k| b2.involution[r * m + k] * fv(k, c)).sum();
            inv = inv.max((a - b).abs());
            let mut t2 = 0.0;
            for x in 0..m {
                for y in 0..m {
                    t2 += fv(x, r) * b2.theta[x * m + y] * fv(y, c);
                }
            }
            metric = metric.max((b1.theta[r * m + c] - t2).abs());
        }
    }
    let o1 = b1.big_connection();
    let o2 = b2.big_connection();
    let mut conn = 0.0f64;
    for i in 0..n {
        for c in 0..m {
            for g in 0..m {
                let mut s: f64 = (0..m).map(|d| o1[i][c][d].value() * fv(g, d)).sum();
                s -= f[g * m + c].d1(i);
                s -= (0..m).map(|e| fv(e, c) * o2[i][e][g].value()).sum::<f64>();
                conn = conn.max(s.abs());
            }
        }
    }
    Ok(IsomorphismResidual {
        phi,
        involution: inv,
        metric,
        connection: conn,
    })
}

fn block_inverse(m: &[Vec<Jet>], point: &[f64]) -> Result<Vec<Vec<Jet>>> {
    Ok(JetLu::factor(m)
        .map_err(|e| Error::from(e).at(point))?
        .inverse()?)
}

/// The map onto the immersion's canonical split frame built from `Φ⁺`:
/// `F⁺ = f_* ∘ (Φ⁺)⁻¹` on `E⁺`, and on `E⁻` the unique block making `θ`
/// correspond. Result is `2n × 2n`, row-major, same order as `Φ⁺`.
pub fn reconstruction_map(b: &CoherentBundleData) -> Result<Vec<Jet>> {
    let n = b.n;
    let m = 2 * n;
    let k = b.plus.phi[0].order();
    let zero = b.phi_plus(0, 0).zero_like();
    // Φ⁺(∂_k) = Σ_a P[k][a] e_a ⇒ components w = (P⁻¹)ᵀ v
    let p: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|a| trunc(b.phi_plus(i, a), k)).collect())
        .collect();
    let pinv = block_inverse(&p, &b.point)?;
    let fplus: Vec<Vec<Jet>> = (0..n)
        .map(|r| (0..n).map(|c| pinv[c][r].clone()).collect())
        .collect();
    // F⁺ᵀ B₂ F⁻ = B₁ with B₂ = ½ I:  F⁻ = 2 (F⁺ᵀ)⁻¹ B₁
    let fplus_t: Vec<Vec<Jet>> = (0..n)
        .map(|r| (0..n).map(|c| fplus[c][r].clone()).collect())
        .collect();
    let ft_inv = block_inverse(&fplus_t, &b.point)?;
    let mut out = vec![zero.clone(); m * m];
    for r in 0..n {
        for c in 0..n {
            out[r * m + c] = fplus[r][c].clone();
            let mut v = zero.clone();
            for x in 0..n {
                v = v + ft_inv[r][x].scale(2.0 * b.pairing(x, c));
            }
            out[(n + r) * m + n + c] = v;
        }
    }
    Ok(out)
}

/// Re-expresses `b` in the frames `G⁺e⁺` and `(G⁺)⁻ᵀe⁻`, which keep `θ` and `I`
/// in split form. `g` is `n × n` row-major, one order above `b`. Returns the
/// new data and the component map `F` from old to new frame.
pub fn gauge_transform(b: &CoherentBundleData, g: &[Jet]) -> Result<(CoherentBundleData, Vec<Jet>)> {
    let n = b.n;
    let m = 2 * n;
    let gm: Vec<Vec<Jet>> = (0..n)
        .map(|r| (0..n).map(|c| g[r * n + c].clone()).collect())
        .collect();
    let ginv = block_inverse(&gm, &b.point)?;
    let minus_frame: Vec<Jet> = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| ginv[c][r].clone())
        .collect();
    let plus = b.plus.reframe(g)?;
    let minus = b.minus.reframe(&minus_frame)?;
    // component map v' = M⁻ᵀ v per block
    let k = b.order();
    let zero = trunc(&g[0], k).zero_like();
    let mut f = vec![zero; m * m];
    for r in 0..n {
        for c in 0..n {
            f[r * m + c] = trunc(&ginv[c][r], k);
            f[(n + r) * m + n + c] = trunc(&gm[r][c], k);
        }
    }
    Ok((
        CoherentBundleData {
            n,
            point: b.point.clone(),
            plus,
            minus,
            theta: b.theta.clone(),
            involution: b.involution.clone(),
        },
        f,
    ))
}

/// All quasi-Codazzi residuals at one point of an immersion (order ≥ 1 data).
pub fn quasi_codazzi_samples(b: &CoherentBundleData, d: &InducedData) -> Result<Vec<Sample>> {
    let (c_diff, c_sym) = cubic_residuals(b)?;
    let mut out = vec![
        Sample::new("para-hermitian", para_hermitian_residual(b), tolerances::PARA_HERMITIAN),
        Sample::new("lagrangian", lagrangian_residual(b), tolerances::LAGRANGIAN),
        Sample::new("duality", duality_residual(b), tolerances::DUALITY),
        Sample::new(
            "relative-torsion-plus",
            relative_torsion_residual(b, Side::Plus)?,
            tolerances::RELATIVE_TORSION,
        ),
        Sample::new(
            "relative-torsion-minus",
            relative_torsion_residual(b, Side::Minus)?,
            tolerances::RELATIVE_TORSION,
        ),
        Sample::new("pullback-metric", pullback_metric_residual(b, d), tolerances::PULLBACK),
        Sample::new("cubic-nabla-h", c_diff, tolerances::CUBIC),
        Sample::new("cubic-symmetry", c_sym, tolerances::CUBIC),
    ];
    let rank_defect = b.n as f64 - phi_rank(b) as f64;
    out.push(Sample::new("phi-rank-defect", rank_defect, 0.0));
    Ok(out)
}
