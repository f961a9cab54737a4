//! Gauss/Weingarten decomposition of an affine immersion `{f, ξ}`.
//!
//! With the frame `[∂₁f … ∂ₙf | ξ]`,
//!
//! ```text
//! ∂_i∂_j f = Γ^k_ij ∂_k f + h_ij ξ
//! ∂_i ξ    = −S^k_i ∂_k f + τ_i ξ
//! ```
//!
//! Both systems are solved in the jet ring, so every output carries its own
//! derivatives. Index layouts: `gamma[(k·n + i)·n + j] = Γ^k_ij`,
//! `h[i·n + j] = h_ij`, `s[k·n + i] = S^k_i`.

use crate::error::{Error, Result};
use crate::expr::ExprMap;
use crate::grid::Domain;
use crate::jets::{Jet, JetError, JetLu, MAX_ORDER};
use crate::linalg;
use crate::report::{ResidualReport, Sample};
use crate::tolerances;

#[derive(Debug, Clone)]
pub struct ImmersionSpec {
    pub n: usize,
    pub f: ExprMap,
    pub xi: ExprMap,
    pub domain: Domain,
    pub label: String,
}

impl ImmersionSpec {
    pub fn new(label: impl Into<String>, f: ExprMap, xi: ExprMap, domain: Domain) -> Result<Self> {
        let n = f.dim_in();
        let check = |what: &str, m: &ExprMap| -> Result<()> {
            if m.dim_in() != n || m.dim_out() != n + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "{what} maps R^{} -> R^{}, expected R^{n} -> R^{}",
                    m.dim_in(),
                    m.dim_out(),
                    n + 1
                )));
            }
            Ok(())
        };
        check("f", &f)?;
        check("xi", &xi)?;
        if domain.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "domain has dimension {}, expected {n}",
                domain.dim()
            )));
        }
        Ok(ImmersionSpec {
            n,
            f,
            xi,
            domain,
            label: label.into(),
        })
    }

    /// Builds a spec from expression sources.
    pub fn parse<S: AsRef<str>>(
        label: &str,
        n: usize,
        f: &[S],
        xi: &[S],
        domain: Domain,
    ) -> Result<Self> {
        ImmersionSpec::new(
            label,
            ExprMap::parse(n, f)?,
            ExprMap::parse(n, xi)?,
            domain,
        )
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, expected {}",
                p.len(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Jets of `f`, `∂_i f`, `∂_i∂_j f`, `ξ`, `∂_i ξ` at a point.
#[derive(Debug, Clone)]
pub struct ImmersionJets {
    /// `f` at order `K + 2`.
    pub f: Vec<Jet>,
    /// `df[i][a] = ∂_i f^a` at order `K + 1`.
    pub df: Vec<Vec<Jet>>,
    /// `d2f[i][j][a]` at order `K`.
    pub d2f: Vec<Vec<Vec<Jet>>>,
    /// `ξ` at order `K + 1`.
    pub xi: Vec<Jet>,
    /// `dxi[i][a]` at order `K`.
    pub dxi: Vec<Vec<Jet>>,
}

/// Evaluates `f` and `ξ` with enough derivatives for an order-`k` decomposition.
pub fn immersion_jets(spec: &ImmersionSpec, p: &[f64], k: usize) -> Result<ImmersionJets> {
    spec.check_point(p)?;
    if k + 2 > MAX_ORDER {
        return Err(JetError::OrderOutOfRange(k + 2).into());
    }
    let n = spec.n;
    let at = |e: JetError| Error::from(e).at(p);
    let f = spec.f.eval_jet(p, k + 2).map_err(at)?;
    let xi = spec.xi.eval_jet(p, k + 1).map_err(at)?;
    let mut df = Vec::with_capacity(n);
    let mut dxi = Vec::with_capacity(n);
    for i in 0..n {
        df.push(
            f.iter()
                .map(|c| c.derivative(i))
                .collect::<std::result::Result<Vec<_>, _>>()?,
        );
        dxi.push(
            xi.iter()
                .map(|c| c.derivative(i))
                .collect::<std::result::Result<Vec<_>, _>>()?,
        );
    }
    let mut d2f = Vec::with_capacity(n);
    for row in &df {
        let mut r = Vec::with_capacity(n);
        for j in 0..n {
            r.push(
                row.iter()
                    .map(|c| c.derivative(j))
                    .collect::<std::result::Result<Vec<_>, _>>()?,
            );
        }
        d2f.push(r);
    }
    Ok(ImmersionJets {
        f,
        df,
        d2f,
        xi,
        dxi,
    })
}

/// Frame matrix `[∂₁f … ∂ₙf | ξ]` at order `k`, row-major over ambient rows.
fn frame_matrix(df: &[Vec<Jet>], xi: &[Jet], k: usize) -> Result<Vec<Vec<Jet>>> {
    let n = df.len();
    let mut m = Vec::with_capacity(n + 1);
    for a in 0..=n {
        let mut row = Vec::with_capacity(n + 1);
        for col in df {
            row.push(col[a].truncate(k)?);
        }
        row.push(xi[a].truncate(k)?);
        m.push(row);
    }
    Ok(m)
}

fn transpose(m: &[Vec<Jet>]) -> Vec<Vec<Jet>> {
    (0..m[0].len())
        .map(|c| m.iter().map(|row| row[c].clone()).collect())
        .collect()
}

fn factor(m: &[Vec<Jet>], p: &[f64]) -> Result<JetLu> {
    JetLu::factor(m).map_err(|e| Error::from(e).at(p))
}

#[derive(Debug, Clone)]
pub struct InducedData {
    pub n: usize,
    pub point: Vec<f64>,
    pub order: usize,
    pub gamma: Vec<Jet>,
    pub h: Vec<Jet>,
    pub s: Vec<Jet>,
    pub tau: Vec<Jet>,
    /// Value part of the frame, `frame[a][c]` with columns `∂₁f … ∂ₙf, ξ`.
    pub frame: Vec<Vec<f64>>,
}

impl InducedData {
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.n + i) * self.n + j]
    }

    pub fn h(&self, i: usize, j: usize) -> &Jet {
        &self.h[i * self.n + j]
    }

    pub fn s(&self, k: usize, i: usize) -> &Jet {
        &self.s[k * self.n + i]
    }

    pub fn tau(&self, i: usize) -> &Jet {
        &self.tau[i]
    }

    pub fn h_values(&self) -> Vec<f64> {
        linalg::values(&self.h)
    }
}

/// Induced connection, second fundamental form, shape operator and
/// transversal form at `p` as order-`k` jets (`k ≤ 2`, since `f` is consumed
/// at order `k + 2`).
pub fn decompose(spec: &ImmersionSpec, p: &[f64], k: usize) -> Result<InducedData> {
    let jets = immersion_jets(spec, p, k)?;
    decompose_jets(&jets, p, k)
}

pub fn decompose_jets(jets: &ImmersionJets, p: &[f64], k: usize) -> Result<InducedData> {
    let n = jets.df.len();
    let frame = frame_matrix(&jets.df, &jets.xi, k)?;
    let frame_values = frame
        .iter()
        .map(|row| row.iter().map(Jet::value).collect())
        .collect();
    let lu = factor(&frame, p)?;
    let mut gamma = vec![None; n * n * n];
    let mut h = vec![None; n * n];
    for i in 0..n {
        for j in 0..n {
            let c = lu.solve(&jets.d2f[i][j])?;
            for (kk, ck) in c.iter().enumerate().take(n) {
                gamma[(kk * n + i) * n + j] = Some(ck.clone());
            }
            h[i * n + j] = Some(c[n].clone());
        }
    }
    let mut s = vec![None; n * n];
    let mut tau = Vec::with_capacity(n);
    for i in 0..n {
        let rhs = jets.dxi[i].clone();
        let c = lu.solve(&rhs)?;
        for (kk, ck) in c.iter().enumerate().take(n) {
            s[kk * n + i] = Some(-ck);
        }
        tau.push(c[n].clone());
    }
    Ok(InducedData {
        n,
        point: p.to_vec(),
        order: k,
        gamma: gamma.into_iter().map(Option::unwrap).collect(),
        h: h.into_iter().map(Option::unwrap).collect(),
        s: s.into_iter().map(Option::unwrap).collect(),
        tau,
        frame: frame_values,
    })
}

/// Conormal `ν`: `⟨ν, ∂_i f⟩ = 0`, `⟨ν, ξ⟩ = 1`, as order-`k` jets (`k ≤ 3`).
pub fn conormal(spec: &ImmersionSpec, p: &[f64], k: usize) -> Result<Vec<Jet>> {
    spec.check_point(p)?;
    if k + 1 > MAX_ORDER {
        return Err(JetError::OrderOutOfRange(k + 1).into());
    }
    let at = |e: JetError| Error::from(e).at(p);
    let f = spec.f.eval_jet(p, k + 1).map_err(at)?;
    let xi = spec.xi.eval_jet(p, k).map_err(at)?;
    let df = (0..spec.n)
        .map(|i| f.iter().map(|c| c.derivative(i)).collect())
        .collect::<std::result::Result<Vec<Vec<Jet>>, _>>()?;
    conormal_from_frame(&df, &xi, p)
}

/// Solves `Frameᵀ ν = e_{n+1}` for frame columns given as jets of equal shape.
pub fn conormal_from_frame(df: &[Vec<Jet>], xi: &[Jet], p: &[f64]) -> Result<Vec<Jet>> {
    let n = df.len();
    let k = xi[0].order();
    let frame = frame_matrix(df, xi, k)?;
    let lu = factor(&transpose(&frame), p)?;
    let rhs: Vec<Jet> = (0..=n)
        .map(|r| xi[0].truncate(k).unwrap().constant_like(if r == n { 1.0 } else { 0.0 }))
        .collect();
    Ok(lu.solve(&rhs)?)
}

fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = a[0].zero_like();
    for (x, y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

/// `⟨∂_iν, ∂_jf⟩ + h_ij`, `⟨∂_iν, ξ⟩ + τ_i`, and the defining normalisation of
/// `ν`, each maxed over indices.
pub fn conormal_identity_samples(spec: &ImmersionSpec, p: &[f64]) -> Result<Vec<Sample>> {
    let n = spec.n;
    let d = decompose(spec, p, 0)?;
    let nu = conormal(spec, p, 1)?;
    let f = spec.f.eval_jet(p, 1).map_err(|e| Error::from(e).at(p))?;
    let xi = spec.xi.eval_jet(p, 0).map_err(|e| Error::from(e).at(p))?;
    let nu0: Vec<Jet> = nu.iter().map(|c| c.truncate(0)).collect::<std::result::Result<_, _>>()?;
    let dnu: Vec<Vec<Jet>> = (0..n)
        .map(|i| nu.iter().map(|c| c.derivative(i)).collect())
        .collect::<std::result::Result<_, _>>()?;
    let df: Vec<Vec<Jet>> = (0..n)
        .map(|i| f.iter().map(|c| c.derivative(i)).collect())
        .collect::<std::result::Result<_, _>>()?;
    let mut rh = 0.0f64;
    let mut rt = 0.0f64;
    let mut rn = (dot(&nu0, &xi).value() - 1.0).abs();
    for i in 0..n {
        rn = rn.max(dot(&nu0, &df[i]).value().abs());
        rt = rt.max((dot(&dnu[i], &xi).value() + d.tau(i).value()).abs());
        for j in 0..n {
            rh = rh.max((dot(&dnu[i], &df[j]).value() + d.h(i, j).value()).abs());
        }
    }
    Ok(vec![
        Sample::new("conormal-normalization", rn, tolerances::SYMMETRY),
        Sample::new("conormal-h", rh, tolerances::EXACT),
        Sample::new("conormal-tau", rt, tolerances::EXACT),
    ])
}

/// Single-point report form of [`conormal_identity_samples`].
pub fn conormal_identity_residuals(spec: &ImmersionSpec, p: &[f64]) -> Result<Vec<ResidualReport>> {
    Ok(conormal_identity_samples(spec, p)?
        .into_iter()
        .map(|s| ResidualReport::single(s.name, p, s.value, s.tolerance))
        .collect())
}

/// `max_i |τ_i|` at one point.
pub fn tau_max(spec: &ImmersionSpec, p: &[f64]) -> Result<f64> {
    let d = decompose(spec, p, 0)?;
    Ok(linalg::max_abs(d.tau.iter().map(Jet::value)))
}

/// Max of `|τ|` over a grid; fails on the first degenerate point.
pub fn equiaffine_residual(spec: &ImmersionSpec, grid: &[Vec<f64>]) -> Result<ResidualReport> {
    let mut r = ResidualReport::empty("equiaffine", tolerances::EQUIAFFINE);
    let vals = crate::grid::map_points(grid, |p| tau_max(spec, p));
    for (p, v) in grid.iter().zip(vals) {
        r.push(p, v?);
    }
    Ok(r)
}

/// Rank of the value part of `h` relative to its largest singular value.
pub fn h_rank(spec: &ImmersionSpec, p: &[f64], threshold: f64) -> Result<usize> {
    let d = decompose(spec, p, 0)?;
    Ok(linalg::rank(&d.h_values(), spec.n, spec.n, threshold))
}

/// Coefficientwise residuals of the Gauss and Weingarten formulas and of the
/// symmetry of `Γ` and `h`.
pub fn reconstruction_samples(spec: &ImmersionSpec, p: &[f64], k: usize) -> Result<Vec<Sample>> {
    let n = spec.n;
    let jets = immersion_jets(spec, p, k)?;
    let d = decompose_jets(&jets, p, k)?;
    let tr = |j: &Jet| j.truncate(k).unwrap();
    let mut gauss = 0.0f64;
    let mut weingarten = 0.0f64;
    let mut sym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            sym = sym.max((d.h(i, j) - d.h(j, i)).max_abs());
            for kk in 0..n {
                sym = sym.max((d.gamma(kk, i, j) - d.gamma(kk, j, i)).max_abs());
            }
            for a in 0..=n {
                let mut r = jets.d2f[i][j][a].clone();
                for kk in 0..n {
                    r = r - d.gamma(kk, i, j) * tr(&jets.df[kk][a]);
                }
                r = r - d.h(i, j) * tr(&jets.xi[a]);
                gauss = gauss.max(r.max_abs());
            }
        }
        for a in 0..=n {
            let mut r = jets.dxi[i][a].clone();
            for kk in 0..n {
                r = r + d.s(kk, i) * tr(&jets.df[kk][a]);
            }
            r = r - d.tau(i) * tr(&jets.xi[a]);
            weingarten = weingarten.max(r.max_abs());
        }
    }
    Ok(vec![
        Sample::new("gauss-formula", gauss, tolerances::EXACT),
        Sample::new("weingarten-formula", weingarten, tolerances::EXACT),
        Sample::new("induced-symmetry", sym, tolerances::SYMMETRY),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_cubic() -> ImmersionSpec {
        ImmersionSpec::parse(
            "graph-cubic",
            2,
            &["x1", "x2", "(x1^3 + x2^3)/6"],
            &["0", "0", "1"],
            Domain::cube(2, -1.0, 1.0),
        )
        .unwrap()
    }

    fn cylinder() -> ImmersionSpec {
        ImmersionSpec::parse(
            "affine-cylinder",
            2,
            &["cos(t)", "sin(t)", "t + x2"],
            &["-cos(t)", "-sin(t)", "0"],
            Domain::boxed(&[(0.0, std::f64::consts::TAU), (-1.0, 1.0)]),
        )
        .unwrap()
    }

    #[test]
    fn graph_cubic_h_and_conormal() {
        let s = graph_cubic();
        let d = decompose(&s, &[0.7, -0.3], 2).unwrap();
        assert!((d.h(0, 0).value() - 0.7).abs() < 1e-14);
        assert!((d.h(1, 1).value() + 0.3).abs() < 1e-14);
        assert!(d.h(0, 1).value().abs() < 1e-14);
        assert!(d.gamma.iter().all(|g| g.max_abs() < 1e-14));
        assert!(d.s.iter().all(|g| g.max_abs() < 1e-14));
        assert!(d.tau.iter().all(|g| g.max_abs() < 1e-14));
        let nu = conormal(&s, &[0.7, -0.3], 1).unwrap();
        assert!((nu[0].value() + 0.245).abs() < 1e-14);
        assert!((nu[1].value() + 0.045).abs() < 1e-14);
        assert!((nu[2].value() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cylinder_conormal_and_rank() {
        let s = cylinder();
        let t = std::f64::consts::FRAC_PI_4;
        let nu = conormal(&s, &[t, 0.5], 0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((nu[0].value() + r).abs() < 1e-14);
        assert!((nu[1].value() + r).abs() < 1e-14);
        assert!(nu[2].value().abs() < 1e-14);
        assert_eq!(h_rank(&s, &[t, 0.5], 1e-8).unwrap(), 1);
        assert!(tau_max(&s, &[t, 0.5]).unwrap() < 1e-14);
    }

    #[test]
    fn flat_plane_is_exact() {
        let s = ImmersionSpec::parse(
            "flat",
            2,
            &["x1", "x2", "0"],
            &["0", "0", "1"],
            Domain::cube(2, -1.0, 1.0),
        )
        .unwrap();
        let d = decompose(&s, &[0.1, 0.2], 2).unwrap();
        for j in d.gamma.iter().chain(&d.h).chain(&d.s).chain(&d.tau) {
            assert_eq!(j.max_abs(), 0.0);
        }
        for r in conormal_identity_residuals(&s, &[0.1, 0.2]).unwrap() {
            assert_eq!(r.max_abs, 0.0);
        }
    }

    #[test]
    fn tilted_transversal_has_tau() {
        let s = ImmersionSpec::parse(
            "tilted",
            2,
            &["x1", "x2", "(x1^3 + x2^3)/6"],
            &["0", "0", "1 + x1"],
            Domain::cube(2, -0.5, 0.5),
        )
        .unwrap();
        let d = decompose(&s, &[0.2, 0.1], 1).unwrap();
        // ∂₁ξ = (0,0,1) = ξ/(1+x1)
        assert!((d.tau(0).value() - 1.0 / 1.2).abs() < 1e-14);
        assert!(d.tau(1).value().abs() < 1e-14);
        assert!((d.h(0, 0).value() - 0.2 / 1.2).abs() < 1e-14);
        let grid = s.domain.grid(3);
        let r = equiaffine_residual(&s, &grid).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn degenerate_frame_is_located() {
        // ξ tangent to the plane at x1 = 0
        let s = ImmersionSpec::parse(
            "bad",
            2,
            &["x1", "x2", "0"],
            &["1", "0", "x1"],
            Domain::cube(2, -1.0, 1.0),
        )
        .unwrap();
        match decompose(&s, &[0.0, 0.3], 0) {
            Err(Error::FrameDegenerate { point }) => assert_eq!(point, vec![0.0, 0.3]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(decompose(&s, &[0.5, 0.3], 0).is_ok());
    }

    #[test]
    fn dimension_checks() {
        assert!(matches!(
            ImmersionSpec::parse("x", 2, &["x1", "x2"], &["0", "0", "1"], Domain::cube(2, 0.0, 1.0)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(decompose(&graph_cubic(), &[0.1, 0.1], 3).is_err());
    }
}
