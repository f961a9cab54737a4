//! Built-in immersions with closed-form expected data.
//!
//! Expected quantities use the storage layouts of the computing modules:
//! `h[i·n + j]`, `Γ[(k·n + i)·n + j]`, `S[k·n + i]`, `ω[(i·n + a)·n + b]`.
//! `Φ⁻` and `ω⁻` are given in the frame `minus_frame` (rows `α̂_a = M_ab β^b`),
//! or in the dual frame `β` when no frame is set.

use crate::error::{Error, Result};
use crate::expr::ExprMap;
use crate::grid::Domain;
use crate::immersion::{conormal, decompose, h_rank, ImmersionSpec};
use crate::jets::Jet;
use crate::linalg::max_abs;
use crate::quasi_codazzi::assemble_induced;
use crate::report::{aggregate, ResidualReport, Sample};
use crate::tensor::{curvature, projective_flat_tm_check, ConnectionAtPoint, FlatnessCheck, InducedConnection};
use crate::tolerances;

pub const NAMES: [&str; 7] = [
    "flat-plane",
    "graph-quadratic",
    "graph-cubic",
    "graph-cubic-3d",
    "centroaffine-paraboloid",
    "centroaffine-cubic",
    "affine-cylinder",
];

#[derive(Debug, Clone, Default)]
pub struct Expected {
    pub h: Option<ExprMap>,
    pub gamma: Option<ExprMap>,
    pub s: Option<ExprMap>,
    pub tau: Option<ExprMap>,
    pub nu: Option<ExprMap>,
    pub minus_frame: Option<ExprMap>,
    pub phi_minus: Option<ExprMap>,
    pub omega_plus: Option<ExprMap>,
    pub omega_minus: Option<ExprMap>,
    /// `h = Ric/(n − 1)`, `S = id`, `τ = 0`.
    pub centroaffine: bool,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub spec: ImmersionSpec,
    pub expected: Expected,
    /// `{ν, −ν}` from the closed-form conormal, inducing the dual connection
    /// where `h` is nondegenerate.
    pub dual: Option<ImmersionSpec>,
    pub notes: &'static str,
}

fn map(n: usize, src: &[&str]) -> Option<ExprMap> {
    Some(ExprMap::parse(n, src).expect("catalog expression"))
}

fn zeros(n: usize, len: usize) -> Option<ExprMap> {
    map(n, &vec!["0"; len])
}

fn identity(n: usize) -> Option<ExprMap> {
    let src: Vec<&str> = (0..n * n).map(|i| if i % (n + 1) == 0 { "1" } else { "0" }).collect();
    map(n, &src)
}

fn spec(name: &str, n: usize, f: &[&str], xi: &[&str], domain: Domain) -> ImmersionSpec {
    ImmersionSpec::parse(name, n, f, xi, domain).expect("catalog spec")
}

fn graph_expected(n: usize, h: &[&str], nu: &[&str]) -> Expected {
    Expected {
        h: map(n, h),
        gamma: zeros(n, n * n * n),
        s: zeros(n, n * n),
        tau: zeros(n, n),
        nu: map(n, nu),
        minus_frame: None,
        phi_minus: map(n, h),
        omega_plus: zeros(n, n * n * n),
        omega_minus: zeros(n, n * n * n),
        centroaffine: false,
    }
}

pub fn catalog_get(name: &str) -> Result<CatalogEntry> {
    let entry = match name {
        "flat-plane" => CatalogEntry {
            name: "flat-plane",
            spec: spec(name, 2, &["x1", "x2", "0"], &["0", "0", "1"], Domain::cube(2, -1.0, 1.0)),
            expected: graph_expected(2, &["0", "0", "0", "0"], &["0", "0", "1"]),
            dual: None,
            notes: "graph of the zero function; every induced quantity vanishes",
        },
        "graph-quadratic" => CatalogEntry {
            name: "graph-quadratic",
            spec: spec(
                name,
                2,
                &["x1", "x2", "(x1^2 + x2^2)/2"],
                &["0", "0", "1"],
                Domain::cube(2, -1.0, 1.0),
            ),
            expected: graph_expected(2, &["1", "0", "0", "1"], &["-x1", "-x2", "1"]),
            dual: None,
            notes: "graph immersion of (x1² + x2²)/2: h = δ, Hessian structure; ν = (−∇φ, 1)",
        },
        "graph-cubic" => CatalogEntry {
            name: "graph-cubic",
            spec: spec(
                name,
                2,
                &["x1", "x2", "(x1^3 + x2^3)/6"],
                &["0", "0", "1"],
                Domain::cube(2, -1.0, 1.0),
            ),
            expected: graph_expected(2, &["x1", "0", "0", "x2"], &["-x1^2/2", "-x2^2/2", "1"]),
            dual: None,
            notes: "graph immersion of (x1³ + x2³)/6: h = diag(x1, x2), degenerate on the axes; \
                    α̂_i = α_i restricted equals β^i, so Φ⁻(∂_i) = x_i α̂_i is compared directly",
        },
        "graph-cubic-3d" => CatalogEntry {
            name: "graph-cubic-3d",
            spec: spec(
                name,
                3,
                &["x1", "x2", "x3", "(x1^3 + x2^3 + x3^3)/6"],
                &["0", "0", "0", "1"],
                Domain::cube(3, -1.0, 1.0),
            ),
            expected: graph_expected(
                3,
                &["x1", "0", "0", "0", "x2", "0", "0", "0", "x3"],
                &["-x1^2/2", "-x2^2/2", "-x3^2/2", "1"],
            ),
            dual: None,
            notes: "graph immersion of (x1³ + x2³ + x3³)/6: h = diag(x1, x2, x3), rank 3 off the coordinate planes",
        },
        "centroaffine-paraboloid" => {
            let nu = ["-2*x1/(x1^2 + x2^2 - 1)", "-2*x2/(x1^2 + x2^2 - 1)", "1/(x1^2 + x2^2 - 1)"];
            let neg_nu = ["2*x1/(x1^2 + x2^2 - 1)", "2*x2/(x1^2 + x2^2 - 1)", "-1/(x1^2 + x2^2 - 1)"];
            let domain = Domain::ball(&[0.0, 0.0], 1.0);
            CatalogEntry {
                name: "centroaffine-paraboloid",
                spec: spec(
                    name,
                    2,
                    &["x1", "x2", "x1^2 + x2^2 + 1"],
                    &["-x1", "-x2", "-(x1^2 + x2^2 + 1)"],
                    domain.clone(),
                ),
                expected: Expected {
                    h: map(2, &["2/(x1^2 + x2^2 - 1)", "0", "0", "2/(x1^2 + x2^2 - 1)"]),
                    gamma: map(
                        2,
                        &[
                            "2*x1/(x1^2 + x2^2 - 1)",
                            "0",
                            "0",
                            "2*x1/(x1^2 + x2^2 - 1)",
                            "2*x2/(x1^2 + x2^2 - 1)",
                            "0",
                            "0",
                            "2*x2/(x1^2 + x2^2 - 1)",
                        ],
                    ),
                    s: identity(2),
                    tau: zeros(2, 2),
                    nu: map(2, &nu),
                    // coordinate frame: Φ⁻ = h, ω⁺_iab = Γ^b_ia, ω⁻_iab = −Γ^a_ib
                    phi_minus: map(2, &["2/(x1^2 + x2^2 - 1)", "0", "0", "2/(x1^2 + x2^2 - 1)"]),
                    omega_plus: map(
                        2,
                        &[
                            "2*x1/(x1^2 + x2^2 - 1)",
                            "2*x2/(x1^2 + x2^2 - 1)",
                            "0",
                            "0",
                            "0",
                            "0",
                            "2*x1/(x1^2 + x2^2 - 1)",
                            "2*x2/(x1^2 + x2^2 - 1)",
                        ],
                    ),
                    omega_minus: map(
                        2,
                        &[
                            "-2*x1/(x1^2 + x2^2 - 1)",
                            "0",
                            "-2*x2/(x1^2 + x2^2 - 1)",
                            "0",
                            "0",
                            "-2*x1/(x1^2 + x2^2 - 1)",
                            "0",
                            "-2*x2/(x1^2 + x2^2 - 1)",
                        ],
                    ),
                    centroaffine: true,
                    ..Expected::default()
                },
                dual: Some(spec("centroaffine-paraboloid-conormal", 2, &nu, &neg_nu, domain)),
                notes: "paraboloid x3 = x1² + x2² + 1 over the unit disk with ξ = −f; the Gauss formula gives \
                        h = 2δ/(|x|² − 1) and Γ^k_ij = h_ij x_k (negative definite h); \
                        ν = (2x1, 2x2, −1)/(1 − |x|²) solved from ⟨ν, f_*∂_i⟩ = 0, ⟨ν, −f⟩ = 1",
            }
        }
        "centroaffine-cubic" => {
            let g = "(2*(x1^3 + x2^3) - 1)";
            let s = |t: &str| t.replace('g', g);
            let nu = [s("-3*x1^2/g"), s("-3*x2^2/g"), s("1/g")];
            let neg_nu = [s("3*x1^2/g"), s("3*x2^2/g"), s("-1/g")];
            let nu_r: Vec<&str> = nu.iter().map(String::as_str).collect();
            let neg_r: Vec<&str> = neg_nu.iter().map(String::as_str).collect();
            let mk = |src: &[&str]| -> Option<ExprMap> {
                let owned: Vec<String> = src.iter().map(|t| s(t)).collect();
                Some(ExprMap::parse(2, &owned).expect("catalog expression"))
            };
            let domain = Domain::ball(&[0.0, 0.0], 0.3f64.sqrt());
            CatalogEntry {
                name: "centroaffine-cubic",
                spec: spec(
                    name,
                    2,
                    &["x1", "x2", "x1^3 + x2^3 + 1"],
                    &["-x1", "-x2", "-(x1^3 + x2^3 + 1)"],
                    domain.clone(),
                ),
                expected: Expected {
                    h: mk(&["6*x1/g", "0", "0", "6*x2/g"]),
                    gamma: mk(&["6*x1^2/g", "0", "0", "6*x1*x2/g", "6*x1*x2/g", "0", "0", "6*x2^2/g"]),
                    s: identity(2),
                    tau: zeros(2, 2),
                    nu: mk(&nu_r),
                    minus_frame: mk(&["1/g", "0", "0", "1/g"]),
                    phi_minus: map(2, &["6*x1", "0", "0", "6*x2"]),
                    omega_plus: mk(&["6*x1^2/g", "6*x1*x2/g", "0", "0", "0", "0", "6*x1*x2/g", "6*x2^2/g"]),
                    omega_minus: mk(&["-12*x1^2/g", "0", "-6*x1*x2/g", "-6*x1^2/g", "-6*x2^2/g", "-6*x1*x2/g", "0", "-12*x2^2/g"]),
                    centroaffine: true,
                },
                dual: Some(spec("centroaffine-cubic-conormal", 2, &nu_r, &neg_r, domain)),
                notes: "cubic x3 = x1³ + x2³ + 1 over the disk x1² + x2² < 0.3 with ξ = −f, \
                        γ = 2(x1³ + x2³) − 1 ≤ −0.67 there; ν = −(3x1², 3x2², −1)/γ so that ⟨ν, ξ⟩ = 1; \
                        α̂_i restricted to f_*TM equals β^i/γ, the conversion matrix is I/γ",
            }
        }
        "affine-cylinder" => CatalogEntry {
            name: "affine-cylinder",
            spec: spec(
                name,
                2,
                &["cos(t)", "sin(t)", "t + x2"],
                &["-cos(t)", "-sin(t)", "0"],
                Domain::boxed(&[(0.0, 2.0 * std::f64::consts::PI), (-1.0, 1.0)]),
            ),
            expected: Expected {
                h: map(2, &["1", "0", "0", "0"]),
                gamma: zeros(2, 8),
                s: None,
                tau: zeros(2, 2),
                nu: map(2, &["-cos(t)", "-sin(t)", "0"]),
                minus_frame: None,
                phi_minus: map(2, &["1", "0", "0", "0"]),
                omega_plus: zeros(2, 8),
                omega_minus: zeros(2, 8),
                centroaffine: false,
            },
            dual: None,
            notes: "f(t, x) = γ(t) + (0, 0, x) with γ(t) = (cos t, sin t, t) and ξ = γ''; h = diag(1, 0) \
                    everywhere degenerate; α̂_1, α̂_2 restrict to β^1, β^2; Φ⁻(∂_t) is compared as α̂_1",
        },
        other => return Err(Error::UnknownExample(other.to_string())),
    };
    Ok(entry)
}

pub fn catalog_all() -> Vec<CatalogEntry> {
    NAMES.iter().map(|n| catalog_get(n).expect("built-in entry")).collect()
}

fn diff(name: &str, expected: &ExprMap, computed: &[f64], p: &[f64]) -> Result<Sample> {
    let e = expected.eval(p).map_err(|err| Error::from(err).at(p))?;
    if e.len() != computed.len() {
        return Err(Error::DimensionMismatch(format!("{name}: {} expected components, {} computed", e.len(), computed.len())));
    }
    let v = max_abs(e.iter().zip(computed).map(|(a, b)| a - b));
    Ok(Sample::new(name, v, tolerances::CLOSED_FORM))
}

fn vals(j: &[Jet]) -> Vec<f64> {
    j.iter().map(Jet::value).collect()
}

/// Differences between the computed pipeline and the closed forms at `p`.
pub fn closed_form_samples(entry: &CatalogEntry, p: &[f64]) -> Result<Vec<Sample>> {
    let e = &entry.expected;
    let spec = &entry.spec;
    let n = spec.n;
    let d = decompose(spec, p, 1)?;
    let mut out = Vec::new();
    if let Some(m) = &e.h {
        out.push(diff("expected-h", m, &vals(&d.h), p)?);
    }
    if let Some(m) = &e.gamma {
        out.push(diff("expected-gamma", m, &vals(&d.gamma), p)?);
    }
    if let Some(m) = &e.s {
        out.push(diff("expected-s", m, &vals(&d.s), p)?);
    }
    if let Some(m) = &e.tau {
        out.push(diff("expected-tau", m, &vals(&d.tau), p)?);
    }
    if let Some(m) = &e.nu {
        out.push(diff("expected-nu", m, &vals(&conormal(spec, p, 0)?), p)?);
    }
    let b = assemble_induced(&d);
    if let Some(m) = &e.omega_plus {
        out.push(diff("expected-omega-plus", m, &vals(&b.plus.omega), p)?);
    }
    let minus = match &e.minus_frame {
        Some(frame) => {
            let mj = frame.eval_jet(p, 2).map_err(|err| Error::from(err).at(p))?;
            b.minus.reframe(&mj)?
        }
        None => b.minus.clone(),
    };
    if let Some(m) = &e.phi_minus {
        out.push(diff("expected-phi-minus", m, &vals(&minus.phi), p)?);
    }
    if let Some(m) = &e.omega_minus {
        out.push(diff("expected-omega-minus", m, &vals(&minus.omega), p)?);
    }
    if e.centroaffine {
        let cd = curvature(&ConnectionAtPoint::from_induced(&d), false)?;
        let nf = (n - 1) as f64;
        let mut r = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                r = r.max((d.h(i, j).value() - cd.ric(i, j) / nf).abs());
            }
        }
        out.push(Sample::new("centroaffine-ricci", r, tolerances::CLOSED_FORM));
    }
    Ok(out)
}

pub fn closed_form_residuals(entry: &CatalogEntry, grid: &[Vec<f64>]) -> Result<Vec<ResidualReport>> {
    let per = crate::grid::map_points(grid, |p| closed_form_samples(entry, p));
    let per = per.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(grid.iter().map(Vec::as_slice).zip(per.iter().map(Vec::as_slice)), false))
}

/// Grid points where `h` has full rank, so that the conormal immerses.
pub fn nondegenerate_points(entry: &CatalogEntry, grid: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for p in grid {
        if h_rank(&entry.spec, p, 1e-6)? == entry.spec.n {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Projective-flatness criterion for the connection induced by `{ν, −ν}`
/// on the nondegenerate part of the grid.
pub fn dual_flatness(entry: &CatalogEntry, grid: &[Vec<f64>]) -> Option<Result<FlatnessCheck>> {
    let dual = entry.dual.as_ref()?;
    Some(nondegenerate_points(entry, grid).and_then(|pts| projective_flat_tm_check(&InducedConnection(dual.clone()), &pts)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Flatness;

    #[test]
    fn every_entry_matches_its_closed_forms() {
        for entry in catalog_all() {
            let grid = entry.spec.domain.grid(5);
            for r in closed_form_residuals(&entry, &grid).unwrap() {
                assert!(r.pass, "{}: {} = {:e} at {:?}", entry.name, r.name, r.max_abs, r.argmax_point);
            }
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(catalog_get("torus"), Err(Error::UnknownExample(_))));
    }

    #[test]
    fn dual_connections_are_projectively_flat() {
        for name in ["centroaffine-paraboloid", "centroaffine-cubic"] {
            let entry = catalog_get(name).unwrap();
            let grid = entry.spec.domain.grid(7);
            let check = dual_flatness(&entry, &grid).unwrap().unwrap();
            assert_eq!(check.verdict, Flatness::ProjectivelyFlat, "{name}: {:?}", check.reports);
            assert!(check.reports[0].points > 0);
        }
    }
}
