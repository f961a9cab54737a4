//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#![allow(clippy::type_complexity)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;

use common::jet_fd_error;
use equiaffine::catalog::{catalog_all, catalog_get, closed_form_residuals, dual_flatness, CatalogEntry};
use equiaffine::cli::{RunReport, Verdict};
use equiaffine::divergence::{geometric_divergence, weak_contrast_samples};
use equiaffine::expr::ExprMap;
use equiaffine::grid::{map_points, Domain};
use equiaffine::immersion::{decompose, equiaffine_residual, ImmersionSpec};
use equiaffine::jets::{linear_solve, mat_vec, Jet};
use equiaffine::projective::{bianchi_samples, induced_pair, pre_geodesic_residual, projective_samples, GeodesicSettings};
use equiaffine::quasi_codazzi::{assemble_induced, quasi_codazzi_samples};
use equiaffine::report::Sample;
use equiaffine::tensor::{fundamental_samples, projective_flat_tm_check, ExprConnection, Flatness, ProjectiveChange};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const GRID: usize = 7;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Max of each named sample over the grid, with the tolerance of its first occurrence.
fn fold_samples(per_point: &[Vec<Sample>]) -> Vec<Sample> {
    let mut out: Vec<Sample> = Vec::new();
    for samples in per_point {
        for s in samples {
            match out.iter_mut().find(|o| o.name == s.name) {
                Some(o) => {
                    if s.value.is_nan() || s.value.abs() > o.value.abs() {
                        o.value = s.value.abs();
                    }
                }
                None => out.push(Sample::new(s.name.clone(), s.value.abs(), s.tolerance)),
            }
        }
    }
    out
}

fn over_grid<F>(spec: &ImmersionSpec, f: F) -> Result<Vec<Vec<Sample>>, String>
where
    F: Fn(&[f64]) -> equiaffine::error::Result<Vec<Sample>> + Sync + Send,
{
    let grid = spec.domain.grid(GRID);
    map_points(&grid, f)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("{}: {e}", spec.label))
}

fn equiaffine_entries() -> Result<Vec<CatalogEntry>, String> {
    let mut out = Vec::new();
    for e in catalog_all() {
        let grid = e.spec.domain.grid(GRID);
        let r = equiaffine_residual(&e.spec, &grid).map_err(|err| err.to_string())?;
        if r.pass {
            out.push(e);
        }
    }
    Ok(out)
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["graph-cubic", "centroaffine-paraboloid", "centroaffine-cubic", "affine-cylinder"] {
        let entry = catalog_get(name).map_err(|e| e.to_string())?;
        let grid = entry.spec.domain.grid(GRID);
        let reports = closed_form_residuals(&entry, &grid).map_err(|e| e.to_string())?;
        for q in ["expected-h", "expected-gamma", "expected-tau", "expected-nu", "expected-phi-minus", "expected-omega-plus", "expected-omega-minus"] {
            check(reports.iter().any(|r| r.name == q), || format!("{name}: no {q} comparison"))?;
        }
        for r in &reports {
            check(r.max_abs <= 1e-8, || format!("{name}/{}: {:e} at {:?}", r.name, r.max_abs, r.argmax_point))?;
            worst = worst.max(r.max_abs);
        }
    }
    Ok(format!("max closed-form deviation {worst:.2e} (tol 1e-8)"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for entry in catalog_all() {
        let per = over_grid(&entry.spec, |p| fundamental_samples(&decompose(&entry.spec, p, 1)?))?;
        for s in fold_samples(&per) {
            check(s.value < 1e-8, || format!("{}/{}: {:e}", entry.name, s.name, s.value))?;
            worst = worst.max(s.value);
        }
    }
    let entry = catalog_get("centroaffine-cubic").map_err(|e| e.to_string())?;
    let mut detected = f64::INFINITY;
    for p in entry.spec.domain.grid(GRID) {
        let mut d = decompose(&entry.spec, &p, 1).map_err(|e| e.to_string())?;
        d.h[0] = &d.h[0] + &d.h[0].constant_like(1e-3);
        let gauss = fundamental_samples(&d).map_err(|e| e.to_string())?[0].value;
        detected = detected.min(gauss);
    }
    check(detected >= 1e-4, || format!("corrupted h gives Gauss residual only {detected:e}"))?;
    Ok(format!(
        "max fundamental residual {worst:.2e} over 7 entries (tol 1e-8); corrupted h: Gauss >= {detected:.2e}"
    ))
}

fn criterion_3() -> Outcome {
    let tols = [
        ("para-hermitian", 0.0),
        ("lagrangian", 1e-10),
        ("duality", 1e-10),
        ("relative-torsion-plus", 1e-8),
        ("relative-torsion-minus", 1e-8),
        ("pullback-metric", 1e-9),
        ("cubic-nabla-h", 1e-8),
        ("cubic-symmetry", 1e-8),
    ];
    let mut worst = 0.0f64;
    let entries = equiaffine_entries()?;
    for entry in &entries {
        let per = over_grid(&entry.spec, |p| {
            let d = decompose(&entry.spec, p, 1)?;
            quasi_codazzi_samples(&assemble_induced(&d), &d)
        })?;
        let folded = fold_samples(&per);
        for (name, tol) in tols {
            let s = folded
                .iter()
                .find(|s| s.name == name)
                .ok_or_else(|| format!("missing residual {name}"))?;
            check(s.value <= tol, || format!("{}/{name}: {:e} > {tol:e}", entry.name, s.value))?;
            worst = worst.max(s.value);
        }
    }
    // relative torsion of ∇⁻ and total symmetry of C hold or fail together
    let tilted = ImmersionSpec::parse(
        "graph-cubic-tilted",
        2,
        &["x1", "x2", "(x1^3 + x2^3)/6"],
        &["0", "0", "1 + x1"],
        Domain::cube(2, -0.5, 0.5),
    )
    .map_err(|e| e.to_string())?;
    let mut joint_fail = 0;
    let mut joint_pass = 0;
    for (spec, expect_fail) in entries.iter().map(|e| (&e.spec, false)).chain([(&tilted, true)]) {
        for p in spec.domain.grid(GRID) {
            let d = decompose(spec, &p, 1).map_err(|e| e.to_string())?;
            let s = quasi_codazzi_samples(&assemble_induced(&d), &d).map_err(|e| e.to_string())?;
            let get = |n: &str| s.iter().find(|x| x.name == n).unwrap().pass();
            let (rt, sym) = (get("relative-torsion-minus"), get("cubic-symmetry"));
            check(rt == sym, || format!("{}: split verdict at {p:?}", spec.label))?;
            if expect_fail && !rt {
                joint_fail += 1;
            } else if !expect_fail && rt {
                joint_pass += 1;
            }
        }
    }
    check(joint_fail > 0, || "non-equiaffine variant never fails".into())?;
    Ok(format!(
        "{} equiaffine entries, max axiom residual {worst:.2e}; joint verdicts: {joint_pass} pass, {joint_fail} fail (tilted)",
        entries.len()
    ))
}

fn criterion_4() -> Outcome {
    let entries = equiaffine_entries()?;
    let mut worst = 0.0f64;
    let mut agreements = 0usize;
    for entry in &entries {
        let per = over_grid(&entry.spec, |p| {
            let (d, b) = induced_pair(&entry.spec, p, 1)?;
            projective_samples(&d, &b)
        })?;
        for s in fold_samples(&per) {
            if s.name.starts_with("condition-") {
                check(s.value < 1e-7, || format!("{}/{}: {:e}", entry.name, s.name, s.value))?;
                worst = worst.max(s.value);
            } else {
                check(s.pass(), || format!("{}/{}: {:e} > {:e}", entry.name, s.name, s.value, s.tolerance))?;
                if s.name.starts_with("agreement-") {
                    agreements += 1;
                }
            }
        }
    }
    check(agreements == 3 * entries.len(), || format!("only {agreements} joint verdicts"))?;
    Ok(format!(
        "{} equiaffine entries, max condition residual {worst:.2e} (tol 1e-7); {agreements} cross-equivalence verdicts agree",
        entries.len()
    ))
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["centroaffine-paraboloid", "centroaffine-cubic"] {
        let entry = catalog_get(name).map_err(|e| e.to_string())?;
        let grid = entry.spec.domain.grid(GRID);
        let c = dual_flatness(&entry, &grid)
            .ok_or_else(|| format!("{name}: no dual connection"))?
            .map_err(|e| e.to_string())?;
        check(c.verdict == Flatness::ProjectivelyFlat, || format!("{name}: {:?}", c.verdict))?;
        let branch = c
            .reports
            .iter()
            .find(|r| r.name == "grad-ricci-symmetry")
            .ok_or_else(|| format!("{name}: no grad-Ricci branch"))?;
        check(branch.points > 0 && branch.max_abs < 1e-7, || format!("{name}: {branch:?}"))?;
        worst = worst.max(c.reports.iter().map(|r| r.max_abs).fold(0.0, f64::max));
    }
    let bent = ExprConnection::flat_with(2, 0, 1, 1, "0.5*x1^2").map_err(|e| e.to_string())?;
    let c = projective_flat_tm_check(&bent, &Domain::cube(2, -1.0, 1.0).grid(GRID)).map_err(|e| e.to_string())?;
    let neg = c.reports.iter().map(|r| r.max_abs).fold(0.0, f64::max);
    check(c.verdict == Flatness::NotProjectivelyFlat && neg >= 1e-2, || {
        format!("perturbation: {:?} with {neg:e}", c.verdict)
    })?;
    Ok(format!("dual connections flat to {worst:.2e} (tol 1e-7); perturbed connection residual {neg:.2e}"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let flat = ExprConnection::flat(2);
    let changed = ProjectiveChange {
        base: ExprConnection::flat(2),
        rho: ExprMap::parse(2, &["1", "0"]).map_err(|e| e.to_string())?,
    };
    let bent = ExprConnection::flat_with(2, 0, 1, 1, "0.5").map_err(|e| e.to_string())?;
    let settings = GeodesicSettings::default();
    let (mut pos, mut neg) = (0.0f64, f64::INFINITY);
    for _ in 0..10 {
        let c0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let speed: f64 = rng.gen_range(0.5..2.0);
        let v0 = [speed * th.cos(), speed * th.sin()];
        let r = pre_geodesic_residual(&flat, &changed, &c0, &v0, &settings).map_err(|e| e.to_string())?;
        pos = pos.max(r.max_abs);
        let r = pre_geodesic_residual(&flat, &bent, &c0, &v0, &settings).map_err(|e| e.to_string())?;
        neg = neg.min(r.max_abs);
    }
    check(pos < 1e-6, || format!("projective change defect {pos:e}"))?;
    check(neg >= 1e-2, || format!("perturbation defect only {neg:e}"))?;
    Ok(format!("10 geodesics: projective change defect {pos:.2e} (tol 1e-6), perturbation defect >= {neg:.2e}"))
}

fn criterion_7() -> Outcome {
    let entry = catalog_get("graph-cubic-3d").map_err(|e| e.to_string())?;
    let per = over_grid(&entry.spec, |p| {
        let (d, b) = induced_pair(&entry.spec, p, 2)?;
        bianchi_samples(&d, &b)
    })?;
    let rank3 = per
        .iter()
        .filter(|s| s.iter().any(|x| x.name == "bianchi-implied-exterior"))
        .count();
    check(rank3 > 0, || "no rank-3 point with condition 1 passing".into())?;
    let folded = fold_samples(&per);
    let get = |n: &str| folded.iter().find(|s| s.name == n).map(|s| s.value).unwrap();
    let (b, e) = (get("bianchi"), get("bianchi-implied-exterior"));
    check(b < 1e-7, || format!("Bianchi residual {b:e}"))?;
    check(e < 1e-9, || format!("exterior condition {e:e}"))?;
    Ok(format!("Bianchi {b:.2e} (tol 1e-7); exterior condition {e:.2e} at {rank3} rank-3 points (tol 1e-9)"))
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for entry in catalog_all() {
        let per = over_grid(&entry.spec, |p| weak_contrast_samples(&entry.spec, p))?;
        let folded = fold_samples(&per);
        check(folded.len() == 5, || format!("{}: {} residuals", entry.name, folded.len()))?;
        for s in folded {
            check(s.value < 1e-7, || format!("{}/{}: {:e}", entry.name, s.name, s.value))?;
            worst = worst.max(s.value);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut breg = 0.0f64;
    let graphs: [(&str, fn(&[f64]) -> f64, fn(&[f64]) -> Vec<f64>); 3] = [
        ("graph-quadratic", |x| x.iter().map(|v| v * v).sum::<f64>() / 2.0, |x| x.to_vec()),
        ("graph-cubic", |x| x.iter().map(|v| v.powi(3)).sum::<f64>() / 6.0, |x| x.iter().map(|v| v * v / 2.0).collect()),
        ("graph-cubic-3d", |x| x.iter().map(|v| v.powi(3)).sum::<f64>() / 6.0, |x| x.iter().map(|v| v * v / 2.0).collect()),
    ];
    for (name, phi, grad) in graphs {
        let spec = catalog_get(name).map_err(|e| e.to_string())?.spec;
        for _ in 0..100 {
            let p: Vec<f64> = (0..spec.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q: Vec<f64> = (0..spec.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = grad(&q);
            let oracle = phi(&p) - phi(&q) - (0..spec.n).map(|i| g[i] * (p[i] - q[i])).sum::<f64>();
            let v = geometric_divergence(&spec, &p, &q).map_err(|e| e.to_string())?;
            breg = breg.max((v - oracle).abs());
        }
    }
    check(breg < 1e-10, || format!("Bregman mismatch {breg:e}"))?;
    Ok(format!("weak-contrast residual {worst:.2e} on 7 entries (tol 1e-7); Bregman mismatch {breg:.2e} (tol 1e-10)"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let atoms: [(&str, fn(&str) -> String); 8] = [
        ("add", |a| format!("{a} + x2*x3")),
        ("mul", |a| format!("{a} * (1 + x2)")),
        ("div", |a| format!("1/(3 + {a})")),
        ("pow", |a| format!("(2 + {a})^3 * (2 + {a})^-2")),
        ("sin", |a| format!("sin({a})")),
        ("cos", |a| format!("cos({a})")),
        ("exp", |a| format!("exp({a})")),
        ("sqrt", |a| format!("sqrt(2 + {a})")),
    ];
    for (atom, wrap) in atoms {
        for _ in 0..5 {
            let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let inner = format!("{:.4}*x1 + {:.4}*x2*x3 + {:.4}*x3^2", c[0], c[1], c[2]);
            let src = wrap(&inner);
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let err = jet_fd_error(&src, &x, 4, 1e-5);
            check(err < 1e-5, || format!("{atom}: {src} at {x:?}: {err:e}"))?;
            worst = worst.max(err);
        }
    }
    let mut back = 0.0f64;
    for trial in 0..20 {
        let n = 2 + trial % 4;
        let jet = |rng: &mut ChaCha8Rng, diag: f64| {
            let len = Jet::zero(3, 3).unwrap().coeffs().len();
            let mut c: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            c[0] += diag;
            Jet::from_coeffs(3, 3, c).unwrap()
        };
        let a: Vec<Vec<Jet>> = (0..n)
            .map(|r| (0..n).map(|c| jet(&mut rng, if r == c { 2.0 * n as f64 } else { 0.0 })).collect())
            .collect();
        let b: Vec<Jet> = (0..n).map(|_| jet(&mut rng, 0.0)).collect();
        let x = linear_solve(&a, &b).map_err(|e| e.to_string())?;
        let ax = mat_vec(&a, &x);
        back = back.max(ax.iter().zip(&b).map(|(u, v)| (u - v).max_abs()).fold(0.0, f64::max));
    }
    check(back < 1e-10, || format!("back-substitution residual {back:e}"))?;
    Ok(format!("8 atoms x 5 expressions, worst FD mismatch {worst:.2e} (tol 1e-5); solve residual {back:.2e} (tol 1e-10)"))
}

fn cli(args: &[&str]) -> Result<(Option<i32>, String), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_equiaffine"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((o.status.code(), String::from_utf8_lossy(&o.stdout).into_owned()))
}

fn criterion_10() -> Outcome {
    for name in equiaffine::catalog::NAMES {
        let (code, out) = cli(&["--example", name])?;
        check(code == Some(0), || format!("{name}: exit {code:?}\n{out}"))?;
    }
    let dir = std::env::temp_dir();
    let tilted = dir.join(format!("equiaffine-acceptance-{}-tilted.json", std::process::id()));
    std::fs::write(
        &tilted,
        r#"{"n": 2, "f": ["x1", "x2", "(x1^3 + x2^3)/6"], "xi": ["0", "0", "1 + x1"], "domain": [[-1, 1], [-1, 1]]}"#,
    )
    .map_err(|e| e.to_string())?;
    let (code, out) = cli(&["--config", tilted.to_str().unwrap(), "--suite", "quasi-codazzi"])?;
    let _ = std::fs::remove_file(&tilted);
    check(code == Some(1) && out.contains("equiaffine-gate"), || format!("tilted: exit {code:?}\n{out}"))?;
    let (code, _) = cli(&["--example", "no-such-example"])?;
    check(code == Some(2), || format!("unknown example: exit {code:?}"))?;
    let (code, json) = cli(&["--example", "graph-cubic", "--json"])?;
    check(code == Some(0), || format!("json run: exit {code:?}"))?;
    let report = RunReport::from_json(&json).map_err(|e| e.to_string())?;
    check(report.verdict == Verdict::Pass, || "json verdict".into())?;
    let again = RunReport::from_json(&report.to_json()).map_err(|e| e.to_string())?;
    check(again == report && report.to_json() == json.trim_end(), || "report JSON does not round-trip".into())?;
    Ok("7 catalog entries exit 0; gate failure exits 1; unknown example exits 2; JSON round-trips".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form reproduction", criterion_1),
        ("fundamental equations", criterion_2),
        ("quasi-Codazzi axioms", criterion_3),
        ("projective flatness certificate", criterion_4),
        ("classical flatness criterion", criterion_5),
        ("pre-geodesic invariance", criterion_6),
        ("rank-3 Bianchi implication", criterion_7),
        ("geometric divergence", criterion_8),
        ("jet engine", criterion_9),
        ("command line", criterion_10),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {title}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {title}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
