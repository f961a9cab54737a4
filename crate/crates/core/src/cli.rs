//! Command-line runner: load an immersion, run suites over a grid, report.
//!
//! Exit codes: 0 all residuals pass, 1 some residual fails, 2 usage or
//! configuration error, 3 evaluation error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::catalog::{self, CatalogEntry};
use crate::divergence::weak_contrast_samples;
use crate::error::{Error, Result};
use crate::expr::ExprMap;
use crate::grid::{map_points, Domain};
use crate::immersion::{conormal_identity_samples, decompose, equiaffine_residual, ImmersionSpec};
use crate::jets::MAX_ORDER;
use crate::projective::{
    bianchi_samples, curve_bundle_defects, curve_defects, induced_pair, integrate_geodesic, projective_samples,
    GeodesicSettings, InducedSide, ProjectiveChangeSide,
};
use crate::quasi_codazzi::{quasi_codazzi_samples, Side};
use crate::report::{aggregate, ResidualReport, Sample};
use crate::tensor::{flatness_order, fundamental_samples, InducedConnection, ProjectiveChange};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EVAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Fundamental,
    Equiaffine,
    QuasiCodazzi,
    Projective,
    Divergence,
    PreGeodesic,
    Bianchi,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Fundamental,
        Suite::Equiaffine,
        Suite::QuasiCodazzi,
        Suite::Projective,
        Suite::Divergence,
        Suite::PreGeodesic,
        Suite::Bianchi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fundamental => "fundamental",
            Suite::Equiaffine => "equiaffine",
            Suite::QuasiCodazzi => "quasi-codazzi",
            Suite::Projective => "projective",
            Suite::Divergence => "divergence",
            Suite::PreGeodesic => "pre-geodesic",
            Suite::Bianchi => "bianchi",
        }
    }

    /// Order of the `f` jets the suite consumes by default.
    pub fn auto_order(self, n: usize) -> usize {
        match self {
            Suite::Equiaffine => 2,
            Suite::Projective if n == 2 => 4,
            Suite::Bianchi => 4,
            _ => 3,
        }
    }

    fn min_order(self) -> usize {
        match self {
            Suite::Equiaffine => 2,
            Suite::Bianchi => 4,
            _ => 3,
        }
    }

    fn max_order(self) -> usize {
        match self {
            Suite::Divergence => 3,
            _ => MAX_ORDER,
        }
    }

    /// Suites that build the induced bundle structure and need `τ = 0`.
    pub fn gated(self) -> bool {
        matches!(self, Suite::QuasiCodazzi | Suite::Projective | Suite::PreGeodesic | Suite::Bianchi)
    }
}

#[derive(Debug, Parser)]
#[command(name = "equiaffine", version, about = "Residual certificates for affine immersions")]
pub struct Cli {
    /// Built-in example name.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub example: Option<String>,
    /// JSON immersion config with keys n, f, xi, domain, label.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Suite to run (repeatable); all suites when omitted.
    #[arg(long = "suite", value_enum)]
    pub suites: Vec<Suite>,
    /// Points per axis.
    #[arg(long, default_value_t = 7)]
    pub grid: usize,
    /// Jet order of f for every suite, instead of the per-suite default.
    #[arg(long)]
    pub order: Option<usize>,
    /// Tolerance override NAME=VALUE (repeatable).
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    /// Emit JSON instead of a text table.
    #[arg(long)]
    pub json: bool,
    /// Write the report to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, val) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = val.trim().parse().map_err(|_| format!("invalid tolerance `{val}`"))?;
    if !(v >= 0.0) {
        return Err(format!("tolerance must be nonnegative, got {v}"));
    }
    Ok((name.trim().to_string(), v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: usize,
    pub f: Vec<String>,
    pub xi: Vec<String>,
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub label: Option<String>,
}

impl ConfigFile {
    pub fn to_spec(&self, fallback_label: &str) -> Result<ImmersionSpec> {
        let n = self.n;
        if n == 0 || n > crate::expr::MAX_DIM {
            return Err(Error::Config(format!("n = {n} outside 1..={}", crate::expr::MAX_DIM)));
        }
        for (what, list) in [("f", &self.f), ("xi", &self.xi)] {
            if list.len() != n + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "{what} has {} components, expected n + 1 = {}",
                    list.len(),
                    n + 1
                )));
            }
        }
        if self.domain.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "domain has {} intervals, expected {n}",
                self.domain.len()
            )));
        }
        if let Some(bad) = self.domain.iter().find(|iv| !(iv[0] < iv[1])) {
            return Err(Error::Config(format!("empty interval [{}, {}]", bad[0], bad[1])));
        }
        let bounds: Vec<(f64, f64)> = self.domain.iter().map(|iv| (iv[0], iv[1])).collect();
        let label = self.label.clone().unwrap_or_else(|| fallback_label.to_string());
        ImmersionSpec::new(
            label,
            ExprMap::parse(n, &self.f)?,
            ExprMap::parse(n, &self.xi)?,
            Domain::boxed(&bounds),
        )
    }
}

pub fn load_config(path: &Path) -> Result<ImmersionSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg: ConfigFile =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.to_spec(&path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub residuals: Vec<ResidualReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub source: String,
    pub grid: usize,
    pub suites: Vec<SuiteReport>,
    pub verdict: Verdict,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<RunReport> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "source: {}   grid: {}", self.source, self.grid);
        let _ = writeln!(
            s,
            "{:<14} {:<32} {:>6} {:>12} {:>10} {:<5} argmax",
            "suite", "residual", "points", "max_abs", "tol", "pass"
        );
        for suite in &self.suites {
            for r in &suite.residuals {
                let pt: Vec<String> = r.argmax_point.iter().map(|v| format!("{v:.4}")).collect();
                let _ = writeln!(
                    s,
                    "{:<14} {:<32} {:>6} {:>12.3e} {:>10.1e} {:<5} ({})",
                    suite.name,
                    r.name,
                    r.points,
                    r.max_abs,
                    r.tolerance,
                    if r.pass { "ok" } else { "FAIL" },
                    pt.join(", ")
                );
            }
        }
        let _ = writeln!(
            s,
            "verdict: {}",
            match self.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
            }
        );
        s
    }
}

/// Resolved run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: String,
    pub spec: ImmersionSpec,
    pub entry: Option<CatalogEntry>,
    pub grid: usize,
    pub order: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub suites: Vec<Suite>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<RunConfig> {
        let (source, spec, entry) = match (&cli.example, &cli.config) {
            (Some(name), None) => {
                let e = catalog::catalog_get(name)?;
                (name.clone(), e.spec.clone(), Some(e))
            }
            (None, Some(path)) => {
                let spec = load_config(path)?;
                (spec.label.clone(), spec, None)
            }
            _ => return Err(Error::Config("exactly one of --example and --config is required".into())),
        };
        if cli.grid < 2 {
            return Err(Error::Config(format!("--grid must be at least 2, got {}", cli.grid)));
        }
        let mut suites = if cli.suites.is_empty() {
            Suite::ALL.to_vec()
        } else {
            cli.suites.clone()
        };
        suites.sort();
        suites.dedup();
        if let Some(k) = cli.order {
            for s in &suites {
                if k < s.min_order() {
                    return Err(Error::InsufficientOrder {
                        needed: s.min_order(),
                        got: k,
                    });
                }
                if k > s.max_order() {
                    return Err(Error::Config(format!(
                        "order {k} above the maximum {} for suite {}",
                        s.max_order(),
                        s.name()
                    )));
                }
            }
        }
        Ok(RunConfig {
            source,
            spec,
            entry,
            grid: cli.grid,
            order: cli.order,
            tolerances: cli.tol.iter().cloned().collect(),
            suites,
        })
    }

    fn order(&self, suite: Suite) -> usize {
        self.order.unwrap_or_else(|| suite.auto_order(self.spec.n))
    }
}

fn per_point<F>(grid: &[Vec<f64>], f: F) -> Result<Vec<ResidualReport>>
where
    F: Fn(&[f64]) -> Result<Vec<Sample>> + Sync + Send,
{
    let samples = map_points(grid, f).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(grid.iter().map(Vec::as_slice).zip(samples.iter().map(Vec::as_slice)), false))
}

fn prefixed(prefix: &str, reports: Vec<ResidualReport>) -> Vec<ResidualReport> {
    reports
        .into_iter()
        .map(|mut r| {
            r.name = format!("{prefix}{}", r.name);
            r
        })
        .collect()
}

/// Start points whose axis neighbours at distance `r` stay in the domain.
fn interior_points(domain: &Domain, grid: &[Vec<f64>], r: f64) -> Vec<Vec<f64>> {
    grid.iter()
        .filter(|p| {
            (0..p.len()).all(|i| {
                [-r, r].iter().all(|s| {
                    let mut q = (*p).clone();
                    q[i] += s;
                    domain.contains(&q)
                })
            })
        })
        .cloned()
        .collect()
}

const GEODESIC_COUNT: usize = 10;
const GEODESIC_SPEED: f64 = 0.1;

fn geodesic_starts(cfg: &RunConfig, grid: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = cfg.spec.n;
    let pts = interior_points(&cfg.spec.domain, grid, 2.0 * GEODESIC_SPEED);
    let stride = (pts.len() / GEODESIC_COUNT).max(1);
    pts.into_iter()
        .step_by(stride)
        .take(GEODESIC_COUNT)
        .enumerate()
        .map(|(k, p)| {
            let u: Vec<f64> = (0..n).map(|i| (1.3 * k as f64 + 0.7 * i as f64 + 0.4).cos()).collect();
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            (p, u.iter().map(|x| GEODESIC_SPEED * x / norm).collect())
        })
        .collect()
}

fn run_suite(cfg: &RunConfig, suite: Suite, grid: &[Vec<f64>]) -> Result<Vec<ResidualReport>> {
    let spec = &cfg.spec;
    let n = spec.n;
    let k = cfg.order(suite) - 2;
    if suite.gated() {
        let gate = equiaffine_residual(spec, grid)?;
        if !gate.pass {
            let mut gate = gate;
            gate.name = "equiaffine-gate".into();
            return Ok(vec![gate]);
        }
    }
    match suite {
        Suite::Fundamental => {
            let mut out = per_point(grid, |p| {
                let mut s = fundamental_samples(&decompose(spec, p, k)?)?;
                s.extend(conormal_identity_samples(spec, p)?);
                Ok(s)
            })?;
            if let Some(entry) = &cfg.entry {
                out.extend(catalog::closed_form_residuals(entry, grid)?);
            }
            Ok(out)
        }
        Suite::Equiaffine => Ok(vec![equiaffine_residual(spec, grid)?]),
        Suite::QuasiCodazzi => per_point(grid, |p| {
            let (d, b) = induced_pair(spec, p, k)?;
            quasi_codazzi_samples(&b, &d)
        }),
        Suite::Projective => {
            if n < 2 {
                return Err(Error::DimensionMismatch("projective suite needs n ≥ 2".into()));
            }
            let mut out = per_point(grid, |p| {
                let (d, b) = induced_pair(spec, p, k)?;
                projective_samples(&d, &b)
            })?;
            if let Some(entry) = &cfg.entry {
                if entry.dual.is_some() && k >= flatness_order(n) {
                    let check = catalog::dual_flatness(entry, grid).expect("dual present")?;
                    if check.reports.first().is_some_and(|r| r.points > 0) {
                        out.extend(prefixed("dual-", check.reports));
                    }
                }
            }
            Ok(out)
        }
        Suite::Divergence => per_point(grid, |p| weak_contrast_samples(spec, p)),
        Suite::PreGeodesic => {
            let settings = GeodesicSettings {
                domain: Some(spec.domain.clone()),
                ..GeodesicSettings::default()
            };
            let mut rho = vec!["0"; n];
            rho[0] = "1";
            let rho = ExprMap::parse(n, &rho)?;
            let base = InducedConnection(spec.clone());
            let changed = ProjectiveChange {
                base: base.clone(),
                rho: rho.clone(),
            };
            let bundle = ProjectiveChangeSide {
                base: InducedSide {
                    spec: spec.clone(),
                    side: Side::Plus,
                },
                rho,
            };
            let starts = geodesic_starts(cfg, grid);
            if starts.is_empty() {
                return Err(Error::Config("no grid point leaves room for a geodesic".into()));
            }
            let runs = map_points(&(0..starts.len()).map(|i| vec![i as f64]).collect::<Vec<_>>(), |i| {
                let (c0, v0) = &starts[i[0] as usize];
                let curve = integrate_geodesic(&base, c0, v0, &settings)?;
                Ok::<_, Error>((curve_defects(&curve, &changed)?, curve_bundle_defects(&curve, &bundle)?))
            });
            let mut tm = ResidualReport::empty("pre-geodesic", crate::tolerances::PRE_GEODESIC);
            let mut bd = ResidualReport::empty("pre-geodesic-bundle", crate::tolerances::PRE_GEODESIC);
            for r in runs {
                let (a, b) = r?;
                merge(&mut tm, &a);
                merge(&mut bd, &b);
            }
            Ok(vec![tm, bd])
        }
        Suite::Bianchi => per_point(grid, |p| {
            let (d, b) = induced_pair(spec, p, k)?;
            bianchi_samples(&d, &b)
        }),
    }
}

fn merge(into: &mut ResidualReport, other: &ResidualReport) {
    let points = into.points + other.points;
    if other.points > 0 {
        into.push(&other.argmax_point, other.max_abs);
    }
    into.points = points;
}

/// Runs every configured suite. Tolerance overrides apply by residual name.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let grid = cfg.spec.domain.grid(cfg.grid);
    let mut suites = Vec::with_capacity(cfg.suites.len());
    let mut used = std::collections::BTreeSet::new();
    for &suite in &cfg.suites {
        let residuals = run_suite(cfg, suite, &grid)?
            .into_iter()
            .map(|r| match cfg.tolerances.get(&r.name) {
                Some(&t) => {
                    used.insert(r.name.clone());
                    r.with_tolerance(t)
                }
                None => r,
            })
            .collect();
        suites.push(SuiteReport {
            name: suite.name().to_string(),
            residuals,
        });
    }
    if let Some(unused) = cfg.tolerances.keys().find(|k| !used.contains(*k)) {
        return Err(Error::Config(format!("--tol names no residual of this run: `{unused}`")));
    }
    let pass = suites.iter().all(|s| s.residuals.iter().all(|r| r.pass));
    Ok(RunReport {
        source: cfg.source.clone(),
        grid: cfg.grid,
        suites,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_evaluation() {
        EXIT_EVAL
    } else if matches!(e, Error::NotEquiaffine { .. }) {
        EXIT_FAIL
    } else {
        EXIT_USAGE
    }
}

/// Parses arguments, runs, writes the report, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::from_cli(&cli).and_then(|cfg| run(&cfg));
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let text = if cli.json { report.to_json() } else { report.to_text() };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => print!("{text}"),
    }
    match report.verdict {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
    }
}
