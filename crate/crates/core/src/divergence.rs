//! Geometric divergence `ρ^G(p, q) = ⟨ν(q), f(p) − f(q)⟩` and its diagonal jets.
//!
//! The jet lives in `2n` variables: `0..n` for the `p` slot, `n..2n` for the
//! `q` slot. A bracket `ρ[X₁…X_k | Y₁…Y_l]` with coordinate fields is the
//! mixed partial `∂_{p,X₁}…∂_{q,Y_l} ρ` at `(r, r)`.

use crate::error::{Error, Result};
use crate::immersion::{conormal, conormal_from_frame, decompose, ImmersionSpec};
use crate::jets::{Jet, JetError, MAX_ORDER};
use crate::quasi_codazzi::{assemble_induced, cubic_tensor};
use crate::report::Sample;
use crate::tolerances;

/// Highest divergence jet order.
pub const MAX_DIVERGENCE_ORDER: usize = 3;

pub fn geometric_divergence(spec: &ImmersionSpec, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != spec.n {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, expected {}",
            p.len(),
            spec.n
        )));
    }
    let nu = conormal(spec, q, 0)?;
    let fp = spec.f.eval(p).map_err(|e| Error::from(e).at(p))?;
    let fq = spec.f.eval(q).map_err(|e| Error::from(e).at(q))?;
    Ok(nu
        .iter()
        .zip(fp.iter().zip(&fq))
        .map(|(v, (a, b))| v.value() * (a - b))
        .sum())
}

#[derive(Debug, Clone)]
pub struct DivergenceJet {
    pub n: usize,
    pub point: Vec<f64>,
    pub jet: Jet,
}

impl DivergenceJet {
    /// `ρ[∂_{p_idx…} | ∂_{q_idx…}]` at the base point.
    pub fn bracket(&self, p_idx: &[usize], q_idx: &[usize]) -> f64 {
        let mut alpha = vec![0u8; 2 * self.n];
        for &i in p_idx {
            alpha[i] += 1;
        }
        for &i in q_idx {
            alpha[self.n + i] += 1;
        }
        self.jet.partial(&alpha)
    }

    pub fn order(&self) -> usize {
        self.jet.order()
    }
}

/// Jet of `ρ^G` at `(r, r)` of order `k ≤ 3`.
pub fn divergence_jet(spec: &ImmersionSpec, r: &[f64], k: usize) -> Result<DivergenceJet> {
    let n = spec.n;
    if r.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, expected {n}",
            r.len()
        )));
    }
    if k > MAX_DIVERGENCE_ORDER || k + 1 > MAX_ORDER {
        return Err(JetError::OrderOutOfRange(k).into());
    }
    let d = 2 * n;
    let at = |e: JetError| Error::from(e).at(r);
    let vars = |offset: usize, order: usize| -> Result<Vec<Jet>> {
        (0..n)
            .map(|i| Jet::variable(offset + i, r[i], d, order).map_err(at))
            .collect()
    };
    let fp = spec.f.eval_jets(&vars(0, k)?).map_err(at)?;
    let fq_hi = spec.f.eval_jets(&vars(n, k + 1)?).map_err(at)?;
    let xi_q = spec.xi.eval_jets(&vars(n, k)?).map_err(at)?;
    let df_q = (0..n)
        .map(|i| fq_hi.iter().map(|c| c.derivative(n + i)).collect())
        .collect::<std::result::Result<Vec<Vec<Jet>>, _>>()?;
    let nu = conormal_from_frame(&df_q, &xi_q, r)?;
    let mut rho = fp[0].zero_like();
    for a in 0..=n {
        let diff = &fp[a] - &fq_hi[a].truncate(k)?;
        rho = rho + &nu[a] * diff;
    }
    Ok(DivergenceJet {
        n,
        point: r.to_vec(),
        jet: rho,
    })
}

/// The five weak-contrast residuals at `r`:
/// `ρ[−|−]`, `ρ[X|−]`, `ρ[−|X]`, `ρ[X|Y] + h`, `ρ[XY|Z] − ρ[Z|XY] − C`.
pub fn weak_contrast_samples(spec: &ImmersionSpec, r: &[f64]) -> Result<Vec<Sample>> {
    let n = spec.n;
    let dj = divergence_jet(spec, r, 3)?;
    let d = decompose(spec, r, 1)?;
    let c = cubic_tensor(&assemble_induced(&d))?;
    let mut first_p = 0.0f64;
    let mut first_q = 0.0f64;
    let mut mixed = 0.0f64;
    let mut cubic = 0.0f64;
    for i in 0..n {
        first_p = first_p.max(dj.bracket(&[i], &[]).abs());
        first_q = first_q.max(dj.bracket(&[], &[i]).abs());
        for j in 0..n {
            mixed = mixed.max((dj.bracket(&[i], &[j]) + d.h(i, j).value()).abs());
            for kk in 0..n {
                let v = dj.bracket(&[i, j], &[kk]) - dj.bracket(&[kk], &[i, j]) - c[(i * n + j) * n + kk].value();
                cubic = cubic.max(v.abs());
            }
        }
    }
    let tol = tolerances::DIVERGENCE;
    Ok(vec![
        Sample::new("diagonal", dj.bracket(&[], &[]).abs(), tol),
        Sample::new("first-p", first_p, tol),
        Sample::new("first-q", first_q, tol),
        Sample::new("mixed-h", mixed, tol),
        Sample::new("cubic", cubic, tol),
    ])
}

/// `max |ρ[XY|−] − h|` and `max |ρ[−|XY] − h|`.
pub fn diagonal_hessian_defects(spec: &ImmersionSpec, r: &[f64]) -> Result<(f64, f64)> {
    let n = spec.n;
    let dj = divergence_jet(spec, r, 2)?;
    let d = decompose(spec, r, 0)?;
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            let h = d.h(i, j).value();
            a = a.max((dj.bracket(&[i, j], &[]) - h).abs());
            b = b.max((dj.bracket(&[], &[i, j]) - h).abs());
        }
    }
    Ok((a, b))
}
