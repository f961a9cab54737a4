mod common;

use common::{central, central2};
use equiaffine::catalog::{catalog_all, catalog_get};
use equiaffine::divergence::{diagonal_hessian_defects, divergence_jet, geometric_divergence, weak_contrast_samples};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `φ(p) − φ(q) − ∇φ(q)·(p − q)` with the potential and gradient written out.
fn bregman(phi: impl Fn(&[f64]) -> f64, grad: impl Fn(&[f64]) -> Vec<f64>, p: &[f64], q: &[f64]) -> f64 {
    let g = grad(q);
    phi(p) - phi(q) - g.iter().zip(p.iter().zip(q)).map(|(g, (a, b))| g * (a - b)).sum::<f64>()
}

#[test]
fn graph_divergence_is_bregman() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cubic = catalog_get("graph-cubic").unwrap();
    let quad = catalog_get("graph-quadratic").unwrap();
    let cubic3 = catalog_get("graph-cubic-3d").unwrap();
    for _ in 0..100 {
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.99..0.99)).collect();
        let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.99..0.99)).collect();
        let b = bregman(|x| (x[0].powi(3) + x[1].powi(3)) / 6.0, |x| vec![x[0] * x[0] / 2.0, x[1] * x[1] / 2.0], &p[..2], &q[..2]);
        assert!((geometric_divergence(&cubic.spec, &p[..2], &q[..2]).unwrap() - b).abs() < 1e-10);
        let b = bregman(|x| (x[0] * x[0] + x[1] * x[1]) / 2.0, |x| vec![x[0], x[1]], &p[..2], &q[..2]);
        assert!((geometric_divergence(&quad.spec, &p[..2], &q[..2]).unwrap() - b).abs() < 1e-10);
        let b = bregman(
            |x| x.iter().map(|v| v.powi(3)).sum::<f64>() / 6.0,
            |x| x.iter().map(|v| v * v / 2.0).collect(),
            &p,
            &q,
        );
        assert!((geometric_divergence(&cubic3.spec, &p, &q).unwrap() - b).abs() < 1e-10);
    }
}

#[test]
fn divergence_is_not_symmetric() {
    let c = catalog_get("graph-cubic").unwrap();
    let a = geometric_divergence(&c.spec, &[0.5, -0.2], &[-0.3, 0.4]).unwrap();
    let b = geometric_divergence(&c.spec, &[-0.3, 0.4], &[0.5, -0.2]).unwrap();
    assert!((a - b).abs() > 1e-3);
}

#[test]
fn low_order_coefficients_match_finite_differences() {
    // 2n-variable function (p, q) ↦ ρ^G(p, q) differenced at (r, r)
    for entry in catalog_all() {
        let spec = &entry.spec;
        let n = spec.n;
        let rho = |z: &[f64]| geometric_divergence(spec, &z[..n], &z[n..]).unwrap();
        for r in spec.domain.grid(3) {
            let dj = divergence_jet(spec, &r, 3).unwrap();
            let z: Vec<f64> = r.iter().chain(&r).copied().collect();
            for a in 0..2 * n {
                let fd = central(rho, &z, a, 1e-3);
                let (pi, qi): (Vec<usize>, Vec<usize>) = if a < n { (vec![a], vec![]) } else { (vec![], vec![a - n]) };
                let jv = dj.bracket(&pi, &qi);
                assert!((jv - fd).abs() <= 1e-4 * 1f64.max(jv.abs()), "{} d{a}: {jv} vs {fd}", entry.name);
                for b in 0..2 * n {
                    let fd2 = central2(rho, &z, a, b, 1e-3);
                    let mut pi = vec![];
                    let mut qi = vec![];
                    for c in [a, b] {
                        if c < n {
                            pi.push(c)
                        } else {
                            qi.push(c - n)
                        }
                    }
                    let jv = dj.bracket(&pi, &qi);
                    assert!((jv - fd2).abs() <= 1e-4 * 1f64.max(jv.abs()), "{} d{a}d{b}: {jv} vs {fd2}", entry.name);
                }
            }
        }
    }
}

#[test]
fn weak_contrast_on_catalog() {
    for entry in catalog_all() {
        for r in entry.spec.domain.grid(5) {
            for s in weak_contrast_samples(&entry.spec, &r).unwrap() {
                assert!(s.pass(), "{}: {:?} at {r:?}", entry.name, s);
            }
            let (a, b) = diagonal_hessian_defects(&entry.spec, &r).unwrap();
            assert!(a < 1e-8 && b < 1e-8, "{}: {a:e} {b:e}", entry.name);
        }
    }
}
