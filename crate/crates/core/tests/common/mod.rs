#![allow(dead_code, clippy::needless_range_loop)]

use proptest::prelude::*;

/// `|a − b| ≤ rel · max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * 1f64.max(a.abs()).max(b.abs())
}

/// Central difference of `g` along axis `i`.
pub fn central<F: Fn(&[f64]) -> f64>(g: F, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    let mut m = x.to_vec();
    p[i] += h;
    m[i] -= h;
    (g(&p) - g(&m)) / (2.0 * h)
}

/// Mixed second central difference `∂_i∂_j g`.
pub fn central2<F: Fn(&[f64]) -> f64>(g: F, x: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let at = |si: f64, sj: f64| {
        let mut p = x.to_vec();
        p[i] += si * h;
        p[j] += sj * h;
        g(&p)
    };
    (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Random smooth expressions in `x1..x3`, well defined on `[−1, 1]³`.
pub fn smooth_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (1usize..=3).prop_map(|i| format!("x{i}")),
        (-2.0f64..2.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(0.3*sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(2 + sin({a}))")),
            inner.clone().prop_map(|a| format!("1/(2 + cos({a}))")),
            (inner.clone(), 0i32..4).prop_map(|(a, k)| format!("sin({a})^{k}")),
            inner.prop_map(|a| format!("(2 + sin({a}))^-2")),
        ]
    })
}

pub fn point3() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-0.9f64..0.9, 3)
}

use equiaffine::expr::parse_expr_in;
use equiaffine::jets::Jet;

fn expr_jet(e: &equiaffine::expr::Expr, x: &[f64], k: usize) -> Jet {
    let vars: Vec<Jet> = (0..x.len())
        .map(|i| Jet::variable(i, x[i], x.len(), k).unwrap())
        .collect();
    e.eval_jet(&vars).unwrap()
}

/// Worst relative mismatch between the order-`k` jet coefficients of `src`
/// at `x` and central differences. A coefficient `∂^α g` is compared with the
/// central difference along its first active axis of `∂^{α − e_i} g`, the
/// latter taken from plain evaluation when `α − e_i = 0`.
pub fn jet_fd_error(src: &str, x: &[f64], k: usize, h: f64) -> f64 {
    let e = parse_expr_in(src, x.len()).unwrap();
    let jet = expr_jet(&e, x, k);
    let mut worst = 0.0f64;
    for alpha in jet.layout().multi_indices().to_vec() {
        let Some(i) = alpha.iter().position(|&a| a > 0) else {
            let v = e.eval(x).unwrap();
            worst = worst.max((jet.value() - v).abs() / 1f64.max(v.abs()));
            continue;
        };
        let mut beta = alpha.clone();
        beta[i] -= 1;
        let lower = beta.iter().map(|&b| b as usize).sum::<usize>();
        let g = |p: &[f64]| {
            if lower == 0 {
                e.eval(p).unwrap()
            } else {
                expr_jet(&e, p, lower).partial(&beta)
            }
        };
        let fd = central(g, x, i, h);
        let a = jet.partial(&alpha);
        worst = worst.max((a - fd).abs() / 1f64.max(a.abs()).max(fd.abs()));
    }
    worst
}
