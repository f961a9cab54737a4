//! Small dense helpers on value parts.

use nalgebra::DMatrix;

use crate::jets::Jet;

/// Number of singular values above `threshold · σ_max` of a row-major matrix.
pub fn rank(values: &[f64], rows: usize, cols: usize, threshold: f64) -> usize {
    let m = DMatrix::from_row_slice(rows, cols, values);
    let sv = m.singular_values();
    let top = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > threshold * top).count()
}

/// Value parts of a slice of jets.
pub fn values(jets: &[Jet]) -> Vec<f64> {
    jets.iter().map(Jet::value).collect()
}

/// Largest absolute entry; NaN propagates.
pub fn max_abs<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m: f64, v| {
        if v.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(v.abs())
        }
    })
}
