//! Sample domains and grid evaluation.
//!
//! Grids are uniform lattices over the domain's bounding box with each axis'
//! endpoints pulled inward by `INSET` of the box width. Disk-shaped domains
//! additionally drop lattice points outside `BALL_FILL` of the radius.

use serde::{Deserialize, Serialize};

pub const INSET: f64 = 1e-3;
pub const BALL_FILL: f64 = 0.9;
pub const DEFAULT_POINTS: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Box,
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub region: Region,
}

impl Domain {
    pub fn boxed(bounds: &[(f64, f64)]) -> Domain {
        Domain {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
            region: Region::Box,
        }
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Domain {
        Domain::boxed(&vec![(lo, hi); n])
    }

    pub fn ball(center: &[f64], radius: f64) -> Domain {
        Domain {
            lower: center.iter().map(|c| c - radius).collect(),
            upper: center.iter().map(|c| c + radius).collect(),
            region: Region::Ball {
                center: center.to_vec(),
                radius,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Open-domain membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        let in_box = p
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *lo < *x && *x < *hi);
        match &self.region {
            Region::Box => in_box,
            Region::Ball { center, radius } => in_box && dist(p, center) < *radius,
        }
    }

    /// Uniform lattice with `k` points per axis (`k ≥ 2`).
    pub fn grid(&self, k: usize) -> Vec<Vec<f64>> {
        let k = k.max(2);
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| {
                let w = hi - lo;
                let (a, b) = (lo + INSET * w, hi - INSET * w);
                (0..k)
                    .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
                    .collect()
            })
            .collect();
        let mut points: Vec<Vec<f64>> = vec![vec![]];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        match &self.region {
            Region::Box => points,
            Region::Ball { center, radius } => points
                .into_iter()
                .filter(|p| dist(p, center) <= BALL_FILL * radius)
                .collect(),
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn map_points_sequential<T, F>(points: &[Vec<f64>], f: F) -> Vec<T>
where
    F: Fn(&[f64]) -> T,
{
    points.iter().map(|p| f(p)).collect()
}

#[cfg(feature = "parallel")]
pub fn map_points_parallel<T, F>(points: &[Vec<f64>], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    use rayon::prelude::*;
    points.par_iter().map(|p| f(p)).collect()
}

/// Evaluates `f` at every point, in parallel when the `parallel` feature is on.
/// Output order matches input order either way.
pub fn map_points<T, F>(points: &[Vec<f64>], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_points_parallel(points, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_points_sequential(points, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_grid_is_inset() {
        let d = Domain::boxed(&[(0.0, 1.0), (-1.0, 1.0)]);
        let g = d.grid(3);
        assert_eq!(g.len(), 9);
        assert!((g[0][0] - 1e-3).abs() < 1e-15);
        assert!((g[0][1] + 1.0 - 2e-3).abs() < 1e-15);
        assert!((g[8][0] - 0.999).abs() < 1e-15);
        assert!(g.iter().all(|p| d.contains(p)));
    }

    #[test]
    fn ball_grid_is_filtered() {
        let d = Domain::ball(&[0.0, 0.0], 1.0);
        let g = d.grid(7);
        assert!(!g.is_empty());
        assert!(g.iter().all(|p| p[0].hypot(p[1]) <= 0.9));
        assert!(g.iter().any(|p| p[0].hypot(p[1]) < 1e-12));
        assert!(!d.contains(&[0.8, 0.8]));
    }

    #[test]
    fn parallel_matches_sequential_order() {
        let g = Domain::cube(2, -1.0, 1.0).grid(9);
        let f = |p: &[f64]| p[0] * 10.0 + p[1];
        assert_eq!(map_points(&g, f), map_points_sequential(&g, f));
    }
}
