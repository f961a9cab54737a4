//! Named residuals aggregated over sample points.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One residual value at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub point: Vec<f64>,
    #[serde(with = "lossless")]
    pub value: f64,
}

/// Maximum of a named residual over a set of points.
///
/// `pass` holds exactly when `max_abs ≤ tolerance`; a NaN residual never passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub points: usize,
    #[serde(with = "lossless")]
    pub max_abs: f64,
    pub argmax_point: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Vec<PointValue>>,
}

/// A residual measured at a single point, before aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Sample {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Sample {
        Sample {
            name: name.into(),
            value,
            tolerance,
        }
    }

    pub fn pass(&self) -> bool {
        self.value.abs() <= self.tolerance
    }
}

fn worse(candidate: f64, current: f64) -> bool {
    candidate.is_nan() && !current.is_nan() || candidate.abs() > current.abs()
}

impl ResidualReport {
    pub fn empty(name: impl Into<String>, tolerance: f64) -> ResidualReport {
        ResidualReport {
            name: name.into(),
            points: 0,
            max_abs: 0.0,
            argmax_point: vec![],
            tolerance,
            pass: true,
            details: None,
        }
    }

    pub fn single(name: impl Into<String>, point: &[f64], value: f64, tolerance: f64) -> Self {
        let mut r = ResidualReport::empty(name, tolerance);
        r.push(point, value);
        r
    }

    /// Folds one more point into the maximum.
    pub fn push(&mut self, point: &[f64], value: f64) {
        if self.points == 0 || worse(value, self.max_abs) {
            self.max_abs = value.abs();
            self.argmax_point = point.to_vec();
        }
        self.points += 1;
        if let Some(d) = self.details.as_mut() {
            d.push(PointValue {
                point: point.to_vec(),
                value,
            });
        }
        self.refresh();
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.refresh();
        self
    }

    fn refresh(&mut self) {
        self.pass = self.max_abs <= self.tolerance;
    }
}

/// Aggregates per-point samples into one report per residual name, in order
/// of first appearance.
pub fn aggregate<'a, I>(per_point: I, keep_details: bool) -> Vec<ResidualReport>
where
    I: IntoIterator<Item = (&'a [f64], &'a [Sample])>,
{
    let mut out: Vec<ResidualReport> = Vec::new();
    for (point, samples) in per_point {
        for s in samples {
            let idx = match out.iter().position(|r| r.name == s.name) {
                Some(i) => i,
                None => {
                    let mut r = ResidualReport::empty(&s.name, s.tolerance);
                    if keep_details {
                        r.details = Some(vec![]);
                    }
                    out.push(r);
                    out.len() - 1
                }
            };
            out[idx].push(point, s.value);
        }
    }
    out
}

/// JSON cannot carry NaN or infinities; those are written as strings.
mod lossless {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("bad float `{other}`"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_tracks_argmax() {
        let p1 = [0.0, 1.0];
        let p2 = vec![2.0, 3.0];
        let s1 = [Sample::new("a", 1e-3, 1e-2), Sample::new("b", 0.0, 1e-9)];
        let s2 = [Sample::new("a", -5e-3, 1e-2), Sample::new("b", 1e-8, 1e-9)];
        let reps = aggregate(
            vec![(&p1[..], &s1[..]), (&p2[..], &s2[..])],
            true,
        );
        assert_eq!(reps.len(), 2);
        assert_eq!(reps[0].max_abs, 5e-3);
        assert_eq!(reps[0].argmax_point, p2);
        assert!(reps[0].pass);
        assert!(!reps[1].pass);
        assert_eq!(reps[1].points, 2);
        assert_eq!(reps[1].details.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn nan_fails_and_round_trips() {
        let mut r = ResidualReport::single("x", &[0.5], 1.0, 2.0);
        r.push(&[0.7], f64::NAN);
        assert!(!r.pass);
        assert!(r.max_abs.is_nan());
        let json = serde_json::to_string(&r).unwrap();
        let back: ResidualReport = serde_json::from_str(&json).unwrap();
        assert!(back.max_abs.is_nan());
        assert_eq!(back.argmax_point, vec![0.7]);
        let r2 = ResidualReport::single("y", &[0.1, 0.2], 1.234567890123e-11, 1e-9);
        let json = serde_json::to_string(&r2).unwrap();
        assert_eq!(serde_json::from_str::<ResidualReport>(&json).unwrap(), r2);
    }
}
