use thiserror::Error;

use crate::expr::ParseError;
use crate::jets::JetError;

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("frame [f_*, xi] degenerate at {}", fmt_point(.point))]
    FrameDegenerate { point: Vec<f64> },
    #[error("immersion is not equiaffine at {}: max |tau| = {tau:e}", fmt_point(.point))]
    NotEquiaffine { point: Vec<f64>, tau: f64 },
    #[error("jet order {got} too low, need at least {needed}")]
    InsufficientOrder { needed: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown example `{0}`")]
    UnknownExample(String),
    #[error("curve left the domain at {}", fmt_point(.point))]
    DomainExit { point: Vec<f64> },
    #[error("curve velocity underflow at {}", fmt_point(.point))]
    VelocityUnderflow { point: Vec<f64> },
    #[error("metric degenerate at {}", fmt_point(.point))]
    DegenerateMetric { point: Vec<f64> },
    #[error("map is not block-compatible with the splittings")]
    NotBlockCompatible,
    #[error("evaluation failed at {}: {source}", fmt_point(.point))]
    Eval { point: Vec<f64>, source: JetError },
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Attaches a location to bare jet failures.
    pub fn at(self, point: &[f64]) -> Error {
        match self {
            Error::Jet(JetError::Singular { .. }) => Error::FrameDegenerate {
                point: point.to_vec(),
            },
            Error::Jet(source) => Error::Eval {
                point: point.to_vec(),
                source,
            },
            other => other,
        }
    }

    /// Whether this is an evaluation failure (as opposed to a usage error).
    pub fn is_evaluation(&self) -> bool {
        matches!(
            self,
            Error::Jet(_)
                | Error::FrameDegenerate { .. }
                | Error::Eval { .. }
                | Error::DomainExit { .. }
                | Error::VelocityUnderflow { .. }
                | Error::DegenerateMetric { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
