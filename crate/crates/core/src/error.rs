use thiserror::Error;

pub type Result<T, E = FabricError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FabricError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("velocity too small to energize (x'Mx = {0:e})")]
    DegenerateVelocity(f64),

    #[error("singular metric (condition number {0:e})")]
    SingularMetric(f64),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-positive distance {0:e}: bodies interpenetrate")]
    NonpositiveDistance(f64),

    #[error("distance gradient undefined: centers coincide")]
    GradientSingularity,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("robot {robot}{}: {source}", context_suffix(*.sphere, *.step))]
    Planner {
        robot: usize,
        sphere: Option<usize>,
        step: Option<usize>,
        #[source]
        source: Box<FabricError>,
    },
}

fn context_suffix(sphere: Option<usize>, step: Option<usize>) -> String {
    let mut out = String::new();
    if let Some(s) = sphere {
        out.push_str(&format!(", sphere {s}"));
    }
    if let Some(k) = step {
        out.push_str(&format!(", rollout step {k}"));
    }
    out
}

impl FabricError {
    /// Attach robot (and optionally sphere) context. An existing planner
    /// wrapper is relabeled rather than nested.
    pub fn for_robot(self, robot: usize, sphere: Option<usize>) -> Self {
        match self {
            FabricError::Planner {
                sphere: inner,
                step,
                source,
                ..
            } => FabricError::Planner {
                robot,
                sphere: inner.or(sphere),
                step,
                source,
            },
            other => FabricError::Planner {
                robot,
                sphere,
                step: None,
                source: Box::new(other),
            },
        }
    }

    pub fn at_step(self, k: usize) -> Self {
        match self {
            FabricError::Planner {
                robot, sphere, source, ..
            } => FabricError::Planner {
                robot,
                sphere,
                step: Some(k),
                source,
            },
            other => other,
        }
    }

    /// The innermost error, with planner context stripped.
    pub fn root(&self) -> &FabricError {
        match self {
            FabricError::Planner { source, .. } => source.root(),
            other => other,
        }
    }
}
