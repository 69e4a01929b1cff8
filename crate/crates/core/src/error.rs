use thiserror::Error;

/// Errors raised by the solvers and constructions of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanardError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("order condition violated in {term}: monomial {monomial}")]
    OrderCondition { term: String, monomial: String },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("vector field produced a non-finite value at t = {t}")]
    FieldEvaluation { t: f64 },

    #[error("maximum number of integration steps ({0}) exceeded")]
    TooManySteps(usize),

    #[error("no section crossing within horizon {horizon}")]
    NoCrossing { horizon: f64 },

    #[error("tangential section crossing at t = {t} (dg/dt = {rate:e})")]
    TangentialCrossing { t: f64, rate: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonMaxIter { iterations: usize, residual: f64 },

    #[error("singular Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("fixed-point iteration is not contracting (iteration {iteration}, ratio {ratio})")]
    NonContraction { iteration: usize, ratio: f64 },

    #[error("fixed-point iteration left the admissible ball (norm {norm:e} > {bound:e})")]
    BallExit { norm: f64, bound: f64 },

    #[error("fixed-point iteration did not reach tolerance after {0} iterations")]
    FixedPointMaxIter(usize),

    #[error("grid with {nodes} nodes does not resolve the fixed point (defect {defect:e})")]
    GridResolution { nodes: usize, defect: f64 },

    #[error("outside the domain of validity: {0}")]
    OutOfDomain(String),

    #[error("orbit does not close: gap {gap:e} exceeds {limit:e}")]
    ClosureGap { gap: f64, limit: f64 },

    #[error("branch seam mismatch {mismatch:e} exceeds {limit:e}")]
    SeamMismatch { mismatch: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

impl CanardError {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            CanardError::InvalidInput(_) => "invalid_input",
            CanardError::OrderCondition { .. } => "order_condition",
            CanardError::StepSizeUnderflow { .. } => "step_size_underflow",
            CanardError::FieldEvaluation { .. } => "field_evaluation",
            CanardError::TooManySteps(_) => "too_many_steps",
            CanardError::NoCrossing { .. } => "no_crossing",
            CanardError::TangentialCrossing { .. } => "tangential_crossing",
            CanardError::NewtonMaxIter { .. } => "newton_max_iter",
            CanardError::SingularJacobian { .. } => "singular_jacobian",
            CanardError::NonContraction { .. } => "non_contraction",
            CanardError::BallExit { .. } => "ball_exit",
            CanardError::FixedPointMaxIter(_) => "fixed_point_max_iter",
            CanardError::GridResolution { .. } => "grid_resolution",
            CanardError::OutOfDomain(_) => "out_of_domain",
            CanardError::ClosureGap { .. } => "closure_gap",
            CanardError::SeamMismatch { .. } => "seam_mismatch",
            CanardError::Config(_) => "config",
        }
    }

    /// Whether the error comes from bad input rather than from a solver.
    pub fn is_input_error(&self) -> bool {
        matches!(self, CanardError::InvalidInput(_) | CanardError::OrderCondition { .. } | CanardError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, CanardError>;
