use thiserror::Error;

/// Errors raised by the solver modules.
///
/// Every variant belongs to exactly one module; [`Error::module`] and
/// [`Error::kind`] give stable machine-readable identifiers for both.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("interval endpoint must be positive and finite, got {a}")]
    InvalidInterval { a: f64 },

    #[error("grid needs at least 2 subintervals, got {m}")]
    TooFewIntervals { m: usize },

    #[error("{what} is not finite at node {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("sampled functions live on different grids")]
    GridMismatch,

    #[error("number of formal powers must lie in [{min}, {max}], got {got}")]
    PowersOutOfRange { min: usize, max: usize, got: usize },

    #[error("{what} vanishes at node {index} (|value| = {magnitude:e})")]
    Vanishing {
        what: &'static str,
        index: usize,
        magnitude: f64,
    },

    #[error("operation expects a {expected} table")]
    VariantMismatch { expected: &'static str },

    #[error(
        "truncation estimate {estimate:e} exceeds {threshold:e} at |omega| = {omega_abs}; \
         about {required_n} formal powers are required"
    )]
    TruncationUnreachable {
        omega_abs: f64,
        estimate: f64,
        threshold: f64,
        required_n: usize,
    },

    #[error("boundary form has alpha = beta = 0")]
    TrivialBoundaryForm,

    #[error("singular 2x2 system: |det| = {det_abs:e}, condition estimate {condition:e}")]
    SingularSystem { det_abs: f64, condition: f64 },

    #[error("g0 residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("characteristic function is identically zero for these boundary forms")]
    DegenerateCharacteristic,

    #[error("requested |omega| <= {requested} exceeds reliability radius {radius}")]
    OutsideReliabilityRadius { requested: f64, radius: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    RootFinderDiverged { iterations: usize },

    #[error("tolerance {tol:e} outside the supported range [1e-13, 1e-3]")]
    ToleranceOutOfRange { tol: f64 },

    #[error("step size underflow at x = {x}")]
    StepSizeUnderflow { x: f64 },

    #[error("step budget of {max_steps} exhausted at x = {x}")]
    StepBudgetExhausted { max_steps: usize, x: f64 },
}

impl Error {
    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            InvalidInterval { .. } | TooFewIntervals { .. } | NonFinite { .. } | GridMismatch => {
                "grid-quadrature"
            }
            PowersOutOfRange { .. } | VariantMismatch { .. } => "formal-powers",
            TruncationUnreachable { .. } | TrivialBoundaryForm | SingularSystem { .. } => {
                "solution-assembly"
            }
            Vanishing { .. } | ResidualTooLarge { .. } => "particular-solution",
            DegenerateCharacteristic
            | OutsideReliabilityRadius { .. }
            | RootFinderDiverged { .. } => "spectral",
            ToleranceOutOfRange { .. } | StepSizeUnderflow { .. } | StepBudgetExhausted { .. } => {
                "baseline-bench"
            }
        }
    }

    /// Short snake_case identifier of the error variant.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            InvalidInterval { .. } => "invalid_interval",
            TooFewIntervals { .. } => "too_few_intervals",
            NonFinite { .. } => "non_finite",
            GridMismatch => "grid_mismatch",
            PowersOutOfRange { .. } => "powers_out_of_range",
            Vanishing { .. } => "vanishing",
            VariantMismatch { .. } => "variant_mismatch",
            TruncationUnreachable { .. } => "truncation_unreachable",
            TrivialBoundaryForm => "trivial_boundary_form",
            SingularSystem { .. } => "singular_system",
            ResidualTooLarge { .. } => "residual_too_large",
            DegenerateCharacteristic => "degenerate_characteristic",
            OutsideReliabilityRadius { .. } => "outside_reliability_radius",
            RootFinderDiverged { .. } => "root_finder_diverged",
            ToleranceOutOfRange { .. } => "tolerance_out_of_range",
            StepSizeUnderflow { .. } => "step_size_underflow",
            StepBudgetExhausted { .. } => "step_budget_exhausted",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
