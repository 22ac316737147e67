use alloc::vec::Vec;
use core::fmt;

/// Everything that can go wrong below the CLI layer.
///
/// Solver *outcomes* (divergence, leaving the ball, hitting the iteration cap)
/// are not errors; they are reported in-band through
/// [`solve::Outcome`](crate::solve::Outcome). `Error` covers violated
/// preconditions and structural failures.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An entry of an input vector is NaN or infinite.
    NonFiniteEntry { index: usize },
    /// Two objects that must share a dimension do not.
    DimensionMismatch { expected: usize, got: usize },
    /// The requested norm or exponent is outside the supported family.
    UnsupportedNorm { what: &'static str },
    /// An evaluation point lies outside the mapping's declared ball.
    OutOfDomain { distance: f64, radius: f64 },
    /// A frozen Jacobian (or linear surrogate matrix) is numerically rank
    /// deficient: pivot-ratio condition estimate exceeds `1/eps`.
    SingularJacobian { cond: f64 },
    /// The inner surrogate inversion did not reach its tolerance.
    SurrogateSolveFailed { iterations: usize, residual: f64 },
    /// A comparison-ratio denominator `<f0(x), probe>` was nonpositive at a
    /// sampled point; the sample is returned as witness.
    DegenerateDenominator { witness: Vec<f64> },
    /// Every sampled pair had a zero surrogate increment.
    AllPairsDegenerate,
    /// A sampled coefficient escaped the declared envelope
    /// `c_i(x) phi(eta) <= a_i(x, xi, eta) <= b_i(x) phi(eta)`.
    CoefficientEnvelopeViolated {
        axis: usize,
        point: Vec<f64>,
        /// Averaged state argument at the violation.
        state: f64,
        /// Difference-quotient argument at the violation.
        gradient: f64,
        /// The coefficient value that escaped.
        value: f64,
        lower: f64,
        upper: f64,
    },
    /// Refining the quadrature rule by two points moved an assembled matrix
    /// entry by more than the stated relative tolerance.
    QuadratureUnderResolved { entry_change: f64 },
    /// The shifted target is larger than the certified solvable radius
    /// `0.99 (1 - sigma) r`.
    RadiusGuard { shift_norm: f64, certified: f64 },
    /// A configuration value violates its documented range.
    InvalidParameter { what: &'static str },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFiniteEntry { index } => {
                write!(f, "non-finite entry at index {index}")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::UnsupportedNorm { what } => write!(f, "unsupported norm: {what}"),
            Error::OutOfDomain { distance, radius } => write!(
                f,
                "evaluation point at distance {distance:.6e} from the ball center (radius {radius:.6e})"
            ),
            Error::SingularJacobian { cond } => {
                write!(f, "singular Jacobian: condition estimate {cond:.3e}")
            }
            Error::SurrogateSolveFailed { iterations, residual } => write!(
                f,
                "surrogate inversion stalled after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::DegenerateDenominator { .. } => {
                write!(f, "comparison denominator nonpositive at a sampled point")
            }
            Error::AllPairsDegenerate => {
                write!(f, "all sampled pairs had zero surrogate increment")
            }
            Error::CoefficientEnvelopeViolated {
                axis,
                value,
                lower,
                upper,
                ..
            } => write!(
                f,
                "coefficient envelope violated on axis {axis}: a = {value:.6e} outside [{lower:.6e}, {upper:.6e}]"
            ),
            Error::QuadratureUnderResolved { entry_change } => write!(
                f,
                "quadrature under-resolved: refinement moved an entry by {entry_change:.3e} (relative)"
            ),
            Error::RadiusGuard { shift_norm, certified } => write!(
                f,
                "target shift {shift_norm:.6e} exceeds certified solvable radius {certified:.6e}"
            ),
            Error::InvalidParameter { what } => write!(f, "invalid parameter: {what}"),
        }
    }
}

impl core::error::Error for Error {}
