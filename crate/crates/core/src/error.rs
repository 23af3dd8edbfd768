use thiserror::Error;

/// Errors produced while building or evaluating a scalar-flat toric metric.
///
/// Edge numbers are 1-based (`E_1 .. E_d`).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("normals and offsets must be nonempty and of equal length (got {normals} normals, {offsets} offsets)")]
    ShapeMismatch { normals: usize, offsets: usize },

    #[error("a moment polygon needs at least two edges (got {0})")]
    TooFewEdges(usize),

    #[error("normal {0} is not a primitive lattice vector")]
    NonPrimitiveNormal(usize),

    #[error("det(nu_{prev}, nu_{index}) = {value}, expected -1", prev = .index - 1)]
    BadAdjacentDeterminant { index: usize, value: i128 },

    #[error("offsets must satisfy lambda_1 = lambda_2 = 0 (got {lambda1}, {lambda2})")]
    BadGauge { lambda1: f64, lambda2: f64 },

    #[error("polygon region is empty or degenerate: {0}")]
    EmptyOrDegenerateRegion(String),

    #[error("edge index {index} out of range 1..={d}")]
    EdgeIndexOutOfRange { index: usize, d: usize },

    #[error("point ({0}, {1}) is not in the interior of the polygon")]
    PointNotInterior(f64, f64),

    #[error("polygon is not strictly unbounded (unbounded edges are parallel)")]
    NotStrictlyUnbounded,

    #[error("log solution undefined at H + a = {shifted}, r = {r}")]
    Domain { shifted: f64, r: f64 },

    #[error("nut parameter ({alpha}, {beta}) outside the admissible cone: det(nu, nu_1) = {det_first}, det(nu, nu_d) = {det_last}")]
    InadmissibleNut {
        alpha: f64,
        beta: f64,
        det_first: f64,
        det_last: f64,
    },

    #[error("half-plane parameters a must be strictly increasing (a_{index} = {value} <= previous)")]
    NonIncreasingA { index: usize, value: f64 },

    #[error("offsets collapse an edge: a_{index} = {value} does not exceed a_{prev} = {previous}", prev = .index - 1)]
    NonMonotoneA { index: usize, value: f64, previous: f64 },

    #[error("boundary map does not trace the polygon: {0}")]
    BoundaryMapMismatch(String),

    #[error(
        "Newton inversion did not converge after {iterations} iterations (residual {residual:e}) at x = ({x1}, {x2})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        x1: f64,
        x2: f64,
    },

    #[error(
        "quadrature tolerance {tolerance:e} not met after {subdivisions} subdivisions (estimated error {error:e})"
    )]
    QuadratureFailure {
        subdivisions: usize,
        error: f64,
        tolerance: f64,
    },

    #[error("non-positive radius r = {0}; expected an interior half-plane point")]
    NonPositiveRadius(f64),

    #[error("oracle input outside its domain: {0}")]
    OracleDomain(String),

    #[error("no admissible root found: {0}")]
    RootNotFound(String),

    #[error("no closed-form oracle is known for this polygon")]
    NoOracleForPolygon,
}

pub type Result<T> = std::result::Result<T, Error>;
