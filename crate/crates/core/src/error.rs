use thiserror::Error;

/// Errors raised anywhere in the degeneracy pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("root refinement did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("P and Q share a common factor of degree {degree}")]
    NotIrreducible { degree: usize },
    #[error("the map P/Q is constant or has zero denominator")]
    ZeroMap,
    #[error("branch multiplicities violate Riemann-Hurwitz: sum {found}, expected {expected}")]
    RhViolation { found: usize, expected: usize },
    #[error("Möbius map is not in the unitary subgroup (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("no admissible normalizing coordinate after {attempts} attempts")]
    NormalizationFailed { attempts: usize },
    #[error("quadrature did not converge: estimated relative error {estimate:e} exceeds {tol:e}")]
    QuadratureNotConverged { estimate: f64, tol: f64 },
    #[error("point ({re}, {im}) is not a pole of the rational function")]
    NotAPole { re: f64, im: f64 },
    #[error("residue methods disagree: |difference| {difference:e} exceeds {tol:e} of scale")]
    MethodDisagreement { difference: f64, tol: f64 },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("simple-pole coefficient {leak:e} (relative) exceeds {tol:e}: nullspace vector is inconsistent")]
    ResidueLeak { leak: f64, tol: f64 },
    #[error("reconstructed field varies by {variation:e} near a branch point")]
    UnboundedField { variation: f64 },
    #[error("quadrature under-resolved: {0}")]
    QuadratureUnderResolved(String),
    #[error("no certified spectral gap (gap ratio {gap_ratio:e})")]
    NoCertifiedGap { gap_ratio: f64 },
    #[error("infeasible family point: {0}")]
    InfeasiblePoint(String),
    #[error("branch points collide (chordal distance {distance:e})")]
    CollidedPoints { distance: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
