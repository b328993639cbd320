use thiserror::Error;

/// Every failure the toolkit can report.
///
/// Variants carry enough context (node index, offending value) to locate
/// the problem without re-running the computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("eigensolver failed at node {node}")]
    NumericalFailure { node: usize },
    #[error("no crossing found: smallest gap {min_gap:.3e} above seed threshold")]
    NoCrossingFound { min_gap: f64 },
    #[error("Newton refinement failed; best node at {best:?} with gap {gap:.3e}")]
    RefinementFailed { best: [f64; 2], gap: f64 },
    #[error("window intersects band {band}")]
    HypothesisH1Violated { band: usize },
    #[error("intertwiner out of range: ||P - P0|| = {norm:.4} > 1/2")]
    IntertwinerOutOfRange { norm: f64, node: Option<usize> },
    #[error("degenerate cone: v1 and v2 are parallel")]
    DegenerateCone,
    #[error("ellipticity violated at angle {angle:.4} (margin {margin:.3e})")]
    EllipticityViolated { angle: f64, margin: f64 },
    #[error("gap opening failed: min |F_delta| = {min_gap:.3e} below delta/64")]
    GapOpeningFailed { min_gap: f64 },
    #[error("projector split failed at node {node}: gap {gap:.3e}")]
    SplitFailed { node: usize, gap: f64 },
    #[error("parallel transport failed: rank collapse (smallest singular value {sigma:.3e})")]
    TransportFailed { sigma: f64 },
    #[error("sphere-loop contraction failed: no missed point after {samples} samples")]
    ContractionFailed { samples: usize },
    #[error("rank too small: got {rank}, need at least 2")]
    RankTooSmall { rank: usize },
    #[error("convex blend failed: denominator {denominator:.3e}")]
    BlendFailed { denominator: f64 },
    #[error("mollifier too wide: ||P u_eps|| = {norm:.3e} < 1/2 at node {node}")]
    MollifierTooWide { node: usize, norm: f64 },
    #[error("Gram matrix not positive: smallest eigenvalue {min_eig:.3e}")]
    GramNotPositive { min_eig: f64 },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("h = {h} is not commensurate with 2*pi")]
    Commensurability { h: f64 },
    #[error("cutoff overlap: bump radius {radius:.4} exceeds half the crossing separation {half:.4}")]
    CutoffOverlap { radius: f64, half: f64 },
    #[error("isospectrality violated: Hausdorff distance {distance:.3e} > {tol:.1e}")]
    IsospectralityViolation { distance: f64, tol: f64 },
    #[error("Fredholm alternative failed at order {order}: residual {residual:.3e}")]
    FredholmFailure { order: usize, residual: f64 },
    #[error("triple not admissible: complement eigenvalue {eigenvalue:.6} inside the interval")]
    NotAdmissible { eigenvalue: f64 },
    #[error("energy {e} outside the admissible interval")]
    DomainError { e: f64 },
    #[error("spectral distance bound violated: observed {observed:.3e} > bound {bound:.3e}")]
    BoundViolated { observed: f64, bound: f64 },
    #[error("window factor L = {l:.4} lies inside a cluster of sigma(L)")]
    InvalidL { l: f64 },
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an upstream failure with the pipeline stage it came from.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
