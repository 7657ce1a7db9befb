use thiserror::Error;

/// Byte range into an expression source string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at offset {pos}: expected {}", expected.join(" | "))]
    Syntax { pos: usize, expected: Vec<String> },
    #[error("unknown variable '{name}' at offset {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("unknown function '{name}' at offset {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("domain error at {}..{}: {msg}", span.start, span.end)]
    Domain { span: Span, msg: String },
    #[error("bindings do not match the chart: {0}")]
    Bindings(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("singular linear system")]
    SingularSystem,
    #[error("step failed at t={t}: {source}")]
    Step { t: f64, source: Box<Error> },
    #[error("non-finite state at t={t}")]
    NonFinite { t: f64 },
    #[error("Newton iteration diverged (last iterate {last:?})")]
    NewtonDivergence { last: Vec<f64> },
    #[error("point is not on the submanifold (residual {residual:e})")]
    NotOnSubmanifold { residual: f64 },
    #[error("rank deficient: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("singular Lagrangian: the velocity Hessian is degenerate")]
    SingularLagrangian,
    #[error("inadmissible lift: the z-component depends on the positions")]
    InadmissibleLift,
    #[error("energy too close to zero at t={t}")]
    NearZeroEnergy { t: f64 },
    #[error("generator {index} is not an infinitesimal contactomorphism (residual {residual:e})")]
    NotContactomorphism { index: usize, residual: f64 },
    #[error("rank decision straddles the threshold")]
    BoundaryRank,
    #[error("constraint algorithm did not stabilize after {0} steps")]
    NoConvergence(usize),
    #[error("no probe point satisfies the constraints")]
    EmptyFinalManifold,
    #[error("rank is not constant across probes")]
    RankUnstable,
    #[error("constraint bracket matrix is singular")]
    SingularCMatrix,
    #[error("velocity Hessian is singular")]
    SingularHessian,
    #[error("constraint matrix C is singular")]
    SingularC,
    #[error("{path}: {msg}")]
    Config { path: String, msg: String },
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
