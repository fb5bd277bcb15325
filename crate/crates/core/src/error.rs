use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("malformed taxonomy document: {0}")]
    Parse(String),
    #[error("concept name is empty after normalization")]
    EmptyConcept,
    #[error("concept `{0}` declared more than once")]
    DuplicateConcept(String),
    #[error("edge {child} < {parent} references undeclared concept `{missing}`")]
    DanglingEdge {
        child: String,
        parent: String,
        missing: String,
    },
    #[error("edge {child} < {parent} declared more than once")]
    DuplicateEdge { child: String, parent: String },
    #[error("cycle detected: {}", .0.join(" < "))]
    Cycle(Vec<String>),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
}

impl OntologyError {
    /// Whether the document was unreadable, as opposed to structurally invalid.
    pub fn is_parse(&self) -> bool {
        matches!(self, Self::Parse(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error("request `{0}` uses `fail` as a minimum degree")]
    FailThreshold(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("id `{0}` is already in use")]
    DuplicateId(String),
    #[error("request `{id}` has deadline {deadline}, before the current time {now}")]
    ExpiredOnArrival { id: String, deadline: i64, now: i64 },
    #[error("unknown proposal `{0}`")]
    UnknownProposal(String),
    #[error("proposal `{0}` is already resolved")]
    ProposalResolved(String),
    #[error("side {side} of proposal `{proposal}` has already answered")]
    AlreadyAnswered { proposal: String, side: String },
    #[error("clock cannot move back from {now} to {requested}")]
    TimeRegression { now: i64, requested: i64 },
}

impl From<OntologyError> for RegistryError {
    fn from(e: OntologyError) -> Self {
        Self::Match(MatchError::Ontology(e))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("grid side length must be at least 1")]
    EmptyGrid,
    #[error("initial role fractions sum to {0}, expected 1")]
    FractionSum(f64),
    #[error("fraction for {role} is {value}, outside [0, 1]")]
    FractionRange { role: &'static str, value: f64 },
    #[error("transition row for {role} sums to {sum}, expected 1")]
    TransitionRow { role: &'static str, sum: f64 },
    #[error("transition probability {value} for {from} -> {to} is outside [0, 1]")]
    TransitionEntry {
        from: &'static str,
        to: &'static str,
        value: f64,
    },
    #[error("churn rate {0} is outside [0, 1]")]
    ChurnRate(f64),
    #[error("workload bounds must satisfy 1 <= min <= max, got [{min}, {max}]")]
    Workload { min: u32, max: u32 },
    #[error("neighborhood radius must be at least 1")]
    Radius,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("sweep needs at least one replicate")]
    NoReplicates,
    #[error("axis `{axis}` cannot take value {value}: {reason}")]
    Substitution {
        axis: String,
        value: f64,
        reason: String,
    },
}
