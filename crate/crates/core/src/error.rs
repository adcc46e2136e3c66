use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {element} does not belong to {group}")]
    Mismatch { element: String, group: String },

    #[error("element budget of {budget} exceeded: enumerated at least {reached} elements")]
    Budget { budget: usize, reached: usize },

    #[error("pair budget of {budget} exceeded ({pairs} pairs); use sampled mode instead")]
    PairBudget { budget: usize, pairs: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no factorization of {element} found in the shells around ({t}, {length}); sub-additivity fails there")]
    NoFactorization { element: String, t: u64, length: u64 },

    #[error("no section witness for h(e) = {height} inside the window")]
    NoWitness { height: i64 },

    #[error("only {achievable} pairwise separated elements fit in the search radius")]
    InsufficientRoom { achievable: usize },

    #[error("relation is not measure preserving: class {{{class}}} carries unequal weights")]
    NotMeasurePreserving { class: String },

    #[error("section misses class {{{class}}}")]
    SectionMissesClass { class: String },

    #[error("window mismatch: {0}")]
    WindowMismatch(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Mismatch { .. } => "mismatch",
            Error::Budget { .. } => "budget",
            Error::PairBudget { .. } => "pair_budget",
            Error::Invalid(_) => "invalid",
            Error::Parse(_) => "parse",
            Error::NoFactorization { .. } => "no_factorization",
            Error::NoWitness { .. } => "no_witness",
            Error::InsufficientRoom { .. } => "insufficient_room",
            Error::NotMeasurePreserving { .. } => "not_measure_preserving",
            Error::SectionMissesClass { .. } => "section_misses_class",
            Error::WindowMismatch(_) => "window_mismatch",
            Error::Io { .. } => "io",
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. } | Error::PairBudget { .. })
    }
}
