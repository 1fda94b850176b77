use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("{field} out of {range}")]
    OutOfRange { field: &'static str, range: &'static str },

    /// Wild-type course days are not strictly increasing.
    #[error("course ordering: need duration0 > incubation_end0 > latent_end0 > 0")]
    CourseOrdering,

    #[error("zero-length phase: {0}")]
    ZeroLengthPhase(&'static str),

    #[error("population extinct")]
    PopulationExtinct,

    #[error("integration diverged at t = {0}")]
    Diverged(f64),

    #[error("n_initial_infected ({infected}) exceeds n_agents ({agents})")]
    TooManyInitialInfected { infected: usize, agents: usize },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("invalid value for `{key}`: {value}")]
    InvalidValue { key: String, value: String },

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("no data{0}")]
    NoData(String),

    #[error("dataset schema mismatch: {0}")]
    Schema(String),

    #[error("unknown id {0}")]
    UnknownId(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the environment rather than by the input.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}
