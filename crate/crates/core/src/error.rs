use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown coordinate `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("exponent {exponent} at offset {offset} is outside [-8, 8]")]
    ExponentRange { exponent: i64, offset: usize },

    #[error("division by zero in `{subexpr}` (denominator {value:e})")]
    DivisionByZero { subexpr: String, value: f64 },

    #[error("non-finite value while evaluating `{subexpr}`")]
    NonFinite { subexpr: String },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("point {coords:?} lies outside the domain box of chart `{chart}`")]
    OutOfDomain { chart: String, coords: Vec<f64> },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("metric is singular at {coords:?}")]
    SingularMetric { coords: Vec<f64> },

    #[error("frame construction failed: {0}")]
    PivotFailure(String),

    #[error("f_*ξ₁ is not parallel to ξ₂ (residual {residual:e})")]
    NotParallel { residual: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("expression error at `{path}`: {source}")]
    Expression {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_path(self, path: impl Into<String>) -> Self {
        Error::Expression {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
