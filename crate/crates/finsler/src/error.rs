use thiserror::Error;

/// Everything that can go wrong while parsing expressions, differentiating,
/// or evaluating geometric quantities.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("exponent must be a numeric literal at byte {offset}")]
    NonLiteralExponent { offset: usize },

    /// Division where the denominator's constant term is (numerically) zero.
    /// `expr` carries the offending subexpression when the division came from
    /// evaluating a parsed formula.
    #[error("division by a quantity whose value term vanishes{}", fmt_expr(.expr))]
    DivisionBySingularJet { expr: Option<String> },

    /// Fractional power or square root of a non-positive quantity, and similar.
    #[error("domain error: {what}{}", fmt_expr(.expr))]
    Domain { what: String, expr: Option<String> },

    #[error("index out of range: {what}")]
    IndexOutOfRange { what: String },

    /// Gaussian elimination on the constant terms could not find a usable pivot.
    #[error("linear solve failed: constant-term matrix is singular at column {col}")]
    SingularConstantMatrix { col: usize },

    #[error("fundamental tensor is singular at {point}")]
    SingularMetric { point: String },

    #[error("invalid model: {reason}")]
    InvalidModel { reason: String },

    /// The metric change is undefined at this point (D = 0 or the 1-form
    /// vanishes on the support cone).
    #[error("metric change degenerates at {point}: {what}")]
    DegenerateChange { point: String, what: String },

    #[error("sampling accepted only {accepted} of {needed} points after {attempts} attempts; widen the box or relax the guards")]
    AcceptanceTooLow {
        accepted: usize,
        needed: usize,
        attempts: usize,
    },

    #[error("unknown check `{name}`")]
    UnknownCheck { name: String },

    #[error("config error: {reason}")]
    Config { reason: String },
}

fn fmt_expr(e: &Option<String>) -> String {
    match e {
        Some(s) => format!(" while evaluating `{s}`"),
        None => String::new(),
    }
}

impl Error {
    /// Attach the pretty-printed subexpression that triggered an evaluation
    /// error, if the variant carries one and none is set yet.
    pub fn annotate(self, source: impl FnOnce() -> String) -> Error {
        match self {
            Error::DivisionBySingularJet { expr: None } => Error::DivisionBySingularJet {
                expr: Some(source()),
            },
            Error::Domain { what, expr: None } => Error::Domain {
                what,
                expr: Some(source()),
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
