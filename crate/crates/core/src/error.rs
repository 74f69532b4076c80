use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),

    /// A division by (near) zero or a domain violation inside an analytic
    /// function. `point` is filled in by the caller that knows it.
    #[error("singularity{}{}: {context}", fmt_point(point), fmt_span(span))]
    Singular {
        point: Option<Vec<f64>>,
        span: Option<(usize, usize)>,
        context: String,
    },

    #[error("parse error at offset {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("ode integration aborted at t = {t}: {msg}")]
    Ode { t: f64, msg: String },
}

fn fmt_point(p: &Option<Vec<f64>>) -> String {
    match p {
        Some(p) => format!(" at {p:?}"),
        None => String::new(),
    }
}

fn fmt_span(s: &Option<(usize, usize)>) -> String {
    match s {
        Some((a, b)) => format!(" in expression bytes {a}..{b}"),
        None => String::new(),
    }
}

impl Error {
    pub fn singular(context: impl Into<String>) -> Error {
        Error::Singular {
            point: None,
            span: None,
            context: context.into(),
        }
    }

    /// Attaches an evaluation point to a singularity that lacks one.
    pub fn at_point(self, p: &[f64]) -> Error {
        match self {
            Error::Singular {
                point: None,
                span,
                context,
            } => Error::Singular {
                point: Some(p.to_vec()),
                span,
                context,
            },
            e => e,
        }
    }

    /// Attaches an expression span to a singularity that lacks one.
    pub fn with_span(self, s: (usize, usize)) -> Error {
        match self {
            Error::Singular {
                point,
                span: None,
                context,
            } => Error::Singular {
                point,
                span: Some(s),
                context,
            },
            e => e,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::Ode { .. })
    }
}
