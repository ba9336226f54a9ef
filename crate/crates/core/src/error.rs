use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Certifying vertices do not pin down a unique affine function.
    #[error("degenerate vertex set ({} vertices)", vertices.len())]
    DegenerateVertices { vertices: Vec<Vec<f64>> },

    #[error("point lies inside the hull; no separating hyperplane")]
    NoSeparation,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

pub(crate) fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::input(format!("{name}[{i}] is not finite")));
    }
    Ok(())
}
