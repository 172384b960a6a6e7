use thiserror::Error;

/// Errors raised anywhere in the capacity pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("component {component}: auxiliary point lies outside its curve")]
    AlphaOutside { component: usize },

    #[error("components {first} and {second} intersect at sample resolution")]
    CurvesIntersect { first: usize, second: usize },

    #[error("zero tangent at non-corner node {node}")]
    ZeroTangent { node: usize },

    #[error("GMRES did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("open-up iteration did not converge in {iterations} iterations (defect {defect:e})")]
    OpenUpNotConverged { iterations: usize, defect: f64 },

    #[error("open-up geometry collapsed: {0}")]
    Collapsed(String),

    #[error("series did not converge within {0} terms")]
    SeriesDivergence(usize),
}

impl Error {
    /// True for failures of the numerical machinery as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::NonFinite(_)
                | Error::Singular(_)
                | Error::OpenUpNotConverged { .. }
                | Error::Collapsed(_)
                | Error::SeriesDivergence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
