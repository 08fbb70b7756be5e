use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter ({u}, {v}) outside the patch domain")]
    ParameterOutOfRange { u: f64, v: f64 },
    #[error("singular point at ({u}, {v}): |p| = {norm:e}")]
    SingularPoint { u: f64, v: f64, norm: f64 },
    #[error("surface passes through the origin at ({u}, {v})")]
    OriginOnSurface { u: f64, v: f64 },
    #[error("degenerate parametrization at ({u}, {v}): EG - F^2 = {w:e}")]
    DegenerateParametrization { u: f64, v: f64, w: f64 },
    #[error("non-finite integrand at ({u}, {v})")]
    SingularIntegrand { u: f64, v: f64 },
    #[error("band-limit violation at u = {u}: harmonic {n} has magnitude {magnitude:e}")]
    BandLimitViolation { u: f64, n: usize, magnitude: f64 },
    #[error("invalid spec: {0}")]
    SpecValidation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("Frenet frame undefined at u = {u} (curvature {kappa:e})")]
    FrameUndefined { u: f64, kappa: f64 },
    #[error("foliation collapse at u = {u}: radius {r:e}")]
    FoliationCollapse { u: f64, r: f64 },
    #[error("degenerate family at u = {u}: second-derivative system determinant {det:e}")]
    DegenerateFamily { u: f64, det: f64 },
    #[error("trajectory reached the origin at s = {s}")]
    OriginCollision { s: f64 },
    #[error("curve is not planar at s = {s}: torsion {torsion:e}")]
    Planarity { s: f64, torsion: f64 },
    #[error("cylindrical input at s = {s}: |beta'| = 0")]
    CylindricalInput { s: f64 },
    #[error("normalization failed: {0}")]
    Normalization(String),
    #[error("frame error: {0}")]
    Frame(String),
    #[error("origin lies in the centroid of face {face}")]
    OriginInFace { face: usize },
    #[error("mesh is open; flow requires a closed mesh")]
    OpenMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("flow stopped at step {step}: degenerate triangle {face}")]
    FlowSingularity { step: usize, face: usize },
    #[error("flow stalled at step {step}: step rejected {rejections} times")]
    Stall { step: usize, rejections: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics (singularities, collapse, stalls),
    /// false for bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::ParameterOutOfRange { .. }
                | Error::SpecValidation(_)
                | Error::Precondition(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::OpenMesh
                | Error::InvalidMesh(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
