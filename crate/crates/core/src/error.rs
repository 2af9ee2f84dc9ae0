use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice: {0}")]
    Lattice(String),

    #[error("model: {0}")]
    Model(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("ode: {0}")]
    Ode(String),

    #[error("pde: {0}")]
    Pde(String),

    #[error("config: {0}")]
    Config(String),

    #[error("initial condition: {0}")]
    InitialCondition(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 model, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::InitialCondition(_) | Self::Lattice(_) => 2,
            Self::Model(_) | Self::UnknownModel(_) | Self::Ode(_) | Self::Pde(_) => 3,
            Self::Io { .. } | Self::Checkpoint(_) => 4,
        }
    }
}
