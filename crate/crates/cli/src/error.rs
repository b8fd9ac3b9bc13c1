use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("unknown preset `{0}` (see `dissipath presets list`)")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("frequency grids of the two runs share no points; pass --interpolate to compare on the first run's grid")]
    DisjointGrids,

    #[error(transparent)]
    Core(#[from] dissipath_core::Error),

    #[error("could not build the worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
