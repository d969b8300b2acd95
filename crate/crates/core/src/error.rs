use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("schema error: {reason} (text: {text:?})")]
    Schema { reason: String, text: String },

    #[error("template error: unresolved placeholders {missing:?}")]
    Template { missing: Vec<String> },

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("year {year}{}: {source}", household.map(|h| format!(", household {h}")).unwrap_or_default())]
    Run {
        year: u32,
        household: Option<usize>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn schema(reason: impl Into<String>, text: impl Into<String>) -> Self {
        Error::Schema {
            reason: reason.into(),
            text: text.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
