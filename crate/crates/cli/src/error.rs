use std::process::ExitCode;

use acs_judge::JudgeError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] acs_core::Error),

    #[error(transparent)]
    Judge(#[from] JudgeError),

    /// A failure inside a pipeline stage, naming the item being processed.
    #[error("stage {stage}: {item}: {source}")]
    Stage {
        stage: &'static str,
        item: String,
        #[source]
        source: Box<CliError>,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn in_stage(self, stage: &'static str, item: impl Into<String>) -> Self {
        CliError::Stage {
            stage,
            item: item.into(),
            source: Box::new(self),
        }
    }

    /// 1 usage, 2 data, 3 backend.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_backend() => 3,
            CliError::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub trait StageContext<T> {
    fn in_stage(self, stage: &'static str, item: impl Into<String>) -> Result<T>;
}

impl<T, E: Into<CliError>> StageContext<T> for std::result::Result<T, E> {
    fn in_stage(self, stage: &'static str, item: impl Into<String>) -> Result<T> {
        self.map_err(|e| e.into().in_stage(stage, item))
    }
}
