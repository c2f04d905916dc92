use std::fmt;

/// Machine-parsable failure class printed as `error[<category>]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Config,
    Io,
    Input,
    Rules,
    Tokenizer,
    Model,
    Checkpoint,
    Training,
    Lock,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Config => "config",
            Category::Io => "io",
            Category::Input => "input",
            Category::Rules => "rules",
            Category::Tokenizer => "tokenizer",
            Category::Model => "model",
            Category::Checkpoint => "checkpoint",
            Category::Training => "training",
            Category::Lock => "lock",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        CliError {
            category,
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::new(Category::Io, format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self.category {
            Category::Usage => 2,
            _ => 1,
        }
    }
}

/// One line: `error[category]: message`, with embedded newlines folded.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let message = self.message.split('\n').map(str::trim).collect::<Vec<_>>().join("; ");
        write!(f, "error[{}]: {message}", self.category.as_str())
    }
}

impl std::error::Error for CliError {}

impl From<gptft::Error> for CliError {
    fn from(e: gptft::Error) -> Self {
        use gptft::Error as E;
        let category = match &e {
            E::Io { .. } => Category::Io,
            E::Json(_) | E::EmptyInput(_) | E::DatasetTooSmall { .. } | E::LabelOutOfRange { .. } => Category::Input,
            E::BadMagic
            | E::UnsupportedVersion(_)
            | E::MissingTensor(_)
            | E::TensorShape { .. }
            | E::Checkpoint(_) => Category::Checkpoint,
            E::Tokenizer(_) | E::TokenOutOfRange { .. } => Category::Tokenizer,
            E::RuleSet { .. } => Category::Rules,
            E::InvalidConfig(_) | E::UnknownName { .. } => Category::Config,
            E::NonFiniteLoss { .. } => Category::Training,
            _ => Category::Model,
        };
        CliError::new(category, e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
