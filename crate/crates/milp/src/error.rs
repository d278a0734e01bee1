use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("duplicate column name `{0}`")]
    DuplicateName(String),
    #[error("invalid column `{0}` (bounds or objective)")]
    InvalidColumn(String),
    #[error("invalid row `{0}` (unknown column or non-finite value)")]
    InvalidRow(String),
    #[error("LP kernel stalled after {iterations} iterations: {message}")]
    NumericalStall { iterations: usize, message: String },
    #[error("brute force refuses {0} binaries (limit {1})")]
    TooManyBinaries(usize, usize),
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
    #[error("LP parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
