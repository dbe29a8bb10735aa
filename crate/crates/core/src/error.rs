use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("raw file is {actual} bytes, geometry requires {expected}")]
    SizeMismatch { expected: u64, actual: u64 },

    #[error("sample {value} at index {index} does not fit in {bit_depth} bits")]
    SampleRange {
        index: usize,
        value: i64,
        bit_depth: u8,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no residuals pushed since the last line was finalized")]
    EmptyLine,

    #[error("corrupt bitstream: {0}")]
    Corrupt(String),
}
