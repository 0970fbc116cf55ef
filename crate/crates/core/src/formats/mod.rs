//! Wire and persisted encodings for expressive streams: line arrays for
//! transport, tab-delimited text for files shared with spreadsheet-style
//! tools, and the cross-language type-name mapping.

mod lines;
mod tab;
mod typemap;

pub use lines::{lines_decode, lines_encode, LinesHeader, CANONICAL_LANG};
pub use tab::{tab_read, tab_write, tab_write_stream, TabLayout};
pub use typemap::{map_stream_types, map_type_name, TypeNameMap, BUILTIN_TYPEMAP};

use thiserror::Error;

use crate::object_model::ObjectError;
use crate::serializer::SerialError;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed stream header: {0}")]
    MalformedHeader(String),
    #[error("malformed line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("name line {line} does not follow a type line")]
    NameLineWithoutTypeLine { line: usize },
    #[error("data line {line} does not follow a type/name header pair")]
    DataLineWithoutHeader { line: usize },
    #[error("block at line {line} holds {cells} data cells for {columns} columns")]
    ColumnCountMismatch { line: usize, cells: usize, columns: usize },
    #[error("no {language} mapping for type name {name}")]
    UnmappedTypeName { language: String, name: String },
    #[error("language {0} is not present in the type map")]
    UnknownLanguage(String),
    #[error("type map is not injective for {language}: {name} appears twice")]
    DuplicateMapping { language: String, name: String },
    #[error(transparent)]
    Serial(#[from] SerialError),
    #[error(transparent)]
    Object(#[from] ObjectError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
