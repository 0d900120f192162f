//! Source locations for parse diagnostics.

use std::fmt;

/// A location range inside one input file. Columns are 1-based and count
/// characters, matching what editors display.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl SourceSpan {
    pub fn new(file: &str, line: usize, col_start: usize, col_end: usize) -> SourceSpan {
        SourceSpan {
            file: file.to_string(),
            line,
            col_start,
            col_end,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}-{}",
            self.file, self.line, self.col_start, self.col_end
        )
    }
}
