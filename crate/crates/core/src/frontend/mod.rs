//! Concrete syntax: lexer, parser, pretty-printer, source diagnostics.
//!
//! Files use extension `.cll`, UTF-8 text, line comments `--`. A file is
//! either a bare process or a list of `name = proc` definitions with a
//! mandatory `main`; definitions are non-recursive macros.

mod lexer;
mod parser;
mod printer;

pub use lexer::{Token, TokenKind};
pub use parser::{parse_process, parse_program, ParseOptions};
pub use printer::{pretty, pretty_type};

use serde::{Deserialize, Serialize};

/// A source file plus its parsing options.
#[derive(Debug, Clone)]
pub struct SourceProgram {
    pub filename: String,
    pub text: String,
    pub options: ParseOptions,
}

impl SourceProgram {
    pub fn new(filename: impl Into<String>, text: impl Into<String>) -> Self {
        SourceProgram {
            filename: filename.into(),
            text: text.into(),
            options: ParseOptions::default(),
        }
    }

    pub fn allow_runtime_syntax(mut self) -> Self {
        self.options.allow_runtime_syntax = true;
        self
    }

    pub fn parse(&self) -> Result<crate::Process, Vec<Diagnostic>> {
        parse_program(&self.text, self.options)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A parser or checker message anchored to a byte range of the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub start: usize,
    pub end: usize,
    pub message: String,
    pub rule: Option<String>,
}

impl Diagnostic {
    pub fn error(start: usize, end: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            start,
            end,
            message: message.into(),
            rule: None,
        }
    }
}
