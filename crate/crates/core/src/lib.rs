//! Static backward slicing for executable VDM-SL specifications.
//!
//! ```
//! use vdmslice::{Specification, slicer::{Criterion, Target, UpdateMode}};
//!
//! let src = "state S of a : nat b : nat init s == s = mk_S(0, 0) end
//! operations
//!   op : () ==> nat
//!   op() == (a := 1; b := 2; return a)";
//! let spec = Specification::parse(src).unwrap();
//! let result = spec
//!     .slice(&Criterion::new("op", Target::ReturnValue), UpdateMode::Weak)
//!     .unwrap();
//! let lines: Vec<u32> = result.spans(&spec.document).iter().map(|(_, _, s)| s.start.line).collect();
//! assert_eq!(lines, [4, 4]);
//! ```

pub mod api;
pub mod binder;
pub mod cli;
pub mod interp;
pub mod parser;
pub mod report;
pub mod slicer;
pub mod syntax;

use thiserror::Error;

use binder::{BindError, SymbolTable};
use interp::{Interpreter, Outcome, RunOptions, Value};
use parser::ParseError;
use slicer::{Criterion, CriterionError, SliceOptions, SliceResult, UpdateMode};
use syntax::{Document, Span};

#[derive(Clone, Debug, Error)]
pub enum LoadError {
    #[error("{} parse error(s)", .0.len())]
    Parse(Vec<ParseError>),
    #[error("{} name resolution error(s)", .0.len())]
    Bind(Vec<BindError>),
}

impl LoadError {
    pub fn diagnostics(&self) -> Vec<(Span, String)> {
        match self {
            LoadError::Parse(es) => es.iter().map(|e| (e.span, e.message.clone())).collect(),
            LoadError::Bind(es) => es.iter().map(|e| (e.span, e.message.clone())).collect(),
        }
    }
}

/// A parsed and name-resolved document.
#[derive(Clone, Debug)]
pub struct Specification {
    pub document: Document,
    pub symbols: SymbolTable,
}

impl Specification {
    pub fn parse(source: &str) -> Result<Self, LoadError> {
        let document = parser::parse_document(source).map_err(LoadError::Parse)?;
        let symbols = binder::bind(&document).map_err(LoadError::Bind)?;
        Ok(Specification { document, symbols })
    }

    pub fn slice(&self, criterion: &Criterion, mode: UpdateMode) -> Result<SliceResult, CriterionError> {
        slicer::slice(&self.document, &self.symbols, criterion, SliceOptions { mode })
    }

    /// Calls `operation` on a fresh state.
    pub fn run(&self, operation: &str, args: Vec<Value>, options: RunOptions) -> Outcome {
        match Interpreter::new(&self.document, &self.symbols, options) {
            Ok(mut it) => it.call_operation(operation, args),
            Err(outcome) => outcome,
        }
    }

    /// Like [`run`](Self::run), also returning the interpreter for state inspection.
    pub fn interpreter(&self, options: RunOptions) -> Result<Interpreter<'_>, Outcome> {
        Interpreter::new(&self.document, &self.symbols, options)
    }
}
