//! Behavior specs: trait-like declarations whose methods carry test rules
//! and test cases, compiled through method tables.
//!
//! Compilation builds a native table per spec in inheritance order, resolves
//! multi-parent merges by specific name, populates one c-table per virtual
//! signature (definition looked up by concrete spec, not per-instance
//! v-table), derives cast and parent tables, extracts the contractor of
//! every concrete spec, binds implementers, then runs every test case —
//! firing rules on each recorded invocation. A failing test fails the
//! compilation.

pub mod ast;
mod implementer;
mod interp;
pub mod parser;
mod runner;
mod tables;

pub use implementer::{builtin_implementers, Implementer, ImplementerRegistry, NativeCtx, NativeValue};
pub use interp::{render_value, InstanceRef, SpecInstance, Value};
pub use runner::{TestOutcome, TestReport};
pub use tables::{Contractor, TableEntry, TableSet};

use indexmap::IndexMap;
use thiserror::Error;

use ast::SpecDecl;

/// Source text of the base spec, the boolean spec and the text spec that
/// every program builds on. A user file may redeclare any of them; the
/// user's version wins.
pub const PRELUDE_SOURCE: &str = include_str!("../../fixtures/prelude.spec");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("inheritance cycle through {0:?}")]
    CyclicInheritance(Vec<String>),
    #[error("spec {0} is not declared")]
    UnknownSpec(String),
    #[error("spec {0} is declared twice")]
    DuplicateSpec(String),
    #[error("{spec}.{member} widens the inherited access level")]
    AccessWidening { spec: String, member: String },
    #[error("{spec} references undefined member {member}")]
    UndefinedMember { spec: String, member: String },
    #[error("invalid override in {spec}: {message}")]
    InvalidOverride { spec: String, message: String },
    #[error("concrete spec {spec} leaves {member} abstract")]
    AbstractUnresolved { spec: String, member: String },
    #[error("cast of a {spec} instance outside its parent table: {target}")]
    CastOutsideParentTable { spec: String, target: String },
    #[error("abstract call: {member} has no definition for {spec}")]
    AbstractCall { spec: String, member: String },
    #[error("access violation: {member} is {access} to {spec}")]
    AccessViolation { spec: String, member: String, access: String },
    #[error("implementer {implementer} does not cover {member}")]
    MissingImplementerMember { implementer: String, member: String },
    #[error("no usable implementer for {spec}: {detail}")]
    NoSuchImplementer { spec: String, detail: String },
    #[error("undefined name {0}")]
    UndefinedName(String),
    #[error("condition is not a Bool instance: {0}")]
    NonBoolCondition(String),
    #[error("statement budget exhausted in {0}; a while loop may not terminate")]
    NonTermination(String),
    #[error("native failure in {member}: {message}")]
    NativeFailure { member: String, message: String },
    #[error("{0}")]
    Other(String),
}

/// Why a compilation stopped, with the first failing test when the failure
/// came from the test run.
#[derive(Debug)]
pub struct CompileFailure {
    pub stage: &'static str,
    pub error: SpecError,
    pub first_failure: Option<TestOutcome>,
    pub report: Option<TestReport>,
}

impl std::fmt::Display for CompileFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "compilation failed at {}: {}", self.stage, self.error)?;
        if let Some(failure) = &self.first_failure {
            write!(f, "\n  first failing test: {} {} {}", failure.spec, failure.owner, failure.test)?;
            if !failure.context.is_empty() {
                write!(f, " — {}", failure.context)?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for CompileFailure {}

#[derive(Debug, Clone)]
pub struct CompileOptions {
    /// Implementer name chosen per concrete spec; a spec with exactly one
    /// registered implementer binds it by default.
    pub implementer_choice: IndexMap<String, String>,
    /// Targets to mark `[violate]` before building: a spec name, a method
    /// name, or `Spec.Method`.
    pub violates: Vec<String>,
    pub include_prelude: bool,
    /// Recorded invocations per pair-rule target.
    pub pair_cap: usize,
    /// Statement budget per body evaluation.
    pub step_budget: u64,
    pub run_tests: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            implementer_choice: IndexMap::new(),
            violates: Vec::new(),
            include_prelude: true,
            pair_cap: 64,
            step_budget: 1_000_000,
            run_tests: true,
        }
    }
}

/// A compiled program: every table built, implementers bound, constants
/// constructed and the full test run green (or skipped when asked).
pub struct CompiledProgram {
    pub specs: IndexMap<String, SpecDecl>,
    pub tables: TableSet,
    pub bindings: IndexMap<String, implementer::BoundImplementer>,
    pub constants: IndexMap<(String, String), InstanceRef>,
    pub report: TestReport,
    pub options: CompileOptions,
}

impl CompiledProgram {
    /// Rows of the cast table viewing `child` as `parent`, rendered as
    /// (signature, definition) strings.
    pub fn cast_table_rows(&self, child: &str, parent: &str) -> Result<Vec<(String, String)>, SpecError> {
        self.tables.cast_table_rows(child, parent)
    }

    pub fn contractor(&self, spec: &str) -> Option<&Contractor> {
        self.tables.contractors.get(spec)
    }

    /// Evaluates a call expression outside any test session and renders the
    /// result.
    pub fn eval_call(&self, text: &str) -> Result<String, SpecError> {
        let expr = parser::parse_call_expr(text)?;
        let mut interp = interp::Interp::new(self, None);
        let value = interp.eval_expr_external(&expr)?;
        Ok(match value {
            Some(v) => render_value(&v),
            None => "void".to_string(),
        })
    }

    /// Virtual dispatch of a zero-argument method on a fresh instance of a
    /// concrete spec, viewed through an ancestor. Exposed for table tests.
    pub fn dispatch_on_fresh(&self, concrete: &str, view: &str, method: &str) -> Result<String, SpecError> {
        let expr_text = if view == concrete {
            format!("{concrete}().{method}()")
        } else {
            format!("(({view}) {concrete}()).{method}()")
        };
        self.eval_call(&expr_text)
    }
}

/// Parses source, applies violates, builds tables, binds implementers and
/// runs the integrated tests.
pub fn compile(
    source: &str,
    implementers: &ImplementerRegistry,
    options: CompileOptions,
) -> Result<CompiledProgram, CompileFailure> {
    let fail = |stage: &'static str, error: SpecError| CompileFailure {
        stage,
        error,
        first_failure: None,
        report: None,
    };

    let mut decls = parser::parse_specs(source).map_err(|e| fail("parse", e))?;
    if options.include_prelude {
        let user_names: Vec<String> = decls.iter().map(|d| d.name.clone()).collect();
        let prelude = parser::parse_specs(PRELUDE_SOURCE).expect("prelude parses");
        let mut merged: Vec<SpecDecl> = prelude.into_iter().filter(|d| !user_names.contains(&d.name)).collect();
        merged.append(&mut decls);
        decls = merged;
    }
    for target in &options.violates {
        apply_violate(&mut decls, target);
    }

    let mut specs: IndexMap<String, SpecDecl> = IndexMap::new();
    for decl in decls {
        if specs.contains_key(&decl.name) {
            return Err(fail("parse", SpecError::DuplicateSpec(decl.name)));
        }
        specs.insert(decl.name.clone(), decl);
    }

    let tables = tables::build_tables(&specs).map_err(|e| fail("tables", e))?;
    tables::static_check(&specs, &tables).map_err(|e| fail("resolution", e))?;

    let bindings = implementer::bind_all(&specs, &tables, implementers, &options.implementer_choice)
        .map_err(|e| fail("binding", e))?;

    let mut program = CompiledProgram {
        specs,
        tables,
        bindings,
        constants: IndexMap::new(),
        report: TestReport::default(),
        options,
    };

    runner::construct_constants(&mut program).map_err(|e| fail("constants", e))?;

    if program.options.run_tests {
        let report = runner::run_tests(&mut program).map_err(|e| fail("tests", e))?;
        if let Some(first) = report.first_failure().cloned() {
            return Err(CompileFailure {
                stage: "tests",
                error: SpecError::Other(format!(
                    "test {} on {} {} failed",
                    first.test, first.spec, first.owner
                )),
                first_failure: Some(first),
                report: Some(report),
            });
        }
        program.report = report;
    }
    Ok(program)
}

/// Runs the test phase of an already-built program and reports per-test
/// outcomes without failing.
pub fn run_tests(program: &mut CompiledProgram) -> Result<TestReport, SpecError> {
    runner::run_tests(program)
}

fn apply_violate(decls: &mut [SpecDecl], target: &str) {
    let (spec_filter, method) = match target.split_once('.') {
        Some((s, m)) => (Some(s), m),
        None => (None, target),
    };
    for decl in decls.iter_mut() {
        if let Some(wanted) = spec_filter {
            if decl.name != wanted {
                continue;
            }
        }
        if spec_filter.is_none() && decl.name == method {
            decl.violate_all = true;
            continue;
        }
        for m in decl.methods.iter_mut() {
            let display = match m.signature.name.as_str() {
                ast::CTOR_NAME => decl.name.clone(),
                ast::DTOR_NAME => format!("~{}", decl.name),
                other => other.to_string(),
            };
            if display == method {
                m.violate = true;
            }
        }
    }
}
