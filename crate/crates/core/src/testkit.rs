//! A slim log-based test harness: categories, pass/fail cases with call-site
//! context, comments, and a tallied summary. No assertion DSL — the caller
//! decides whether to continue after a failure.

use std::panic::Location;

/// Captures a call-site label for categories and failing cases. The default
/// uses the caller's file and line.
pub type CaptureHook = Box<dyn Fn(&Location<'_>) -> String>;

fn default_capture(location: &Location<'_>) -> String {
    format!("{}:{}", location.file(), location.line())
}

#[derive(Debug, Clone)]
pub struct CaseEntry {
    pub name: String,
    pub passed: bool,
    pub context: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Category {
    pub name: String,
    pub origin: String,
    pub cases: Vec<CaseEntry>,
    pub comments: Vec<String>,
}

pub struct TestLog {
    categories: Vec<Category>,
    capture: CaptureHook,
}

impl Default for TestLog {
    fn default() -> Self {
        Self::new()
    }
}

impl TestLog {
    pub fn new() -> Self {
        TestLog { categories: Vec::new(), capture: Box::new(|l| default_capture(l)) }
    }

    pub fn with_capture(capture: CaptureHook) -> Self {
        TestLog { categories: Vec::new(), capture }
    }

    /// Opens a category for the cases that follow.
    #[track_caller]
    pub fn category(&mut self, name: &str) {
        let origin = (self.capture)(Location::caller());
        self.categories.push(Category { name: name.to_string(), origin, cases: Vec::new(), comments: Vec::new() });
    }

    fn current(&mut self) -> &mut Category {
        if self.categories.is_empty() {
            self.categories.push(Category {
                name: "default".to_string(),
                origin: String::new(),
                cases: Vec::new(),
                comments: Vec::new(),
            });
        }
        self.categories.last_mut().expect("category exists")
    }

    /// Records one case; the call site is logged when it fails. Returns the
    /// outcome so the caller can decide whether to go on.
    #[track_caller]
    pub fn check(&mut self, name: &str, outcome: bool) -> bool {
        let context = if outcome { None } else { Some((self.capture)(Location::caller())) };
        self.current().cases.push(CaseEntry { name: name.to_string(), passed: outcome, context });
        outcome
    }

    pub fn comment(&mut self, text: &str) {
        self.current().comments.push(text.to_string());
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    /// Merges another log's categories after this one's.
    pub fn merge(&mut self, other: TestLog) {
        self.categories.extend(other.categories);
    }

    pub fn totals(&self) -> (usize, usize) {
        let mut passed = 0;
        let mut failed = 0;
        for category in &self.categories {
            for case in &category.cases {
                if case.passed {
                    passed += 1;
                } else {
                    failed += 1;
                }
            }
        }
        (passed, failed)
    }

    /// Renders the report: one line per category, failure contexts, comments,
    /// then the machine-readable tally line.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for category in &self.categories {
            let passed = category.cases.iter().filter(|c| c.passed).count();
            let total = category.cases.len();
            out.push_str(&format!("{}: {passed}/{total}", category.name));
            if !category.origin.is_empty() {
                out.push_str(&format!("  ({})", category.origin));
            }
            out.push('\n');
            for case in &category.cases {
                if !case.passed {
                    let context = case.context.as_deref().unwrap_or("");
                    out.push_str(&format!("  FAIL {} {context}\n", case.name));
                }
            }
            for comment in &category.comments {
                out.push_str(&format!("  # {comment}\n"));
            }
        }
        let (passed, failed) = self.totals();
        out.push_str(&format!("{passed} passed, {failed} failed\n"));
        out.push_str(&format!("#summary {passed} {failed}\n"));
        out
    }
}
