//! Declaration model for specs: methods with signatures, test rules and
//! cases, constants and fields, plus the statement language bodies run in.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Access {
    Public,
    Protected,
    Private,
}

impl fmt::Display for Access {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Access::Public => write!(f, "public"),
            Access::Protected => write!(f, "protected"),
            Access::Private => write!(f, "private"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Abstract,
    Virtual,
    Specific,
    Object,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSig {
    pub spec: String,
    pub is_const: bool,
    pub name: Option<String>,
}

/// Canonical name used inside signature keys for constructors and the
/// destructor; the declared spec name never appears there, so signatures
/// align across an inheritance chain.
pub const CTOR_NAME: &str = "<ctor>";
pub const DTOR_NAME: &str = "<dtor>";

/// A method identity: name plus parameter specs. The return spec is not
/// part of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSignature {
    pub name: String,
    pub params: Vec<ParamSig>,
    pub is_const: bool,
}

impl MethodSignature {
    pub fn key(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|p| if p.is_const { format!("const {}", p.spec) } else { p.spec.clone() })
            .collect();
        format!("{}({})", self.name, params.join(", "))
    }

    pub fn is_ctor(&self) -> bool {
        self.name == CTOR_NAME
    }

    pub fn is_dtor(&self) -> bool {
        self.name == DTOR_NAME
    }

    /// Renders the signature as seen through a spec: constructors and the
    /// destructor take that spec's name.
    pub fn display(&self, view: &str) -> String {
        let shown = match self.name.as_str() {
            CTOR_NAME => view.to_string(),
            DTOR_NAME => format!("~{view}"),
            other => other.to_string(),
        };
        let params: Vec<String> = self
            .params
            .iter()
            .map(|p| if p.is_const { format!("const {}", p.spec) } else { p.spec.clone() })
            .collect();
        let constness = if self.is_const { " const" } else { "" };
        format!("{shown}({}){constness}", params.join(", "))
    }
}

/// A signature reference appearing in an attribute payload, before the
/// constructor/destructor names are normalized against known specs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigRef {
    pub name: String,
    pub params: Vec<ParamSig>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleTarget {
    This,
    Other,
    Sig(SigRef),
}

#[derive(Debug, Clone)]
pub struct MethodDecl {
    pub signature: MethodSignature,
    pub return_spec: String,
    pub access: Access,
    pub is_static: bool,
    pub kind: MethodKind,
    pub body: Option<Block>,
    /// `: Target(args)` constructor delegation.
    pub delegation: Option<(String, Vec<Expr>)>,
    pub overrides: Vec<SigRef>,
    pub has_override_attr: bool,
    pub case_marker: bool,
    pub violate: bool,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct RuleDecl {
    pub name: String,
    pub targets: Vec<RuleTarget>,
    pub params: Vec<ParamSig>,
    pub return_spec: String,
    pub body: Block,
    pub violate: bool,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct CaseDecl {
    pub return_spec: String,
    pub body: Block,
    pub violate: bool,
    /// Signature key of the method declared immediately before the case.
    pub owner_key: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct ConstantDecl {
    pub name: String,
    pub spec: String,
    pub literal: String,
    pub case_marker: bool,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub name: String,
    pub spec: String,
    pub access: Access,
    pub is_static: bool,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct SpecDecl {
    pub name: String,
    pub parents: Vec<String>,
    pub is_concrete: bool,
    pub concrete_target: Option<String>,
    pub methods: Vec<MethodDecl>,
    pub rules: Vec<RuleDecl>,
    pub cases: Vec<CaseDecl>,
    pub constants: Vec<ConstantDecl>,
    pub fields: Vec<FieldDecl>,
    pub violate_all: bool,
    pub line: usize,
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone)]
pub enum Stmt {
    Local { spec: String, name: String, init: Expr },
    Assign { target: AssignTarget, value: Expr },
    Expr(Expr),
    Return(Option<Expr>),
    Break,
    While { cond: Expr, body: Block },
    If { cond: Expr, then_body: Block, else_body: Option<Block> },
}

#[derive(Debug, Clone)]
pub enum AssignTarget {
    Local(String),
    Field(String),
}

#[derive(Debug, Clone)]
pub enum Expr {
    This,
    /// Parameter, local, constant, or the global `true`/`false` constants.
    Name(String),
    StrLit(String),
    /// `recv.Method(args)`; a `specific` spec pins the definition directly.
    Call { recv: Box<Expr>, specific: Option<String>, method: String, args: Vec<Expr> },
    /// `Name(args)` — construction when the name is a spec.
    FreeCall { name: String, args: Vec<Expr> },
    /// `((Spec) expr)` view change.
    Cast { spec: String, expr: Box<Expr> },
    /// `recv.name` — a field read, or a qualified constant when `recv` is a
    /// spec name.
    Member { recv: Box<Expr>, name: String },
}
