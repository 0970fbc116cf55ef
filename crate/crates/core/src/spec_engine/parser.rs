//! Parser for the spec declaration language: C-flavored blocks with bracket
//! attributes, method declarations with optional bodies, test rules and
//! cases, constants and fields.

use super::ast::*;
use super::SpecError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Str(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, SpecError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tok_line, tok_col) = (line, col);
        let mut advance = |chars: &mut std::iter::Peekable<std::str::Chars>, line: &mut usize, col: &mut usize| {
            let c = chars.next().unwrap();
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            c
        };
        if c.is_whitespace() {
            advance(&mut chars, &mut line, &mut col);
            continue;
        }
        if c == '/' {
            let mut clone = chars.clone();
            clone.next();
            match clone.peek() {
                Some('/') => {
                    while let Some(&n) = chars.peek() {
                        if n == '\n' {
                            break;
                        }
                        advance(&mut chars, &mut line, &mut col);
                    }
                    continue;
                }
                Some('*') => {
                    advance(&mut chars, &mut line, &mut col);
                    advance(&mut chars, &mut line, &mut col);
                    let mut prev = ' ';
                    loop {
                        let Some(&n) = chars.peek() else {
                            return Err(SpecError::Syntax {
                                line: tok_line,
                                col: tok_col,
                                message: "unterminated block comment".into(),
                            });
                        };
                        advance(&mut chars, &mut line, &mut col);
                        if prev == '*' && n == '/' {
                            break;
                        }
                        prev = n;
                    }
                    continue;
                }
                _ => {}
            }
        }
        if c == '"' {
            advance(&mut chars, &mut line, &mut col);
            let mut value = String::new();
            loop {
                let Some(&n) = chars.peek() else {
                    return Err(SpecError::Syntax {
                        line: tok_line,
                        col: tok_col,
                        message: "unterminated string literal".into(),
                    });
                };
                advance(&mut chars, &mut line, &mut col);
                match n {
                    '"' => break,
                    '\\' => {
                        let Some(&esc) = chars.peek() else {
                            return Err(SpecError::Syntax {
                                line: tok_line,
                                col: tok_col,
                                message: "unterminated escape".into(),
                            });
                        };
                        advance(&mut chars, &mut line, &mut col);
                        match esc {
                            'n' => value.push('\n'),
                            't' => value.push('\t'),
                            '"' => value.push('"'),
                            '\\' => value.push('\\'),
                            other => {
                                return Err(SpecError::Syntax {
                                    line: tok_line,
                                    col: tok_col,
                                    message: format!("unknown escape \\{other}"),
                                })
                            }
                        }
                    }
                    other => value.push(other),
                }
            }
            out.push(Spanned { token: Token::Str(value), line: tok_line, col: tok_col });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(&n) = chars.peek() {
                if n.is_ascii_alphanumeric() || n == '_' {
                    ident.push(advance(&mut chars, &mut line, &mut col));
                } else {
                    break;
                }
            }
            out.push(Spanned { token: Token::Ident(ident), line: tok_line, col: tok_col });
            continue;
        }
        let punct = advance(&mut chars, &mut line, &mut col);
        out.push(Spanned { token: Token::Punct(punct), line: tok_line, col: tok_col });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    /// Name of the spec currently being parsed; constructors take it.
    current_spec: String,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|s| &s.token)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset).map(|s| &s.token)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|s| (s.line, s.col))
            .unwrap_or((0, 0))
    }

    fn error(&self, message: impl Into<String>) -> SpecError {
        let (line, col) = self.here();
        SpecError::Syntax { line, col, message: message.into() }
    }

    fn next(&mut self) -> Result<Token, SpecError> {
        let token = self.peek().cloned().ok_or_else(|| self.error("unexpected end of input"))?;
        self.pos += 1;
        Ok(token)
    }

    fn eat_punct(&mut self, c: char) -> Result<(), SpecError> {
        match self.next()? {
            Token::Punct(p) if p == c => Ok(()),
            other => {
                self.pos -= 1;
                Err(self.error(format!("expected `{c}`, found {other:?}")))
            }
        }
    }

    fn try_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Token::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn try_ident(&mut self, word: &str) -> bool {
        if let Some(Token::Ident(i)) = self.peek() {
            if i == word {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn expect_ident(&mut self) -> Result<String, SpecError> {
        match self.next()? {
            Token::Ident(i) => Ok(i),
            other => {
                self.pos -= 1;
                Err(self.error(format!("expected an identifier, found {other:?}")))
            }
        }
    }

    fn line(&self) -> usize {
        self.here().0
    }
}

/// Attributes collected before a declaration.
#[derive(Debug, Default, Clone)]
struct Attrs {
    is_abstract: bool,
    is_specific: bool,
    is_object: bool,
    violate: bool,
    overrides: Vec<SigRef>,
    has_override: bool,
    concrete: Option<Option<String>>,
    rule_targets: Option<Vec<RuleTarget>>,
    case_this: bool,
    case_anon: bool,
}

pub fn parse_specs(text: &str) -> Result<Vec<SpecDecl>, SpecError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0, current_spec: String::new() };
    let mut specs = Vec::new();
    while parser.peek().is_some() {
        let attrs = parse_attrs(&mut parser)?;
        specs.push(parse_spec(&mut parser, attrs)?);
    }
    Ok(specs)
}

fn parse_attrs(p: &mut Parser) -> Result<Attrs, SpecError> {
    let mut attrs = Attrs::default();
    while p.try_punct('[') {
        let name = p.expect_ident()?;
        match name.as_str() {
            "abstract" => attrs.is_abstract = true,
            "specific" => attrs.is_specific = true,
            "object" => attrs.is_object = true,
            "violate" => attrs.violate = true,
            "override" => {
                attrs.has_override = true;
                if p.try_punct('(') {
                    attrs.overrides.push(parse_sig_ref(p)?);
                    p.eat_punct(')')?;
                }
            }
            "concrete" => {
                let target = if p.try_punct('(') {
                    let t = p.expect_ident()?;
                    p.eat_punct(')')?;
                    Some(t)
                } else {
                    None
                };
                attrs.concrete = Some(target);
            }
            "rule" => {
                p.eat_punct('(')?;
                let mut targets = Vec::new();
                loop {
                    targets.push(parse_rule_target(p)?);
                    if !p.try_punct(',') {
                        break;
                    }
                }
                p.eat_punct(')')?;
                attrs.rule_targets = Some(targets);
            }
            "case" => {
                if p.try_punct('(') {
                    if !p.try_ident("this") {
                        return Err(p.error("expected `this` in case attribute"));
                    }
                    p.eat_punct(')')?;
                    attrs.case_this = true;
                } else {
                    attrs.case_anon = true;
                }
            }
            other => return Err(p.error(format!("unknown attribute `{other}`"))),
        }
        p.eat_punct(']')?;
    }
    Ok(attrs)
}

fn parse_rule_target(p: &mut Parser) -> Result<RuleTarget, SpecError> {
    if let Some(Token::Ident(word)) = p.peek() {
        // `this` and `other` bind instances rather than signatures, unless
        // they open a signature reference
        if word == "this" && p.peek_at(1) != Some(&Token::Punct('(')) {
            p.pos += 1;
            return Ok(RuleTarget::This);
        }
        if word == "other" && p.peek_at(1) != Some(&Token::Punct('(')) {
            p.pos += 1;
            return Ok(RuleTarget::Other);
        }
    }
    Ok(RuleTarget::Sig(parse_sig_ref(p)?))
}

/// `Name(const A, B)` or `~Name()`.
fn parse_sig_ref(p: &mut Parser) -> Result<SigRef, SpecError> {
    let tilde = p.try_punct('~');
    let base = p.expect_ident()?;
    let name = if tilde { format!("~{base}") } else { base };
    p.eat_punct('(')?;
    let mut params = Vec::new();
    if !p.try_punct(')') {
        loop {
            let is_const = p.try_ident("const");
            let spec = p.expect_ident()?;
            params.push(ParamSig { spec, is_const, name: None });
            if !p.try_punct(',') {
                break;
            }
        }
        p.eat_punct(')')?;
    }
    Ok(SigRef { name, params })
}

fn parse_spec(p: &mut Parser, attrs: Attrs) -> Result<SpecDecl, SpecError> {
    let line = p.line();
    if !p.try_ident("spec") {
        return Err(p.error("expected `spec`"));
    }
    let name = p.expect_ident()?;
    p.current_spec = name.clone();
    let mut parents = Vec::new();
    if p.try_punct(':') {
        loop {
            parents.push(p.expect_ident()?);
            if !p.try_punct(',') {
                break;
            }
        }
    }
    p.eat_punct('{')?;
    let mut spec = SpecDecl {
        name,
        parents,
        is_concrete: attrs.concrete.is_some(),
        concrete_target: attrs.concrete.flatten(),
        methods: Vec::new(),
        rules: Vec::new(),
        cases: Vec::new(),
        constants: Vec::new(),
        fields: Vec::new(),
        violate_all: attrs.violate,
        line,
    };
    while !p.try_punct('}') {
        parse_member(p, &mut spec)?;
    }
    Ok(spec)
}

fn parse_access(p: &mut Parser) -> Option<Access> {
    if p.try_ident("public") {
        Some(Access::Public)
    } else if p.try_ident("protected") {
        Some(Access::Protected)
    } else if p.try_ident("private") {
        Some(Access::Private)
    } else {
        None
    }
}

fn parse_member(p: &mut Parser, spec: &mut SpecDecl) -> Result<(), SpecError> {
    let line = p.line();
    let attrs = parse_attrs(p)?;

    if let Some(targets) = attrs.rule_targets.clone() {
        return parse_rule(p, spec, attrs, targets, line);
    }
    if attrs.case_anon {
        return parse_anonymous_case(p, spec, attrs, line);
    }

    let access = parse_access(p).unwrap_or(Access::Public);
    let is_static = p.try_ident("static");

    if p.try_ident("const") {
        // `public static const Bool true("true");`
        let const_spec = p.expect_ident()?;
        let const_name = p.expect_ident()?;
        p.eat_punct('(')?;
        let literal = match p.next()? {
            Token::Str(s) => s,
            other => {
                p.pos -= 1;
                return Err(p.error(format!("expected a string literal, found {other:?}")));
            }
        };
        p.eat_punct(')')?;
        p.eat_punct(';')?;
        spec.constants.push(ConstantDecl {
            name: const_name,
            spec: const_spec,
            literal,
            case_marker: attrs.case_this,
            line,
        });
        return Ok(());
    }

    // Distinguish destructor, constructor, method and field by shape.
    let is_dtor = p.try_punct('~');
    if is_dtor {
        let dtor_spec = p.expect_ident()?;
        if dtor_spec != spec.name {
            return Err(p.error(format!("destructor ~{dtor_spec} in spec {}", spec.name)));
        }
        let signature = MethodSignature { name: DTOR_NAME.into(), params: parse_params(p)?, is_const: false };
        return finish_method(p, spec, attrs, access, is_static, signature, "Void".into(), line);
    }

    let first = p.expect_ident()?;
    if p.peek() == Some(&Token::Punct('(')) {
        // constructor: the name equals the spec
        if first != spec.name {
            return Err(p.error(format!("constructor {first} in spec {}", spec.name)));
        }
        let signature = MethodSignature { name: CTOR_NAME.into(), params: parse_params(p)?, is_const: false };
        let return_spec = spec.name.clone();
        return finish_method(p, spec, attrs, access, is_static, signature, return_spec, line);
    }

    let second = p.expect_ident()?;
    if p.peek() == Some(&Token::Punct('(')) {
        let signature = MethodSignature { name: second, params: parse_params(p)?, is_const: false };
        return finish_method(p, spec, attrs, access, is_static, signature, first, line);
    }

    // field: `private Bool flag;`
    p.eat_punct(';')?;
    spec.fields.push(FieldDecl { name: second, spec: first, access, is_static, line });
    Ok(())
}

fn parse_params(p: &mut Parser) -> Result<Vec<ParamSig>, SpecError> {
    p.eat_punct('(')?;
    let mut params = Vec::new();
    if p.try_punct(')') {
        return Ok(params);
    }
    loop {
        let is_const = p.try_ident("const");
        let spec = p.expect_ident()?;
        let name = match p.peek() {
            Some(Token::Ident(_)) => Some(p.expect_ident()?),
            _ => None,
        };
        params.push(ParamSig { spec, is_const, name });
        if !p.try_punct(',') {
            break;
        }
    }
    p.eat_punct(')')?;
    Ok(params)
}

#[allow(clippy::too_many_arguments)]
fn finish_method(
    p: &mut Parser,
    spec: &mut SpecDecl,
    attrs: Attrs,
    access: Access,
    is_static: bool,
    mut signature: MethodSignature,
    return_spec: String,
    line: usize,
) -> Result<(), SpecError> {
    signature.is_const = p.try_ident("const");

    let delegation = if p.try_punct(':') {
        let target = p.expect_ident()?;
        p.eat_punct('(')?;
        let mut args = Vec::new();
        if !p.try_punct(')') {
            loop {
                args.push(parse_expr(p)?);
                if !p.try_punct(',') {
                    break;
                }
            }
            p.eat_punct(')')?;
        }
        Some((target, args))
    } else {
        None
    };

    let body = if p.peek() == Some(&Token::Punct('{')) {
        Some(parse_block(p)?)
    } else {
        p.eat_punct(';')?;
        None
    };

    let kind = if attrs.is_abstract {
        MethodKind::Abstract
    } else if attrs.is_object {
        MethodKind::Object
    } else if attrs.is_specific {
        MethodKind::Specific
    } else {
        MethodKind::Virtual
    };
    if kind == MethodKind::Abstract && (body.is_some() || delegation.is_some()) {
        return Err(p.error(format!("abstract member {} cannot have a body", signature.display(&spec.name))));
    }
    if kind == MethodKind::Object && body.is_some() {
        return Err(p.error(format!(
            "object-domain member {} takes its body from an implementer",
            signature.display(&spec.name)
        )));
    }
    if kind == MethodKind::Virtual && body.is_none() && delegation.is_none() {
        return Err(p.error(format!(
            "member {} needs a body, or an [abstract]/[object] attribute",
            signature.display(&spec.name)
        )));
    }

    spec.methods.push(MethodDecl {
        signature,
        return_spec,
        access,
        is_static,
        kind,
        body,
        delegation,
        overrides: attrs.overrides,
        has_override_attr: attrs.has_override,
        case_marker: attrs.case_this,
        violate: attrs.violate,
        line,
    });
    Ok(())
}

fn parse_rule(
    p: &mut Parser,
    spec: &mut SpecDecl,
    attrs: Attrs,
    targets: Vec<RuleTarget>,
    line: usize,
) -> Result<(), SpecError> {
    let return_spec = p.expect_ident()?;
    let name = p.expect_ident()?;
    let params = parse_params(p)?;
    let body = parse_block(p)?;
    spec.rules.push(RuleDecl { name, targets, params, return_spec, body, violate: attrs.violate, line });
    Ok(())
}

fn parse_anonymous_case(
    p: &mut Parser,
    spec: &mut SpecDecl,
    attrs: Attrs,
    line: usize,
) -> Result<(), SpecError> {
    let return_spec = p.expect_ident()?;
    p.eat_punct('(')?;
    p.eat_punct(')')?;
    let body = parse_block(p)?;
    let owner_key = spec
        .methods
        .last()
        .map(|m| m.signature.key())
        .ok_or_else(|| p.error("anonymous case before any method declaration"))?;
    spec.cases.push(CaseDecl { return_spec, body, violate: attrs.violate, owner_key, line });
    Ok(())
}

fn parse_block(p: &mut Parser) -> Result<Block, SpecError> {
    p.eat_punct('{')?;
    let mut stmts = Vec::new();
    while !p.try_punct('}') {
        stmts.push(parse_stmt(p)?);
    }
    Ok(stmts)
}

fn parse_stmt(p: &mut Parser) -> Result<Stmt, SpecError> {
    if p.try_ident("return") {
        if p.try_punct(';') {
            return Ok(Stmt::Return(None));
        }
        let expr = parse_expr(p)?;
        p.eat_punct(';')?;
        return Ok(Stmt::Return(Some(expr)));
    }
    if p.try_ident("break") {
        p.eat_punct(';')?;
        return Ok(Stmt::Break);
    }
    if p.try_ident("while") {
        p.eat_punct('(')?;
        let cond = parse_expr(p)?;
        p.eat_punct(')')?;
        let body = parse_stmt_or_block(p)?;
        return Ok(Stmt::While { cond, body });
    }
    if p.try_ident("if") {
        p.eat_punct('(')?;
        let cond = parse_expr(p)?;
        p.eat_punct(')')?;
        let then_body = parse_stmt_or_block(p)?;
        let else_body = if p.try_ident("else") { Some(parse_stmt_or_block(p)?) } else { None };
        return Ok(Stmt::If { cond, then_body, else_body });
    }
    // `Spec name = expr;` local declaration
    if let (Some(Token::Ident(_)), Some(Token::Ident(_)), Some(Token::Punct('='))) =
        (p.peek(), p.peek_at(1), p.peek_at(2))
    {
        let spec = p.expect_ident()?;
        let name = p.expect_ident()?;
        p.eat_punct('=')?;
        let init = parse_expr(p)?;
        p.eat_punct(';')?;
        return Ok(Stmt::Local { spec, name, init });
    }
    // `name = expr;` assignment
    if let (Some(Token::Ident(_)), Some(Token::Punct('='))) = (p.peek(), p.peek_at(1)) {
        let name = p.expect_ident()?;
        p.eat_punct('=')?;
        let value = parse_expr(p)?;
        p.eat_punct(';')?;
        return Ok(Stmt::Assign { target: AssignTarget::Local(name), value });
    }
    // `this.field = expr;` field assignment
    if p.peek() == Some(&Token::Ident("this".into()))
        && p.peek_at(1) == Some(&Token::Punct('.'))
        && matches!(p.peek_at(2), Some(Token::Ident(_)))
        && p.peek_at(3) == Some(&Token::Punct('='))
    {
        p.pos += 2;
        let field = p.expect_ident()?;
        p.eat_punct('=')?;
        let value = parse_expr(p)?;
        p.eat_punct(';')?;
        return Ok(Stmt::Assign { target: AssignTarget::Field(field), value });
    }
    let expr = parse_expr(p)?;
    p.eat_punct(';')?;
    Ok(Stmt::Expr(expr))
}

fn parse_stmt_or_block(p: &mut Parser) -> Result<Block, SpecError> {
    if p.peek() == Some(&Token::Punct('{')) {
        parse_block(p)
    } else {
        Ok(vec![parse_stmt(p)?])
    }
}

fn parse_expr(p: &mut Parser) -> Result<Expr, SpecError> {
    let mut expr = parse_primary(p)?;
    loop {
        if p.try_punct('.') {
            let name = p.expect_ident()?;
            if p.peek() == Some(&Token::Punct('(')) {
                let args = parse_args(p)?;
                expr = Expr::Call { recv: Box::new(expr), specific: None, method: name, args };
            } else if p.peek() == Some(&Token::Punct('.'))
                && matches!(p.peek_at(1), Some(Token::Ident(_)))
                && p.peek_at(2) == Some(&Token::Punct('('))
            {
                // `expr.Spec.Method(args)` — a specific-name call
                p.eat_punct('.')?;
                let method = p.expect_ident()?;
                let args = parse_args(p)?;
                expr = Expr::Call { recv: Box::new(expr), specific: Some(name), method, args };
            } else {
                expr = Expr::Member { recv: Box::new(expr), name };
            }
        } else {
            break;
        }
    }
    Ok(expr)
}

fn parse_args(p: &mut Parser) -> Result<Vec<Expr>, SpecError> {
    p.eat_punct('(')?;
    let mut args = Vec::new();
    if p.try_punct(')') {
        return Ok(args);
    }
    loop {
        args.push(parse_expr(p)?);
        if !p.try_punct(',') {
            break;
        }
    }
    p.eat_punct(')')?;
    Ok(args)
}

fn parse_primary(p: &mut Parser) -> Result<Expr, SpecError> {
    if p.try_punct('(') {
        // `((Spec) expr)` cast, or a parenthesized expression
        if p.peek() == Some(&Token::Punct('(')) {
            let save = p.pos;
            p.pos += 1;
            if let (Some(Token::Ident(_)), Some(Token::Punct(')'))) = (p.peek(), p.peek_at(1)) {
                let spec = p.expect_ident()?;
                p.eat_punct(')')?;
                let inner = parse_expr(p)?;
                p.eat_punct(')')?;
                return Ok(Expr::Cast { spec, expr: Box::new(inner) });
            }
            p.pos = save;
        }
        let inner = parse_expr(p)?;
        p.eat_punct(')')?;
        return Ok(inner);
    }
    match p.next()? {
        Token::Ident(word) if word == "this" => Ok(Expr::This),
        Token::Ident(word) => {
            if p.peek() == Some(&Token::Punct('(')) {
                let args = parse_args(p)?;
                Ok(Expr::FreeCall { name: word, args })
            } else {
                Ok(Expr::Name(word))
            }
        }
        Token::Str(s) => Ok(Expr::StrLit(s)),
        other => {
            p.pos -= 1;
            Err(p.error(format!("expected an expression, found {other:?}")))
        }
    }
}

/// Parses a standalone call expression, the entry used by the dispatch
/// command.
pub fn parse_call_expr(text: &str) -> Result<Expr, SpecError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0, current_spec: String::new() };
    let expr = parse_expr(&mut parser)?;
    if parser.peek().is_some() {
        return Err(parser.error("trailing input after expression"));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ispec_figure_fragment() {
        let text = r#"
spec ISpec {
  [abstract] public Bool IsEqual(const ISpec other) const;
  [rule(this)] Bool Self() { return this.IsEqual(this); }
  [rule(IsEqual(const ISpec))] Bool Reciprocal(const ISpec other) {
    if (this.IsEqual(other)) return other.IsEqual(this);
    if (other.IsEqual(this)) return false;
    return true;
  }
}
"#;
        let specs = parse_specs(text).unwrap();
        assert_eq!(specs.len(), 1);
        let ispec = &specs[0];
        assert_eq!(ispec.name, "ISpec");
        assert_eq!(ispec.methods.len(), 1);
        assert_eq!(ispec.methods[0].kind, MethodKind::Abstract);
        assert_eq!(ispec.methods[0].signature.key(), "IsEqual(const ISpec)");
        assert!(ispec.methods[0].signature.is_const);
        assert_eq!(ispec.rules.len(), 2);
        assert_eq!(ispec.rules[0].name, "Self");
        assert_eq!(ispec.rules[0].targets, vec![RuleTarget::This]);
        assert_eq!(ispec.rules[1].name, "Reciprocal");
        assert!(matches!(&ispec.rules[1].targets[0], RuleTarget::Sig(s) if s.name == "IsEqual"));
    }

    #[test]
    fn parses_bool_constants_with_case_markers() {
        let text = r#"
[concrete(interp)] spec Bool : ISpec {
  [case(this)] public static const Bool true("true");
  [case(this)] public static const Bool false("false");
  [rule(this)] Bool Exclusive() {
    if (this.IsEqual(true)) return true;
    if (this.IsEqual(false)) return true;
    return false;
  }
}
"#;
        let specs = parse_specs(text).unwrap();
        let bool_spec = &specs[0];
        assert!(bool_spec.is_concrete);
        assert_eq!(bool_spec.concrete_target.as_deref(), Some("interp"));
        assert_eq!(bool_spec.parents, vec!["ISpec".to_string()]);
        assert_eq!(bool_spec.constants.len(), 2);
        assert_eq!(bool_spec.constants[0].name, "true");
        assert_eq!(bool_spec.constants[0].literal, "true");
        assert!(bool_spec.constants[0].case_marker);
        assert_eq!(bool_spec.rules.len(), 1);
    }

    #[test]
    fn parses_ctor_overrides_and_dtor() {
        let text = r#"
[concrete(interp)] spec Bool : ISpec {
  [override(ISpec(const String))] [object] public Bool(const String literal);
  [override(ISpec(const ISpec))]  [object] public Bool(const Bool);
  [override(ISpec())] [object] public Bool();
  [override(~ISpec())] [object] public ~Bool();
}
"#;
        let specs = parse_specs(text).unwrap();
        let methods = &specs[0].methods;
        assert_eq!(methods.len(), 4);
        assert_eq!(methods[0].signature.key(), "<ctor>(const String)");
        assert_eq!(methods[0].overrides[0].name, "ISpec");
        assert_eq!(methods[1].signature.key(), "<ctor>(const Bool)");
        assert_eq!(methods[2].signature.key(), "<ctor>()");
        assert_eq!(methods[3].signature.key(), "<dtor>()");
        assert_eq!(methods[3].overrides[0].name, "~ISpec");
        assert!(methods.iter().all(|m| m.kind == MethodKind::Object));
    }

    #[test]
    fn violate_attribute_parses_on_method() {
        let text = r#"
spec S {
  [violate] public String ToString() const { return "x"; }
}
"#;
        let specs = parse_specs(text).unwrap();
        assert!(specs[0].methods[0].violate);
    }

    #[test]
    fn anonymous_case_attaches_to_preceding_method() {
        let text = r#"
spec S {
  [override] public String ToString() const {
    if (this.IsEqual(true)) return "true";
    return "false";
  }
  [case] Bool () { return true.ToString().IsEqual("true"); }
  [case] Bool () { return false.ToString().IsEqual("false"); }
}
"#;
        let specs = parse_specs(text).unwrap();
        assert_eq!(specs[0].cases.len(), 2);
        assert_eq!(specs[0].cases[0].owner_key, "ToString()");
    }

    #[test]
    fn ctor_delegation_parses() {
        let text = r#"
spec Bool {
  [override(ISpec())] public Bool() : Bool(false) {}
}
"#;
        let specs = parse_specs(text).unwrap();
        let m = &specs[0].methods[0];
        let (target, args) = m.delegation.as_ref().unwrap();
        assert_eq!(target, "Bool");
        assert_eq!(args.len(), 1);
        assert!(m.body.as_ref().unwrap().is_empty());
    }

    #[test]
    fn rule_with_this_other_targets() {
        let text = r#"
spec S {
  [rule(this, other)] Bool Reciprocal(ISpec other) {
    if (this.IsEqual(other)) return this.ToString().IsEqual(other.ToString());
    return true;
  }
}
"#;
        let specs = parse_specs(text).unwrap();
        assert_eq!(specs[0].rules[0].targets, vec![RuleTarget::This, RuleTarget::Other]);
    }

    #[test]
    fn pair_rule_targets() {
        let text = r#"
spec S {
  [rule(ISpec(const String), ISpec(const String))] Bool Mutual(const String a, const String b) {
    if (a.IsEqual(b)) return ISpec(a).IsEqual(ISpec(b));
    return true;
  }
}
"#;
        let specs = parse_specs(text).unwrap();
        assert_eq!(specs[0].rules[0].targets.len(), 2);
    }

    #[test]
    fn while_break_and_cast_parse() {
        let text = r#"
spec S {
  public Bool Run() {
    while (true) { break; }
    Bool b = ((ISpec) this).IsEqual(this);
    return b;
  }
}
"#;
        let specs = parse_specs(text).unwrap();
        let body = specs[0].methods[0].body.as_ref().unwrap();
        assert!(matches!(&body[0], Stmt::While { .. }));
        assert!(matches!(&body[1], Stmt::Local { .. }));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_specs("spec S { ]").unwrap_err();
        let SpecError::Syntax { line, .. } = err else { panic!("{err:?}") };
        assert_eq!(line, 1);
    }

    #[test]
    fn specific_call_expression() {
        let expr = parse_call_expr("((B) D()).F()").unwrap();
        assert!(matches!(expr, Expr::Call { .. }));
        let expr = parse_call_expr("x.B.F()").unwrap();
        let Expr::Call { specific, method, .. } = expr else { panic!() };
        assert_eq!(specific.as_deref(), Some("B"));
        assert_eq!(method, "F");
    }
}
