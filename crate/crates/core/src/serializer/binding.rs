//! The member-binding name grammar.
//!
//! Names are derived from type or instance names with single-character
//! delimiters: `:` interface, `.` setter, `$` constructor parameter,
//! `*` sequence getter element, `@`/`&` keyed getter key and value.
//! Identifiers never contain the delimiters, so parsing is unambiguous;
//! dots inside full type names are handled by longest-prefix resolution
//! against the registry.

use std::fmt;

use crate::type_model::Registry;

use super::SerialError;

pub const DELIMITERS: &[char] = &[':', '.', '$', '*', '@', '&'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Root,
    Interface,
    Setter,
    CtorParam,
    SeqGetter,
    KeyedKey,
    KeyedValue,
}

impl SegmentKind {
    pub fn delimiter(self) -> Option<char> {
        match self {
            SegmentKind::Root => None,
            SegmentKind::Interface => Some(':'),
            SegmentKind::Setter => Some('.'),
            SegmentKind::CtorParam => Some('$'),
            SegmentKind::SeqGetter => Some('*'),
            SegmentKind::KeyedKey => Some('@'),
            SegmentKind::KeyedValue => Some('&'),
        }
    }

    pub fn from_delimiter(c: char) -> Option<SegmentKind> {
        match c {
            ':' => Some(SegmentKind::Interface),
            '.' => Some(SegmentKind::Setter),
            '$' => Some(SegmentKind::CtorParam),
            '*' => Some(SegmentKind::SeqGetter),
            '@' => Some(SegmentKind::KeyedKey),
            '&' => Some(SegmentKind::KeyedValue),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingName {
    pub segments: Vec<(SegmentKind, String)>,
}

impl BindingName {
    pub fn root(&self) -> &str {
        &self.segments[0].1
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (kind, ident) in &self.segments {
            if let Some(delim) = kind.delimiter() {
                out.push(delim);
            }
            out.push_str(ident);
        }
        out
    }
}

impl fmt::Display for BindingName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Joins an owner path with one member segment.
pub fn encode_binding(kind: SegmentKind, owner: &str, member: &str) -> String {
    match kind.delimiter() {
        Some(delim) => format!("{owner}{delim}{member}"),
        None => member.to_string(),
    }
}

fn valid_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses a binding name. The root may be a registered full type name (dots
/// included, resolved longest-prefix first); otherwise it runs up to the
/// first delimiter.
pub fn decode_binding(text: &str, registry: &Registry) -> Result<BindingName, SerialError> {
    if text.is_empty() {
        return Err(SerialError::MalformedBindingName(text.to_string()));
    }
    let malformed = || SerialError::MalformedBindingName(text.to_string());

    let (root, mut rest) = match registry.resolve_prefix(text) {
        Some((desc, rest)) => (desc.full_name.clone(), rest),
        None => match text.find(DELIMITERS) {
            Some(pos) => (text[..pos].to_string(), &text[pos..]),
            None => (text.to_string(), ""),
        },
    };
    if root.split('.').any(|part| !valid_identifier(part)) {
        return Err(malformed());
    }

    let mut segments = vec![(SegmentKind::Root, root)];
    while !rest.is_empty() {
        let delim = rest.chars().next().unwrap();
        let kind = SegmentKind::from_delimiter(delim).ok_or_else(malformed)?;
        rest = &rest[delim.len_utf8()..];
        let end = rest.find(DELIMITERS).unwrap_or(rest.len());
        let ident = &rest[..end];
        if !valid_identifier(ident) {
            return Err(malformed());
        }
        segments.push((kind, ident.to_string()));
        rest = &rest[end..];
    }
    Ok(BindingName { segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::type_model::FIGURE_SCHEMA;

    fn registry() -> Registry {
        let mut reg = Registry::new();
        reg.load_schema(FIGURE_SCHEMA).unwrap();
        reg
    }

    #[test]
    fn encode_interface() {
        assert_eq!(encode_binding(SegmentKind::Interface, "MyExpressiveType", "MyIntface"), "MyExpressiveType:MyIntface");
    }

    #[test]
    fn encode_ctor_param() {
        assert_eq!(encode_binding(SegmentKind::CtorParam, "MyExpressiveType", "MyReadonly"), "MyExpressiveType$MyReadonly");
    }

    #[test]
    fn decode_seq_getter() {
        let reg = registry();
        let name = decode_binding("MyExpressiveType*MyCollection", &reg).unwrap();
        assert_eq!(
            name.segments,
            vec![
                (SegmentKind::Root, "MyExpressiveType".to_string()),
                (SegmentKind::SeqGetter, "MyCollection".to_string()),
            ]
        );
    }

    #[test]
    fn decode_type_prefix_with_dots() {
        let reg = registry();
        let name = decode_binding("UnitTest.MyExpressiveType.SomeStatic", &reg).unwrap();
        assert_eq!(name.root(), "UnitTest.MyExpressiveType");
        assert_eq!(name.segments.len(), 2);
        assert_eq!(name.segments[1], (SegmentKind::Setter, "SomeStatic".to_string()));
    }

    #[test]
    fn decode_inverts_encode() {
        let reg = registry();
        for text in [
            "MyExpressiveType",
            "MyExpressiveType:MyIntface",
            "MyExpressiveType$MyReadonly",
            "MyExpressiveType.MyValue",
            "MyExpressiveType*MyCollection",
            "root.Child$Param",
            "root.Child@Tags",
            "root.Child&Tags",
        ] {
            let decoded = decode_binding(text, &reg).unwrap();
            assert_eq!(decoded.render(), text);
        }
    }

    #[test]
    fn malformed_names_rejected() {
        let reg = registry();
        for text in ["", ":X", "a..b", "a$", "a b"] {
            assert!(decode_binding(text, &reg).is_err(), "{text:?} should be malformed");
        }
    }
}
