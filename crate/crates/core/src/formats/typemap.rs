//! Cross-language type-name mapping, so a stream written with one
//! language's names reads back under another's.
//!
//! The mapping file holds one row per canonical name:
//!
//! ```text
//! # canonical    per-language names
//! System.Int32   java=int    cpp=long
//! ```

use indexmap::{IndexMap, IndexSet};

use crate::stream_core::{BufStream, ExpressiveStream, StreamItem};

use super::lines::CANONICAL_LANG;
use super::FormatError;

#[derive(Debug, Clone, Default)]
pub struct TypeNameMap {
    /// canonical name -> language -> foreign name
    rows: IndexMap<String, IndexMap<String, String>>,
}

/// Whitespace split honoring `\ ` escapes, so mapped names may hold spaces
/// (`long\ long`).
fn split_ws_escaped(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut escaped = false;
    for c in line.chars() {
        if escaped {
            current.push(c);
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    fields.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        fields.push(current);
    }
    fields
}

impl TypeNameMap {
    pub fn parse(text: &str) -> Result<TypeNameMap, FormatError> {
        let mut map = TypeNameMap::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = split_ws_escaped(line).into_iter();
            let canonical = fields.next().ok_or(FormatError::MalformedLine {
                line: idx + 1,
                message: "missing canonical name".into(),
            })?;
            let mut per_lang = IndexMap::new();
            for field in fields {
                let Some((lang, name)) = field.split_once('=') else {
                    return Err(FormatError::MalformedLine {
                        line: idx + 1,
                        message: format!("expected lang=name, found {field}"),
                    });
                };
                per_lang.insert(lang.to_string(), name.to_string());
            }
            map.rows.insert(canonical.to_string(), per_lang);
        }
        map.validate()?;
        Ok(map)
    }

    /// Every language column must be injective.
    fn validate(&self) -> Result<(), FormatError> {
        let mut langs: IndexSet<&str> = IndexSet::new();
        for row in self.rows.values() {
            langs.extend(row.keys().map(String::as_str));
        }
        for lang in langs {
            let mut seen: IndexSet<&str> = IndexSet::new();
            for row in self.rows.values() {
                if let Some(name) = row.get(lang) {
                    if !seen.insert(name) {
                        return Err(FormatError::DuplicateMapping {
                            language: lang.to_string(),
                            name: name.clone(),
                        });
                    }
                }
            }
        }
        let mut seen: IndexSet<&str> = IndexSet::new();
        for canonical in self.rows.keys() {
            if !seen.insert(canonical) {
                return Err(FormatError::DuplicateMapping {
                    language: CANONICAL_LANG.to_string(),
                    name: canonical.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn languages(&self) -> IndexSet<String> {
        let mut langs: IndexSet<String> = IndexSet::new();
        langs.insert(CANONICAL_LANG.to_string());
        for row in self.rows.values() {
            langs.extend(row.keys().cloned());
        }
        langs
    }

    fn canonical_of(&self, lang: &str, name: &str) -> Option<String> {
        if lang == CANONICAL_LANG {
            return self.rows.contains_key(name).then(|| name.to_string());
        }
        self.rows
            .iter()
            .find(|(_, row)| row.get(lang).map(String::as_str) == Some(name))
            .map(|(canonical, _)| canonical.clone())
    }

    fn name_in(&self, canonical: &str, lang: &str) -> Option<String> {
        if lang == CANONICAL_LANG {
            return Some(canonical.to_string());
        }
        self.rows.get(canonical)?.get(lang).cloned()
    }
}

/// Translates one type name between two languages through its canonical row.
pub fn map_type_name(
    map: &TypeNameMap,
    from_lang: &str,
    to_lang: &str,
    name: &str,
) -> Result<String, FormatError> {
    let langs = map.languages();
    for lang in [from_lang, to_lang] {
        if !langs.contains(lang) {
            return Err(FormatError::UnknownLanguage(lang.to_string()));
        }
    }
    if from_lang == to_lang {
        return Ok(name.to_string());
    }
    let canonical = map
        .canonical_of(from_lang, name)
        .ok_or_else(|| FormatError::UnmappedTypeName { language: from_lang.to_string(), name: name.to_string() })?;
    let target = map
        .name_in(&canonical, to_lang)
        .ok_or_else(|| FormatError::UnmappedTypeName { language: to_lang.to_string(), name: name.to_string() })?;
    Ok(target)
}

/// Rewrites every mapped type name in a stream; names without a row (the
/// stream's own declared types) pass through unchanged.
pub fn map_stream_types(
    stream: &BufStream,
    map: &TypeNameMap,
    from_lang: &str,
    to_lang: &str,
) -> Result<BufStream, FormatError> {
    let translate = |name: &str| -> Result<String, FormatError> {
        if map.canonical_of(from_lang, name).is_some() {
            map_type_name(map, from_lang, to_lang, name)
        } else {
            Ok(name.to_string())
        }
    };
    let mut out = BufStream::new(stream.config());
    for item in stream.items() {
        let mapped = match item {
            StreamItem::Prim { name, type_name, literal } => StreamItem::Prim {
                name: name.clone(),
                type_name: translate(type_name)?,
                literal: literal.clone(),
            },
            StreamItem::TypeInfo { type_name } => StreamItem::TypeInfo { type_name: translate(type_name)? },
            StreamItem::IntfInfo { type_name, interface_name } => StreamItem::IntfInfo {
                type_name: translate(type_name)?,
                interface_name: translate(interface_name)?,
            },
            other => other.clone(),
        };
        out.append(mapped);
    }
    Ok(out)
}

/// The mapping rows for the built-in primitive types.
pub const BUILTIN_TYPEMAP: &str = "\
# canonical          per-language type names
System.Int32         java=int                 cpp=long
System.Int64         java=long                cpp=long\\ long
System.Double        java=double              cpp=double
System.Single        java=float               cpp=float
System.Boolean       java=boolean             cpp=bool
System.String        java=java.lang.String    cpp=std::string
System.UInt64        java=java.math.BigInteger cpp=unsigned\\ long\\ long
";

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin() -> TypeNameMap {
        TypeNameMap::parse(BUILTIN_TYPEMAP).unwrap()
    }

    #[test]
    fn csharp_to_java_int() {
        let map = builtin();
        assert_eq!(map_type_name(&map, "csharp", "java", "System.Int32").unwrap(), "int");
    }

    #[test]
    fn csharp_to_cpp_int() {
        let map = builtin();
        assert_eq!(map_type_name(&map, "csharp", "cpp", "System.Int32").unwrap(), "long");
    }

    #[test]
    fn identity_mapping() {
        let map = builtin();
        assert_eq!(map_type_name(&map, "java", "java", "int").unwrap(), "int");
    }

    #[test]
    fn java_to_cpp_through_canonical() {
        let map = builtin();
        assert_eq!(map_type_name(&map, "java", "cpp", "int").unwrap(), "long");
    }

    #[test]
    fn unmapped_name_is_error() {
        let map = builtin();
        let err = map_type_name(&map, "csharp", "java", "System.Decimal").unwrap_err();
        assert!(matches!(err, FormatError::UnmappedTypeName { .. }));
    }

    #[test]
    fn non_injective_language_rejected() {
        let err = TypeNameMap::parse("System.Int32 java=int\nSystem.Int64 java=int\n").unwrap_err();
        assert!(matches!(err, FormatError::DuplicateMapping { .. }));
    }
}
