//! Line-array encoding: one header line describing the stream, then one
//! line per item, `;`-delimited with backslash escaping.

use crate::stream_core::{BufStream, StreamConfig, StreamItem};

use super::FormatError;

/// Language id of the canonical type names (`System.Int32` and friends).
pub const CANONICAL_LANG: &str = "csharp";

const VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinesHeader {
    pub lang: String,
    pub config: StreamConfig,
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ';' => out.push_str("\\;"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out
}

fn unescape(text: &str, line: usize) -> Result<String, FormatError> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some(';') => out.push(';'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            other => {
                return Err(FormatError::MalformedLine {
                    line,
                    message: format!("bad escape \\{}", other.map(String::from).unwrap_or_default()),
                })
            }
        }
    }
    Ok(out)
}

/// Splits a `;`-delimited line honoring backslash escapes.
fn split_fields(text: &str) -> Vec<&str> {
    let mut fields = Vec::new();
    let mut start = 0;
    let mut escaped = false;
    for (pos, c) in text.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            ';' => {
                fields.push(&text[start..pos]);
                start = pos + 1;
            }
            _ => {}
        }
    }
    fields.push(&text[start..]);
    fields
}

/// Converts a stream into its line-array form.
pub fn lines_encode(stream: &BufStream, lang: &str) -> Vec<String> {
    let config = crate::stream_core::ExpressiveStream::config(stream);
    let flag = |b: bool| if b { "1" } else { "0" };
    let mut out = vec![format!(
        "expressive-stream;{VERSION};lang={lang};static={};type={};name={}",
        flag(config.include_static),
        flag(config.include_type),
        flag(config.include_name),
    )];
    for item in stream.items() {
        let line = match item {
            StreamItem::VString { name, text } => format!("S;{};;{}", escape(name), escape(text)),
            StreamItem::Prim { name, type_name, literal } => {
                format!("P;{};{};{}", escape(name), escape(type_name), escape(literal))
            }
            StreamItem::Value { name } => format!("V;{};;", escape(name)),
            StreamItem::Refer { name, identity } => format!("R;{};;{identity}", escape(name)),
            StreamItem::TypeInfo { type_name } => format!("T;;{};", escape(type_name)),
            StreamItem::IntfInfo { type_name, interface_name } => {
                format!("I;;{};{}", escape(type_name), escape(interface_name))
            }
        };
        out.push(line);
    }
    out
}

/// Rebuilds a stream from its line-array form.
pub fn lines_decode(lines: &[String]) -> Result<(BufStream, LinesHeader), FormatError> {
    let header_line = lines.first().ok_or_else(|| FormatError::MalformedHeader("empty input".into()))?;
    let fields = split_fields(header_line);
    if fields.first() != Some(&"expressive-stream") {
        return Err(FormatError::MalformedHeader(header_line.clone()));
    }
    if fields.get(1) != Some(&VERSION) {
        return Err(FormatError::MalformedHeader(format!(
            "unknown version {}",
            fields.get(1).unwrap_or(&"<missing>")
        )));
    }
    let mut lang = CANONICAL_LANG.to_string();
    let mut config = StreamConfig::complete();
    for field in &fields[2..] {
        let Some((key, value)) = field.split_once('=') else {
            return Err(FormatError::MalformedHeader(format!("bad header field {field}")));
        };
        match key {
            "lang" => lang = value.to_string(),
            "static" => config.include_static = value == "1",
            "type" => config.include_type = value == "1",
            "name" => config.include_name = value == "1",
            other => return Err(FormatError::MalformedHeader(format!("unknown header key {other}"))),
        }
    }

    let mut stream = BufStream::new(config);
    for (idx, line) in lines.iter().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields = split_fields(line);
        if fields.len() != 4 {
            return Err(FormatError::MalformedLine {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let name = unescape(fields[1], line_no)?;
        let type_name = unescape(fields[2], line_no)?;
        let value = unescape(fields[3], line_no)?;
        let item = match fields[0] {
            "S" => StreamItem::VString { name, text: value },
            "P" => StreamItem::Prim { name, type_name, literal: value },
            "V" => StreamItem::Value { name },
            "R" => {
                let identity = value.parse::<u64>().map_err(|e| FormatError::MalformedLine {
                    line: line_no,
                    message: format!("bad identity {value}: {e}"),
                })?;
                StreamItem::Refer { name, identity }
            }
            "T" => StreamItem::TypeInfo { type_name },
            "I" => StreamItem::IntfInfo { type_name, interface_name: value },
            other => {
                return Err(FormatError::MalformedLine {
                    line: line_no,
                    message: format!("unknown item kind {other}"),
                })
            }
        };
        crate::stream_core::ExpressiveStream::append(&mut stream, item);
    }
    Ok((stream, LinesHeader { lang, config }))
}
