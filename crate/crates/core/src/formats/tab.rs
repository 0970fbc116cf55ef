//! Tab-delimited persistence.
//!
//! Three marked line kinds carry the stream: a type line (`#?`), a name
//! line (`#@`) matched to it column by column, and one or more data lines
//! (`?`) whose cells take their type and name from the column position.
//! Every other line is free text and is ignored on reading. A data cell
//! whose column type is not primitively expressive is a reference: an
//! integer identity, empty for a stack value, `0` for null.

use std::io::Write;

use indexmap::IndexMap;

use crate::object_model::{DynValue, Heap};
use crate::serializer::binding::{SegmentKind, DELIMITERS};
use crate::serializer::{serialize, Session};
use crate::stream_core::{BufStream, ExpressiveStream, StreamItem};
use crate::type_model::{is_primitive_like, Registry, STRING_TYPE};

use super::FormatError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabLayout {
    pub delimiter: String,
    pub type_marker: String,
    pub name_marker: String,
    pub data_marker: String,
    pub newline: String,
    /// Maximum data cells per `?` line; 0 means unlimited.
    pub max_items_per_line: usize,
    pub newline_for_non_primitive: bool,
    pub newline_for_collection: bool,
}

impl Default for TabLayout {
    fn default() -> Self {
        TabLayout {
            delimiter: "\t".into(),
            type_marker: "#?".into(),
            name_marker: "#@".into(),
            data_marker: "?".into(),
            newline: "\n".into(),
            max_items_per_line: 0,
            newline_for_non_primitive: true,
            newline_for_collection: true,
        }
    }
}

impl TabLayout {
    fn validate(&self) -> Result<(), FormatError> {
        let markers = [&self.type_marker, &self.name_marker, &self.data_marker];
        for (i, a) in markers.iter().enumerate() {
            for b in markers.iter().skip(i + 1) {
                if a == b {
                    return Err(FormatError::MalformedHeader(format!("markers must be pairwise distinct: {a}")));
                }
            }
        }
        Ok(())
    }
}

fn escape_cell(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out
}

fn unescape_cell(text: &str, line: usize) -> Result<String, FormatError> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
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

fn short_name(full: &str) -> &str {
    full.rsplit('.').next().unwrap_or(full)
}

#[derive(Debug)]
enum Block {
    Scalar { cols: Vec<(String, String)>, cells: Vec<String> },
    Collection { cols: Vec<(String, String)>, cells: Vec<String> },
}

/// The last segment of a binding name, when it is a collection element.
fn element_binding(name: &str) -> Option<(SegmentKind, &str, &str)> {
    let pos = name.rfind(DELIMITERS)?;
    let delim = name[pos..].chars().next().unwrap();
    let kind = SegmentKind::from_delimiter(delim)?;
    match kind {
        SegmentKind::SeqGetter | SegmentKind::KeyedKey | SegmentKind::KeyedValue => {
            Some((kind, &name[..pos], &name[pos + delim.len_utf8()..]))
        }
        _ => None,
    }
}

/// Serializes a value and renders it in the tab format. The column plan
/// lists root getters to lay out first; when absent, constructor parameters
/// come before setters.
#[allow(clippy::too_many_arguments)]
pub fn tab_write<W: Write>(
    sink: &mut W,
    value: &DynValue,
    name: &str,
    layout: &TabLayout,
    column_plan: Option<&[Vec<String>]>,
    registry: &Registry,
    heap: &Heap,
    session: &mut Session,
) -> Result<(), FormatError> {
    let mut stream = BufStream::complete();
    serialize(&mut stream, value, name, registry, heap, session)?;
    let default_plan: Vec<Vec<String>> = match value {
        DynValue::HeapRef(id) if *id != 0 => heap
            .get(*id)
            .map(|inst| {
                let mut row: Vec<String> =
                    inst.descriptor.constructor_params.iter().map(|p| p.getter_name.clone()).collect();
                row.extend(inst.descriptor.expressive_setters().map(|p| p.name.clone()));
                vec![row]
            })
            .unwrap_or_default(),
        DynValue::StackObject(inst) => {
            let mut row: Vec<String> =
                inst.descriptor.constructor_params.iter().map(|p| p.getter_name.clone()).collect();
            row.extend(inst.descriptor.expressive_setters().map(|p| p.name.clone()));
            vec![row]
        }
        _ => Vec::new(),
    };
    let plan = column_plan.map(|p| p.to_vec()).unwrap_or(default_plan);
    let text = tab_write_stream(&stream, layout, name, &plan)?;
    sink.write_all(text.as_bytes())?;
    Ok(())
}

/// Lays out an already-serialized complete stream as tab-delimited text.
pub fn tab_write_stream(
    stream: &BufStream,
    layout: &TabLayout,
    root_name: &str,
    column_plan: &[Vec<String>],
) -> Result<String, FormatError> {
    layout.validate()?;
    let mut blocks: Vec<Block> = Vec::new();
    let mut pending_type: Option<String> = None;
    let mut pending_intfs: Vec<(String, String)> = Vec::new();
    let mut identity_types: IndexMap<u64, String> = IndexMap::new();
    let mut scalar_open = false;

    fn push_scalar(
        blocks: &mut Vec<Block>,
        scalar_open: &mut bool,
        col: (String, String),
        cell: String,
        force_new: bool,
    ) {
        if !force_new && *scalar_open {
            if let Some(Block::Scalar { cols, cells }) = blocks.last_mut() {
                cols.push(col);
                cells.push(cell);
                return;
            }
        }
        blocks.push(Block::Scalar { cols: vec![col], cells: vec![cell] });
        *scalar_open = true;
    }

    for item in stream.items() {
        match item {
            StreamItem::TypeInfo { type_name } => pending_type = Some(type_name.clone()),
            StreamItem::IntfInfo { type_name, interface_name } => {
                pending_intfs.push((type_name.clone(), interface_name.clone()));
            }
            StreamItem::Refer { name, identity } => {
                let first_occurrence = *identity != 0 && !identity_types.contains_key(identity);
                let type_name = pending_type
                    .take()
                    .or_else(|| identity_types.get(identity).cloned())
                    .unwrap_or_else(|| "System.Object".to_string());
                if *identity != 0 {
                    identity_types.entry(*identity).or_insert_with(|| type_name.clone());
                }
                // a record body follows the first occurrence of an identity
                let force_new = first_occurrence && layout.newline_for_non_primitive && !blocks.is_empty();
                push_scalar(&mut blocks, &mut scalar_open, (type_name, name.clone()), identity.to_string(), force_new);
                for (ty, intf) in pending_intfs.drain(..) {
                    let binding = format!("{}:{}", short_name(&ty), short_name(&intf));
                    push_scalar(&mut blocks, &mut scalar_open, (intf, binding), ty, false);
                }
            }
            StreamItem::Value { name } => {
                let type_name = pending_type.take().unwrap_or_else(|| "System.Object".to_string());
                let force_new = layout.newline_for_non_primitive && !blocks.is_empty();
                push_scalar(&mut blocks, &mut scalar_open, (type_name, name.clone()), String::new(), force_new);
                for (ty, intf) in pending_intfs.drain(..) {
                    let binding = format!("{}:{}", short_name(&ty), short_name(&intf));
                    push_scalar(&mut blocks, &mut scalar_open, (intf, binding), ty, false);
                }
            }
            StreamItem::Prim { name, type_name, literal } => {
                pending_type = None;
                if element_binding(name).is_some() {
                    append_collection_cell(&mut blocks, &mut scalar_open, name, type_name, literal, layout);
                } else {
                    push_scalar(
                        &mut blocks,
                        &mut scalar_open,
                        (type_name.clone(), name.clone()),
                        escape_cell(literal),
                        false,
                    );
                }
            }
            StreamItem::VString { name, text } => {
                pending_type = None;
                if element_binding(name).is_some() {
                    append_collection_cell(&mut blocks, &mut scalar_open, name, STRING_TYPE, text, layout);
                } else {
                    push_scalar(
                        &mut blocks,
                        &mut scalar_open,
                        (STRING_TYPE.to_string(), name.clone()),
                        escape_cell(text),
                        false,
                    );
                }
            }
        }
    }

    reorder_root_block(&mut blocks, root_name, column_plan);
    Ok(render_blocks(&blocks, layout))
}

fn append_collection_cell(
    blocks: &mut Vec<Block>,
    scalar_open: &mut bool,
    name: &str,
    type_name: &str,
    literal: &str,
    layout: &TabLayout,
) {
    let _ = layout;
    let col = (type_name.to_string(), name.to_string());
    if let Some(Block::Collection { cols, cells }) = blocks.last_mut() {
        if let Some(pos) = cols.iter().position(|(_, n)| n == name) {
            // cells must land in column order; a cell for an earlier column
            // after a later one begins a new row, which the row-major layout
            // already provides
            let expected = cells.len() % cols.len();
            if pos == expected || cols.len() == 1 {
                cells.push(escape_cell(literal));
                return;
            }
        } else if cells.len() < cols.len() * 2 && name_pairs_with(cols, name) {
            // the value column of a keyed getter joins its key column
            cols.push(col);
            cells.push(escape_cell(literal));
            return;
        }
    }
    *scalar_open = false;
    blocks.push(Block::Collection { cols: vec![col], cells: vec![escape_cell(literal)] });
}

/// A `&`-bound value column pairs with the `@`-bound key column of the same
/// owner and getter.
fn name_pairs_with(cols: &[(String, String)], name: &str) -> bool {
    if cols.len() != 1 {
        return false;
    }
    let (_, existing) = &cols[0];
    match (element_binding(existing), element_binding(name)) {
        (Some((SegmentKind::KeyedKey, own_a, get_a)), Some((SegmentKind::KeyedValue, own_b, get_b))) => {
            own_a == own_b && get_a == get_b
        }
        _ => false,
    }
}

/// Moves the root record's member columns into plan order: the reference
/// and interface columns stay first, then the planned getters, then the
/// remaining members in arrival order.
fn reorder_root_block(blocks: &mut [Block], root_name: &str, plan: &[Vec<String>]) {
    if plan.is_empty() {
        return;
    }
    let Some(Block::Scalar { cols, cells }) = blocks.first_mut() else { return };
    let mut fixed: Vec<((String, String), String)> = Vec::new();
    let mut members: Vec<((String, String), String)> = Vec::new();
    for (col, cell) in cols.drain(..).zip(cells.drain(..)) {
        let is_member = col.1.len() > root_name.len()
            && col.1.starts_with(root_name)
            && col.1[root_name.len()..].starts_with(['.', '$']);
        if is_member {
            members.push((col, cell));
        } else {
            fixed.push((col, cell));
        }
    }
    let mut ordered: Vec<((String, String), String)> = Vec::new();
    for line in plan {
        for getter in line {
            if let Some(pos) = members.iter().position(|((_, name), _)| {
                name[root_name.len() + 1..] == **getter
            }) {
                ordered.push(members.remove(pos));
            }
        }
    }
    ordered.extend(members);
    for (col, cell) in fixed.into_iter().chain(ordered) {
        cols.push(col);
        cells.push(cell);
    }
}

fn render_blocks(blocks: &[Block], layout: &TabLayout) -> String {
    let mut out = String::new();
    let d = &layout.delimiter;
    let nl = &layout.newline;
    for block in blocks {
        let (cols, cells, per_line) = match block {
            Block::Scalar { cols, cells } => (cols, cells, cells.len().max(1)),
            Block::Collection { cols, cells } => {
                let per_line = if layout.newline_for_collection { cols.len() } else { cells.len().max(1) };
                (cols, cells, per_line)
            }
        };
        if cols.is_empty() {
            continue;
        }
        let cap = if layout.max_items_per_line > 0 { layout.max_items_per_line.min(per_line) } else { per_line };
        out.push_str(&layout.type_marker);
        for (ty, _) in cols {
            out.push_str(d);
            out.push_str(ty);
        }
        out.push_str(nl);
        out.push_str(&layout.name_marker);
        for (_, name) in cols {
            out.push_str(d);
            out.push_str(name);
        }
        out.push_str(nl);
        for chunk in cells.chunks(cap.max(1)) {
            out.push_str(&layout.data_marker);
            for cell in chunk {
                out.push_str(d);
                out.push_str(cell);
            }
            out.push_str(nl);
        }
    }
    out
}

/// Parses tab-delimited text back into a complete-format stream. Lines not
/// starting with a marker are free text and are skipped.
pub fn tab_read(text: &str, layout: &TabLayout, registry: &Registry) -> Result<BufStream, FormatError> {
    layout.validate()?;
    let mut stream = BufStream::complete();
    let d = &layout.delimiter;

    struct Header {
        types: Vec<String>,
        names: Vec<String>,
        cells: Vec<(String, usize)>,
        line: usize,
    }
    let mut header: Option<Header> = None;

    let flush = |header: &mut Option<Header>, stream: &mut BufStream| -> Result<(), FormatError> {
        let Some(h) = header.take() else { return Ok(()) };
        let columns = h.types.len();
        if columns == 0 {
            if h.cells.is_empty() {
                return Ok(());
            }
            return Err(FormatError::ColumnCountMismatch { line: h.line, cells: h.cells.len(), columns });
        }
        if h.cells.len() % columns != 0 {
            return Err(FormatError::ColumnCountMismatch { line: h.line, cells: h.cells.len(), columns });
        }
        for (index, (cell, line_no)) in h.cells.iter().enumerate() {
            let col = index % columns;
            let type_name = &h.types[col];
            let name = &h.names[col];
            let datum = unescape_cell(cell, *line_no)?;
            if name.contains(':') {
                stream.append(StreamItem::IntfInfo { type_name: datum, interface_name: type_name.clone() });
            } else if type_name == STRING_TYPE {
                stream.append(StreamItem::VString { name: name.clone(), text: datum });
            } else if is_primitive_like(type_name, registry) {
                stream.append(StreamItem::Prim {
                    name: name.clone(),
                    type_name: type_name.clone(),
                    literal: datum,
                });
            } else if datum.is_empty() {
                stream.append(StreamItem::TypeInfo { type_name: type_name.clone() });
                stream.append(StreamItem::Value { name: name.clone() });
            } else {
                let identity = datum.parse::<u64>().map_err(|e| FormatError::MalformedLine {
                    line: *line_no,
                    message: format!("reference cell `{datum}` is not an identity: {e}"),
                })?;
                if identity != 0 {
                    stream.append(StreamItem::TypeInfo { type_name: type_name.clone() });
                }
                stream.append(StreamItem::Refer { name: name.clone(), identity });
            }
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let (marker, rest) = if let Some(rest) = strip_marker(raw, &layout.type_marker, d) {
            ("type", rest)
        } else if let Some(rest) = strip_marker(raw, &layout.name_marker, d) {
            ("name", rest)
        } else if let Some(rest) = strip_marker(raw, &layout.data_marker, d) {
            ("data", rest)
        } else {
            continue; // free text
        };
        let cells: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.split(d.as_str()).collect() };
        match marker {
            "type" => {
                flush(&mut header, &mut stream)?;
                header = Some(Header {
                    types: cells.iter().map(|c| c.to_string()).collect(),
                    names: Vec::new(),
                    cells: Vec::new(),
                    line: line_no,
                });
            }
            "name" => match header.as_mut() {
                Some(h) if h.names.is_empty() && h.cells.is_empty() => {
                    if cells.len() != h.types.len() {
                        return Err(FormatError::ColumnCountMismatch {
                            line: line_no,
                            cells: cells.len(),
                            columns: h.types.len(),
                        });
                    }
                    h.names = cells.iter().map(|c| c.to_string()).collect();
                }
                _ => return Err(FormatError::NameLineWithoutTypeLine { line: line_no }),
            },
            "data" => match header.as_mut() {
                Some(h) if !h.names.is_empty() => {
                    h.cells.extend(cells.iter().map(|c| (c.to_string(), line_no)));
                }
                _ => return Err(FormatError::DataLineWithoutHeader { line: line_no }),
            },
            _ => unreachable!(),
        }
    }
    flush(&mut header, &mut stream)?;
    Ok(stream)
}

fn strip_marker<'a>(line: &'a str, marker: &str, delimiter: &str) -> Option<&'a str> {
    if line == marker {
        return Some("");
    }
    line.strip_prefix(marker)?.strip_prefix(delimiter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object_model::{instantiate, InitHooks};
    use crate::serializer::{deserialize, SynthMode};
    use crate::type_model::FIGURE_SCHEMA;

    fn figure_setup() -> (Registry, Heap, DynValue) {
        let mut reg = Registry::new();
        reg.load_schema(FIGURE_SCHEMA).unwrap();
        let mut heap = Heap::new();
        let desc = reg.get("UnitTest.MyExpressiveType").unwrap().clone();
        let value = instantiate(&desc, vec![DynValue::Float64(12345.0)], &reg, &mut heap).unwrap();
        let DynValue::HeapRef(id) = value else { panic!() };
        let inst = heap.get_mut(id).unwrap();
        inst.slots.insert("MyValue".into(), DynValue::Integer64(6789));
        inst.slots.insert(
            "MyCollection".into(),
            DynValue::Sequence(vec![DynValue::Float64(0.123), DynValue::Float64(456.7), DynValue::Float64(890.0)]),
        );
        (reg, heap, value)
    }

    #[test]
    fn figure_file_layout() {
        let (reg, heap, value) = figure_setup();
        let mut session = Session::new();
        let mut out = Vec::new();
        tab_write(&mut out, &value, "MyExpressiveType", &TabLayout::default(), None, &reg, &heap, &mut session)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        let expected = "#?\tUnitTest.MyExpressiveType\tUnitTest.MyIntface\tSystem.Double\tSystem.Int32\n\
                        #@\tMyExpressiveType\tMyExpressiveType:MyIntface\tMyExpressiveType$MyReadonly\tMyExpressiveType.MyValue\n\
                        ?\t1\tUnitTest.MyExpressiveType\t12345\t6789\n\
                        #?\tSystem.Double\n\
                        #@\tMyExpressiveType*MyCollection\n\
                        ?\t0.123\n\
                        ?\t456.7\n\
                        ?\t890\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn figure_file_reads_back_to_instance() {
        let (mut reg, heap, value) = figure_setup();
        let mut session = Session::new();
        let mut out = Vec::new();
        tab_write(&mut out, &value, "MyExpressiveType", &TabLayout::default(), None, &reg, &heap, &mut session)
            .unwrap();
        let text = String::from_utf8(out).unwrap();

        let mut stream = tab_read(&text, &TabLayout::default(), &reg).unwrap();
        let mut in_heap = Heap::new();
        let mut in_session = Session::new();
        let hooks = InitHooks::new();
        let got =
            deserialize(&mut stream, &mut reg, &mut in_heap, &mut in_session, &hooks, SynthMode::Disabled).unwrap();
        let DynValue::HeapRef(id) = got.value else { panic!() };
        let inst = in_heap.get(id).unwrap();
        assert_eq!(inst.slots["MyReadonly"], DynValue::Float64(12345.0));
        assert_eq!(inst.slots["MyValue"], DynValue::Integer64(6789));
        assert_eq!(
            inst.slots["MyCollection"],
            DynValue::Sequence(vec![DynValue::Float64(0.123), DynValue::Float64(456.7), DynValue::Float64(890.0)])
        );
    }

    #[test]
    fn free_text_lines_ignored() {
        let (mut reg, heap, value) = figure_setup();
        let mut session = Session::new();
        let mut out = Vec::new();
        tab_write(&mut out, &value, "x", &TabLayout::default(), None, &reg, &heap, &mut session).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut noisy = String::from("free text leading the file\n");
        for line in text.lines() {
            noisy.push_str(line);
            noisy.push_str("\nsome commentary between lines\n");
        }
        let mut stream = tab_read(&noisy, &TabLayout::default(), &reg).unwrap();
        let mut in_heap = Heap::new();
        let mut in_session = Session::new();
        let hooks = InitHooks::new();
        let got =
            deserialize(&mut stream, &mut reg, &mut in_heap, &mut in_session, &hooks, SynthMode::Disabled).unwrap();
        let DynValue::HeapRef(id) = got.value else { panic!() };
        assert_eq!(in_heap.get(id).unwrap().slots["MyValue"], DynValue::Integer64(6789));
    }

    #[test]
    fn name_line_must_follow_type_line() {
        let reg = Registry::new();
        let err = tab_read("#@\tName\n", &TabLayout::default(), &reg).unwrap_err();
        assert!(matches!(err, FormatError::NameLineWithoutTypeLine { line: 1 }));
    }

    #[test]
    fn column_count_mismatch_detected() {
        let reg = Registry::new();
        let text = "#?\tSystem.Int32\tSystem.Int32\tSystem.Int32\tSystem.Int32\n\
                    #@\ta.A\ta.B\ta.C\ta.D\n\
                    ?\t1\t2\t3\n";
        let err = tab_read(text, &TabLayout::default(), &reg).unwrap_err();
        assert!(matches!(err, FormatError::ColumnCountMismatch { cells: 3, columns: 4, .. }));
    }

    #[test]
    fn max_items_per_line_wraps_and_reparses() {
        let layout = TabLayout { max_items_per_line: 2, newline_for_collection: false, ..TabLayout::default() };
        let mut stream = BufStream::complete();
        for v in ["1.5", "2.5", "3.5"] {
            stream.append(StreamItem::Prim {
                name: "r*item".into(),
                type_name: "System.Double".into(),
                literal: v.into(),
            });
        }
        let text = tab_write_stream(&stream, &layout, "r", &[]).unwrap();
        let data_lines: Vec<&str> = text.lines().filter(|l| l.starts_with("?\t")).collect();
        assert_eq!(data_lines.len(), 2);
        assert_eq!(data_lines[0], "?\t1.5\t2.5");
        assert_eq!(data_lines[1], "?\t3.5");

        let reg = Registry::new();
        let reparsed = tab_read(&text, &layout, &reg).unwrap();
        let original: Vec<StreamItem> = stream.items().cloned().collect();
        let round: Vec<StreamItem> = reparsed.items().cloned().collect();
        assert_eq!(original, round);
    }

    #[test]
    fn keyed_elements_pair_into_two_columns() {
        let mut stream = BufStream::complete();
        for (k, v) in [("a", "1"), ("b", "2")] {
            stream.append(StreamItem::VString { name: "r@item".into(), text: k.into() });
            stream.append(StreamItem::Prim {
                name: "r&item".into(),
                type_name: "System.Int32".into(),
                literal: v.into(),
            });
        }
        let text = tab_write_stream(&stream, &TabLayout::default(), "r", &[]).unwrap();
        assert!(text.contains("#@\tr@item\tr&item\n"));
        let reg = Registry::new();
        let reparsed = tab_read(&text, &TabLayout::default(), &reg).unwrap();
        let original: Vec<StreamItem> = stream.items().cloned().collect();
        let round: Vec<StreamItem> = reparsed.items().cloned().collect();
        assert_eq!(original, round);
    }

    #[test]
    fn tab_cell_escaping_round_trips() {
        let mut stream = BufStream::complete();
        stream.append(StreamItem::VString { name: "r.S".into(), text: "tab\there\nnewline\\slash".into() });
        let text = tab_write_stream(&stream, &TabLayout::default(), "r", &[]).unwrap();
        let reg = Registry::new();
        let reparsed = tab_read(&text, &TabLayout::default(), &reg).unwrap();
        let round: Vec<StreamItem> = reparsed.items().cloned().collect();
        assert_eq!(round[0], StreamItem::VString { name: "r.S".into(), text: "tab\there\nnewline\\slash".into() });
    }

    #[test]
    fn empty_stream_writes_nothing() {
        let stream = BufStream::complete();
        let text = tab_write_stream(&stream, &TabLayout::default(), "r", &[]).unwrap();
        assert!(text.is_empty());
    }
}
