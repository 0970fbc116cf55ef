//! Stream item taxonomy and the queue-with-lookahead stream contract.

use thiserror::Error;

/// One self-describing item of an expressive stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamItem {
    /// An instance name with a string value.
    VString { name: String, text: String },
    /// An instance name with a non-string primitive literal.
    Prim { name: String, type_name: String, literal: String },
    /// A stack object marker.
    Value { name: String },
    /// A heap object marker; identity 0 means null.
    Refer { name: String, identity: u64 },
    /// Type binding for the record that follows.
    TypeInfo { type_name: String },
    /// One implemented interface of a type.
    IntfInfo { type_name: String, interface_name: String },
}

impl StreamItem {
    /// The binding name carried by the item, when it has one.
    pub fn name(&self) -> Option<&str> {
        match self {
            StreamItem::VString { name, .. }
            | StreamItem::Prim { name, .. }
            | StreamItem::Value { name }
            | StreamItem::Refer { name, .. } => Some(name),
            StreamItem::TypeInfo { .. } | StreamItem::IntfInfo { .. } => None,
        }
    }
}

/// Format flags fixed at stream construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamConfig {
    /// Serialize interfaces and static properties of each type.
    pub include_static: bool,
    /// Emit type binding even where the declared member type is sealed.
    pub include_type: bool,
    /// Emit name binding on every item.
    pub include_name: bool,
}

impl StreamConfig {
    pub fn complete() -> Self {
        StreamConfig { include_static: true, include_type: true, include_name: true }
    }

    pub fn simplified() -> Self {
        StreamConfig { include_static: false, include_type: false, include_name: false }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("stream exhausted")]
    StreamExhausted,
}

/// Non-destructive view of the head of a stream.
#[derive(Debug, Clone, Copy)]
pub struct Peek<'a> {
    pub has_next: bool,
    pub next_name: Option<&'a str>,
    pub next_item: Option<&'a StreamItem>,
}

/// FIFO stream of items with one-item lookahead.
pub trait ExpressiveStream {
    fn config(&self) -> StreamConfig;
    fn append(&mut self, item: StreamItem);
    fn next(&mut self) -> Result<StreamItem, StreamError>;
    fn has_next(&self) -> bool;
    fn peek(&self) -> Peek<'_>;
}

/// In-memory stream.
#[derive(Debug, Clone)]
pub struct BufStream {
    config: StreamConfig,
    items: std::collections::VecDeque<StreamItem>,
}

impl BufStream {
    pub fn new(config: StreamConfig) -> Self {
        BufStream { config, items: std::collections::VecDeque::new() }
    }

    pub fn complete() -> Self {
        Self::new(StreamConfig::complete())
    }

    pub fn simplified() -> Self {
        Self::new(StreamConfig::simplified())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = &StreamItem> {
        self.items.iter()
    }

    pub fn from_items(config: StreamConfig, items: impl IntoIterator<Item = StreamItem>) -> Self {
        BufStream { config, items: items.into_iter().collect() }
    }
}

impl ExpressiveStream for BufStream {
    fn config(&self) -> StreamConfig {
        self.config
    }

    fn append(&mut self, item: StreamItem) {
        self.items.push_back(item);
    }

    fn next(&mut self) -> Result<StreamItem, StreamError> {
        self.items.pop_front().ok_or(StreamError::StreamExhausted)
    }

    fn has_next(&self) -> bool {
        !self.items.is_empty()
    }

    fn peek(&self) -> Peek<'_> {
        let head = self.items.front();
        Peek { has_next: head.is_some(), next_name: head.and_then(|i| i.name()), next_item: head }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prim(name: &str, literal: &str) -> StreamItem {
        StreamItem::Prim { name: name.into(), type_name: "System.Int32".into(), literal: literal.into() }
    }

    #[test]
    fn fifo_order() {
        let mut s = BufStream::complete();
        s.append(StreamItem::TypeInfo { type_name: "T".into() });
        s.append(prim("X", "5"));
        assert_eq!(s.next().unwrap(), StreamItem::TypeInfo { type_name: "T".into() });
        assert_eq!(s.next().unwrap(), prim("X", "5"));
    }

    #[test]
    fn has_next_after_append() {
        let mut s = BufStream::complete();
        assert!(!s.has_next());
        s.append(prim("X", "1"));
        assert!(s.has_next());
    }

    #[test]
    fn many_appends_all_retrievable() {
        let mut s = BufStream::complete();
        for i in 0..1000 {
            s.append(prim("X", &i.to_string()));
        }
        let mut count = 0;
        while s.has_next() {
            s.next().unwrap();
            count += 1;
        }
        assert_eq!(count, 1000);
    }

    #[test]
    fn next_on_empty_is_exhausted() {
        let mut s = BufStream::complete();
        assert_eq!(s.next().unwrap_err(), StreamError::StreamExhausted);
    }

    #[test]
    fn peek_is_non_destructive() {
        let mut s = BufStream::complete();
        s.append(prim("X", "5"));
        let peeked = s.peek().next_item.cloned();
        assert_eq!(s.peek().next_name, Some("X"));
        assert_eq!(Some(s.next().unwrap()), peeked);
    }

    #[test]
    fn peek_on_empty() {
        let s = BufStream::complete();
        let p = s.peek();
        assert!(!p.has_next);
        assert!(p.next_name.is_none());
        assert!(p.next_item.is_none());
    }

    #[test]
    fn interleaved_append_next_matches_reference_queue() {
        use std::collections::VecDeque;
        let mut s = BufStream::complete();
        let mut model: VecDeque<StreamItem> = VecDeque::new();
        // deterministic interleaving schedule
        let schedule = [true, true, false, true, false, false, true, true, true, false, false, false];
        let mut n = 0;
        for push in schedule {
            if push {
                let item = prim("X", &n.to_string());
                n += 1;
                s.append(item.clone());
                model.push_back(item);
            } else {
                assert_eq!(s.next().ok(), model.pop_front());
            }
        }
    }
}
