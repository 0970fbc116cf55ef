//! Expresso core: self-describing serialization of object graphs driven by
//! declared type descriptors, plus a spec engine that compiles behavior
//! contracts with their tests.
//!
//! The serialization half turns values into *expressive streams* — sequences
//! of typed, named items that can be buffered in memory, flattened to line
//! arrays, or persisted as tab-delimited text — and reconstructs them with
//! reference integrity intact. The spec half parses trait-like declarations
//! with embedded test rules and cases, resolves multi-parent inheritance
//! through method tables, dispatches virtual calls through per-signature
//! c-tables, and refuses to produce a program whose tests fail.

pub mod compare;
pub mod formats;
pub mod gens;
pub mod object_model;
pub mod serializer;
pub mod spec_engine;
pub mod stream_core;
pub mod testkit;
pub mod type_model;
pub mod typesynth;

pub use object_model::{DynValue, Heap, InitHooks, Instance};
pub use serializer::{clear_session, clone_value, deserialize, serialize, RefTable, SerialError, Session};
pub use stream_core::{BufStream, ExpressiveStream, StreamConfig, StreamItem};
pub use type_model::{Registry, TypeDescriptor};
