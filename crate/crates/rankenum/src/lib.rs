//! Ranked enumeration over cost transducers.
//!
//! A cost transducer reads a word (or an event stream) and emits, for every
//! accepting run, an output: the positions the run marked, each annotated
//! with a set of variables, plus a cost drawn from an ordered abelian group.
//! This crate preprocesses the input in one left-to-right pass and then
//! yields all outputs in non-decreasing cost order, paying a logarithmic
//! delay per output instead of materializing and sorting the whole set,
//! which is usually exponential in the input length.
//!
//! Everything rests on a family of fully persistent priority queues built
//! over an append-only node arena. Tree surgery never mutates a committed
//! node, so every operation returns a new handle and every old handle keeps
//! answering queries unchanged. Priorities are stored as differences along
//! tree paths, which makes "shift every priority in this queue by g" a
//! single group operation on the handle.
//!
//! Module map:
//!
//! - [`group`]: the cost groups (checked integers, lexicographic integer
//!   vectors) and their operations.
//! - [`arena`]: the append-only node store, plus the append/comparison
//!   counters the benchmarks report.
//! - [`pheap`]: persistent binomial min-heaps with whole-heap shifts. The
//!   reference structure and correctness oracle for the queue module.
//! - [`brodal`]: skew binomial heaps and the bootstrapped priority queue
//!   with constant-time add, meld, shift, and find-min.
//! - [`how`]: the heap of words, a priority queue whose elements are words
//!   sharing structure in a DAG; the object ranked enumeration drains.
//! - [`transducer`]: the machine model, its file format, the unambiguity
//!   checker, and the brute-force enumeration oracle.
//! - [`enumerate`]: preprocessing, ranked output streams, event streaming,
//!   and the benchmark harness.
//! - [`cli`]: the `rankenum` command line (check, enumerate, stream, bench).
//! - [`fixtures`]: small reference machines shared by tests and benches.

pub mod arena;
pub mod brodal;
pub mod cli;
pub mod enumerate;
pub mod fixtures;
pub mod group;
pub mod how;
pub mod pheap;
pub mod transducer;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Group values of different kinds or arities were combined.
    #[error("group value shapes differ: {left} vs {right}")]
    ArityMismatch { left: String, right: String },

    /// Checked 64-bit arithmetic overflowed.
    #[error("arithmetic overflow in cost computation")]
    Overflow,

    /// find_min, min_priority, or delete_min on an empty heap.
    #[error("heap is empty")]
    EmptyHeap,

    /// find_min, min_priority, or delete_min on an empty queue.
    #[error("queue is empty")]
    EmptyQueue,

    /// find_min on an empty word store.
    #[error("word store is empty")]
    EmptyHow,

    /// Two handles from different arenas were combined.
    #[error("handles belong to different arenas")]
    ArenaMismatch,

    /// A structural validator found a broken invariant.
    #[error("structure invariant violated: {0}")]
    Invariant(String),

    /// The transducer file is not syntactically well formed.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// A state name is referenced but never declared.
    #[error("unknown state `{name}` in {context}")]
    UnknownState { name: String, context: String },

    /// A cost in the file does not live in the declared group.
    #[error("cost shape mismatch in {context}: machine group is {expected}, got {found}")]
    BadCostArity { context: String, expected: String, found: String },

    /// The operation requires an unambiguous transducer.
    #[error("transducer is ambiguous")]
    Ambiguous,

    /// No run of the machine realizes the requested output.
    #[error("no run realizes the requested output")]
    OutputNotDefined,

    /// Brute-force enumeration visited more run prefixes than allowed.
    #[error("run enumeration exceeded the configured bound of {0}")]
    ExplosionGuard(usize),

    /// Malformed user input: event lines, flag values, guard mixtures.
    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use arena::{Arena, ArenaStats};
pub use brodal::{QueueHandle, SkewHeapHandle};
pub use enumerate::{
    bench_machine, enumerate, enumerate_filtered, preprocess, stream_new, stream_outputs,
    stream_push, BenchRow, LevelState, OutputStream,
};
pub use group::{GroupSpec, GroupValue};
pub use how::{HowHandle, Letter};
pub use pheap::HeapHandle;
pub use transducer::{
    parse_transducer, CostTransducer, EncodedAssignment, EventRecord, Guard, InputItem, Mark,
    Predicate, RankedOutput, Transition,
};
