//! Append-only node store backing the persistent heap structures.
//!
//! Every tree operation appends fresh nodes and re-points a handle;
//! committed nodes never change. That is the whole persistence story: a
//! handle is a (store, root, offset) triple, and a historical handle keeps
//! reading the same nodes forever. Appends are serialized behind a lock,
//! reads take a shared guard, so finished structures can be read from many
//! threads at once.
//!
//! The store counts appends and group comparisons. Those two numbers are
//! the abstract cost measure the complexity checks and benchmarks use.

use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use crate::group::GroupValue;

pub(crate) type NodeId = u32;

/// One immutable node: first child, next sibling, rank, priority offset
/// relative to the parent (or to the handle offset at roots), payload.
#[derive(Clone, Debug)]
pub(crate) struct Node<T> {
    pub fch: Option<NodeId>,
    pub nsb: Option<NodeId>,
    pub rank: u32,
    pub delta: GroupValue,
    pub val: T,
}

struct Store<T> {
    nodes: RwLock<Vec<Node<T>>>,
    cmps: AtomicU64,
}

/// Shared handle to one append-only store.
pub struct Arena<T> {
    store: Arc<Store<T>>,
}

impl<T> Clone for Arena<T> {
    fn clone(&self) -> Self {
        Arena { store: Arc::clone(&self.store) }
    }
}

impl<T> Default for Arena<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Operation counters at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArenaStats {
    /// Nodes ever appended.
    pub appends: u64,
    /// Priority comparisons ever performed.
    pub comparisons: u64,
}

impl ArenaStats {
    /// Appends plus comparisons: the abstract operation count.
    pub fn total(&self) -> u64 {
        self.appends + self.comparisons
    }

    /// Counter deltas since an earlier snapshot.
    pub fn since(&self, earlier: &ArenaStats) -> ArenaStats {
        ArenaStats {
            appends: self.appends - earlier.appends,
            comparisons: self.comparisons - earlier.comparisons,
        }
    }
}

impl<T> Arena<T> {
    pub fn new() -> Self {
        Arena {
            store: Arc::new(Store { nodes: RwLock::new(Vec::new()), cmps: AtomicU64::new(0) }),
        }
    }

    pub fn stats(&self) -> ArenaStats {
        ArenaStats {
            appends: self.read().len() as u64,
            comparisons: self.store.cmps.load(AtomicOrdering::Relaxed),
        }
    }

    /// Whether two handles share one store. Structures may only be melded
    /// within a store.
    pub fn same_store(&self, other: &Arena<T>) -> bool {
        Arc::ptr_eq(&self.store, &other.store)
    }

    pub(crate) fn read(&self) -> RwLockReadGuard<'_, Vec<Node<T>>> {
        self.store.nodes.read().expect("arena lock poisoned")
    }

    pub(crate) fn write(&self) -> RwLockWriteGuard<'_, Vec<Node<T>>> {
        self.store.nodes.write().expect("arena lock poisoned")
    }

    pub(crate) fn note_cmps(&self, n: u64) {
        self.store.cmps.fetch_add(n, AtomicOrdering::Relaxed);
    }
}

/// Append a node, returning its id.
pub(crate) fn push_node<T>(nodes: &mut Vec<Node<T>>, node: Node<T>) -> NodeId {
    let id = u32::try_from(nodes.len()).expect("arena exceeded u32 capacity");
    nodes.push(node);
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupValue;

    #[test]
    fn stats_track_appends_and_comparisons() {
        let arena: Arena<u32> = Arena::new();
        assert_eq!(arena.stats(), ArenaStats { appends: 0, comparisons: 0 });

        {
            let mut nodes = arena.write();
            push_node(
                &mut nodes,
                Node { fch: None, nsb: None, rank: 0, delta: GroupValue::Int(1), val: 7 },
            );
        }
        arena.note_cmps(3);

        let s = arena.stats();
        assert_eq!(s.appends, 1);
        assert_eq!(s.comparisons, 3);
        assert_eq!(s.total(), 4);
    }

    #[test]
    fn same_store_is_identity_not_equality() {
        let a: Arena<u32> = Arena::new();
        let b: Arena<u32> = Arena::new();
        assert!(a.same_store(&a.clone()));
        assert!(!a.same_store(&b));
    }
}
