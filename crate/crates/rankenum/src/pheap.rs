//! Persistent binomial heap with priority offsets.
//!
//! A handle is a root list in an [`Arena`](crate::arena) plus one offset
//! applied to every root. A node stores its priority relative to its parent
//! (relative to the handle offset at roots), so `increase_by` shifts every
//! priority in the heap by rewriting only the handle. All other operations
//! copy the root list and the O(log n) nodes touched by links; everything
//! below a copied node is shared with the handles that came before.
//!
//! Heap order in relative form: a child's stored offset is never below the
//! group identity. The root list keeps strictly increasing ranks, one tree
//! per rank, exactly like an ephemeral binomial heap.
//!
//! Ties are deterministic: the earlier root wins `find_min`, and the left
//! operand survives a link. "Left" means carry, then this handle's roots,
//! then the melded-in roots.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::arena::{push_node, Arena, Node, NodeId};
use crate::group::{GroupSpec, GroupValue};
use crate::{Error, Result};

/// Handle to one persistent heap state. Cloning a handle is O(1) and both
/// copies remain valid forever.
pub struct HeapHandle<T> {
    arena: Arena<T>,
    root: Option<NodeId>,
    delta_init: GroupValue,
}

impl<T> Clone for HeapHandle<T> {
    fn clone(&self) -> Self {
        HeapHandle {
            arena: self.arena.clone(),
            root: self.root,
            delta_init: self.delta_init.clone(),
        }
    }
}

/// Pending root during a meld: either a committed node to copy or a value
/// entering the heap now. `prio` is absolute.
enum Src<T> {
    Copy(NodeId),
    Fresh(T),
}

struct RootDesc<T> {
    src: Src<T>,
    fch: Option<NodeId>,
    rank: u32,
    prio: GroupValue,
}

fn cmp_counted<T>(arena: &Arena<T>, a: &GroupValue, b: &GroupValue) -> Ordering {
    arena.note_cmps(1);
    a.compare(b).expect("priorities within one heap share one group")
}

impl<T: Clone> HeapHandle<T> {
    /// Heap holding `val` at `prio` in addition to everything in `self`.
    pub fn add(&self, val: T, prio: &GroupValue) -> Result<Self> {
        self.check_shape(prio)?;
        let mut nodes = self.arena.write();
        let ours = root_descs(&nodes, self.root, &self.delta_init)?;
        let fresh = vec![RootDesc { src: Src::Fresh(val), fch: None, rank: 0, prio: prio.clone() }];
        let merged = meld_descs(&self.arena, &mut nodes, ours, fresh)?;
        let root = materialize(&mut nodes, merged);
        Ok(HeapHandle {
            arena: self.arena.clone(),
            root,
            delta_init: self.delta_init.identity_like(),
        })
    }

    /// Heap holding the union of both heaps' contents. Both inputs stay
    /// valid. The heaps must live in one arena.
    pub fn meld(&self, other: &Self) -> Result<Self> {
        if !self.arena.same_store(&other.arena) {
            return Err(Error::ArenaMismatch);
        }
        self.check_shape(&other.delta_init)?;
        if self.root.is_none() {
            return Ok(other.clone());
        }
        if other.root.is_none() {
            return Ok(self.clone());
        }
        let mut nodes = self.arena.write();
        let ours = root_descs(&nodes, self.root, &self.delta_init)?;
        let theirs = root_descs(&nodes, other.root, &other.delta_init)?;
        let merged = meld_descs(&self.arena, &mut nodes, ours, theirs)?;
        let root = materialize(&mut nodes, merged);
        Ok(HeapHandle {
            arena: self.arena.clone(),
            root,
            delta_init: self.delta_init.identity_like(),
        })
    }

    /// Minimum entry as a `(value, priority)` pair. Earliest root wins ties.
    pub fn find_min(&self) -> Result<(T, GroupValue)> {
        let nodes = self.arena.read();
        let (id, prio) = min_root(&self.arena, &nodes, self.root, &self.delta_init)?;
        Ok((nodes[id as usize].val.clone(), prio))
    }

    /// Heap with the entry reported by [`find_min`](Self::find_min) removed.
    pub fn delete_min(&self) -> Result<Self> {
        let mut nodes = self.arena.write();
        let (min_id, min_prio) = min_root(&self.arena, &nodes, self.root, &self.delta_init)?;

        let mut survivors = Vec::new();
        let mut cursor = self.root;
        while let Some(id) = cursor {
            let node = &nodes[id as usize];
            if id != min_id {
                survivors.push(RootDesc {
                    src: Src::Copy(id),
                    fch: node.fch,
                    rank: node.rank,
                    prio: self.delta_init.op(&node.delta)?,
                });
            }
            cursor = node.nsb;
        }

        // Children of the removed root have ranks r-1 down to 0; reversing
        // restores the strictly increasing root order.
        let mut orphans = Vec::new();
        let mut cursor = nodes[min_id as usize].fch;
        while let Some(id) = cursor {
            let node = &nodes[id as usize];
            orphans.push(RootDesc {
                src: Src::Copy(id),
                fch: node.fch,
                rank: node.rank,
                prio: min_prio.op(&node.delta)?,
            });
            cursor = node.nsb;
        }
        orphans.reverse();

        let merged = meld_descs(&self.arena, &mut nodes, survivors, orphans)?;
        let root = materialize(&mut nodes, merged);
        Ok(HeapHandle {
            arena: self.arena.clone(),
            root,
            delta_init: self.delta_init.identity_like(),
        })
    }

    /// Every `(value, priority)` pair in the heap, in no particular order.
    pub fn contents(&self) -> Result<Vec<(T, GroupValue)>> {
        let nodes = self.arena.read();
        let mut out = Vec::new();
        let mut cursor = self.root;
        while let Some(id) = cursor {
            let node = &nodes[id as usize];
            collect(&nodes, id, self.delta_init.op(&node.delta)?, &mut out)?;
            cursor = node.nsb;
        }
        Ok(out)
    }
}

impl<T> HeapHandle<T> {
    pub fn empty(arena: &Arena<T>, group: &GroupSpec) -> Self {
        HeapHandle { arena: arena.clone(), root: None, delta_init: group.identity() }
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn arena(&self) -> &Arena<T> {
        &self.arena
    }

    /// Heap with every priority shifted by `d`. O(1): only the handle
    /// offset changes, no node is touched.
    pub fn increase_by(&self, d: &GroupValue) -> Result<Self> {
        self.check_shape(d)?;
        Ok(HeapHandle {
            arena: self.arena.clone(),
            root: self.root,
            delta_init: self.delta_init.op(d)?,
        })
    }

    /// Priority of the minimum entry.
    pub fn min_priority(&self) -> Result<GroupValue> {
        let nodes = self.arena.read();
        let (_, prio) = min_root(&self.arena, &nodes, self.root, &self.delta_init)?;
        Ok(prio)
    }

    /// Checks binomial shape on every tree and heap order on every edge.
    pub fn validate(&self) -> Result<()> {
        let nodes = self.arena.read();
        let mut last_rank: Option<u32> = None;
        let mut cursor = self.root;
        while let Some(id) = cursor {
            let node = &nodes[id as usize];
            if let Some(prev) = last_rank {
                if node.rank <= prev {
                    return Err(Error::Invariant(format!(
                        "root ranks must strictly increase, saw {} after {}",
                        node.rank, prev
                    )));
                }
            }
            last_rank = Some(node.rank);
            if !node.delta.same_shape(&self.delta_init) {
                return Err(Error::Invariant("mixed group shapes in one heap".into()));
            }
            validate_tree(&nodes, id)?;
            cursor = node.nsb;
        }
        Ok(())
    }

    fn check_shape(&self, v: &GroupValue) -> Result<()> {
        if self.delta_init.same_shape(v) {
            Ok(())
        } else {
            Err(Error::ArityMismatch { left: self.delta_init.shape(), right: v.shape() })
        }
    }
}

fn root_descs<T>(
    nodes: &[Node<T>],
    root: Option<NodeId>,
    delta_init: &GroupValue,
) -> Result<Vec<RootDesc<T>>> {
    let mut out = Vec::new();
    let mut cursor = root;
    while let Some(id) = cursor {
        let node = &nodes[id as usize];
        out.push(RootDesc {
            src: Src::Copy(id),
            fch: node.fch,
            rank: node.rank,
            prio: delta_init.op(&node.delta)?,
        });
        cursor = node.nsb;
    }
    Ok(out)
}

/// Links two equal-rank roots: the loser is committed as the winner's new
/// first child, the winner stays pending with its rank bumped. The left
/// operand survives a tie.
fn link<T: Clone>(
    arena: &Arena<T>,
    nodes: &mut Vec<Node<T>>,
    left: RootDesc<T>,
    right: RootDesc<T>,
) -> Result<RootDesc<T>> {
    debug_assert_eq!(left.rank, right.rank);
    let left_wins = cmp_counted(arena, &left.prio, &right.prio) != Ordering::Greater;
    let (winner, loser) = if left_wins { (left, right) } else { (right, left) };
    let loser_val = match loser.src {
        Src::Copy(id) => nodes[id as usize].val.clone(),
        Src::Fresh(v) => v,
    };
    let child = push_node(
        nodes,
        Node {
            fch: loser.fch,
            nsb: winner.fch,
            rank: loser.rank,
            delta: loser.prio.minus(&winner.prio)?,
            val: loser_val,
        },
    );
    Ok(RootDesc { src: winner.src, fch: Some(child), rank: winner.rank + 1, prio: winner.prio })
}

/// Binary-addition walk over two rank-sorted root lists. Equal ranks link
/// and carry; the result is rank-sorted with one root per rank.
fn meld_descs<T: Clone>(
    arena: &Arena<T>,
    nodes: &mut Vec<Node<T>>,
    ours: Vec<RootDesc<T>>,
    theirs: Vec<RootDesc<T>>,
) -> Result<Vec<RootDesc<T>>> {
    let mut ours: VecDeque<_> = ours.into();
    let mut theirs: VecDeque<_> = theirs.into();
    let mut carry: Option<RootDesc<T>> = None;
    let mut out = Vec::new();

    loop {
        let ranks = [
            carry.as_ref().map(|d| d.rank),
            ours.front().map(|d| d.rank),
            theirs.front().map(|d| d.rank),
        ];
        let Some(min_rank) = ranks.iter().flatten().min().copied() else { break };

        let mut same = Vec::new();
        if carry.as_ref().is_some_and(|d| d.rank == min_rank) {
            same.push(carry.take().expect("checked above"));
        }
        if ours.front().is_some_and(|d| d.rank == min_rank) {
            same.push(ours.pop_front().expect("checked above"));
        }
        if theirs.front().is_some_and(|d| d.rank == min_rank) {
            same.push(theirs.pop_front().expect("checked above"));
        }

        let mut same = same.into_iter();
        match (same.next(), same.next(), same.next()) {
            (Some(only), None, None) => out.push(only),
            (Some(a), Some(b), None) => carry = Some(link(arena, nodes, a, b)?),
            (Some(a), Some(b), Some(c)) => {
                out.push(a);
                carry = Some(link(arena, nodes, b, c)?);
            }
            _ => unreachable!("at least one list held the minimum rank"),
        }
    }
    Ok(out)
}

/// Commits pending roots right to left so each can point at its successor.
/// Absolute priorities become the stored offsets: the new handle starts
/// from the identity offset.
fn materialize<T: Clone>(nodes: &mut Vec<Node<T>>, descs: Vec<RootDesc<T>>) -> Option<NodeId> {
    let mut next = None;
    for desc in descs.into_iter().rev() {
        let val = match desc.src {
            Src::Copy(id) => {
                // A committed node is immutable, so a root reappearing with
                // a different sibling or offset needs a fresh copy.
                nodes[id as usize].val.clone()
            }
            Src::Fresh(v) => v,
        };
        let id = push_node(
            nodes,
            Node { fch: desc.fch, nsb: next, rank: desc.rank, delta: desc.prio, val },
        );
        next = Some(id);
    }
    next
}

fn min_root<T>(
    arena: &Arena<T>,
    nodes: &[Node<T>],
    root: Option<NodeId>,
    delta_init: &GroupValue,
) -> Result<(NodeId, GroupValue)> {
    let mut cursor = root;
    let mut best: Option<(NodeId, GroupValue)> = None;
    while let Some(id) = cursor {
        let node = &nodes[id as usize];
        let prio = delta_init.op(&node.delta)?;
        best = match best {
            None => Some((id, prio)),
            Some(incumbent) => {
                if cmp_counted(arena, &prio, &incumbent.1) == Ordering::Less {
                    Some((id, prio))
                } else {
                    Some(incumbent)
                }
            }
        };
        cursor = node.nsb;
    }
    best.ok_or(Error::EmptyHeap)
}

fn collect<T: Clone>(
    nodes: &[Node<T>],
    id: NodeId,
    prio: GroupValue,
    out: &mut Vec<(T, GroupValue)>,
) -> Result<()> {
    let node = &nodes[id as usize];
    let mut cursor = node.fch;
    while let Some(child) = cursor {
        let child_node = &nodes[child as usize];
        collect(nodes, child, prio.op(&child_node.delta)?, out)?;
        cursor = child_node.nsb;
    }
    out.push((node.val.clone(), prio));
    Ok(())
}

/// A rank-r binomial tree has children of ranks r-1 down to 0 and no child
/// priority below its parent (offsets never below identity).
fn validate_tree<T>(nodes: &[Node<T>], id: NodeId) -> Result<()> {
    let node = &nodes[id as usize];
    let mut expected = node.rank;
    let mut cursor = node.fch;
    while let Some(child) = cursor {
        let child_node = &nodes[child as usize];
        if expected == 0 {
            return Err(Error::Invariant(format!(
                "rank {} node has more than {} children",
                node.rank, node.rank
            )));
        }
        expected -= 1;
        if child_node.rank != expected {
            return Err(Error::Invariant(format!(
                "child rank {} where {} expected",
                child_node.rank, expected
            )));
        }
        if child_node
            .delta
            .compare(&child_node.delta.identity_like())
            .map_err(|_| Error::Invariant("mixed group shapes in one heap".into()))?
            == Ordering::Less
        {
            return Err(Error::Invariant("child offset below identity".into()));
        }
        validate_tree(nodes, child)?;
        cursor = child_node.nsb;
    }
    if expected != 0 {
        return Err(Error::Invariant(format!(
            "rank {} node is missing children",
            node.rank
        )));
    }
    Ok(())
}
