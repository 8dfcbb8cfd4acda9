//! Constant-time queue operations via skew links and bootstrapping.
//!
//! Two layers live here. [`SkewHeapHandle`] is a persistent skew binomial
//! heap over the same arena nodes as [`pheap`](crate::pheap), but its `add`
//! runs in worst-case constant time: at most three node copies and three
//! comparisons, obtained by skew-linking the fresh element with the first
//! two roots whenever those share a rank. [`QueueHandle`] bootstraps that
//! heap: a queue is its minimum entry plus a skew heap whose elements are
//! whole sub-queues keyed by their minima. Bootstrapping makes `add`,
//! `meld`, `increase_by`, and `find_min` constant-time; `delete_min` pays
//! the logarithmic cost once, when it promotes the best sub-queue.
//!
//! Ties resolve toward the incumbent: the current top survives `add` and
//! `meld`, the earliest root wins `find_min`, the left operand survives a
//! link. The heap keeps its own link and meld routines rather than sharing
//! them with `pheap`, so the two structures stay independent witnesses for
//! each other.
//!
//! Root list shape: ranks strictly increase except that the first two roots
//! may share a rank. A rank-r tree holds between 2^r and 2^(r+1)-1 nodes.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::sync::Arc;

use crate::arena::{push_node, Arena, Node, NodeId};
use crate::group::{GroupSpec, GroupValue};
use crate::{Error, Result};

/// Handle to one persistent skew heap state.
pub struct SkewHeapHandle<T> {
    arena: Arena<T>,
    root: Option<NodeId>,
    delta_init: GroupValue,
}

impl<T> Clone for SkewHeapHandle<T> {
    fn clone(&self) -> Self {
        SkewHeapHandle {
            arena: self.arena.clone(),
            root: self.root,
            delta_init: self.delta_init.clone(),
        }
    }
}

/// Pending root during a restructure. Every descriptor points back at a
/// committed node; fresh values only enter through the constant-time add.
struct RootDesc {
    src: NodeId,
    fch: Option<NodeId>,
    rank: u32,
    prio: GroupValue,
}

fn cmp_counted<T>(arena: &Arena<T>, a: &GroupValue, b: &GroupValue) -> Ordering {
    arena.note_cmps(1);
    a.compare(b).expect("priorities within one heap share one group")
}

impl<T: Clone> SkewHeapHandle<T> {
    /// Heap holding `val` at `prio` in addition to everything in `self`.
    /// Worst-case constant: at most three appends and three comparisons.
    pub fn add(&self, val: T, prio: &GroupValue) -> Result<Self> {
        self.check_shape(prio)?;
        let mut nodes = self.arena.write();
        let root = add_core(&self.arena, &mut nodes, self.root, &self.delta_init, val, prio)?;
        Ok(SkewHeapHandle {
            arena: self.arena.clone(),
            root,
            delta_init: self.delta_init.clone(),
        })
    }

    /// Union of both heaps. Both inputs stay valid.
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
        let ours = normalize(&self.arena, &mut nodes, ours)?;
        let theirs = normalize(&self.arena, &mut nodes, theirs)?;
        let merged = meld_descs(&self.arena, &mut nodes, ours, theirs)?;
        let root = materialize(&mut nodes, merged);
        Ok(SkewHeapHandle {
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
                    src: id,
                    fch: node.fch,
                    rank: node.rank,
                    prio: self.delta_init.op(&node.delta)?,
                });
            }
            cursor = node.nsb;
        }

        // Children of the removed root: positive ranks reversed form a
        // legal root list again; rank-0 children are single nodes and
        // re-enter through the constant-time add.
        let mut tall_orphans = Vec::new();
        let mut lone_orphans = Vec::new();
        let mut cursor = nodes[min_id as usize].fch;
        while let Some(id) = cursor {
            let node = &nodes[id as usize];
            let prio = min_prio.op(&node.delta)?;
            if node.rank == 0 {
                lone_orphans.push((id, prio));
            } else {
                tall_orphans.push(RootDesc {
                    src: id,
                    fch: node.fch,
                    rank: node.rank,
                    prio,
                });
            }
            cursor = node.nsb;
        }
        tall_orphans.reverse();

        let survivors = normalize(&self.arena, &mut nodes, survivors)?;
        let tall_orphans = normalize(&self.arena, &mut nodes, tall_orphans)?;
        let merged = meld_descs(&self.arena, &mut nodes, survivors, tall_orphans)?;
        let zero = self.delta_init.identity_like();
        let mut root = materialize(&mut nodes, merged);
        for (id, prio) in lone_orphans {
            let val = nodes[id as usize].val.clone();
            root = add_core(&self.arena, &mut nodes, root, &zero, val, &prio)?;
        }
        Ok(SkewHeapHandle { arena: self.arena.clone(), root, delta_init: zero })
    }

    /// Every `(value, priority)` pair, in no particular order.
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

impl<T> SkewHeapHandle<T> {
    pub fn empty(arena: &Arena<T>, group: &GroupSpec) -> Self {
        SkewHeapHandle { arena: arena.clone(), root: None, delta_init: group.identity() }
    }

    /// Empty heap whose priorities share the shape of `zero`.
    pub(crate) fn empty_like(arena: &Arena<T>, zero: &GroupValue) -> Self {
        SkewHeapHandle { arena: arena.clone(), root: None, delta_init: zero.identity_like() }
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn arena(&self) -> &Arena<T> {
        &self.arena
    }

    /// Heap with every priority shifted by `d`. O(1), touches no node.
    pub fn increase_by(&self, d: &GroupValue) -> Result<Self> {
        self.check_shape(d)?;
        Ok(SkewHeapHandle {
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

    /// Checks the root rank pattern, heap order, per-tree size bounds, and
    /// the legal child rank sequences.
    pub fn validate(&self) -> Result<()> {
        let nodes = self.arena.read();
        let mut ranks = Vec::new();
        let mut cursor = self.root;
        while let Some(id) = cursor {
            let node = &nodes[id as usize];
            if !node.delta.same_shape(&self.delta_init) {
                return Err(Error::Invariant("mixed group shapes in one heap".into()));
            }
            ranks.push(node.rank);
            validate_skew_tree(&nodes, id)?;
            cursor = node.nsb;
        }
        for i in 1..ranks.len() {
            let ordered = if i == 1 { ranks[0] <= ranks[1] } else { ranks[i - 1] < ranks[i] };
            if !ordered {
                return Err(Error::Invariant(format!(
                    "root ranks {:?} break the skew pattern",
                    ranks
                )));
            }
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

/// Constant-time insert. When the first two roots share a rank, the fresh
/// element skew-links with both; otherwise it is prepended as a rank-0
/// root. At most three appends and three comparisons either way.
fn add_core<T: Clone>(
    arena: &Arena<T>,
    nodes: &mut Vec<Node<T>>,
    root: Option<NodeId>,
    delta_init: &GroupValue,
    val: T,
    prio: &GroupValue,
) -> Result<Option<NodeId>> {
    let dv = prio.minus(delta_init)?;

    let linkable = root.and_then(|first| {
        let n1 = &nodes[first as usize];
        n1.nsb.and_then(|second| {
            (n1.rank == nodes[second as usize].rank).then_some((first, second))
        })
    });

    let Some((r1, r2)) = linkable else {
        let id = push_node(nodes, Node { fch: None, nsb: root, rank: 0, delta: dv, val });
        return Ok(Some(id));
    };

    let rank = nodes[r1 as usize].rank;
    let rest = nodes[r2 as usize].nsb;
    let d1 = nodes[r1 as usize].delta.clone();
    let d2 = nodes[r2 as usize].delta.clone();

    let fresh_wins = cmp_counted(arena, &dv, &d1) == Ordering::Less
        && cmp_counted(arena, &dv, &d2) == Ordering::Less;

    if fresh_wins {
        // Both equal-rank roots become children of the fresh element.
        let (f2, v2) = {
            let n = &nodes[r2 as usize];
            (n.fch, n.val.clone())
        };
        let c2 = push_node(
            nodes,
            Node { fch: f2, nsb: None, rank, delta: d2.minus(&dv)?, val: v2 },
        );
        let (f1, v1) = {
            let n = &nodes[r1 as usize];
            (n.fch, n.val.clone())
        };
        let c1 = push_node(
            nodes,
            Node { fch: f1, nsb: Some(c2), rank, delta: d1.minus(&dv)?, val: v1 },
        );
        let id = push_node(
            nodes,
            Node { fch: Some(c1), nsb: rest, rank: rank + 1, delta: dv, val },
        );
        return Ok(Some(id));
    }

    // The smaller root keeps its place and gains the other root and the
    // fresh element as children. The first root wins a tie.
    let (w, l, dw, dl) = if cmp_counted(arena, &d1, &d2) != Ordering::Greater {
        (r1, r2, d1, d2)
    } else {
        (r2, r1, d2, d1)
    };
    let old_fch = nodes[w as usize].fch;
    let lone = push_node(
        nodes,
        Node { fch: None, nsb: old_fch, rank: 0, delta: dv.minus(&dw)?, val },
    );
    let (fl, vl) = {
        let n = &nodes[l as usize];
        (n.fch, n.val.clone())
    };
    let demoted = push_node(
        nodes,
        Node { fch: fl, nsb: Some(lone), rank, delta: dl.minus(&dw)?, val: vl },
    );
    let vw = nodes[w as usize].val.clone();
    let id = push_node(
        nodes,
        Node { fch: Some(demoted), nsb: rest, rank: rank + 1, delta: dw, val: vw },
    );
    Ok(Some(id))
}

fn root_descs<T>(
    nodes: &[Node<T>],
    root: Option<NodeId>,
    delta_init: &GroupValue,
) -> Result<Vec<RootDesc>> {
    let mut out = Vec::new();
    let mut cursor = root;
    while let Some(id) = cursor {
        let node = &nodes[id as usize];
        out.push(RootDesc {
            src: id,
            fch: node.fch,
            rank: node.rank,
            prio: delta_init.op(&node.delta)?,
        });
        cursor = node.nsb;
    }
    Ok(out)
}

/// Plain link of two equal-rank roots; the left operand survives a tie.
fn simple_link<T: Clone>(
    arena: &Arena<T>,
    nodes: &mut Vec<Node<T>>,
    left: RootDesc,
    right: RootDesc,
) -> Result<RootDesc> {
    debug_assert_eq!(left.rank, right.rank);
    let left_wins = cmp_counted(arena, &left.prio, &right.prio) != Ordering::Greater;
    let (winner, loser) = if left_wins { (left, right) } else { (right, left) };
    let loser_val = nodes[loser.src as usize].val.clone();
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

/// Links leading equal-rank pairs until ranks strictly increase.
fn normalize<T: Clone>(
    arena: &Arena<T>,
    nodes: &mut Vec<Node<T>>,
    descs: Vec<RootDesc>,
) -> Result<Vec<RootDesc>> {
    let mut queue: VecDeque<_> = descs.into();
    while queue.len() >= 2 && queue[0].rank == queue[1].rank {
        let a = queue.pop_front().expect("two fronts checked");
        let b = queue.pop_front().expect("two fronts checked");
        queue.push_front(simple_link(arena, nodes, a, b)?);
    }
    Ok(queue.into())
}

/// Binary-addition walk over two strictly rank-sorted root lists.
fn meld_descs<T: Clone>(
    arena: &Arena<T>,
    nodes: &mut Vec<Node<T>>,
    ours: Vec<RootDesc>,
    theirs: Vec<RootDesc>,
) -> Result<Vec<RootDesc>> {
    let mut ours: VecDeque<_> = ours.into();
    let mut theirs: VecDeque<_> = theirs.into();
    let mut carry: Option<RootDesc> = None;
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
            (Some(a), Some(b), None) => carry = Some(simple_link(arena, nodes, a, b)?),
            (Some(a), Some(b), Some(c)) => {
                out.push(a);
                carry = Some(simple_link(arena, nodes, b, c)?);
            }
            _ => unreachable!("at least one list held the minimum rank"),
        }
    }
    Ok(out)
}

fn materialize<T: Clone>(nodes: &mut Vec<Node<T>>, descs: Vec<RootDesc>) -> Option<NodeId> {
    let mut next = None;
    for desc in descs.into_iter().rev() {
        let val = nodes[desc.src as usize].val.clone();
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

/// Size check: a rank-r skew tree holds between 2^r and 2^(r+1)-1 nodes.
/// Child ranks must read as one of `[r-1] rest`, `[r-1, r-1]`, or
/// `[r-1, 0] rest` where `rest` is legal for rank r-1.
fn validate_skew_tree<T>(nodes: &[Node<T>], id: NodeId) -> Result<u64> {
    let node = &nodes[id as usize];
    let mut child_ranks = Vec::new();
    let mut size = 1u64;
    let mut cursor = node.fch;
    while let Some(child) = cursor {
        let child_node = &nodes[child as usize];
        if child_node
            .delta
            .compare(&child_node.delta.identity_like())
            .map_err(|_| Error::Invariant("mixed group shapes in one heap".into()))?
            == Ordering::Less
        {
            return Err(Error::Invariant("child offset below identity".into()));
        }
        child_ranks.push(child_node.rank);
        size += validate_skew_tree(nodes, child)?;
        cursor = child_node.nsb;
    }
    if !legal_children(&child_ranks, node.rank) {
        return Err(Error::Invariant(format!(
            "rank {} node has child ranks {:?}",
            node.rank, child_ranks
        )));
    }
    let r = node.rank;
    if size < (1u64 << r) || size > (1u64 << (r + 1)) - 1 {
        return Err(Error::Invariant(format!(
            "rank {} tree holds {} nodes",
            r, size
        )));
    }
    Ok(size)
}

fn legal_children(ranks: &[u32], rank: u32) -> bool {
    if rank == 0 {
        return ranks.is_empty();
    }
    let below = rank - 1;
    if ranks.first() != Some(&below) {
        return false;
    }
    let rest = &ranks[1..];
    if rest == [below] {
        return true;
    }
    legal_children(rest, below)
        || (rest.first() == Some(&0) && legal_children(&rest[1..], below))
}

/// Bootstrapped priority queue: the minimum entry rides on top, everything
/// else lives in a skew heap of whole sub-queues keyed by their minima.
/// Handles are persistent; cloning is O(1).
pub struct QueueHandle<T> {
    arena: Arena<QueueHandle<T>>,
    top: Option<Arc<QueueTop<T>>>,
}

struct QueueTop<T> {
    elem: T,
    prio: GroupValue,
    heap: SkewHeapHandle<QueueHandle<T>>,
}

impl<T> Clone for QueueHandle<T> {
    fn clone(&self) -> Self {
        QueueHandle { arena: self.arena.clone(), top: self.top.clone() }
    }
}

impl<T> QueueHandle<T> {
    pub fn empty(arena: &Arena<QueueHandle<T>>) -> Self {
        QueueHandle { arena: arena.clone(), top: None }
    }

    pub fn is_empty(&self) -> bool {
        self.top.is_none()
    }

    pub fn arena(&self) -> &Arena<QueueHandle<T>> {
        &self.arena
    }

    /// Priority of the minimum entry.
    pub fn min_priority(&self) -> Result<GroupValue> {
        let top = self.top.as_ref().ok_or(Error::EmptyQueue)?;
        Ok(top.prio.clone())
    }
}

impl<T: Clone> QueueHandle<T> {
    /// Queue holding `elem` at `prio` in addition to everything in `self`.
    /// Constant-time: at most three appends and four comparisons.
    pub fn add(&self, elem: T, prio: &GroupValue) -> Result<Self> {
        let Some(top) = &self.top else {
            return Ok(self.with_top(QueueTop {
                elem,
                prio: prio.clone(),
                heap: SkewHeapHandle::empty_like(&self.arena, prio),
            }));
        };
        if !top.prio.same_shape(prio) {
            return Err(Error::ArityMismatch { left: top.prio.shape(), right: prio.shape() });
        }
        self.arena.note_cmps(1);
        let incumbent_keeps =
            top.prio.compare(prio).expect("shape checked") != Ordering::Greater;
        if incumbent_keeps {
            let wrapped = self.with_top(QueueTop {
                elem,
                prio: prio.clone(),
                heap: SkewHeapHandle::empty_like(&self.arena, prio),
            });
            Ok(self.with_top(QueueTop {
                elem: top.elem.clone(),
                prio: top.prio.clone(),
                heap: top.heap.add(wrapped, prio)?,
            }))
        } else {
            // The whole incumbent queue drops into the fresh top's heap.
            let heap = SkewHeapHandle::empty_like(&self.arena, prio)
                .add(self.clone(), &top.prio)?;
            Ok(self.with_top(QueueTop { elem, prio: prio.clone(), heap }))
        }
    }

    /// Union of both queues. Constant-time: the loser drops whole into the
    /// winner's heap. The left queue keeps the top on a tie.
    pub fn meld(&self, other: &Self) -> Result<Self> {
        if !self.arena.same_store(&other.arena) {
            return Err(Error::ArenaMismatch);
        }
        let (Some(ours), Some(theirs)) = (&self.top, &other.top) else {
            return Ok(if self.top.is_some() { self.clone() } else { other.clone() });
        };
        if !ours.prio.same_shape(&theirs.prio) {
            return Err(Error::ArityMismatch {
                left: ours.prio.shape(),
                right: theirs.prio.shape(),
            });
        }
        self.arena.note_cmps(1);
        let keep_ours =
            ours.prio.compare(&theirs.prio).expect("shape checked") != Ordering::Greater;
        let (winner, loser, loser_prio) = if keep_ours {
            (ours, other, theirs.prio.clone())
        } else {
            (theirs, self, ours.prio.clone())
        };
        Ok(self.with_top(QueueTop {
            elem: winner.elem.clone(),
            prio: winner.prio.clone(),
            heap: winner.heap.add(loser.clone(), &loser_prio)?,
        }))
    }

    /// Queue with every priority shifted by `d`. Constant-time; an empty
    /// queue stays empty.
    pub fn increase_by(&self, d: &GroupValue) -> Result<Self> {
        let Some(top) = &self.top else {
            return Ok(self.clone());
        };
        Ok(self.with_top(QueueTop {
            elem: top.elem.clone(),
            prio: top.prio.op(d)?,
            heap: top.heap.increase_by(d)?,
        }))
    }

    /// Minimum entry as a `(value, priority)` pair. Constant-time.
    pub fn find_min(&self) -> Result<(T, GroupValue)> {
        let top = self.top.as_ref().ok_or(Error::EmptyQueue)?;
        Ok((top.elem.clone(), top.prio.clone()))
    }

    /// Queue without the minimum entry: the best sub-queue is promoted to
    /// the top and its heap merges with the rest.
    pub fn delete_min(&self) -> Result<Self> {
        let top = self.top.as_ref().ok_or(Error::EmptyQueue)?;
        if top.heap.is_empty() {
            return Ok(QueueHandle { arena: self.arena.clone(), top: None });
        }
        let (best, stored) = top.heap.find_min()?;
        let rest = top.heap.delete_min()?;
        let best_top = best.top.as_ref().expect("heap never stores an empty queue");
        // `stored` tracks shifts applied since `best` went in; its own heap
        // still lives in the old frame.
        let drift = stored.minus(&best_top.prio)?;
        let heap = best_top.heap.increase_by(&drift)?.meld(&rest)?;
        Ok(self.with_top(QueueTop { elem: best_top.elem.clone(), prio: stored, heap }))
    }

    /// Every `(value, priority)` pair, in no particular order.
    pub fn contents(&self) -> Result<Vec<(T, GroupValue)>> {
        let Some(top) = &self.top else {
            return Ok(Vec::new());
        };
        let mut out = vec![(top.elem.clone(), top.prio.clone())];
        for (sub, stored) in top.heap.contents()? {
            let sub_top = sub.top.as_ref().ok_or_else(|| {
                Error::Invariant("empty queue stored in a bootstrap heap".into())
            })?;
            let drift = stored.minus(&sub_top.prio)?;
            for (elem, prio) in sub.contents()? {
                out.push((elem, prio.op(&drift)?));
            }
        }
        Ok(out)
    }

    /// Checks that the top is minimal, the inner heap is well formed, and
    /// every stored sub-queue is non-empty and itself valid.
    pub fn validate(&self) -> Result<()> {
        let Some(top) = &self.top else {
            return Ok(());
        };
        top.heap.validate()?;
        for (sub, stored) in top.heap.contents()? {
            if top.prio.compare(&stored).map_err(|_| {
                Error::Invariant("mixed group shapes in one queue".into())
            })? == Ordering::Greater
            {
                return Err(Error::Invariant("queue top is not minimal".into()));
            }
            if sub.top.is_none() {
                return Err(Error::Invariant("empty queue stored in a bootstrap heap".into()));
            }
            sub.validate()?;
        }
        Ok(())
    }

    fn with_top(&self, top: QueueTop<T>) -> Self {
        QueueHandle { arena: self.arena.clone(), top: Some(Arc::new(top)) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupSpec, GroupValue};
    use crate::pheap::HeapHandle;
    use proptest::prelude::*;

    fn int(v: i64) -> GroupValue {
        GroupValue::Int(v)
    }

    fn as_int(v: GroupValue) -> i64 {
        match v {
            GroupValue::Int(i) => i,
            other => panic!("expected int priority, got {other}"),
        }
    }

    fn drain_heap(mut h: SkewHeapHandle<&'static str>) -> Vec<(&'static str, i64)> {
        let mut out = Vec::new();
        while !h.is_empty() {
            let (val, prio) = h.find_min().unwrap();
            out.push((val, as_int(prio)));
            h = h.delete_min().unwrap();
        }
        out
    }

    fn drain_queue(mut q: QueueHandle<&'static str>) -> Vec<(&'static str, i64)> {
        let mut out = Vec::new();
        while !q.is_empty() {
            let (val, prio) = q.find_min().unwrap();
            out.push((val, as_int(prio)));
            q = q.delete_min().unwrap();
        }
        out
    }

    #[test]
    fn fresh_minimum_links_as_parent_of_both_roots() {
        let arena = Arena::new();
        let h = SkewHeapHandle::empty(&arena, &GroupSpec::Int)
            .add("a", &int(3))
            .unwrap()
            .add("b", &int(5))
            .unwrap()
            .add("c", &int(1))
            .unwrap();
        h.validate().unwrap();

        let nodes = h.arena.read();
        let root = &nodes[h.root.unwrap() as usize];
        assert_eq!((root.rank, &root.delta, root.nsb), (1, &int(1), None));
        let first = &nodes[root.fch.unwrap() as usize];
        assert_eq!((first.rank, &first.delta), (0, &int(4)));
        let second = &nodes[first.nsb.unwrap() as usize];
        assert_eq!((second.rank, &second.delta, second.nsb), (0, &int(2), None));
    }

    #[test]
    fn fresh_non_minimum_demotes_under_the_smaller_root() {
        let arena = Arena::new();
        let h = SkewHeapHandle::empty(&arena, &GroupSpec::Int)
            .add("a", &int(5))
            .unwrap()
            .add("b", &int(3))
            .unwrap()
            .add("c", &int(9))
            .unwrap();
        h.validate().unwrap();

        let nodes = h.arena.read();
        let root = &nodes[h.root.unwrap() as usize];
        assert_eq!((root.rank, &root.delta, root.nsb), (1, &int(3), None));
        let first = &nodes[root.fch.unwrap() as usize];
        assert_eq!((first.rank, &first.delta), (0, &int(2)));
        let second = &nodes[first.nsb.unwrap() as usize];
        assert_eq!((second.rank, &second.delta, second.nsb), (0, &int(6), None));
        drop(nodes);

        assert_eq!(drain_heap(h), vec![("b", 3), ("a", 5), ("c", 9)]);
    }

    #[test]
    fn every_add_costs_at_most_three_appends_and_comparisons() {
        let arena = Arena::new();
        let mut h = SkewHeapHandle::empty(&arena, &GroupSpec::Int);
        for i in 0..200i64 {
            let before = arena.stats();
            h = h.add("x", &int((i * 7919) % 101)).unwrap();
            let spent = arena.stats().since(&before);
            assert!(spent.appends <= 3, "add appended {} nodes", spent.appends);
            assert!(spent.comparisons <= 3, "add compared {} times", spent.comparisons);
        }
        h.validate().unwrap();
        assert_eq!(h.contents().unwrap().len(), 200);
    }

    #[test]
    fn shifts_apply_to_later_deletes() {
        let arena = Arena::new();
        let h = SkewHeapHandle::empty(&arena, &GroupSpec::Int)
            .add("a", &int(5))
            .unwrap()
            .add("b", &int(3))
            .unwrap()
            .add("c", &int(8))
            .unwrap()
            .increase_by(&int(2))
            .unwrap();
        let (val, prio) = h.find_min().unwrap();
        assert_eq!((val, as_int(prio)), ("b", 5));
        let rest = h.delete_min().unwrap();
        let (val, prio) = rest.find_min().unwrap();
        assert_eq!((val, as_int(prio)), ("a", 7));
    }

    #[test]
    fn heap_survives_interleaved_melds_and_deletes() {
        let arena = Arena::new();
        let empty = SkewHeapHandle::empty(&arena, &GroupSpec::Int);
        let mut left = empty.clone();
        let mut right = empty;
        for i in 0..40i64 {
            left = left.add("l", &int(80 - i)).unwrap();
            right = right.add("r", &int(i)).unwrap();
        }
        let mut h = left.meld(&right).unwrap();
        h.validate().unwrap();
        let mut last = i64::MIN;
        let mut seen = 0;
        while !h.is_empty() {
            let p = as_int(h.min_priority().unwrap());
            assert!(p >= last);
            last = p;
            seen += 1;
            h = h.delete_min().unwrap();
            h.validate().unwrap();
        }
        assert_eq!(seen, 80);
    }

    #[derive(Clone, Debug)]
    enum Op {
        Add(u8),
        DeleteMin,
        IncreaseBy(i64),
        MeldStash,
    }

    fn op_strategy() -> impl Strategy<Value = Op> {
        prop_oneof![
            4 => any::<u8>().prop_map(Op::Add),
            2 => Just(Op::DeleteMin),
            1 => (-9i64..9).prop_map(Op::IncreaseBy),
            1 => Just(Op::MeldStash),
        ]
    }

    proptest! {
        /// Same scripted operations on the plain binomial heap and on the
        /// skew heap, with all-distinct priorities so deletions pick the
        /// same entry. Contents and minima must stay identical.
        #[test]
        fn skew_heap_matches_binomial_heap(ops in proptest::collection::vec(op_strategy(), 1..60)) {
            let plain_arena = Arena::new();
            let skew_arena = Arena::new();
            let mut plain: HeapHandle<u32> = HeapHandle::empty(&plain_arena, &GroupSpec::Int);
            let mut skew: SkewHeapHandle<u32> = SkewHeapHandle::empty(&skew_arena, &GroupSpec::Int);
            let mut plain_stash = plain.clone();
            let mut skew_stash = skew.clone();
            let mut serial = 0u32;

            for op in ops {
                match op {
                    Op::Add(p) => {
                        // Serial in the low digits keeps priorities distinct.
                        let prio = int(p as i64 * 10_000 + serial as i64);
                        if serial % 3 == 0 {
                            plain_stash = plain_stash.add(serial, &prio).unwrap();
                            skew_stash = skew_stash.add(serial, &prio).unwrap();
                        } else {
                            plain = plain.add(serial, &prio).unwrap();
                            skew = skew.add(serial, &prio).unwrap();
                        }
                        serial += 1;
                    }
                    Op::DeleteMin => {
                        prop_assert_eq!(plain.is_empty(), skew.is_empty());
                        if !plain.is_empty() {
                            prop_assert_eq!(plain.find_min().unwrap(), skew.find_min().unwrap());
                            plain = plain.delete_min().unwrap();
                            skew = skew.delete_min().unwrap();
                        }
                    }
                    Op::IncreaseBy(d) => {
                        let d = int(d * 100_000);
                        plain = plain.increase_by(&d).unwrap();
                        skew = skew.increase_by(&d).unwrap();
                    }
                    Op::MeldStash => {
                        plain = plain.meld(&plain_stash).unwrap();
                        skew = skew.meld(&skew_stash).unwrap();
                        plain_stash = HeapHandle::empty(&plain_arena, &GroupSpec::Int);
                        skew_stash = SkewHeapHandle::empty(&skew_arena, &GroupSpec::Int);
                    }
                }
                plain.validate().unwrap();
                skew.validate().unwrap();
                let mut a = plain.contents().unwrap();
                let mut b = skew.contents().unwrap();
                a.sort_by_key(|(v, p)| (p.clone().to_string(), *v));
                b.sort_by_key(|(v, p)| (p.clone().to_string(), *v));
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn queue_drains_in_priority_order_with_incumbent_ties_first() {
        let arena = Arena::new();
        let q = QueueHandle::empty(&arena)
            .add("x", &int(5))
            .unwrap()
            .add("y", &int(5))
            .unwrap()
            .add("z", &int(2))
            .unwrap()
            .add("w", &int(9))
            .unwrap();
        assert_eq!(drain_queue(q), vec![("z", 2), ("x", 5), ("y", 5), ("w", 9)]);
    }

    #[test]
    fn queue_meld_and_shift_compose() {
        let arena = Arena::new();
        let a = QueueHandle::empty(&arena)
            .add("a1", &int(4))
            .unwrap()
            .add("a2", &int(1))
            .unwrap();
        let b = QueueHandle::empty(&arena)
            .add("b1", &int(3))
            .unwrap()
            .add("b2", &int(0))
            .unwrap()
            .increase_by(&int(2))
            .unwrap();
        let q = a.meld(&b).unwrap();
        q.validate().unwrap();
        assert_eq!(drain_queue(q), vec![("a2", 1), ("b2", 2), ("a1", 4), ("b1", 5)]);
    }

    #[test]
    fn queue_handles_are_persistent() {
        let arena = Arena::new();
        let q1 = QueueHandle::empty(&arena)
            .add("a", &int(4))
            .unwrap()
            .add("b", &int(1))
            .unwrap()
            .add("c", &int(3))
            .unwrap();
        let q2 = q1.delete_min().unwrap();
        let q3 = q2.increase_by(&int(10)).unwrap().add("d", &int(2)).unwrap();

        assert_eq!(drain_queue(q1.clone()), vec![("b", 1), ("c", 3), ("a", 4)]);
        assert_eq!(drain_queue(q1), vec![("b", 1), ("c", 3), ("a", 4)]);
        assert_eq!(drain_queue(q2), vec![("c", 3), ("a", 4)]);
        assert_eq!(drain_queue(q3), vec![("d", 2), ("c", 13), ("a", 14)]);
    }

    #[test]
    fn constant_time_queue_ops_stay_within_budget() {
        let arena = Arena::new();
        let mut q = QueueHandle::empty(&arena);
        let mut other = QueueHandle::empty(&arena).add("o", &int(50)).unwrap();
        for i in 0..120i64 {
            let before = arena.stats();
            q = q.add("v", &int((i * 31) % 64)).unwrap();
            let spent = arena.stats().since(&before);
            assert!(spent.appends <= 8, "add appended {}", spent.appends);
            assert!(spent.comparisons <= 8, "add compared {}", spent.comparisons);

            let before = arena.stats();
            other = other.meld(&q).unwrap();
            let spent = arena.stats().since(&before);
            assert!(spent.appends <= 8, "meld appended {}", spent.appends);
            assert!(spent.comparisons <= 8, "meld compared {}", spent.comparisons);

            let before = arena.stats();
            let shifted = q.increase_by(&int(3)).unwrap();
            let found = shifted.find_min().unwrap();
            let spent = arena.stats().since(&before);
            assert_eq!(spent.appends, 0);
            assert_eq!(spent.comparisons, 0);
            drop(found);
        }
        other.validate().unwrap();
    }

    #[test]
    fn empty_queue_operations() {
        let arena: Arena<QueueHandle<&'static str>> = Arena::new();
        let q = QueueHandle::empty(&arena);
        assert!(matches!(q.find_min(), Err(Error::EmptyQueue)));
        assert!(matches!(q.delete_min(), Err(Error::EmptyQueue)));
        assert!(q.increase_by(&int(3)).unwrap().is_empty());
        let melded = q.meld(&q.clone()).unwrap();
        assert!(melded.is_empty());
    }

    proptest! {
        /// Queue against a plain sorted multiset, unique priorities.
        #[test]
        fn queue_behaves_like_a_sorted_multiset(ops in proptest::collection::vec(op_strategy(), 1..60)) {
            let arena = Arena::new();
            let mut q: QueueHandle<u32> = QueueHandle::empty(&arena);
            let mut model: Vec<(i64, u32)> = Vec::new();
            let mut serial = 0u32;

            for op in ops {
                match op {
                    Op::Add(p) => {
                        let prio = p as i64 * 10_000 + serial as i64;
                        q = q.add(serial, &int(prio)).unwrap();
                        model.push((prio, serial));
                        serial += 1;
                    }
                    Op::DeleteMin | Op::MeldStash => {
                        if model.is_empty() {
                            prop_assert!(q.is_empty());
                        } else {
                            let (val, prio) = q.find_min().unwrap();
                            let best = model.iter().copied().min().unwrap();
                            prop_assert_eq!((best.1, best.0), (val, as_int(prio)));
                            model.retain(|e| *e != best);
                            q = q.delete_min().unwrap();
                        }
                    }
                    Op::IncreaseBy(d) => {
                        q = q.increase_by(&int(d)).unwrap();
                        for e in &mut model {
                            e.0 += d;
                        }
                    }
                }
                q.validate().unwrap();
                let mut got: Vec<(i64, u32)> = q
                    .contents()
                    .unwrap()
                    .into_iter()
                    .map(|(v, p)| (as_int(p), v))
                    .collect();
                got.sort();
                let mut want = model.clone();
                want.sort();
                prop_assert_eq!(got, want);
            }
        }
    }
}
