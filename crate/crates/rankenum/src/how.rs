//! Heap of words: a priority queue whose elements are whole words.
//!
//! A store is a queue of edges. Each edge carries one letter and a child
//! store; a word is read along a path of edges, deepest letter first, so
//! the edge nearest the root holds the word's last letter. The empty
//! letter may only sit at the deepest level, where a word begins.
//!
//! The shape buys the two operations a flat queue cannot give cheaply:
//! `extend_by` appends one letter to every word at once by wrapping the
//! whole store under a single fresh edge, and `increase_by` shifts every
//! cost through the queue's offset. Both are constant-time, as are `add`
//! and `meld`. `find_min` walks one root-to-leaf path; `delete_min`
//! removes one word and re-files the minimum edge at the cost of its next
//! cheapest continuation.

use std::fmt::Display;
use std::fmt::Write as _;

use crate::arena::Arena;
use crate::brodal::QueueHandle;
use crate::group::GroupValue;
use crate::{Error, Result};

/// Edge label: a proper letter, or the empty letter that seeds a store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Letter<L> {
    Epsilon,
    Sym(L),
}

/// One letter plus the store of words it continues. Opaque: it only
/// appears as the element type inside [`HowArena`].
#[derive(Clone)]
pub struct HowEdge<L> {
    letter: Letter<L>,
    child: HowHandle<L>,
}

/// Arena shared by every store participating in one enumeration.
pub type HowArena<L> = Arena<QueueHandle<HowEdge<L>>>;

/// Handle to one persistent word store. Cloning is O(1) and historical
/// handles stay valid.
pub struct HowHandle<L> {
    q: QueueHandle<HowEdge<L>>,
}

impl<L> Clone for HowHandle<L> {
    fn clone(&self) -> Self {
        HowHandle { q: self.q.clone() }
    }
}

fn demote_empty(e: Error) -> Error {
    match e {
        Error::EmptyQueue => Error::EmptyHow,
        other => other,
    }
}

impl<L: Clone> HowHandle<L> {
    pub fn empty(arena: &HowArena<L>) -> Self {
        HowHandle { q: QueueHandle::empty(arena) }
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn arena(&self) -> &HowArena<L> {
        self.q.arena()
    }

    /// Store also holding the one-letter word `letter` at `prio` (the empty
    /// word when `letter` is [`Letter::Epsilon`]). Constant-time.
    pub fn add(&self, letter: Letter<L>, prio: &GroupValue) -> Result<Self> {
        let arena = self.q.arena().clone();
        let edge = HowEdge { letter, child: HowHandle { q: QueueHandle::empty(&arena) } };
        Ok(HowHandle { q: self.q.add(edge, prio)? })
    }

    /// Store with `letter` appended to every word, costs unchanged. The
    /// whole store moves under one fresh edge, so this is constant-time.
    /// An empty store stays empty.
    pub fn extend_by(&self, letter: L) -> Result<Self> {
        if self.q.is_empty() {
            return Ok(self.clone());
        }
        let prio = self.q.min_priority()?;
        let arena = self.q.arena().clone();
        let edge = HowEdge { letter: Letter::Sym(letter), child: self.clone() };
        Ok(HowHandle { q: QueueHandle::empty(&arena).add(edge, &prio)? })
    }

    /// Store with every cost shifted by `d`. Constant-time.
    pub fn increase_by(&self, d: &GroupValue) -> Result<Self> {
        Ok(HowHandle { q: self.q.increase_by(d)? })
    }

    /// Union of both stores. Constant-time.
    pub fn meld(&self, other: &Self) -> Result<Self> {
        Ok(HowHandle { q: self.q.meld(&other.q)? })
    }

    /// Cheapest word and its cost. Letters come off the path root-first,
    /// which is last-letter-first, hence the reversal.
    pub fn find_min(&self) -> Result<(Vec<L>, GroupValue)> {
        let (mut edge, prio) = self.q.find_min().map_err(demote_empty)?;
        let mut word = Vec::new();
        loop {
            if let Letter::Sym(l) = &edge.letter {
                word.push(l.clone());
            }
            if edge.child.q.is_empty() {
                break;
            }
            edge = edge.child.q.find_min()?.0;
        }
        word.reverse();
        Ok((word, prio))
    }

    /// Cost of the cheapest word.
    pub fn min_priority(&self) -> Result<GroupValue> {
        self.q.min_priority().map_err(demote_empty)
    }

    /// Store without the word reported by [`find_min`](Self::find_min).
    /// The removed word's edge returns at the cost of its next cheapest
    /// continuation, or vanishes when none is left. An empty store stays
    /// empty.
    pub fn delete_min(&self) -> Result<Self> {
        if self.q.is_empty() {
            return Ok(self.clone());
        }
        let (edge, top_prio) = self.q.find_min()?;
        let rest = self.q.delete_min()?;
        if edge.child.is_empty() {
            return Ok(HowHandle { q: rest });
        }
        let child_min = edge.child.min_priority()?;
        let reduced = edge.child.delete_min()?;
        if reduced.is_empty() {
            return Ok(HowHandle { q: rest });
        }
        let bump = reduced.min_priority()?.minus(&child_min)?;
        let refiled = HowEdge { letter: edge.letter, child: reduced };
        Ok(HowHandle { q: rest.add(refiled, &top_prio.op(&bump)?)? })
    }

    /// Every `(word, cost)` pair, in no particular order. Costs are
    /// recovered edge by edge: an edge stored at p over a child with
    /// minimum m contributes p - m to each word below it.
    pub fn contents(&self) -> Result<Vec<(Vec<L>, GroupValue)>> {
        let mut out = Vec::new();
        for (edge, prio) in self.q.contents()? {
            if edge.child.is_empty() {
                let word = match edge.letter {
                    Letter::Epsilon => Vec::new(),
                    Letter::Sym(l) => vec![l],
                };
                out.push((word, prio));
            } else {
                let base = prio.minus(&edge.child.min_priority()?)?;
                for (mut word, cost) in edge.child.contents()? {
                    if let Letter::Sym(l) = &edge.letter {
                        word.push(l.clone());
                    }
                    out.push((word, cost.op(&base)?));
                }
            }
        }
        Ok(out)
    }

    /// Checks the queue layers and that the empty letter only labels
    /// deepest edges.
    pub fn validate(&self) -> Result<()> {
        self.q.validate()?;
        for (edge, _) in self.q.contents()? {
            if matches!(edge.letter, Letter::Epsilon) && !edge.child.is_empty() {
                return Err(Error::Invariant(
                    "empty letter on an edge with continuations".into(),
                ));
            }
            edge.child.validate()?;
        }
        Ok(())
    }
}

impl<L: Clone + Display> HowHandle<L> {
    /// Edge dump for debugging: one `src	letter	cost	dst` line per
    /// edge, nodes numbered in depth-first preorder, `eps` for the empty
    /// letter. Costs are absolute.
    pub fn export_edges(&self) -> Result<String> {
        let mut out = String::new();
        let mut next_id = 1u32;
        self.export_from(0, &mut next_id, &mut out)?;
        Ok(out)
    }

    fn export_from(&self, src: u32, next_id: &mut u32, out: &mut String) -> Result<()> {
        for (edge, prio) in self.q.contents()? {
            let dst = *next_id;
            *next_id += 1;
            let letter = match &edge.letter {
                Letter::Epsilon => "eps".to_string(),
                Letter::Sym(l) => l.to_string(),
            };
            writeln!(out, "{src}\t{letter}\t{prio}\t{dst}").expect("string writes are infallible");
            edge.child.export_from(dst, next_id, out)?;
        }
        Ok(())
    }
}
