//! Level-by-level preprocessing and ranked enumeration.
//!
//! Preprocessing scans the word once. Level 0 holds, per initial state q,
//! a store containing only the empty output at priority I(q). Level i is
//! built from level i−1 alone: every transition t = (p, g, X, q) whose
//! guard fires on the i-th item contributes its source store, extended by
//! the letter (X, i) when X is non-empty, shifted by t's cost, and melded
//! into the target store. Folding final costs over the last level yields a
//! single store whose ranked drain is the answer.
//!
//! Per item this performs a constant number of constant-append store
//! operations per transition, so preprocessing cost is linear in
//! |transitions| × |word|. Draining emits outputs in non-decreasing cost
//! order with per-output work logarithmic in the store size. All handles
//! are persistent: a level or an output store stays drainable unchanged
//! after further pushes.
//!
//! The same `LevelState` drives batch preprocessing and the event-stream
//! session; `outputs` re-applies the final-cost fold each call, so a
//! push's cost stays local to the pushed item.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::group::GroupValue;
use crate::how::{HowArena, HowHandle, Letter};
use crate::transducer::{
    CostTransducer, EncodedAssignment, EventRecord, GuardMode, Guard, InputItem, Mark, Predicate,
    RankedOutput,
};
use crate::{Arena, Result};

/// One position's per-state output stores. An immutable value: `push`
/// returns the next position's state and leaves this one usable.
pub struct LevelState {
    t: Arc<CostTransducer>,
    arena: HowArena<Mark>,
    levels: Vec<Option<HowHandle<Mark>>>,
    pos: u32,
}

impl Clone for LevelState {
    fn clone(&self) -> Self {
        LevelState {
            t: self.t.clone(),
            arena: self.arena.clone(),
            levels: self.levels.clone(),
            pos: self.pos,
        }
    }
}

impl LevelState {
    /// Advances one position. Transitions apply in declaration order,
    /// which fixes the (semantically irrelevant) tie order among
    /// equal-cost outputs.
    pub fn push<I: InputItem>(&self, item: &I) -> Result<LevelState> {
        let pos = self.pos + 1;
        let mut next: Vec<Option<HowHandle<Mark>>> = vec![None; self.levels.len()];
        for t in &self.t.transitions {
            let Some(h) = &self.levels[t.from] else { continue };
            if !item.fires(&t.guard) {
                continue;
            }
            let mut g = h.clone();
            if t.varset != 0 {
                g = g.extend_by(Mark { vars: t.varset, pos })?;
            }
            g = g.increase_by(&t.cost)?;
            next[t.to] = Some(match next[t.to].take() {
                None => g,
                Some(prev) => prev.meld(&g)?,
            });
        }
        Ok(LevelState {
            t: self.t.clone(),
            arena: self.arena.clone(),
            levels: next,
            pos,
        })
    }

    /// Folds final costs over the current level into one drainable store:
    /// the ranked outputs at this position.
    pub fn outputs(&self) -> Result<HowHandle<Mark>> {
        let mut out = HowHandle::empty(&self.arena);
        for (q, fc) in &self.t.finals {
            if let Some(h) = &self.levels[*q] {
                out = out.meld(&h.increase_by(fc)?)?;
            }
        }
        Ok(out)
    }

    pub fn position(&self) -> u32 {
        self.pos
    }

    pub fn arena(&self) -> &HowArena<Mark> {
        &self.arena
    }
}

/// Opens a streaming session at position 0: per initial state, the empty
/// output at its initial cost.
pub fn stream_new(t: &Arc<CostTransducer>) -> Result<LevelState> {
    let arena: HowArena<Mark> = Arena::new();
    let mut levels = vec![None; t.states.len()];
    for (q, ic) in &t.init {
        levels[*q] = Some(HowHandle::empty(&arena).add(Letter::Epsilon, ic)?);
    }
    Ok(LevelState { t: t.clone(), arena, levels, pos: 0 })
}

pub fn stream_push<I: InputItem>(s: &LevelState, item: &I) -> Result<LevelState> {
    s.push(item)
}

pub fn stream_outputs(s: &LevelState) -> Result<HowHandle<Mark>> {
    s.outputs()
}

/// Runs the full preprocessing scan and returns the drainable output
/// store for the whole word.
pub fn preprocess<I: InputItem>(
    t: &Arc<CostTransducer>,
    word: &[I],
) -> Result<HowHandle<Mark>> {
    let mut s = stream_new(t)?;
    for item in word {
        s = s.push(item)?;
    }
    s.outputs()
}

/// Lazy ranked drain of an output store. Costs are non-decreasing and no
/// assignment appears twice; an exhausted, capped, or over-threshold
/// stream yields `None` from then on.
pub struct OutputStream {
    how: HowHandle<Mark>,
    emitted: usize,
    top_k: Option<usize>,
    max_cost: Option<GroupValue>,
    done: bool,
}

impl Iterator for OutputStream {
    type Item = Result<RankedOutput>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done || self.top_k.is_some_and(|k| self.emitted >= k) || self.how.is_empty() {
            self.done = true;
            return None;
        }
        let (letters, cost) = match self.how.find_min() {
            Ok(x) => x,
            Err(e) => {
                self.done = true;
                return Some(Err(e));
            }
        };
        if let Some(mc) = &self.max_cost {
            match cost.compare(mc) {
                Ok(Ordering::Greater) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        match self.how.delete_min() {
            Ok(rest) => self.how = rest,
            Err(e) => {
                self.done = true;
                return Some(Err(e));
            }
        }
        self.emitted += 1;
        Some(Ok(RankedOutput { enc: EncodedAssignment(letters), cost }))
    }
}

pub fn enumerate(h: &HowHandle<Mark>) -> OutputStream {
    enumerate_filtered(h, None, None)
}

/// Drain stopping after `top_k` outputs or at the first output whose cost
/// exceeds `max_cost`; because emission is cost-sorted, the threshold cut
/// loses nothing below it.
pub fn enumerate_filtered(
    h: &HowHandle<Mark>,
    top_k: Option<usize>,
    max_cost: Option<GroupValue>,
) -> OutputStream {
    OutputStream {
        how: h.clone(),
        emitted: 0,
        top_k,
        max_cost,
        done: false,
    }
}

/// One benchmark measurement. Operation counts are abstract structure
/// work, arena appends plus group comparisons, so the trends are
/// deterministic for a fixed seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRow {
    pub n: usize,
    pub preprocess_ops: u64,
    pub outputs: usize,
    /// Worst ceil(ops / output length) over the drained outputs; `None`
    /// when nothing was drained.
    pub max_delay_ops_per_symbol: Option<u64>,
}

/// Benchmarks one machine over seeded random words of the given lengths,
/// draining at most `max_outputs` outputs per length. Symbol-mode words
/// sample the declared symbols; predicate-mode words sample events from
/// the types and attribute constants the guards mention.
pub fn bench_machine(
    t: &Arc<CostTransducer>,
    lengths: &[usize],
    seed: u64,
    max_outputs: usize,
) -> Result<Vec<BenchRow>> {
    let mode = t.guard_mode()?;
    let mut rows = Vec::new();
    for &n in lengths {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(n as u64));
        let row = match mode {
            Some(GuardMode::Predicates) => {
                let pool = event_pool(t);
                let word: Vec<EventRecord> =
                    (0..n).map(|_| sample_event(&pool, &mut rng)).collect();
                bench_row(t, &word, max_outputs)?
            }
            _ => {
                let alphabet = symbol_alphabet(t);
                let word: Vec<String> = (0..n)
                    .map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone())
                    .collect();
                bench_row(t, &word, max_outputs)?
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

fn bench_row<I: InputItem>(
    t: &Arc<CostTransducer>,
    word: &[I],
    max_outputs: usize,
) -> Result<BenchRow> {
    let mut s = stream_new(t)?;
    for item in word {
        s = s.push(item)?;
    }
    let how = s.outputs()?;
    let preprocess_ops = s.arena().stats().total();

    let mut outputs = 0;
    let mut max_delay = None;
    let mut before = preprocess_ops;
    let mut stream = enumerate(&how);
    while outputs < max_outputs {
        match stream.next() {
            None => break,
            Some(Err(e)) => return Err(e),
            Some(Ok(o)) => {
                let after = s.arena().stats().total();
                let per = (after - before).div_ceil(o.enc.0.len().max(1) as u64);
                max_delay = Some(max_delay.map_or(per, |m: u64| m.max(per)));
                before = after;
                outputs += 1;
            }
        }
    }
    Ok(BenchRow {
        n: word.len(),
        preprocess_ops,
        outputs,
        max_delay_ops_per_symbol: max_delay,
    })
}

fn symbol_alphabet(t: &CostTransducer) -> Vec<String> {
    let mut syms: Vec<String> = t
        .transitions
        .iter()
        .filter_map(|tr| match &tr.guard {
            Guard::Symbol(s) => Some(s.clone()),
            Guard::Pred(_) => None,
        })
        .collect();
    syms.sort();
    syms.dedup();
    if syms.is_empty() {
        syms.push("a".into());
    }
    syms
}

struct EventPool {
    types: Vec<String>,
    attr_ranges: Vec<(String, i64, i64)>,
}

/// Types and attribute value ranges covering every constant a guard
/// compares against, with slack on both sides so strict bounds stay
/// reachable.
fn event_pool(t: &CostTransducer) -> EventPool {
    let mut types = Vec::new();
    let mut ranges: Vec<(String, i64, i64)> = Vec::new();
    let mut stack: Vec<&Predicate> = t
        .transitions
        .iter()
        .filter_map(|tr| match &tr.guard {
            Guard::Pred(p) => Some(p),
            Guard::Symbol(_) => None,
        })
        .collect();
    while let Some(p) = stack.pop() {
        match p {
            Predicate::True => {}
            Predicate::TypeIs(name) => types.push(name.clone()),
            Predicate::Cmp { attr, rhs, .. } => {
                let lo = rhs.saturating_sub(2);
                let hi = rhs.saturating_add(2);
                match ranges.iter_mut().find(|(a, _, _)| a == attr) {
                    Some((_, l, h)) => {
                        *l = (*l).min(lo);
                        *h = (*h).max(hi);
                    }
                    None => ranges.push((attr.clone(), lo, hi)),
                }
            }
            Predicate::All(ps) => stack.extend(ps),
        }
    }
    types.sort();
    types.dedup();
    if types.is_empty() {
        types.push("E".into());
    }
    ranges.sort();
    EventPool { types, attr_ranges: ranges }
}

fn sample_event(pool: &EventPool, rng: &mut ChaCha8Rng) -> EventRecord {
    let event_type = pool.types[rng.gen_range(0..pool.types.len())].clone();
    let attrs = pool
        .attr_ranges
        .iter()
        .map(|(a, lo, hi)| (a.clone(), rng.gen_range(*lo..=*hi)))
        .collect();
    EventRecord { event_type, attrs }
}
