//! Cost-transducer data model: parsing, validation, unambiguity checking,
//! and a brute-force ranked-enumeration oracle.
//!
//! A machine reads a word of input items, either plain symbols or typed
//! events with integer attributes. Each transition is guarded, marks a
//! (possibly empty) set of output variables, and carries a cost from the
//! machine's ordered group. An accepting run emits an encoded assignment:
//! the position-ordered sequence of (variable set, position) pairs where
//! the run marked variables. Ranked enumeration lists every distinct
//! assignment of a word in non-decreasing cost order; the fast pipeline in
//! `enumerate` and the exhaustive oracle here must agree on every
//! (assignment, cost) multiset.
//!
//! Unambiguity, i.e. no word admits two distinct accepting runs with the
//! same assignment, is what makes "the" cost of an assignment well defined.
//! `check_unambiguous` decides it by reachability in the machine's
//! self-product and returns a replayable witness when it fails.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Deserialize;

use crate::group::{GroupSpec, GroupValue};
use crate::{Error, Result};

/// Index into `CostTransducer::states`.
pub type StateId = usize;

/// One step of an encoded assignment: the variables fired at a 1-based
/// word position, as a bitmask over the machine's variable list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mark {
    pub vars: u32,
    pub pos: u32,
}

/// Encoding of one output: marks with non-empty variable sets and strictly
/// increasing positions. Positions where a run fired no variable are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EncodedAssignment(pub Vec<Mark>);

impl EncodedAssignment {
    pub fn is_well_formed(&self) -> bool {
        self.0.iter().all(|m| m.vars != 0)
            && self.0.windows(2).all(|w| w[0].pos < w[1].pos)
    }

    /// Renders as `{X}@1 {X,Y}@3` with variable names sorted inside each
    /// set; the empty assignment renders as the empty string.
    pub fn render(&self, vars: &[String]) -> String {
        let marks: Vec<String> = self
            .0
            .iter()
            .map(|m| format!("{}@{}", render_varset(m.vars, vars), m.pos))
            .collect();
        marks.join(" ")
    }
}

fn render_varset(mask: u32, vars: &[String]) -> String {
    let mut names: Vec<&str> = vars
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, v)| v.as_str())
        .collect();
    names.sort_unstable();
    format!("{{{}}}", names.join(","))
}

/// One enumerated output: an assignment and the cost of its unique run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedOutput {
    pub enc: EncodedAssignment,
    pub cost: GroupValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    fn parse(s: &str) -> Option<CmpOp> {
        match s {
            "<" => Some(CmpOp::Lt),
            "<=" => Some(CmpOp::Le),
            "=" | "==" => Some(CmpOp::Eq),
            ">=" => Some(CmpOp::Ge),
            ">" => Some(CmpOp::Gt),
            _ => None,
        }
    }

    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        };
        f.write_str(s)
    }
}

/// Guard over events: type tests and integer attribute comparisons, closed
/// under conjunction. An event with a missing attribute fails the
/// comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    True,
    TypeIs(String),
    Cmp { attr: String, op: CmpOp, rhs: i64 },
    All(Vec<Predicate>),
}

impl Predicate {
    pub fn eval(&self, e: &EventRecord) -> bool {
        match self {
            Predicate::True => true,
            Predicate::TypeIs(t) => e.event_type == *t,
            Predicate::Cmp { attr, op, rhs } => {
                e.attrs.get(attr).is_some_and(|v| op.holds(*v, *rhs))
            }
            Predicate::All(ps) => ps.iter().all(|p| p.eval(e)),
        }
    }
}

/// What a transition fires on: a literal symbol or an event predicate. A
/// machine uses one kind throughout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Guard {
    Symbol(String),
    Pred(Predicate),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuardMode {
    Symbols,
    Predicates,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub guard: Guard,
    pub varset: u32,
    pub to: StateId,
    pub cost: GroupValue,
}

/// An input event: a type name plus named integer attributes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventRecord {
    pub event_type: String,
    pub attrs: BTreeMap<String, i64>,
}

impl EventRecord {
    pub fn new(event_type: impl Into<String>, attrs: &[(&str, i64)]) -> EventRecord {
        EventRecord {
            event_type: event_type.into(),
            attrs: attrs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// Parses one `TYPE key=value ...` line. The line must be non-blank.
    pub fn parse(line: &str) -> Result<EventRecord> {
        let mut tokens = line.split_whitespace();
        let event_type = tokens
            .next()
            .ok_or_else(|| Error::InvalidInput("empty event line".into()))?;
        if event_type.contains('=') {
            return Err(Error::InvalidInput(format!(
                "event line must start with a type name, got `{event_type}`"
            )));
        }
        let mut attrs = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("expected `key=value`, got `{tok}`"))
            })?;
            let v: i64 = v.parse().map_err(|_| {
                Error::InvalidInput(format!("attribute `{k}` has non-integer value `{v}`"))
            })?;
            if attrs.insert(k.to_string(), v).is_some() {
                return Err(Error::InvalidInput(format!("duplicate attribute `{k}`")));
            }
        }
        Ok(EventRecord {
            event_type: event_type.to_string(),
            attrs,
        })
    }
}

impl fmt::Display for EventRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.event_type)?;
        for (k, v) in &self.attrs {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Anything a machine can read: symbols fire on `Guard::Symbol`, events on
/// `Guard::Pred`.
pub trait InputItem {
    fn fires(&self, guard: &Guard) -> bool;
}

impl InputItem for str {
    fn fires(&self, guard: &Guard) -> bool {
        match guard {
            Guard::Symbol(s) => s == self,
            Guard::Pred(_) => false,
        }
    }
}

impl InputItem for String {
    fn fires(&self, guard: &Guard) -> bool {
        self.as_str().fires(guard)
    }
}

impl InputItem for EventRecord {
    fn fires(&self, guard: &Guard) -> bool {
        match guard {
            Guard::Symbol(_) => false,
            Guard::Pred(p) => p.eval(self),
        }
    }
}

impl<T: InputItem + ?Sized> InputItem for &T {
    fn fires(&self, guard: &Guard) -> bool {
        (**self).fires(guard)
    }
}

/// The machine: states, output variables, guarded costed transitions, and
/// partial initial/final cost maps (sorted by state id, one entry per
/// state).
#[derive(Clone, Debug, PartialEq)]
pub struct CostTransducer {
    pub group: GroupSpec,
    pub states: Vec<String>,
    pub vars: Vec<String>,
    pub transitions: Vec<Transition>,
    pub init: Vec<(StateId, GroupValue)>,
    pub finals: Vec<(StateId, GroupValue)>,
}

/// The witness word of an ambiguity: symbols or synthesized events.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessInput {
    Symbols(Vec<String>),
    Events(Vec<EventRecord>),
}

impl WitnessInput {
    pub fn len(&self) -> usize {
        match self {
            WitnessInput::Symbols(w) => w.len(),
            WitnessInput::Events(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Two distinct accepting runs of one word with identical output. Runs are
/// 0-based indices into `CostTransducer::transitions`; for the empty-word
/// witness both runs are empty and only the start states differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbiguityWitness {
    pub word: WitnessInput,
    pub start_a: StateId,
    pub start_b: StateId,
    pub run_a: Vec<usize>,
    pub run_b: Vec<usize>,
}

impl AmbiguityWitness {
    /// Multi-line report: the witness word, then each run as states
    /// interleaved with `[i]` transition indices.
    pub fn render(&self, t: &CostTransducer) -> String {
        let mut out = String::new();
        match &self.word {
            WitnessInput::Symbols(w) if w.is_empty() => out.push_str("witness: (empty)\n"),
            WitnessInput::Events(w) if w.is_empty() => out.push_str("witness: (empty)\n"),
            WitnessInput::Symbols(w) => {
                out.push_str(&format!("witness: {}\n", w.join(" ")));
            }
            WitnessInput::Events(w) => {
                let evs: Vec<String> = w.iter().map(|e| e.to_string()).collect();
                out.push_str(&format!("witness: {}\n", evs.join("; ")));
            }
        }
        out.push_str(&render_run(t, self.start_a, &self.run_a, "run A"));
        out.push_str(&render_run(t, self.start_b, &self.run_b, "run B"));
        out
    }
}

fn render_run(t: &CostTransducer, start: StateId, run: &[usize], label: &str) -> String {
    let mut s = format!("{label}: {}", t.states[start]);
    for &i in run {
        s.push_str(&format!(" [{i}] {}", t.states[t.transitions[i].to]));
    }
    s.push('\n');
    s
}

impl CostTransducer {
    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn init_cost(&self, q: StateId) -> Option<&GroupValue> {
        self.init.iter().find(|(s, _)| *s == q).map(|(_, c)| c)
    }

    pub fn final_cost(&self, q: StateId) -> Option<&GroupValue> {
        self.finals.iter().find(|(s, _)| *s == q).map(|(_, c)| c)
    }

    /// The guard kind used by the transitions: `None` when there are no
    /// transitions, an error when symbols and predicates are mixed.
    pub fn guard_mode(&self) -> Result<Option<GuardMode>> {
        let mut mode = None;
        for t in &self.transitions {
            let m = match t.guard {
                Guard::Symbol(_) => GuardMode::Symbols,
                Guard::Pred(_) => GuardMode::Predicates,
            };
            match mode {
                None => mode = Some(m),
                Some(prev) if prev != m => {
                    return Err(Error::InvalidInput(
                        "transitions mix literal symbols and event predicates".into(),
                    ));
                }
                Some(_) => {}
            }
        }
        Ok(mode)
    }

    /// Non-fatal findings: a machine with an empty initial or final map
    /// parses but accepts nothing.
    pub fn validate(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if self.init.is_empty() {
            warnings.push("init map is empty: the machine accepts nothing".into());
        }
        if self.finals.is_empty() {
            warnings.push("final map is empty: the machine accepts nothing".into());
        }
        warnings
    }

    /// `None` when no word admits two distinct accepting runs with equal
    /// output; otherwise a shortest witness.
    ///
    /// Reachability in the self-product: a node is a state pair plus a
    /// "runs differ" flag; edges pair transitions with equal varsets whose
    /// guards can fire on one common input item. Ambiguous iff a flagged
    /// pair of final states is reachable from a pair of initial states.
    pub fn check_unambiguous(&self) -> Result<Option<AmbiguityWitness>> {
        let mode = self.guard_mode()?;
        let init_states: Vec<StateId> = self.init.iter().map(|(q, _)| *q).collect();
        let final_states: BTreeSet<StateId> =
            self.finals.iter().map(|(q, _)| *q).collect();

        // Two distinct zero-length runs: two states that are both initial
        // and final, with output equal (empty) by construction.
        let eps: Vec<StateId> = init_states
            .iter()
            .copied()
            .filter(|q| final_states.contains(q))
            .collect();
        if eps.len() >= 2 {
            return Ok(Some(AmbiguityWitness {
                word: self.empty_word(mode),
                start_a: eps[0],
                start_b: eps[1],
                run_a: Vec::new(),
                run_b: Vec::new(),
            }));
        }

        let n = self.states.len();
        let idx = |p: StateId, q: StateId, d: bool| (p * n + q) * 2 + d as usize;
        let mut seen = vec![false; (n * n * 2).max(1)];
        let mut parent: Vec<Option<(usize, usize, usize)>> = vec![None; seen.len()];
        let mut work = VecDeque::new();
        for &p in &init_states {
            for &q in &init_states {
                let node = idx(p, q, false);
                if !seen[node] {
                    seen[node] = true;
                    work.push_back(node);
                }
            }
        }

        while let Some(node) = work.pop_front() {
            let diverged = node % 2 == 1;
            let p = node / 2 / n;
            let q = node / 2 % n;
            if diverged && final_states.contains(&p) && final_states.contains(&q) {
                return Ok(Some(self.rebuild_witness(mode, node, &parent)));
            }
            for (i1, t1) in self.transitions.iter().enumerate() {
                if t1.from != p {
                    continue;
                }
                for (i2, t2) in self.transitions.iter().enumerate() {
                    if t2.from != q || t1.varset != t2.varset {
                        continue;
                    }
                    if cofire(&t1.guard, &t2.guard).is_none() {
                        continue;
                    }
                    let next = idx(t1.to, t2.to, diverged || i1 != i2);
                    if !seen[next] {
                        seen[next] = true;
                        parent[next] = Some((node, i1, i2));
                        work.push_back(next);
                    }
                }
            }
        }
        Ok(None)
    }

    fn empty_word(&self, mode: Option<GuardMode>) -> WitnessInput {
        match mode {
            Some(GuardMode::Predicates) => WitnessInput::Events(Vec::new()),
            _ => WitnessInput::Symbols(Vec::new()),
        }
    }

    fn rebuild_witness(
        &self,
        mode: Option<GuardMode>,
        goal: usize,
        parent: &[Option<(usize, usize, usize)>],
    ) -> AmbiguityWitness {
        let n = self.states.len();
        let mut steps = Vec::new();
        let mut node = goal;
        while let Some((prev, i1, i2)) = parent[node] {
            steps.push((i1, i2));
            node = prev;
        }
        steps.reverse();
        let mut run_a = Vec::with_capacity(steps.len());
        let mut run_b = Vec::with_capacity(steps.len());
        let mut letters = Vec::with_capacity(steps.len());
        for &(i1, i2) in &steps {
            run_a.push(i1);
            run_b.push(i2);
            let letter = cofire(&self.transitions[i1].guard, &self.transitions[i2].guard)
                .expect("edge was discovered via a co-firable guard pair");
            letters.push(letter);
        }
        let word = match mode {
            Some(GuardMode::Predicates) => WitnessInput::Events(
                letters
                    .into_iter()
                    .map(|l| match l {
                        CoLetter::Ev(e) => e,
                        CoLetter::Sym(_) => unreachable!("predicate-mode letters are events"),
                    })
                    .collect(),
            ),
            _ => WitnessInput::Symbols(
                letters
                    .into_iter()
                    .map(|l| match l {
                        CoLetter::Sym(s) => s,
                        CoLetter::Ev(_) => unreachable!("symbol-mode letters are symbols"),
                    })
                    .collect(),
            ),
        };
        AmbiguityWitness {
            word,
            start_a: node / 2 / n,
            start_b: node / 2 % n,
            run_a,
            run_b,
        }
    }

    /// Cost of the unique accepting run whose output is exactly `enc`,
    /// found by encoding-guided depth-first search. `OutputNotDefined`
    /// when no such run exists.
    pub fn run_cost<I: InputItem>(
        &self,
        word: &[I],
        enc: &EncodedAssignment,
    ) -> Result<GroupValue> {
        if !enc.is_well_formed() {
            return Err(Error::OutputNotDefined);
        }
        for (q0, ic) in &self.init {
            if let Some(c) = self.guided(word, *q0, 0, &enc.0, ic)? {
                return Ok(c);
            }
        }
        Err(Error::OutputNotDefined)
    }

    fn guided<I: InputItem>(
        &self,
        word: &[I],
        q: StateId,
        at: usize,
        rest: &[Mark],
        acc: &GroupValue,
    ) -> Result<Option<GroupValue>> {
        if at == word.len() {
            return match (rest.is_empty(), self.final_cost(q)) {
                (true, Some(fc)) => Ok(Some(acc.op(fc)?)),
                _ => Ok(None),
            };
        }
        for t in self.transitions.iter().filter(|t| t.from == q) {
            if !word[at].fires(&t.guard) {
                continue;
            }
            let took = if t.varset == 0 {
                self.guided(word, t.to, at + 1, rest, &acc.op(&t.cost)?)?
            } else if rest.first() == Some(&Mark { vars: t.varset, pos: at as u32 + 1 }) {
                self.guided(word, t.to, at + 1, &rest[1..], &acc.op(&t.cost)?)?
            } else {
                None
            };
            if took.is_some() {
                return Ok(took);
            }
        }
        Ok(None)
    }

    /// Every accepting run's (assignment, cost), sorted by cost, stable on
    /// discovery order. The oracle the fast pipeline is checked against;
    /// errors with `ExplosionGuard` past `max_runs` accepting runs.
    pub fn enumerate_bruteforce<I: InputItem>(
        &self,
        word: &[I],
        max_runs: usize,
    ) -> Result<Vec<RankedOutput>> {
        let mut out = Vec::new();
        let mut marks = Vec::new();
        for (q0, ic) in &self.init {
            self.all_runs(word, *q0, 0, ic, &mut marks, &mut out, max_runs)?;
        }
        out.sort_by(|a, b| {
            a.cost
                .compare(&b.cost)
                .expect("all run costs conform to the machine group")
        });
        Ok(out)
    }

    fn all_runs<I: InputItem>(
        &self,
        word: &[I],
        q: StateId,
        at: usize,
        acc: &GroupValue,
        marks: &mut Vec<Mark>,
        out: &mut Vec<RankedOutput>,
        max_runs: usize,
    ) -> Result<()> {
        if at == word.len() {
            if let Some(fc) = self.final_cost(q) {
                out.push(RankedOutput {
                    enc: EncodedAssignment(marks.clone()),
                    cost: acc.op(fc)?,
                });
                if out.len() > max_runs {
                    return Err(Error::ExplosionGuard(max_runs));
                }
            }
            return Ok(());
        }
        for t in self.transitions.iter().filter(|t| t.from == q) {
            if !word[at].fires(&t.guard) {
                continue;
            }
            let acc = acc.op(&t.cost)?;
            if t.varset != 0 {
                marks.push(Mark { vars: t.varset, pos: at as u32 + 1 });
                self.all_runs(word, t.to, at + 1, &acc, marks, out, max_runs)?;
                marks.pop();
            } else {
                self.all_runs(word, t.to, at + 1, &acc, marks, out, max_runs)?;
            }
        }
        Ok(())
    }
}

enum CoLetter {
    Sym(String),
    Ev(EventRecord),
}

/// An input item firing both guards at once, if one exists.
fn cofire(a: &Guard, b: &Guard) -> Option<CoLetter> {
    match (a, b) {
        (Guard::Symbol(x), Guard::Symbol(y)) if x == y => Some(CoLetter::Sym(x.clone())),
        (Guard::Pred(p), Guard::Pred(q)) => satisfy(&[p, q]).map(CoLetter::Ev),
        _ => None,
    }
}

/// A model of the conjunction of `preds`, if satisfiable: at most one
/// required type (default `E`), and per attribute a non-empty integer
/// interval, from which the value nearest zero is picked.
fn satisfy(preds: &[&Predicate]) -> Option<EventRecord> {
    let mut types: BTreeSet<&str> = BTreeSet::new();
    let mut bounds: BTreeMap<&str, (i64, i64)> = BTreeMap::new();
    let mut stack: Vec<&Predicate> = preds.to_vec();
    while let Some(p) = stack.pop() {
        match p {
            Predicate::True => {}
            Predicate::TypeIs(t) => {
                types.insert(t);
            }
            Predicate::Cmp { attr, op, rhs } => {
                let (lo, hi) = bounds.entry(attr).or_insert((i64::MIN, i64::MAX));
                match op {
                    CmpOp::Lt if *rhs == i64::MIN => return None,
                    CmpOp::Lt => *hi = (*hi).min(rhs - 1),
                    CmpOp::Le => *hi = (*hi).min(*rhs),
                    CmpOp::Eq => {
                        *lo = (*lo).max(*rhs);
                        *hi = (*hi).min(*rhs);
                    }
                    CmpOp::Ge => *lo = (*lo).max(*rhs),
                    CmpOp::Gt if *rhs == i64::MAX => return None,
                    CmpOp::Gt => *lo = (*lo).max(rhs + 1),
                }
            }
            Predicate::All(ps) => stack.extend(ps),
        }
    }
    if types.len() > 1 {
        return None;
    }
    let mut attrs = BTreeMap::new();
    for (attr, (lo, hi)) in bounds {
        if lo > hi {
            return None;
        }
        attrs.insert(attr.to_string(), 0i64.clamp(lo, hi));
    }
    Some(EventRecord {
        event_type: types.first().unwrap_or(&"E").to_string(),
        attrs,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransducer {
    group: RawGroup,
    states: Vec<String>,
    vars: Vec<String>,
    init: BTreeMap<String, serde_json::Value>,
    #[serde(rename = "final")]
    finals: BTreeMap<String, serde_json::Value>,
    transitions: Vec<RawTransition>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawGroup {
    Shorthand(String),
    Spec(GroupSpec),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransition {
    from: String,
    #[serde(default)]
    on: Option<String>,
    #[serde(default)]
    when: Option<RawPredicate>,
    vars: Vec<String>,
    to: String,
    cost: serde_json::Value,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawPredicate {
    Name(String),
    Type(RawTypePred),
    Cmp(RawCmpPred),
    All(RawAllPred),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTypePred {
    #[serde(rename = "type")]
    type_name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCmpPred {
    attr: String,
    op: String,
    #[serde(rename = "const")]
    rhs: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAllPred {
    all: Vec<RawPredicate>,
}

/// Parses the machine file format described in the README: JSON with
/// `group`, `states`, `vars`, `init`, `final`, and `transitions`, each
/// transition guarded by exactly one of `on` (symbol) or `when`
/// (predicate).
pub fn parse_transducer(text: &str) -> Result<CostTransducer> {
    let raw: RawTransducer = serde_json::from_str(text).map_err(json_err)?;
    cook(raw)
}

fn json_err(e: serde_json::Error) -> Error {
    let mut msg = e.to_string();
    if let Some(i) = msg.rfind(" at line ") {
        msg.truncate(i);
    }
    Error::Parse { line: e.line(), col: e.column(), msg }
}

fn cook(raw: RawTransducer) -> Result<CostTransducer> {
    let group = match raw.group {
        RawGroup::Shorthand(s) if s == "int" => GroupSpec::Int,
        RawGroup::Shorthand(s) => {
            return Err(Error::InvalidInput(format!(
                "unknown group `{s}`; use \"int\" or {{\"kind\":\"int_vec\",\"arity\":k}}"
            )));
        }
        RawGroup::Spec(GroupSpec::IntVec { arity: 0 }) => {
            return Err(Error::InvalidInput("vector group arity must be at least 1".into()));
        }
        RawGroup::Spec(spec) => spec,
    };

    let mut seen_states = BTreeSet::new();
    for s in &raw.states {
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("bad state name `{s}`")));
        }
        if !seen_states.insert(s) {
            return Err(Error::InvalidInput(format!("duplicate state `{s}`")));
        }
    }
    if raw.vars.len() > 32 {
        return Err(Error::InvalidInput(format!(
            "at most 32 output variables are supported, got {}",
            raw.vars.len()
        )));
    }
    let mut seen_vars = BTreeSet::new();
    for v in &raw.vars {
        if v.is_empty() || v.chars().any(|c| c.is_whitespace() || "{},@".contains(c)) {
            return Err(Error::InvalidInput(format!("bad variable name `{v}`")));
        }
        if !seen_vars.insert(v) {
            return Err(Error::InvalidInput(format!("duplicate variable `{v}`")));
        }
    }

    let state_id = |name: &str, context: &str| -> Result<StateId> {
        raw.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownState {
                name: name.to_string(),
                context: context.to_string(),
            })
    };

    let mut init = Vec::new();
    for (name, cost) in &raw.init {
        let q = state_id(name, "init map")?;
        init.push((q, group_value(cost, &group, &format!("init cost of `{name}`"))?));
    }
    init.sort_by_key(|(q, _)| *q);
    let mut finals = Vec::new();
    for (name, cost) in &raw.finals {
        let q = state_id(name, "final map")?;
        finals.push((q, group_value(cost, &group, &format!("final cost of `{name}`"))?));
    }
    finals.sort_by_key(|(q, _)| *q);

    let mut transitions = Vec::new();
    for (i, t) in raw.transitions.iter().enumerate() {
        let context = format!("transition {i}");
        let from = state_id(&t.from, &context)?;
        let to = state_id(&t.to, &context)?;
        let guard = match (&t.on, &t.when) {
            (Some(sym), None) => Guard::Symbol(sym.clone()),
            (None, Some(p)) => Guard::Pred(cook_pred(p, &context)?),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "{context}: provide exactly one of `on` or `when`"
                )));
            }
        };
        let mut varset = 0u32;
        for v in &t.vars {
            let bit = raw.vars.iter().position(|w| w == v).ok_or_else(|| {
                Error::InvalidInput(format!("{context}: undeclared variable `{v}`"))
            })?;
            if varset >> bit & 1 == 1 {
                return Err(Error::InvalidInput(format!(
                    "{context}: variable `{v}` listed twice"
                )));
            }
            varset |= 1 << bit;
        }
        let cost = group_value(&t.cost, &group, &format!("{context} cost"))?;
        transitions.push(Transition { from, guard, varset, to, cost });
    }

    let t = CostTransducer {
        group,
        states: raw.states,
        vars: raw.vars,
        transitions,
        init,
        finals,
    };
    t.guard_mode()?;
    Ok(t)
}

fn cook_pred(p: &RawPredicate, context: &str) -> Result<Predicate> {
    match p {
        RawPredicate::Name(s) if s == "TRUE" => Ok(Predicate::True),
        RawPredicate::Name(s) => Err(Error::InvalidInput(format!(
            "{context}: unknown predicate name `{s}` (only \"TRUE\")"
        ))),
        RawPredicate::Type(t) => Ok(Predicate::TypeIs(t.type_name.clone())),
        RawPredicate::Cmp(c) => {
            let op = CmpOp::parse(&c.op).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "{context}: unknown comparison `{}` (use <, <=, =, >=, >)",
                    c.op
                ))
            })?;
            Ok(Predicate::Cmp { attr: c.attr.clone(), op, rhs: c.rhs })
        }
        RawPredicate::All(a) => {
            let ps = a
                .all
                .iter()
                .map(|q| cook_pred(q, context))
                .collect::<Result<Vec<_>>>()?;
            Ok(Predicate::All(ps))
        }
    }
}

fn group_value(v: &serde_json::Value, spec: &GroupSpec, context: &str) -> Result<GroupValue> {
    let found = match v {
        serde_json::Value::Number(x) => match x.as_i64() {
            Some(n) => return conform(GroupValue::Int(n), spec, context),
            None => "non-integer number".to_string(),
        },
        serde_json::Value::Array(xs) => {
            let ints: Option<Vec<i64>> = xs.iter().map(|x| x.as_i64()).collect();
            match ints {
                Some(ns) => return conform(GroupValue::vec(ns), spec, context),
                None => "array with non-integer entries".to_string(),
            }
        }
        serde_json::Value::Null => "null".to_string(),
        serde_json::Value::Bool(_) => "bool".to_string(),
        serde_json::Value::String(_) => "string".to_string(),
        serde_json::Value::Object(_) => "object".to_string(),
    };
    Err(Error::BadCostArity {
        context: context.to_string(),
        expected: spec.describe(),
        found,
    })
}

fn conform(v: GroupValue, spec: &GroupSpec, context: &str) -> Result<GroupValue> {
    if spec.conforms(&v) {
        Ok(v)
    } else {
        Err(Error::BadCostArity {
            context: context.to_string(),
            expected: spec.describe(),
            found: v.shape(),
        })
    }
}
