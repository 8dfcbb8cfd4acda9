//! Reference machines, an event stream, and a word store shared by unit
//! tests, the acceptance suite, and documentation examples. Each fixture
//! has a matching JSON form in the CLI file format, kept in lock-step by
//! tests here.

use crate::group::{GroupSpec, GroupValue};
use crate::how::{HowArena, HowHandle, Letter};
use crate::transducer::{CmpOp, CostTransducer, EventRecord, Guard, Predicate, Transition};

/// Single-state machine over {a, b} with one variable X: reading `a`
/// either marks X at cost 1 or skips at cost 0, `b` always skips. Outputs
/// on a word are exactly the subsets of its `a`-positions, ranked by
/// subset size.
pub fn subset_marker() -> CostTransducer {
    CostTransducer {
        group: GroupSpec::Int,
        states: vec!["q".into()],
        vars: vec!["X".into()],
        transitions: vec![
            Transition {
                from: 0,
                guard: Guard::Symbol("a".into()),
                varset: 1,
                to: 0,
                cost: GroupValue::Int(1),
            },
            Transition {
                from: 0,
                guard: Guard::Symbol("a".into()),
                varset: 0,
                to: 0,
                cost: GroupValue::Int(0),
            },
            Transition {
                from: 0,
                guard: Guard::Symbol("b".into()),
                varset: 0,
                to: 0,
                cost: GroupValue::Int(0),
            },
        ],
        init: vec![(0, GroupValue::Int(0))],
        finals: vec![(0, GroupValue::Int(0))],
    }
}

pub const SUBSET_MARKER_JSON: &str = r#"{
    "group": "int",
    "states": ["q"],
    "vars": ["X"],
    "init": {"q": 0},
    "final": {"q": 0},
    "transitions": [
        {"from": "q", "on": "a", "vars": ["X"], "to": "q", "cost": 1},
        {"from": "q", "on": "a", "vars": [], "to": "q", "cost": 0},
        {"from": "q", "on": "b", "vars": [], "to": "q", "cost": 0}
    ]
}"#;

/// Three-state event matcher: an `H` event opens a match (marked), `T`
/// events with value over 40 may be marked along the way, anything may be
/// skipped, and a final `H` event closes the match (marked). Every
/// transition after the opening mark costs 1 and the opening itself costs
/// 1, so a match whose earliest marked position is m costs n − m + 1 at
/// stream position n: recent matches are cheap, and a cost threshold acts
/// as a sliding time window.
pub fn window_cost_matcher() -> CostTransducer {
    let mark = 1u32;
    let t = |from: usize, guard: Guard, varset: u32, to: usize, cost: i64| Transition {
        from,
        guard,
        varset,
        to,
        cost: GroupValue::Int(cost),
    };
    let type_is = |name: &str| Predicate::TypeIs(name.into());
    CostTransducer {
        group: GroupSpec::Int,
        states: vec!["q1".into(), "q2".into(), "q3".into()],
        vars: vec!["X".into()],
        transitions: vec![
            t(0, Guard::Pred(Predicate::True), 0, 0, 0),
            t(0, Guard::Pred(type_is("H")), mark, 1, 1),
            t(
                1,
                Guard::Pred(Predicate::All(vec![
                    type_is("T"),
                    Predicate::Cmp { attr: "value".into(), op: CmpOp::Gt, rhs: 40 },
                ])),
                mark,
                1,
                1,
            ),
            t(1, Guard::Pred(Predicate::True), 0, 1, 1),
            t(1, Guard::Pred(type_is("H")), mark, 2, 1),
        ],
        init: vec![(0, GroupValue::Int(0))],
        finals: vec![(2, GroupValue::Int(0))],
    }
}

pub const WINDOW_COST_MATCHER_JSON: &str = r#"{
    "group": "int",
    "states": ["q1", "q2", "q3"],
    "vars": ["X"],
    "init": {"q1": 0},
    "final": {"q3": 0},
    "transitions": [
        {"from": "q1", "when": "TRUE", "vars": [], "to": "q1", "cost": 0},
        {"from": "q1", "when": {"type": "H"}, "vars": ["X"], "to": "q2", "cost": 1},
        {"from": "q2",
         "when": {"all": [{"type": "T"}, {"attr": "value", "op": ">", "const": 40}]},
         "vars": ["X"], "to": "q2", "cost": 1},
        {"from": "q2", "when": "TRUE", "vars": [], "to": "q2", "cost": 1},
        {"from": "q2", "when": {"type": "H"}, "vars": ["X"], "to": "q3", "cost": 1}
    ]
}"#;

/// Nine ticker events. At position 9 the window matcher admits 12
/// complex events, among them {5,6,8,9}, {4,6,8,9}, {1,6,8,9}, and
/// {5,6,9} at costs 5, 6, 9, 5.
pub fn sample_event_stream() -> Vec<EventRecord> {
    [
        ("H", 25),
        ("T", 25),
        ("T", 20),
        ("H", 25),
        ("H", 40),
        ("T", 42),
        ("T", 25),
        ("T", 70),
        ("H", 18),
    ]
    .iter()
    .map(|(ty, v)| EventRecord::new(*ty, &[("value", *v)]))
    .collect()
}

/// Store holding {abc@3, ad@3, ε@5, aec@6}, built suffix-outward so the
/// shared prefix `a` is one shared child store. Draining yields costs
/// 3, 3, 5, 6.
pub fn four_word_store(arena: &HowArena<char>) -> HowHandle<char> {
    let int = GroupValue::Int;
    let a = HowHandle::empty(arena).add(Letter::Sym('a'), &int(0)).unwrap();
    let ab = a.extend_by('b').unwrap().increase_by(&int(1)).unwrap();
    let ae = a.extend_by('e').unwrap().increase_by(&int(4)).unwrap();
    let abe = ab.meld(&ae).unwrap();
    let with_c = abe.extend_by('c').unwrap().increase_by(&int(2)).unwrap();
    let ad = a.extend_by('d').unwrap().increase_by(&int(3)).unwrap();
    let eps = HowHandle::empty(arena).add(Letter::Epsilon, &int(5)).unwrap();
    with_c.meld(&ad).unwrap().meld(&eps).unwrap()
}
