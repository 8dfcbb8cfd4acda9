//! Command-line front end: machine files in, ranked outputs out.
//!
//! Subcommands: `check` (validate and decide unambiguity), `enumerate`
//! (rank a word's outputs), `stream` (rank after every event read from
//! standard input), and `bench` (operation-count CSV over seeded random
//! words). Exit codes: 0 success, 1 input or I/O errors, 2 ambiguity.
//!
//! Output blocks are framed by `#` lines: one `#`, then one line per
//! output as `cost<TAB>rendered-assignment` (bare cost for the empty
//! assignment), then one `#`. Everything is plain LF text, bit-stable for
//! fixed inputs, flags, and seed.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::enumerate::{
    bench_machine, enumerate_filtered, preprocess, stream_new, stream_outputs, stream_push,
    OutputStream,
};
use crate::group::{GroupSpec, GroupValue};
use crate::transducer::{parse_transducer, CostTransducer, EventRecord, GuardMode, RankedOutput};
use crate::{Error, Result};

#[derive(Parser)]
#[command(name = "rankenum", version, about = "Ranked enumeration of cost-transducer outputs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a machine file and decide unambiguity.
    Check {
        /// Machine file (JSON).
        file: PathBuf,
    },
    /// Rank all outputs of a word, cheapest first.
    Enumerate {
        /// Machine file (JSON) with `on` (symbol) guards.
        file: PathBuf,
        /// Input word: whitespace-separated symbol tokens.
        word: String,
        /// Stop after this many outputs.
        #[arg(long)]
        top: Option<usize>,
        /// Stop before the first output costing more than this
        /// (`5`, or `1,2` / `(1,2)` for vector groups).
        #[arg(long = "max-cost")]
        max_cost: Option<String>,
    },
    /// Read `TYPE key=value ...` events from standard input, one per
    /// line, and rank the outputs after every event.
    Stream {
        /// Machine file (JSON) with `when` (predicate) guards.
        file: PathBuf,
        /// Per-position cost threshold, as in `enumerate`.
        #[arg(long = "max-cost")]
        max_cost: Option<String>,
    },
    /// Measure abstract operation counts over seeded random words.
    Bench {
        /// Machine file (JSON).
        file: PathBuf,
        /// Comma-separated word lengths.
        #[arg(long, default_value = "1024,2048,4096,8192,16384,32768,65536")]
        lengths: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Outputs drained per length when measuring delay.
        #[arg(long = "max-outputs", default_value_t = 1000)]
        max_outputs: usize,
    },
}

/// Runs the CLI against the process arguments and returns the exit code.
pub fn run() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.cmd {
        Cmd::Check { file } => cmd_check(&file),
        Cmd::Enumerate { file, word, top, max_cost } => {
            cmd_enumerate(&file, &word, top, max_cost.as_deref())
        }
        Cmd::Stream { file, max_cost } => cmd_stream(&file, max_cost.as_deref()),
        Cmd::Bench { file, lengths, seed, max_outputs } => {
            cmd_bench(&file, &lengths, seed, max_outputs)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load(file: &Path) -> Result<CostTransducer> {
    let text = std::fs::read_to_string(file)?;
    let t = parse_transducer(&text)?;
    for w in t.validate() {
        eprintln!("warning: {w}");
    }
    Ok(t)
}

/// `Ok(None)` means ambiguous: the witness report has been printed to
/// standard error and the caller should exit 2.
fn load_unambiguous(file: &Path) -> Result<Option<CostTransducer>> {
    let t = load(file)?;
    match t.check_unambiguous()? {
        None => Ok(Some(t)),
        Some(w) => {
            eprintln!("error: transducer is ambiguous");
            eprint!("{}", w.render(&t));
            Ok(None)
        }
    }
}

fn cmd_check(file: &Path) -> Result<u8> {
    let t = load(file)?;
    match t.check_unambiguous()? {
        None => {
            println!("unambiguous");
            Ok(0)
        }
        Some(w) => {
            println!("ambiguous");
            print!("{}", w.render(&t));
            Ok(2)
        }
    }
}

fn cmd_enumerate(
    file: &Path,
    word: &str,
    top: Option<usize>,
    max_cost: Option<&str>,
) -> Result<u8> {
    let Some(t) = load_unambiguous(file)? else { return Ok(2) };
    let max_cost = max_cost.map(|s| parse_cost(s, &t.group)).transpose()?;
    let word: Vec<String> = word.split_whitespace().map(str::to_string).collect();
    let t = Arc::new(t);
    let h = preprocess(&t, &word)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    write_block(&mut out, &t, enumerate_filtered(&h, top, max_cost))?;
    Ok(0)
}

fn cmd_stream(file: &Path, max_cost: Option<&str>) -> Result<u8> {
    let Some(t) = load_unambiguous(file)? else { return Ok(2) };
    if t.guard_mode()? == Some(GuardMode::Symbols) {
        return Err(Error::InvalidInput(
            "stream needs a predicate-mode machine (`when` guards)".into(),
        ));
    }
    let max_cost = max_cost.map(|s| parse_cost(s, &t.group)).transpose()?;
    let t = Arc::new(t);
    let mut s = stream_new(&t)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut n = 0u64;
    for (line_no, line) in stdin.lock().lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev = match EventRecord::parse(&line) {
            Ok(ev) => ev,
            Err(e) => {
                eprintln!("error: stdin line {}: {e}", line_no + 1);
                return Ok(1);
            }
        };
        s = stream_push(&s, &ev)?;
        n += 1;
        writeln!(out, "@{n}")?;
        let h = stream_outputs(&s)?;
        write_block(&mut out, &t, enumerate_filtered(&h, None, max_cost.clone()))?;
    }
    Ok(0)
}

fn cmd_bench(file: &Path, lengths: &str, seed: u64, max_outputs: usize) -> Result<u8> {
    let t = load(file)?;
    let lengths = lengths
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad length `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = bench_machine(&Arc::new(t), &lengths, seed, max_outputs)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "n,preprocess_ops,outputs,max_delay_ops_per_symbol")?;
    for r in rows {
        let delay = r
            .max_delay_ops_per_symbol
            .map_or(String::new(), |d| d.to_string());
        writeln!(out, "{},{},{},{}", r.n, r.preprocess_ops, r.outputs, delay)?;
    }
    Ok(0)
}

/// One ranked block: `#`, one line per output, `#`.
fn write_block(
    out: &mut impl Write,
    t: &CostTransducer,
    stream: OutputStream,
) -> Result<()> {
    writeln!(out, "#")?;
    for item in stream {
        writeln!(out, "{}", render_output(t, &item?))?;
    }
    writeln!(out, "#")?;
    Ok(())
}

fn render_output(t: &CostTransducer, o: &RankedOutput) -> String {
    if o.enc.0.is_empty() {
        o.cost.to_string()
    } else {
        format!("{}\t{}", o.cost, o.enc.render(&t.vars))
    }
}

/// Accepts `5` for the integer group and `1,2` or `(1,2)` for vector
/// groups; the component count must match the group.
fn parse_cost(s: &str, group: &GroupSpec) -> Result<GroupValue> {
    let body = s.trim();
    let body = body
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .unwrap_or(body);
    let ints = body
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<i64>()
                .map_err(|_| Error::InvalidInput(format!("bad cost component `{p}` in `{s}`")))
        })
        .collect::<Result<Vec<i64>>>()?;
    let v = if ints.len() == 1 && *group == GroupSpec::Int {
        GroupValue::Int(ints[0])
    } else {
        GroupValue::vec(ints)
    };
    if group.conforms(&v) {
        Ok(v)
    } else {
        Err(Error::BadCostArity {
            context: "--max-cost".into(),
            expected: group.describe(),
            found: v.shape(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn cost_flags_parse_for_both_groups() {
        assert_eq!(parse_cost("5", &GroupSpec::Int).unwrap(), GroupValue::Int(5));
        assert_eq!(parse_cost(" -3 ", &GroupSpec::Int).unwrap(), GroupValue::Int(-3));
        let vec2 = GroupSpec::IntVec { arity: 2 };
        assert_eq!(parse_cost("1,2", &vec2).unwrap(), GroupValue::vec(vec![1, 2]));
        assert_eq!(parse_cost("(1, 2)", &vec2).unwrap(), GroupValue::vec(vec![1, 2]));
        assert!(parse_cost("1,2", &GroupSpec::Int).is_err());
        assert!(parse_cost("5", &vec2).is_err());
        assert!(parse_cost("(1,2", &vec2).is_err());
        assert!(parse_cost("x", &GroupSpec::Int).is_err());
    }

    #[test]
    fn outputs_render_cost_then_assignment() {
        let t = fixtures::subset_marker();
        let enc = crate::transducer::EncodedAssignment(vec![crate::transducer::Mark {
            vars: 1,
            pos: 3,
        }]);
        let o = RankedOutput { enc, cost: GroupValue::Int(1) };
        assert_eq!(render_output(&t, &o), "1\t{X}@3");
        let empty = RankedOutput {
            enc: crate::transducer::EncodedAssignment::default(),
            cost: GroupValue::Int(0),
        };
        assert_eq!(render_output(&t, &empty), "0");
    }

    #[test]
    fn blocks_frame_outputs_with_hashes() {
        let t = Arc::new(fixtures::subset_marker());
        let word: Vec<String> = vec!["a".into()];
        let h = preprocess(&t, &word).unwrap();
        let mut buf = Vec::new();
        write_block(&mut buf, &t, enumerate_filtered(&h, None, None)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "#\n0\n1\t{X}@1\n#\n");
    }
}
