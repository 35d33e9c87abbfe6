//! Command-line front end. Every verb prints one JSON document on standard
//! output (sorted keys, rationals as `"p/q"`); diagnostics go to standard
//! error. Exit status: 0 success, 1 failed check (witnesses in the JSON),
//! 2 usage or input error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::algebra::{antipode, coproduct, differential, from_term, product, unit, GraphVector, TensorVector};
use crate::axioms::{check_d_squared, graph_universe, hopf_suite, AxiomReport, SuiteRange};
use crate::cobar::{
    cobar_differential, d_squared_suite, is_cocycle, letter, truncated_cohomology_ranks, word_key, CobarVector,
    Truncation, WeightFunctional, WordSuite, BASIS_LIMIT,
};
use crate::feynman::assemble_obstruction;
use crate::graph::{enumerate_graphs, ClassPredicate};
use crate::graphfile::{parse_graph_file, NamedGraph};
use crate::lincomb::format_q;
use crate::polyalg::{PolyVectorField, Polynomial};

#[derive(Debug, Parser)]
#[command(
    name = "graph-hopf",
    version,
    about = "Exact computations with oriented graphs, their cobar complex and Feynman rules"
)]
pub struct Cli {
    /// Seed for every randomized suite
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Admissible graph class
    #[arg(long, global = true, value_enum, default_value_t = ClassArg::Default)]
    pub class: ClassArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    /// no loops, no parallel edges, internal out-degree ≥ 1
    Default,
    /// as default, but parallel edges allowed
    NoParallelOff,
}

impl ClassArg {
    pub fn predicate(self) -> ClassPredicate {
        match self {
            ClassArg::Default => ClassPredicate::default(),
            ClassArg::NoParallelOff => ClassPredicate {
                forbid_parallel_edges: false,
                ..ClassPredicate::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// all Hopf identities
    Hopf,
    /// d² = 0
    D2,
    /// D² = 0 on cobar words
    CobarD2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the canonical graphs of G^l_{n,m}
    Enumerate {
        #[arg(short = 'n')]
        n: usize,
        #[arg(short = 'm')]
        m: usize,
        #[arg(short = 'l', allow_negative_numbers = true)]
        l: i64,
    },
    /// Graph differential of each graph in a file
    D {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Full coproduct of each graph in a file
    Coproduct {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Antipode of each graph in a file
    Antipode {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Product of all graphs in a file, in order
    Product {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Cobar differential of the word whose letters are the graphs of a file
    CobarD {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run an identity suite
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 2)]
        max_n: usize,
        #[arg(long, default_value_t = 3)]
        max_m: usize,
        /// excesses −1..=max-l
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        max_l: i64,
        /// cobar-d2: maximal edges per letter
        #[arg(long, default_value_t = 4)]
        max_edges: usize,
        /// cobar-d2: maximal word length
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        /// cobar-d2: random words per length beyond 2
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Check δW = 0 on G^{-1}_{n,m}
    Cocycle {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_n: usize,
        #[arg(long, default_value_t = 3)]
        max_m: usize,
    },
    /// Assemble the L∞ obstruction by both evaluation paths
    Obstruction {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        args: PathBuf,
        #[arg(short = 'n')]
        n: usize,
        #[arg(short = 'm')]
        m: usize,
    },
    /// Rank table of a truncated cobar complex
    Cohomology {
        #[arg(long)]
        max_edges: usize,
        #[arg(long)]
        max_len: usize,
        /// per-letter internal vertices (default: max-edges)
        #[arg(long)]
        max_n: Option<usize>,
        /// per-letter boundary vertices
        #[arg(long, default_value_t = 3)]
        max_m: usize,
        /// refuse truncations with more basis words
        #[arg(long, default_value_t = BASIS_LIMIT)]
        limit: usize,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn json(code: i32, v: &Value) -> Self {
        let mut stdout = serde_json::to_string_pretty(v).expect("JSON values serialize");
        stdout.push('\n');
        Outcome {
            code,
            stdout,
            stderr: String::new(),
        }
    }

    fn usage(msg: impl Into<String>) -> Self {
        let mut stderr = msg.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Outcome {
            code: 2,
            stdout: String::new(),
            stderr,
        }
    }
}

/// Parses arguments (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let text = e.render().to_string();
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome::usage(text),
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Outcome> {
    std::fs::read_to_string(path).map_err(|e| Outcome::usage(format!("error: cannot read {}: {e}", path.display())))
}

fn read_graphs(path: &Path) -> Result<Vec<NamedGraph>, Outcome> {
    let text = read(path)?;
    let gs = parse_graph_file(&text).map_err(|e| Outcome::usage(format!("error: {}: {e}", path.display())))?;
    if gs.is_empty() {
        return Err(Outcome::usage(format!("error: {}: no graphs", path.display())));
    }
    Ok(gs)
}

fn read_json(path: &Path) -> Result<Value, Outcome> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Outcome::usage(format!("error: {}: {e}", path.display())))
}

pub fn graph_vector_json(v: &GraphVector) -> Value {
    Value::Object(v.iter().map(|(g, c)| (g.key(), Value::String(format_q(c)))).collect())
}

pub fn tensor_vector_json(v: &TensorVector) -> Value {
    Value::Object(
        v.iter()
            .map(|(k, c)| (word_key(k), Value::String(format_q(c))))
            .collect(),
    )
}

/// One graph: the bare result; several: results keyed by graph name.
fn per_graph(gs: &[NamedGraph], f: impl Fn(&NamedGraph) -> Value) -> Result<Value, Outcome> {
    if gs.len() == 1 {
        return Ok(f(&gs[0]));
    }
    let mut map = serde_json::Map::new();
    for g in gs {
        if map.insert(g.name.clone(), f(g)).is_some() {
            return Err(Outcome::usage(format!("error: duplicate graph name {}", g.name)));
        }
    }
    Ok(Value::Object(map))
}

fn reports_json(reports: &[AxiomReport]) -> (bool, Value) {
    let passed = reports.iter().all(AxiomReport::passed);
    (passed, json!({ "passed": passed, "axioms": reports }))
}

fn execute(cli: &Cli) -> Outcome {
    match body(cli) {
        Ok(o) | Err(o) => o,
    }
}

fn body(cli: &Cli) -> Result<Outcome, Outcome> {
    let c = cli.class.predicate();
    let out = match &cli.command {
        Command::Enumerate { n, m, l } => {
            let keys: Vec<String> = enumerate_graphs(*n, *m, *l, &c).iter().map(|t| t.graph.key()).collect();
            Outcome::json(
                0,
                &json!({ "n": n, "m": m, "l": l, "count": keys.len(), "graphs": keys }),
            )
        }
        Command::D { input } => {
            let gs = read_graphs(input)?;
            Outcome::json(
                0,
                &per_graph(&gs, |g| graph_vector_json(&differential(&from_term(&g.term), &c)))?,
            )
        }
        Command::Coproduct { input } => {
            let gs = read_graphs(input)?;
            Outcome::json(
                0,
                &per_graph(&gs, |g| tensor_vector_json(&coproduct(&from_term(&g.term), &c)))?,
            )
        }
        Command::Antipode { input } => {
            let gs = read_graphs(input)?;
            Outcome::json(
                0,
                &per_graph(&gs, |g| graph_vector_json(&antipode(&from_term(&g.term), &c)))?,
            )
        }
        Command::Product { input } => {
            let gs = read_graphs(input)?;
            let p = gs.iter().fold(unit(), |acc, g| product(&acc, &from_term(&g.term)));
            Outcome::json(0, &graph_vector_json(&p))
        }
        Command::CobarD { input } => {
            let gs = read_graphs(input)?;
            let mut word = CobarVector::single(Vec::new(), num_traits::One::one());
            for g in &gs {
                let l = letter(&g.term);
                let mut next = CobarVector::zero();
                for (w, cw) in word.iter() {
                    for (x, cx) in l.iter() {
                        let mut nw = w.clone();
                        nw.extend(x.iter().cloned());
                        next.add_term(nw, cw * cx);
                    }
                }
                word = next;
            }
            Outcome::json(0, &crate::cobar::cobar_vector_json(&cobar_differential(&word, &c)))
        }
        Command::Check {
            suite,
            max_n,
            max_m,
            max_l,
            max_edges,
            max_len,
            samples,
        } => {
            if *max_l < -1 {
                return Err(Outcome::usage("error: --max-l must be at least -1"));
            }
            let excesses: Vec<i64> = (-1..=*max_l).collect();
            match suite {
                Suite::Hopf => {
                    let range = SuiteRange {
                        max_n: *max_n,
                        max_m: *max_m,
                        excesses,
                        pair_max_n: (*max_n).min(2),
                        pair_max_m: (*max_m).min(2),
                    };
                    let (passed, v) = reports_json(&hopf_suite(&range, &c));
                    Outcome::json(if passed { 0 } else { 1 }, &v)
                }
                Suite::D2 => {
                    let u = graph_universe(*max_n, *max_m, &excesses, &c);
                    let (passed, v) = reports_json(&[check_d_squared(&u, &c)]);
                    Outcome::json(if passed { 0 } else { 1 }, &v)
                }
                Suite::CobarD2 => {
                    let suite = WordSuite {
                        letter_edges: *max_edges,
                        max_n: *max_n,
                        max_m: *max_m,
                        max_len: *max_len,
                        exhaustive_len: (*max_len).min(2),
                        exhaustive_edges: *max_edges,
                        samples: *samples,
                    };
                    let r = d_squared_suite(&suite, cli.seed, &c);
                    let passed = r.passed();
                    Outcome::json(if passed { 0 } else { 1 }, &json!({ "passed": passed, "report": r }))
                }
            }
        }
        Command::Cocycle { weights, max_n, max_m } => {
            let w = WeightFunctional::from_json(&read(weights)?)
                .map_err(|e| Outcome::usage(format!("error: {}: {e}", weights.display())))?;
            let r = is_cocycle(&w, *max_n, *max_m, &c);
            Outcome::json(
                if r.cocycle { 0 } else { 1 },
                &serde_json::to_value(&r).expect("report serializes"),
            )
        }
        Command::Obstruction {
            weights,
            state,
            args,
            n,
            m,
        } => {
            let w = WeightFunctional::from_json(&read(weights)?)
                .map_err(|e| Outcome::usage(format!("error: {}: {e}", weights.display())))?;
            let (dim, fields) = parse_state(&read_json(state)?)
                .map_err(|e| Outcome::usage(format!("error: {}: {e}", state.display())))?;
            let (adim, polys) =
                parse_args(&read_json(args)?).map_err(|e| Outcome::usage(format!("error: {}: {e}", args.display())))?;
            if adim != dim {
                return Err(Outcome::usage(format!(
                    "error: state dimension {dim} but argument dimension {adim}"
                )));
            }
            let o = assemble_obstruction(*n, *m, &w, &fields, &polys, dim, &c)
                .map_err(|e| Outcome::usage(format!("error: {e}")))?;
            let agree = o.paths_agree();
            let mut out = Outcome::json(if agree { 0 } else { 1 }, &o.to_json());
            if !agree {
                out.stderr = "evaluation paths disagree\n".to_string();
            }
            out
        }
        Command::Cohomology {
            max_edges,
            max_len,
            max_n,
            max_m,
            limit,
        } => {
            let tr = Truncation {
                max_edges: *max_edges,
                max_len: *max_len,
                max_n: max_n.unwrap_or(*max_edges),
                max_m: *max_m,
            };
            let r = truncated_cohomology_ranks(&tr, &c, *limit).map_err(|e| Outcome::usage(format!("error: {e}")))?;
            let mut out = Outcome::json(
                if r.image_in_kernel { 0 } else { 1 },
                &serde_json::to_value(&r).expect("report serializes"),
            );
            for rec in &r.records {
                out.stderr.push_str(&format!("{rec}\n"));
            }
            out
        }
    };
    Ok(out)
}

/// `{"dim": d, "fields": [field, …]}` with fields in polyvector JSON.
pub fn parse_state(v: &Value) -> Result<(usize, Vec<PolyVectorField>), String> {
    let dim = v
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or("state needs an integer `dim`")? as usize;
    let fields = v
        .get("fields")
        .and_then(Value::as_array)
        .ok_or("state needs a `fields` list")?;
    let fields = fields
        .iter()
        .map(|f| PolyVectorField::from_json(dim, f).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok((dim, fields))
}

/// `{"dim": d, "args": [polynomial, …]}` with polynomials in exponent-key JSON.
pub fn parse_args(v: &Value) -> Result<(usize, Vec<Polynomial>), String> {
    let dim = v
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or("arguments need an integer `dim`")? as usize;
    let args = v
        .get("args")
        .and_then(Value::as_array)
        .ok_or("arguments need an `args` list")?;
    let args = args
        .iter()
        .map(|p| Polynomial::from_json(dim, p).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok((dim, args))
}
