//! Command-line interface and the versioned text format for polynomials,
//! circuits, and tensors.
//!
//! Documents are line-based and diffable. Every file starts with a header
//! line `d3recon/1 <kind>` where the kind is one of `poly`, `circuit`,
//! `power`, or `tensor`, followed by `prime <p>` and kind-specific header
//! lines, then body lines. Lines starting with `#` and blank lines are
//! ignored, which lets result documents carry a trailing diagnostics block
//! while remaining parseable. Commands exit with 0 on certified success, 1
//! when the input is outside the target class or a verdict is negative, 2
//! when a search budget or decoding budget is exhausted, and 3 on I/O or
//! malformed-input errors.

use std::fmt::Write as _;
use std::io::Read as _;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::algebra::{Field, FieldElement, DEFAULT_PRIME};
use crate::circuits::{
    gen_ml_close_pair, gen_ml_separated, gen_power_plant, gen_setml, DepthThreeCircuit,
    PowerCircuit, ProductGate,
};
use crate::oracle::{pit_equal, pit_zero, Oracle};
use crate::poly::{LinearForm, Monomial, MultiPoly};
use crate::reconstruct::{
    reconstruct_multilinear_at, reconstruct_multilinear_report, reconstruct_setml, Reconstruction,
};
use crate::semrank::sem_rank;
use crate::waring::reconstruct_sumpowsum;
use crate::{Budgets, Error, Result};

pub use crate::lowdeg::brute_force_tensor_rank;
pub use crate::waring::brute_force_waring_rank;

/// A parsed text document.
#[derive(Debug, Clone)]
pub enum Document {
    Poly(MultiPoly),
    Circuit {
        circuit: DepthThreeCircuit,
        blocks: Option<Vec<Vec<usize>>>,
    },
    Power(PowerCircuit),
    Tensor {
        field: Field,
        shape: Vec<usize>,
        entries: Vec<FieldElement>,
    },
}

fn perr(ln: usize, col: usize, msg: impl std::fmt::Display) -> Error {
    Error::Invalid(format!("line {ln}, column {col}: {msg}"))
}

/// Splits a line into whitespace-separated tokens with 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut rest = line;
    let mut base = 0usize;
    loop {
        let trimmed = rest.trim_start();
        base += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return out;
        }
        let end = trimmed
            .find(char::is_whitespace)
            .unwrap_or(trimmed.len());
        out.push((base + 1, &trimmed[..end]));
        base += end;
        rest = &trimmed[end..];
    }
}

fn parse_u64(ln: usize, col: usize, tok: &str, what: &str) -> Result<u64> {
    tok.parse::<u64>()
        .map_err(|_| perr(ln, col, format!("unreadable {what} '{tok}'")))
}

fn parse_usize(ln: usize, col: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| perr(ln, col, format!("unreadable {what} '{tok}'")))
}

/// Parses `<value>:` at the start of a term or form body.
fn parse_head(ln: usize, col: usize, tok: &str, what: &str) -> Result<u64> {
    match tok.strip_suffix(':') {
        Some(v) => parse_u64(ln, col, v, what),
        None => Err(perr(ln, col, format!("expected '{what}:' before the pair list"))),
    }
}

/// Parses a `<var><sep><value>` pair such as `0^2` or `3*5`.
fn parse_pair(ln: usize, col: usize, tok: &str, sep: char, n: usize) -> Result<(u32, u64)> {
    let (v, e) = tok
        .split_once(sep)
        .ok_or_else(|| perr(ln, col, format!("expected '<var>{sep}<value>', got '{tok}'")))?;
    let var = parse_u64(ln, col, v, "variable index")?;
    if var as usize >= n {
        return Err(perr(ln, col, format!("variable {var} out of range for {n} variables")));
    }
    let val = parse_u64(ln, col, e, "value")?;
    Ok((var as u32, val))
}

fn parse_blocks_tokens(ln: usize, toks: &[(usize, &str)], n: usize) -> Result<Vec<Vec<usize>>> {
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new()];
    for &(col, tok) in toks {
        if tok == "|" {
            blocks.push(Vec::new());
        } else {
            let v = parse_usize(ln, col, tok, "variable index")?;
            if v >= n {
                return Err(perr(ln, col, format!("variable {v} out of range for {n} variables")));
            }
            blocks.last_mut().unwrap().push(v);
        }
    }
    if blocks.iter().any(|b| b.is_empty()) {
        return Err(perr(ln, 1, "empty block in partition"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for b in &blocks {
        for &v in b {
            if !seen.insert(v) {
                return Err(perr(ln, 1, format!("variable {v} appears in two blocks")));
            }
        }
    }
    Ok(blocks)
}

/// Parses a document from its text form.
pub fn parse_document(src: &str) -> Result<Document> {
    let lines: Vec<(usize, &str)> = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let mut it = lines.into_iter();
    let (ln, header) = it
        .next()
        .ok_or_else(|| Error::Invalid("empty document".into()))?;
    let head = tokens(header);
    if head.len() != 2 || head[0].1 != "d3recon/1" {
        return Err(perr(ln, 1, "expected header 'd3recon/1 <kind>'"));
    }
    let kind = head[1].1;
    let (pln, pline) = it
        .next()
        .ok_or_else(|| perr(ln, 1, "missing 'prime <p>' line"))?;
    let ptoks = tokens(pline);
    if ptoks.len() != 2 || ptoks[0].1 != "prime" {
        return Err(perr(pln, 1, "expected 'prime <p>'"));
    }
    let p = parse_u64(pln, ptoks[1].0, ptoks[1].1, "prime")?;
    let field = Field::new(p)?;

    let expect_usize = |it: &mut dyn Iterator<Item = (usize, &str)>, key: &str| -> Result<(usize, usize)> {
        let (ln, line) = it
            .next()
            .ok_or_else(|| Error::Invalid(format!("missing '{key} <n>' line")))?;
        let toks = tokens(line);
        if toks.len() != 2 || toks[0].1 != key {
            return Err(perr(ln, 1, format!("expected '{key} <n>'")));
        }
        Ok((ln, parse_usize(ln, toks[1].0, toks[1].1, key)?))
    };

    match kind {
        "poly" => {
            let (_, n) = expect_usize(&mut it, "vars")?;
            let mut poly = MultiPoly::zero(field, n);
            for (ln, line) in it {
                let toks = tokens(line);
                if toks[0].1 != "term" {
                    return Err(perr(ln, toks[0].0, format!("expected 'term', got '{}'", toks[0].1)));
                }
                if toks.len() < 2 {
                    return Err(perr(ln, 1, "term line needs a coefficient"));
                }
                let c = parse_head(ln, toks[1].0, toks[1].1, "coefficient")?;
                let mut pairs = Vec::new();
                let mut seen = std::collections::BTreeSet::new();
                for &(col, tok) in &toks[2..] {
                    let (v, e) = parse_pair(ln, col, tok, '^', n)?;
                    if e == 0 {
                        return Err(perr(ln, col, "zero exponent is not written"));
                    }
                    if !seen.insert(v) {
                        return Err(perr(ln, col, format!("variable {v} repeated in one term")));
                    }
                    pairs.push((v, e as u32));
                }
                poly.add_term(Monomial::from_pairs(pairs), field.el(c));
            }
            Ok(Document::Poly(poly))
        }
        "circuit" => {
            let (_, n) = expect_usize(&mut it, "vars")?;
            let mut blocks = None;
            let mut gates: Vec<ProductGate> = Vec::new();
            for (ln, line) in it {
                let toks = tokens(line);
                match toks[0].1 {
                    "blocks" if gates.is_empty() && blocks.is_none() => {
                        blocks = Some(parse_blocks_tokens(ln, &toks[1..], n)?);
                    }
                    "gate" => {
                        if toks.len() != 2 {
                            return Err(perr(ln, 1, "expected 'gate <scalar>'"));
                        }
                        let s = parse_u64(ln, toks[1].0, toks[1].1, "scalar")?;
                        gates.push(ProductGate {
                            scalar: field.el(s),
                            forms: Vec::new(),
                        });
                    }
                    "form" => {
                        let gate = gates
                            .last_mut()
                            .ok_or_else(|| perr(ln, toks[0].0, "form before any gate"))?;
                        gate.forms.push(parse_form(ln, &toks, field, n)?);
                    }
                    other => {
                        return Err(perr(ln, toks[0].0, format!("unexpected '{other}'")));
                    }
                }
            }
            Ok(Document::Circuit {
                circuit: DepthThreeCircuit::new(field, n, gates),
                blocks,
            })
        }
        "power" => {
            let (_, n) = expect_usize(&mut it, "vars")?;
            let (_, d) = expect_usize(&mut it, "degree")?;
            let mut terms: Vec<(FieldElement, Option<LinearForm>)> = Vec::new();
            for (ln, line) in it {
                let toks = tokens(line);
                match toks[0].1 {
                    "gate" => {
                        if toks.len() != 2 {
                            return Err(perr(ln, 1, "expected 'gate <coefficient>'"));
                        }
                        let c = parse_u64(ln, toks[1].0, toks[1].1, "coefficient")?;
                        terms.push((field.el(c), None));
                    }
                    "form" => {
                        let slot = terms
                            .last_mut()
                            .ok_or_else(|| perr(ln, toks[0].0, "form before any gate"))?;
                        if slot.1.is_some() {
                            return Err(perr(ln, toks[0].0, "power gates take exactly one form"));
                        }
                        slot.1 = Some(parse_form(ln, &toks, field, n)?);
                    }
                    other => {
                        return Err(perr(ln, toks[0].0, format!("unexpected '{other}'")));
                    }
                }
            }
            let terms = terms
                .into_iter()
                .map(|(c, f)| match f {
                    Some(f) => Ok((c, f)),
                    None => Err(Error::Invalid("power gate without a form".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Document::Power(PowerCircuit::new(field, n, d, terms)))
        }
        "tensor" => {
            let (sln, sline) = it
                .next()
                .ok_or_else(|| Error::Invalid("missing 'shape' line".into()))?;
            let stoks = tokens(sline);
            if stoks[0].1 != "shape" || stoks.len() < 2 {
                return Err(perr(sln, 1, "expected 'shape <d0> <d1> ...'"));
            }
            let mut shape = Vec::new();
            for &(col, tok) in &stoks[1..] {
                let d = parse_usize(sln, col, tok, "extent")?;
                if d == 0 {
                    return Err(perr(sln, col, "zero extent"));
                }
                shape.push(d);
            }
            let total: usize = shape.iter().product();
            let mut entries = Vec::with_capacity(total);
            for (ln, line) in it {
                let toks = tokens(line);
                if toks[0].1 != "entries" {
                    return Err(perr(ln, toks[0].0, format!("expected 'entries', got '{}'", toks[0].1)));
                }
                for &(col, tok) in &toks[1..] {
                    entries.push(field.el(parse_u64(ln, col, tok, "entry")?));
                }
            }
            if entries.len() != total {
                return Err(Error::Invalid(format!(
                    "tensor of shape {shape:?} needs {total} entries, found {}",
                    entries.len()
                )));
            }
            Ok(Document::Tensor {
                field,
                shape,
                entries,
            })
        }
        other => Err(perr(ln, head[1].0, format!("unknown document kind '{other}'"))),
    }
}

fn parse_form(ln: usize, toks: &[(usize, &str)], field: Field, n: usize) -> Result<LinearForm> {
    if toks.len() < 2 {
        return Err(perr(ln, 1, "form line needs a constant"));
    }
    let constant = parse_head(ln, toks[1].0, toks[1].1, "constant")?;
    let mut coeffs = vec![field.zero(); n];
    let mut seen = std::collections::BTreeSet::new();
    for &(col, tok) in &toks[2..] {
        let (v, c) = parse_pair(ln, col, tok, '*', n)?;
        if !seen.insert(v) {
            return Err(perr(ln, col, format!("variable {v} repeated in one form")));
        }
        coeffs[v as usize] = field.el(c);
    }
    Ok(LinearForm::new(field, coeffs, field.el(constant)))
}

/// Prints a document in canonical text form.
pub fn print_document(doc: &Document) -> String {
    let mut s = String::new();
    match doc {
        Document::Poly(p) => {
            writeln!(s, "d3recon/1 poly").unwrap();
            writeln!(s, "prime {}", p.field().prime()).unwrap();
            writeln!(s, "vars {}", p.num_vars()).unwrap();
            for (m, c) in p.terms() {
                write!(s, "term {}:", c.value()).unwrap();
                for &(v, e) in m.pairs() {
                    write!(s, " {v}^{e}").unwrap();
                }
                writeln!(s).unwrap();
            }
        }
        Document::Circuit { circuit, blocks } => {
            writeln!(s, "d3recon/1 circuit").unwrap();
            writeln!(s, "prime {}", circuit.field().prime()).unwrap();
            writeln!(s, "vars {}", circuit.num_vars()).unwrap();
            if let Some(blocks) = blocks {
                write!(s, "blocks").unwrap();
                for (i, b) in blocks.iter().enumerate() {
                    if i > 0 {
                        write!(s, " |").unwrap();
                    }
                    for v in b {
                        write!(s, " {v}").unwrap();
                    }
                }
                writeln!(s).unwrap();
            }
            for gate in &circuit.gates {
                writeln!(s, "gate {}", gate.scalar.value()).unwrap();
                for f in &gate.forms {
                    print_form(&mut s, f);
                }
            }
        }
        Document::Power(pc) => {
            writeln!(s, "d3recon/1 power").unwrap();
            writeln!(s, "prime {}", pc.field().prime()).unwrap();
            writeln!(s, "vars {}", pc.num_vars()).unwrap();
            writeln!(s, "degree {}", pc.degree).unwrap();
            for (c, f) in &pc.terms {
                writeln!(s, "gate {}", c.value()).unwrap();
                print_form(&mut s, f);
            }
        }
        Document::Tensor {
            field,
            shape,
            entries,
        } => {
            writeln!(s, "d3recon/1 tensor").unwrap();
            writeln!(s, "prime {}", field.prime()).unwrap();
            write!(s, "shape").unwrap();
            for d in shape {
                write!(s, " {d}").unwrap();
            }
            writeln!(s).unwrap();
            for chunk in entries.chunks(8) {
                write!(s, "entries").unwrap();
                for e in chunk {
                    write!(s, " {}", e.value()).unwrap();
                }
                writeln!(s).unwrap();
            }
        }
    }
    s
}

fn print_form(s: &mut String, f: &LinearForm) {
    write!(s, "form {}:", f.constant().value()).unwrap();
    for (v, c) in f.coeffs().iter().enumerate() {
        if !c.is_zero() {
            write!(s, " {v}*{}", c.value()).unwrap();
        }
    }
    writeln!(s).unwrap();
}

/// Black-box oracle for any document kind.
pub fn document_oracle(doc: &Document) -> Oracle {
    match doc {
        Document::Poly(p) => poly_oracle(p),
        Document::Circuit { circuit, .. } => circuit.oracle(),
        Document::Power(pc) => pc.oracle(),
        Document::Tensor {
            field,
            shape,
            entries,
        } => tensor_oracle(*field, shape.clone(), entries.clone()),
    }
}

fn poly_oracle(p: &MultiPoly) -> Oracle {
    let var_deg = p
        .terms()
        .flat_map(|(m, _)| m.pairs().iter().map(|&(_, e)| e as usize))
        .max()
        .unwrap_or(0);
    let poly = p.clone();
    Oracle::from_fn(
        p.field(),
        p.num_vars(),
        p.degree(),
        var_deg,
        move |x| poly.eval(x),
    )
}

/// Oracle for the set-multilinear polynomial whose coefficient tensor (over
/// consecutive variable blocks, row-major with the first axis slowest) is the
/// given dense tensor.
fn tensor_oracle(field: Field, shape: Vec<usize>, entries: Vec<FieldElement>) -> Oracle {
    let offsets: Vec<usize> = shape
        .iter()
        .scan(0usize, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let n: usize = shape.iter().sum();
    let order = shape.len();
    Oracle::from_fn(field, n, order, 1, move |x| {
        let mut total = field.zero();
        for (flat, &t) in entries.iter().enumerate() {
            if t.is_zero() {
                continue;
            }
            let mut rem = flat;
            let mut prod = t;
            for b in (0..order).rev() {
                let i = rem % shape[b];
                rem /= shape[b];
                prod = prod * x[offsets[b] + i];
            }
            total = total + prod;
        }
        total
    })
}

/// Consecutive variable blocks matching a tensor's axes.
pub fn tensor_blocks(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut blocks = Vec::with_capacity(shape.len());
    let mut next = 0;
    for &d in shape {
        blocks.push((next..next + d).collect());
        next += d;
    }
    blocks
}

#[derive(Parser)]
#[command(
    name = "d3recon",
    version,
    about = "Exact reconstruction of depth-3 arithmetic circuits over prime fields"
)]
struct Cli {
    /// Seed for all internal randomness; equal seeds reproduce byte-identical output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Identity-testing soundness exponent (failure probability at most 2^-E).
    #[arg(long, global = true, value_name = "E")]
    error_exponent: Option<u32>,
    #[command(flatten)]
    budget: BudgetFlags,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct BudgetFlags {
    /// Degree cap for the polynomial-system cross-check backend.
    #[arg(long = "budget-core-degree", global = true, value_name = "N")]
    core_degree: Option<usize>,
    /// Essential-variable cap for the polynomial-system cross-check backend.
    #[arg(long = "budget-core-vars", global = true, value_name = "N")]
    core_vars: Option<usize>,
    /// Cap on essential variables for dense interpolation.
    #[arg(long = "budget-interp-vars", global = true, value_name = "N")]
    interp_vars: Option<usize>,
    /// Cap on candidate circuits per recovery.
    #[arg(long = "budget-candidates", global = true, value_name = "N")]
    candidates: Option<usize>,
    /// Semantic-rank promise used when none is known.
    #[arg(long = "budget-semrank-promise", global = true, value_name = "R")]
    semrank_promise: Option<usize>,
    /// Cap on the preserving coordinate set size.
    #[arg(long = "budget-preserve-b", global = true, value_name = "N")]
    preserve_b: Option<usize>,
    /// Cap on preserving-set scan iterations.
    #[arg(long = "budget-preserve-iters", global = true, value_name = "N")]
    preserve_iters: Option<usize>,
    /// Faulty line samples tolerated per decoded cluster value.
    #[arg(long = "budget-bw-errors", global = true, value_name = "E")]
    bw_errors: Option<usize>,
    /// Minimum line-sample window for decoding.
    #[arg(long = "budget-bw-min-window", global = true, value_name = "W")]
    bw_min_window: Option<usize>,
    /// Node cap for the exhaustive polynomial-system solver.
    #[arg(long = "budget-solver-nodes", global = true, value_name = "N")]
    solver_nodes: Option<u64>,
    /// Restart count for the randomized polynomial-system solver.
    #[arg(long = "budget-solver-restarts", global = true, value_name = "N")]
    solver_restarts: Option<u32>,
    /// Fresh-anchor retries per distance threshold.
    #[arg(long = "budget-sweep-retries", global = true, value_name = "N")]
    sweep_retries: Option<u32>,
}

impl BudgetFlags {
    fn apply(&self, error_exponent: Option<u32>) -> Budgets {
        let mut b = Budgets::default();
        if let Some(v) = self.core_degree {
            b.max_core_degree = v;
        }
        if let Some(v) = self.core_vars {
            b.max_core_vars = v;
        }
        if let Some(v) = self.interp_vars {
            b.max_interp_vars = v;
        }
        if let Some(v) = self.candidates {
            b.max_recovery_candidates = v;
        }
        if let Some(v) = self.semrank_promise {
            b.semrank_promise = v;
        }
        if let Some(v) = self.preserve_b {
            b.preserve_max_b = v;
        }
        if let Some(v) = self.preserve_iters {
            b.preserve_max_iters = v;
        }
        if let Some(v) = self.bw_errors {
            b.bw_errors = v;
        }
        if let Some(v) = self.bw_min_window {
            b.bw_min_window = v;
        }
        if let Some(v) = self.solver_nodes {
            b.solver_nodes = v;
        }
        if let Some(v) = self.solver_restarts {
            b.solver_restarts = v;
        }
        if let Some(v) = self.sweep_retries {
            b.sweep_retries = v;
        }
        if let Some(e) = error_exponent {
            b.pit_exponent = e;
        }
        b
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Decompose a polynomial as a minimal sum of powers of affine forms.
    DecomposeSymmetric {
        /// Input document path, or "-" for stdin.
        input: String,
        /// Maximum number of summands to search for.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Decompose a coefficient tensor as a minimal set-multilinear circuit.
    DecomposeTensor {
        /// Input tensor document path, or "-" for stdin.
        input: String,
        /// Maximum number of rank-one terms to search for.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Reconstruct a multilinear depth-3 circuit from black-box access to a polynomial.
    ReconstructMl {
        /// Input document path, or "-" for stdin.
        input: String,
        /// Maximum product fan-in to search for.
        #[arg(long)]
        k: Option<usize>,
        /// Fix the cluster distance threshold instead of sweeping.
        #[arg(long)]
        tau: Option<u64>,
    },
    /// Print the semantic or syntactic rank of a circuit.
    Rank {
        /// Input circuit or power document path, or "-" for stdin.
        input: String,
        /// Rank of the computed polynomial's class.
        #[arg(long)]
        semantic: bool,
        /// Rank of the given gate representation.
        #[arg(long)]
        syntactic: bool,
    },
    /// Test two documents for polynomial identity.
    Pit {
        a: String,
        b: String,
    },
    /// Re-verify a claimed decomposition against the original document.
    Verify {
        original: String,
        claimed: String,
    },
    /// Generate a planted instance.
    Gen {
        /// One of: power, ml-separated, ml-close, setml.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = DEFAULT_PRIME)]
        prime: u64,
        /// Number of variables.
        #[arg(long)]
        vars: usize,
        /// Number of gates.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Degree (power plants).
        #[arg(long)]
        degree: Option<usize>,
        /// Block partition for setml plants, e.g. "0 1 | 2 3 | 4 5".
        #[arg(long)]
        blocks: Option<String>,
    },
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::Io(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
    }
}

fn load(path: &str) -> Result<Document> {
    parse_document(&read_input(path)?)
}

/// Pads an oracle to a larger variable count; extra coordinates are ignored.
fn pad_oracle(o: &Oracle, n: usize) -> Oracle {
    if o.num_vars() == n {
        return o.clone();
    }
    let inner = o.clone();
    let m = o.num_vars();
    Oracle::from_fn(o.field(), n, o.degree_bound(), o.degree_bound(), move |x| {
        inner.eval(&x[..m])
    })
}

fn require_same_prime(a: &Oracle, b: &Oracle) -> Result<()> {
    if a.field().prime() != b.field().prime() {
        return Err(Error::Invalid(format!(
            "prime mismatch: {} vs {}",
            a.field().prime(),
            b.field().prime()
        )));
    }
    Ok(())
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::NotInClass(_) => 1,
        Error::BudgetExceeded { .. } | Error::DecodeFailure(_) => 2,
        _ => 3,
    }
}

/// Entry point: parses arguments, dispatches, maps errors to exit codes.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 3u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let budgets = cli.budget.apply(cli.error_exponent);
    match dispatch(cli.cmd, cli.seed, &budgets) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code_for(&e))
        }
    }
}

fn dispatch(cmd: Cmd, seed: u64, budgets: &Budgets) -> Result<u8> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match cmd {
        Cmd::DecomposeSymmetric { input, k } => {
            let doc = load(&input)?;
            let o = document_oracle(&doc);
            let k_max = k.unwrap_or(budgets.max_k);
            let pc = reconstruct_sumpowsum(&o, k_max, budgets, &mut rng)?;
            certify(&pc.oracle(), &o, budgets, &mut rng)?;
            print!("{}", print_document(&Document::Power(pc.clone())));
            println!("# command decompose-symmetric");
            println!("# fan-in {}", pc.fan_in());
            println!("# queries {}", o.query_count());
            println!("# pit pass");
            Ok(0)
        }
        Cmd::DecomposeTensor { input, k } => {
            let doc = load(&input)?;
            let (field, shape) = match &doc {
                Document::Tensor { field, shape, .. } => (*field, shape.clone()),
                _ => {
                    return Err(Error::Invalid(
                        "decompose-tensor expects a tensor document".into(),
                    ))
                }
            };
            let o = document_oracle(&doc);
            let blocks = tensor_blocks(&shape);
            let k_max = k.unwrap_or(budgets.max_k);
            let c = reconstruct_setml(&o, &blocks, k_max, budgets, &mut rng)?;
            certify(&c.oracle(), &o, budgets, &mut rng)?;
            let fan_in = c.fan_in();
            print!(
                "{}",
                print_document(&Document::Circuit {
                    circuit: c,
                    blocks: Some(blocks),
                })
            );
            println!("# command decompose-tensor");
            println!("# prime {}", field.prime());
            println!("# fan-in {fan_in}");
            println!("# queries {}", o.query_count());
            println!("# pit pass");
            Ok(0)
        }
        Cmd::ReconstructMl { input, k, tau } => {
            let doc = load(&input)?;
            let o = document_oracle(&doc);
            let k_max = k.unwrap_or(budgets.max_k);
            let r: Reconstruction = match tau {
                Some(t) => reconstruct_multilinear_at(&o, k_max, t, budgets, &mut rng)?,
                None => reconstruct_multilinear_report(&o, k_max, budgets, &mut rng)?,
            };
            certify(&r.circuit.oracle(), &o, budgets, &mut rng)?;
            let fan_in = r.circuit.fan_in();
            print!(
                "{}",
                print_document(&Document::Circuit {
                    circuit: r.circuit,
                    blocks: None,
                })
            );
            println!("# command reconstruct-ml");
            println!("# tau {}", r.tau);
            print!("# preserved");
            for v in &r.preserved {
                print!(" {v}");
            }
            println!();
            println!("# clusters {}", r.num_clusters);
            println!("# fan-in {fan_in}");
            println!("# queries {}", o.query_count());
            println!("# pit pass");
            Ok(0)
        }
        Cmd::Rank {
            input,
            semantic,
            syntactic,
        } => {
            if semantic == syntactic {
                return Err(Error::Invalid(
                    "pass exactly one of --semantic or --syntactic".into(),
                ));
            }
            let doc = load(&input)?;
            let circuit = match doc {
                Document::Circuit { circuit, .. } => circuit,
                Document::Power(pc) => pc.to_depth3(),
                _ => {
                    return Err(Error::Invalid(
                        "rank expects a circuit or power document".into(),
                    ))
                }
            };
            let value = if syntactic {
                circuit.syn_rank()
            } else {
                sem_rank(&circuit.expand())?
            };
            println!("{value}");
            Ok(0)
        }
        Cmd::Pit { a, b } => {
            let da = load(&a)?;
            let db = load(&b)?;
            let oa = document_oracle(&da);
            let ob = document_oracle(&db);
            require_same_prime(&oa, &ob)?;
            let n = oa.num_vars().max(ob.num_vars());
            let equal = pit_equal(
                &pad_oracle(&oa, n),
                &pad_oracle(&ob, n),
                budgets.pit_exponent,
                &mut rng,
            )?;
            println!("{}", if equal { "equal" } else { "unequal" });
            Ok(if equal { 0 } else { 1 })
        }
        Cmd::Verify { original, claimed } => {
            let dorig = load(&original)?;
            let dclaim = load(&claimed)?;
            let oorig = document_oracle(&dorig);
            let oclaim = document_oracle(&dclaim);
            require_same_prime(&oorig, &oclaim)?;
            if let Document::Circuit {
                circuit,
                blocks: Some(blocks),
            } = &dclaim
            {
                if !circuit.is_set_multilinear(blocks) {
                    println!("mismatch");
                    return Ok(1);
                }
            }
            let n = oorig.num_vars().max(oclaim.num_vars());
            let equal = pit_equal(
                &pad_oracle(&oorig, n),
                &pad_oracle(&oclaim, n),
                budgets.pit_exponent,
                &mut rng,
            )?;
            println!("{}", if equal { "verified" } else { "mismatch" });
            Ok(if equal { 0 } else { 1 })
        }
        Cmd::Gen {
            kind,
            prime,
            vars,
            k,
            degree,
            blocks,
        } => {
            let field = Field::new(prime)?;
            let doc = generate(&kind, field, vars, k, degree, blocks.as_deref(), budgets, &mut rng)?;
            print!("{}", print_document(&doc));
            println!("# command gen");
            println!("# kind {kind}");
            println!("# seed consumed");
            Ok(0)
        }
    }
}

/// Re-runs identity testing on a finished decomposition so that success output
/// always carries a fresh certificate.
fn certify(result: &Oracle, target: &Oracle, budgets: &Budgets, rng: &mut dyn RngCore) -> Result<()> {
    if pit_equal(result, target, budgets.pit_exponent, rng)? {
        Ok(())
    } else {
        Err(Error::Internal(
            "result failed its own identity certificate".into(),
        ))
    }
}

fn generate(
    kind: &str,
    field: Field,
    vars: usize,
    k: usize,
    degree: Option<usize>,
    blocks: Option<&str>,
    budgets: &Budgets,
    rng: &mut dyn RngCore,
) -> Result<Document> {
    for _ in 0..32 {
        match kind {
            "power" => {
                let d = degree
                    .ok_or_else(|| Error::Invalid("gen --kind power needs --degree".into()))?;
                if field.prime() <= d as u64 {
                    return Err(Error::Invalid(format!(
                        "degree {d} needs a prime larger than it, got {}",
                        field.prime()
                    )));
                }
                let pc = gen_power_plant(field, vars, k, d, rng);
                if pit_zero(&pc.oracle(), budgets.pit_exponent, rng)? {
                    continue;
                }
                if !pc.to_depth3().is_minimal(budgets.pit_exponent, rng)? {
                    continue;
                }
                return Ok(Document::Power(pc));
            }
            "ml-separated" => {
                if k == 0 || vars / k == 0 {
                    return Err(Error::Invalid(format!(
                        "{vars} variables cannot host {k} variable-disjoint gates"
                    )));
                }
                let c = gen_ml_separated(field, vars, k, vars / k, rng);
                if !c.is_multilinear() || c.fan_in() != k {
                    continue;
                }
                return Ok(Document::Circuit {
                    circuit: c,
                    blocks: None,
                });
            }
            "ml-close" => {
                if vars < 2 {
                    return Err(Error::Invalid("ml-close needs at least 2 variables".into()));
                }
                let c = gen_ml_close_pair(field, vars, 0, 1, rng);
                if pit_zero(&c.oracle(), budgets.pit_exponent, rng)? {
                    continue;
                }
                return Ok(Document::Circuit {
                    circuit: c,
                    blocks: None,
                });
            }
            "setml" => {
                let spec = blocks
                    .ok_or_else(|| Error::Invalid("gen --kind setml needs --blocks".into()))?;
                let toks = tokens(spec);
                let blocks = parse_blocks_tokens(1, &toks, vars)?;
                let c = gen_setml(field, vars, &blocks, k, rng);
                if !c.is_set_multilinear(&blocks) {
                    continue;
                }
                return Ok(Document::Circuit {
                    circuit: c,
                    blocks: Some(blocks),
                });
            }
            other => {
                return Err(Error::Invalid(format!(
                    "unknown plant kind '{other}' (use power, ml-separated, ml-close, setml)"
                )))
            }
        }
    }
    Err(Error::Internal(
        "no generated instance passed its shape checks".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn roundtrip(doc: &Document) -> String {
        let printed = print_document(doc);
        let reparsed = parse_document(&printed).unwrap();
        let reprinted = print_document(&reparsed);
        assert_eq!(printed, reprinted);
        printed
    }

    #[test]
    fn poly_documents_round_trip() {
        let field = Field::default_field();
        let mut p = MultiPoly::zero(field, 3);
        p.add_term(Monomial::from_pairs([(0, 2), (2, 1)]), field.el(5));
        p.add_term(Monomial::one(), field.el(7));
        let printed = roundtrip(&Document::Poly(p));
        assert!(printed.contains("term 5: 0^2 2^1"));
        assert!(printed.contains("term 7:"));
    }

    #[test]
    fn circuit_documents_round_trip_with_blocks() {
        let field = Field::default_field();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let blocks = vec![vec![0, 1], vec![2, 3]];
        let c = gen_setml(field, 4, &blocks, 2, &mut rng);
        let printed = roundtrip(&Document::Circuit {
            circuit: c,
            blocks: Some(blocks),
        });
        assert!(printed.contains("blocks 0 1 | 2 3"));
    }

    #[test]
    fn power_documents_round_trip() {
        let field = Field::default_field();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let pc = gen_power_plant(field, 3, 2, 5, &mut rng);
        let printed = roundtrip(&Document::Power(pc));
        assert!(printed.contains("degree 5"));
    }

    #[test]
    fn tensor_documents_round_trip() {
        let field = Field::new(5).unwrap();
        let entries: Vec<FieldElement> = (0..8).map(|i| field.el(i % 5)).collect();
        let printed = roundtrip(&Document::Tensor {
            field,
            shape: vec![2, 2, 2],
            entries,
        });
        assert!(printed.contains("shape 2 2 2"));
    }

    #[test]
    fn zero_term_file_parses_to_zero_poly() {
        let src = "d3recon/1 poly\nprime 101\nvars 4\n";
        match parse_document(src).unwrap() {
            Document::Poly(p) => assert!(p.terms().next().is_none()),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn malformed_input_reports_line_and_column() {
        let src = "d3recon/1 poly\nprime 101\nvars 2\nterm 5: 0^x\n";
        let err = parse_document(src).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 4"), "{msg}");
        assert!(msg.contains("column 9"), "{msg}");
    }

    #[test]
    fn composite_prime_is_rejected() {
        let src = "d3recon/1 poly\nprime 6\nvars 1\n";
        assert!(parse_document(src).is_err());
    }

    #[test]
    fn out_of_range_variable_is_rejected() {
        let src = "d3recon/1 poly\nprime 101\nvars 2\nterm 1: 5^1\n";
        let msg = format!("{}", parse_document(src).unwrap_err());
        assert!(msg.contains("out of range"), "{msg}");
    }

    #[test]
    fn diagnostics_lines_are_ignored() {
        let src = "# produced by a test\nd3recon/1 poly\nprime 101\nvars 1\nterm 3: 0^1\n# queries 12\n";
        match parse_document(src).unwrap() {
            Document::Poly(p) => assert_eq!(p.terms().count(), 1),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn tensor_entry_count_is_checked() {
        let src = "d3recon/1 tensor\nprime 5\nshape 2 2\nentries 1 2 3\n";
        let msg = format!("{}", parse_document(src).unwrap_err());
        assert!(msg.contains("needs 4 entries"), "{msg}");
    }

    #[test]
    fn tensor_oracle_matches_dense_contraction() {
        let field = Field::new(5).unwrap();
        let entries: Vec<FieldElement> = (0..8).map(|i| field.el((3 * i + 1) % 5)).collect();
        let o = tensor_oracle(field, vec![2, 2, 2], entries.clone());
        let x: Vec<FieldElement> = (0..6).map(|i| field.el(i as u64 + 1)).collect();
        let mut want = field.zero();
        for idx in 0..8 {
            let (i, j, l) = (idx >> 2 & 1, idx >> 1 & 1, idx & 1);
            want = want + entries[idx] * x[i] * x[2 + j] * x[4 + l];
        }
        assert_eq!(o.eval(&x), want);
    }
}
