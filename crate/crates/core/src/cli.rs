//! Command-line front end.
//!
//! Every run produces a [`Report`]: named checks with residuals and
//! tolerances, an overall status, provenance (input hash and the effective
//! configuration) and a command-specific payload. Exit codes are 0 when all
//! checks pass, 1 when some check fails (the report is still written) and 2
//! for input, parse, shape or configuration errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bogoliubov::{self, BogoliubovJson, BogoliubovOperator};
use crate::corpus;
use crate::decomposition;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::fock::{self, FockSpace, MultiIndex};
use crate::implementer::{self, FamilyOptions, ImplementerFamily};
use crate::linalg::{self, CVec};
use crate::oneparticle::{DoubledSpace, KVector};
use crate::report::{self, tol, Check};

pub const SCHEMA: &str = "ccr-fock/1";

/// Tolerance used when validating input matrices.
pub const INPUT_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "ccr-fock", version, about = "Bogoliubov operators, their canonical decomposition and Fock-space implementers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Check that the input is a Bogoliubov operator.
    Validate(RunArgs),
    /// Canonical decomposition `V = U_V W_V`.
    Decompose(RunArgs),
    /// Build the implementer family and export it as a JSON bundle.
    Implement(RunArgs),
    /// Run the verification suites.
    Verify(RunArgs),
    /// Quasi-free state operators and the purity test.
    State(RunArgs),
    /// Write a canonical input fixture.
    EmitFixture(FixtureArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Input JSON: a Bogoliubov operator or a family bundle.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Report path (standard output when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Fock-space particle-number cutoff N.
    #[arg(long, default_value_t = 16)]
    pub cutoff: usize,
    /// Override for every nonzero check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Multi-index such as `1,1,2`; repeat the flag for several.
    #[arg(long)]
    pub alpha: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Verification suite, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Run checks on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FixtureArgs {
    pub name: FixtureName,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureName {
    Identity,
    Squeeze,
    Embed12,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Validate,
    Decompose,
    Implement,
    Verify,
    State,
}

/// Names accepted by `--suite`, in report order.
pub const SUITES: [&str; 10] = [
    "gaussian",
    "oracle",
    "commutators",
    "intertwiner",
    "weyl",
    "cuntz",
    "annihilation",
    "composition",
    "gns",
    "convergence",
];

/// Validated configuration of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip)]
    pub input: PathBuf,
    pub cutoff: usize,
    pub tol: Option<f64>,
    pub alpha: Vec<String>,
    pub seed: u64,
    pub suite: String,
    #[serde(skip)]
    pub exec: Execution,
}

impl RunConfig {
    pub fn new(command: Command, args: &RunArgs) -> Result<Self> {
        let config = Self {
            command,
            input: args.input.clone(),
            cutoff: args.cutoff,
            tol: args.tol,
            alpha: args.alpha.clone(),
            seed: args.seed,
            suite: args.suite.clone(),
            exec: if args.sequential { Execution::Sequential } else { Execution::default() },
        };
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        if self.cutoff < 2 {
            return Err(Error::InvalidConfig(format!("cutoff must be at least 2, got {}", self.cutoff)));
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidConfig(format!("tolerance must be positive, got {t}")));
            }
        }
        if self.suite != "all" && !SUITES.contains(&self.suite.as_str()) {
            return Err(Error::InvalidConfig(format!("unknown suite `{}`; expected all or one of {}", self.suite, SUITES.join(", "))));
        }
        for a in &self.alpha {
            MultiIndex::parse(a)?;
        }
        Ok(())
    }

    fn alphas(&self) -> Result<Option<Vec<MultiIndex>>> {
        if self.alpha.is_empty() {
            return Ok(None);
        }
        self.alpha.iter().map(|a| MultiIndex::parse(a)).collect::<Result<Vec<_>>>().map(Some)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub input_sha256: Option<String>,
    pub config: Value,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorInfo {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub status: Status,
    pub checks: Vec<Check>,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl Report {
    fn new(command: &str, checks: Vec<Check>, provenance: Provenance, output: Option<Value>) -> Self {
        let status = if report::all_pass(&checks) { Status::Pass } else { Status::Fail };
        Self { schema: SCHEMA, command: command.into(), status, checks, provenance, output, error: None }
    }

    pub fn from_error(command: &str, err: &Error, provenance: Provenance) -> Self {
        Self {
            schema: SCHEMA,
            command: command.into(),
            status: Status::Error,
            checks: Vec::new(),
            provenance,
            output: None,
            error: Some(ErrorInfo { kind: err.kind(), message: err.to_string() }),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }

    /// Pretty JSON with a trailing newline. Non-finite residuals (which JSON
    /// cannot carry) are written as `null`.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are always serializable");
        s.push('\n');
        s
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a Bogoliubov operator; a family bundle is accepted through its
/// `"V"` entry.
pub fn parse_operator(text: &str, tolerance: f64) -> Result<BogoliubovOperator> {
    let value: Value = serde_json::from_str(text)?;
    let value = match value.get("V") {
        Some(v) => v.clone(),
        None => value,
    };
    let json: BogoliubovJson = serde_json::from_value(value)?;
    BogoliubovOperator::from_json(&json, tolerance)
}

/// Runs one command. Errors are returned to the caller, which turns them
/// into exit code 2.
pub fn run(config: &RunConfig, input_text: &str) -> Result<Report> {
    let v = parse_operator(input_text, INPUT_TOL)?;
    let (mut checks, output) = match config.command {
        Command::Validate => validate(&v),
        Command::Decompose => decompose(&v)?,
        Command::Implement => implement(&v, config)?,
        Command::Verify => verify(&v, config)?,
        Command::State => state(&v, config)?,
    };
    if let Some(t) = config.tol {
        for c in checks.iter_mut().filter(|c| c.tolerance > 0.0) {
            *c = c.clone().with_tolerance(t);
        }
    }
    Ok(Report::new(command_name(config.command), checks, provenance(Some(input_text), config), Some(output)))
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Validate => "validate",
        Command::Decompose => "decompose",
        Command::Implement => "implement",
        Command::Verify => "verify",
        Command::State => "state",
    }
}

fn provenance(input: Option<&str>, config: &RunConfig) -> Provenance {
    Provenance {
        input_sha256: input.map(|s| sha256_hex(s.as_bytes())),
        config: serde_json::to_value(config).unwrap_or(Value::Null),
        version: env!("CARGO_PKG_VERSION"),
    }
}

type Outcome = (Vec<Check>, Value);

fn validate(v: &BogoliubovOperator) -> Outcome {
    let rel = v.check_relations();
    let shale = v.shale_diagnostics();
    let index = v.index();
    let checks = vec![
        Check::at_most("relation_v11_v21", rel.rel1, tol::STRUCTURAL),
        Check::at_most("relation_v22_v12", rel.rel2, tol::STRUCTURAL),
        Check::at_most("relation_v11_v12", rel.rel3, tol::STRUCTURAL),
        Check::at_most("relation_v22_v21", rel.rel4, tol::STRUCTURAL),
        Check::holds("index_even_nonpositive", index <= 0 && index % 2 == 0),
        Check::holds("shale_diagnostics_finite", shale.hs_offdiag.is_finite() && shale.hs_polar_defect.is_finite()),
    ];
    let output = json!({
        "m": v.m(),
        "M": v.big_m(),
        "index": index,
        "relations": rel,
        "shale": shale,
    });
    (checks, output)
}

fn decompose(v: &BogoliubovOperator) -> Result<Outcome> {
    let d = decomposition::canonical_decomposition(v)?;
    let r = d.residuals(v);
    let mut checks = vec![
        Check::at_most("pv_pullback", r.pv, tol::STRUCTURAL),
        Check::at_most("pv_basis_projection", r.pv_basis_projection, tol::STRUCTURAL),
        Check::at_least("pv_positive_on_range", r.pv_min_cp, 1e-12),
        Check::at_most("zv_relation", r.zv, tol::STRUCTURAL),
        Check::at_most("reconstruction", r.product, tol::STRUCTURAL),
        Check::at_most("w_diagonal", r.w_offdiag, tol::STRUCTURAL),
        Check::at_most("u_projection", r.u_projection, tol::STRUCTURAL),
        Check::at_most("u_disk_point", r.u_disk_point, tol::STRUCTURAL),
        Check::at_most("w_isometry", r.w_isometry, tol::STRUCTURAL),
        Check::holds("index_preserved", r.index_preserved),
        Check::at_most("w_explicit_form", decomposition::w_explicit_check(v, &d), tol::STRUCTURAL),
    ];
    if v.is_square() {
        let (u, w) = decomposition::automorphism_special_form(v)?;
        let gap = linalg::diff(u.matrix(), d.u_v.matrix()).max(linalg::diff(w.matrix(), d.w_v.matrix()));
        checks.push(Check::at_most("automorphism_special_form", gap, tol::STRUCTURAL));
    }
    Ok((checks, d.to_json()))
}

fn family(v: &BogoliubovOperator, config: &RunConfig) -> Result<ImplementerFamily> {
    implementer::build_family_with(v, &FamilyOptions { cutoff: config.cutoff, exec: config.exec, f_basis: None })
}

fn implement(v: &BogoliubovOperator, config: &RunConfig) -> Result<Outcome> {
    let fam = family(v, config)?;
    let mut checks = fam.invariants()?;
    let rel = implementer::intertwining_relations(v, &fam.h);
    for (i, r) in rel.iter().enumerate() {
        checks.push(Check::at_most(format!("h_intertwining_{}", i + 1), *r, tol::STRUCTURAL));
    }
    checks.push(Check::at_most("h_symmetry", fam.h.symmetry_residual(), tol::STRUCTURAL));
    let bundle = fam.to_json(&checks);
    Ok((checks, bundle))
}

/// Deterministic complex vector of unit norm.
fn probe_vector(len: usize, seed: u64, stream: usize) -> CVec {
    let mut rng = corpus::case_rng(seed, stream);
    let v = CVec::from_fn(len, |_, _| linalg::c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let n = linalg::vec_norm(&v);
    v / linalg::real(n)
}

/// Mixed source vector `(x; y)` with both parts nonzero.
fn mixed_vector(space: DoubledSpace, seed: u64, stream: usize) -> KVector {
    KVector { space, coords: probe_vector(space.dim(), seed, stream) }
}

fn real_vector(space: DoubledSpace, norm: f64, seed: u64, stream: usize) -> KVector {
    let mut rng = corpus::case_rng(seed, stream);
    corpus::random_real_vector(space, norm, &mut rng)
}

/// Norm of the real test vectors fed to Weyl operators.
const WEYL_NORM: f64 = 0.3;

/// Cutoff used by the series oracle, whose cost grows fast with `N`.
const ORACLE_CUTOFF: usize = 10;

fn verify(v: &BogoliubovOperator, config: &RunConfig) -> Result<Outcome> {
    let fam = family(v, config)?;
    let alphas = match config.alphas()? {
        Some(a) => a,
        None => MultiIndex::enumerate(fam.n(), 2),
    };
    let suites: Vec<&str> = if config.suite == "all" { SUITES.to_vec() } else { vec![config.suite.as_str()] };
    let results = exec::map(config.exec, &suites, |name| run_suite(name, &fam, &alphas, config));
    let mut checks = Vec::new();
    let mut output = serde_json::Map::new();
    for (name, r) in suites.iter().zip(results) {
        let (c, o) = r?;
        checks.extend(c);
        output.insert((*name).to_string(), o);
    }
    Ok((checks, Value::Object(output)))
}

fn run_suite(name: &str, fam: &ImplementerFamily, alphas: &[MultiIndex], config: &RunConfig) -> Result<Outcome> {
    let n = fam.cutoff();
    let seed = config.seed;
    let src = fam.v.source();
    // Sequential inside a suite: the suites themselves already run in parallel.
    let inner = Execution::Sequential;
    match name {
        "gaussian" => {
            let g = implementer::gaussian_vacuum_norm_check(&fam.h, &fam.target)?;
            let slack = g.tail_bound.max(tol::STRUCTURAL);
            let psi0_norm = fam.normalization * g.lhs;
            let checks = vec![
                Check::at_most("gaussian_norm_law", g.defect(), slack),
                Check::at_most("normalization_consistency", (psi0_norm - 1.0).abs(), slack * fam.normalization.max(tol::STRUCTURAL)),
            ];
            Ok((checks, json!({"norm": g.lhs, "determinant_law": g.rhs, "tail_bound": g.tail_bound, "psi0_vacuum_norm": psi0_norm})))
        }
        "oracle" => {
            let cut = n.min(ORACLE_CUTOFF);
            let s = FockSpace::new(fam.v.m(), cut)?;
            let t = FockSpace::new(fam.v.big_m(), cut)?;
            let series = implementer::wick_exp_series(&fam.h, &s, &t)?;
            let factored = implementer::wick_exp_factored(&fam.h, &s, &t, inner)?;
            let d = linalg::diff(series.matrix(), factored.matrix());
            Ok((vec![Check::at_most("wick_series_vs_factored", d, tol::STRUCTURAL)], json!({"cutoff": cut, "residual": d})))
        }
        "commutators" => {
            let f = probe_vector(fam.v.m(), seed, 1);
            let g = probe_vector(fam.v.big_m(), seed, 2);
            let r = implementer::verify_commutators(&fam.h, &fam.source, &fam.target, &f, &g, inner)?;
            let checks = vec![
                Check::at_most("commutator_creation", r.creation, tol::COMMUTATOR),
                Check::at_most("commutator_annihilation", r.annihilation, tol::COMMUTATOR),
            ];
            Ok((checks, json!({"sector": n - 3, "residuals": r})))
        }
        "intertwiner" => {
            let f = mixed_vector(src, seed, 3);
            let k = n - 3;
            let r0 = implementer::verify_intertwiner(fam, &f, k, &[MultiIndex::empty()])?;
            let mut checks = vec![Check::at_most("intertwiner_psi0", r0, tol::COMMUTATOR)];
            let carrying: Vec<MultiIndex> = alphas.iter().filter(|a| !a.is_empty()).cloned().collect();
            let mut out = json!({"sector": k, "psi0": r0});
            if !carrying.is_empty() {
                let kp = psi_sector(n);
                let r = implementer::verify_intertwiner(fam, &f, kp, &carrying)?;
                checks.push(Check::at_most("intertwiner_psi_alpha", r, tol::TRUNCATION));
                out["psi_alpha"] = json!({"sector": kp, "residual": r});
            }
            Ok((checks, out))
        }
        "weyl" => {
            let f = real_vector(src, WEYL_NORM, seed, 4);
            let k = psi_sector(n);
            let r = implementer::verify_intertwiner_weyl(fam, &f, k, alphas)?;
            let vf = fam.v.apply(&f)?;
            let w = fock::weyl(&fam.target, &vf)?;
            let want = (-vf.k1_part().norm_squared() / 2.0).exp();
            let vac = (w.matrix()[(0, 0)] - linalg::real(want)).norm();
            let checks = vec![
                Check::at_most("weyl_intertwiner", r, tol::TRUNCATION),
                Check::at_most("weyl_vacuum_expectation", vac, tol::TRUNCATION),
            ];
            Ok((checks, json!({"sector": k, "intertwiner": r, "vacuum_expectation": vac})))
        }
        "cuntz" => {
            let mut list = vec![MultiIndex::empty()];
            list.extend(alphas.iter().filter(|a| !a.is_empty()).cloned());
            // Omega and a*_M Omega (the last one-particle state in graded-lex order).
            let probes = vec![fam.target.vacuum(), fam.target.basis_vector(fam.target.modes())];
            let f = real_vector(src, WEYL_NORM, seed, 5);
            let r = implementer::verify_cuntz(fam, &list, 1, &probes, Some(&f))?;
            let checks = vec![
                Check::at_most("cuntz_orthogonality", r.orthogonality, tol::TRUNCATION),
                Check::holds("parseval_monotone", r.parseval_monotone()),
                Check::holds("parseval_bounded", r.parseval_bounded(tol::TRUNCATION)),
            ];
            let labels: Vec<String> = list.iter().map(|a| a.to_string()).collect();
            Ok((checks, json!({"sector": 1, "alphas": labels, "report": r})))
        }
        "annihilation" => {
            let k = psi_sector(n);
            let r = implementer::verify_annihilation(fam, k)?;
            let checks = vec![
                Check::at_most("psi0_prime_creation", r.prime_creation, tol::STRUCTURAL),
                Check::at_most("psi0_prime_annihilation", r.prime_annihilation, tol::STRUCTURAL),
                Check::at_most("psi_annihilates_psi0", r.psi0, tol::TRUNCATION),
            ];
            Ok((checks, json!({"sector": k, "report": r})))
        }
        "composition" => {
            let k = psi_sector(n).min(n.saturating_sub(4));
            let r = implementer::verify_composition(&fam.v, n, k, alphas, inner)?;
            let checks = vec![
                Check::at_most("composition", r.comp, tol::PIPELINE),
                Check::at_most("composition_vacuum", r.psiu, tol::PIPELINE),
            ];
            Ok((checks, json!({"sector": k, "report": r})))
        }
        "gns" => {
            let basis = implementer::k1_kernel_basis(&fam.v);
            let usable: Vec<MultiIndex> = alphas.iter().filter(|a| a.max_entry() <= basis.len()).cloned().collect();
            let mut list = vec![MultiIndex::empty()];
            list.extend(usable.into_iter().filter(|a| !a.is_empty()));
            let fs = vec![real_vector(src, WEYL_NORM, seed, 6), real_vector(src, WEYL_NORM, seed, 7)];
            let r = implementer::verify_gns(&fam.v, n, &list, &fs)?;
            let checks = vec![
                Check::at_most("gns_diagonal", r.diagonal, tol::TRUNCATION),
                Check::at_most("gns_cross", r.cross, tol::TRUNCATION),
            ];
            Ok((checks, json!({"kernel_dimension": basis.len(), "report": r})))
        }
        "convergence" => {
            let cutoffs: Vec<usize> = [n / 2, 3 * n / 4, n].into_iter().filter(|&c| c >= 5).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
            if fam.n() == 0 || cutoffs.len() < 2 {
                return Ok((Vec::new(), json!({"skipped": "no isometries or cutoff too small"})));
            }
            let f = mixed_vector(src, seed, 8);
            let points = implementer::psi_convergence(&fam.v, &cutoffs, 2, &f, inner)?;
            let ann: Vec<f64> = points.iter().map(|p| p.annihilation).collect();
            let orth: Vec<f64> = points.iter().map(|p| p.orthogonality).collect();
            let checks = vec![
                Check::holds("psi_annihilation_nonincreasing", report::nonincreasing(&ann, tol::STRUCTURAL)),
                Check::holds("psi_orthogonality_nonincreasing", report::nonincreasing(&orth, tol::STRUCTURAL)),
            ];
            Ok((checks, json!({"sector": 2, "points": points})))
        }
        other => Err(Error::InvalidConfig(format!("unknown suite `{other}`"))),
    }
}

/// Protected sector for checks that involve the isometries `psi_j`.
fn psi_sector(cutoff: usize) -> usize {
    (cutoff / 4).max(1).min(cutoff.saturating_sub(3))
}

fn state(v: &BogoliubovOperator, config: &RunConfig) -> Result<Outcome> {
    let data = v.state_operators();
    let p = v.purity_equivalence();
    let threshold = config.tol.unwrap_or(tol::PIPELINE);
    let pure_s = p.idempotency <= threshold;
    let pure_c = p.commutator <= threshold;
    let src = v.source();
    let f = mixed_vector(src, config.seed, 9);
    let g = mixed_vector(src, config.seed, 10);
    let two_point = implementer::state_consistency(v, &f, &g, config.cutoff)?;
    let checks = vec![
        Check::holds("purity_equivalence", pure_s == pure_c),
        Check::at_most("two_point_function", two_point, tol::STRUCTURAL),
    ];
    let output = json!({
        "S": linalg::to_pairs(&data.s),
        "S_tilde": linalg::to_pairs(&data.s_tilde),
        "purity": p,
        "pure": pure_s && pure_c,
    });
    Ok((checks, output))
}

/// Canonical fixture operator.
pub fn fixture(name: FixtureName, seed: u64) -> Result<BogoliubovOperator> {
    match name {
        FixtureName::Identity => Ok(BogoliubovOperator::identity(1)),
        FixtureName::Squeeze => Ok(bogoliubov::squeeze_fixture()),
        FixtureName::Embed12 => Ok(bogoliubov::embedding_fixture()),
        FixtureName::Random => BogoliubovOperator::random(1, 2, 0.5, seed),
    }
}

pub fn emit_fixture(name: FixtureName, seed: u64) -> Result<String> {
    let v = fixture(name, seed)?;
    let mut s = serde_json::to_string_pretty(&v.to_json())?;
    s.push('\n');
    Ok(s)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match cli.command {
        CliCommand::EmitFixture(args) => match emit_fixture(args.name, args.seed) {
            Ok(text) => match write_output(args.output.as_deref(), &text) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        CliCommand::Validate(a) => dispatch(Command::Validate, &a),
        CliCommand::Decompose(a) => dispatch(Command::Decompose, &a),
        CliCommand::Implement(a) => dispatch(Command::Implement, &a),
        CliCommand::Verify(a) => dispatch(Command::Verify, &a),
        CliCommand::State(a) => dispatch(Command::State, &a),
    }
}

fn dispatch(command: Command, args: &RunArgs) -> i32 {
    let name = command_name(command);
    let raw_config = json!({
        "command": name,
        "cutoff": args.cutoff,
        "tol": args.tol,
        "alpha": args.alpha,
        "seed": args.seed,
        "suite": args.suite,
    });
    let input = fs::read_to_string(&args.input);
    let result = RunConfig::new(command, args).and_then(|config| {
        let text = input.as_ref().map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", args.input.display()))))?;
        run(&config, text)
    });
    let report = result.unwrap_or_else(|err| {
        let provenance = Provenance {
            input_sha256: input.as_ref().ok().map(|s| sha256_hex(s.as_bytes())),
            config: raw_config,
            version: env!("CARGO_PKG_VERSION"),
        };
        Report::from_error(name, &err, provenance)
    });
    if report.status == Status::Error {
        if let Some(e) = &report.error {
            eprintln!("error ({}): {}", e.kind, e.message);
        }
    }
    match write_output(args.output.as_deref(), &report.to_json_string()) {
        Ok(()) => report.exit_code(),
        Err(e) => {
            eprintln!("error: cannot write report: {e}");
            2
        }
    }
}
