//! The `qchain` command line.
//!
//! ```text
//! qchain verify    --inequality thm1 --seed 7 --dim 3 [--in FILE ...] [--out FILE]
//! qchain audit     --inequality two_channel_dpi --trials 100 --seed 0 [--out FILE]
//! qchain scan      --family appendixB [--n-copies 4] [--out FILE]
//! qchain quadcheck [--quad-nodes 400] [--quad-cutoff 12]
//! ```
//!
//! Exit status: 0 when every asserted check passed, 1 on an inequality
//! failure, 2 on bad input. Reports whose precondition failed (conditional
//! chain with `T > 1`) are printed but do not fail the run.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::counterexample::{default_eps_grid, default_p_values, default_theta_grid, region_scan, write_csv, DEFAULT_SCAN_N};
use crate::divergences::{ExtendedReal, ProbVec};
use crate::error::Error;
use crate::inequalities::{self, InequalityId, Pairing, VerdictReport};
use crate::linalg::real_diag;
use crate::partitions::{measured_chain_audit, StochasticMatrix};
use crate::quantum::io::ObjectFile;
use crate::quantum::{random_channel_with, random_density_with, random_povm_with, Channel, DensityMatrix, Povm};
use crate::recovery::{beta0, build_quadrature, QuadratureScheme, DEFAULT_QUAD_CUTOFF, DEFAULT_QUAD_NODES};
use crate::rng::{random_probability, random_unitary, trial_rng, SeededRng};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qchain",
    version,
    about = "Check chain rules for quantum relative entropy on concrete instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check one inequality on one instance and print its report.
    Verify(CommonArgs),
    /// Check one inequality on many seeded random instances.
    Audit(CommonArgs),
    /// Scan the counterexample family and write CSV.
    Scan(CommonArgs),
    /// Print the mass of the β₀ quadrature.
    Quadcheck(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    inequality: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Overrides the verifier's default tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    log_base: f64,
    #[arg(long, default_value_t = DEFAULT_QUAD_NODES)]
    quad_nodes: usize,
    #[arg(long, default_value_t = DEFAULT_QUAD_CUTOFF)]
    quad_cutoff: f64,
    /// JSON state, channel or POVM file; repeat for several.
    #[arg(long = "in")]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SCAN_N)]
    n_copies: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Verify,
    Audit,
    Scan,
    Quadcheck,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub inequality_id: Option<InequalityId>,
    pub seed: u64,
    pub dim: usize,
    pub trials: usize,
    pub tol: Option<f64>,
    pub log_base: f64,
    pub quad_nodes: usize,
    pub quad_cutoff: f64,
    pub input_paths: Vec<PathBuf>,
    pub out_path: Option<PathBuf>,
    pub family: Option<String>,
    pub n_copies: usize,
}

/// Why a run stopped before producing its verdicts.
#[derive(Debug)]
pub enum CliError {
    Input { path: Option<PathBuf>, message: String },
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Input { path: Some(p), message } => write!(f, "{}: {message}", p.display()),
            Self::Input { path: None, message } => write!(f, "{message}"),
            Self::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Input {
            path: None,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

fn input_error(message: impl Into<String>) -> CliError {
    CliError::Input {
        path: None,
        message: message.into(),
    }
}

impl RunConfig {
    fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (command, a) = match cli.command {
            Command::Verify(a) => (CommandKind::Verify, a),
            Command::Audit(a) => (CommandKind::Audit, a),
            Command::Scan(a) => (CommandKind::Scan, a),
            Command::Quadcheck(a) => (CommandKind::Quadcheck, a),
        };
        let inequality_id = a.inequality.as_deref().map(str::parse).transpose()?;
        if let Some(t) = a.tol {
            if !(t.is_finite() && t >= 0.0) {
                return Err(input_error(format!("--tol must be a nonnegative number, got {t}")));
            }
        }
        Ok(Self {
            command,
            inequality_id,
            seed: a.seed,
            dim: a.dim,
            trials: a.trials,
            tol: a.tol,
            log_base: a.log_base,
            quad_nodes: a.quad_nodes,
            quad_cutoff: a.quad_cutoff,
            input_paths: a.inputs,
            out_path: a.out,
            family: a.family,
            n_copies: a.n_copies,
        })
    }
}

/// Parses arguments, runs, and returns the exit status. Diagnostics go to `err`.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = write!(err, "{e}");
            if code == EXIT_OK {
                let _ = write!(stdout, "{e}");
            }
            return code;
        }
    };
    let result = RunConfig::from_cli(cli).and_then(|cfg| run(&cfg, stdout));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

/// Executes a resolved configuration. Output goes to `out_path` when set, else to `stdout`.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    crate::set_log_base(cfg.log_base)?;
    let (text, code) = match cfg.command {
        CommandKind::Verify => run_verify(cfg)?,
        CommandKind::Audit => run_audit(cfg)?,
        CommandKind::Scan => run_scan(cfg)?,
        CommandKind::Quadcheck => run_quadcheck(cfg)?,
    };
    match &cfg.out_path {
        Some(p) => fs::write(p, text.as_bytes())?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(code)
}

fn quadrature(cfg: &RunConfig) -> Result<QuadratureScheme, CliError> {
    Ok(build_quadrature(cfg.quad_nodes, cfg.quad_cutoff)?)
}

fn require_inequality(cfg: &RunConfig) -> Result<InequalityId, CliError> {
    cfg.inequality_id.ok_or_else(|| input_error("--inequality is required"))
}

/// Inputs for any verifier. Unset pieces are drawn from the trial's random stream.
#[derive(Debug, Clone)]
pub struct Instance {
    pub rho: DensityMatrix,
    pub sigma: DensityMatrix,
    pub gamma: DensityMatrix,
    pub omega: DensityMatrix,
    pub m: Channel,
    pub n: Channel,
    pub g: Povm,
    pub f: Povm,
}

/// Pieces read from `--in` files, in the order given.
#[derive(Debug, Clone, Default)]
pub struct LoadedInputs {
    pub states: Vec<DensityMatrix>,
    pub channels: Vec<Channel>,
    pub povms: Vec<Povm>,
}

pub fn load_inputs(paths: &[PathBuf]) -> Result<LoadedInputs, CliError> {
    let mut loaded = LoadedInputs::default();
    for path in paths {
        let with_path = |message: String| CliError::Input {
            path: Some(path.clone()),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| with_path(e.to_string()))?;
        let obj: ObjectFile = serde_json::from_str(&text).map_err(|e| with_path(format!("malformed JSON: {e}")))?;
        match obj {
            ObjectFile::State(s) => loaded.states.push(s.to_state().map_err(|e| with_path(e.to_string()))?),
            ObjectFile::Channel(ch) => loaded.channels.push(ch.to_channel().map_err(|e| with_path(e.to_string()))?),
            ObjectFile::Povm(g) => loaded.povms.push(g.to_povm().map_err(|e| with_path(e.to_string()))?),
        }
    }
    Ok(loaded)
}

fn full_rank_state(rng: &mut SeededRng, d: usize) -> Result<DensityMatrix, CliError> {
    Ok(random_density_with(rng, d, d)?)
}

impl Instance {
    /// States fill `ρ, σ, γ, ω`, channels fill `M, N`, POVMs fill `G, F`, in that order.
    /// Random channels get `d` Kraus operators so pure inputs map to full-rank outputs.
    pub fn build(rng: &mut SeededRng, dim: usize, loaded: &LoadedInputs) -> Result<Self, CliError> {
        if loaded.states.len() > 4 || loaded.channels.len() > 2 || loaded.povms.len() > 2 {
            return Err(input_error("at most 4 states, 2 channels and 2 POVMs can be given"));
        }
        let d = loaded.states.first().map_or(dim, |s| s.dim());
        if d == 0 {
            return Err(input_error("--dim must be positive"));
        }
        let mut states = loaded.states.clone().into_iter();
        let mut channels = loaded.channels.clone().into_iter();
        let mut povms = loaded.povms.clone().into_iter();
        let rho = match states.next() {
            Some(s) => s,
            None => full_rank_state(rng, d)?,
        };
        let sigma = match states.next() {
            Some(s) => s,
            None => full_rank_state(rng, d)?,
        };
        let m = match channels.next() {
            Some(ch) => ch,
            None => random_channel_with(rng, d, d, d)?,
        };
        let n = match channels.next() {
            Some(ch) => ch,
            None => random_channel_with(rng, d, m.d_out(), d)?,
        };
        let d_out = m.d_out();
        let gamma = match states.next() {
            Some(s) => s,
            None => full_rank_state(rng, d_out)?,
        };
        let omega = match states.next() {
            Some(s) => s,
            None => full_rank_state(rng, d_out)?,
        };
        let g = match povms.next() {
            Some(g) => g,
            None => random_povm_with(rng, d, d)?,
        };
        let f = match povms.next() {
            Some(f) => f,
            None => random_povm_with(rng, d_out, d_out)?,
        };
        let inst = Self {
            rho,
            sigma,
            gamma,
            omega,
            m,
            n,
            g,
            f,
        };
        inst.check_dims()?;
        Ok(inst)
    }

    fn check_dims(&self) -> Result<(), CliError> {
        let d = self.rho.dim();
        let d_out = self.m.d_out();
        let ok = self.sigma.dim() == d
            && self.m.d_in() == d
            && self.n.d_in() == d
            && self.n.d_out() == d_out
            && self.gamma.dim() == d_out
            && self.omega.dim() == d_out
            && self.g.dim() == d
            && self.f.dim() == d_out;
        if ok {
            Ok(())
        } else {
            Err(input_error(format!(
                "dimension mismatch between inputs (state dim {d}, channel {}->{})",
                self.m.d_in(),
                d_out
            )))
        }
    }
}

fn random_stochastic(rng: &mut SeededRng, rows: usize, cols: usize) -> Result<StochasticMatrix, CliError> {
    Ok(StochasticMatrix::new(
        (0..cols).map(|_| random_probability(rng, rows)).collect(),
    )?)
}

fn commuting_pair(rng: &mut SeededRng, d: usize) -> Result<(DensityMatrix, DensityMatrix), CliError> {
    let u = random_unitary(rng, d);
    let p = random_probability(rng, d);
    let q = random_probability(rng, d);
    let rho = DensityMatrix::from_matrix(&u * real_diag(&p) * u.adjoint())?;
    let sigma = DensityMatrix::from_matrix(&u * real_diag(&q) * u.adjoint())?;
    Ok((rho, sigma))
}

/// Runs one verifier on trial `trial` of `seed`.
pub fn run_trial(
    id: InequalityId,
    seed: u64,
    trial: u64,
    dim: usize,
    loaded: &LoadedInputs,
    q: &QuadratureScheme,
) -> Result<VerdictReport, CliError> {
    let mut rng = trial_rng(seed, trial);
    let inst = Instance::build(&mut rng, dim, loaded)?;
    let d = inst.rho.dim();
    let report = match id {
        InequalityId::PartitionChain => {
            inequalities::verify_partition_chain(&inst.rho, &inst.sigma, &inst.m, &inst.n, &inst.g, false)?
        }
        InequalityId::PartitionChainStrengthened => {
            inequalities::verify_partition_chain(&inst.rho, &inst.sigma, &inst.m, &inst.n, &inst.g, true)?
        }
        InequalityId::Commuting => {
            let (rho, sigma) = if loaded.states.len() >= 2 {
                (inst.rho.clone(), inst.sigma.clone())
            } else {
                commuting_pair(&mut rng, d)?
            };
            inequalities::verify_commuting(&rho, &sigma, &inst.m, &inst.n)?
        }
        InequalityId::Ensembles => {
            let p = ProbVec::new(random_probability(&mut rng, d))?;
            let qv = ProbVec::new(random_probability(&mut rng, d))?;
            let taus = (0..d).map(|_| full_rank_state(&mut rng, d)).collect::<Result<Vec<_>, _>>()?;
            let mus = (0..d).map(|_| full_rank_state(&mut rng, d)).collect::<Result<Vec<_>, _>>()?;
            inequalities::verify_ensembles(&p, &qv, &taus, &mus)?
        }
        InequalityId::DifBasis => {
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(&mut rng);
            inequalities::verify_difbasis(&inst.rho, &inst.sigma, &inst.m, &inst.n, &Pairing::new(perm)?)?
        }
        InequalityId::GeneralEntropy => {
            inequalities::verify_general_entropy(&inst.rho, &inst.sigma, inst.gamma.psd(), inst.omega.psd(), &inst.m, q)?
        }
        InequalityId::TwoChannelDpi => inequalities::verify_two_channel_dpi(&inst.rho, &inst.sigma, &inst.m, &inst.n, q)?,
        InequalityId::ConditionalChain => inequalities::verify_conditional_chain(&inst.rho, &inst.sigma, &inst.m, &inst.n, q)?,
        InequalityId::ClassicalChain => {
            let outcomes = d + rng.random_range(0..2usize);
            let p = ProbVec::new(random_probability(&mut rng, d))?;
            let qv = ProbVec::new(random_probability(&mut rng, d))?;
            let m = random_stochastic(&mut rng, outcomes, d)?;
            let n = random_stochastic(&mut rng, outcomes, d)?;
            inequalities::classical_chain(&p, &qv, &m, &n)?
        }
        InequalityId::MeasuredChain => measured_chain_audit(&inst.rho, &inst.sigma, &inst.m, &inst.n, &inst.g, &inst.f)?,
        InequalityId::UniversalBound => inequalities::verify_universal_bound(&inst.rho, &inst.sigma, &inst.m, q)?,
    };
    Ok(report)
}

fn apply_tol(report: VerdictReport, tol: Option<f64>) -> VerdictReport {
    match tol {
        Some(t) => report.with_tol(t),
        None => report,
    }
}

fn exit_code(reports: &[VerdictReport]) -> i32 {
    if reports.iter().all(|r| r.pass || !r.pass_is_asserted()) {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

fn run_verify(cfg: &RunConfig) -> Result<(String, i32), CliError> {
    let id = require_inequality(cfg)?;
    let loaded = load_inputs(&cfg.input_paths)?;
    let q = quadrature(cfg)?;
    let report = apply_tol(run_trial(id, cfg.seed, 0, cfg.dim, &loaded, &q)?, cfg.tol);
    let code = exit_code(std::slice::from_ref(&report));
    Ok((format!("{}\n", report.to_json()), code))
}

#[derive(Debug, Serialize)]
struct AuditSummary {
    total: usize,
    passed: usize,
    min_slack: ExtendedReal,
}

fn run_audit(cfg: &RunConfig) -> Result<(String, i32), CliError> {
    let id = require_inequality(cfg)?;
    let loaded = load_inputs(&cfg.input_paths)?;
    let q = quadrature(cfg)?;
    let reports = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|k| run_trial(id, cfg.seed, k, cfg.dim, &loaded, &q).map(|r| apply_tol(r, cfg.tol)))
        .collect::<Result<Vec<_>, _>>()?;
    let min_slack = reports
        .iter()
        .filter(|r| r.pass_is_asserted())
        .map(|r| r.slack)
        .fold(ExtendedReal::PosInfinity, |a, s| if s < a { s } else { a });
    let summary = AuditSummary {
        total: reports.len(),
        passed: reports.iter().filter(|r| r.pass).count(),
        min_slack,
    };
    let text = format!(
        "{}\n{}\n",
        serde_json::to_string(&reports).expect("reports serialize"),
        serde_json::to_string(&summary).expect("summary serializes")
    );
    Ok((text, exit_code(&reports)))
}

fn run_scan(cfg: &RunConfig) -> Result<(String, i32), CliError> {
    let family = cfg.family.as_deref().unwrap_or("appendixB");
    let key = family.to_ascii_lowercase().replace(['_', '-'], "");
    if key != "appendixb" {
        return Err(input_error(format!("unknown family '{family}', expected appendixB")));
    }
    let rows = region_scan(&default_p_values(), &default_theta_grid(), &default_eps_grid(), cfg.n_copies)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    Ok((String::from_utf8(buf).expect("CSV is UTF-8"), EXIT_OK))
}

#[derive(Debug, Serialize)]
struct QuadCheck {
    nodes: usize,
    cutoff: f64,
    mass: f64,
    deviation: f64,
    tail_mass: f64,
    beta0_at_zero: f64,
}

/// Mass of `β₀` on `[−T, T]` is `tanh(πT/2)`.
pub fn beta0_mass_within(cutoff: f64) -> f64 {
    (std::f64::consts::PI * cutoff / 2.0).tanh()
}

fn run_quadcheck(cfg: &RunConfig) -> Result<(String, i32), CliError> {
    let q = quadrature(cfg)?;
    let mass = q.mass();
    let deviation = (mass - 1.0).abs();
    let check = QuadCheck {
        nodes: q.len(),
        cutoff: q.cutoff,
        mass,
        deviation,
        tail_mass: 1.0 - beta0_mass_within(q.cutoff),
        beta0_at_zero: beta0(0.0),
    };
    let code = if deviation < 1e-8 { EXIT_OK } else { EXIT_FAILURE };
    Ok((format!("{}\n", serde_json::to_string(&check).expect("serializes")), code))
}

/// Writes the JSON file form of a state.
pub fn write_state_file(path: &Path, rho: &DensityMatrix) -> std::io::Result<()> {
    let text = serde_json::to_string(&crate::quantum::io::StateFile::from_state(rho)).expect("serializes");
    fs::write(path, text)
}

/// Writes the JSON file form of a channel.
pub fn write_channel_file(path: &Path, ch: &Channel) -> std::io::Result<()> {
    let text = serde_json::to_string(&crate::quantum::io::ChannelFile::from_channel(ch)).expect("serializes");
    fs::write(path, text)
}
