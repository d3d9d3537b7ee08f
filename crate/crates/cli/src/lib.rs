//! Command-line driver: argument types, command dispatch, and output writing.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tripartite::analytic::{exact_constants, BlochPoint};
use tripartite::ancilla::{bound_mixed_state, default_ancilla_dims, density_from_json_str, purify};
use tripartite::format::{format_real, matrix_to_rows, round_sig, vector_to_pairs};
use tripartite::measurement::{decompose, sweep, write_sweep_csv, MeasurementBasis};
use tripartite::optimality::{check_eigenbasis_condition, check_optimality, DEFAULT_TOLERANCE};
use tripartite::optimizer::{optimize, OptimizeConfig, OptimizeResult, Target};
use tripartite::states::{Dims, TripartiteState};

/// Exit status for invalid input or arguments.
pub const EXIT_USAGE: u8 = 2;
/// Exit status when an optimization stops before meeting its tolerance.
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "tripartite", version, about = "Measurement-induced entanglement in tripartite pure states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Measure C in a basis and report the induced ensemble on AB.
    Decompose {
        #[command(flatten)]
        state: StateArg,
        #[command(flatten)]
        basis: BasisArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Average entropy over a grid of Bloch bases (qubit C only).
    Sweep {
        #[command(flatten)]
        state: StateArg,
        #[arg(long, default_value_t = 181)]
        theta_steps: usize,
        #[arg(long, default_value_t = 1)]
        phi_steps: usize,
        #[command(flatten)]
        output: OutputArg,
    },
    /// First-order optimality check of a basis.
    Check {
        #[command(flatten)]
        state: StateArg,
        #[command(flatten)]
        basis: BasisArg,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE, allow_negative_numbers = true)]
        tol: f64,
        /// Check the reduced condition at the eigenbasis of ρ^C instead (ignores --basis).
        #[arg(long)]
        eigen_condition: bool,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Minimize (formation) or maximize (assistance) the average entropy over bases.
    Optimize {
        #[command(flatten)]
        state: StateArg,
        #[arg(long, value_enum, default_value_t = TargetArg::Min)]
        target: TargetArg,
        #[command(flatten)]
        search: SearchArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Formation and assistance bounds of a bipartite mixed state per ancilla size.
    Bound {
        /// Density matrix JSON file: {"dims":[dA,dB],"matrix":[[[re,im],...],...]}.
        #[arg(long)]
        density: PathBuf,
        /// Comma-separated ancilla dimensions; defaults to 1, 2, 4, ... up to the rank.
        #[arg(long, value_delimiter = ',')]
        ancilla_dims: Vec<usize>,
        #[command(flatten)]
        search: SearchArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Print the exact optimal values for the W and GHZ states.
    Constants {
        #[command(flatten)]
        output: OutputArg,
    },
}

#[derive(Args, Debug)]
pub struct StateArg {
    /// w, ghz, product, or a state JSON file.
    #[arg(long, default_value = "w")]
    pub state: String,
}

#[derive(Args, Debug)]
pub struct BasisArg {
    /// computational, eigen, bloch, or a basis JSON file.
    #[arg(long, default_value = "computational")]
    pub basis: String,
    /// Polar angle of a Bloch basis.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Azimuth of a Bloch basis.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    /// Read --theta and --phi in degrees.
    #[arg(long)]
    pub degrees: bool,
}

#[derive(Args, Debug)]
pub struct SearchArg {
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8, allow_negative_numbers = true)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct OutputArg {
    /// Write here (atomically) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Min,
    Max,
}

/// Runs one command. Returns the exit status on success paths (0, or 3 when
/// an optimization did not converge but still produced output).
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Decompose { state, basis, output } => {
            let s = load_state(&state.state)?;
            let b = load_basis(&basis, &s)?;
            let dec = decompose(&s, &b)?;
            let text = match output.format {
                Format::Json => {
                    let branches: Vec<Value> = dec
                        .branches
                        .iter()
                        .map(|br| {
                            json!({
                                "index": br.index,
                                "probability": round_sig(br.probability),
                                "entropy": round_sig(br.entropy),
                                "state": vector_to_pairs(&br.state),
                            })
                        })
                        .collect();
                    json_text(&json!({ "avg_entropy": round_sig(dec.avg_entropy), "branches": branches }))
                }
                Format::Csv => {
                    let mut out = String::from("index,probability,entropy_bits\n");
                    for br in &dec.branches {
                        writeln!(out, "{},{},{}", br.index, format_real(br.probability), format_real(br.entropy))?;
                    }
                    out
                }
            };
            emit(&output, &text)?;
            Ok(0)
        }
        Command::Sweep { state, theta_steps, phi_steps, output } => {
            if theta_steps == 0 {
                bail!("--theta-steps must be at least 1");
            }
            if phi_steps == 0 {
                bail!("--phi-steps must be at least 1");
            }
            let s = load_state(&state.state)?;
            let points = sweep(&s, theta_steps, phi_steps)?;
            let text = match output.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_sweep_csv(&points, &mut buf)?;
                    String::from_utf8(buf)?
                }
                Format::Json => {
                    let rows: Vec<Value> = points
                        .iter()
                        .map(|p| json!({ "theta": round_sig(p.theta), "phi": round_sig(p.phi), "avg_entropy": round_sig(p.avg_entropy) }))
                        .collect();
                    json_text(&Value::Array(rows))
                }
            };
            emit(&output, &text)?;
            Ok(0)
        }
        Command::Check { state, basis, tol, eigen_condition, output } => {
            if !(tol > 0.0) {
                bail!("--tol must be positive");
            }
            json_only(&output)?;
            let s = load_state(&state.state)?;
            let report = if eigen_condition {
                check_eigenbasis_condition(&s, tol)?
            } else {
                check_optimality(&s, &load_basis(&basis, &s)?, tol)?
            };
            emit(&output, &json_text(&report.to_json()))?;
            Ok(0)
        }
        Command::Optimize { state, target, search, output } => {
            json_only(&output)?;
            let config = search_config(&search)?;
            let s = load_state(&state.state)?;
            let target = match target {
                TargetArg::Min => Target::Min,
                TargetArg::Max => Target::Max,
            };
            let r = optimize(&s, target, &config)?;
            emit(&output, &json_text(&optimize_json(&r)))?;
            Ok(if r.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Bound { density, ancilla_dims, search, output } => {
            let config = search_config(&search)?;
            if ancilla_dims.contains(&0) {
                bail!("--ancilla-dims entries must be at least 1");
            }
            let text = read_file(&density)?;
            let (rho, a, b) = density_from_json_str(&text).with_context(|| format!("reading {}", density.display()))?;
            let dims = if ancilla_dims.is_empty() {
                default_ancilla_dims(purify(&rho, a, b)?.dims().c)
            } else {
                ancilla_dims
            };
            let rows = bound_mixed_state(&rho, a, b, &dims, &config)?;
            let text = match output.format {
                Format::Json => {
                    let rows: Vec<Value> = rows
                        .iter()
                        .map(|r| {
                            json!({
                                "ancilla_dim": r.ancilla_dim,
                                "ef_bound": round_sig(r.ef_bound),
                                "ea_bound": round_sig(r.ea_bound),
                                "converged": r.converged,
                            })
                        })
                        .collect();
                    json_text(&Value::Array(rows))
                }
                Format::Csv => {
                    let mut out = String::from("ancilla_dim,ef_bound_bits,ea_bound_bits\n");
                    for r in &rows {
                        writeln!(out, "{},{},{}", r.ancilla_dim, format_real(r.ef_bound), format_real(r.ea_bound))?;
                    }
                    out
                }
            };
            emit(&output, &text)?;
            Ok(if rows.iter().all(|r| r.converged) { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Constants { output } => {
            json_only(&output)?;
            let k = exact_constants();
            let v = json!({
                "w_ea": round_sig(k.w_ea),
                "w_ef": round_sig(k.w_ef),
                "ghz_ef": round_sig(k.ghz_ef),
                "ghz_ea": round_sig(k.ghz_ea),
            });
            emit(&output, &json_text(&v))?;
            Ok(0)
        }
    }
}

/// Exit status for an error returned by [`run`].
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    let not_converged = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<tripartite::Error>(), Some(tripartite::Error::NoConvergence { .. })));
    if not_converged {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_USAGE
    }
}

fn json_only(output: &OutputArg) -> Result<()> {
    if output.format != Format::Json {
        bail!("--format csv is only available for decompose, sweep, and bound");
    }
    Ok(())
}

fn search_config(search: &SearchArg) -> Result<OptimizeConfig> {
    if search.starts == 0 {
        bail!("--starts must be at least 1");
    }
    if search.max_iter == 0 {
        bail!("--max-iter must be at least 1");
    }
    if !(search.tol > 0.0) {
        bail!("--tol must be positive");
    }
    Ok(OptimizeConfig { starts: search.starts, max_iter: search.max_iter, tol: search.tol, seed: search.seed })
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| anyhow!("cannot read {}: {e}", path.display()))
}

pub fn load_state(name: &str) -> Result<TripartiteState> {
    match name {
        "w" => Ok(TripartiteState::w()),
        "ghz" => Ok(TripartiteState::ghz()),
        "product" => Ok(TripartiteState::product(Dims::qubits())?),
        path => {
            let text = read_file(Path::new(path)).context("--state expects w, ghz, product, or a JSON file")?;
            TripartiteState::from_json_str(&text).with_context(|| format!("reading state from {path}"))
        }
    }
}

pub fn load_basis(arg: &BasisArg, state: &TripartiteState) -> Result<MeasurementBasis> {
    match arg.basis.as_str() {
        "computational" => Ok(MeasurementBasis::computational(state.dims().c)),
        "eigen" => Ok(MeasurementBasis::eigenbasis(state)?),
        "bloch" => {
            let scale = if arg.degrees { PI / 180.0 } else { 1.0 };
            let (theta, phi) = (arg.theta * scale, arg.phi * scale);
            if !(0.0..=PI).contains(&theta) {
                bail!(format!("--theta {} is outside [0, π]", arg.theta));
            }
            let point = BlochPoint::new(theta, phi).map_err(|_| anyhow!("--phi {} is outside [0, 2π)", arg.phi))?;
            if state.dims().c != 2 {
                bail!(format!("--basis bloch needs a qubit C, the state has dimension {}", state.dims().c));
            }
            Ok(MeasurementBasis::bloch(point.theta(), point.phi()))
        }
        path => {
            let text = read_file(Path::new(path)).context("--basis expects computational, eigen, bloch, or a JSON file")?;
            MeasurementBasis::from_json_str(&text).with_context(|| format!("reading basis from {path}"))
        }
    }
}

fn optimize_json(r: &OptimizeResult) -> Value {
    json!({
        "target": r.target,
        "value": round_sig(r.value),
        "converged": r.converged,
        "iterations": r.iterations,
        "residual": round_sig(r.residual),
        "classification": r.classification,
        "starts": r.starts,
        "per_start_values": r.per_start_values.iter().map(|&v| round_sig(v)).collect::<Vec<_>>(),
        "basis": { "matrix": matrix_to_rows(r.basis.matrix()) },
    })
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

/// Writes to `--out` through a temporary file in the same directory, or to stdout.
fn emit(output: &OutputArg, text: &str) -> Result<()> {
    let Some(path) = &output.out else {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        return Ok(stdout.flush()?);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| anyhow!("cannot write {}: {e}", path.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| anyhow!("cannot write {}: {}", path.display(), e.error))?;
    Ok(())
}
