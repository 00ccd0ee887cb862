//! Command-line front end for `qbcast-core`.
//!
//! Exit codes: 0 success, 2 parse error, 3 invariant violation, 4 I/O error,
//! 5 solver non-convergence.

pub mod channel_file;
pub mod curve;
pub mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbcast_core::bounds::{assessment_report, FloorConfig};
use qbcast_core::extendibility::{
    is_entanglement_breaking, is_ppt, max_broadcast_number, test_k_extendible, EbVerdict, ExtendibilityCertificate, ExtensionProblem, HierarchyLevel,
    SolverConfig, Verdict,
};
use qbcast_core::metrics::{avg_gate_distance, avg_gate_fidelity, min_gate_fidelity, AverageMethod, GateReport, MinimizeMethod, DEFAULT_SAMPLES, DEFAULT_SEED};
use serde_json::json;

use crate::channel_file::{load, matrix_to_json, parse_fraction, LoadedChannel};
use crate::curve::{CurveRow, ANCHORS};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qbcast", version, about = "Gate fidelities, broadcasting hierarchy and fidelity floors of quantum channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Choi matrix, its spectrum and the PPT / entanglement-breaking verdicts.
    Choi {
        channel: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Average and worst-case gate fidelity and average trace distance between two channels.
    Fidelity {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        avg: AverageArgs,
        /// Also write the figures as a one-row CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Test k-extendibility of the channel's Choi state.
    Extend {
        channel: PathBuf,
        /// Number of output parties to test.
        #[arg(long, conflicts_with = "kmax")]
        k: Option<usize>,
        /// Find the largest extendible k up to this bound.
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Fidelity floor of a channel against a worst-case noise model, and how a realization compares.
    Floor {
        channel: PathBuf,
        noise: PathBuf,
        /// Realized channel to assess; defaults to the noise model itself.
        #[arg(long)]
        realized: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        kmax: usize,
        #[arg(long)]
        json: bool,
    },
    /// Fidelity and trace distance of xz_flip(p) against xz_flip_depolarized(p, r) over r in [0, 1].
    #[command(visible_alias = "fig1")]
    Curve {
        /// Comma-separated p values; fractions like 1/3 are accepted.
        #[arg(long, default_value = "0,1/3,2/3")]
        p_list: String,
        #[arg(long, default_value_t = 101)]
        r_steps: usize,
        #[command(flatten)]
        avg: AverageArgs,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    #[value(alias = "quadrature")]
    Quad,
    #[value(alias = "monte-carlo")]
    Mc,
}

#[derive(Debug, Clone, Args)]
pub struct AverageArgs {
    #[arg(long, value_enum, default_value_t = Method::Quad)]
    pub method: Method,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl AverageArgs {
    pub fn method(&self) -> AverageMethod {
        match self.method {
            Method::Quad => AverageMethod::quadrature(),
            Method::Mc => AverageMethod::MonteCarlo { samples: self.samples, seed: self.seed },
        }
    }
}

/// Parse `args` and run the command, writing to `out` and `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "qbcast: {e}");
            e.exit_code()
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Choi { channel, json } => cmd_choi(&load(channel)?, *json, out),
        Command::Fidelity { a, b, avg, out: csv, json } => cmd_fidelity(&load(a)?, &load(b)?, &avg.method(), csv.as_deref(), *json, out),
        Command::Extend { channel, k, kmax, json } => cmd_extend(&load(channel)?, *k, *kmax, *json, out),
        Command::Floor { channel, noise, realized, kmax, json } => {
            let e = load(channel)?;
            let noise = load(noise)?;
            let realized = match realized {
                Some(path) => load(path)?,
                None => noise.clone(),
            };
            cmd_floor(&e, &realized, &noise, *kmax, *json, out)
        }
        Command::Curve { p_list, r_steps, avg, out: path } => {
            let p_list = p_list.split(',').map(parse_fraction).collect::<Result<Vec<_>, _>>()?;
            cmd_curve(&p_list, *r_steps, &avg.method(), path.as_deref(), out)
        }
    }
}

/// Fixed-point text with negative zero suppressed.
fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn eb_text(eb: &EbVerdict) -> &'static str {
    match (eb.entanglement_breaking, eb.exact) {
        (true, true) => "yes",
        (false, true) => "no",
        (true, false) => "PPT only (separability not decided at this dimension)",
        (false, false) => "no",
    }
}

pub fn cmd_choi(ch: &LoadedChannel, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let choi = ch.channel.to_choi();
    let mut eigenvalues = choi.state().eigenvalues();
    eigenvalues.reverse();
    let ppt = is_ppt(choi.state())?;
    let eb = is_entanglement_breaking(&ch.channel)?;
    if json {
        let doc = json!({
            "name": ch.name,
            "d_in": choi.d_a(),
            "d_out": choi.d_b(),
            "choi": matrix_to_json(choi.matrix()),
            "eigenvalues": eigenvalues,
            "ppt": ppt.ppt,
            "min_pt_eigenvalue": ppt.min_eigenvalue,
            "entanglement_breaking": eb.entanglement_breaking,
            "eb_exact": eb.exact,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?).map_err(io_err)?;
        return Ok(());
    }
    let m = choi.matrix();
    writeln!(out, "channel: {} (d_in = {}, d_out = {})", ch.name, choi.d_a(), choi.d_b()).map_err(io_err)?;
    for (label, part) in [("real part", 0), ("imaginary part", 1)] {
        writeln!(out, "choi matrix, {label}:").map_err(io_err)?;
        for r in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:>10}", fixed(if part == 0 { m[(r, c)].re } else { m[(r, c)].im }, 6))).collect();
            writeln!(out, "  {}", row.join(" ")).map_err(io_err)?;
        }
    }
    let eig: Vec<String> = eigenvalues.iter().map(|&v| fixed(v, 9)).collect();
    writeln!(out, "eigenvalues: {}", eig.join(" ")).map_err(io_err)?;
    writeln!(out, "ppt: {} (min partial-transpose eigenvalue {})", if ppt.ppt { "yes" } else { "no" }, fixed(ppt.min_eigenvalue, 9)).map_err(io_err)?;
    writeln!(out, "entanglement breaking: {}", eb_text(&eb)).map_err(io_err)?;
    Ok(())
}

fn estimator_text(report: &GateReport) -> String {
    use qbcast_core::metrics::Estimator;
    match report.estimator {
        Estimator::MonteCarlo { samples, seed } => format!("monte carlo, {samples} samples, seed {seed}"),
        Estimator::Quadrature { polar, azimuthal } => format!("quadrature {polar}x{azimuthal}"),
        Estimator::GridMin { polar, azimuthal, refinement } => format!("grid {polar}x{azimuthal}, {refinement} refinement rounds"),
        Estimator::MultiStart { starts, rounds, seed } => format!("{starts} starts, {rounds} rounds, seed {seed}"),
    }
}

fn with_error(report: &GateReport) -> String {
    match report.std_error {
        Some(se) => format!("{} ± {}", fixed(report.value, 9), fixed(se, 9)),
        None => fixed(report.value, 9),
    }
}

pub fn cmd_fidelity(a: &LoadedChannel, b: &LoadedChannel, method: &AverageMethod, csv_out: Option<&Path>, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let avg = avg_gate_fidelity(&a.channel, &b.channel, method)?;
    let dist = avg_gate_distance(&a.channel, &b.channel, method)?;
    let worst = min_gate_fidelity(&a.channel, &b.channel, &MinimizeMethod::for_dim(a.channel.d_in()))?;
    if let Some(path) = csv_out {
        let fmt = |x: f64| curve::format_significant(x, curve::SIGNIFICANT_DIGITS);
        let mut text = String::from("avg_fidelity,std_error,min_fidelity,avg_trace_distance\n");
        text.push_str(&format!("{},{},{},{}\n", fmt(avg.value), avg.std_error.map(fmt).unwrap_or_default(), fmt(worst.value), fmt(dist.value)));
        write_atomic(path, text.as_bytes())?;
    }
    if json {
        let doc = json!({
            "a": a.name,
            "b": b.name,
            "avg_fidelity": avg.value,
            "avg_fidelity_std_error": avg.std_error,
            "min_fidelity": worst.value,
            "avg_trace_distance": dist.value,
            "avg_trace_distance_std_error": dist.std_error,
            "estimator": estimator_text(&avg),
            "min_estimator": estimator_text(&worst),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?).map_err(io_err)?;
        return Ok(());
    }
    writeln!(out, "channels: {} vs {}", a.name, b.name).map_err(io_err)?;
    writeln!(out, "average gate fidelity:  {}  ({})", with_error(&avg), estimator_text(&avg)).map_err(io_err)?;
    writeln!(out, "minimum gate fidelity:  {}  ({})", with_error(&worst), estimator_text(&worst)).map_err(io_err)?;
    writeln!(out, "average trace distance: {}  ({})", with_error(&dist), estimator_text(&dist)).map_err(io_err)?;
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Extendible => "extendible",
        Verdict::NotExtendible => "not_extendible",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn certificate_json(c: &ExtendibilityCertificate) -> serde_json::Value {
    json!({ "k": c.k, "verdict": verdict_name(c.verdict), "residual": c.residual, "iterations": c.iterations })
}

fn level_classification(level: HierarchyLevel) -> String {
    match level {
        HierarchyLevel::Infinite => "entanglement-breaking".into(),
        HierarchyLevel::Finite(1) => "private".into(),
        HierarchyLevel::Finite(k) => format!("broadcasts to exactly {k} parties"),
        HierarchyLevel::AtLeast(k) => format!("broadcasts to at least {k} parties"),
        HierarchyLevel::Between { lo, hi } => format!("broadcasts to between {lo} and {hi} parties (solver inconclusive)"),
    }
}

pub fn cmd_extend(ch: &LoadedChannel, k: Option<usize>, kmax: Option<usize>, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let config = SolverConfig::default();
    let eb = is_entanglement_breaking(&ch.channel)?;
    let (certificates, level, classification) = match kmax {
        Some(kmax) => {
            let result = max_broadcast_number(&ch.channel, kmax, &config)?;
            (result.certificates, Some(result.level), level_classification(result.level))
        }
        None => {
            let k = k.unwrap_or(2);
            let cert = test_k_extendible(&ExtensionProblem::for_choi(&ch.channel.to_choi(), k)?, &config)?;
            let classification = if eb.entanglement_breaking && eb.exact {
                "entanglement-breaking".to_string()
            } else {
                match (cert.verdict, k) {
                    (Verdict::NotExtendible, 2) => "private".into(),
                    (Verdict::NotExtendible, _) => format!("not {k}-extendible"),
                    (Verdict::Extendible, _) => format!("broadcasts to at least {k} parties"),
                    (Verdict::Inconclusive, _) => "undetermined".into(),
                }
            };
            (vec![cert], None, classification)
        }
    };
    if json {
        let doc = json!({
            "channel": ch.name,
            "certificates": certificates.iter().map(certificate_json).collect::<Vec<_>>(),
            "k_level": level.map(|l| l.to_string()),
            "classification": classification,
            "entanglement_breaking": eb.entanglement_breaking,
            "eb_exact": eb.exact,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?).map_err(io_err)?;
        return Ok(());
    }
    writeln!(out, "channel: {}", ch.name).map_err(io_err)?;
    for c in &certificates {
        writeln!(out, "k = {}: {} (residual {:.3e}, {} iterations)", c.k, verdict_name(c.verdict), c.residual, c.iterations).map_err(io_err)?;
    }
    if let Some(level) = level {
        writeln!(out, "max broadcast number: {level}").map_err(io_err)?;
    }
    writeln!(out, "classification: {classification}").map_err(io_err)?;
    Ok(())
}

pub fn cmd_floor(e: &LoadedChannel, realized: &LoadedChannel, noise: &LoadedChannel, kmax: usize, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let config = FloorConfig { k_max: kmax, ..FloorConfig::for_dim(e.channel.d_in()) };
    let report = assessment_report(&e.channel, &realized.channel, &noise.channel, &config)?;
    let floor = &report.floor;
    if json {
        let doc = json!({
            "avg_fidelity": report.avg_fidelity,
            "min_fidelity": report.min_fidelity,
            "floor": floor.floor,
            "k_level": floor.k_level.to_string(),
            "verdict": report.verdict,
            "margin": report.margin,
            "delta_eb": floor.delta_eb,
            "noise_gap": floor.noise_gap,
            "noise_fidelity": report.noise_fidelity,
            "vacuous": floor.is_vacuous(),
            "high_fidelity_uninformative": report.high_fidelity_uninformative,
            "exact": floor.eb.exact,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?).map_err(io_err)?;
        return Ok(());
    }
    let lines = [
        format!("channel: {}", e.name),
        format!("noise model: {}", noise.name),
        format!("realized: {}", realized.name),
        format!("hierarchy level: {}", floor.k_level),
        format!("distance to EB set (d * D): {}", fixed(floor.delta_eb, 6)),
        format!("noise gap (d * avg D): {}", fixed(floor.noise_gap, 6)),
        format!("floor: {}", fixed(floor.floor, 6)),
        format!("average fidelity: {}", fixed(report.avg_fidelity, 6)),
        format!("minimum fidelity: {}", fixed(report.min_fidelity, 6)),
        format!("margin above floor: {}", fixed(report.margin, 6)),
        format!("verdict: {}", report.verdict),
    ];
    for line in lines {
        writeln!(out, "{line}").map_err(io_err)?;
    }
    Ok(())
}

pub fn cmd_curve(p_list: &[f64], r_steps: usize, method: &AverageMethod, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let rows = curve::compute(p_list, r_steps, method)?;
    match path {
        Some(path) => {
            curve::write_csv_atomic(&rows, path)?;
            write_anchors(&rows, out)?;
        }
        None => curve::write_csv(&rows, &mut *out)?,
    }
    Ok(())
}

fn write_anchors(rows: &[CurveRow], out: &mut dyn Write) -> Result<(), CliError> {
    for anchor in ANCHORS {
        if let Some(row) = anchor.find(rows) {
            let status = if anchor.passes(row.avg_fidelity) { "PASS" } else { "FAIL" };
            writeln!(
                out,
                "anchor p={:.4} r={}: avg_fidelity {} (expected {:.4} ± {}) {status}",
                anchor.p,
                anchor.r,
                fixed(row.avg_fidelity, 6),
                anchor.expected,
                anchor.tolerance
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}
