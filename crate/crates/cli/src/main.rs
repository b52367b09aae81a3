//! Command-line front end: phase synthesis, success-probability sweeps,
//! shot-level simulation, optimality certificates, and SDP axis sweeps, all
//! emitted as deterministic CSV or JSON artifacts.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use hamrec::bloch::BlochHamiltonian;
use hamrec::error::{Error, Result};
use hamrec::protocols::{
    build_binary_circuit, build_ternary_circuit, error_polynomial, guess_distribution,
    sample_shots, HypothesisSet, ProtocolKind,
};
use hamrec::qsp::{evaluate_qsp, odd_target, synthesize_phases, QspConvention};
use hamrec::sdp::{solve_recognition_sdp, SweepRow};
use hamrec::tester::{
    binary_certificate, check_constraints, circuit_to_tester, performance_operator,
    ternary_certificate, CombConstraints, DualCertificate, StrategyClass,
};
use hamrec::hermitian_min_eig;

#[derive(Parser)]
#[command(name = "hamrec", about = "Hamiltonian-recognition protocols: synthesis, simulation, certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the QSP phase sequence for degree k as JSON.
    Synthesize(Opts),
    /// Tabulate per-hypothesis success probabilities over a θ grid.
    Sweep(Opts),
    /// Sample measurement shots for one hidden Hamiltonian.
    Simulate(Opts),
    /// Verify a dual optimality certificate and report residuals.
    Certify(Opts),
    /// Solve the recognition SDP over a grid of probe axes.
    SdpSweep(Opts),
}

#[derive(Args, Default)]
struct Opts {
    /// Number of oracle calls.
    #[arg(long)]
    k: Option<usize>,
    /// Hypothesis set: binary {X, Z} or ternary {X, Y, Z}.
    #[arg(long)]
    protocol: Option<String>,
    /// Hidden axis: x, y, z, or "nx,ny,nz".
    #[arg(long)]
    axis: Option<String>,
    /// Slot angle θ ∈ (0, π].
    #[arg(long)]
    theta: Option<f64>,
    /// Grid points for sweeps.
    #[arg(long)]
    grid: Option<usize>,
    /// Shots for simulation.
    #[arg(long)]
    shots: Option<u64>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long)]
    format: Option<String>,
    /// JSON config file; flags take precedence over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Fields a --config file may set; flags override every one of them.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    k: Option<usize>,
    protocol: Option<String>,
    axis: Option<String>,
    theta: Option<f64>,
    grid: Option<usize>,
    shots: Option<u64>,
    seed: Option<u64>,
    out: Option<String>,
    format: Option<String>,
}

struct RunConfig {
    k: Option<usize>,
    protocol: Option<String>,
    axis: Option<String>,
    theta: Option<f64>,
    grid: Option<usize>,
    shots: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<String>,
}

impl RunConfig {
    fn merge(opts: Opts) -> Result<Self> {
        let file = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::Domain(format!("bad config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        Ok(Self {
            k: opts.k.or(file.k),
            protocol: opts.protocol.or(file.protocol),
            axis: opts.axis.or(file.axis),
            theta: opts.theta.or(file.theta),
            grid: opts.grid.or(file.grid),
            shots: opts.shots.or(file.shots),
            seed: opts.seed.or(file.seed),
            out: opts.out.or(file.out.map(PathBuf::from)),
            format: opts.format.or(file.format),
        })
    }

    fn k(&self) -> Result<usize> {
        self.k.ok_or_else(|| Error::Domain("--k is required".into()))
    }

    fn protocol(&self) -> Result<ProtocolKind> {
        match self.protocol.as_deref().unwrap_or("binary") {
            "binary" => Ok(ProtocolKind::Binary),
            "ternary" => Ok(ProtocolKind::Ternary),
            other => Err(Error::Domain(format!("unknown protocol {other}"))),
        }
    }

    fn axis(&self) -> Result<BlochHamiltonian> {
        parse_axis(self.axis.as_deref().unwrap_or("z"))
    }

    fn format(&self, default: &str) -> Result<String> {
        let f = self.format.clone().unwrap_or_else(|| default.to_string());
        match f.as_str() {
            "csv" | "json" => Ok(f),
            other => Err(Error::Domain(format!("unknown format {other}"))),
        }
    }
}

fn parse_axis(s: &str) -> Result<BlochHamiltonian> {
    match s {
        "x" => return Ok(BlochHamiltonian::x()),
        "y" => return Ok(BlochHamiltonian::y()),
        "z" => return Ok(BlochHamiltonian::z()),
        _ => {}
    }
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Domain(format!("axis must be x, y, z, or nx,ny,nz; got {s}")));
    }
    let mut n = [0.0f64; 3];
    for (slot, p) in n.iter_mut().zip(&parts) {
        *slot = p
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("bad axis component {p}")))?;
    }
    BlochHamiltonian::normalized(n[0], n[1], n[2])
}

/// 12 significant digits, trailing zeros trimmed; scientific notation only
/// for extreme magnitudes. Deterministic across runs and platforms.
fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.11e}")
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn cmd_synthesize(cfg: &RunConfig) -> Result<String> {
    let k = cfg.k()?;
    cfg.format("json")?;
    let seq = synthesize_phases(k)?;

    // Re-evaluate the composed unitary against its target before emitting.
    let x = BlochHamiltonian::x();
    if k % 2 == 1 {
        let target = odd_target(k)?;
        for theta in linspace(0.0, PI, 201) {
            let u = evaluate_qsp(&seq, theta, &x);
            let err = (u[(0, 0)] - hamrec::linalg::cr(target.eval(theta.cos()))).norm();
            if err > 1e-8 {
                return Err(Error::Synthesis(format!(
                    "roundtrip error {err:.3e} at θ = {theta}"
                )));
            }
        }
    } else {
        let z = BlochHamiltonian::z();
        for theta in linspace(1e-3, PI - 1e-3, 201) {
            let u = evaluate_qsp(&seq, theta, &z);
            let err = (u[(1, 0)].norm_sqr() - error_polynomial(k, theta)).abs();
            if err > 1e-8 {
                return Err(Error::Synthesis(format!(
                    "roundtrip error {err:.3e} at θ = {theta}"
                )));
            }
        }
    }

    let convention = match seq.convention {
        QspConvention::OddZ => "odd-z",
        QspConvention::EvenX => "even-x",
    };
    let phases: Vec<String> = seq.phases.iter().map(|&p| fmt_sig(p)).collect();
    Ok(format!(
        "{{\"k\": {k}, \"convention\": {}, \"phases\": [{}]}}\n",
        json_string(convention),
        phases.join(", ")
    ))
}

fn protocol_pieces(
    kind: ProtocolKind,
    k: usize,
) -> Result<(hamrec::protocols::ProtocolCircuit, HypothesisSet)> {
    match kind {
        ProtocolKind::Binary => Ok((build_binary_circuit(k)?, HypothesisSet::xz())),
        ProtocolKind::Ternary => Ok((build_ternary_circuit(k)?, HypothesisSet::xyz())),
    }
}

fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    let k = cfg.k()?;
    let kind = cfg.protocol()?;
    let grid = cfg.grid.unwrap_or(21);
    if grid < 2 {
        return Err(Error::Domain("sweep needs at least two grid points".into()));
    }
    let format = cfg.format("csv")?;
    let (circuit, set) = protocol_pieces(kind, k)?;
    let labels: Vec<String> = set.hypotheses().iter().map(|h| h.label.clone()).collect();

    let mut rows: Vec<(f64, Vec<f64>)> = Vec::with_capacity(grid);
    for theta in linspace(0.0, PI, grid) {
        let mut successes = Vec::with_capacity(labels.len());
        for h in set.hypotheses() {
            let guesses = guess_distribution(&circuit, &h.axis, theta)?;
            let p = guesses.get(&h.label).copied().unwrap_or(0.0);
            if !(-1e-10..=1.0 + 1e-10).contains(&p) {
                return Err(Error::Numeric(format!("success {p} out of [0, 1] at θ = {theta}")));
            }
            successes.push(p.clamp(0.0, 1.0));
        }
        rows.push((theta, successes));
    }

    if format == "json" {
        let body: Vec<String> = rows
            .iter()
            .map(|(theta, s)| {
                let cols: Vec<String> = labels
                    .iter()
                    .zip(s)
                    .map(|(l, v)| format!("{}: {}", json_string(l), fmt_sig(*v)))
                    .collect();
                format!("{{\"theta\": {}, {}}}", fmt_sig(*theta), cols.join(", "))
            })
            .collect();
        return Ok(format!("[\n{}\n]\n", body.join(",\n")));
    }
    let header: Vec<String> = std::iter::once("theta".to_string())
        .chain(labels.iter().map(|l| format!("success_{l}")))
        .collect();
    let mut out = header.join(",") + "\n";
    for (theta, s) in rows {
        let mut cols = vec![fmt_sig(theta)];
        cols.extend(s.iter().map(|&v| fmt_sig(v)));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn cmd_simulate(cfg: &RunConfig) -> Result<String> {
    let k = cfg.k()?;
    let kind = cfg.protocol()?;
    let axis = cfg.axis()?;
    let theta = cfg.theta.unwrap_or(PI / 2.0);
    let shots = cfg.shots.unwrap_or(10_000);
    let seed = cfg.seed.unwrap_or(0);
    cfg.format("json")?;
    if shots == 0 {
        return Err(Error::Domain("shots must be positive".into()));
    }
    let (circuit, _) = protocol_pieces(kind, k)?;
    let counts = sample_shots(&circuit, &axis, theta, shots, seed)?;
    let total: u64 = counts.values().sum();
    if total != shots {
        return Err(Error::Numeric(format!("counts sum to {total}, expected {shots}")));
    }

    let mut guesses: BTreeMap<String, u64> = BTreeMap::new();
    for (outcome, n) in &counts {
        let guess = circuit
            .decision()
            .get(outcome)
            .ok_or_else(|| Error::Domain(format!("no decision for outcome {outcome}")))?;
        *guesses.entry(guess.clone()).or_insert(0) += n;
    }

    let count_body: Vec<String> = counts
        .iter()
        .map(|(l, n)| format!("{}: {n}", json_string(l)))
        .collect();
    let guess_body: Vec<String> = guesses
        .iter()
        .map(|(l, n)| format!("{}: {}", json_string(l), fmt_sig(*n as f64 / shots as f64)))
        .collect();
    let ax = axis.axis();
    Ok(format!(
        "{{\"k\": {k}, \"protocol\": {}, \"axis\": [{}, {}, {}], \"theta\": {}, \"shots\": {shots}, \"seed\": {seed}, \"counts\": {{{}}}, \"guess_frequencies\": {{{}}}}}\n",
        json_string(match kind {
            ProtocolKind::Binary => "binary",
            ProtocolKind::Ternary => "ternary",
        }),
        fmt_sig(ax[0]),
        fmt_sig(ax[1]),
        fmt_sig(ax[2]),
        fmt_sig(theta),
        count_body.join(", "),
        guess_body.join(", ")
    ))
}

/// Recomputes every feasibility quantity of a certificate from scratch and
/// lays them out as a JSON report.
fn certificate_report(cert: &DualCertificate, k: usize) -> Result<(String, bool)> {
    let w = cert.matrix();
    let mut sections = Vec::new();
    let mut pass = true;

    for class in [StrategyClass::DualSeq, StrategyClass::DualGen] {
        let report = check_constraints(w, &CombConstraints::new(class, k)?)?;
        pass &= report.pass;
        let worst = report
            .residuals
            .iter()
            .map(|(_, r)| *r)
            .fold(0.0f64, f64::max);
        let name = match class {
            StrategyClass::DualSeq => "dual_seq",
            StrategyClass::DualGen => "dual_gen",
            _ => unreachable!(),
        };
        sections.push(format!(
            "\"{name}\": {{\"max_residual\": {}, \"trace_residual\": {}, \"pass\": {}}}",
            fmt_sig(worst),
            fmt_sig(report.trace_residual.unwrap_or(0.0)),
            report.pass
        ));
    }

    let witness_min = hermitian_min_eig(&w.hermitized())?;
    pass &= witness_min >= -1e-9 * w.max_abs().max(1.0);

    let axes: Vec<(&str, BlochHamiltonian)> = if cert.hypotheses() == 2 {
        vec![("X", BlochHamiltonian::x()), ("Z", BlochHamiltonian::z())]
    } else {
        vec![
            ("X", BlochHamiltonian::x()),
            ("Y", BlochHamiltonian::y()),
            ("Z", BlochHamiltonian::z()),
        ]
    };
    let m = cert.hypotheses() as f64;
    let lambda = cert.lambda_value();
    let mut slack_entries = Vec::new();
    for (label, axis) in &axes {
        let omega = performance_operator(axis, k)?;
        let slack = w
            .scaled(hamrec::linalg::cr(m * lambda))
            .sub(omega.matrix())
            .hermitized();
        let min = hermitian_min_eig(&slack)?;
        pass &= min >= -1e-9 * slack.max_abs().max(1.0);
        slack_entries.push(format!("{}: {}", json_string(label), fmt_sig(min)));
    }

    let report = format!(
        "{{\"k\": {k}, \"hypotheses\": {}, \"lambda\": {}, \"lambda_exact\": {}, {}, \"witness_min_eigenvalue\": {}, \"slack_min_eigenvalues\": {{{}}}, \"status\": {}}}\n",
        cert.hypotheses(),
        fmt_sig(lambda),
        json_string(&format!("{}/{}", cert.lambda().numer(), cert.lambda().denom())),
        sections.join(", "),
        fmt_sig(witness_min),
        slack_entries.join(", "),
        json_string(if pass { "PASS" } else { "FAIL" })
    );
    Ok((report, pass))
}

fn cmd_certify(cfg: &RunConfig) -> Result<String> {
    let k = cfg.k()?;
    let kind = cfg.protocol()?;
    cfg.format("json")?;
    let cert = match kind {
        ProtocolKind::Binary => binary_certificate(k)?,
        ProtocolKind::Ternary => ternary_certificate(k)?,
    };
    let (report, pass) = certificate_report(&cert, k)?;
    if !pass {
        // Emit the diagnostic report, then fail the run.
        emit(&cfg.out, &report)?;
        return Err(Error::Certificate("certificate checks failed, see report".into()));
    }
    Ok(report)
}

fn cmd_sdp_sweep(cfg: &RunConfig) -> Result<String> {
    let k = cfg.k()?;
    let grid = cfg.grid.unwrap_or(21);
    if k != 1 && k != 3 {
        return Err(Error::Domain(format!("sdp-sweep supports k ∈ {{1, 3}}, got {k}")));
    }
    if grid < 2 {
        return Err(Error::Domain("sdp-sweep needs at least two grid points".into()));
    }
    let format = cfg.format("csv")?;

    let omega_z = performance_operator(&BlochHamiltonian::z(), k)?;
    let tester = circuit_to_tester(&build_binary_circuit(k)?)?;
    let fixed_z = tester.pair("Z", omega_z.matrix())?;

    // Solver failures are recorded in the status column; the run keeps going
    // and the exit code reports them at the end.
    let mut rows: Vec<(Option<SweepRow>, f64, [f64; 3], String)> = Vec::with_capacity(grid);
    let mut all_ok = true;
    for alpha in linspace(0.0, PI / 2.0, grid) {
        let axis = BlochHamiltonian::new(alpha.sin(), 0.0, alpha.cos())?;
        let omega_0 = performance_operator(&axis, k)?;
        let fixed = 0.5 * (tester.pair("X", omega_0.matrix())? + fixed_z);
        match solve_recognition_sdp(&[omega_0, omega_z.clone()], &[0.5, 0.5], StrategyClass::Seq) {
            Ok(solution) => {
                let row = SweepRow {
                    alpha,
                    axis: axis.axis(),
                    optimal: solution.value,
                    fixed_protocol: fixed,
                    guessing: 0.5,
                };
                let ordered = row.optimal >= row.fixed_protocol - 1e-6
                    && row.fixed_protocol >= 0.5 - 1e-6;
                all_ok &= ordered;
                let status = if ordered { "ok".to_string() } else { "ordering violated".to_string() };
                rows.push((Some(row), alpha, axis.axis(), status));
            }
            Err(e) => {
                all_ok = false;
                rows.push((None, alpha, axis.axis(), format!("solver failed: {e}")));
            }
        }
    }

    let body = if format == "json" {
        let entries: Vec<String> = rows
            .iter()
            .map(|(row, alpha, axis, status)| {
                let values = match row {
                    Some(r) => format!(
                        "\"optimal\": {}, \"fixed\": {}, \"guessing\": {}",
                        fmt_sig(r.optimal),
                        fmt_sig(r.fixed_protocol),
                        fmt_sig(r.guessing)
                    ),
                    None => "\"optimal\": null, \"fixed\": null, \"guessing\": null".to_string(),
                };
                format!(
                    "{{\"alpha\": {}, \"axis\": [{}, {}, {}], {values}, \"status\": {}}}",
                    fmt_sig(*alpha),
                    fmt_sig(axis[0]),
                    fmt_sig(axis[1]),
                    fmt_sig(axis[2]),
                    json_string(status)
                )
            })
            .collect();
        format!("[\n{}\n]\n", entries.join(",\n"))
    } else {
        let mut out = "alpha,n0x,n0y,n0z,optimal,fixed,guessing,status\n".to_string();
        for (row, alpha, axis, status) in &rows {
            let (optimal, fixed, guessing) = match row {
                Some(r) => (fmt_sig(r.optimal), fmt_sig(r.fixed_protocol), fmt_sig(r.guessing)),
                None => (String::new(), String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{optimal},{fixed},{guessing},{status}\n",
                fmt_sig(*alpha),
                fmt_sig(axis[0]),
                fmt_sig(axis[1]),
                fmt_sig(axis[2]),
            ));
        }
        out
    };

    if !all_ok {
        emit(&cfg.out, &body)?;
        return Err(Error::Numeric("one or more sweep rows failed".into()));
    }
    Ok(body)
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let (opts, handler): (Opts, fn(&RunConfig) -> Result<String>) = match cli.command {
        Command::Synthesize(o) => (o, cmd_synthesize),
        Command::Sweep(o) => (o, cmd_sweep),
        Command::Simulate(o) => (o, cmd_simulate),
        Command::Certify(o) => (o, cmd_certify),
        Command::SdpSweep(o) => (o, cmd_sdp_sweep),
    };
    let cfg = RunConfig::merge(opts)?;
    let body = handler(&cfg)?;
    emit(&cfg.out, &body)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
