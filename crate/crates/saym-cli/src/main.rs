//! Command-line front end tying the library modules together.
//!
//! Every subcommand resolves one `RunConfig` from defaults, an optional flat
//! key=value config file, and command-line flags (in that order of
//! precedence), then emits a machine-readable report embedding the config
//! and a schema version. Reports are byte-identical across runs for the same
//! config and seed. Exit codes: 0 on success, 1 when a verification produces
//! a false verdict, 2 on usage or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use saym::action::{
    absorb_counterterm, build_action, quadratic_part, RenormMode, RenormalizationStep,
    SpectralActionExpansion,
};
use saym::brst::{self, BrstConfig};
use saym::cutoff::{
    build_form_factor, moment, verify_moment_lemma, CutoffFunction, FormFactor, MomentTable,
};
use saym::powercount::classify_with;
use saym::propagators::{self, Momentum};
use saym::symfield::Expression;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "saym",
    version,
    about = "Higher-derivative gauge theory toolkit: cutoff moments, form factors, \
             dressed propagators, BRST checks, divergence power counting, and \
             renormalization bookkeeping"
)]
struct Cli {
    /// Flat key=value config file (keys: n, lambda, xi, cutoff, c, seed);
    /// command-line flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Write the report to this path instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Truncation order (even; at least 8, or 6 for power-count).
    #[arg(long, global = true)]
    n: Option<u32>,

    /// Cutoff scale (positive).
    #[arg(long, global = true)]
    lambda: Option<f64>,

    /// Gauge parameter (positive).
    #[arg(long, global = true)]
    xi: Option<f64>,

    /// Cutoff density: gauss | pointmass:w1@t1,... | density:exp | table:<path>.
    #[arg(long, global = true, value_name = "SPEC")]
    cutoff: Option<String>,

    /// Template constants c_0,...,c_{n/2-2} (comma separated; default all 1).
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true,
        value_name = "C0,C1,..."
    )]
    c: Option<Vec<f64>>,

    /// Seed for randomized sweeps; recorded in every report.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a single cutoff moment f_k from the density.
    Moments {
        /// Moment index k (negative k are the higher-derivative weights).
        #[arg(long, allow_negative_numbers = true)]
        k: i32,
    },
    /// Check the quoted moment identity against the defining integrals.
    VerifyMomentLemma {
        /// Largest derivative order checked; defaults to n/2 - 2.
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Build the polynomial form factor and report its coefficients.
    FormFactor {
        /// Also evaluate the form factor at these squared momenta.
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            value_name = "PSQ,..."
        )]
        eval: Option<Vec<f64>>,
    },
    /// Evaluate the dressed propagators at one momentum, or scan magnitudes.
    Propagator {
        /// Euclidean momentum components p0,p1,p2,p3.
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            value_name = "P0,P1,P2,P3",
            conflicts_with = "scan"
        )]
        momentum: Option<Vec<f64>>,
        /// Emit a CSV of momentum magnitude and largest propagator entry.
        #[arg(long)]
        scan: bool,
    },
    /// Enumerate loop topologies and report divergence degrees.
    PowerCount {
        /// Largest loop order (1 or 2).
        #[arg(long, default_value_t = 2)]
        loops: u32,
        /// Largest number of external legs (at most 6).
        #[arg(long, default_value_t = 6)]
        max_external: u32,
        /// Restrict to one-particle-irreducible topologies (the default).
        #[arg(long, conflicts_with = "connected")]
        one_pi: bool,
        /// Enumerate all connected topologies instead of 1PI only.
        #[arg(long)]
        connected: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Verify BRST invariance, nilpotency, and the fermion roundtrip.
    BrstCheck {
        #[arg(long, value_enum, default_value_t = VariantArg::Extended)]
        variant: VariantArg,
    },
    /// Assemble the truncated action and print its sectors.
    Expand,
    /// Apply one counterterm absorption step and report mode consistency.
    Renorm {
        /// Field rescaling parameter; must exceed -1.
        #[arg(long, allow_negative_numbers = true)]
        delta_z: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::FieldAndCoupling)]
        mode: ModeArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Minimal,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    FieldAndCoupling,
    CutoffShift,
}

/// Resolved run configuration embedded verbatim in every report.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct RunConfig {
    n: u32,
    lambda: f64,
    xi: f64,
    cutoff_spec: String,
    c_vector: Vec<f64>,
    seed: u64,
}

/// Failures are split by exit code: usage and input problems (2) versus a
/// verification that ran and produced a false verdict (1, report printed).
enum Failure {
    Usage(String),
}

macro_rules! usage_from {
    ($($ty:ty),*) => {
        $(impl From<$ty> for Failure {
            fn from(e: $ty) -> Self {
                Failure::Usage(e.to_string())
            }
        })*
    };
}

usage_from!(
    saym::cutoff::CutoffError,
    saym::powercount::PowError,
    saym::propagators::PropError,
    saym::action::ActionError,
    saym::brst::BrstError,
    saym::symfield::SymError
);

type RunResult = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Clap renders help/version on stdout with success, usage errors
            // on stderr with code 2.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Honor SAYM_THREADS as a cap on the worker pool.
fn init_threads() -> Result<(), String> {
    match std::env::var("SAYM_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let count: usize = raw
                .trim()
                .parse()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| format!("SAYM_THREADS must be a positive integer, got `{raw}`"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(count)
                .build_global()
                .map_err(|e| e.to_string())
        }
    }
}

fn run(cli: &Cli) -> RunResult {
    let config = resolve_config(cli)?;
    match &cli.command {
        Cmd::Moments { k } => cmd_moments(cli, &config, *k),
        Cmd::VerifyMomentLemma { kmax } => cmd_lemma(cli, &config, *kmax),
        Cmd::FormFactor { eval } => cmd_form_factor(cli, &config, eval.as_deref()),
        Cmd::Propagator { momentum, scan } => cmd_propagator(cli, &config, momentum.as_deref(), *scan),
        Cmd::PowerCount { loops, max_external, one_pi, connected, format } => {
            cmd_power_count(cli, &config, *loops, *max_external, *one_pi, *connected, *format)
        }
        Cmd::BrstCheck { variant } => cmd_brst_check(cli, &config, *variant),
        Cmd::Expand => cmd_expand(cli, &config),
        Cmd::Renorm { delta_z, mode } => cmd_renorm(cli, &config, *delta_z, *mode),
    }
}

/// Defaults, overridden by config-file entries, overridden by flags.
fn resolve_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut n: u32 = 8;
    let mut lambda: f64 = 1.0;
    let mut xi: f64 = 1.0;
    let mut cutoff = String::from("gauss");
    let mut c: Option<Vec<f64>> = None;
    let mut seed: u64 = 0;

    if let Some(path) = &cli.config {
        for (key, value) in parse_config_file(path)? {
            match key.as_str() {
                "n" => n = parse_field(&key, &value)?,
                "lambda" => lambda = parse_field(&key, &value)?,
                "xi" => xi = parse_field(&key, &value)?,
                "cutoff" => cutoff = value,
                "seed" => seed = parse_field(&key, &value)?,
                "c" => {
                    let parsed: Result<Vec<f64>, _> =
                        value.split(',').map(|p| p.trim().parse()).collect();
                    c = Some(parsed.map_err(|_| {
                        Failure::Usage(format!("config key `c`: bad number list `{value}`"))
                    })?);
                }
                other => {
                    return Err(Failure::Usage(format!(
                        "unknown config key `{other}` (expected n, lambda, xi, cutoff, c, seed)"
                    )))
                }
            }
        }
    }
    if let Some(v) = cli.n {
        n = v;
    }
    if let Some(v) = cli.lambda {
        lambda = v;
    }
    if let Some(v) = cli.xi {
        xi = v;
    }
    if let Some(v) = &cli.cutoff {
        cutoff = v.clone();
    }
    if let Some(v) = &cli.c {
        c = Some(v.clone());
    }
    if let Some(v) = cli.seed {
        seed = v;
    }

    let floor = if matches!(cli.command, Cmd::PowerCount { .. }) { 6 } else { 8 };
    if n < floor || n % 2 != 0 {
        return Err(Failure::Usage(format!(
            "n must be even and at least {floor} for this subcommand, got {n}"
        )));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Failure::Usage(format!("lambda must be positive, got {lambda}")));
    }
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Failure::Usage(format!("xi must be positive, got {xi}")));
    }
    let c_vector = c.unwrap_or_else(|| vec![1.0; (n / 2 - 1) as usize]);
    Ok(RunConfig { n, lambda, xi, cutoff_spec: cutoff, c_vector, seed })
}

fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::Usage(format!(
                "config line {} is not key=value: `{line}`",
                lineno + 1
            )));
        };
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value
        .parse()
        .map_err(|_| Failure::Usage(format!("config key `{key}`: bad value `{value}`")))
}

fn density(config: &RunConfig) -> Result<CutoffFunction, Failure> {
    Ok(CutoffFunction::parse(&config.cutoff_spec)?)
}

fn form_factor_for(config: &RunConfig) -> Result<FormFactor, Failure> {
    let g = density(config)?;
    let table = MomentTable::for_form_factor(&g, config.n)?;
    Ok(build_form_factor(&table, &config.c_vector, config.n, config.lambda)?)
}

fn action_for(config: &RunConfig) -> Result<SpectralActionExpansion, Failure> {
    let g = density(config)?;
    let mut table = MomentTable::for_form_factor(&g, config.n)?;
    // The volume weight is bound only when the density can support it; the
    // term itself stays formal either way.
    if let Ok(f4) = moment(&g, 4) {
        table.insert(4, f4.value, f4.error);
    }
    Ok(build_action(config.n, &table, &config.c_vector, config.lambda, config.xi)?)
}

/// Merge the payload into a report object with the schema version and the
/// resolved config. Keys are emitted in sorted order, so serialization is
/// deterministic.
fn emit_report(cli: &Cli, config: &RunConfig, payload: Value) -> Result<(), Failure> {
    let mut root = Map::new();
    root.insert("schemaVersion".into(), json!(SCHEMA_VERSION));
    root.insert(
        "config".into(),
        serde_json::to_value(config).expect("config serializes"),
    );
    match payload {
        Value::Object(entries) => {
            for (k, v) in entries {
                root.insert(k, v);
            }
        }
        other => {
            root.insert("result".into(), other);
        }
    }
    let text = serde_json::to_string_pretty(&Value::Object(root)).expect("report serializes");
    write_output(cli, format!("{text}\n"))
}

fn write_output(cli: &Cli, text: String) -> Result<(), Failure> {
    match &cli.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
    }
}

fn to_object(value: impl Serialize) -> Value {
    serde_json::to_value(value).expect("report payload serializes")
}

fn cmd_moments(cli: &Cli, config: &RunConfig, k: i32) -> RunResult {
    let g = density(config)?;
    let entry = moment(&g, k)?;
    emit_report(
        cli,
        config,
        json!({ "k": k, "value": entry.value, "error": entry.error }),
    )?;
    Ok(true)
}

fn cmd_lemma(cli: &Cli, config: &RunConfig, kmax: Option<u32>) -> RunResult {
    let g = density(config)?;
    let kmax = kmax.unwrap_or(config.n / 2 - 2);
    let report = verify_moment_lemma(&g, kmax)?;
    let ok = !report.any_flagged && report.all_corrected_match;
    let mut payload = to_object(&report);
    payload["ok"] = json!(ok);
    emit_report(cli, config, payload)?;
    Ok(ok)
}

fn cmd_form_factor(cli: &Cli, config: &RunConfig, eval: Option<&[f64]>) -> RunResult {
    let form = form_factor_for(config)?;
    let scan_hi = (5.0 * config.lambda).powi(2);
    let violations = form.positivity_scan(0.0, scan_hi, 400);
    let ok = violations.is_empty();
    let mut payload = to_object(&form);
    let mut root = Map::new();
    root.insert("form_factor".into(), payload.take());
    root.insert("degree".into(), json!(form.degree()));
    root.insert("phi_at_zero".into(), json!(form.eval(0.0)));
    root.insert("positivity_scan_hi".into(), json!(scan_hi));
    root.insert("positivity_violations".into(), to_object(&violations));
    root.insert("ok".into(), json!(ok));
    if let Some(points) = eval {
        let values: Vec<Value> = points
            .iter()
            .map(|&psq| json!({ "psq": psq, "phi": form.eval(psq) }))
            .collect();
        root.insert("eval".into(), Value::Array(values));
    }
    emit_report(cli, config, Value::Object(root))?;
    Ok(ok)
}

fn cmd_propagator(
    cli: &Cli,
    config: &RunConfig,
    momentum: Option<&[f64]>,
    scan: bool,
) -> RunResult {
    let form = form_factor_for(config)?;
    if scan {
        let rows = propagators::scan(&form, config.xi, 0.5 * config.lambda, 500.0 * config.lambda, 60);
        let mut text = String::from("p,dnorm\n");
        for (p, d) in rows {
            text.push_str(&format!("{p},{d}\n"));
        }
        write_output(cli, text)?;
        return Ok(true);
    }
    let Some(components) = momentum else {
        return Err(Failure::Usage(
            "propagator requires --momentum p0,p1,p2,p3 or --scan".into(),
        ));
    };
    if components.len() != 4 {
        return Err(Failure::Usage(format!(
            "--momentum needs exactly 4 components, got {}",
            components.len()
        )));
    }
    let p = Momentum::euclidean([components[0], components[1], components[2], components[3]]);
    let gauge = propagators::gauge_propagator(&p, config.xi, &form)?;
    let ghost = propagators::ghost_propagator(&p, &form)?;
    let residual = propagators::inversion_check(&p, config.xi, &form)?;
    let ok = residual <= 1e-12;
    let psq = components.iter().map(|x| x * x).sum::<f64>();
    let gauge_json: Vec<Vec<Value>> = gauge
        .tensor
        .iter()
        .map(|row| row.iter().map(|z| json!([z.re, z.im])).collect())
        .collect();
    emit_report(
        cli,
        config,
        json!({
            "momentum": components,
            "psq": psq,
            "phi": form.eval(psq),
            "color": "delta^{ab}",
            "gauge": gauge_json,
            "ghost": [ghost.re, ghost.im],
            "inversion_residual": residual,
            "ok": ok,
        }),
    )?;
    Ok(ok)
}

#[allow(clippy::too_many_arguments)]
fn cmd_power_count(
    cli: &Cli,
    config: &RunConfig,
    loops: u32,
    max_external: u32,
    _one_pi: bool,
    connected: bool,
    format: Format,
) -> RunResult {
    let one_pi_only = !connected;
    let report = classify_with(config.n, loops, max_external, one_pi_only)?;
    let verdict = report.verdict;
    match format {
        Format::Json => {
            let mut payload = to_object(&report);
            payload["max_external"] = json!(max_external);
            payload["one_pi"] = json!(one_pi_only);
            emit_report(cli, config, payload)?;
        }
        Format::Table => {
            let mut text = String::new();
            text.push_str(&format!(
                "divergence report: n = {}, loops <= {}, external legs <= {}, {}\n",
                report.n,
                report.lmax,
                max_external,
                if one_pi_only { "1PI" } else { "connected" }
            ));
            text.push_str(&format!("{}\n\n", report.euler_formula));
            text.push_str("  id  valences      ghosts  L  I  It  E  Et  omega(direct)  omega(closed)\n");
            for g in &report.per_graph {
                let valences = g
                    .gauge_valences
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("+");
                let shown = if valences.is_empty() { "-".to_string() } else { valences };
                text.push_str(&format!(
                    "{:>4}  {:<12}  {:>6}  {:>1}  {:>1}  {:>2}  {:>1}  {:>2}  {:>13}  {:>13}\n",
                    g.id, shown, g.ghost_vertices, g.l, g.i, g.i_tilde, g.e, g.e_tilde,
                    g.omega_direct, g.omega_closed
                ));
            }
            text.push_str("\ndivergent classes (L, E, Et, omega):\n");
            for class in &report.divergent_classes {
                text.push_str(&format!(
                    "  ({}, {}, {}, {})\n",
                    class.l, class.e, class.e_tilde, class.omega
                ));
            }
            text.push_str(&format!("verdict: {}\n", verdict));
            write_output(cli, text)?;
        }
    }
    Ok(verdict)
}

fn cmd_brst_check(cli: &Cli, config: &RunConfig, variant: VariantArg) -> RunResult {
    let cfg = match variant {
        VariantArg::Minimal => BrstConfig::minimal(),
        VariantArg::Extended => BrstConfig::extended(),
    };
    let kmax = config.n / 2 - 2;
    let exp = action_for(config)?;

    // Invariance of the full gauge-fixed action. The minimal variant acts on
    // the assembled action directly; the extended variant fixes the gauge
    // through the fermion, whose image carries the auxiliary field.
    let invariant_sector = exp.gauge_invariant();
    let invariance = match variant {
        VariantArg::Minimal => {
            brst::check_invariance(&exp.total(), &cfg)?
        }
        VariantArg::Extended => {
            let psi = brst::gauge_fixing_fermion(kmax);
            let gauge_fixed = invariant_sector.add(&brst::brst(&psi, &cfg));
            brst::check_invariance(&gauge_fixed, &cfg)?
        }
    };

    let nil = brst::nilpotency_report(&cfg);
    let mut nilpotency = Map::new();
    let mut residuals = Map::new();
    for (name, residual) in &nil.residuals {
        let vanishes = residual.is_empty();
        nilpotency.insert(name.clone(), json!(vanishes));
        if !vanishes {
            residuals.insert(name.clone(), to_object(expression_lines(residual)));
        }
    }
    let nilpotency_expected = match variant {
        VariantArg::Extended => nil.exact,
        // The minimal transformation closes on everything except the
        // antighost, where s s Cb is the explicit nonzero obstruction.
        VariantArg::Minimal => nil
            .residuals
            .iter()
            .all(|(name, r)| (name == "antighost") != r.is_empty()),
    };

    let psi = brst::gauge_fixing_fermion(kmax);
    let gauge_fixed = brst::brst(&psi, &BrstConfig::extended());
    let reference = brst::gauge_fixing_action(kmax).add(&brst::ghost_action(kmax));
    let fermion_roundtrip = match brst::eliminate_auxiliary(&gauge_fixed) {
        Ok(reduced) => reduced.equal_mod_total_derivative(&reference)?,
        Err(_) => false,
    };

    let ok = invariance && nilpotency_expected && fermion_roundtrip;
    emit_report(
        cli,
        config,
        json!({
            "variant": match variant {
                VariantArg::Minimal => "minimal",
                VariantArg::Extended => "extended",
            },
            "invariance": invariance,
            "nilpotency": Value::Object(nilpotency),
            "nilpotency_residuals": Value::Object(residuals),
            "fermion_roundtrip": fermion_roundtrip,
            "ok": ok,
        }),
    )?;
    Ok(ok)
}

fn expression_lines(e: &Expression) -> Vec<String> {
    e.terms.iter().map(|m| m.to_string()).collect()
}

fn cmd_expand(cli: &Cli, config: &RunConfig) -> RunResult {
    let exp = action_for(config)?;
    let s0 = quadratic_part(&exp)?;
    let s_gf = exp.gauge_fixing.normal_form()?;
    let s_gh = exp.ghost.normal_form()?;
    let terms: Vec<Value> = exp
        .terms
        .iter()
        .map(|t| {
            json!({
                "m": t.m,
                "k": t.k,
                "monomials": t.integrand.terms.len(),
            })
        })
        .collect();
    emit_report(
        cli,
        config,
        json!({
            "s0": expression_lines(&s0),
            "s_gf": expression_lines(&s_gf),
            "s_gh": expression_lines(&s_gh),
            "terms": terms,
        }),
    )?;
    Ok(true)
}

fn cmd_renorm(cli: &Cli, config: &RunConfig, delta_z: f64, mode: ModeArg) -> RunResult {
    let exp = action_for(config)?;
    let step = RenormalizationStep {
        delta_z,
        mode: match mode {
            ModeArg::FieldAndCoupling => RenormMode::FieldAndCoupling,
            ModeArg::CutoffShift => RenormMode::CutoffShift,
        },
    };
    let (_, report) = absorb_counterterm(&exp, &step)?;
    let consistency = report.consistency;
    let mut payload = to_object(&report);
    payload["ok"] = json!(consistency);
    emit_report(cli, config, payload)?;
    Ok(consistency)
}
