//! `mayer` — reproducible command-line runs of the Yukawa-gas Mayer-series
//! toolkit: convergence radii, coefficient flows, collapse diagnostics,
//! improved-stability constants and the small-n Ursell oracle.

mod config;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use config::RunConfig;
use mayer_core::flow::{
    self, integrate_flow_with, FlowControl,
};
use mayer_core::majorant::{radius_report, Cutoff, MajorantParams};
use mayer_core::scale::ConstantRates;
use mayer_core::stability::{
    extract_delta, line_search_profiles, minimize_energy, minimize_patterns, StabilityOptions,
};
use mayer_core::{exec, ursell};
use output::{Cell, Table};
use std::path::PathBuf;
use std::process::ExitCode;

const CONFIG_HELP: &str = "\
CONFIG FILE (flat key = value lines, # comments):
  scale.kind              exponential | power          [exponential]
  scale.rate              rate a of kappa(t)=e^(-a t)  [2.0]
  scale.exponent          p of kappa(t)=(1-t)^p        [2.0]
  quad.abs_tol            quadrature absolute tol      [1e-10]
  quad.rel_tol            quadrature relative tol      [1e-10]
  quad.max_subdivisions   interval bisection budget    [400]
  flow.steps              RK4 steps                    [2000]
  flow.richardson_tol     grid-halving error limit     [1e-7]
  flow.overflow_cap       divergence signal cap        [1e12]
  optimizer.starts        multistart restarts          [20]
  optimizer.tol           energy tolerance             [1e-8]
  optimizer.coord_tol     coordinate tolerance         [1e-6]
  optimizer.r_max         escape-detection box         [50]
  output.format           csv | json                   [csv]

All temperatures are passed as --beta-over-pi (multiples of pi). Scale
times t are dimensionless with t1 = 0 the physical endpoint. Worker count
follows the process default; set RAYON_NUM_THREADS to cap it.";

#[derive(Parser)]
#[command(
    name = "mayer",
    version,
    about = "Convergence machinery of the planar Yukawa gas",
    after_long_help = CONFIG_HELP
)]
struct Cli {
    /// Output format (overrides the config file).
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence-radius report over a (beta, k) grid.
    Radius {
        /// Inverse temperatures as multiples of pi (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        beta_over_pi: Vec<f64>,
        /// Regularization orders (comma separated, each >= 1).
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        /// Short-distance cutoff: a negative time or "-inf".
        #[arg(long, default_value = "-inf", allow_hyphen_values = true)]
        t0: String,
    },
    /// Improved-stability constants from charge-configuration minimization.
    Stability {
        /// Number of charges (2..=8).
        #[arg(long)]
        n: usize,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Report every non-neutral sign pattern, not only the minimum.
        #[arg(long)]
        all_patterns: bool,
        /// Emit the reduced line-search profiles instead of minimizing.
        #[arg(long)]
        profiles: bool,
    },
    /// Integrate the regularized coefficient flow.
    Coefficients {
        #[arg(long)]
        beta_over_pi: f64,
        /// Regularization order (0 = unregularized).
        #[arg(long, default_value_t = 0)]
        k: u32,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long)]
        steps: Option<usize>,
        /// Override: hold B-dot at this constant (with --gamma-const).
        #[arg(long)]
        b_dot_const: Option<f64>,
        /// Override: hold Gamma at this constant (with --b-dot-const).
        #[arg(long)]
        gamma_const: Option<f64>,
    },
    /// Pair collapse diagnostics across a list of cutoffs.
    Collapse {
        #[arg(long)]
        beta_over_pi: f64,
        /// Cutoffs t0, comma separated (e.g. -2,-4,-8).
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t0_list: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
    },
    /// Cross-check the three Ursell routes on random configurations.
    Oracle {
        /// Number of particles (2..=6 for the flow route).
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 2.0)]
        beta_over_pi: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 600)]
        steps: usize,
    },
}

enum CliError {
    Usage(String),
    Numeric {
        op: &'static str,
        err: mayer_core::Error,
    },
}

impl CliError {
    fn numeric(op: &'static str) -> impl Fn(mayer_core::Error) -> CliError {
        move |err| CliError::Numeric { op, err }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric { op, err }) => {
            eprintln!("numeric failure in {op}: {err}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(fmt) = cli.output {
        cfg.csv_output = matches!(fmt, OutputFormat::Csv);
    }
    let stdout = std::io::stdout();
    let out = stdout.lock();
    match cli.command {
        Command::Radius { beta_over_pi, k, t0 } => cmd_radius(&cfg, beta_over_pi, k, &t0, out),
        Command::Stability {
            n,
            starts,
            tol,
            r_max,
            seed,
            all_patterns,
            profiles,
        } => cmd_stability(&cfg, n, starts, tol, r_max, seed, all_patterns, profiles, out),
        Command::Coefficients {
            beta_over_pi,
            k,
            n_max,
            t0,
            steps,
            b_dot_const,
            gamma_const,
        } => cmd_coefficients(&cfg, beta_over_pi, k, n_max, t0, steps, b_dot_const, gamma_const, out),
        Command::Collapse {
            beta_over_pi,
            t0_list,
            t,
        } => cmd_collapse(&cfg, beta_over_pi, t0_list, t, out),
        Command::Oracle {
            n,
            seed,
            samples,
            beta_over_pi,
            t0,
            steps,
        } => cmd_oracle(&cfg, n, seed, samples, beta_over_pi, t0, steps, out),
    }
}

fn parse_cutoff(text: &str) -> Result<Cutoff, CliError> {
    if text == "-inf" {
        return Ok(Cutoff::MinusInfinity);
    }
    let v: f64 = text
        .parse()
        .map_err(|_| CliError::Usage(format!("--t0 must be a number or -inf, got {text}")))?;
    if !(v < 0.0) {
        return Err(CliError::Usage(format!("--t0 must be negative, got {v}")));
    }
    Ok(Cutoff::Finite(v))
}

fn cmd_radius<W: std::io::Write>(
    cfg: &RunConfig,
    betas_over_pi: Vec<f64>,
    ks: Vec<u32>,
    t0_text: &str,
    out: W,
) -> Result<(), CliError> {
    let t0 = parse_cutoff(t0_text)?;
    if ks.iter().any(|&k| k == 0) {
        return Err(CliError::Usage("radius needs k >= 1".into()));
    }
    let mut cells: Vec<(f64, u32)> = Vec::new();
    for &b in &betas_over_pi {
        if !(b >= 0.0) {
            return Err(CliError::Usage(format!("beta/pi must be >= 0, got {b}")));
        }
        for &k in &ks {
            cells.push((b, k));
        }
    }
    cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let reports = exec::par_map(&cells, |&(bpi, k)| {
        let beta = bpi * std::f64::consts::PI;
        let model = cfg.scale_model(beta).map_err(|e| {
            mayer_core::Error::InvalidInput { reason: e }
        })?;
        let params = MajorantParams::new(beta, t0, k)?;
        radius_report(&model, &params)
    });

    let mut table = Table::new(vec![
        "beta", "k", "t0", "tau", "radius", "threshold", "converged",
    ]);
    for r in reports {
        let r = r.map_err(CliError::numeric("radius/radius_report"))?;
        table.push(vec![
            Cell::Float(r.beta),
            Cell::Int(r.k as i64),
            r.t0.map_or(Cell::Str("-inf".into()), Cell::Float),
            Cell::Float(r.tau),
            Cell::Float(r.radius),
            Cell::Float(r.threshold),
            Cell::Bool(r.converged),
        ]);
    }
    table
        .write(out, cfg.csv_output)
        .map_err(|e| CliError::Usage(format!("write failed: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_stability<W: std::io::Write>(
    cfg: &RunConfig,
    n: usize,
    starts: Option<usize>,
    tol: Option<f64>,
    r_max: Option<f64>,
    seed: u64,
    all_patterns: bool,
    profiles: bool,
    mut out: W,
) -> Result<(), CliError> {
    if profiles {
        let p = line_search_profiles(&cfg.quadrature())
            .map_err(CliError::numeric("stability/line_search_profiles"))?;
        let mut table = Table::new(vec!["kind", "w1", "w2", "energy"]);
        for (w, e) in &p.one_d {
            table.push(vec![
                Cell::Str("trio".into()),
                Cell::Float(*w),
                Cell::Null,
                Cell::Float(*e),
            ]);
        }
        for (w1, w2, e) in &p.two_d {
            table.push(vec![
                Cell::Str("quintuple".into()),
                Cell::Float(*w1),
                Cell::Float(*w2),
                Cell::Float(*e),
            ]);
        }
        table.push(vec![
            Cell::Str("trio_minimum".into()),
            Cell::Float(p.min_1d.0),
            Cell::Null,
            Cell::Float(p.min_1d.1),
        ]);
        table.push(vec![
            Cell::Str("quintuple_minimum".into()),
            Cell::Float(p.min_2d.0),
            Cell::Float(p.min_2d.1),
            Cell::Float(p.min_2d.2),
        ]);
        return table
            .write(out, cfg.csv_output)
            .map_err(|e| CliError::Usage(format!("write failed: {e}")));
    }

    let opts = StabilityOptions {
        starts: starts.unwrap_or(cfg.optimizer_starts),
        tol: tol.unwrap_or(cfg.optimizer_tol),
        coord_tol: cfg.optimizer_coord_tol,
        r_max: r_max.unwrap_or(cfg.optimizer_r_max),
        seed,
        quad: mayer_core::QuadratureSpec {
            abs_tol: cfg.quad_abs_tol.min(1e-11),
            rel_tol: cfg.quad_rel_tol.min(1e-11),
            max_subdivisions: cfg.quad_max_subdivisions,
        },
    };
    let results = if all_patterns {
        minimize_patterns(n, &opts).map_err(CliError::numeric("stability/minimize_patterns"))?
    } else {
        vec![minimize_energy(n, &opts).map_err(CliError::numeric("stability/minimize_energy"))?]
    };

    if cfg.csv_output {
        let mut table = Table::new(vec![
            "n",
            "sign_pattern",
            "min_energy",
            "delta_n",
            "margin",
            "attained",
        ]);
        for r in &results {
            let d = extract_delta(r);
            table.push(vec![
                Cell::Int(r.n as i64),
                Cell::Str(pattern_text(&r.sign_pattern)),
                Cell::Float(r.min_energy),
                Cell::Float(d.delta_n),
                Cell::Float(d.margin),
                Cell::Bool(r.attained),
            ]);
        }
        table
            .write_csv(out)
            .map_err(|e| CliError::Usage(format!("write failed: {e}")))
    } else {
        // Full results with gauge-fixed minimizer coordinates.
        let text = serde_json::to_string_pretty(&results)
            .map_err(|e| CliError::Usage(format!("serialize failed: {e}")))?;
        writeln!(out, "{text}").map_err(|e| CliError::Usage(format!("write failed: {e}")))
    }
}

fn pattern_text(signs: &[i8]) -> String {
    signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_coefficients<W: std::io::Write>(
    cfg: &RunConfig,
    beta_over_pi: f64,
    k: u32,
    n_max: usize,
    t0: f64,
    steps: Option<usize>,
    b_dot_const: Option<f64>,
    gamma_const: Option<f64>,
    out: W,
) -> Result<(), CliError> {
    let steps = steps.unwrap_or(cfg.flow_steps);
    let control = FlowControl {
        richardson_tol: cfg.flow_richardson_tol,
        overflow_cap: cfg.flow_overflow_cap,
    };
    let table = match (b_dot_const, gamma_const) {
        (None, None) => {
            let beta = beta_over_pi * std::f64::consts::PI;
            let model = cfg.scale_model(beta).map_err(CliError::Usage)?;
            let params = MajorantParams::new(beta, Cutoff::Finite(t0), k)
                .map_err(CliError::numeric("coefficients/params"))?;
            flow::integrate_flow_controlled(&model, &params, n_max, steps, &control)
                .map_err(CliError::numeric("coefficients/integrate_flow"))?
        }
        (b, g) => {
            let rates = ConstantRates {
                b_dot: b.unwrap_or(0.0),
                gamma: g.unwrap_or(0.0),
            };
            integrate_flow_with(&rates, t0, 0.0, k, n_max, steps, &control)
                .map_err(CliError::numeric("coefficients/integrate_flow"))?
        }
    };

    let mut headers: Vec<&'static str> = vec!["t"];
    // Column names C1..C24 are static so the borrow in Table works.
    const C_NAMES: [&str; 24] = [
        "C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11", "C12", "C13", "C14",
        "C15", "C16", "C17", "C18", "C19", "C20", "C21", "C22", "C23", "C24",
    ];
    if n_max > C_NAMES.len() {
        return Err(CliError::Usage(format!(
            "n_max up to {} supported in tabular output",
            C_NAMES.len()
        )));
    }
    headers.extend(&C_NAMES[..n_max]);
    let mut t = Table::new(headers);
    for (i, time) in table.grid.iter().enumerate() {
        let mut row = vec![Cell::Float(*time)];
        row.extend(table.values[i].iter().map(|&v| Cell::Float(v)));
        t.push(row);
    }
    t.write(out, cfg.csv_output)
        .map_err(|e| CliError::Usage(format!("write failed: {e}")))
}

fn cmd_collapse<W: std::io::Write>(
    cfg: &RunConfig,
    beta_over_pi: f64,
    mut t0_list: Vec<f64>,
    t: f64,
    out: W,
) -> Result<(), CliError> {
    if t0_list.is_empty() {
        return Err(CliError::Usage("collapse needs a nonempty --t0-list".into()));
    }
    t0_list.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let beta = beta_over_pi * std::f64::consts::PI;
    let model = cfg.scale_model(beta).map_err(CliError::Usage)?;
    // Collapse diagnostics carry ~7 significant digits; anything tighter
    // than 1e-7 only burns subdivisions on the triple integral.
    let q = mayer_core::QuadratureSpec {
        abs_tol: cfg.quad_abs_tol.max(1e-7),
        rel_tol: cfg.quad_rel_tol.max(1e-7),
        max_subdivisions: cfg.quad_max_subdivisions,
    };
    let diag = flow::collapse_scan(&model, &t0_list, t, &q)
        .map_err(CliError::numeric("collapse/a2_diagnostics"))?;
    let mut table = Table::new(vec![
        "beta",
        "t0",
        "ln_kappa_t0",
        "a2_minus",
        "a2_plus_bound",
        "fitted_exponent",
    ]);
    for i in 0..diag.t0_list.len() {
        table.push(vec![
            Cell::Float(diag.beta),
            Cell::Float(diag.t0_list[i]),
            Cell::Float(diag.ln_kappa_t0[i]),
            Cell::Float(diag.a2_minus[i]),
            Cell::Float(diag.a2_plus_bound[i]),
            diag.fitted_exponent.map_or(Cell::Null, Cell::Float),
        ]);
    }
    table
        .write(out, cfg.csv_output)
        .map_err(|e| CliError::Usage(format!("write failed: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_oracle<W: std::io::Write>(
    cfg: &RunConfig,
    n: usize,
    seed: u64,
    samples: usize,
    beta_over_pi: f64,
    t0: f64,
    steps: usize,
    out: W,
) -> Result<(), CliError> {
    if !(2..=6).contains(&n) {
        return Err(CliError::Usage(format!("oracle needs 2 <= n <= 6, got {n}")));
    }
    let beta = beta_over_pi * std::f64::consts::PI;
    let model = cfg.scale_model(beta).map_err(CliError::Usage)?;
    let q = cfg.quadrature();
    let configs = ursell::sample_configurations(n, samples, seed, 0.15, 1.2);

    let rows = exec::par_map(&configs, |config| -> mayer_core::Result<_> {
        let m = ursell::PairPotentialMatrix::from_configuration(&model, config, t0, 0.0, &q)?;
        let graph = ursell::ursell_sequence_from_graphs(&m);
        let flow_seq = ursell::ursell_flow_solve(&model, config, t0, 0.0, steps, &q)?;
        let algebra = ursell::boltzmann_sequence(&m).ln()?;
        let mut rel_flow = 0.0_f64;
        let mut rel_algebra = 0.0_f64;
        for mask in 0..(1u32 << n) {
            if mask.count_ones() < 2 {
                continue;
            }
            let g = graph.value(mask);
            let denom = g.abs().max(1e-3);
            rel_flow = rel_flow.max((flow_seq.value(mask) - g).abs() / denom);
            rel_algebra = rel_algebra.max((algebra.value(mask) - g).abs() / denom);
        }
        Ok((
            graph.full_value(),
            flow_seq.full_value(),
            algebra.full_value(),
            rel_flow,
            rel_algebra,
        ))
    });

    let mut table = Table::new(vec![
        "sample",
        "n",
        "psi_graph",
        "psi_flow",
        "psi_algebra",
        "max_rel_err_flow",
        "max_rel_err_algebra",
    ]);
    for (i, row) in rows.into_iter().enumerate() {
        let (g, f, a, rf, ra) = row.map_err(CliError::numeric("oracle/ursell_flow_solve"))?;
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Int(n as i64),
            Cell::Float(g),
            Cell::Float(f),
            Cell::Float(a),
            Cell::Float(rf),
            Cell::Float(ra),
        ]);
    }
    table
        .write(out, cfg.csv_output)
        .map_err(|e| CliError::Usage(format!("write failed: {e}")))
}
