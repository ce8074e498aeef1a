use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vlasov_spray::blowup::{blowup_certify, bounding_curves};
use vlasov_spray::config::parse_config;
use vlasov_spray::coupled::run;
use vlasov_spray::diagnostics::{check_identities, CheckContext};
use vlasov_spray::error::Error;
use vlasov_spray::kinetic::{integrate_characteristics_path, Boundary, FieldLevels};
use vlasov_spray::params::{vacuum_safe_pow, ModelParams};
use vlasov_spray::picard::{picard_iterate, PicardOptions};
use vlasov_spray::presets::certify_functionals;
use vlasov_spray::series::{read_series, write_series};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_WINDOW: u8 = 3;

#[derive(Parser)]
#[command(
    name = "vlasov-spray",
    about = "Coupled kinetic-fluid solver with conservation diagnostics and a blow-up certifier",
    version
)]
struct Cli {
    /// Size of the worker thread pool (defaults to the number of cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write the functional time series and snapshots
    Simulate { config: PathBuf },
    /// Evaluate the blow-up constants and predicates on the initial data
    Certify { config: PathBuf },
    /// Check the conservation/dissipation identities on a series CSV
    Check {
        series: PathBuf,
        #[arg(long)]
        tol_conservation: Option<f64>,
        #[arg(long)]
        tol_rate: Option<f64>,
    },
    /// Integrate one forward characteristic through the initial data
    Characteristics {
        config: PathBuf,
        /// starting position, comma-separated per axis
        #[arg(long, value_delimiter = ',', required = true)]
        x0: Vec<f64>,
        /// starting velocity, comma-separated per axis
        #[arg(long, value_delimiter = ',', required = true)]
        xi0: Vec<f64>,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Run the successive-approximation experiment and report contraction
    Picard {
        config: PathBuf,
        #[arg(long, default_value_t = 6)]
        iters: usize,
        #[arg(long)]
        t_short: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error value
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: failed to build thread pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, Error> {
    match cmd {
        Cmd::Simulate { config } => simulate(&config),
        Cmd::Certify { config } => certify(&config),
        Cmd::Check { series, tol_conservation, tol_rate } => {
            check(&series, tol_conservation, tol_rate)
        }
        Cmd::Characteristics { config, x0, xi0, t1, dt } => {
            characteristics(&config, &x0, &xi0, t1, dt)
        }
        Cmd::Picard { config, iters, t_short } => picard(&config, iters, t_short),
    }
}

fn simulate(config: &PathBuf) -> Result<u8, Error> {
    let cfg = parse_config(config)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let scenario = cfg.scenario();
    let series = run(&scenario, Some(&cfg.output_dir))?;
    let csv_path = cfg.output_dir.join("series.csv");
    write_series(&series, &csv_path)?;
    let last = series.records.last().expect("run always has records");
    println!(
        "{} records to t = {:.6e}; E = {:.9e}, m_rho = {:.9e}, m_f = {:.9e}",
        series.records.len(),
        last.t,
        last.e_total(),
        last.mass_rho,
        last.mass_f
    );
    println!("series written to {}", csv_path.display());
    Ok(EXIT_OK)
}

fn certify(config: &PathBuf) -> Result<u8, Error> {
    let cfg = parse_config(config)?;
    if cfg.params.dim != 3 {
        return Err(Error::Domain(format!(
            "certification evaluates three-dimensional constants; got dim = {} \
             (set [grid] dim = 3)",
            cfg.params.dim
        )));
    }
    let initial = certify_functionals(
        &cfg.preset,
        &cfg.params,
        cfg.certify_resolution,
        cfg.grid.x_hi(),
        cfg.grid.xi_hi(),
    )?;
    let report = blowup_certify(&initial, &cfg.params)?;
    print!("{}", report.to_key_values());
    if !report.window_ok {
        return Ok(EXIT_WINDOW);
    }
    if let Some(t) = report.horizon {
        let (lo, up) = bounding_curves(&report, cfg.params.gamma, t)?;
        println!("# bounding curves at the horizon t={t:.6e}: lower={lo:.9e}, upper={up:.9e}");
    }
    if report.predicate_paper == Some(true) {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_CHECK_FAILED)
    }
}

fn check(
    series_path: &PathBuf,
    tol_conservation: Option<f64>,
    tol_rate: Option<f64>,
) -> Result<u8, Error> {
    let series = read_series(series_path)?;
    let meta = &series.meta;
    let params = ModelParams::new(
        meta.gamma,
        meta.delta,
        meta.m_drag,
        meta.alpha,
        meta.beta,
        meta.rho_inf,
        meta.dim,
        false,
    )?;
    // defaults per regime: fluid-only series tolerate round-off drift only
    let coupled = series.records.first().map(|r| r.mass_f > 0.0).unwrap_or(false);
    let tol_c = tol_conservation.unwrap_or(if coupled { 1e-6 } else { 1e-10 });
    let tol_r = tol_rate.unwrap_or(5e-2);
    let ctx = CheckContext { dim: meta.dim, params };
    let report = check_identities(&ctx, &series.records, tol_c, tol_r)?;
    print!("{}", report.table());
    println!("{}", report.summary_line());
    if report.all_passed() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_CHECK_FAILED)
    }
}

fn characteristics(
    config: &PathBuf,
    x0: &[f64],
    xi0: &[f64],
    t1: f64,
    dt: Option<f64>,
) -> Result<u8, Error> {
    let cfg = parse_config(config)?;
    let dim = cfg.grid.dim();
    if x0.len() != dim || xi0.len() != dim {
        return Err(Error::Domain(format!(
            "--x0 and --xi0 need {dim} components for dim = {dim}"
        )));
    }
    let (fluid, _) = cfg.preset.materialize(&cfg.params, &cfg.grid)?;
    let rate = cfg.params.drag_coefficient(&fluid.rho)?;
    let u = fluid.velocity(cfg.density_floor);
    let levels = FieldLevels::Frozen { rate: &rate, u: &u };
    let rate_inf = vacuum_safe_pow(cfg.params.rho_inf, cfg.params.m_drag);
    let dt_ode = dt.unwrap_or(t1 / 1000.0);
    let path = integrate_characteristics_path(
        &cfg.grid,
        &levels,
        Boundary::FarField { rate_inf },
        x0,
        xi0,
        0.0,
        t1,
        dt_ode,
    )?;
    let axes = ["x", "y", "z"];
    let mut header = String::from("s");
    for a in 0..dim {
        header.push_str(&format!(",X_{}", axes[a]));
    }
    for a in 0..dim {
        header.push_str(&format!(",Xi_{}", axes[a]));
    }
    println!("{header}");
    for state in path {
        let mut row = format!("{:.16e}", state.s);
        for v in state.x.iter().chain(state.xi.iter()) {
            row.push_str(&format!(",{v:.16e}"));
        }
        println!("{row}");
    }
    Ok(EXIT_OK)
}

fn picard(config: &PathBuf, iters: usize, t_short: Option<f64>) -> Result<u8, Error> {
    let cfg = parse_config(config)?;
    let scenario = cfg.scenario();
    let opts = PicardOptions { iters, t_short, weight_p: cfg.weight_p, weight_a: cfg.weight_a };
    let report = picard_iterate(&scenario, &opts)?;
    print!("{}", report.table());
    Ok(EXIT_OK)
}
