//! entangle-lab: nonlocal-game strategy models from the command line.
//!
//! Subcommands reproduce the CHSH constructions (classical, angular,
//! statistical), evaluate game/strategy files, and run the randomized
//! verification suites: observation-calculus properties, the duality
//! square, and the Gaussian Monte Carlo realization.
//!
//! Exit codes: 0 when every check passed, 1 when a check failed, 2 for
//! usage or input errors.

mod report;

use clap::{Parser, Subcommand};
use entangle_core::chsh::build_chsh_statistical;
use entangle_core::games::{
    classical_value_bruteforce, evaluate_game, parse_game, parse_strategy,
};
use entangle_core::gauss::{
    enumerate_words, mc_correlation_matrix, realize_spatial_strategy_mc, ChshGaussSetup,
    GaussianSampler,
};
use entangle_core::quantum::{angular_chsh_strategy, chsh_value_closed_form, AngularAssignment};
use entangle_core::suites::{run_observation_suite, run_duality_suite, run_inclusion_suite};
use entangle_core::NonlocalGame;
use report::{digest, matrix_value, Report};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "entangle-lab",
    version,
    about = "Nonlocal-game strategies: classical, quantum, statistical, ergodic, Gaussian"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every randomized computation.
    #[arg(long, global = true, env = "ENTANGLE_LAB_SEED", default_value_t = 0)]
    seed: u64,

    /// Emit the report as JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// Write the report to a file (.csv extension selects CSV tables).
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Override the default pass tolerance of a command.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classical (3/4) and angular (13/16) CHSH values.
    Chsh,
    /// The statistical CHSH construction: table, angle-equation residuals
    /// and the 13/16 value.
    ChshStat,
    /// Evaluate a strategy file against a game file.
    Eval {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
    },
    /// Classical brute-force value of a game file.
    Classical {
        #[arg(long)]
        game: PathBuf,
    },
    /// The duality-square property suite.
    DualityCheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Gaussian Monte Carlo verification of the CHSH kernel and the
    /// realized dual table.
    GaussMc {
        /// Only the built-in CHSH game is wired up.
        #[arg(long, default_value = "chsh")]
        game: String,
        /// Maximum word length of the kernel index set.
        #[arg(long, default_value_t = 2)]
        words: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// The observation-calculus property suites (identity, projection,
    /// PVM, commutation and lift laws, plus the strategy-space inclusions).
    Props {
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut report = match run(&cli) {
        Ok(report) => report,
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(2);
        }
    };
    report.wall_time_ms = Some(started.elapsed().as_millis() as u64);

    let rendered = if cli.json { report.to_json() } else { report.to_text() };
    if let Some(path) = &cli.output {
        let body = if path.extension().is_some_and(|e| e == "csv") {
            report.to_csv()
        } else {
            report.to_json()
        };
        if let Err(err) = std::fs::write(path, body) {
            eprintln!("error: writing {}: {err}", path.display());
            std::process::exit(2);
        }
    }
    println!("{rendered}");
    std::process::exit(if report.pass { 0 } else { 1 });
}

fn run(cli: &Cli) -> Result<Report, String> {
    match &cli.command {
        Command::Chsh => run_chsh(cli),
        Command::ChshStat => run_chsh_stat(cli),
        Command::Eval { game, strategy } => run_eval(cli, game, strategy),
        Command::Classical { game } => run_classical(cli, game),
        Command::DualityCheck { trials } => run_duality(cli, *trials),
        Command::GaussMc { game, words, samples } => run_gauss(cli, game, *words, *samples),
        Command::Props { trials } => run_props(cli, *trials),
    }
}

fn run_chsh(cli: &Cli) -> Result<Report, String> {
    let tol = cli.tol.unwrap_or(1e-9);
    let mut report = Report::new("chsh", digest(&[&format!("seed={}", cli.seed)]));
    let game = NonlocalGame::chsh();
    let classical = classical_value_bruteforce(&game).map_err(|e| e.to_string())?;
    let angles = AngularAssignment::optimal();
    let strategy = angular_chsh_strategy(&angles);
    let angular = evaluate_game(&game, &strategy).map_err(|e| e.to_string())?;
    let closed = chsh_value_closed_form(&angles);

    report.result("classical_value", classical.0);
    report.result("angular_value", angular.0);
    report.result("closed_form_value", closed.0);
    for x in 0..2 {
        for y in 0..2 {
            report.result(&format!("table {x},{y}"), matrix_value(strategy.table(x, y)));
        }
    }
    report.residual("angular_vs_closed_form", (angular.0 - closed.0).abs());
    report.require(classical.0 == 0.75);
    report.require((angular.0 - 13.0 / 16.0).abs() < tol);
    report.require((closed.0 - 13.0 / 16.0).abs() < tol);
    Ok(report)
}

fn run_chsh_stat(cli: &Cli) -> Result<Report, String> {
    let tol = cli.tol.unwrap_or(1e-10);
    let mut report = Report::new("chsh-stat", digest(&[&format!("seed={}", cli.seed)]));
    let (data, strategy) = build_chsh_statistical().map_err(|e| e.to_string())?;
    let game = NonlocalGame::chsh();
    let value = evaluate_game(&game, &strategy).map_err(|e| e.to_string())?;
    let angular = angular_chsh_strategy(&AngularAssignment::optimal());

    report.result("value", value.0);
    for x in 0..2 {
        for y in 0..2 {
            report.result(&format!("table {x},{y}"), matrix_value(strategy.table(x, y)));
        }
    }
    let mut worst: f64 = 0.0;
    for (player, basis) in [("alice", &data.alice), ("bob", &data.bob)] {
        let [kappa, lambda] = basis.angle_reports().map_err(|e| e.to_string())?;
        for (i, r) in kappa.residuals.iter().enumerate() {
            report.residual(&format!("{player} angle eq {} (kappa)", i + 1), *r);
        }
        for (i, r) in lambda.residuals.iter().enumerate() {
            report.residual(&format!("{player} angle eq {} (lambda)", i + 1), *r);
        }
        worst = worst.max(kappa.max_residual()).max(lambda.max_residual());
    }
    report.residual("value_vs_13_16", (value.0 - 13.0 / 16.0).abs());
    report.residual("table_vs_angular", strategy.max_abs_diff(&angular));
    report.require((value.0 - 13.0 / 16.0).abs() < tol);
    report.require(strategy.max_abs_diff(&angular) < tol);
    report.require(worst < tol);
    Ok(report)
}

fn run_eval(cli: &Cli, game_path: &PathBuf, strategy_path: &PathBuf) -> Result<Report, String> {
    let _ = cli;
    let game_json = std::fs::read_to_string(game_path)
        .map_err(|e| format!("reading {}: {e}", game_path.display()))?;
    let strategy_json = std::fs::read_to_string(strategy_path)
        .map_err(|e| format!("reading {}: {e}", strategy_path.display()))?;
    let game = parse_game(&game_json).map_err(|e| e.to_string())?;
    let strategy = parse_strategy(&strategy_json, &game).map_err(|e| e.to_string())?;
    let value = evaluate_game(&game, &strategy).map_err(|e| e.to_string())?;
    let mut report = Report::new("eval", digest(&[&game_json, &strategy_json]));
    report.result("value", value.0);
    for (x, qa) in game.questions_a().iter().enumerate() {
        for (y, qb) in game.questions_b().iter().enumerate() {
            report.result(&format!("table {qa},{qb}"), matrix_value(strategy.table(x, y)));
        }
    }
    Ok(report)
}

fn run_classical(cli: &Cli, game_path: &PathBuf) -> Result<Report, String> {
    let _ = cli;
    let game_json = std::fs::read_to_string(game_path)
        .map_err(|e| format!("reading {}: {e}", game_path.display()))?;
    let game = parse_game(&game_json).map_err(|e| e.to_string())?;
    let value = classical_value_bruteforce(&game).map_err(|e| e.to_string())?;
    let mut report = Report::new("classical", digest(&[&game_json]));
    report.result("value", value.0);
    Ok(report)
}

fn run_duality(cli: &Cli, trials: usize) -> Result<Report, String> {
    let mut report = Report::new(
        "duality-check",
        digest(&[&format!("seed={} trials={trials}", cli.seed)]),
    );
    let suite = run_duality_suite(cli.seed, trials);
    report.result("trials", trials as u64);
    report.residual("table", suite.table_residual);
    report.residual("wheel_pvm_roundtrip", suite.roundtrip_residual);
    report.residual("fourier_inversion_identity", suite.inversion_residual);
    report.result("max_residual", suite.max_residual());
    report.require(suite.pass);
    Ok(report)
}

fn run_props(cli: &Cli, trials: usize) -> Result<Report, String> {
    let mut report =
        Report::new("props", digest(&[&format!("seed={} trials={trials}", cli.seed)]));
    let obs = run_observation_suite(cli.seed, trials);
    report.result("trials", trials as u64);
    report.residual("identity at top order", obs.identity_residual);
    report.residual("ordered differences project", obs.difference_residual);
    report.residual("ladder differences form a PVM", obs.pvm_residual);
    report.residual("consistent pairs commute", obs.commutation_residual);
    report.residual("lifted pairs consistent", obs.lift_residual);
    report.require(obs.pass);

    let inclusion = run_inclusion_suite(cli.seed ^ 0x5bd1e995, trials.min(100));
    report.residual("inclusion (commuting)", inclusion.commuting_residual);
    report.residual("inclusion (spatial)", inclusion.spatial_residual);
    report.result("inclusion_failures", inclusion.failures as u64);
    report.require(inclusion.pass);
    Ok(report)
}

fn run_gauss(cli: &Cli, game: &str, words: usize, samples: usize) -> Result<Report, String> {
    if game != "chsh" {
        return Err(format!("unknown game \"{game}\"; only \"chsh\" is built in"));
    }
    let mut report = Report::new(
        "gauss-mc",
        digest(&[&format!("seed={} words={words} samples={samples}", cli.seed)]),
    );
    let setup = ChshGaussSetup::new();
    let word_list = enumerate_words(&setup.group_a, words).map_err(|e| e.to_string())?;
    let kernel = entangle_core::gauss::build_kernel(
        &setup.group_a,
        &setup.rep_a(),
        &setup.rho,
        &word_list,
    )
    .map_err(|e| e.to_string())?;
    let sampler = GaussianSampler::new(&kernel, cli.seed);
    let (est, se) = mc_correlation_matrix(&sampler, samples, 0);

    report.result("words", word_list.len() as u64);
    report.result("samples", samples as u64);
    report.result("kernel", matrix_value(kernel.matrix()));
    report.result("estimates", matrix_value(&est));
    report.result("standard_errors", matrix_value(&se));
    let mut worst_gap: f64 = 0.0;
    let mut kernel_pass = true;
    for g in 0..kernel.dim() {
        for h in 0..kernel.dim() {
            let gap = (est[g][h] - kernel.entry(g, h)).abs();
            worst_gap = worst_gap.max(gap);
            if gap > (4.0 * se[g][h]).max(1e-9) || gap > 0.02 {
                kernel_pass = false;
            }
        }
    }
    report.residual("max_kernel_gap", worst_gap);
    report.result("kernel_pass", kernel_pass);
    report.require(kernel_pass);

    let realization = realize_spatial_strategy_mc(
        &setup.group_a,
        &setup.group_b,
        &setup.rep_a(),
        &setup.rep_b(),
        &setup.chi,
        &setup.rho,
        &setup.vartheta,
        &word_list,
        &word_list,
        samples,
        cli.seed,
    )
    .map_err(|e| e.to_string())?;
    let exact = setup.exact_dual_table();
    let mut worst_table: f64 = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            worst_table = worst_table
                .max(realization.estimate.table(x, y).max_abs_diff(exact.table(x, y)));
        }
    }
    report.residual("max_dual_table_gap", worst_table);
    let tol = cli.tol.unwrap_or(0.02);
    report.require(worst_table <= tol);
    Ok(report)
}
