//! `consent`: batch front-end for the consent-core solvers.
//!
//! Exit status: 0 on success, 2 for malformed input or a failed validation,
//! 3 when a solver cannot produce an answer.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use consent_core::equilibrium::full_learning_benchmark;
use consent_core::extensions::{pivotal_prior, solve_multi_agent, verify_rich_binary_sufficiency};
use consent_core::oracle::{
    brute_force_best_test, brute_force_menu, discretize, uniform_edges, verify_binary_sufficiency, DEFAULT_SEED,
};
use consent_core::solver_menu::{solve_menu_linear, solve_single_linear, MenuReport};
use consent_core::solver_single::{solve_general, solve_interval, solve_tail, solve_threshold, SolveReport};
use consent_core::{presets, validate_environment, Alignment, BinaryTest, Environment, Violation};
use serde_json::json;

use config::{Command, Config, EnvSpec, SolverKind};
use report::{Column, Report};

#[derive(Parser, Debug)]
#[command(name = "consent", version, about = "Optimal trustworthy tests and screening menus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the command named in a JSON config.
    Run {
        config: PathBuf,
        /// Directory for the report files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve one of the built-in worked examples.
    Reproduce {
        #[arg(value_enum)]
        example: Example,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Example {
    Fig1,
    Menu51,
    #[value(name = "menuB", alias = "menub")]
    MenuB,
}

enum Failure {
    Input(anyhow::Error),
    Invalid(Vec<Violation>),
    Infeasible(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<consent_core::Error> for Failure {
    fn from(e: consent_core::Error) -> Self {
        use consent_core::Error as E;
        match e {
            E::Validation(v) => Failure::Invalid(v),
            E::NoConvergence { .. }
            | E::Lp(_)
            | E::ShapeViolation { .. }
            | E::NotInducible { .. }
            | E::InfeasibleMean { .. } => Failure::Infeasible(e.into()),
            _ => Failure::Input(e.into()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.into())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { config, out } => run(&config, &out),
        Cmd::Reproduce {
            example,
            epsilon,
            delta,
            out,
        } => reproduce(example, epsilon, delta, &out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Invalid(v)) => {
            eprintln!("error: environment fails validation");
            for x in v {
                eprintln!("  {x}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Infeasible(e)) => {
            eprintln!("infeasible: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn finish(dir: &Path, name: &str, report: &Report, env: &Environment, columns: &[Column]) -> Outcome<()> {
    let files = report::emit(dir, name, report, env, columns)?;
    println!("{name}: payoff {:.12}", report.payoff);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn indicator(test: &BinaryTest) -> Vec<Column<'_>> {
    vec![Column {
        name: "indicator".into(),
        test,
    }]
}

fn run(path: &Path, out: &Path) -> Outcome<()> {
    let cfg = Config::load(path)?;
    let env = cfg.environment()?;
    let violations = validate_environment(&env);
    if !violations.is_empty() {
        return Err(Failure::Invalid(violations));
    }
    let opts = &cfg.solver_options;
    let name = cfg.command.name();
    let report = |payoff: f64, result: serde_json::Value| Report {
        command: name.to_string(),
        environment: EnvSpec::from_env(&env),
        payoff,
        warnings: Vec::new(),
        result,
    };
    match cfg.command {
        Command::Solve => {
            let r = solve_with(opts.solver, &env)?;
            println!("optimal test {}", r.best_test);
            finish(out, name, &report(r.payoff, serde_json::to_value(&r)?), &env, &indicator(&r.best_test))
        }
        Command::Menu => {
            let m = solve_menu_linear(&env)?;
            let single = solve_single_linear(&env)?;
            print_menu(&m);
            let result = json!({ "menu": m, "single_test": single, "screening_gain": m.payoff - single.payoff });
            finish(out, name, &report(m.payoff, result), &env, &menu_columns(&m))
        }
        Command::Oracle => {
            let edges = oracle_edges(&env, opts)?;
            let o = brute_force_best_test(&env, &edges)?;
            let s = solve_general(&discretize(&env, &edges)?)?;
            println!("oracle test {}", o.best_test);
            println!("solver on the same grid: payoff {:.12}", s.payoff);
            let result = json!({
                "edges": edges,
                "oracle": o,
                "solver_on_grid": s,
                "gap": (o.payoff - s.payoff).abs(),
            });
            finish(out, name, &report(o.payoff, result), &env, &indicator(&o.best_test))
        }
        Command::VerifyBinary => {
            let edges = oracle_edges(&env, opts)?;
            let k = opts.signals.unwrap_or(3);
            let samples = opts.samples.unwrap_or(1000);
            let seed = opts.seed.unwrap_or(DEFAULT_SEED);
            let r = match &opts.rich {
                Some(spec) => verify_rich_binary_sufficiency(&env, spec, &edges, k, samples, seed)?,
                None => verify_binary_sufficiency(&env, &edges, k, samples, seed)?,
            };
            println!(
                "binary {:.12}, best {k}-signal {:.12} over {} kernels: {}",
                r.binary_payoff,
                r.max_general_payoff,
                r.kernels_examined,
                if r.holds() { "binary suffices" } else { "counterexample found" }
            );
            let best = brute_force_best_test(&env, &edges)?;
            let result = json!({ "edges": edges, "sufficiency": r, "holds": r.holds(), "binary_optimum": best.best_test });
            let columns = if opts.rich.is_some() { Vec::new() } else { indicator(&best.best_test) };
            finish(out, name, &report(r.binary_payoff, result), &env, &columns)
        }
        Command::MultiAgent => {
            let agents = opts.agents.clone().unwrap_or_else(|| vec![env.types.clone()]);
            let pivotal = pivotal_prior(&agents)?;
            let r = solve_multi_agent(&env, &agents)?;
            println!("optimal test {}", r.best_test);
            let result = json!({ "agents": agents, "pivotal_prior": pivotal, "solve": r });
            finish(out, name, &report(r.payoff, result), &env, &indicator(&r.best_test))
        }
    }
}

fn solve_with(kind: SolverKind, env: &Environment) -> consent_core::Result<SolveReport> {
    match kind {
        SolverKind::General => solve_general(env),
        SolverKind::Threshold => solve_threshold(env),
        SolverKind::Interval => solve_interval(env),
        SolverKind::Tail => solve_tail(env),
        SolverKind::Auto => match env.payoffs.alignment {
            Alignment::Positive => solve_threshold(env),
            Alignment::NegativeConcave => solve_interval(env),
            Alignment::NegativeConvex => solve_tail(env),
            Alignment::General => solve_general(env),
        },
    }
}

fn oracle_edges(env: &Environment, opts: &config::SolverOptions) -> Outcome<Vec<f64>> {
    match (&opts.edges, opts.cells) {
        (Some(_), Some(_)) => Err(anyhow!("give either edges or cells, not both").into()),
        (Some(e), None) => Ok(e.clone()),
        (None, n) => Ok(uniform_edges(env, n.unwrap_or(12))),
    }
}

fn print_menu(m: &MenuReport) {
    if m.schedule.entries.is_empty() {
        println!("no type is served");
    }
    for e in &m.schedule.entries {
        println!("type {} (λ = {}): p = {:.9}, μ = {:.9}, test {}", e.type_index, e.lambda, e.p, e.mu, e.test);
    }
}

fn menu_columns(m: &MenuReport) -> Vec<Column<'_>> {
    m.schedule
        .entries
        .iter()
        .map(|e| Column {
            name: format!("indicator_type_{}", e.type_index),
            test: &e.test,
        })
        .collect()
}

fn reproduce(example: Example, epsilon: Option<f64>, delta: Option<f64>, out: &Path) -> Outcome<()> {
    match example {
        Example::Fig1 => {
            let eps = epsilon.unwrap_or(0.1);
            let env = presets::fig1(eps, true)?;
            let original = presets::fig1(eps, false)?;
            let r = solve_general(&env)?;
            let o = solve_general(&original)?;
            let bench = full_learning_benchmark(&env)?;
            println!("optimal test {}", r.best_test);
            println!("without the reduction: payoff {} ({})", o.payoff, o.best_test);
            let result = json!({
                "epsilon": eps,
                "solve": r,
                "unreduced": { "environment": EnvSpec::from_env(&original), "solve": o },
                "full_learning": bench,
            });
            let report = Report {
                command: "reproduce-fig1".into(),
                environment: EnvSpec::from_env(&env),
                payoff: r.payoff,
                warnings: validation_warnings(&env),
                result,
            };
            finish(out, "reproduce-fig1", &report, &env, &indicator(&r.best_test))
        }
        Example::Menu51 => {
            let eps = epsilon.unwrap_or(0.01);
            let env = presets::menu51(eps)?;
            menu_example("reproduce-menu51", env, json!({ "epsilon": eps }), out)
        }
        Example::MenuB => {
            let eps = epsilon.unwrap_or(0.01);
            let d = delta.unwrap_or(1e-3);
            let env = presets::menu_b(d, eps)?;
            menu_example("reproduce-menuB", env, json!({ "epsilon": eps, "delta": d }), out)
        }
    }
}

fn menu_example(name: &str, env: Environment, params: serde_json::Value, out: &Path) -> Outcome<()> {
    let m = solve_menu_linear(&env)?;
    let single = solve_single_linear(&env)?;
    print_menu(&m);
    let mut pool: Vec<BinaryTest> = m.schedule.entries.iter().map(|e| e.test.clone()).collect();
    pool.dedup();
    let oracle = brute_force_menu(&env, &pool)?;
    let submenus: Vec<f64> = (1..=pool.len()).map(|s| oracle.best_up_to(s)).collect();
    println!("single test {:.12}, screening gain {:.3e}", single.payoff, m.payoff - single.payoff);
    let result = json!({
        "parameters": params,
        "menu": m,
        "single_test": single,
        "screening_gain": m.payoff - single.payoff,
        "best_submenu_by_size": submenus,
    });
    let report = Report {
        command: name.into(),
        environment: EnvSpec::from_env(&env),
        payoff: m.payoff,
        warnings: validation_warnings(&env),
        result,
    };
    finish(out, name, &report, &env, &menu_columns(&m))
}

fn validation_warnings(env: &Environment) -> Vec<String> {
    validate_environment(env).iter().map(ToString::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use consent_core::Error;

    fn code(f: Failure) -> u8 {
        match f {
            Failure::Input(_) | Failure::Invalid(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }

    #[test]
    fn solver_errors_map_to_exit_codes() {
        assert_eq!(code(Error::Lp("unbounded".into()).into()), 3);
        assert_eq!(code(Error::NoConvergence { what: "cuts", iterations: 5 }.into()), 3);
        assert_eq!(code(Error::NotInducible { p: 1.0, mu: 0.9, max_p: 0.1 }.into()), 3);
        assert_eq!(code(Error::NotLinear("menu").into()), 2);
        assert_eq!(code(Error::TooManyCells { cells: 30, limit: 22 }.into()), 2);
        assert_eq!(code(Error::Validation(Vec::new()).into()), 2);
    }
}
