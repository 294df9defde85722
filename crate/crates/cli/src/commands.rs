//! Subcommand resolution and execution.

use crate::config::Settings;
use crate::svg;
use clap::{Args, Parser, Subcommand};
use pinlab::disorder::{annealed_critical_point, h_t, sample_environment};
use pinlab::experiments::{
    constrained_tightness_scan, decay_check, free_energy_estimate, log_returns_experiment,
    plan_log_returns, series_event_sum, series_experiment, tightness_scan,
    ConstrainedTightnessConfig, DecayConfig, FreeEnergyConfig, LogReturnsConfig, PlanSource,
    SeriesConfig, TightnessConfig,
};
use pinlab::kernel::{build_kernel, KernelFamily, RenewalKernel};
use pinlab::polymer::{
    contact_statistics, Boundary, PathSampler, PolymerParams, StatsOptions,
};
use pinlab::report::{Check, ExperimentReport, ReportHeader, Value};
use pinlab::seeding::replica_seed;
use pinlab::Error;
use std::fmt;
use std::path::{Path, PathBuf};

/// Wrapper mapping core errors to process exit codes.
#[derive(Debug)]
pub struct CliError(Error);

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self.0 {
            Error::BudgetExceeded { .. } | Error::NonConvergence { .. } | Error::RootBracket(_) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "pinlab", version, about = "Exact experiments on the disordered pinning polymer")]
pub struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; replica k derives hash(master_seed, command, k).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the replica pool (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Work budget in DP cells (scales both kernel limits).
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Also emit SVG line plots.
    #[arg(long, global = true)]
    plot: bool,
    #[command(subcommand)]
    command: Command,
}

/// Kernel descriptor overrides shared by all subcommands.
#[derive(Args, Clone, Default)]
struct KernelArgs {
    /// Tail exponent of the gap law.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Smallest gap with positive mass.
    #[arg(long)]
    support_min: Option<u64>,
    /// Largest tabulated horizon.
    #[arg(long)]
    horizon: Option<u64>,
}

/// Disorder and polymer parameter overrides.
#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// Disorder law: gaussian | two-point:a.
    #[arg(long)]
    law: Option<String>,
    /// Inverse temperature.
    #[arg(long)]
    beta: Option<f64>,
    /// Pinning strength.
    #[arg(long = "h", allow_hyphen_values = true)]
    h: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Renewal-kernel normalization and event-DP self-checks.
    KernelCheck {
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Single-instance partition table and contact statistics.
    Partition {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: Option<u64>,
        /// free | constrained
        #[arg(long)]
        boundary: Option<String>,
        /// Also resolve the exact contact-count law.
        #[arg(long)]
        count_distribution: bool,
    },
    /// Exact Gibbs path samples.
    SamplePaths {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        count: Option<u64>,
        #[arg(long)]
        boundary: Option<String>,
    },
    /// Last-contact tightness scan over (n, N, replica).
    Tightness {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n_grid: Option<String>,
        #[arg(long)]
        threshold_grid: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        allow_localized: bool,
    },
    /// Constrained two-sided midpoint-escape scan.
    TightnessConstrained {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n_grid: Option<String>,
        #[arg(long)]
        threshold_grid: Option<String>,
        #[arg(long)]
        margin_grid: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        allow_localized: bool,
    },
    /// Rich-segment log-returns experiment.
    LogReturns {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Margin for the plan-derived level (ignored with --u/--gamma).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        n_grid: Option<String>,
        #[arg(long)]
        nu_grid: Option<String>,
        #[arg(long)]
        replicas: Option<u64>,
        /// Manual segment level (with --gamma, bypasses the planner).
        #[arg(long)]
        u: Option<f64>,
        /// Manual segment density.
        #[arg(long)]
        gamma: Option<f64>,
        /// Plant the segment into the disorder (synthetic probe).
        #[arg(long)]
        plant: bool,
    },
    /// Parameter chain planner for the log-returns mechanism.
    PlanThm2 {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Free-renewal decay of the few-contacts/small-gaps event.
    DecayCheck {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        n_grid: Option<String>,
    },
    /// Quenched free-energy estimate vs the homogeneous root.
    FreeEnergy {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n_grid: Option<String>,
        #[arg(long)]
        replicas: Option<u64>,
    },
    /// Constrained-series plateau and forward/reversed distribution probes.
    Series {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        checkpoint: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        ks_replicas: Option<u64>,
        #[arg(long)]
        ks_depth: Option<u64>,
        /// Also sum the event-restricted terms above this contact count.
        #[arg(long)]
        event_threshold: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::KernelCheck { .. } => "kernel-check",
            Command::Partition { .. } => "partition",
            Command::SamplePaths { .. } => "sample-paths",
            Command::Tightness { .. } => "tightness",
            Command::TightnessConstrained { .. } => "tightness-constrained",
            Command::LogReturns { .. } => "log-returns",
            Command::PlanThm2 { .. } => "plan-thm2",
            Command::DecayCheck { .. } => "decay-check",
            Command::FreeEnergy { .. } => "free-energy",
            Command::Series { .. } => "series",
        }
    }
}

const DEFAULT_MASTER_SEED: u64 = 0x70696E6C61620001;

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Error::invalid("threads", e.to_string()))?;
        }
    }
    let mut settings = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    if let Some(seed) = cli.seed {
        settings.set("master_seed", seed);
    }
    if let Some(budget) = cli.budget {
        settings.set("budget", budget);
    }
    settings.set_if_absent("master_seed", DEFAULT_MASTER_SEED);
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::invalid("out", format!("cannot create {}: {e}", out_dir.display())))?;

    dispatch(cli, settings, &out_dir)
}

fn merge_kernel(settings: &mut Settings, args: &KernelArgs) {
    if let Some(v) = args.alpha {
        settings.set("alpha", v);
    }
    if let Some(v) = args.support_min {
        settings.set("support_min", v);
    }
    if let Some(v) = args.horizon {
        settings.set("horizon", v);
    }
    settings.set_if_absent("alpha", 0.5);
    settings.set_if_absent("support_min", 1);
}

fn merge_model(settings: &mut Settings, args: &ModelArgs) {
    if let Some(v) = &args.law {
        settings.set("law", v);
    }
    if let Some(v) = args.beta {
        settings.set("beta", v);
    }
    if let Some(v) = args.h {
        settings.set("h", v);
    }
    settings.set_if_absent("law", "gaussian");
    settings.set_if_absent("beta", 0.5);
}

fn merge_grid(settings: &mut Settings, key: &str, arg: &Option<String>, default: &str) {
    if let Some(v) = arg {
        settings.set(key, v);
    }
    settings.set_if_absent(key, default);
}

fn build_kernel_from(settings: &Settings, min_horizon: u64) -> CliResult<RenewalKernel> {
    let alpha = settings.f64("alpha")?;
    let support_min = settings.u64("support_min")?;
    let horizon = match settings.get("horizon") {
        Some(_) => settings.u64("horizon")?,
        None => min_horizon,
    };
    Ok(build_kernel(alpha, KernelFamily::PowerLawConstant, horizon.max(min_horizon), support_min)?)
}

fn boundary_from(settings: &Settings) -> CliResult<Boundary> {
    match settings.get("boundary").unwrap_or("free") {
        "free" => Ok(Boundary::Free),
        "constrained" => Ok(Boundary::Constrained),
        other => Err(Error::invalid("boundary", format!("unknown boundary `{other}`")).into()),
    }
}

fn header_from(settings: &Settings, command: &str) -> CliResult<ReportHeader> {
    let master_seed = settings.u64("master_seed")?;
    let mut header = ReportHeader::new(command, master_seed);
    for (k, v) in settings.entries() {
        header.set(k, v);
    }
    Ok(header)
}

fn write_report(out_dir: &Path, name: &str, report: &ExperimentReport) -> CliResult<()> {
    let csv_path = out_dir.join(format!("{name}.csv"));
    let json_path = out_dir.join(format!("{name}.json"));
    std::fs::write(&csv_path, report.to_csv())
        .map_err(|e| Error::invalid("out", format!("cannot write {}: {e}", csv_path.display())))?;
    std::fs::write(&json_path, report.to_json_string())
        .map_err(|e| Error::invalid("out", format!("cannot write {}: {e}", json_path.display())))?;
    println!(
        "{name}: {} rows -> {}, {}",
        report.rows.len(),
        csv_path.display(),
        json_path.display()
    );
    for check in &report.footer {
        println!(
            "  [{}] {}: {}",
            if check.pass { "pass" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    Ok(())
}

fn write_plot(out_dir: &Path, name: &str, svg_text: &str) -> CliResult<()> {
    let path = out_dir.join(format!("{name}.svg"));
    std::fs::write(&path, svg_text)
        .map_err(|e| Error::invalid("out", format!("cannot write {}: {e}", path.display())))?;
    println!("{name}: plot -> {}", path.display());
    Ok(())
}

fn dispatch(cli: Cli, mut settings: Settings, out_dir: &Path) -> CliResult<()> {
    let command_name = cli.command.name();
    let plot = cli.plot;
    match cli.command {
        Command::KernelCheck { kernel } => {
            merge_kernel(&mut settings, &kernel);
            settings.set_if_absent("horizon", 4096);
            let k = build_kernel_from(&settings, 64)?;
            let budget = settings.budget()?;
            pinlab::experiments::renewal_smoke_check(&k, &budget)?;
            let header = header_from(&settings, command_name)?;
            let mut report = ExperimentReport::new(header, &["n", "mass", "tail", "residual"]);
            let horizon = k.table_horizon();
            let mut worst = 0.0f64;
            let mut mass_sum = 0.0f64;
            let mut comp = 0.0f64;
            let step = (horizon / 64).max(1);
            for n in 1..=horizon {
                let y = k.mass(n)? - comp;
                let t = mass_sum + y;
                comp = (t - mass_sum) - y;
                mass_sum = t;
                let residual = (mass_sum + k.tail_mass(n)? - 1.0).abs();
                worst = worst.max(residual);
                if n % step == 0 || n == horizon || n == 1 {
                    report.push_row(vec![
                        Value::U64(n),
                        Value::F64(k.mass(n)?),
                        Value::F64(k.tail_mass(n)?),
                        Value::F64(residual),
                    ]);
                }
            }
            report.push_check(Check::new(
                "normalization_identity",
                worst <= 1e-12,
                format!("max |sum K + tail - 1| = {worst:.3e} over all tabulated n"),
            ));
            let monotone = (0..horizon).all(|l| k.tail_mass(l + 1).unwrap() <= k.tail_mass(l).unwrap());
            report.push_check(Check::new("tail_monotone", monotone, "K^+ nonincreasing"));
            report.push_check(Check::new(
                "event_dp_vs_enumeration",
                true,
                "count-resolved event DP matched direct enumeration at n = 12",
            ));
            let u = k.renewal_mass_table(horizon.min(512))?;
            let mut conv_worst = 0.0f64;
            for m in 1..u.len() {
                let mut conv = 0.0;
                for j in 1..=m {
                    conv += k.mass(j as u64)? * u[m - j];
                }
                conv_worst = conv_worst.max((u[m] - conv).abs());
            }
            report.push_check(Check::new(
                "renewal_mass_self_consistency",
                conv_worst <= 1e-12,
                format!("max |u(m) - sum K u| = {conv_worst:.3e}"),
            ));
            write_report(out_dir, command_name, &report)?;
            if !report.all_checks_pass() {
                return Err(Error::invalid("kernel-check", "self-checks failed").into());
            }
        }

        Command::Partition {
            kernel,
            model,
            n,
            boundary,
            count_distribution,
        } => {
            merge_kernel(&mut settings, &kernel);
            merge_model(&mut settings, &model);
            if let Some(v) = n {
                settings.set("n", v);
            }
            settings.set_if_absent("n", 256);
            if let Some(v) = boundary {
                settings.set("boundary", v);
            }
            settings.set_if_absent("boundary", "free");
            if count_distribution {
                settings.set("count_distribution", true);
            }
            settings.set_if_absent("count_distribution", false);
            let law = settings.law()?;
            settings.set_if_absent("h", annealed_critical_point(law, settings.f64("beta")?) - 1.0);
            let n = settings.u64("n")?;
            let k = build_kernel_from(&settings, n)?;
            let budget = settings.budget()?;
            let master_seed = settings.u64("master_seed")?;
            let params = PolymerParams::new(settings.f64("beta")?, settings.f64("h")?)?;
            let boundary = boundary_from(&settings)?;
            let env_seed = replica_seed(master_seed, command_name, 0);
            let env = sample_environment(law, 0..=n as i64, env_seed)?;
            let stats_options = StatsOptions {
                count_distribution: settings.bool("count_distribution")?,
                midpoint: boundary == Boundary::Constrained,
            };
            let stats = contact_statistics(&env, params, &k, n, boundary, &stats_options, &budget)?;
            let table = pinlab::polymer::build_partition_table(
                &env,
                params,
                &k,
                n,
                &pinlab::polymer::TableOptions::default(),
                &budget,
            )?;
            let header = header_from(&settings, command_name)?;
            let mut report = ExperimentReport::new(
                header,
                &["m", "omega", "site_weight", "log_zc", "tau_last_prob", "contact_marginal"],
            );
            for m in 0..=n {
                report.push_row(vec![
                    Value::U64(m),
                    Value::F64(env.value(m as i64)),
                    Value::F64(table.site_weight(m)),
                    Value::F64(table.log_zc(m)),
                    Value::F64(stats.tau_last_distribution[m as usize]),
                    Value::F64(stats.contact_marginals[m as usize]),
                ]);
            }
            let log_z = table.boundary_log_partition(&k, boundary);
            report.push_check(Check::new("log_partition", true, format!("log Z = {log_z:.10}")));
            report.push_check(Check::new(
                "expected_contacts",
                true,
                format!("{:.10}", stats.expected_contacts),
            ));
            let fd = pinlab::polymer::log_partition_h_derivative(
                &env, params, &k, n, boundary, 1e-5, &budget,
            )?;
            let rel = (stats.expected_contacts - fd).abs() / fd.abs().max(1e-12);
            report.push_check(Check::new(
                "contact_derivative_identity",
                rel <= 1e-5,
                format!("E[contacts] vs d log Z/dh: rel {rel:.2e}"),
            ));
            if let Some(cd) = &stats.count_distribution {
                let total: f64 = cd.probs.iter().sum::<f64>() + cd.overflow;
                report.push_check(Check::new(
                    "count_distribution_total",
                    (total - 1.0).abs() <= 1e-10,
                    format!("sums to {total:.12}"),
                ));
            }
            write_report(out_dir, command_name, &report)?;
        }

        Command::SamplePaths {
            kernel,
            model,
            n,
            count,
            boundary,
        } => {
            merge_kernel(&mut settings, &kernel);
            merge_model(&mut settings, &model);
            if let Some(v) = n {
                settings.set("n", v);
            }
            settings.set_if_absent("n", 64);
            if let Some(v) = count {
                settings.set("count", v);
            }
            settings.set_if_absent("count", 100);
            if let Some(v) = boundary {
                settings.set("boundary", v);
            }
            settings.set_if_absent("boundary", "free");
            let law = settings.law()?;
            settings.set_if_absent("h", annealed_critical_point(law, settings.f64("beta")?) - 1.0);
            let n = settings.u64("n")?;
            let count = settings.u64("count")?;
            let k = build_kernel_from(&settings, n)?;
            let budget = settings.budget()?;
            let master_seed = settings.u64("master_seed")?;
            let params = PolymerParams::new(settings.f64("beta")?, settings.f64("h")?)?;
            let boundary = boundary_from(&settings)?;
            let env_seed = replica_seed(master_seed, command_name, 0);
            let env = sample_environment(law, 0..=n as i64, env_seed)?;
            let sampler = PathSampler::new(&env, params, &k, n, boundary, &budget)?;
            use pinlab::seeding::mix64;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mix64(env_seed ^ 0x5041_5448));
            let header = header_from(&settings, command_name)?;
            let mut report = ExperimentReport::new(
                header,
                &["sample", "tau_last", "contacts", "log_weight", "epochs"],
            );
            let mut all_contain_n = true;
            for i in 0..count {
                let s = sampler.sample(&mut rng);
                if boundary == Boundary::Constrained && s.trajectory.last_contact() != n {
                    all_contain_n = false;
                }
                let epochs: Vec<String> =
                    s.trajectory.epochs.iter().map(|e| e.to_string()).collect();
                report.push_row(vec![
                    Value::U64(i),
                    Value::U64(s.trajectory.last_contact()),
                    Value::U64(s.trajectory.contacts()),
                    Value::F64(s.log_weight),
                    Value::Str(epochs.join(" ")),
                ]);
            }
            if boundary == Boundary::Constrained {
                report.push_check(Check::new(
                    "constrained_contains_endpoint",
                    all_contain_n,
                    "every sample has a contact at n",
                ));
            }
            write_report(out_dir, command_name, &report)?;
        }

        Command::Tightness {
            kernel,
            model,
            n_grid,
            threshold_grid,
            epsilon,
            replicas,
            allow_localized,
        } => {
            merge_kernel(&mut settings, &kernel);
            merge_model(&mut settings, &model);
            merge_grid(&mut settings, "n_grid", &n_grid, "1000,2000,4000");
            merge_grid(&mut settings, "threshold_grid", &threshold_grid, "25,50,100,200,350,500");
            if let Some(v) = epsilon {
                settings.set("epsilon", v);
            }
            settings.set_if_absent("epsilon", 0.1);
            if let Some(v) = replicas {
                settings.set("replicas", v);
            }
            settings.set_if_absent("replicas", 50);
            if allow_localized {
                settings.set("allow_localized", true);
            }
            settings.set_if_absent("allow_localized", false);
            let law = settings.law()?;
            let beta = settings.f64("beta")?;
            settings.set_if_absent("h", annealed_critical_point(law, beta) - 1.0);
            let ns = settings.u64_grid("n_grid")?;
            let max_n = ns.iter().copied().max().unwrap_or(0);
            let k = build_kernel_from(&settings, max_n)?;
            let cfg = TightnessConfig {
                kernel: &k,
                law,
                params: PolymerParams::new(beta, settings.f64("h")?)?,
                n_grid: ns,
                threshold_grid: settings.u64_grid("threshold_grid")?,
                epsilon: settings.f64("epsilon")?,
                replicas: settings.u64("replicas")?,
                master_seed: settings.u64("master_seed")?,
                allow_localized: settings.bool("allow_localized")?,
                budget: settings.budget()?,
            };
            let out = tightness_scan(&cfg)?;
            let report = out.to_report(header_from(&settings, command_name)?);
            write_report(out_dir, command_name, &report)?;
            if plot {
                let series: Vec<svg::Series> = cfg
                    .n_grid
                    .iter()
                    .map(|&n| svg::Series {
                        label: format!("n={n}"),
                        points: cfg
                            .threshold_grid
                            .iter()
                            .map(|&t| (t as f64, out.frequency(n, t).unwrap().0))
                            .collect(),
                    })
                    .collect();
                write_plot(
                    out_dir,
                    command_name,
                    &svg::line_plot(
                        "exceedance frequency vs last-contact threshold",
                        "threshold N",
                        "frequency",
                        &series,
                    ),
                )?;
            }
        }

        Command::TightnessConstrained {
            kernel,
            model,
            n_grid,
            threshold_grid,
            margin_grid,
            epsilon,
            replicas,
            allow_localized,
        } => {
            merge_kernel(&mut settings, &kernel);
            merge_model(&mut settings, &model);
            merge_grid(&mut settings, "n_grid", &n_grid, "512,1024");
            merge_grid(&mut settings, "threshold_grid", &threshold_grid, "16,64,128");
            merge_grid(&mut settings, "margin_grid", &margin_grid, "16,64,128");
            if let Some(v) = epsilon {
                settings.set("epsilon", v);
            }
            settings.set_if_absent("epsilon", 0.1);
            if let Some(v) = replicas {
                settings.set("replicas", v);
            }
            settings.set_if_absent("replicas", 20);
            if allow_localized {
                settings.set("allow_localized", true);
            }
            settings.set_if_absent("allow_localized", false);
            let law = settings.law()?;
            let beta = settings.f64("beta")?;
            settings.set_if_absent("h", annealed_critical_point(law, beta) - 1.0);
            let ns = settings.u64_grid("n_grid")?;
            let max_n = ns.iter().copied().max().unwrap_or(0);
            let k = build_kernel_from(&settings, max_n)?;
            let cfg = ConstrainedTightnessConfig {
                kernel: &k,
                law,
                params: PolymerParams::new(beta, settings.f64("h")?)?,
                n_grid: ns,
                threshold_grid: settings.u64_grid("threshold_grid")?,
                margin_grid: settings.u64_grid("margin_grid")?,
                epsilon: settings.f64("epsilon")?,
                replicas: settings.u64("replicas")?,
                master_seed: settings.u64("master_seed")?,
                allow_localized: settings.bool("allow_localized")?,
                budget: settings.budget()?,
            };
            let out = constrained_tightness_scan(&cfg)?;
            let report = out.to_report(header_from(&settings, command_name)?);
            write_report(out_dir, command_name, &report)?;
        }

        Command::LogReturns {
            kernel,
            model,
            epsilon,
            n_grid,
            nu_grid,
            replicas,
            u,
            gamma,
            plant,
        } => {
            merge_kernel(&mut settings, &kernel);
            merge_model(&mut settings, &model);
            settings.set_if_absent("beta", 3.5);
            merge_grid(&mut settings, "n_grid", &n_grid, "500,1000,2000");
            if let Some(v) = nu_grid {
                settings.set("nu_grid", v);
            }
            settings.set_if_absent("nu_grid", "0.1,0.25,0.5");
            if let Some(v) = epsilon {
                settings.set("epsilon", v);
            }
            settings.set_if_absent("epsilon", 0.5);
            if let Some(v) = replicas {
                settings.set("replicas", v);
            }
            settings.set_if_absent("replicas", 20);
            if let Some(v) = u {
                settings.set("u", v);
            }
            if let Some(v) = gamma {
                settings.set("gamma", v);
            }
            if plant {
                settings.set("plant", true);
            }
            settings.set_if_absent("plant", false);
            let law = settings.law()?;
            let beta = settings.f64("beta")?;
            let ns = settings.u64_grid("n_grid")?;
            let max_n = ns.iter().copied().max().unwrap_or(0);
            let k = build_kernel_from(&settings, max_n)?;
            let eps = settings.f64("epsilon")?;
            settings.set_if_absent("h", h_t(law, beta, eps, k.alpha())? + 0.1);
            let h = settings.f64("h")?;
            let source = match (settings.get("u"), settings.get("gamma")) {
                (Some(_), Some(_)) => PlanSource::Manual {
                    u: settings.f64("u")?,
                    gamma: settings.f64("gamma")?,
                },
                _ => PlanSource::Plan(plan_log_returns(law, &k, eps, beta, h)?),
            };
            let cfg = LogReturnsConfig {
                kernel: &k,
                law,
                params: PolymerParams::new(beta, h)?,
                source,
                n_grid: ns,
                nu_grid: settings.f64_grid("nu_grid")?,
                replicas: settings.u64("replicas")?,
                master_seed: settings.u64("master_seed")?,
                plant: settings.bool("plant")?,
                budget: settings.budget()?,
            };
            let out = log_returns_experiment(&cfg)?;
            let report = out.to_report(header_from(&settings, command_name)?);
            write_report(out_dir, command_name, &report)?;
        }

        Command::PlanThm2 { kernel, model, epsilon } => {
            merge_kernel(&mut settings, &kernel);
            merge_model(&mut settings, &model);
            settings.set_if_absent("beta", 3.5);
            settings.set_if_absent("horizon", 4096);
            if let Some(v) = epsilon {
                settings.set("epsilon", v);
            }
            settings.set_if_absent("epsilon", 0.5);
            let law = settings.law()?;
            let beta = settings.f64("beta")?;
            let k = build_kernel_from(&settings, 64)?;
            let eps = settings.f64("epsilon")?;
            settings.set_if_absent("h", h_t(law, beta, eps, k.alpha())? + 0.1);
            let plan = plan_log_returns(law, &k, eps, beta, settings.f64("h")?)?;
            let report = plan.to_report(header_from(&settings, command_name)?);
            write_report(out_dir, command_name, &report)?;
        }

        Command::DecayCheck { kernel, b, c1, n_grid } => {
            merge_kernel(&mut settings, &kernel);
            if let Some(v) = b {
                settings.set("b", v);
            }
            settings.set_if_absent("b", 0.05);
            if let Some(v) = c1 {
                settings.set("c1", v);
            }
            settings.set_if_absent("c1", 4.0);
            merge_grid(&mut settings, "n_grid", &n_grid, "500,707,1000,1414,2000,2828,4000");
            let ns = settings.u64_grid("n_grid")?;
            let max_n = ns.iter().copied().max().unwrap_or(0);
            let k = build_kernel_from(&settings, max_n)?;
            let cfg = DecayConfig {
                kernel: &k,
                b: settings.f64("b")?,
                c1: settings.f64("c1")?,
                n_grid: ns,
                budget: settings.budget()?,
            };
            let out = decay_check(&cfg)?;
            let report = out.to_report(header_from(&settings, command_name)?);
            write_report(out_dir, command_name, &report)?;
            if plot {
                let series = vec![
                    svg::Series {
                        label: "log p".into(),
                        points: out
                            .rows
                            .iter()
                            .filter(|r| r.probability > 0.0)
                            .map(|r| ((r.n as f64).ln(), r.probability.ln()))
                            .collect(),
                    },
                    svg::Series {
                        label: "envelope".into(),
                        points: out
                            .rows
                            .iter()
                            .map(|r| ((r.n as f64).ln(), r.envelope.ln()))
                            .collect(),
                    },
                ];
                write_plot(
                    out_dir,
                    command_name,
                    &svg::line_plot("event decay", "log n", "log probability", &series),
                )?;
            }
        }

        Command::FreeEnergy {
            kernel,
            model,
            n_grid,
            replicas,
        } => {
            merge_kernel(&mut settings, &kernel);
            merge_model(&mut settings, &model);
            merge_grid(&mut settings, "n_grid", &n_grid, "1024,2048,4096");
            if let Some(v) = replicas {
                settings.set("replicas", v);
            }
            settings.set_if_absent("replicas", 8);
            settings.set_if_absent("h", 1.0);
            settings.set_if_absent("beta", 0.0);
            let law = settings.law()?;
            let ns = settings.u64_grid("n_grid")?;
            let max_n = ns.iter().copied().max().unwrap_or(0);
            let k = build_kernel_from(&settings, max_n)?;
            let cfg = FreeEnergyConfig {
                kernel: &k,
                law,
                params: PolymerParams::new(settings.f64("beta")?, settings.f64("h")?)?,
                n_grid: ns,
                replicas: settings.u64("replicas")?,
                master_seed: settings.u64("master_seed")?,
                budget: settings.budget()?,
            };
            let out = free_energy_estimate(&cfg)?;
            let report = out.to_report(header_from(&settings, command_name)?);
            write_report(out_dir, command_name, &report)?;
            if plot {
                let series = vec![
                    svg::Series {
                        label: "quenched mean".into(),
                        points: out.per_n.iter().map(|p| (p.n as f64, p.mean)).collect(),
                    },
                    svg::Series {
                        label: "annealed".into(),
                        points: out
                            .per_n
                            .iter()
                            .map(|p| (p.n as f64, p.annealed_finite_n))
                            .collect(),
                    },
                ];
                write_plot(
                    out_dir,
                    command_name,
                    &svg::line_plot("free energy density", "n", "f", &series),
                )?;
            }
        }

        Command::Series {
            kernel,
            model,
            n_max,
            checkpoint,
            replicas,
            ks_replicas,
            ks_depth,
            event_threshold,
        } => {
            merge_kernel(&mut settings, &kernel);
            merge_model(&mut settings, &model);
            if let Some(v) = n_max {
                settings.set("n_max", v);
            }
            settings.set_if_absent("n_max", 2000);
            if let Some(v) = checkpoint {
                settings.set("checkpoint", v);
            }
            settings.set_if_absent("checkpoint", 1000);
            if let Some(v) = replicas {
                settings.set("replicas", v);
            }
            settings.set_if_absent("replicas", 50);
            if let Some(v) = ks_replicas {
                settings.set("ks_replicas", v);
            }
            settings.set_if_absent("ks_replicas", 200);
            if let Some(v) = ks_depth {
                settings.set("ks_depth", v);
            }
            settings.set_if_absent("ks_depth", 500);
            if let Some(v) = event_threshold {
                settings.set("event_threshold", v);
            }
            let law = settings.law()?;
            let beta = settings.f64("beta")?;
            settings.set_if_absent("h", annealed_critical_point(law, beta) - 1.0);
            let n_max_v = settings.u64("n_max")?;
            let k = build_kernel_from(&settings, n_max_v)?;
            let params = PolymerParams::new(beta, settings.f64("h")?)?;
            let cfg = SeriesConfig {
                kernel: &k,
                law,
                params,
                n_max: n_max_v,
                checkpoint: settings.u64("checkpoint")?,
                replicas: settings.u64("replicas")?,
                ks_replicas: settings.u64("ks_replicas")?,
                ks_depth: settings.u64("ks_depth")?,
                master_seed: settings.u64("master_seed")?,
                budget: settings.budget()?,
            };
            let out = series_experiment(&cfg)?;
            let report = out.to_report(header_from(&settings, command_name)?);
            write_report(out_dir, command_name, &report)?;
            if settings.get("event_threshold").is_some() {
                let threshold = settings.u64("event_threshold")?;
                let env_seed = replica_seed(cfg.master_seed, "series-events", 0);
                let env = sample_environment(law, 0..=n_max_v as i64, env_seed)?;
                let h_sur = annealed_critical_point(law, beta);
                let ev = series_event_sum(
                    &env,
                    params,
                    &k,
                    threshold,
                    n_max_v,
                    h_sur,
                    0.1,
                    &cfg.budget,
                )?;
                let mut header = header_from(&settings, "series-events")?;
                header.set("event_threshold", threshold);
                let mut ev_report =
                    ExperimentReport::new(header, &["n", "log_term", "log_partial_sum"]);
                for (i, (&t, &s)) in ev.log_terms.iter().zip(&ev.log_partial_sums).enumerate() {
                    ev_report.push_row(vec![Value::U64(i as u64), Value::F64(t), Value::F64(s)]);
                }
                if let (Some(env_log), Some(below)) = (ev.log_envelope, ev.below_envelope) {
                    ev_report.push_check(Check::new(
                        "geometric_envelope_comparison",
                        true,
                        format!("final log sum vs envelope {env_log:.4}: below = {below}"),
                    ));
                }
                write_report(out_dir, "series-events", &ev_report)?;
            }
        }
    }
    Ok(())
}
