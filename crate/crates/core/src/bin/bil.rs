use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use bil::capacity::{delta, region};
use bil::config::{Channels, ExperimentConfig};
use bil::error::{ConfigError, SchemeError};
use bil::gn::{delta_gdof, gdof, gn_region, separability, GdofProfile};
use bil::harness::{default_margin, estimate_rates, verify_against_region};
use bil::report::{region_svg, rows_to_csv, rows_to_json, ReportRow};
use bil::scalar::{format_rational, int, Scalar};

#[derive(Parser)]
#[command(name = "bil", version, about = "Capacity regions and scheme simulations for bursty-interference parallel channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the capacity region (LD) or outer bound (GN) as JSON, CSV and SVG.
    Region(Args),
    /// Tabulate the symmetric GDoF of a β profile for each configured p.
    Gdof(Args),
    /// Run the configured scheme and compare against its formula and region.
    Simulate(Args),
    /// Report separability and the fractional partition of the state distribution.
    Check(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
}

enum Failure {
    Gap(String),
    Config(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Gap(_) => 1,
            Failure::Config(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Gap(m) | Failure::Config(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SchemeError> for Failure {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::Precondition(_) | SchemeError::State(_) => Failure::Config(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    std::fs::write(dir.join(name), contents).map_err(|e| Failure::Config(format!("writing {name}: {e}")))
}

fn json_text(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

fn load(args: &Args) -> Result<ExperimentConfig, Failure> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(Failure::Config("--trials must be positive".into()));
        }
        config.trials = trials;
    }
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Config(format!("creating {}: {e}", args.out.display())))?;
    Ok(config)
}

fn cmd_region(args: &Args) -> Result<(), Failure> {
    let config = load(args)?;
    let p = config.single_p()?;
    let (json, csv, svg) = match &config.channels {
        Channels::Ld(cfgs) => {
            let r = region(cfgs, p);
            let title = format!("capacity region, p = {}, Δ = {}", format_rational(p), delta(cfgs));
            (r.to_json(), r.to_csv(), region_svg(&r, &title))
        }
        Channels::Gn(gains) => {
            let r = gn_region(gains, p.to_f64());
            let title = format!("outer bound, p = {}", format_rational(p));
            (r.to_json(), r.to_csv(), region_svg(&r, &title))
        }
        Channels::Betas(_) => return Err(Failure::Config("region needs `subcarriers` or `gains`".into())),
    };
    write(&args.out, "region.json", &json_text(&json))?;
    write(&args.out, "region.csv", &csv)?;
    write(&args.out, "region.svg", &svg)?;
    println!("wrote region.json, region.csv, region.svg to {}", args.out.display());
    Ok(())
}

fn cmd_gdof(args: &Args) -> Result<(), Failure> {
    let config = load(args)?;
    let Channels::Betas(betas) = &config.channels else {
        return Err(Failure::Config("gdof needs `betas`".into()));
    };
    let mut rows = Vec::new();
    let mut csv = String::from("p,gdof,gdof_decimal,delta,separability\n");
    for p in &config.p {
        let profile = GdofProfile::new(betas.clone(), p.clone()).map_err(Failure::Config)?;
        let d = gdof(&profile);
        let sep = separability(betas, p);
        let dg = delta_gdof(betas);
        csv += &format!(
            "{},{},{:.6},{},{}\n",
            format_rational(p),
            format_rational(&d),
            d.to_f64(),
            format_rational(&dg),
            sep.as_str()
        );
        println!("p = {:>7}  gdof = {:>9} ({:.6})", format_rational(p), format_rational(&d), d.to_f64());
        rows.push(json!({
            "p": format_rational(p),
            "gdof": format_rational(&d),
            "delta": format_rational(&dg),
            "separability": sep.as_str(),
        }));
    }
    let betas: Vec<String> = betas.iter().map(format_rational).collect();
    write(&args.out, "gdof.json", &json_text(&json!({"betas": betas, "rows": rows})))?;
    write(&args.out, "gdof.csv", &csv)?;
    Ok(())
}

fn cmd_simulate(args: &Args) -> Result<(), Failure> {
    let config = load(args)?;
    let spec = config.scheme_spec()?;
    let cfgs = spec.cfgs();
    let est = estimate_rates(&spec, config.trials, config.seed)?;
    let margin = config.margin.clone().unwrap_or_else(|| default_margin(&cfgs));
    let check = verify_against_region(est.mean, &region(&cfgs, &spec.p()), &margin);
    let row = ReportRow::new(&spec, &est, &check, config.tolerance.to_f64());
    let rows = [row];
    write(&args.out, "report.csv", &rows_to_csv(&rows))?;
    let trials: Vec<_> = est
        .trials
        .iter()
        .map(|t| json!({"seed": t.seed, "slots": t.slots, "delivered": t.delivered, "rates": t.rates}))
        .collect();
    let slacks: Vec<_> = check.slacks.iter().map(|(l, s)| json!({"label": l, "slack": s})).collect();
    let report = json!({
        "rows": rows_to_json(&rows),
        "trials": trials,
        "region_check": {"passed": check.passed, "shrunk": check.shrunk, "slacks": slacks, "violated": check.violated},
        "margin": format_rational(&margin),
        "seed": config.seed,
    });
    write(&args.out, "report.json", &json_text(&report))?;
    let r = &rows[0];
    println!(
        "{} mean ({:.4}, {:.4}) ± {:.4}, formula ({}, {}), gap {:.4}: {}",
        r.scheme, r.mean_r1, r.mean_r2, r.ci, r.formula_r1, r.formula_r2, r.gap, r.verdict
    );
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Gap(format!("gap {:.4} or region check failed", r.gap)))
    }
}

fn cmd_check(args: &Args) -> Result<(), Failure> {
    let config = load(args)?;
    let p = config.single_p()?;
    let (ratios, m) = match &config.channels {
        Channels::Ld(cfgs) => (
            cfgs.iter().map(|c| int(c.k() as i64) / int(c.n() as i64)).collect::<Vec<_>>(),
            cfgs.len(),
        ),
        Channels::Betas(b) => (b.clone(), b.len()),
        Channels::Gn(_) => return Err(Failure::Config("check needs `subcarriers` or `betas`".into())),
    };
    let sep = separability(&ratios, p);
    let dist = config.distribution_for(m)?;
    let partition = dist.fractional_partition().map_err(|e| Failure::Config(e.to_string()))?;
    let out = json!({
        "separability": sep.as_str(),
        "ratios": ratios.iter().map(format_rational).collect::<Vec<_>>(),
        "p": format_rational(p),
        "distribution": dist.to_json(),
        "partition": partition.to_json(),
        "partition_valid": partition.is_valid(),
    });
    write(&args.out, "check.json", &json_text(&out))?;
    println!("separability: {}", sep.as_str());
    println!("fractional partition valid: {}", partition.is_valid());
    if partition.is_valid() {
        Ok(())
    } else {
        Err(Failure::Gap(format!(
            "partition does not cover subcarriers {:?}",
            partition.failing_subcarriers()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Region(a) => cmd_region(a),
        Command::Gdof(a) => cmd_gdof(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bil: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
