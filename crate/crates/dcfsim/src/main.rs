use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dcfsim::config::{merge_into, ScenarioConfig};
use dcfsim::metrics::{effective_data_rate, packet_loss_rate, rtt_summary};
use dcfsim::oracle::{compare, slot_oracle, SlotModel};
use dcfsim::sweep::{self, csv_row, fmt_sig, run_sweep, SweepRow, SweepSpec, CSV_HEADER};
use dcfsim::{run_full, saturated_throughput_bps, RunOptions};

#[derive(Parser)]
#[command(
    name = "dcfsim",
    about = "802.11b DCF WLAN discrete-event simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and report its metrics.
    Run(RunArgs),
    /// Run a parameter sweep and write CSV + gnuplot data files.
    Sweep(SweepArgs),
    /// Cross-validate the engine against the slot-synchronous saturation
    /// oracle; exits nonzero on disagreement.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (key = value lines; empty file = defaults).
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the run as a CSV row (with header) to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the per-transmission channel trace to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the per-station MAC transition trace to this path.
    #[arg(long)]
    mac_trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment preset: fig4 (payload), fig5 (interval), fig6 (bitrate),
    /// fig7 (CWmin).
    #[arg(long, conflicts_with = "vary")]
    preset: Option<String>,
    /// Custom axis, e.g. --vary payload_bytes=64,256,1024
    #[arg(long)]
    vary: Option<String>,
    /// Host counts, comma separated (default 5,10,15,20,25,30).
    #[arg(long)]
    hosts: Option<String>,
    /// Seeds per cell, numbered 1..=K (default 5).
    #[arg(long)]
    seeds: Option<u64>,
    /// Output directory for <label>.csv and <label>.dat.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Relative tolerance for engine/oracle agreement.
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    /// Master seed for both models.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn config_fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn sim_fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("internal contract violation: {msg}");
    ExitCode::from(2)
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return config_fail(format!("{}: {e}", args.config.display())),
    };
    let mut cfg = ScenarioConfig::default();
    if let Err(e) = merge_into(&mut cfg, &text) {
        return config_fail(format!("{}: {e}", args.config.display()));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let opts = RunOptions {
        collect_tx_trace: args.trace.is_some(),
        collect_mac_trace: args.mac_trace.is_some(),
    };
    let out = match run_full(&cfg, opts) {
        Ok(o) => o,
        Err(e) => return sim_fail(e),
    };
    let m = &out.metrics;
    let loss = packet_loss_rate(m).unwrap_or(f64::NAN);
    let rate = effective_data_rate(m, cfg.payload_bytes).unwrap_or(f64::NAN);
    println!(
        "n_hosts={} payload={}B interval={}s bitrate={}bps cw_min={} seed={}",
        cfg.n_hosts, cfg.payload_bytes, cfg.interval_s, cfg.data_bitrate_bps, cfg.cw_min, cfg.seed
    );
    println!(
        "sent={} delivered={} dropped={} loss_rate={} eff_data_rate={} bits/s duration={}s",
        m.sent_total,
        m.delivered_total,
        m.dropped_total(),
        fmt_sig(loss, 6),
        fmt_sig(rate, 6),
        fmt_sig(m.duration_s(), 6)
    );
    match rtt_summary(m) {
        Some(s) => println!(
            "rtt mean={}us p50={}us p95={}us max={}us over {} samples",
            fmt_sig(s.mean_ns / 1e3, 6),
            fmt_sig(s.p50_ns as f64 / 1e3, 6),
            fmt_sig(s.p95_ns as f64 / 1e3, 6),
            fmt_sig(s.max_ns as f64 / 1e3, 6),
            m.rtt_samples.len()
        ),
        None => println!("rtt: no data"),
    }
    if let Some(path) = args.csv {
        let row = SweepRow {
            run_id: format!("run-n{}-s{}", cfg.n_hosts, cfg.seed),
            value: String::new(),
            value_index: 0,
            cfg: cfg.clone(),
            metrics: m.clone(),
        };
        let body = format!("{CSV_HEADER}\n{}\n", csv_row(&row));
        if let Err(e) = fs::write(&path, body) {
            return config_fail(format!("{}: {e}", path.display()));
        }
    }
    if let (Some(path), Some(trace)) = (args.trace, out.tx_trace.as_ref()) {
        let body: String = trace.iter().map(|r| r.line() + "\n").collect();
        if let Err(e) = fs::write(&path, body) {
            return config_fail(format!("{}: {e}", path.display()));
        }
    }
    if let (Some(path), Some(trace)) = (args.mac_trace, out.mac_trace.as_ref()) {
        let body: String = trace.iter().map(|r| r.clone() + "\n").collect();
        if let Err(e) = fs::write(&path, body) {
            return config_fail(format!("{}: {e}", path.display()));
        }
    }
    ExitCode::SUCCESS
}

fn parse_hosts(s: &str) -> Result<Vec<u16>, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<u16>()
                .map_err(|_| format!("bad host count '{v}'"))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    let mut spec = match (&args.preset, &args.vary) {
        (Some(name), None) => match SweepSpec::preset(name) {
            Some(s) => s,
            None => return config_fail(format!("unknown preset '{name}' (fig4|fig5|fig6|fig7)")),
        },
        (None, Some(vary)) => {
            let Some((key, values)) = vary.split_once('=') else {
                return config_fail("--vary expects KEY=V1,V2,...");
            };
            let values: Vec<&str> = values.split(',').map(|v| v.trim()).collect();
            if values.is_empty() {
                return config_fail("--vary needs at least one value");
            }
            SweepSpec::new(key.trim(), key.trim(), &values)
        }
        _ => return config_fail("exactly one of --preset or --vary is required"),
    };
    if let Some(hosts) = &args.hosts {
        spec.hosts = match parse_hosts(hosts) {
            Ok(h) if !h.is_empty() => h,
            Ok(_) => return config_fail("--hosts needs at least one value"),
            Err(e) => return config_fail(e),
        };
    }
    if let Some(seeds) = args.seeds {
        if seeds == 0 {
            return config_fail("--seeds must be >= 1");
        }
        spec.seeds = seeds;
    }
    if let Err(e) = fs::create_dir_all(&args.out) {
        return config_fail(format!("{}: {e}", args.out.display()));
    }
    eprintln!(
        "sweep {}: {} values x {} host counts x {} seeds = {} runs",
        spec.label,
        spec.values.len(),
        spec.hosts.len(),
        spec.seeds,
        spec.values.len() * spec.hosts.len() * spec.seeds as usize
    );
    let rows = match run_sweep(&spec) {
        Ok(r) => r,
        Err(sweep::SweepError::Config(e)) => return config_fail(e),
        Err(sweep::SweepError::Sim(e)) => return sim_fail(e),
        Err(sweep::SweepError::Io(e)) => return config_fail(e),
    };
    let csv_path = args.out.join(format!("{}.csv", spec.label));
    let dat_path = args.out.join(format!("{}.dat", spec.label));
    if let Err(e) = sweep::write_csv(&rows, &csv_path) {
        return config_fail(e);
    }
    if let Err(e) = sweep::write_gnuplot(&spec, &rows, &dat_path) {
        return config_fail(e);
    }
    println!(
        "{} rows -> {} and {}",
        rows.len(),
        csv_path.display(),
        dat_path.display()
    );
    ExitCode::SUCCESS
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    const HORIZON_SLOTS: u64 = 2_000_000;
    println!(
        "saturated basic-access throughput, engine vs slot oracle (tol {})",
        args.tol
    );
    println!(
        "{:>4} {:>14} {:>14} {:>8} {:>6}",
        "n", "engine b/s", "oracle b/s", "rel_err", ""
    );
    let mut all_pass = true;
    for n in [2u16, 5, 10] {
        let cfg = ScenarioConfig {
            n_hosts: n,
            seed: args.seed,
            ..ScenarioConfig::default()
        };
        let horizon_ns = HORIZON_SLOTS * cfg.mac_params().slot_ns;
        let engine = match saturated_throughput_bps(&cfg, horizon_ns) {
            Ok(v) => v,
            Err(e) => return sim_fail(e),
        };
        let model = SlotModel::from_config(&cfg, HORIZON_SLOTS);
        let oracle = slot_oracle(&model, args.seed);
        let report = compare(engine, oracle.throughput_bps, args.tol);
        println!(
            "{:>4} {:>14} {:>14} {:>8} {:>6}",
            n,
            fmt_sig(report.engine_bps, 6),
            fmt_sig(report.oracle_bps, 6),
            fmt_sig(report.rel_err, 3),
            if report.pass { "pass" } else { "FAIL" }
        );
        all_pass &= report.pass;
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
