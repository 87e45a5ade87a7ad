//! Parameter sweeps: the four experiment presets, seeded execution, CSV and
//! gnuplot output.
//!
//! Runs are independent units of work and execute in parallel; rows are
//! sorted by (value, hosts, seed) before writing, so the output is a pure
//! function of the sweep specification.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{access_method_label, ScenarioConfig};
use crate::error::{ConfigError, SimError};
use crate::metrics::{effective_data_rate, packet_loss_rate, rtt_summary, RunMetrics};
use crate::sim::run_scenario;

pub const DEFAULT_HOSTS: [u16; 6] = [5, 10, 15, 20, 25, 30];
pub const DEFAULT_SEEDS: u64 = 5;

#[derive(Debug)]
pub enum SweepError {
    Config(ConfigError),
    Sim(SimError),
    Io(std::io::Error),
}

impl std::fmt::Display for SweepError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepError::Config(e) => write!(f, "config error: {e}"),
            SweepError::Sim(e) => write!(f, "simulation error: {e}"),
            SweepError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for SweepError {}

impl From<ConfigError> for SweepError {
    fn from(e: ConfigError) -> Self {
        SweepError::Config(e)
    }
}
impl From<SimError> for SweepError {
    fn from(e: SimError) -> Self {
        SweepError::Sim(e)
    }
}
impl From<std::io::Error> for SweepError {
    fn from(e: std::io::Error) -> Self {
        SweepError::Io(e)
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub label: String,
    pub base: ScenarioConfig,
    /// Config key the sweep varies.
    pub key: String,
    /// Values for `key`, in plot order, as config-file literals.
    pub values: Vec<String>,
    pub hosts: Vec<u16>,
    pub seeds: u64,
}

impl SweepSpec {
    pub fn new(label: &str, key: &str, values: &[&str]) -> Self {
        SweepSpec {
            label: label.to_string(),
            base: ScenarioConfig::default(),
            key: key.to_string(),
            values: values.iter().map(|v| v.to_string()).collect(),
            hosts: DEFAULT_HOSTS.to_vec(),
            seeds: DEFAULT_SEEDS,
        }
    }

    /// The four standard sweep presets; unset parameters keep their defaults.
    pub fn preset(name: &str) -> Option<SweepSpec> {
        match name {
            "fig4" => Some(SweepSpec::new(
                "fig4",
                "payload_bytes",
                &["64", "128", "256", "512", "1024"],
            )),
            "fig5" => Some(SweepSpec::new(
                "fig5",
                "interval_s",
                &["0.05", "0.1", "0.25", "0.5", "1"],
            )),
            "fig6" => Some(SweepSpec::new(
                "fig6",
                "bitrate_bps",
                &["1000000", "2000000", "5500000", "11000000"],
            )),
            "fig7" => Some(SweepSpec::new(
                "fig7",
                "cw_min",
                &["7", "15", "31", "63", "127"],
            )),
            _ => None,
        }
    }

    fn cell_config(
        &self,
        value: &str,
        hosts: u16,
        seed: u64,
    ) -> Result<ScenarioConfig, ConfigError> {
        let doc = format!(
            "{} = {}\nn_hosts = {}\nseed = {}\n",
            self.key, value, hosts, seed
        );
        let mut cfg = self.base.clone();
        crate::config::merge_into(&mut cfg, &doc)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub run_id: String,
    pub value: String,
    pub value_index: usize,
    pub cfg: ScenarioConfig,
    pub metrics: RunMetrics,
}

impl SweepRow {
    pub fn loss_rate(&self) -> f64 {
        packet_loss_rate(&self.metrics).unwrap_or(f64::NAN)
    }

    pub fn eff_rate_bps(&self) -> f64 {
        effective_data_rate(&self.metrics, self.cfg.payload_bytes).unwrap_or(f64::NAN)
    }
}

/// Renders a float with `sig` significant digits, plain decimal notation.
pub fn fmt_sig(x: f64, sig: i32) -> String {
    if !x.is_finite() {
        return "nan".to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (sig - 1 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

pub const CSV_HEADER: &str = "run_id,seed,n_hosts,payload_bytes,interval_s,bitrate_bps,cw_min,access_method,sent,delivered,dropped,loss_rate,eff_data_rate_bps,rtt_mean_us,rtt_p50_us,rtt_p95_us,duration_s";

pub fn csv_row(row: &SweepRow) -> String {
    let m = &row.metrics;
    let cfg = &row.cfg;
    let rtt = rtt_summary(m);
    let (mean, p50, p95) = match rtt {
        Some(s) => (
            fmt_sig(s.mean_ns / 1_000.0, 6),
            fmt_sig(s.p50_ns as f64 / 1_000.0, 6),
            fmt_sig(s.p95_ns as f64 / 1_000.0, 6),
        ),
        None => ("nan".into(), "nan".into(), "nan".into()),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        row.run_id,
        cfg.seed,
        cfg.n_hosts,
        cfg.payload_bytes,
        fmt_sig(cfg.interval_s, 6),
        cfg.data_bitrate_bps,
        cfg.cw_min,
        access_method_label(cfg.access_method),
        m.sent_total,
        m.delivered_total,
        m.dropped_total(),
        fmt_sig(row.loss_rate(), 6),
        fmt_sig(row.eff_rate_bps(), 6),
        mean,
        p50,
        p95,
        fmt_sig(m.duration_s(), 6),
    )
}

/// Executes every (value, hosts, seed) cell of the sweep, in parallel, and
/// returns rows in canonical order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    let mut cells = Vec::new();
    for (vi, value) in spec.values.iter().enumerate() {
        for &hosts in &spec.hosts {
            for seed in 1..=spec.seeds {
                cells.push((vi, value.clone(), hosts, seed));
            }
        }
    }
    let mut rows = cells
        .into_par_iter()
        .map(|(vi, value, hosts, seed)| -> Result<SweepRow, SweepError> {
            let cfg = spec.cell_config(&value, hosts, seed)?;
            let metrics = run_scenario(&cfg)?;
            let run_id = format!("{}-{}{}-n{}-s{}", spec.label, spec.key, value, hosts, seed);
            Ok(SweepRow {
                run_id,
                value,
                value_index: vi,
                cfg,
                metrics,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| {
        (a.value_index, a.cfg.n_hosts, a.cfg.seed).cmp(&(b.value_index, b.cfg.n_hosts, b.cfg.seed))
    });
    Ok(rows)
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<(), SweepError> {
    let mut out = String::with_capacity(rows.len() * 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&csv_row(row));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Gnuplot-consumable data file: rows grouped into index blocks by the varied
/// value, two blank lines between blocks.
pub fn write_gnuplot(spec: &SweepSpec, rows: &[SweepRow], path: &Path) -> Result<(), SweepError> {
    let mut out = String::new();
    for (vi, value) in spec.values.iter().enumerate() {
        if vi > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {} = {}", spec.key, value);
        let _ = writeln!(out, "# n_hosts seed eff_data_rate_bps loss_rate rtt_p50_us");
        for row in rows.iter().filter(|r| r.value_index == vi) {
            let p50 = rtt_summary(&row.metrics)
                .map(|s| fmt_sig(s.p50_ns as f64 / 1_000.0, 6))
                .unwrap_or_else(|| "nan".into());
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                row.cfg.n_hosts,
                row.cfg.seed,
                fmt_sig(row.eff_rate_bps(), 6),
                fmt_sig(row.loss_rate(), 6),
                p50
            );
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Median over an odd or even number of f64 samples (mean of middle pair).
pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(|a, b| a.partial_cmp(b).expect("NaN in median input"));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_exist_with_expected_axes() {
        let f4 = SweepSpec::preset("fig4").unwrap();
        assert_eq!(f4.key, "payload_bytes");
        assert_eq!(f4.values.len(), 5);
        let f6 = SweepSpec::preset("fig6").unwrap();
        assert_eq!(f6.values.len(), 4);
        assert!(SweepSpec::preset("fig9").is_none());
    }

    #[test]
    fn sweep_cardinality_matches_grid() {
        // tiny grid so the test stays fast: 2 values x 1 host count x 2 seeds
        let mut spec = SweepSpec::new("t", "payload_bytes", &["64", "128"]);
        spec.hosts = vec![2];
        spec.seeds = 2;
        spec.base.packets_per_host = 5;
        spec.base.interval_s = 0.01;
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.windows(2).all(|w| {
            (w[0].value_index, w[0].cfg.n_hosts, w[0].cfg.seed)
                <= (w[1].value_index, w[1].cfg.n_hosts, w[1].cfg.seed)
        }));
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(389_120.0, 6), "389120");
        assert_eq!(fmt_sig(0.05, 6), "0.0500000");
        assert_eq!(fmt_sig(10_864.0, 6), "10864.0");
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(f64::NAN, 6), "nan");
    }

    #[test]
    fn median_of_samples() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn gnuplot_file_groups_rows_into_index_blocks() {
        let mut spec = SweepSpec::new("t", "payload_bytes", &["64", "128"]);
        spec.hosts = vec![2];
        spec.seeds = 1;
        spec.base.packets_per_host = 3;
        spec.base.interval_s = 0.01;
        let rows = run_sweep(&spec).unwrap();
        let path = std::env::temp_dir().join("dcfsim_gnuplot_test.dat");
        write_gnuplot(&spec, &rows, &path).unwrap();
        let body = fs::read_to_string(&path).unwrap();
        fs::remove_file(&path).ok();
        assert!(body.contains("# payload_bytes = 64"));
        assert!(body.contains("# payload_bytes = 128"));
        assert!(
            body.contains("\n\n\n"),
            "blocks must be blank-line separated"
        );
    }
}
