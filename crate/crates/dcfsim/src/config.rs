//! Scenario configuration: defaults, the line-oriented `key = value` config
//! format, and validation.

use crate::error::ConfigError;
use crate::frame::MAC_MTU_BYTES;
use crate::mac::{AccessMethod, MacParams};
use crate::station::MobilityParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RttMode {
    /// Application echo: request host -> AP -> dest, reply back; RTT measured
    /// at the originator from request enqueue to reply delivery.
    Ping,
    /// RTT measured from request enqueue to the first-hop MAC ACK.
    MacAck,
}

/// Which offered-packet population the loss-rate denominator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossDenominator {
    /// Host-originated requests and replies only (default).
    HostPackets,
    /// Additionally count each AP relay hop as an offered packet.
    AllHops,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub n_hosts: u16,
    pub payload_bytes: u32,
    pub interval_s: f64,
    pub data_bitrate_bps: u64,
    pub basic_rate_bps: u64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u32,
    pub access_method: AccessMethod,
    pub queue_capacity: usize,
    pub rtt_mode: RttMode,
    pub loss_denominator: LossDenominator,
    pub packets_per_host: u32,
    pub max_sim_time_s: f64,
    pub seed: u64,
    pub slot_us: u64,
    pub sifs_us: u64,
    pub difs_us: u64,
    pub phy_header_bits: u32,
    pub mac_header_bits: u32,
    pub ack_bits: u32,
    pub cts_bits: u32,
    pub rts_bits: u32,
    pub ack_timeout_extra_us: u64,
    pub use_eifs: bool,
    // radio parameters carried for fidelity and logging; reception is gated
    // only by collisions since every node is in range of every other
    pub playground_m: f64,
    pub transmission_range_m: f64,
    pub tx_power_mw: f64,
    pub carrier_freq_ghz: f64,
    pub carrier_sense_dbm: f64,
    pub speed_mean_mps: f64,
    pub speed_std_mps: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_hosts: 10,
            payload_bytes: 512,
            interval_s: 0.1,
            data_bitrate_bps: 2_000_000,
            basic_rate_bps: 1_000_000,
            cw_min: 31,
            cw_max: 1023,
            retry_limit: 7,
            access_method: AccessMethod::Basic,
            queue_capacity: 50,
            rtt_mode: RttMode::Ping,
            loss_denominator: LossDenominator::HostPackets,
            packets_per_host: 500,
            max_sim_time_s: 1000.0,
            seed: 1,
            slot_us: 20,
            sifs_us: 10,
            difs_us: 50,
            phy_header_bits: 192,
            mac_header_bits: 224,
            ack_bits: 112,
            cts_bits: 112,
            rts_bits: 160,
            ack_timeout_extra_us: 20,
            use_eifs: false,
            playground_m: 200.0,
            transmission_range_m: 300.0,
            tx_power_mw: 9.0,
            carrier_freq_ghz: 2.4,
            carrier_sense_dbm: -85.0,
            speed_mean_mps: 20.0,
            speed_std_mps: 8.0,
        }
    }
}

impl ScenarioConfig {
    pub fn mac_params(&self) -> MacParams {
        MacParams {
            slot_ns: self.slot_us * 1_000,
            sifs_ns: self.sifs_us * 1_000,
            difs_ns: self.difs_us * 1_000,
            cw_min: self.cw_min,
            cw_max: self.cw_max,
            retry_limit: self.retry_limit,
            phy_header_bits: self.phy_header_bits,
            mac_header_bits: self.mac_header_bits,
            ack_bits: self.ack_bits,
            cts_bits: self.cts_bits,
            rts_bits: self.rts_bits,
            data_bitrate_bps: self.data_bitrate_bps,
            basic_rate_bps: self.basic_rate_bps,
            access_method: self.access_method,
            ack_timeout_extra_ns: self.ack_timeout_extra_us * 1_000,
            use_eifs: self.use_eifs,
        }
    }

    pub fn mobility_params(&self) -> MobilityParams {
        MobilityParams {
            playground_m: self.playground_m,
            speed_mean_mps: self.speed_mean_mps,
            speed_std_mps: self.speed_std_mps,
        }
    }

    pub fn interval_ns(&self) -> u64 {
        (self.interval_s * 1e9).round() as u64
    }

    pub fn max_sim_time_ns(&self) -> u64 {
        (self.max_sim_time_s * 1e9).round() as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn pow2m1(v: u32) -> bool {
            (v + 1).is_power_of_two()
        }
        let err = |m: String| Err(ConfigError::Invalid(m));
        if self.n_hosts < 2 {
            return err(format!("n_hosts must be >= 2, got {}", self.n_hosts));
        }
        if self.payload_bytes == 0 || self.payload_bytes > MAC_MTU_BYTES {
            return err(format!(
                "payload_bytes must be in 1..={MAC_MTU_BYTES}, got {}: exceeds macMTU",
                self.payload_bytes
            ));
        }
        if self.interval_s <= 0.0 {
            return err(format!(
                "interval_s must be positive, got {}",
                self.interval_s
            ));
        }
        if self.data_bitrate_bps == 0 || self.basic_rate_bps == 0 {
            return err("bitrates must be positive".into());
        }
        if !pow2m1(self.cw_min) || !pow2m1(self.cw_max) {
            return err(format!(
                "cw_min and cw_max must be of the form 2^k - 1, got {} / {}",
                self.cw_min, self.cw_max
            ));
        }
        if self.cw_min > self.cw_max {
            return err(format!(
                "cw_min {} exceeds cw_max {}",
                self.cw_min, self.cw_max
            ));
        }
        if self.queue_capacity == 0 {
            return err("queue_capacity must be >= 1".into());
        }
        if self.max_sim_time_s <= 0.0 {
            return err("max_sim_time_s must be positive".into());
        }
        if self.slot_us == 0 || self.sifs_us == 0 || self.difs_us == 0 {
            return err("slot, SIFS and DIFS must be positive".into());
        }
        Ok(())
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "on" | "1" => Some(true),
        "false" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// Applies a line-oriented `key = value` document over an existing config and
/// re-validates. `#` starts a comment, blank lines are skipped, unknown keys
/// are errors.
pub fn merge_into(cfg: &mut ScenarioConfig, text: &str) -> Result<(), ConfigError> {
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::at(line_no, format!("expected key = value, got '{raw}'"))
        })?;
        let key = key.trim();
        let value = value.trim();
        apply_key(cfg, key, value).map_err(|m| ConfigError::at(line_no, format!("{key}: {m}")))?;
    }
    cfg.validate()
}

/// Parses a config document; missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    merge_into(&mut cfg, text)?;
    Ok(cfg)
}

fn apply_key(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), String> {
    macro_rules! num {
        () => {
            value.parse().map_err(|_| format!("bad value '{value}'"))?
        };
    }
    match key {
        "n_hosts" => cfg.n_hosts = num!(),
        "payload_bytes" => cfg.payload_bytes = num!(),
        "interval_s" => cfg.interval_s = num!(),
        "bitrate_bps" => cfg.data_bitrate_bps = num!(),
        "basic_rate_bps" => cfg.basic_rate_bps = num!(),
        "cw_min" => cfg.cw_min = num!(),
        "cw_max" => cfg.cw_max = num!(),
        "retry_limit" => cfg.retry_limit = num!(),
        "access_method" => {
            cfg.access_method = match value {
                "basic" => AccessMethod::Basic,
                "rts_cts" => AccessMethod::RtsCts,
                _ => return Err(format!("expected basic|rts_cts, got '{value}'")),
            }
        }
        "queue_capacity" => cfg.queue_capacity = num!(),
        "rtt_mode" => {
            cfg.rtt_mode = match value {
                "ping" => RttMode::Ping,
                "mac_ack" => RttMode::MacAck,
                _ => return Err(format!("expected ping|mac_ack, got '{value}'")),
            }
        }
        "loss_denominator" => {
            cfg.loss_denominator = match value {
                "host_packets" => LossDenominator::HostPackets,
                "all_hops" => LossDenominator::AllHops,
                _ => return Err(format!("expected host_packets|all_hops, got '{value}'")),
            }
        }
        "packets_per_host" => cfg.packets_per_host = num!(),
        "max_sim_time_s" => cfg.max_sim_time_s = num!(),
        "seed" => cfg.seed = num!(),
        "slot_us" => cfg.slot_us = num!(),
        "sifs_us" => cfg.sifs_us = num!(),
        "difs_us" => cfg.difs_us = num!(),
        "phy_header_bits" => cfg.phy_header_bits = num!(),
        "mac_header_bits" => cfg.mac_header_bits = num!(),
        "ack_bits" => cfg.ack_bits = num!(),
        "cts_bits" => cfg.cts_bits = num!(),
        "rts_bits" => cfg.rts_bits = num!(),
        "ack_timeout_extra_us" => cfg.ack_timeout_extra_us = num!(),
        "use_eifs" => {
            cfg.use_eifs = parse_bool(value).ok_or(format!("expected true|false, got '{value}'"))?
        }
        "playground_m" => cfg.playground_m = num!(),
        "transmission_range_m" => cfg.transmission_range_m = num!(),
        "tx_power_mw" => cfg.tx_power_mw = num!(),
        "carrier_freq_ghz" => cfg.carrier_freq_ghz = num!(),
        "carrier_sense_dbm" => cfg.carrier_sense_dbm = num!(),
        "speed_mean_mps" => cfg.speed_mean_mps = num!(),
        "speed_std_mps" => cfg.speed_std_mps = num!(),
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

pub fn access_method_label(m: AccessMethod) -> &'static str {
    match m {
        AccessMethod::Basic => "basic",
        AccessMethod::RtsCts => "rts_cts",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default_scenario() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.interval_s, 0.1);
        assert_eq!(cfg.cw_min, 31);
        assert_eq!(cfg.data_bitrate_bps, 2_000_000);
        assert_eq!(cfg.payload_bytes, 512);
        assert_eq!(cfg.packets_per_host, 500);
        assert_eq!(cfg.retry_limit, 7);
        assert_eq!(cfg.cw_max, 1023);
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = parse_config("# tuning\ncw_min = 7 # small window\nn_hosts=30\n").unwrap();
        assert_eq!(cfg.cw_min, 7);
        assert_eq!(cfg.n_hosts, 30);
    }

    #[test]
    fn payload_over_mtu_is_rejected() {
        let err = parse_config("payload_bytes = 2000").unwrap_err();
        assert!(err.to_string().contains("macMTU"));
    }

    #[test]
    fn unknown_key_names_the_line() {
        let err = parse_config("n_hosts = 5\nbogus = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn malformed_line_is_reported() {
        let err = parse_config("n_hosts 5").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn cw_values_must_be_power_of_two_minus_one() {
        assert!(parse_config("cw_min = 30").is_err());
        assert!(parse_config("cw_min = 63\ncw_max = 31").is_err());
        assert!(parse_config("cw_min = 0\ncw_max = 0").is_ok());
    }

    #[test]
    fn single_host_rejected() {
        assert!(parse_config("n_hosts = 1").is_err());
    }
}
