//! Hosts and the access point above the MAC: destination picking, ping echo
//! semantics, and the mobility model.
//!
//! The AP (station 0) sits at the playground centre and only relays: a host's
//! request travels host -> AP -> destination, the echo reply comes back the
//! same way. Mobility never affects connectivity (the 300 m transmission
//! range covers the whole 200 m playground); it is simulated for fidelity and
//! position logging.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::engine::StationId;

pub const AP: StationId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationKind {
    Host,
    AccessPoint,
}

/// Uniform pick over the other hosts: never self, never the AP.
pub fn pick_destination<R: Rng>(this: StationId, n_hosts: u16, rng: &mut R) -> StationId {
    assert!(n_hosts >= 2, "destination pick needs at least two hosts");
    debug_assert!(this >= 1 && this <= n_hosts);
    let r = rng.gen_range(0..n_hosts - 1);
    if r + 1 >= this {
        r + 2
    } else {
        r + 1
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MobilityState {
    pub x_m: f64,
    pub y_m: f64,
    pub speed_mps: f64,
    pub heading_rad: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct MobilityParams {
    pub playground_m: f64,
    pub speed_mean_mps: f64,
    pub speed_std_mps: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams {
            playground_m: 200.0,
            speed_mean_mps: 20.0,
            speed_std_mps: 8.0,
        }
    }
}

fn draw_speed<R: Rng>(p: &MobilityParams, rng: &mut R) -> f64 {
    let normal = Normal::new(p.speed_mean_mps, p.speed_std_mps).expect("speed distribution");
    normal.sample(rng).abs()
}

impl MobilityState {
    pub fn spawn<R: Rng>(p: &MobilityParams, rng: &mut R) -> Self {
        MobilityState {
            x_m: rng.gen_range(0.0..p.playground_m),
            y_m: rng.gen_range(0.0..p.playground_m),
            speed_mps: draw_speed(p, rng),
            heading_rad: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    pub fn fixed(x_m: f64, y_m: f64) -> Self {
        MobilityState {
            x_m,
            y_m,
            speed_mps: 0.0,
            heading_rad: 0.0,
        }
    }
}

/// Advances a station one waypoint epoch: move along the heading, reflect at
/// the playground edges, redraw the speed as |Normal(mean, std)|.
pub fn mobility_step<R: Rng>(
    m: MobilityState,
    dt_s: f64,
    p: &MobilityParams,
    rng: &mut R,
) -> MobilityState {
    debug_assert!(dt_s >= 0.0);
    if dt_s == 0.0 {
        return m;
    }
    let mut x = m.x_m + m.speed_mps * dt_s * m.heading_rad.cos();
    let mut y = m.y_m + m.speed_mps * dt_s * m.heading_rad.sin();
    let mut heading = m.heading_rad;
    let side = p.playground_m;
    // reflect; a fast epoch can bounce more than once
    loop {
        if x < 0.0 {
            x = -x;
            heading = std::f64::consts::PI - heading;
        } else if x > side {
            x = 2.0 * side - x;
            heading = std::f64::consts::PI - heading;
        } else if y < 0.0 {
            y = -y;
            heading = -heading;
        } else if y > side {
            y = 2.0 * side - y;
            heading = -heading;
        } else {
            break;
        }
    }
    MobilityState {
        x_m: x,
        y_m: y,
        speed_mps: draw_speed(p, rng),
        heading_rad: heading,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn two_hosts_always_pick_each_other() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(pick_destination(1, 2, &mut rng), 2);
            assert_eq!(pick_destination(2, 2, &mut rng), 1);
        }
    }

    #[test]
    fn destination_never_self_never_ap() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..100_000 {
            let d = pick_destination(4, 10, &mut rng);
            assert_ne!(d, 4);
            assert_ne!(d, AP);
            assert!((1..=10).contains(&d));
        }
    }

    #[test]
    fn destination_distribution_uniform_chi_square() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n_hosts = 10u16;
        let draws = 100_000usize;
        let mut counts = [0u64; 11];
        for _ in 0..draws {
            counts[pick_destination(7, n_hosts, &mut rng) as usize] += 1;
        }
        let expected = draws as f64 / (n_hosts - 1) as f64;
        let chi2: f64 = (1..=n_hosts as usize)
            .filter(|&s| s != 7)
            .map(|s| {
                let d = counts[s] as f64 - expected;
                d * d / expected
            })
            .sum();
        let critical = ChiSquared::new((n_hosts - 2) as f64)
            .unwrap()
            .inverse_cdf(0.999);
        assert!(chi2 < critical, "chi2 {chi2} >= critical {critical}");
    }

    #[test]
    fn mobility_zero_dt_is_identity() {
        let p = MobilityParams::default();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let m = MobilityState::spawn(&p, &mut rng);
        let m2 = mobility_step(m, 0.0, &p, &mut rng);
        assert_eq!(m.x_m, m2.x_m);
        assert_eq!(m.y_m, m2.y_m);
        assert_eq!(m.speed_mps, m2.speed_mps);
    }

    #[test]
    fn trajectory_stays_in_playground() {
        let p = MobilityParams::default();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut m = MobilityState::spawn(&p, &mut rng);
        for _ in 0..10_000 {
            m = mobility_step(m, 1.0, &p, &mut rng);
            assert!(
                (0.0..=p.playground_m).contains(&m.x_m) && (0.0..=p.playground_m).contains(&m.y_m),
                "escaped playground: ({}, {})",
                m.x_m,
                m.y_m
            );
            assert!(m.speed_mps >= 0.0);
        }
    }
}
