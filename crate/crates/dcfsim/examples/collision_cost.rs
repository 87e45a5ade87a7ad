use dcfsim::config::ScenarioConfig;
use dcfsim::mac::AccessMethod;
use dcfsim::sim::run_scenario;

fn main() {
    for method in [AccessMethod::Basic, AccessMethod::RtsCts] {
        for seed in 1..=5u64 {
            let cfg = ScenarioConfig {
                n_hosts: 30,
                payload_bytes: 1024,
                interval_s: 0.05,
                access_method: method,
                seed,
                ..ScenarioConfig::default()
            };
            let m = run_scenario(&cfg).unwrap();
            println!(
                "{:?} seed={} collisions={} mean_cost_us={:.1} loss={:.3}",
                method,
                seed,
                m.collision_events,
                m.mean_collision_cost_ns().unwrap_or(0.0) / 1000.0,
                m.dropped_total() as f64 / m.sent_total as f64
            );
        }
    }
}
