//! Dev harness: prints experiment series for default-config sanity checks.

use bsrone::sim::{
    run_fault_tolerance, run_join_overhead, run_leave_overhead, run_routing_experiment,
    run_stability, SimConfig,
};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    let seeds: Vec<u64> = std::env::args()
        .nth(2)
        .map(|s| s.split(',').map(|v| v.parse().unwrap()).collect())
        .unwrap_or_else(|| vec![1]);

    if which == "route" || which == "all" {
        for &seed in &seeds {
            let cfg: SimConfig = SimConfig::routing(seed);
            let m = run_routing_experiment(&cfg).unwrap();
            let s = &m.series[0];
            print!("route seed={seed}: ");
            for st in &s.steps {
                print!("[k={} mean={:.2} max={}] ", st.step, st.mean_hops, st.max_hops);
            }
            println!();
        }
    }
    if which == "join" || which == "all" {
        for &seed in &seeds {
            let cfg: SimConfig = SimConfig::join_overhead(seed);
            let m = run_join_overhead(&cfg).unwrap();
            print!("join seed={seed}:");
            for s in &m.series {
                let v: Vec<f64> = s.steps.iter().map(|st| st.headline_signals).collect();
                print!("  {}={v:?}", s.label);
            }
            println!();
        }
    }
    if which == "leave" || which == "all" {
        for &seed in &seeds {
            let cfg: SimConfig = SimConfig::leave_overhead(seed);
            let m = run_leave_overhead(&cfg).unwrap();
            print!("leave seed={seed}:");
            for s in &m.series {
                let v: Vec<f64> = s.steps.iter().map(|st| st.headline_signals).collect();
                print!("  {}={v:?}", s.label);
            }
            println!();
        }
    }
    if which == "fault" || which == "all" {
        for &seed in &seeds {
            let mut cfg: SimConfig = SimConfig::fault(seed);
            cfg.fault_backup_counts = vec![1, 3];
            let m = run_fault_tolerance(&cfg).unwrap();
            print!("fault seed={seed}:");
            for s in &m.series {
                let v: Vec<f64> = s.steps.iter().map(|st| st.failed_clusters).collect();
                print!("  {}={v:?}", s.label);
            }
            println!();
        }
    }
    if which == "stability" || which == "all" {
        for &seed in &seeds {
            let cfg: SimConfig = SimConfig::stability(seed);
            let m = run_stability(&cfg).unwrap();
            let s = &m.series[0];
            let v: Vec<f64> = s.steps.iter().map(|st| st.headline_signals).collect();
            let mono = v.windows(2).skip(1).all(|w| w[0] >= w[1]);
            println!("stability seed={seed}: exchanges per cohort = {v:?} non-increasing after c2: {mono}");
        }
    }
}
