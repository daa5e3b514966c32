//! Dev harness: criterion-style statistics for the leave-overhead sweep.

use bsrone::sim::{run_leave_overhead, SimConfig};

fn main() {
    let seeds: Vec<u64> = (1..=20).collect();
    let mut ordered_seeds = 0;
    let mut c4 = (0.0, 0.0);
    let mut c32 = (0.0, 0.0);
    let mut step_fail = vec![0u32; 5];
    for &seed in &seeds {
        let cfg: SimConfig = SimConfig::leave_overhead(seed);
        let m = run_leave_overhead(&cfg).unwrap();
        let series: Vec<Vec<f64>> = m
            .series
            .iter()
            .map(|s| s.steps.iter().map(|st| st.headline_signals).collect())
            .collect();
        if seed <= 2 {
            for (s, v) in m.series.iter().zip(&series) {
                println!("seed {seed} {}: {v:?}", s.label);
            }
        }
        let mut all = true;
        for step in 0..series[0].len() {
            let ok = series[0][step] > series[1][step]
                && series[1][step] > series[2][step]
                && series[2][step] > series[3][step];
            if !ok {
                all = false;
                step_fail[step] += 1;
            }
        }
        if all {
            ordered_seeds += 1;
        }
        c4.0 += series[0][0];
        c4.1 += *series[0].last().unwrap();
        c32.0 += series[3][0];
        c32.1 += *series[3].last().unwrap();
    }
    let n = seeds.len() as f64;
    println!("ordered seeds: {ordered_seeds}/20   per-step failures: {step_fail:?}");
    println!("cluster-4 endpoints: {:.1} -> {:.1}  (windows 824..2472 / 3914..11742)", c4.0 / n, c4.1 / n);
    println!("cluster-32 endpoints: {:.1} -> {:.1} (windows 16..48 and 152..456)", c32.0 / n, c32.1 / n);
}
