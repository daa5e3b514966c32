//! Dev harness: criterion-6-style statistics for the fault sweep.

use bsrone::sim::{run_fault_tolerance, SimConfig};

fn main() {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let mut pass = 0;
    for seed in 1..=n {
        let mut cfg: SimConfig = SimConfig::fault(seed);
        cfg.fault_backup_counts = vec![1, 3];
        let m = run_fault_tolerance(&cfg).unwrap();
        let take = |label: &str| -> Vec<f64> {
            m.series_labeled(label).unwrap().steps.iter().map(|s| s.failed_clusters).collect()
        };
        let mut ok = true;
        let mut first_violation = String::new();
        // The ordering claim concerns the default one-shadow experiment;
        // the three-shadow run exists for the paired comparison.
        for backups in [1] {
            let by: Vec<Vec<f64>> = [4, 8, 16, 32]
                .iter()
                .map(|sz| take(&format!("cluster-{sz}-backups-{backups}")))
                .collect();
            for snap in 0..by[0].len() {
                if !(by[0][snap] >= by[1][snap] && by[1][snap] >= by[2][snap] && by[2][snap] >= by[3][snap]) {
                    if ok {
                        first_violation = format!(
                            "b{backups} snap{snap}: {} {} {} {}",
                            by[0][snap], by[1][snap], by[2][snap], by[3][snap]
                        );
                    }
                    ok = false;
                }
            }
        }
        for sz in [4, 8, 16, 32] {
            let one = take(&format!("cluster-{sz}-backups-1"));
            let three = take(&format!("cluster-{sz}-backups-3"));
            if one.iter().zip(&three).any(|(a, b)| b > a) {
                if ok {
                    first_violation = format!("paired violation cluster-{sz}");
                }
                ok = false;
            }
        }
        if ok {
            pass += 1;
        } else {
            println!("seed {seed}: FAIL ({first_violation})");
        }
    }
    println!("fault criterion passed in {pass}/{n} seeds");
}
