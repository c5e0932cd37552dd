//! Dev-only calibration: measures generation acceptance per family.
use std::io::Write;
use carseq::features::option_utilisation;
use carseq::generator::{generate, Family, GeneratorSpec};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let seeds: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    for family in Family::ALL {
        let mut ok = 0usize;
        let mut fail_msg = String::new();
        let mut utils: Vec<f64> = Vec::new();
        let start = std::time::Instant::now();
        for seed in 0..seeds {
            match generate(&GeneratorSpec::new(family, n, seed)) {
                Ok(inst) => {
                    ok += 1;
                    for j in 0..inst.num_options() {
                        utils.push(option_utilisation(&inst, j));
                    }
                }
                Err(e) => fail_msg = e.to_string(),
            }
        }
        let mean = utils.iter().sum::<f64>() / utils.len().max(1) as f64;
        println!(
            "{:<20} ok={}/{} mean_util={:.3} time={:>8.2?} {}",
            family.name(), ok, seeds, mean, start.elapsed(), fail_msg
        );
        std::io::stdout().flush().unwrap();
    }
}
