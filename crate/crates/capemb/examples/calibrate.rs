//! Contraction calibration for the statistical suite.
//!
//! Runs every suite entry on calibration seeds disjoint from the acceptance
//! seeds and prints the minimum contraction and the worst bound excess.

use std::time::Instant;

use capemb::eval::{default_copies, run_eval, suite_case, SUITE};
use capemb::RngSeed;

fn main() -> capemb::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let sizes = [16usize, 64, 256];
    println!("embedder,n,min_contraction,median_contraction,max_expansion,violations,seconds");
    for name in SUITE {
        for &n in &sizes {
            let t0 = Instant::now();
            let mut c = Vec::new();
            let (mut hi, mut viol) = (0.0f64, 0);
            for s in 0..seeds {
                let seed = RngSeed::new(1_000_000 + s);
                let (inst, emb) = suite_case(name, n, seed.named("instance"))?;
                let r = run_eval(&inst, emb, default_copies(n), seed.named("embed"))?;
                c.push(r.summary.contraction);
                hi = hi.max(r.summary.expansion);
                viol += r.summary.violations;
            }
            c.sort_by(f64::total_cmp);
            println!(
                "{name},{n},{:.4},{:.4},{:.4},{viol},{:.1}",
                c[0],
                c[c.len() / 2],
                hi,
                t0.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
