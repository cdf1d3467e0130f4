//! Odd and even block horizons converge to different laws.
//!
//! cargo run --release --example dichotomy -- [samples] [seed]

use cltlab::laws::dichotomy_report;
use cltlab::params::{SequenceParams, WeightMode};

fn main() -> cltlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let count = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let p = SequenceParams::with_ends(WeightMode::InvLog, 20, &[5, 20])?;
    let r = dichotomy_report(&p, count, seed)?;
    println!("{:>8} {:>5} {:>12} {:>12} {:>12} {:>10}", "N", "odd", "KS normal", "KS oracle", "approx/orc", "kurtosis");
    for row in &r.rows {
        println!(
            "{:>8} {:>5} {:>12.5} {:>12.5} {:>12.5} {:>10.3}",
            row.horizon, row.odd, row.ks_vs_normal, row.ks_vs_oracle, row.ks_approx_vs_oracle, row.excess_kurtosis
        );
    }
    println!("margin {:.4} (need {}), verdict {}", r.margin, r.margin_required, r.verdict.as_str());
    Ok(())
}
