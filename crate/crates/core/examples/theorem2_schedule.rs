//! Weight schedule making Σ a_k c_k / k converge while Σ a_k / k diverges.
//!
//! cargo run --release --example theorem2_schedule -- [length]

use cltlab::experiment::schedule_partial_sums;
use cltlab::params::theorem2_schedule;

fn main() -> cltlab::Result<()> {
    let len: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    let c: Vec<f64> = (1..=len).map(|k| 1.0 / ((k as f64 + 4.0).log2()).log2()).collect();
    let s = theorem2_schedule(&c, len)?;
    println!("breakpoints {:?} (truncated: {})", s.breakpoints, s.truncated);
    for &k in &s.breakpoints {
        println!("  a_{k} = {:.6}", s.values[k - 1]);
    }
    println!("\n{:>9} {:>14} {:>14}", "k", "sum a c / k", "sum a / k");
    for (k, sc, sa) in schedule_partial_sums(&s.values, &c) {
        println!("{k:>9} {sc:>14.6} {sa:>14.6}");
    }
    Ok(())
}
