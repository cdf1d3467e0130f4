//! Build a block layout, check it and print its key-value form.
//!
//! cargo run --example blocks -- [k_max] [end_of_first_block]

use cltlab::params::{build_weights, validate, Layout, MassTarget, SequenceParams, WeightMode};

fn main() -> cltlab::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let k_max = args.first().copied().unwrap_or(20);
    let first = args.get(1).copied().unwrap_or(5);

    let p = SequenceParams::with_ends(WeightMode::ConstOne, k_max, &[first, k_max])?;
    println!("{:>5} {:>6} {:>6} {:>10} {:>10} {:>9}", "block", "k_lo", "k_hi", "horizon", "mass", "M/b(N)");
    for b in validate(&p).blocks {
        println!(
            "{:>5} {:>6} {:>6} {:>10} {:>10.4} {:>9.4}",
            b.index, b.k_lo, b.k_hi, b.horizon, b.mass, b.dominance
        );
    }
    println!("\n{}", p.to_key_value());

    // Greedy layout from geometric mass targets.
    let w = build_weights(WeightMode::ConstOne, k_max, None)?;
    let layout = Layout::Targets {
        target: MassTarget::Geometric { rho: 4.0, scale: 0.25 },
        tolerance: 1.0,
    };
    match SequenceParams::new(w, layout) {
        Ok(g) => {
            for b in g.blocks() {
                println!("geometric: block {} = {}..={} mass {:.3} complete {}", b.index, b.k_lo, b.k_hi, b.mass, b.complete);
            }
        }
        Err(e) => println!("geometric layout: {e}"),
    }
    Ok(())
}
