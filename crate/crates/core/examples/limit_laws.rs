//! Exact finite-N laws of the approximating sum, their symmetrized-Poisson
//! limit, and a KS check against simulation.

use cltlab::laws::{binomial_poisson_tv, batch_ks, exact_law, ks_critical, ks_distance, sym_poisson};
use cltlab::params::{SequenceParams, WeightMode};
use cltlab::sim::{sample_batch, SampleKind};

fn main() -> cltlab::Result<()> {
    let sp = sym_poisson(0.5)?;
    let [mean, var, skew, kurt] = sp.moments();
    println!("sym Poisson(1/2): mean {mean:.3} var {var:.6} skew {skew:.3} excess kurtosis {kurt:.4}");
    for n in [4u64, 64, 1024] {
        println!("  TV(signed binomial at N = {n}, limit) = {:.3e}", binomial_poisson_tv(n));
    }

    let p = SequenceParams::with_ends(WeightMode::ConstOne, 16, &[5, 16])?;
    let n = 32;
    let law = exact_law(&p, n)?;
    println!("\nexact law at N = {n}: {}", law.summary_json()?);
    println!("KS(exact law, sym Poisson(1/2)) = {:.4}", ks_distance(&law, &sp));

    let count = 100_000;
    let batch = sample_batch(&p, n, count, 3, SampleKind::ApproxIidSum)?;
    println!("KS(simulated approximating sum, exact law) = {:.5} (1% critical {:.5})", batch_ks(&batch, &law), ks_critical(count));
    Ok(())
}
