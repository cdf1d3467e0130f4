//! Draw S_N, compare the sample variance with the exact σ_N² and show that
//! the batch does not depend on the thread count.

use cltlab::exact;
use cltlab::params::{SequenceParams, WeightMode};
use cltlab::sim::{sample_batch_with, SampleKind, SamplerConfig};

fn main() -> cltlab::Result<()> {
    let p = SequenceParams::with_ends(WeightMode::ConstOne, 16, &[5, 16])?;
    let count = 50_000;
    for e in [8u32, 12] {
        let n = 1u64 << e;
        let cfg = SamplerConfig { normalize: false, ..Default::default() };
        let batch = sample_batch_with(&p, n, count, 42, SampleKind::FullSn, &cfg)?;
        let s = batch.summary();
        println!(
            "N = 2^{e}: sample variance {:.5} exact {:.5} median {:.4}",
            s.variance,
            exact::sigma_sq(&p, n),
            s.quantiles[5].1
        );
    }

    let run = |threads| {
        let cfg = SamplerConfig { threads: Some(threads), ..Default::default() };
        sample_batch_with(&p, 1 << 10, 10_000, 7, SampleKind::FullSn, &cfg).map(|b| b.values)
    };
    let one = run(1)?;
    println!("identical across 1/2/8 threads: {}", one == run(2)? && one == run(8)?);
    Ok(())
}
