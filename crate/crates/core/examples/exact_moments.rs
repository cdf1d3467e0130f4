//! Closed-form second moments on a dyadic grid, plus the orthogonal
//! decomposition σ² = ‖E(S_N | F_0)‖² + Σ_l ‖P_l S_N‖².

use cltlab::exact::{self, dyadic_grid};
use cltlab::params::{SequenceParams, WeightMode};

fn main() -> cltlab::Result<()> {
    let p = SequenceParams::with_ends(WeightMode::ConstOne, 20, &[5, 20])?;
    let grid = dyadic_grid(2, 20);
    print!("{}", exact::engine_csv(&exact::engine_table(&p, &grid)));

    println!("\nN,sigma_sq,cond+proj,relative_gap");
    for &n in &grid {
        let s = exact::sigma_sq(&p, n);
        let parts = exact::cond_norm_sq(&p, n) + exact::proj_norm_sq_total(&p, n);
        println!("{n},{s:.12e},{parts:.12e},{:.2e}", (s - parts).abs() / s);
    }
    Ok(())
}
