//! A random-walk operator on Z/n: square root by binomial series, condition
//! statistics and the two algebraic identities.

use cltlab::spectral::{evaluate_conditions, random_circulant, rn_identity_check, rn_telescoping_check, sqrt_apply, SpectralToy};
use num_complex::Complex64;
use rand::SeedableRng;

fn main() -> cltlab::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let toy = random_circulant(24, &mut rng)?;
    for m in [10, 100, 1000, 10_000] {
        println!("sqrt series, m = {m:>5}: max error {:.3e}", sqrt_apply(&toy, m).error);
    }
    println!("identity residual {:.2e}", rn_identity_check(&toy, 512).relative());
    println!("telescoping residual {:.2e}", rn_telescoping_check(&toy, 512).relative());
    print!("{}", evaluate_conditions(&toy, 1 << 12, 1.5)?.to_csv());

    // One eigenvalue approaching 1: the statistics blow up together.
    println!("\neps,h_norm,remark7_partial");
    for eps in [1e-1, 1e-2, 1e-3] {
        let t = SpectralToy::explicit(vec![Complex64::new(1.0 - eps, 0.0)], vec![Complex64::new(1.0, 0.0)])?;
        let r = evaluate_conditions(&t, 1 << 14, 1.5)?;
        println!("{eps},{:.4},{:.4}", r.h_norm, r.rows.last().unwrap().remark7_partial);
    }
    Ok(())
}
