use cltlab::exact;
use cltlab::laws::{exact_finite, exact_law, signed_binomial, signed_binomial_direct, sym_poisson, Atom, LawModel};
use cltlab::params::{SequenceParams, WeightMode};

#[test]
fn sym_poisson_moments() {
    for lambda in [0.05, 0.5, 2.0, 7.5] {
        let law = sym_poisson(lambda).unwrap();
        let [mean, var, skew, kurt] = law.moments();
        assert!(mean.abs() < 1e-8);
        assert!((var - 2.0 * lambda).abs() < 1e-8 * var.max(1.0));
        assert!(skew.abs() < 1e-8);
        assert!((kurt - 1.0 / (2.0 * lambda)).abs() < 1e-8 * kurt.max(1.0));
        for x in [0.0, 0.5, 1.0, 3.0] {
            // P(X ≤ -x) = P(X ≥ x)
            let left = law.cdf(-x);
            let right = 1.0 - law.cdf(x - 1e-9);
            assert!((left - right).abs() < 1e-12);
        }
    }
}

#[test]
fn signed_binomial_matches_direct_pmf() {
    for (n, p) in [(10u64, 0.1), (64, 1.0 / 64.0), (1000, 0.003), (7, 0.5)] {
        for (v, mass) in signed_binomial(n, p, 1e8).unwrap() {
            let d = signed_binomial_direct(n, p, v);
            assert!((mass - d).abs() <= 1e-12 + 1e-9 * d, "n={n} p={p} v={v}: {mass} vs {d}");
        }
    }
}

#[test]
fn exact_finite_cdf_is_a_cdf() {
    let atoms = vec![
        Atom { scale: 0.7, trials: 40, hit_prob: 1.0 / 16.0 },
        Atom { scale: 0.2, trials: 40, hit_prob: 0.5 },
    ];
    for gauss_var in [0.0, 0.05, 1.0] {
        let law = exact_finite(gauss_var, atoms.clone(), 1e8).unwrap();
        let sd = law.sd();
        let mut last = 0.0;
        for i in -4000..=4000 {
            let x = i as f64 * 20.0 * sd / 4000.0;
            let f = law.cdf(x);
            assert!(f >= last - 1e-15, "x = {x}");
            last = f;
        }
        for d in law.discontinuities() {
            let h = 1e-7 * d.abs().max(1.0);
            assert!((law.cdf(d + h) - law.cdf(d)).abs() < 1e-6, "not right-continuous at {d}");
            assert!(law.cdf(d - h) <= law.cdf(d) + 1e-15);
        }
        assert!(law.cdf(-20.0 * sd) < 1e-10);
        assert!(law.cdf(20.0 * sd) > 1.0 - 1e-10);
    }
}

/// Var(exact law) against block masses summed directly.
#[test]
fn exact_law_variance_closes_the_oracle_chain() {
    for (mode, k, ends) in [(WeightMode::ConstOne, 16, vec![5, 16]), (WeightMode::InvLog, 14, vec![3, 8, 14])] {
        let p = SequenceParams::with_ends(mode, k, &ends).unwrap();
        for n in [2u64, 8, 32, 256, 1 << 12] {
            let law = exact_law(&p, n).unwrap();
            assert!(matches!(law, LawModel::ExactFinite { .. }));
            let approx_var: f64 = p.blocks().iter().map(|b| p.mass_upto(b, n).powi(2)).sum::<f64>() * n as f64;
            let want = approx_var / (exact::b_sq(&p, n) * n as f64);
            let got = law.moments()[1];
            assert!((got - want).abs() <= 1e-10 * want, "N = {n}: {got} vs {want}");
        }
    }
}

#[test]
fn over_budget_laws_fail_loudly() {
    let p = SequenceParams::with_ends(WeightMode::ConstOne, 30, &[5, 30]).unwrap();
    assert!(cltlab::laws::exact_law_budget(&p, 1 << 30, 1e6).unwrap_err().is_budget());
}

#[test]
fn dichotomy_verdict_edges() {
    use cltlab::laws::{dichotomy_report, DichotomyVerdict};
    let p = SequenceParams::with_ends(WeightMode::ConstOne, 12, &[4, 12]).unwrap();
    assert_eq!(dichotomy_report(&p, 0, 1).unwrap().verdict, DichotomyVerdict::Inconclusive);
    let few = dichotomy_report(&p, 50, 1).unwrap();
    assert_eq!(few.verdict, DichotomyVerdict::Inconclusive);
    assert!(few.required_count.unwrap() > 50);
    // a single complete block has nothing to compare against
    let one = SequenceParams::with_ends(WeightMode::ConstOne, 12, &[12]).unwrap();
    assert_eq!(dichotomy_report(&one, 5000, 1).unwrap().verdict, DichotomyVerdict::NoDichotomy);
}
