//! Sweep every condition statistic and print the trend verdicts.

use cltlab::exact::{check_condition, dyadic_grid, ConditionId};
use cltlab::params::{SequenceParams, WeightMode};

fn main() -> cltlab::Result<()> {
    let c = |n: u64| 1.0 / ((n as f64 + 4.0).log2()).log2();
    for mode in [WeightMode::ConstOne, WeightMode::InvLog] {
        let p = SequenceParams::with_ends(mode, 20, &[5, 20])?;
        println!("{}", mode.as_str());
        for id in ConditionId::ALL {
            let grid = match id {
                ConditionId::Series2Prime => vec![4, 16, 64, 256, 1024],
                ConditionId::Rate5 | ConditionId::Bound9 => dyadic_grid(8, 20),
                _ => dyadic_grid(2, 16),
            };
            let r = check_condition(&p, id, &grid, Some(&c))?;
            println!(
                "  {:<14} first {:.4e} last {:.4e} trend {:.4} -> {}",
                id.as_str(),
                r.values[0],
                r.values[r.values.len() - 1],
                r.trend,
                r.verdict.as_str()
            );
        }
    }
    Ok(())
}
