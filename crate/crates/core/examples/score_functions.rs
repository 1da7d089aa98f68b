//! The three score functions, their sandwich check and the negative
//! influence each one incurs on a heavy-tailed weighted-reward trace.

use offpolicy_betting::bandit::{iw_trace, HeavyTailEnv};
use offpolicy_betting::learning::{assumption1_check, log_grid, negative_influence, ScoreFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "x", "ln(1+x)", "ls", "clipping", "freezing");
    for x in [0.0, 0.1, 0.5, 1.0, 2.0, 10.0] {
        print!("{x:>8.2} {:>10.4}", f64::ln_1p(x));
        for s in ScoreFunction::ALL {
            print!(" {:>10.4}", s.eval(x)?);
        }
        println!();
    }
    let grid = log_grid(1e-4, 1e3, 49);
    for s in ScoreFunction::ALL {
        let r = assumption1_check(s, &grid)?;
        println!("{:<9} c1 = {}, c2 = {}, violations {} of {}", s.name(), s.c1(), s.c2(), r.violations, r.points);
    }
    let env = HeavyTailEnv::with_uniform_target(3.0)?;
    let trace = iw_trace(&env.sample(20_000, 5)?, &env.target, false)?.values;
    for beta in [0.01, 0.1, 1.0] {
        for s in ScoreFunction::ALL {
            let est = negative_influence(s, beta, &trace)?;
            println!("beta {beta:<5} {:<9} influence {:.5} ± {:.5}", s.name(), est.value, est.std_err);
        }
    }
    Ok(())
}
