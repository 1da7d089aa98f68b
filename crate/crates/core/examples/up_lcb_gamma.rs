//! Lower confidence bounds from every bound method on one Gamma(6, 1/8) sample.

use offpolicy_betting::confidence::{lcb, BoundMethod, BoundSpec};
use offpolicy_betting::wealth::BetaPrior;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gamma = Gamma::new(6.0, 0.125)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ys: Vec<f64> = (0..500).map(|_| gamma.sample(&mut rng)).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    println!("n = {}, sample mean = {mean:.4}, true mean = 0.75", ys.len());

    let methods = [
        BoundMethod::Up { prior: BetaPrior::Jeffreys },
        BoundMethod::Up { prior: BetaPrior::Uniform },
        BoundMethod::PCrp,
        BoundMethod::Lbup { r: 1 },
        BoundMethod::Lbup { r: 2 },
        BoundMethod::EbRelax,
        BoundMethod::MaurerEb,
        BoundMethod::wswrkm(1.0),
    ];
    for m in methods {
        let res = lcb(&ys, &BoundSpec::new(m, 0.05)?)?;
        println!("{:<14} lcb = {:.4}  (iterations {})", m.to_string(), res.lcb, res.diagnostics.iterations);
    }
    Ok(())
}
