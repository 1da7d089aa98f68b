//! Log-wealth of the betting processes as a function of the tested mean,
//! and the streaming accumulator updated one observation at a time.

use offpolicy_betting::confidence::{betting_lcb, Accumulator, BoundMethod, BoundSpec};
use offpolicy_betting::wealth::{pcrp_log_wealth, BetaPrior, LbupState, SampleBuffer, UpDpState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ys = [0.2, 1.4, 0.0, 0.9, 2.5, 0.6, 0.3, 1.1, 0.8, 0.0, 1.7, 0.4];
    let delta: f64 = 0.1;
    let buf = SampleBuffer::from_slice(&ys)?;
    let up = UpDpState::from_slice(BetaPrior::Jeffreys, &ys)?;
    let lb1 = LbupState::from_slice(1, &ys)?;
    let lb2 = LbupState::from_slice(2, &ys)?;
    println!("sample mean {:.4}; rejection threshold ln(1/δ) = {:.4}", buf.mean(), (1.0 / delta).ln());
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "nu", "up", "pcrp", "lbup1", "lbup2");
    for i in 1..=12 {
        let nu = 0.05 * i as f64;
        println!(
            "{nu:>6.2} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            up.log_wealth(nu)?.log_wealth,
            pcrp_log_wealth(&buf, nu)?.log_wealth,
            lb1.log_wealth(nu)?.log_wealth,
            lb2.log_wealth(nu)?.log_wealth,
        );
    }

    let spec = BoundSpec::new(BoundMethod::PCrp, delta)?;
    let mut acc = Accumulator::for_method(spec.method)?;
    for &y in &ys {
        acc.push(y)?;
        println!("t = {:>2}  pcrp lcb = {:.4}", acc.len(), betting_lcb(&acc, &spec)?.lcb);
    }
    Ok(())
}
