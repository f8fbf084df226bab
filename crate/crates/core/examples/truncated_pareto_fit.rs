//! Sample a truncated Pareto waiting-time law and fit its exponent back.
//!
//! cargo run --release --example truncated_pareto_fit

use threadgrowth::analytics::ks_distance;
use threadgrowth::distributions::{tp_mle, tp_mle_observed_max, TruncatedPareto};
use threadgrowth::rng::stream;

fn main() -> threadgrowth::Result<()> {
    let law = TruncatedPareto::new(1.0, 1e4, 1.5670)?;
    let mut rng = stream(2024, 0);
    let xs: Vec<f64> = (0..10_000).map(|_| law.sample(&mut rng)).collect();

    println!(
        "mean waiting time {:.4} (theory {:.4})",
        xs.iter().sum::<f64>() / xs.len() as f64,
        law.mean()
    );
    println!(
        "KS distance to the CDF {:.4}",
        ks_distance(&xs, |x| law.cdf(x))?
    );

    let known = tp_mle(&xs, law.a(), law.b())?;
    let observed = tp_mle_observed_max(&xs, law.a())?;
    println!(
        "c with true bounds     {:.4} ± {:.4}",
        known.params[0], known.stderr[0]
    );
    println!(
        "c with b = max sample  {:.4} ± {:.4}",
        observed.params[0], observed.stderr[0]
    );
    Ok(())
}
