//! Thread sizes under exponential exposure are Weibull with shape 1/c':
//! light-tailed below c' = 1, exponential at 1, heavy above.
//!
//! cargo run --release --example size_trichotomy

use threadgrowth::analytics::{ks_distance_rounded, tail_classify};
use threadgrowth::conversation::{predicted_size_cdf, simulate_size_analytic, TopicParams};
use threadgrowth::distributions::{weibull_mle, ExposureLaw, TruncatedPareto};
use threadgrowth::rng::stream;

fn main() -> threadgrowth::Result<()> {
    for c_prime in [0.5, 1.0, 2.0] {
        let params = TopicParams {
            gamma: 1e6,
            c0: 1.5,
            m: 1,
            delta0: 1.0,
            exposure: ExposureLaw::exponential(1.0)?,
            waiting: TruncatedPareto::new(1.0, 1e4, 2.5 - c_prime)?,
        };
        let mut rng = stream(11, (c_prime * 10.0) as u64);
        let sizes: Vec<f64> = (0..50_000)
            .map(|_| simulate_size_analytic(&params, &mut rng).map(|n| n as f64))
            .collect::<threadgrowth::Result<_>>()?;
        let positive: Vec<f64> = sizes.iter().copied().filter(|&n| n > 0.0).collect();
        let shape = weibull_mle(&positive)?.params[0];
        let ks = ks_distance_rounded(&sizes, |n| predicted_size_cdf(&params, n).unwrap())?;
        let tail = tail_classify(&sizes)?;
        println!(
            "c' = {c_prime}: Weibull shape {shape:.3} (1/c' = {:.3}), KS {ks:.4}, tail {}",
            1.0 / c_prime,
            tail.class
        );
    }
    Ok(())
}
