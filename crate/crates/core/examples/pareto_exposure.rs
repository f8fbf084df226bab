//! Pareto exposure gives power-law thread sizes with density exponent
//! -(alpha/c' + 1).
//!
//! cargo run --release --example pareto_exposure

use threadgrowth::analytics::{density_slope, log_binned_density, tail_classify};
use threadgrowth::conversation::{simulate_size_analytic, TopicParams};
use threadgrowth::distributions::{ExposureLaw, TruncatedPareto};
use threadgrowth::rng::stream;

fn main() -> threadgrowth::Result<()> {
    let alpha = 1.5;
    let params = TopicParams {
        gamma: 1000.0,
        c0: 0.5,
        m: 1,
        delta0: 1.0,
        exposure: ExposureLaw::pareto(1.0, alpha)?,
        waiting: TruncatedPareto::new(1.0, 1e4, 1.0)?,
    };
    let mut rng = stream(5, 0);
    let sizes: Vec<f64> = (0..100_000)
        .map(|_| simulate_size_analytic(&params, &mut rng).map(|n| n as f64))
        .collect::<threadgrowth::Result<_>>()?;

    let density = log_binned_density(&sizes, 5)?;
    for (n, d) in density.points.iter().take(12) {
        println!("{n:>12.1} {d:.3e}");
    }
    let slope = density_slope(&sizes, 10, 2.0 * params.gamma_prime(), f64::INFINITY, 10)?;
    println!(
        "density slope {:.3}, predicted {:.3}",
        slope.slope,
        -(alpha / params.c_prime() + 1.0)
    );
    let tail = tail_classify(&sizes)?;
    println!(
        "tail {} (above the exponential line: {})",
        tail.class,
        tail.above_exponential_line()
    );
    Ok(())
}
