//! Time until a long-active user's next comment, simulated and in closed
//! form.
//!
//! cargo run --release --example forward_recurrence

use threadgrowth::analytics::{density_slope, ks_distance};
use threadgrowth::distributions::TruncatedPareto;
use threadgrowth::renewal::{forward_recurrence_sample, ForwardRecurrence};
use threadgrowth::rng::stream;

fn main() -> threadgrowth::Result<()> {
    let law = TruncatedPareto::new(1.0, 100.0, 1.5)?;
    let fr = ForwardRecurrence::new(law);
    let mut rng = stream(7, 0);

    for t0_means in [0.5, 10.0, 1000.0] {
        let t0 = t0_means * law.mean();
        let ys: Vec<f64> = (0..20_000)
            .map(|_| forward_recurrence_sample(&law, t0, &mut rng))
            .collect();
        println!(
            "t0 = {t0_means:>6} means: KS to the limit law {:.4}",
            ks_distance(&ys, |y| fr.cdf(y))?
        );
    }

    let ys: Vec<f64> = (0..100_000).map(|_| fr.sample(&mut rng)).collect();
    let slope = density_slope(&ys, 10, law.a(), law.b() / 10.0, 10)?;
    println!(
        "density log-slope on [a, b/10]: {:.3} (expected about -{})",
        slope.slope,
        law.c()
    );
    for y in [0.5, 1.0, 10.0, 50.0, 100.0] {
        println!("P(Y <= {y:>5}) = {:.4}", fr.cdf(y));
    }
    Ok(())
}
