//! In-degree distribution of Yule-grown reply trees.
//!
//! cargo run --release --example indegree_yule

use threadgrowth::analytics::{
    indegree_sup_distance, indegree_tail_exponent, yule_ccdf_fn, yule_delta0_mle,
};
use threadgrowth::conversation::{
    indegree_histogram, predicted_indegree_cdf, simulate_threads, ThreadModel, TopicParams,
};
use threadgrowth::distributions::{ExposureLaw, TruncatedPareto};

fn main() -> threadgrowth::Result<()> {
    for exposure in [
        ExposureLaw::exponential(1.0)?,
        ExposureLaw::pareto(1.0, 1.5)?,
    ] {
        let params = TopicParams {
            gamma: 2000.0,
            c0: 0.5,
            m: 1,
            delta0: 1.0,
            exposure,
            waiting: TruncatedPareto::new(1.0, 1e4, 1.0)?,
        };
        let threads = simulate_threads(&params, ThreadModel::Analytic, 60, 9)?;
        let hist = indegree_histogram(&threads, true);
        let nodes: u64 = hist.values().sum();
        let fit = indegree_tail_exponent(&hist, Some(1.0), 1, 10)?;
        let (d0, se) = yule_delta0_mle(&hist)?;
        println!(
            "exposure {exposure}: {} threads, {nodes} nodes",
            threads.len()
        );
        println!(
            "  tail exponent {:.3} ± {:.3} (expected -2)",
            fit.exponent, fit.stderr
        );
        println!("  delta0 {d0:.3} ± {se:.3}");
        println!(
            "  sup distance: discrete law {:.4}, continuum form {:.4}",
            indegree_sup_distance(&hist, yule_ccdf_fn(1.0)),
            indegree_sup_distance(&hist, |l| 1.0 - predicted_indegree_cdf(1.0, l))
        );
    }
    Ok(())
}
