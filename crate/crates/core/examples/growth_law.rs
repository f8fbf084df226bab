//! Pooled growth curves of agent-simulated threads: N(t) ~ t^c' and
//! dN/dt ~ t^(c'-1).
//!
//! cargo run --release --example growth_law

use threadgrowth::analytics::{loglog_regression, pooled_growth_curves, GrowthSample};
use threadgrowth::conversation::{simulate_threads, ArrivalModel, ThreadModel, TopicParams};
use threadgrowth::distributions::{ExposureLaw, TruncatedPareto};

fn main() -> threadgrowth::Result<()> {
    let params = TopicParams {
        gamma: 0.05,
        c0: 0.5,
        m: 200,
        delta0: 1.0,
        exposure: ExposureLaw::exponential(0.001)?,
        waiting: TruncatedPareto::new(0.01, 1e5, 1.2)?,
    };
    let threads = simulate_threads(
        &params,
        ThreadModel::Agent(ArrivalModel::FirstResponse),
        500,
        1,
    )?;
    let samples: Vec<GrowthSample> = threads.iter().map(GrowthSample::from).collect();
    let curves = pooled_growth_curves(&samples, 10.0, 400.0, 20)?;

    println!("{:>10} {:>10} {:>12}", "t", "N(t)", "dN/dt");
    for (n, r) in curves.n_of_t.points.iter().zip(&curves.dn_dt.points) {
        println!("{:>10.2} {:>10.3} {:>12.5}", n.0, n.1, r.1);
    }
    let n_fit = loglog_regression(&curves.n_of_t)?;
    let r_fit = loglog_regression(&curves.dn_dt)?;
    println!("c' = {:.2}", params.c_prime());
    println!("slope of N(t)   {:.3}", n_fit.slope);
    println!("slope of dN/dt  {:.3}", r_fit.slope);
    println!("difference      {:.3}", n_fit.slope - r_fit.slope);
    Ok(())
}
