//! Simulate a site, write it as a JSONL corpus, read it back and recover
//! the waiting-time exponent, the exposure family and the growth slopes.
//!
//! cargo run --release --example corpus_pipeline

use threadgrowth::cli::{
    analyze_corpus, cmd_simulate, fit_corpus, AnalyzeSettings, FitTarget, SimulateArgs,
    SimulateConfig,
};
use threadgrowth::ingestion::{parse_corpus, Format};

fn main() -> threadgrowth::Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = SimulateConfig::resolve(SimulateArgs {
        topics: Some(100),
        gamma: Some(1e-3),
        c: Some(1.2),
        c0: Some(1.0),
        m: Some(3000),
        exposure: Some("exp:0.0001".into()),
        b: Some(1e5),
        out: Some(dir.path().to_path_buf()),
        ..SimulateArgs::default()
    })?;
    for path in cmd_simulate(&cfg)? {
        println!("wrote {}", path.display());
    }

    let events = parse_corpus(&dir.path().join("events.jsonl"), Format::Jsonl)?;
    let activity = parse_corpus(&dir.path().join("activity.jsonl"), Format::Jsonl)?;
    println!(
        "{} topics, {} comments",
        events.len(),
        events.comment_count()
    );

    for row in fit_corpus(&activity, FitTarget::Waiting, Some(1.0))? {
        println!("waiting   {:>6} = {}", row.parameter, row.estimate);
    }
    for row in fit_corpus(&events, FitTarget::Exposure, None)? {
        println!(
            "exposure  {:<11} {:>6} = {:<12.6e} selected {}",
            row.family, row.parameter, row.estimate, row.selected
        );
    }
    let settings = AnalyzeSettings {
        t_lo: 30.0,
        t_hi: 1000.0,
        ..AnalyzeSettings::default()
    };
    let analysis = analyze_corpus(&events, &settings)?;
    for key in [
        "slope_N",
        "slope_dN_dt",
        "indegree_exponent",
        "delta0_mle",
        "before_after_min",
    ] {
        println!("{key:<18} {}", analysis.report[key]);
    }
    println!("c' used by the simulation: {}", cfg.params.c_prime());
    Ok(())
}
