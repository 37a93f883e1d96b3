//! Runs every method on a small world with a quickly trained pair of models
//! and prints the aggregate table.

use recon::eval::{aggregate, run_method, suite, Method};
use recon::model::DEFAULT_BETA;
use recon::sim::{Point, RandomWorldConfig};

fn main() -> recon::Result<()> {
    let mut pre = suite::PretrainConfig::default();
    pre.worlds = vec![(RandomWorldConfig::square(12.0, 4), 1)];
    pre.steps_per_world = 3000;
    pre.max_quads = Some(30_000);
    pre.train.epochs = 8;
    let recon_model = suite::pretrain(&pre)?.model;
    pre.model.beta = 0.0;
    let vanilla = suite::pretrain(&pre)?.model;
    assert_eq!(recon_model.beta, DEFAULT_BETA);

    let world = RandomWorldConfig::square(12.0, 4)
        .with_route(Point::new(1.5, 6.0), Point::new(10.5, 6.0))
        .generate(9)?;
    let mut cfg = suite::standard_run_config();
    cfg.explore.budget = 400;
    cfg.navigate.budget = 300;

    let mut runs = Vec::new();
    for method in Method::ALL {
        let model = if method.needs_unregularized_model() { &vanilla } else { &recon_model };
        for seed in 0..3 {
            runs.push(run_method(method, &world, "small", model, &cfg, seed)?);
        }
    }
    println!("method          runs found navigated explore_med sct");
    for row in aggregate(&runs) {
        println!(
            "{:<15} {:>4} {:>5} {:>9} {:>11} {:.3}",
            row.method.as_str(),
            row.runs,
            row.discovered,
            row.navigated,
            row.median_exploration_steps,
            row.mean_sct
        );
    }
    Ok(())
}
