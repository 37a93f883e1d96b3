//! Explores one of the standard test halls for a goal snapshot, then drives
//! back to the start and uses the graph it built to reach the goal again.
//!
//! Pass a checkpoint path to skip pretraining (which takes a few minutes).

use recon::agent::{explore, goal_navigate, Session};
use recon::eval::suite;
use recon::model::Checkpoint;
use recon::sim::Pose;

fn main() -> recon::Result<()> {
    let model = match std::env::args().nth(1) {
        Some(p) => Checkpoint::load(p)?.model()?,
        None => {
            println!("pretraining...");
            suite::pretrain(&suite::PretrainConfig::default())?.model
        }
    };
    let cfg = suite::standard_run_config();
    let world = suite::test_world(0)?;
    let (start, goal) = (world.start().unwrap(), world.goal().unwrap());
    let start_pose = Pose::new(start.x, start.y, cfg.start_heading);
    let goal_obs = world.observe(Pose::new(goal.x, goal.y, cfg.goal_heading));

    for seed in 0..5 {
        let mut ecfg = cfg.explore.clone();
        ecfg.seed = seed;
        let mut s = Session::new(&world, start_pose, ecfg.budget)?;
        let r = explore(&mut s, &model, &goal_obs, goal, &ecfg)?;
        print!(
            "seed {seed}: discovered={} steps={} vertices={} false claims={} branches={:?}",
            r.discovered,
            r.steps,
            r.graph.len(),
            r.rejected_claims,
            r.branch_histogram()
        );
        if !r.discovered {
            println!();
            continue;
        }
        let mut ncfg = cfg.navigate.clone();
        ncfg.seed = seed;
        let mut ns = Session::new(&world, start_pose, ncfg.budget)?;
        let n = goal_navigate(&mut ns, &r.model, &r.graph, &goal_obs, goal, &ncfg)?;
        println!(" | navigated={} steps={} replans={}", n.success, n.steps, n.replans);
    }
    Ok(())
}
