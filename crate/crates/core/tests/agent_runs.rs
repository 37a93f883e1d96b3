use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recon::agent::{back_off, explore, goal_navigate, ExploreConfig, FrontierMode, NavigateConfig, Session};
use recon::model::{ModelConfig, ModelParams};
use recon::sim::{wrap_angle, Point, Pose, World, WorldSpec};

fn model(seed: u64) -> ModelParams {
    ModelParams::new(&ModelConfig::new(32), &mut ChaCha8Rng::seed_from_u64(seed))
}

fn room() -> World {
    World::new(WorldSpec::empty(6.0, 6.0)).unwrap()
}

fn cfg(budget: usize, seed: u64) -> ExploreConfig {
    ExploreConfig {
        budget,
        seed,
        finetune_epochs: 1,
        batch_size: 16,
        ..ExploreConfig::default()
    }
}

#[test]
fn zero_budget_does_nothing() {
    let w = room();
    let m = model(1);
    let goal = Point::new(5.0, 3.0);
    let goal_obs = w.observe(Pose::new(goal.x, goal.y, 0.0));
    let mut s = Session::new(&w, Pose::new(1.0, 3.0, 0.0), 0).unwrap();
    let r = explore(&mut s, &m, &goal_obs, goal, &cfg(0, 0)).unwrap();
    assert_eq!(r.steps, 0);
    assert!(r.graph.len() <= 1);
    assert!(r.decisions.is_empty() && r.dataset.is_empty());
    assert!(!r.discovered);
}

#[test]
fn same_seed_same_run() {
    let w = room();
    let m = model(2);
    let goal = Point::new(5.0, 5.0);
    let goal_obs = w.observe(Pose::new(goal.x, goal.y, 1.0));
    let run = |seed| {
        let mut s = Session::new(&w, Pose::new(1.0, 1.0, 0.0), 120).unwrap();
        let r = explore(&mut s, &m, &goal_obs, goal, &cfg(120, seed)).unwrap();
        (r.summary(), r.graph.to_json().unwrap(), r.dataset.len())
    };
    let a = run(5);
    assert_eq!(a, run(5));
    assert_ne!(a.0.trace, run(6).0.trace);
}

#[test]
fn random_actions_never_sample_the_prior() {
    let w = room();
    let m = model(3);
    let goal = Point::new(5.0, 5.0);
    let goal_obs = w.observe(Pose::new(goal.x, goal.y, 0.0));
    let c = ExploreConfig {
        frontier: FrontierMode::RandomActions,
        feasibility: false,
        finetune_epochs: 0,
        ..cfg(200, 1)
    };
    let mut s = Session::new(&w, Pose::new(1.0, 1.0, 0.0), c.budget).unwrap();
    let r = explore(&mut s, &m, &goal_obs, goal, &c).unwrap();
    let h = r.branch_histogram();
    assert!(h.keys().all(|k| !k.contains("prior-sample")), "{h:?}");
    assert!(h.contains_key("explore-frontier/random-actions"), "{h:?}");
}

#[test]
fn back_off_turns_around_in_place() {
    let w = room();
    for seed in 0..20 {
        let start = Pose::new(3.0, 3.0, 0.4);
        let mut s = Session::new(&w, start, 100).unwrap();
        back_off(&mut s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let end = s.pose();
        assert_eq!(end.position(), start.position());
        let turned = wrap_angle(end.theta - start.theta).abs();
        assert!(turned >= std::f64::consts::PI - 0.3 - 1e-9, "turned {turned}");
        assert!(s.steps() >= 6 && s.steps() <= 7);
    }
}

#[test]
fn backup_changes_the_run_after_contact() {
    let w = room();
    let m = model(4);
    let goal = Point::new(5.0, 5.0);
    let goal_obs = w.observe(Pose::new(goal.x, goal.y, 0.0));
    let run = |backup| {
        let c = ExploreConfig {
            backup_after_collision: backup,
            finetune_epochs: 0,
            ..cfg(300, 7)
        };
        let mut s = Session::new(&w, Pose::new(1.0, 1.0, 0.0), c.budget).unwrap();
        explore(&mut s, &m, &goal_obs, goal, &c).unwrap()
    };
    let (with, without) = (run(true), run(false));
    assert!(without.collisions > 0);
    assert_ne!(with.trace, without.trace);
}

#[test]
fn navigation_at_the_goal_succeeds_at_once() {
    let w = room();
    let m = model(5);
    let goal = Point::new(3.0, 3.0);
    let goal_obs = w.observe(Pose::new(goal.x, goal.y, 0.0));
    let mut s = Session::new(&w, Pose::new(goal.x, goal.y, 0.0), 50).unwrap();
    let r = explore(&mut s, &m, &goal_obs, goal, &cfg(0, 0)).unwrap();
    let mut g = r.graph;
    g.expand(&m, &goal_obs, 4.0).unwrap();
    let mut ns = Session::new(&w, Pose::new(goal.x, goal.y, 0.0), 50).unwrap();
    let n = goal_navigate(&mut ns, &m, &g, &goal_obs, goal, &NavigateConfig { budget: 20, ..Default::default() }).unwrap();
    assert!(n.success);
    assert!(n.steps <= 20);
}
