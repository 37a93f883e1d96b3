//! Generates a cluttered room, drives a few commands through it and prints
//! what the range sensor sees.

use recon::sim::{Action, Point, Pose, RandomWorldConfig};

fn main() -> recon::Result<()> {
    let world = RandomWorldConfig::rect(16.0, 8.0, 6)
        .with_route(Point::new(1.5, 4.0), Point::new(14.5, 4.0))
        .generate(42)?;
    let (start, goal) = (world.start().unwrap(), world.goal().unwrap());
    println!("{} obstacles, shortest route {:.1} m", world.obstacles().len(), world.geodesic(start, goal)?);

    let mut pose = Pose::new(start.x, start.y, 0.0);
    for t in 0..12 {
        let out = world.step(pose, Action::new(1.0, if t < 6 { 0.0 } else { 0.4 }));
        pose = out.pose;
        let o = world.observe(pose);
        let nearest = o.rays().iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "t={t:2} pose=({:5.2},{:5.2},{:5.2}) nearest={nearest:.2}{}",
            pose.x,
            pose.y,
            pose.theta,
            if out.collided { " hit" } else { "" }
        );
    }

    let path = std::env::temp_dir().join("recon_world.json");
    world.save(&path)?;
    println!("saved {}", path.display());
    Ok(())
}
