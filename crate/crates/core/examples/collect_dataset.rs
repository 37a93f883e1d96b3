//! Random-walk collection, collision segmentation and hindsight relabelling.

use std::collections::BTreeMap;

use recon::data::{collect, CollectConfig, Dataset};
use recon::sim::RandomWorldConfig;

fn main() -> recon::Result<()> {
    let world = RandomWorldConfig::square(20.0, 12).generate(7)?;
    let trajs = collect(&world, None, 2000, 1, &CollectConfig::default())?;
    let collided = trajs.iter().filter(|t| t.collided).count();
    println!("{} segments, {collided} ended in contact", trajs.len());

    let data = Dataset::from_trajectories(&trajs, 30, None, 1);
    let mut gaps = BTreeMap::new();
    for q in &data.quads {
        *gaps.entry(q.d).or_insert(0usize) += 1;
    }
    println!("{} quadruples, hash {}", data.len(), &data.hash()?[..12]);
    for (d, n) in gaps.iter().take(8) {
        println!("  d={d:2} {n}");
    }

    let path = std::env::temp_dir().join("recon_data.jsonl");
    data.save(&path)?;
    println!("saved {}", path.display());
    Ok(())
}
