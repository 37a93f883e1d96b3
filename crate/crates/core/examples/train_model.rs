//! Trains the latent goal model on one world and checks that predicted
//! distances rank held-out pairs the way the true gaps do.

use recon::data::{collect, CollectConfig, Dataset};
use recon::eval::spearman;
use recon::model::{train, Checkpoint, ModelConfig, ModelParams, TrainConfig};
use recon::sim::RandomWorldConfig;

use rand::SeedableRng;

fn main() -> recon::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let world = RandomWorldConfig::square(20.0, 12).generate(7)?;
    let data = Dataset::from_trajectories(&collect(&world, None, 4000, 1, &CollectConfig::default())?, 30, Some(30_000), 1);
    let held = Dataset::from_trajectories(&collect(&world, None, 600, 2, &CollectConfig::default())?, 30, Some(2000), 2);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut model = ModelParams::new(&ModelConfig::new(data.rays()?), &mut rng);
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let report = train(&mut model, &data, &cfg)?;
    for (e, l) in report.epoch_losses.iter().enumerate() {
        println!("epoch {e:2} loss {l:.4}");
    }

    let pairs: Vec<_> = held.quads.iter().map(|q| (&q.o, &q.g)).collect();
    let pred = model.predicted_distances(&pairs)?;
    let truth: Vec<f64> = held.quads.iter().map(|q| q.d as f64).collect();
    println!("held-out rank correlation {:.3}", spearman(&pred, &truth).unwrap_or(f64::NAN));

    let path = std::env::temp_dir().join("recon_model.json");
    Checkpoint::new(&model, 0, report.steps).save(&path)?;
    println!("saved {}", path.display());
    Ok(())
}
