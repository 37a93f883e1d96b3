//! Compares the analytic gradient of the bottleneck loss with central
//! differences on a small random model.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use recon::data::Quadruple;
use recon::model::{ModelConfig, ModelParams};
use recon::sim::{Action, Observation};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = ModelConfig {
        rays: 6,
        latent_dim: 3,
        hidden: vec![8],
        beta: 0.1,
    };
    let model = ModelParams::new(&cfg, &mut rng);
    let quads: Vec<Quadruple> = (0..5)
        .map(|_| Quadruple {
            o: Observation::new((0..6).map(|_| rng.gen()).collect()),
            g: Observation::new((0..6).map(|_| rng.gen()).collect()),
            a: Action::new(rng.gen(), rng.gen_range(-1.0..1.0)),
            d: rng.gen_range(1..30),
        })
        .collect();
    let batch: Vec<&Quadruple> = quads.iter().collect();
    let noise = Array2::from_shape_simple_fn((5, 3), || rng.sample(StandardNormal));

    let (parts, grads) = model.vib_loss_and_grads(&batch, noise.view()).unwrap();
    println!("loss {:.5} (nll {:.5}, kl {:.5})", parts.total, parts.nll, parts.kl);
    let analytic = grads.slices().concat();

    let h = 1e-5;
    let (mut worst, mut idx) = (0.0_f64, 0);
    let tensors = model.param_slices().len();
    for t in 0..tensors {
        for i in 0..model.param_slices()[t].len() {
            let mut plus = model.clone();
            plus.param_slices_mut()[t][i] += h;
            let mut minus = model.clone();
            minus.param_slices_mut()[t][i] -= h;
            let fd = (plus.vib_loss(&batch, noise.view()).unwrap().total
                - minus.vib_loss(&batch, noise.view()).unwrap().total)
                / (2.0 * h);
            let err = (fd - analytic[idx]).abs() / analytic[idx].abs().max(fd.abs()).max(1e-3);
            worst = worst.max(err);
            idx += 1;
        }
    }
    println!("{idx} parameters in {tensors} tensors, worst relative error {worst:.2e}");
}
