use ndarray::{s, Array2, ArrayView2, Zip};

use super::{ModelParams, DECODER_OUT};
use crate::data::Quadruple;
use crate::error::{Error, Result};
use crate::nn::{DenseGrads, LN_SQRT_2PI};

/// Batch-mean loss terms. `total = nll + beta * kl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub nll: f64,
    pub kl: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub encoder: DenseGrads,
    pub decoder: DenseGrads,
}

impl ModelGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = self.encoder.slices();
        out.extend(self.decoder.slices());
        out
    }
}

impl ModelParams {
    pub fn zero_grads(&self) -> ModelGrads {
        ModelGrads {
            encoder: self.encoder.zero_grads(),
            decoder: self.decoder.zero_grads(),
        }
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = self.encoder.param_slices();
        out.extend(self.decoder.param_slices());
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.encoder.param_slices_mut();
        out.extend(self.decoder.param_slices_mut());
        out
    }

    fn batch_inputs(&self, batch: &[&Quadruple]) -> Result<(Array2<f64>, Array2<f64>)> {
        let k = self.rays;
        let mut enc_in = Array2::zeros((batch.len(), 2 * k));
        let mut targets = Array2::zeros((batch.len(), DECODER_OUT));
        for (i, q) in batch.iter().enumerate() {
            if q.o.len() != k || q.g.len() != k {
                return Err(Error::dim("quadruple observation", k, q.o.len().max(q.g.len())));
            }
            let mut row = enc_in.row_mut(i);
            for (j, v) in q.o.rays().iter().chain(q.g.rays()).enumerate() {
                row[j] = *v;
            }
            targets[[i, 0]] = q.a.v;
            targets[[i, 1]] = q.a.omega;
            targets[[i, 2]] = q.d as f64;
        }
        Ok((enc_in, targets))
    }

    /// Batch-mean of `−log q(a, d | z, o_t) + β·KL(p(z | o_t, o_g) ‖ N(0, I))`
    /// with `z` reparameterized from the injected `noise` (one row per record).
    pub fn vib_loss(&self, batch: &[&Quadruple], noise: ArrayView2<'_, f64>) -> Result<LossParts> {
        self.vib_forward(batch, noise, None)
    }

    /// [`vib_loss`](Self::vib_loss) plus exact gradients for every parameter.
    pub fn vib_loss_and_grads(
        &self,
        batch: &[&Quadruple],
        noise: ArrayView2<'_, f64>,
    ) -> Result<(LossParts, ModelGrads)> {
        let mut grads = self.zero_grads();
        let parts = self.vib_forward(batch, noise, Some(&mut grads))?;
        Ok((parts, grads))
    }

    fn vib_forward(
        &self,
        batch: &[&Quadruple],
        noise: ArrayView2<'_, f64>,
        grads: Option<&mut ModelGrads>,
    ) -> Result<LossParts> {
        if batch.is_empty() {
            return Err(Error::Contract("loss needs a non-empty batch".into()));
        }
        let (k, d) = (self.rays, self.latent_dim);
        if noise.dim() != (batch.len(), d) {
            return Err(Error::dim("loss noise rows", batch.len(), noise.nrows()));
        }
        let n = batch.len() as f64;
        let (enc_in, targets) = self.batch_inputs(batch)?;

        let (enc_out, enc_tape) = self.encoder.forward_tape(enc_in.view())?;
        let mu_p = enc_out.slice(s![.., ..d]);
        let ls_p = enc_out.slice(s![.., d..]);
        let sigma_p = ls_p.mapv(f64::exp);
        let z = &mu_p + &(&sigma_p * &noise);

        let mut dec_in = Array2::zeros((batch.len(), k + d));
        dec_in.slice_mut(s![.., ..k]).assign(&enc_in.slice(s![.., ..k]));
        dec_in.slice_mut(s![.., k..]).assign(&z);
        let (dec_out, dec_tape) = self.decoder.forward_tape(dec_in.view())?;
        let mu_q = dec_out.slice(s![.., ..DECODER_OUT]);
        let ls_q = dec_out.slice(s![.., DECODER_OUT..]);

        // Standardised residuals r = (y − μ_q)/σ_q.
        let inv_sigma_q = ls_q.mapv(|v| (-v).exp());
        let resid = (&targets - &mu_q) * &inv_sigma_q;
        let nll_sum: f64 = Zip::from(&resid)
            .and(&ls_q)
            .fold(0.0, |acc, &r, &ls| acc + LN_SQRT_2PI + ls + 0.5 * r * r);
        let kl_sum: f64 = Zip::from(&mu_p)
            .and(&ls_p)
            .and(&sigma_p)
            .fold(0.0, |acc, &m, &ls, &s| acc + 0.5 * (m * m + s * s - 1.0 - 2.0 * ls));
        let nll = nll_sum / n;
        let kl = kl_sum / n;
        let parts = LossParts {
            nll,
            kl,
            total: nll + self.beta * kl,
        };

        let Some(grads) = grads else {
            return Ok(parts);
        };

        let mut g_dec = Array2::zeros(dec_out.raw_dim());
        {
            let (mut g_mu, mut g_ls) = g_dec.multi_slice_mut((s![.., ..DECODER_OUT], s![.., DECODER_OUT..]));
            Zip::from(&mut g_mu)
                .and(&resid)
                .and(&inv_sigma_q)
                .for_each(|g, &r, &inv| *g = -r * inv / n);
            Zip::from(&mut g_ls).and(&resid).for_each(|g, &r| *g = (1.0 - r * r) / n);
        }
        let g_dec_in = self.decoder.backward(&dec_tape, g_dec.view(), &mut grads.decoder)?;
        let g_z = g_dec_in.slice(s![.., k..]);

        let beta = self.beta;
        let mut g_enc = Array2::zeros(enc_out.raw_dim());
        {
            let (mut g_mu, mut g_ls) = g_enc.multi_slice_mut((s![.., ..d], s![.., d..]));
            Zip::from(&mut g_mu)
                .and(&g_z)
                .and(&mu_p)
                .for_each(|g, &gz, &m| *g = gz + beta * m / n);
            Zip::from(&mut g_ls)
                .and(&g_z)
                .and(&sigma_p)
                .and(&noise)
                .for_each(|g, &gz, &s, &e| *g = gz * s * e + beta * (s * s - 1.0) / n);
        }
        self.encoder.backward(&enc_tape, g_enc.view(), &mut grads.encoder)?;
        Ok(parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::nn::DiagGaussian;
    use crate::sim::{Action, Observation};
    use ndarray::{Array1, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_quads(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Quadruple> {
        (0..n)
            .map(|_| Quadruple {
                o: Observation::new((0..k).map(|_| rng.gen_range(0.0..1.0)).collect()),
                g: Observation::new((0..k).map(|_| rng.gen_range(0.0..1.0)).collect()),
                a: Action::new(rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0)),
                d: rng.gen_range(1..10),
            })
            .collect()
    }

    /// Non-trivial output layers so every gradient path is exercised.
    fn perturbed_model(rng: &mut ChaCha8Rng, k: usize, beta: f64) -> ModelParams {
        let cfg = ModelConfig {
            rays: k,
            latent_dim: 3,
            hidden: vec![6, 5],
            beta,
        };
        let mut m = ModelParams::new(&cfg, rng);
        for s in m.param_slices_mut() {
            for v in s.iter_mut() {
                *v += rng.gen_range(-0.3..0.3);
            }
        }
        m
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let k = 4;
        let m = perturbed_model(&mut rng, k, 0.7);
        let quads = random_quads(&mut rng, 3, k);
        let batch: Vec<&Quadruple> = quads.iter().collect();
        let noise = Array2::from_shape_simple_fn((3, 3), || rng.sample(StandardNormal));
        let (_, grads) = m.vib_loss_and_grads(&batch, noise.view()).unwrap();
        let analytic: Vec<f64> = grads.slices().concat();

        let h = 1e-5;
        let mut idx = 0;
        let n_tensors = m.param_slices().len();
        for t in 0..n_tensors {
            for i in 0..m.param_slices()[t].len() {
                let mut plus = m.clone();
                plus.param_slices_mut()[t][i] += h;
                let mut minus = m.clone();
                minus.param_slices_mut()[t][i] -= h;
                let fd = (plus.vib_loss(&batch, noise.view()).unwrap().total
                    - minus.vib_loss(&batch, noise.view()).unwrap().total)
                    / (2.0 * h);
                let a = analytic[idx];
                let err = (fd - a).abs() / a.abs().max(fd.abs()).max(1e-2);
                assert!(err < 1e-4 || (fd - a).abs() < 1e-6, "tensor {t}[{i}]: {a} vs {fd}");
                idx += 1;
            }
        }
    }

    #[test]
    fn beta_zero_is_plain_gaussian_regression() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = 5;
        let m = perturbed_model(&mut rng, k, 0.0);
        let quads = random_quads(&mut rng, 4, k);
        let batch: Vec<&Quadruple> = quads.iter().collect();
        let noise = Array2::from_shape_simple_fn((4, 3), || rng.sample(StandardNormal));
        let parts = m.vib_loss(&batch, noise.view()).unwrap();

        // Independent route through the public single-sample API.
        let mut expected = 0.0;
        for (q, eps) in quads.iter().zip(noise.rows()) {
            let post = m.encode(&q.o, &q.g).unwrap();
            let z = post.reparameterize(eps).unwrap();
            let dec = m.decode(&q.o, z.view()).unwrap();
            let y = Array1::from(vec![q.a.v, q.a.omega, q.d as f64]);
            let g = DiagGaussian::new(dec.dist.mean().clone(), dec.dist.log_sigma().clone()).unwrap();
            expected -= g.log_prob(y.view()).unwrap();
        }
        expected /= quads.len() as f64;
        assert!((parts.total - expected).abs() < 1e-10, "{} vs {expected}", parts.total);
        assert!((parts.nll - expected).abs() < 1e-10);
    }

    #[test]
    fn decomposes_into_nll_plus_beta_kl() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = 4;
        let m = perturbed_model(&mut rng, k, 2.5);
        let quads = random_quads(&mut rng, 6, k);
        let batch: Vec<&Quadruple> = quads.iter().collect();
        let noise = Array2::from_shape_simple_fn((6, 3), || rng.sample(StandardNormal));
        let parts = m.vib_loss(&batch, noise.view()).unwrap();
        let kl: f64 = quads
            .iter()
            .map(|q| m.encode(&q.o, &q.g).unwrap().kl_to_standard_normal())
            .sum::<f64>()
            / 6.0;
        assert!((parts.kl - kl).abs() < 1e-12);
        assert!((parts.total - (parts.nll + 2.5 * kl)).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = perturbed_model(&mut rng, 4, 1.0);
        let noise = Array2::zeros((0, 3));
        assert!(m.vib_loss(&[], noise.view()).is_err());
    }
}
