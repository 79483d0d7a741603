//! One-hidden-layer tanh regression network on a fixed synthetic dataset.
//!
//! Parameter layout: `W1` (hidden x 2, row-major), `b1` (hidden), `w2`
//! (hidden), `b2` (scalar). Loss is the mean squared residual over the
//! dataset; gradients come from a hand-written reverse pass.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::param::ParamVec;
use crate::rng::{NoiseSeed, SeedStreams};

use super::{Objective, ObjectiveConstants};

const INPUT_DIM: usize = 2;
pub const MAX_HIDDEN: usize = 64;
pub const MAX_SAMPLES: usize = 4096;
const DEFAULT_BATCH: usize = 32;
/// Parameter box `[-1, 1]^p` the noise bound is estimated over.
const PROBE_BOX: f64 = 1.0;

/// How the stochastic oracle draws its minibatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlpBatch {
    /// Whole dataset; the oracle is then exact.
    Full,
    /// `b` indices drawn uniformly with replacement.
    WithReplacement(usize),
}

#[derive(Debug, Clone)]
pub struct MlpRegression {
    hidden: usize,
    inputs: Vec<[f64; INPUT_DIM]>,
    targets: Vec<f64>,
    batch: MlpBatch,
    constants: ObjectiveConstants,
}

pub fn make_mlp_regression(hidden: usize, samples: usize, seed: i64) -> Result<MlpRegression> {
    MlpRegression::new(hidden, samples, seed, MlpBatch::WithReplacement(DEFAULT_BATCH))
}

impl MlpRegression {
    pub fn new(hidden: usize, samples: usize, seed: i64, batch: MlpBatch) -> Result<Self> {
        if hidden == 0 || hidden > MAX_HIDDEN {
            return Err(Error::Config(format!(
                "hidden must be in 1..={MAX_HIDDEN}, got {hidden}"
            )));
        }
        if samples == 0 || samples > MAX_SAMPLES {
            return Err(Error::Config(format!(
                "samples must be in 1..={MAX_SAMPLES}, got {samples}"
            )));
        }
        if let MlpBatch::WithReplacement(0) = batch {
            return Err(Error::Config("minibatch size must be positive".into()));
        }
        let streams = SeedStreams::new(seed as u64);
        let mut rng = streams.rng("mlp-data", 0);
        let label_noise = Normal::new(0.0, 0.05).expect("valid normal");
        let mut inputs = Vec::with_capacity(samples);
        let mut targets = Vec::with_capacity(samples);
        for _ in 0..samples {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            inputs.push([a, b]);
            targets.push((2.0 * a).sin() + 0.5 * (3.0 * b).cos() + label_noise.sample(&mut rng));
        }
        let dim = hidden * INPUT_DIM + 2 * hidden + 1;
        let mut mlp = MlpRegression {
            hidden,
            inputs,
            targets,
            batch,
            constants: ObjectiveConstants {
                dim,
                smoothness_l: None,
                noise_sigma: 0.0,
                grad_norm_c: None,
                minima: Vec::new(),
            },
        };
        mlp.constants.noise_sigma = mlp.estimate_noise_sigma(&streams);
        Ok(mlp)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn samples(&self) -> usize {
        self.targets.len()
    }

    pub fn batch(&self) -> MlpBatch {
        self.batch
    }

    pub fn inputs(&self) -> &[[f64; INPUT_DIM]] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Box the random probe points of the noise estimate were drawn from.
    pub fn probe_box(&self) -> f64 {
        PROBE_BOX
    }

    pub fn predict(&self, params: &ParamVec, input: &[f64; INPUT_DIM]) -> f64 {
        let h = self.hidden;
        let p = params.as_slice();
        let (w1, rest) = p.split_at(h * INPUT_DIM);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        let mut out = b2[0];
        for k in 0..h {
            let z = w1[k * INPUT_DIM] * input[0] + w1[k * INPUT_DIM + 1] * input[1] + b1[k];
            out += w2[k] * z.tanh();
        }
        out
    }

    /// Accumulate `scale * d/dparams (pred_i - t_i)^2` into `acc`.
    fn accumulate_example_grad(&self, params: &[f64], i: usize, scale: f64, acc: &mut [f64]) {
        let h = self.hidden;
        let (w1, rest) = params.split_at(h * INPUT_DIM);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        let x = self.inputs[i];

        let mut act = [0.0f64; MAX_HIDDEN];
        let mut pred = b2[0];
        for k in 0..h {
            let a = (w1[k * INPUT_DIM] * x[0] + w1[k * INPUT_DIM + 1] * x[1] + b1[k]).tanh();
            act[k] = a;
            pred += w2[k] * a;
        }
        let r = scale * 2.0 * (pred - self.targets[i]);

        let (gw1, grest) = acc.split_at_mut(h * INPUT_DIM);
        let (gb1, grest) = grest.split_at_mut(h);
        let (gw2, gb2) = grest.split_at_mut(h);
        gb2[0] += r;
        for k in 0..h {
            gw2[k] += r * act[k];
            let dz = r * w2[k] * (1.0 - act[k] * act[k]);
            gb1[k] += dz;
            gw1[k * INPUT_DIM] += dz * x[0];
            gw1[k * INPUT_DIM + 1] += dz * x[1];
        }
    }

    fn grad_over(&self, params: &ParamVec, indices: impl Iterator<Item = usize>, count: usize) -> ParamVec {
        let mut acc = vec![0.0; self.constants.dim];
        let scale = 1.0 / count as f64;
        for i in indices {
            self.accumulate_example_grad(params.as_slice(), i, scale, &mut acc);
        }
        ParamVec::from_vec(acc)
    }

    /// Exact minibatch variance `(1/b) (mean_i |grad l_i|^2 - |grad f|^2)`.
    pub fn minibatch_variance(&self, params: &ParamVec) -> f64 {
        let b = match self.batch {
            MlpBatch::Full => return 0.0,
            MlpBatch::WithReplacement(b) => b as f64,
        };
        let n = self.samples();
        let mut second_moment = 0.0;
        let mut scratch = vec![0.0; self.constants.dim];
        for i in 0..n {
            scratch.iter_mut().for_each(|v| *v = 0.0);
            self.accumulate_example_grad(params.as_slice(), i, 1.0, &mut scratch);
            second_moment += scratch.iter().map(|v| v * v).sum::<f64>();
        }
        second_moment /= n as f64;
        ((second_moment - self.grad(params).norm_sq()) / b).max(0.0)
    }

    fn estimate_noise_sigma(&self, streams: &SeedStreams) -> f64 {
        if self.batch == MlpBatch::Full {
            return 0.0;
        }
        let mut rng = streams.rng("mlp-noise-probe", 0);
        let mut worst: f64 = 0.0;
        for _ in 0..64 {
            let p = ParamVec::from_vec(
                (0..self.constants.dim)
                    .map(|_| rng.random_range(-PROBE_BOX..PROBE_BOX))
                    .collect(),
            );
            worst = worst.max(self.minibatch_variance(&p));
        }
        // Margin over the probed maximum; the bound is an estimate on the box.
        1.5 * worst.sqrt()
    }
}

impl Objective for MlpRegression {
    fn name(&self) -> &str {
        "mlp"
    }

    fn constants(&self) -> &ObjectiveConstants {
        &self.constants
    }

    fn eval(&self, x: &ParamVec) -> f64 {
        let n = self.samples() as f64;
        self.inputs
            .iter()
            .zip(&self.targets)
            .map(|(input, t)| {
                let r = self.predict(x, input) - t;
                r * r
            })
            .sum::<f64>()
            / n
    }

    fn grad(&self, x: &ParamVec) -> ParamVec {
        let n = self.samples();
        self.grad_over(x, 0..n, n)
    }

    fn stochastic_grad(&self, x: &ParamVec, noise: NoiseSeed) -> ParamVec {
        match self.batch {
            MlpBatch::Full => self.grad(x),
            MlpBatch::WithReplacement(b) => {
                let n = self.samples();
                let mut rng = noise.rng();
                let idx: Vec<usize> = (0..b).map(|_| rng.random_range(0..n)).collect();
                self.grad_over(x, idx.into_iter(), b)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_scale_sizes() {
        assert!(make_mlp_regression(0, 10, 1).is_err());
        assert!(make_mlp_regression(65, 10, 1).is_err());
        assert!(make_mlp_regression(4, 4097, 1).is_err());
        assert!(MlpRegression::new(4, 10, 1, MlpBatch::WithReplacement(0)).is_err());
    }

    #[test]
    fn full_batch_oracle_is_exact() {
        let m = MlpRegression::new(8, 64, 3, MlpBatch::Full).unwrap();
        let x = ParamVec::from_vec((0..m.dim()).map(|i| (i as f64 * 0.37).sin()).collect());
        assert_eq!(m.stochastic_grad(&x, NoiseSeed(11)), m.grad(&x));
        assert_eq!(m.noise_sigma(), 0.0);
    }

    #[test]
    fn zero_weights_loss_is_mean_squared_target() {
        let m = make_mlp_regression(5, 100, 7).unwrap();
        let expected = m.targets().iter().map(|t| t * t).sum::<f64>() / 100.0;
        assert!((m.eval(&ParamVec::zeros(m.dim())) - expected).abs() < 1e-15);
    }
}
