use ndarray::{Array2, Zip};

use super::params::ParamSet;

/// Adam with bias correction and no learning-rate decay.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(params: &ParamSet, lr: f64) -> Self {
        let zeros = params.zeroed().tensors;
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, first: zeros.clone(), second: zeros }
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &[Array2<f64>]) {
        assert_eq!(grads.len(), params.len());
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (i, g) in grads.iter().enumerate() {
            Zip::from(&mut params.tensors[i])
                .and(&mut self.first[i])
                .and(&mut self.second[i])
                .and(g)
                .for_each(|p, m, v, &g| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
        }
    }
}
