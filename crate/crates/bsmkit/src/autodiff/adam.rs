//! Adam with bias correction over lists of parameter tensors.

use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor]) -> Self {
        AdamState {
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Tensor] {
        &self.m
    }

    /// One Adam update. Deterministic: plain sequential loops.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor], cfg: &AdamConfig) {
        assert_eq!(params.len(), self.m.len(), "adam: parameter count changed");
        assert_eq!(params.len(), grads.len(), "adam: gradient count mismatch");
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - cfg.beta1.powf(t);
        let bc2 = 1.0 - cfg.beta2.powf(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert_eq!(p.shape(), g.shape(), "adam: shape mismatch");
            let pd = p.data_mut();
            let gd = g.data();
            let md = m.data_mut();
            let vd = v.data_mut();
            for i in 0..pd.len() {
                md[i] = cfg.beta1 * md[i] + (1.0 - cfg.beta1) * gd[i];
                vd[i] = cfg.beta2 * vd[i] + (1.0 - cfg.beta2) * gd[i] * gd[i];
                let m_hat = md[i] / bc1;
                let v_hat = vd[i] / bc2;
                pd[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut params = vec![Tensor::from_vec(&[2], vec![1.5, -0.25])];
        let mut state = AdamState::new(&params);
        let cfg = AdamConfig { lr: 0.1, ..Default::default() };
        // One real step to load the moments.
        let g = vec![Tensor::from_vec(&[2], vec![1.0, -2.0])];
        state.step(&mut params, &g, &cfg);
        let m_after_one = state.m[0].data().to_vec();
        let zero = vec![Tensor::zeros(&[2])];
        let before = params[0].data().to_vec();
        for _ in 0..50 {
            state.step(&mut params, &zero, &cfg);
        }
        // Moments decay toward zero.
        for (a, b) in state.m[0].data().iter().zip(&m_after_one) {
            assert!(a.abs() < b.abs() * 1e-2);
        }
        // With zero gradients the m_hat is still nonzero briefly, so params
        // drift, but with exactly zero moments nothing moves.
        let mut fresh_params = vec![Tensor::from_vec(&[2], before.clone())];
        let mut fresh = AdamState::new(&fresh_params);
        fresh.step(&mut fresh_params, &zero, &cfg);
        assert_eq!(fresh_params[0].data(), before.as_slice());
    }

    #[test]
    fn constant_gradient_step_approaches_lr_sign() {
        let mut params = vec![Tensor::from_vec(&[1], vec![0.0])];
        let mut state = AdamState::new(&params);
        let cfg = AdamConfig { lr: 0.01, ..Default::default() };
        let g = vec![Tensor::from_vec(&[1], vec![3.7])];
        let mut prev = 0.0;
        let mut step_size = 0.0;
        for _ in 0..5000 {
            state.step(&mut params, &g, &cfg);
            step_size = prev - params[0].data()[0];
            prev = params[0].data()[0];
        }
        // |step| → lr·sign(g) = 0.01.
        assert_relative_eq!(step_size, 0.01, max_relative = 1e-3);
    }

    #[test]
    fn ten_steps_on_quadratic_match_hand_stepped_reference() {
        // f(x) = x², grad 2x, from x = 1, lr = 0.1. The reference below is an
        // independent transcription of the update equations.
        let cfg = AdamConfig { lr: 0.1, ..Default::default() };
        let mut params = vec![Tensor::from_vec(&[1], vec![1.0])];
        let mut state = AdamState::new(&params);
        let mut xs = Vec::new();
        for _ in 0..10 {
            let x = params[0].data()[0];
            let g = vec![Tensor::from_vec(&[1], vec![2.0 * x])];
            state.step(&mut params, &g, &cfg);
            xs.push(params[0].data()[0]);
        }

        let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 0.1);
        let mut x = 1.0f64;
        let mut m = 0.0f64;
        let mut v = 0.0f64;
        for (t, got) in (1..=10).zip(&xs) {
            let g = 2.0 * x;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + eps);
            assert_relative_eq!(x, *got, epsilon = 1e-12);
        }
    }
}
