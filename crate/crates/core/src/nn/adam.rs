use super::{Gradients, Mlp};

/// Adam with bias-corrected first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        Self::with_betas(net, lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(net: &Mlp, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        assert!(lr > 0.0, "learning rate must be positive");
        Self {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn timestep(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        assert_eq!(
            grads.weights.iter().map(Vec::len).collect::<Vec<_>>(),
            self.m.weights.iter().map(Vec::len).collect::<Vec<_>>(),
            "gradient shape mismatch"
        );
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);

        let g_iter = grads.weights.iter().chain(&grads.biases).flatten();
        let m_iter = self.m.weights.iter_mut().chain(self.m.biases.iter_mut()).flatten();
        let v_iter = self.v.weights.iter_mut().chain(self.v.biases.iter_mut()).flatten();
        for (((p, &g), m), v) in net.params_mut().zip(g_iter).zip(m_iter).zip(v_iter) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(w: f64) -> Mlp {
        Mlp::from_parts(vec![1, 1], vec![vec![w]], vec![vec![0.0]]).unwrap()
    }

    fn grad(g: f64) -> Gradients {
        Gradients {
            weights: vec![vec![g]],
            biases: vec![vec![0.0]],
        }
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut net = scalar(1.5);
        let mut opt = Adam::new(&net, 0.01);
        opt.step(&mut net, &grad(0.0));
        assert_eq!(net.weights(0), &[1.5]);
        assert_eq!(opt.timestep(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m̂ = g, v̂ = g² → Δ = lr·g/(|g| + ε)
        for g in [0.3, -2.0, 1e-3] {
            let mut net = scalar(0.0);
            let mut opt = Adam::new(&net, 0.001);
            opt.step(&mut net, &grad(g));
            let expected = -0.001 * g / (g.abs() + 1e-8);
            assert!((net.weights(0)[0] - expected).abs() < 1e-15);
            assert!((net.weights(0)[0].abs() - 0.001).abs() < 1e-7);
        }
    }

    #[test]
    fn updates_depend_on_history() {
        let mut a = scalar(0.0);
        let mut opt_a = Adam::new(&a, 0.1);
        opt_a.step(&mut a, &grad(1.0));
        opt_a.step(&mut a, &grad(1.0));

        let mut b = scalar(0.0);
        let mut opt_b = Adam::new(&b, 0.1);
        opt_b.step(&mut b, &grad(2.0));
        assert_ne!(a.weights(0), b.weights(0));
    }
}
