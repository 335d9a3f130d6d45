//! Adam optimizer and the step-decay learning-rate schedule.

/// Adam moment decay rates and the denominator guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators and the step counter for one
/// parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One Adam update with bias correction.
///
/// Panics if the parameter, gradient, and state lengths disagree; tensors
/// are created together and never resized, so a mismatch is a programming
/// error rather than a runtime condition.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamParams,
) {
    assert_eq!(params.len(), grads.len(), "gradient length mismatch");
    assert_eq!(params.len(), state.m.len(), "adam state length mismatch");

    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);

    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Effective learning rate after step decay:
/// `base_lr * gamma^floor(epoch / step_size)`.
pub fn step_lr(epoch: usize, base_lr: f64, step_size: usize, gamma: f64) -> f64 {
    if step_size == 0 {
        return base_lr;
    }
    base_lr * gamma.powi((epoch / step_size) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![0.5, -1.25, 3.0];
        let before = p.clone();
        let mut st = AdamState::new(3);
        adam_step(
            &mut p,
            &[0.0, 0.0, 0.0],
            &mut st,
            0.01,
            &AdamParams::default(),
        );
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_roughly_lr() {
        // g=1 from a fresh state: m_hat = v_hat = 1, so the step is
        // lr / (1 + eps).
        let mut p = vec![0.0];
        let mut st = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut st, 0.001, &AdamParams::default());
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15, "got {}", p[0]);
        assert!((p[0] + 0.001).abs() < 1e-10);
    }

    #[test]
    fn constant_gradient_scale_invariance() {
        // After bias correction a constant gradient g and 2g produce the
        // same update direction and magnitude.
        let cfg = AdamParams::default();
        let mut p1 = vec![1.0];
        let mut p2 = vec![1.0];
        let mut s1 = AdamState::new(1);
        let mut s2 = AdamState::new(1);
        for _ in 0..5 {
            adam_step(&mut p1, &[0.3], &mut s1, 0.01, &cfg);
            adam_step(&mut p2, &[0.6], &mut s2, 0.01, &cfg);
        }
        assert!((p1[0] - p2[0]).abs() < 1e-7, "{} vs {}", p1[0], p2[0]);
    }

    #[test]
    fn step_lr_halves_every_ten_epochs() {
        assert_eq!(step_lr(0, 0.001, 10, 0.5), 0.001);
        assert_eq!(step_lr(9, 0.001, 10, 0.5), 0.001);
        assert_eq!(step_lr(10, 0.001, 10, 0.5), 0.0005);
        assert_eq!(step_lr(25, 0.001, 10, 0.5), 0.00025);
    }
}
