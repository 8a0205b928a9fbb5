//! Adam with coupled L2 weight decay.

use logmend_tensor::{ParamSet, Tensor};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates, one pair per parameter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        let m = params.iter().map(|p| Tensor::zeros(p.value.rows(), p.value.cols())).collect();
        let v = params.iter().map(|p| Tensor::zeros(p.value.rows(), p.value.cols())).collect();
        Self { m, v, t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One update: weight decay is added to the gradient before the moment
/// updates (coupled L2), bias correction applied, gradients zeroed after.
pub fn adam_step(params: &mut ParamSet, state: &mut AdamState, lr: f64, weight_decay: f64) {
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - BETA1.powi(t);
    let bc2 = 1.0 - BETA2.powi(t);

    for (i, param) in params.iter_mut().enumerate() {
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let values = param.value.data_mut();
        let grads = param.grad.data();
        for j in 0..values.len() {
            let g = grads[j] + weight_decay * values[j];
            m[j] = BETA1 * m[j] + (1.0 - BETA1) * g;
            v[j] = BETA2 * v[j] + (1.0 - BETA2) * g * g;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            values[j] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
    params.zero_grads();
}
