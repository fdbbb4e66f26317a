use super::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moments per flat tensor, plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn for_shapes(lengths: impl IntoIterator<Item = usize>) -> Self {
        let (m, v) = lengths.into_iter().map(|n| (vec![0.0; n], vec![0.0; n])).unzip();
        AdamState { m, v, step: 0 }
    }

    pub fn new(params: &ModelParams) -> Self {
        Self::for_shapes(params.tensors().iter().map(|(_, _, d)| d.len()))
    }

    /// One update over parallel lists of parameter and gradient slices.
    pub fn step_slices(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>, config: &AdamConfig) {
        assert_eq!(params.len(), self.m.len(), "optimizer state does not match parameters");
        self.step += 1;
        let t = self.step as i32;
        let correction1 = 1.0 - config.beta1.powi(t);
        let correction2 = 1.0 - config.beta2.powi(t);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
                v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                p[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
    }
}

pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState, config: &AdamConfig) {
    let g: Vec<&[f64]> = grads.tensors().into_iter().map(|(_, _, d)| d).collect();
    state.step_slices(params.tensors_mut(), g, config);
}
