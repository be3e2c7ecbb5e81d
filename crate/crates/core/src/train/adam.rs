use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Params, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-5, beta1: 0.9, beta2: 0.98, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let beta_ok = |b: f64| b > 0.0 && b < 1.0;
        if !(self.lr >= 0.0 && self.lr.is_finite()) || !beta_ok(self.beta1) || !beta_ok(self.beta2) || !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("bad optimizer settings {self:?}")));
        }
        Ok(())
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState<F> {
    pub step: u64,
    pub m: Vec<Vec<F>>,
    pub v: Vec<Vec<F>>,
}

impl<F: Scalar> AdamState<F> {
    pub fn new() -> Self {
        Self { step: 0, m: Vec::new(), v: Vec::new() }
    }
}

/// One bias-corrected Adam update of `params` with `grads`.
pub fn adam_step<F: Scalar, P: Params<F>>(
    params: &mut P,
    grads: &P,
    state: &mut AdamState<F>,
    config: &AdamConfig,
) -> Result<()> {
    let mut g: Vec<&Tensor<F>> = Vec::new();
    grads.visit("", &mut |_, t| g.push(t));
    let mut p: Vec<(String, &mut Tensor<F>)> = Vec::new();
    params.visit_mut("", &mut |name, t| p.push((name, t)));
    if g.len() != p.len() {
        return Err(Error::ShapeMismatch(format!("{} gradient tensors for {} parameters", g.len(), p.len())));
    }
    for ((name, t), gt) in p.iter().zip(&g) {
        if t.shape != gt.shape {
            return Err(Error::ShapeMismatch(format!("{name}: gradient {:?} vs parameter {:?}", gt.shape, t.shape)));
        }
    }
    if state.m.is_empty() {
        state.m = p.iter().map(|(_, t)| vec![F::zero(); t.len()]).collect();
        state.v = state.m.clone();
    } else if state.m.len() != p.len() || state.m.iter().zip(&p).any(|(m, (_, t))| m.len() != t.len()) {
        return Err(Error::ShapeMismatch("optimizer state does not match the parameters".into()));
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (F::lit(config.beta1), F::lit(config.beta2));
    let (c1, c2) = (F::one() - b1.powi(t), F::one() - b2.powi(t));
    let (lr, eps) = (F::lit(config.lr), F::lit(config.eps));
    for (k, ((_, param), grad)) in p.into_iter().zip(g).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..param.data.len() {
            let gi = grad.data[i];
            m[i] = b1 * m[i] + (F::one() - b1) * gi;
            v[i] = b2 * v[i] + (F::one() - b2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            param.data[i] = param.data[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct One(Tensor<f64>);

    impl Params<f64> for One {
        fn visit<'a>(&'a self, _: &str, f: &mut dyn FnMut(String, &'a Tensor<f64>)) {
            f("w".into(), &self.0)
        }
        fn visit_mut<'a>(&'a mut self, _: &str, f: &mut dyn FnMut(String, &'a mut Tensor<f64>)) {
            f("w".into(), &mut self.0)
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = One(Tensor::zeros(&[1]));
        let g = One(Tensor::filled(&[1], 1.0));
        let mut s = AdamState::new();
        let cfg = AdamConfig::default();
        adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        assert!((p.0.data[0] + 1e-5 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let mut p = One(Tensor::filled(&[2], 0.5));
        let mut s = AdamState::new();
        let cfg = AdamConfig::default();
        adam_step(&mut p, &One(Tensor::filled(&[2], 2.0)), &mut s, &cfg).unwrap();
        let before = p.clone();
        let (m, v) = (s.m[0][0], s.v[0][0]);
        adam_step(&mut p, &One(Tensor::zeros(&[2])), &mut s, &AdamConfig { lr: 0.0, ..cfg }).unwrap();
        assert_eq!(p, before);
        assert!((s.m[0][0] - 0.9 * m).abs() < 1e-15 && (s.v[0][0] - 0.98 * v).abs() < 1e-15);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut p = One(Tensor::filled(&[3], 0.1));
            let mut s = AdamState::new();
            for k in 0..20 {
                let g = One(Tensor { shape: vec![3], data: vec![(k as f64).sin(), 0.3, -1.0 / (k as f64 + 1.0)] });
                adam_step(&mut p, &g, &mut s, &AdamConfig { lr: 1e-2, ..Default::default() }).unwrap();
            }
            p.0.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = One(Tensor::zeros(&[2]));
        let g = One(Tensor::zeros(&[3]));
        assert!(adam_step(&mut p, &g, &mut AdamState::new(), &AdamConfig::default()).is_err());
    }
}
