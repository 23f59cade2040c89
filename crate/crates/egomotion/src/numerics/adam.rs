use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Adam optimizer state for a fixed list of parameter tensors.
///
/// `step` applies one bias-corrected update in place. A non-finite gradient
/// rejects the whole update and reports which tensor and entry offended, so a
/// diverging run fails loudly instead of poisoning the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(lr: f64, param_shapes: &[&[usize]]) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: param_shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            v: param_shapes.iter().map(|s| Tensor::zeros(s)).collect(),
        }
    }

    pub fn for_params(lr: f64, params: &[&Tensor]) -> Self {
        let shapes: Vec<&[usize]> = params.iter().map(|t| t.shape()).collect();
        Self::new(lr, &shapes)
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::dimension(
                "AdamState::step tensor count",
                self.m.len(),
                params.len().max(grads.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads.iter()).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.m[i].shape() {
                return Err(Error::dimension(
                    format!("AdamState::step tensor {i}"),
                    format!("{:?}", self.m[i].shape()),
                    format!("p {:?} / g {:?}", p.shape(), g.shape()),
                ));
            }
            if let Some(j) = g.data().iter().position(|x| !x.is_finite()) {
                return Err(Error::non_finite(format!(
                    "AdamState::step gradient tensor {i} entry {j}"
                )));
            }
        }

        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let pd = p.data_mut();
            let gd = g.data();
            let md = m.data_mut();
            let vd = v.data_mut();
            for k in 0..pd.len() {
                md[k] = self.beta1 * md[k] + (1.0 - self.beta1) * gd[k];
                vd[k] = self.beta2 * vd[k] + (1.0 - self.beta2) * gd[k] * gd[k];
                let m_hat = md[k] / bc1;
                let v_hat = vd[k] / bc2;
                pd[k] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_signed_learning_rate() {
        // With m_hat = g and v_hat = g^2 the first update is
        // lr * g / (|g| + eps), i.e. almost exactly lr * sign(g).
        let mut p = Tensor::vector(vec![1.0]).unwrap();
        let g = Tensor::vector(vec![1.0]).unwrap();
        let mut adam = AdamState::for_params(0.1, &[&p]);
        adam.step(&mut [&mut p], &[&g]).unwrap();
        let expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        assert!((p.data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_gradient_without_mutating() {
        let mut p = Tensor::vector(vec![1.0, 2.0]).unwrap();
        let mut g = Tensor::zeros(&[2]);
        g.data_mut()[1] = f64::NAN;
        let mut adam = AdamState::for_params(0.1, &[&p]);
        let err = adam.step(&mut [&mut p], &[&g]).unwrap_err();
        assert!(err.to_string().contains("entry 1"), "{err}");
        assert_eq!(p.data(), &[1.0, 2.0]);
        assert_eq!(adam.steps_taken(), 0);
    }

    #[test]
    fn descends_a_quadratic() {
        let mut p = Tensor::vector(vec![3.0]).unwrap();
        let mut adam = AdamState::for_params(0.05, &[&p]);
        for _ in 0..500 {
            let g = Tensor::vector(vec![2.0 * p.data()[0]]).unwrap();
            adam.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert!(p.data()[0].abs() < 0.05, "p = {}", p.data()[0]);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut p = Tensor::vector(vec![1.0]).unwrap();
        let g = Tensor::zeros(&[2]);
        let mut adam = AdamState::for_params(0.1, &[&p]);
        assert!(adam.step(&mut [&mut p], &[&g]).is_err());
    }
}
