use crate::error::{Error, Result};

/// Adam moments with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::config(format!(
                "adam state holds {} moments; got {} params and {} gradients",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        if let Some(bad) = grad.iter().find(|g| !g.is_finite()) {
            return Err(Error::numeric(format!("non-finite gradient component {bad}")));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_lr_sized() {
        let mut adam = AdamState::new(1, 0.01);
        let mut p = [0.0];
        adam.step(&mut p, &[1.0]).unwrap();
        assert!((p[0] + 0.01 / (1.0 + 1e-8)).abs() < 1e-15);
        assert!((p[0] + 0.0099999999).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut adam = AdamState::new(3, 0.01);
        let mut p = [0.5, -0.25, 2.0];
        adam.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, [0.5, -0.25, 2.0]);
    }

    #[test]
    fn two_steps_follow_recurrence() {
        // hand recurrence with g = 1:
        // t=1: m=0.1, v=0.001, m_hat=1, v_hat=1        -> -0.01/(1+eps)
        // t=2: m=0.19, v=0.001999, m_hat=0.19/0.19=1,
        //      v_hat=0.001999/0.001999=1               -> -0.01/(1+eps)
        let mut adam = AdamState::new(1, 0.01);
        let mut p = [0.0];
        adam.step(&mut p, &[1.0]).unwrap();
        adam.step(&mut p, &[1.0]).unwrap();
        let m: f64 = 0.19;
        let v: f64 = 0.001 * 0.999 + 0.001;
        assert!((adam.m[0] - m).abs() < 1e-15);
        assert!((adam.v[0] - v).abs() < 1e-15);
        let expected = -2.0 * 0.01 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-12);
        assert_eq!(adam.step_count, 2);
    }

    #[test]
    fn rejects_bad_input() {
        let mut adam = AdamState::new(2, 0.01);
        assert!(matches!(
            adam.step(&mut [0.0, 0.0], &[f64::NAN, 0.0]),
            Err(Error::Numeric(_))
        ));
        assert!(matches!(adam.step(&mut [0.0], &[0.0]), Err(Error::Config(_))));
    }
}
