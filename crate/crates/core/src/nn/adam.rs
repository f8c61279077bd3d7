use super::NnError;

/// Adam moments for a list of flat parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(shapes: &[usize], lr: f64) -> Self {
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn for_tensors(tensors: &[&[f64]], lr: f64) -> Self {
        let shapes: Vec<usize> = tensors.iter().map(|t| t.len()).collect();
        Self::new(&shapes, lr)
    }

    /// One bias-corrected update of `params` in place.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::LengthMismatch(params.len(), self.m.len()));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            if p.len() != g.len() || p.len() != self.m[k].len() {
                return Err(NnError::LengthMismatch(p.len(), g.len()));
            }
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut st = AdamState::new(&[1], 0.001);
        let mut p = [0.5];
        st.step(&mut [&mut p[..]], &[&[1.0][..]]).unwrap();
        assert!((p[0] - (0.5 - 0.001)).abs() < 1e-10);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn zero_grad_is_noop() {
        let mut st = AdamState::new(&[3], 0.01);
        let mut p = [1.0, -2.0, 3.0];
        for _ in 0..4 {
            st.step(&mut [&mut p[..]], &[&[0.0; 3][..]]).unwrap();
        }
        assert_eq!(p, [1.0, -2.0, 3.0]);
    }
}
