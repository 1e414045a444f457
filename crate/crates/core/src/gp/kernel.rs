//! Composite covariance functions: an ARD linear term combined with one
//! stationary term (rational quadratic, squared exponential or Matérn 5/2).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Lower bound on the observation noise variance.
pub const NOISE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stationary {
    RationalQuadratic,
    SquaredExponential,
    Matern52,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Linear term alone.
    Linear,
    Sum(Stationary),
    Product(Stationary),
}

impl KernelKind {
    pub const DEFAULT: KernelKind = KernelKind::Sum(Stationary::RationalQuadratic);

    /// Linear combined with each stationary kernel, by sum and by product.
    pub fn menu() -> Vec<KernelKind> {
        use Stationary::*;
        let st = [RationalQuadratic, SquaredExponential, Matern52];
        st.iter().map(|&s| KernelKind::Sum(s)).chain(st.iter().map(|&s| KernelKind::Product(s))).collect()
    }

    fn stationary(self) -> Option<Stationary> {
        match self {
            KernelKind::Linear => None,
            KernelKind::Sum(s) | KernelKind::Product(s) => Some(s),
        }
    }

    pub fn name(self) -> String {
        let s = |s: Stationary| match s {
            Stationary::RationalQuadratic => "rq",
            Stationary::SquaredExponential => "rbf",
            Stationary::Matern52 => "matern52",
        };
        match self {
            KernelKind::Linear => "linear".into(),
            KernelKind::Sum(x) => format!("linear+{}", s(x)),
            KernelKind::Product(x) => format!("linear*{}", s(x)),
        }
    }
}

impl Default for KernelKind {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperparams {
    /// Per-dimension linear weights.
    pub sigma_d: Vec<f64>,
    /// Rational-quadratic shape. Unused by the other stationary terms.
    pub alpha: f64,
    /// Length scale of the stationary term.
    pub sigma_len: f64,
    /// Observation noise variance.
    pub noise: f64,
}

impl KernelHyperparams {
    pub fn new(sigma_d: Vec<f64>, alpha: f64, sigma_len: f64, noise: f64) -> Result<Self> {
        let hp = Self { sigma_d, alpha, sigma_len, noise };
        hp.validate()?;
        Ok(hp)
    }

    pub fn default_for(dim: usize) -> Self {
        Self { sigma_d: vec![0.3; dim], alpha: 1.0, sigma_len: 1.5, noise: 0.05 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.sigma_len > 0.0 && self.sigma_len.is_finite()) {
            return Err(domain(format!("sigma_len must be positive, got {}", self.sigma_len)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(domain(format!("noise must be nonnegative, got {}", self.noise)));
        }
        if let Some(s) = self.sigma_d.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(domain(format!("linear weights must be nonnegative, got {s}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.sigma_d.len()
    }

    /// Noise actually added to the diagonal.
    pub fn effective_noise(&self) -> f64 {
        self.noise.max(NOISE_FLOOR)
    }

    /// Log-space coordinates used by the optimizer.
    pub(crate) fn to_theta(&self, kind: KernelKind) -> Vec<f64> {
        let mut t: Vec<f64> = self.sigma_d.iter().map(|s| s.max(1e-12).ln()).collect();
        match kind.stationary() {
            Some(Stationary::RationalQuadratic) => {
                t.push(self.alpha.ln());
                t.push(self.sigma_len.ln());
            }
            Some(_) => t.push(self.sigma_len.ln()),
            None => {}
        }
        t.push((self.noise - NOISE_FLOOR).max(1e-12).ln());
        t
    }

    pub(crate) fn from_theta(theta: &[f64], kind: KernelKind, template: &Self) -> Self {
        let d = template.dim();
        let mut hp = template.clone();
        hp.sigma_d = theta[..d].iter().map(|t| t.exp()).collect();
        let mut i = d;
        match kind.stationary() {
            Some(Stationary::RationalQuadratic) => {
                hp.alpha = theta[i].exp();
                hp.sigma_len = theta[i + 1].exp();
                i += 2;
            }
            Some(_) => {
                hp.sigma_len = theta[i].exp();
                i += 1;
            }
            None => {}
        }
        hp.noise = NOISE_FLOOR + theta[i].exp();
        hp
    }

    pub(crate) fn theta_bounds(&self, kind: KernelKind) -> Vec<(f64, f64)> {
        let mut b = vec![(-12.0, 4.0); self.dim()];
        match kind.stationary() {
            Some(Stationary::RationalQuadratic) => {
                b.push((-5.0, 8.0));
                b.push((-5.0, 6.0));
            }
            Some(_) => b.push((-5.0, 6.0)),
            None => {}
        }
        b.push((-28.0, 2.0));
        b
    }
}

fn stationary_value(s: Stationary, hp: &KernelHyperparams, r2: f64) -> f64 {
    let l2 = hp.sigma_len * hp.sigma_len;
    match s {
        Stationary::RationalQuadratic => (1.0 + r2 / (2.0 * hp.alpha * l2)).powf(-hp.alpha),
        Stationary::SquaredExponential => (-0.5 * r2 / l2).exp(),
        Stationary::Matern52 => {
            let r = (5.0 * r2 / l2).sqrt();
            (1.0 + r + r * r / 3.0) * (-r).exp()
        }
    }
}

pub(crate) fn eval_unchecked(kind: KernelKind, hp: &KernelHyperparams, x: &[f64], y: &[f64]) -> f64 {
    let lin: f64 = hp.sigma_d.iter().zip(x.iter().zip(y)).map(|(s, (a, b))| s * s * a * b).sum();
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    match kind {
        KernelKind::Linear => lin,
        KernelKind::Sum(s) => lin + stationary_value(s, hp, r2),
        KernelKind::Product(s) => lin * stationary_value(s, hp, r2),
    }
}

/// Covariance between two encoded feature vectors.
pub fn kernel_eval(kind: KernelKind, hp: &KernelHyperparams, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() != hp.dim() {
        return Err(domain(format!(
            "dimension mismatch: {} vs {} with {} linear weights",
            x.len(),
            y.len(),
            hp.dim()
        )));
    }
    Ok(eval_unchecked(kind, hp, x, y))
}

/// Gram matrix over `xs`, without noise.
pub fn gram(kind: KernelKind, hp: &KernelHyperparams, xs: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
    let n = xs.len();
    let mut k = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = eval_unchecked(kind, hp, &xs[i], &xs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hp(d: usize) -> KernelHyperparams {
        KernelHyperparams::new(vec![0.7; d], 1.3, 0.8, 0.0).unwrap()
    }

    #[test]
    fn origin_and_zero_distance() {
        let h = hp(3);
        let z = [0.0; 3];
        assert_eq!(kernel_eval(KernelKind::DEFAULT, &h, &z, &z).unwrap(), 1.0);
        let x = [0.5, -1.0, 2.0];
        let want = 0.49 * (0.25 + 1.0 + 4.0) + 1.0;
        assert!((kernel_eval(KernelKind::DEFAULT, &h, &x, &x).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn rq_only_closed_form() {
        let h = KernelHyperparams::new(vec![0.0; 2], 1.0, 1.0, 0.0).unwrap();
        let (x, y) = ([0.3, -1.2], [1.1, 0.4]);
        let r2 = 0.8f64.powi(2) + 1.6f64.powi(2);
        let want = 1.0 / (1.0 + r2 / 2.0);
        assert!((kernel_eval(KernelKind::DEFAULT, &h, &x, &y).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn matern_and_rbf_at_unit_distance() {
        let h = KernelHyperparams::new(vec![0.0], 1.0, 1.0, 0.0).unwrap();
        let rbf = kernel_eval(KernelKind::Sum(Stationary::SquaredExponential), &h, &[0.0], &[1.0]).unwrap();
        assert!((rbf - (-0.5f64).exp()).abs() < 1e-15);
        let m = kernel_eval(KernelKind::Sum(Stationary::Matern52), &h, &[0.0], &[1.0]).unwrap();
        let r = 5f64.sqrt();
        assert!((m - (1.0 + r + 5.0 / 3.0) * (-r).exp()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(kernel_eval(KernelKind::DEFAULT, &hp(2), &[1.0], &[1.0, 2.0]).is_err());
        assert!(kernel_eval(KernelKind::DEFAULT, &hp(2), &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn menu_has_six_distinct_kernels() {
        let m = KernelKind::menu();
        assert_eq!(m.len(), 6);
        let names: std::collections::HashSet<_> = m.iter().map(|k| k.name()).collect();
        assert_eq!(names.len(), 6);
    }

    #[test]
    fn theta_round_trip() {
        let h = KernelHyperparams::new(vec![0.2, 1.5], 2.5, 0.7, 0.01).unwrap();
        for kind in KernelKind::menu() {
            let back = KernelHyperparams::from_theta(&h.to_theta(kind), kind, &h);
            assert!((back.sigma_len - h.sigma_len).abs() < 1e-12);
            assert!((back.noise - h.noise).abs() < 1e-12);
            assert!((back.sigma_d[1] - 1.5).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn gram_is_symmetric_psd(
            pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 1..20),
            w in prop::collection::vec(0.0f64..2.0, 4),
            alpha in 0.1f64..10.0,
            len in 0.2f64..5.0,
            k in 0usize..6,
        ) {
            let kind = KernelKind::menu()[k];
            let h = KernelHyperparams::new(w, alpha, len, 0.0).unwrap();
            let g = gram(kind, &h, &pts);
            prop_assert!((&g - g.transpose()).abs().max() == 0.0);
            let eig = g.symmetric_eigenvalues();
            prop_assert!(eig.min() >= -1e-8, "min eigenvalue {}", eig.min());
        }
    }
}
