use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Norm::L1 => vector::l1(x),
            Norm::L2 => vector::l2(x),
            Norm::Linf => vector::linf(x),
        }
    }

    /// The Hölder conjugate norm.
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Linf,
            Norm::L2 => Norm::L2,
            Norm::Linf => Norm::L1,
        }
    }

    /// `1/p`, with `1/∞ = 0`.
    pub(crate) fn reciprocal(self) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 0.5,
            Norm::Linf => 0.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

/// An `ℓᵖ` norm or a functional gap `x ↦ |⟨φ, x⟩|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seminorm {
    Norm(Norm),
    Functional(Vec<f64>),
}

impl Seminorm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Seminorm::Norm(n) => n.eval(x),
            Seminorm::Functional(phi) => vector::dot(phi, x).abs(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Seminorm::Norm(n) => n.label().to_string(),
            Seminorm::Functional(phi) => format!("functional[{}]", phi.len()),
        }
    }
}

impl From<Norm> for Seminorm {
    fn from(n: Norm) -> Self {
        Seminorm::Norm(n)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeminormFamily(pub Vec<Seminorm>);

impl SeminormFamily {
    /// Largest violation of subadditivity or absolute homogeneity over random
    /// samples in `ℝ^dim`.
    pub fn axiom_violation<R: Rng>(&self, dim: usize, samples: usize, rng: &mut R) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lambda = rng.gen_range(-3.0..3.0);
            let mut xy = x.clone();
            vector::axpy(1.0, &y, &mut xy);
            for q in &self.0 {
                worst = worst.max(q.eval(&xy) - q.eval(&x) - q.eval(&y));
                worst = worst.max((q.eval(&vector::scale(lambda, &x)) - lambda.abs() * q.eval(&x)).abs());
            }
        }
        worst
    }
}
