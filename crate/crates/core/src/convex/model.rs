use std::borrow::Cow;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seminorm::{Norm, Seminorm};
use super::vector;
use crate::embed::EmbeddedSet;
use crate::{Error, Result};

/// Default absolute membership tolerance.
pub const TAU_MEM: f64 = 1e-9;

/// Points farther than this many tolerances outside a model are rejected
/// instead of projected back.
pub const PROJECTION_SLACK: f64 = 10.0;

/// Number of leading coordinates used when sampling points of `prob(ℕ)`.
const PROB_SAMPLE_SUPPORT: usize = 8;

/// A bounded convex set in a finite-dimensional (or finitely supported)
/// real vector space.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexModel {
    /// Probability vectors with `coords` entries (the simplex `Δ^{coords-1}`).
    Simplex { coords: usize },
    /// Closed `ℓᵖ` ball of radius `radius` around the origin of `ℝ^dim`.
    Ball { dim: usize, norm: Norm, radius: f64 },
    /// Product of closed intervals `[lo_i, hi_i]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Finitely supported probability vectors on `ℕ`, i.e. points of
    /// `prob(ℕ)` stored as dense prefixes.
    ProbN,
    /// The image of a compact convex set under an affine embedding.
    #[serde(skip)]
    Embedded(Arc<EmbeddedSet>),
}

impl ConvexModel {
    pub fn simplex(coords: usize) -> Self {
        ConvexModel::Simplex { coords }
    }

    pub fn unit_ball(dim: usize, norm: Norm) -> Self {
        ConvexModel::Ball { dim, norm, radius: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexModel::Simplex { coords } if *coords == 0 => Err(Error::domain("simplex needs at least one coordinate")),
            ConvexModel::Ball { dim, radius, .. } if *dim == 0 || !(radius.is_finite() && *radius > 0.0) => {
                Err(Error::domain("ball needs positive dimension and a positive finite radius"))
            }
            ConvexModel::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::domain("box bounds must be nonempty and of equal length"));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
                    return Err(Error::domain("box bounds must be finite with lo <= hi"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Ambient dimension; `None` for `prob(ℕ)`, whose points have any length.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexModel::Simplex { coords } => Some(*coords),
            ConvexModel::Ball { dim, .. } => Some(*dim),
            ConvexModel::Box { lo, .. } => Some(lo.len()),
            ConvexModel::ProbN => None,
            ConvexModel::Embedded(e) => Some(e.dim()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ConvexModel::Simplex { coords } => format!("simplex({coords})"),
            ConvexModel::Ball { dim, norm, radius } => format!("ball({dim}, {}, {radius})", norm.label()),
            ConvexModel::Box { lo, .. } => format!("box({})", lo.len()),
            ConvexModel::ProbN => "prob(N)".to_string(),
            ConvexModel::Embedded(e) => format!("embedded({})", e.dim()),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.dim() {
            Some(d) if d != x.len() => Err(Error::domain(format!(
                "point of length {} does not belong to {}",
                x.len(),
                self.label()
            ))),
            _ if !vector::is_finite(x) => Err(Error::domain("point has non-finite coordinates")),
            _ => Ok(()),
        }
    }

    /// How far `x` is from satisfying the membership test; 0 inside.
    /// Balls measure the relative excess `‖x‖/ρ − 1`.
    pub fn violation(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            ConvexModel::Simplex { .. } | ConvexModel::ProbN => simplex_violation(x),
            ConvexModel::Ball { norm, radius, .. } => (norm.eval(x) / radius - 1.0).max(0.0),
            ConvexModel::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .fold(0.0, |m: f64, (v, (a, b))| m.max(a - v).max(v - b)),
            ConvexModel::Embedded(e) => e.violation(x),
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_within(x, TAU_MEM)
    }

    pub fn contains_within(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x).is_ok_and(|v| v <= tol)
    }

    /// Nearest-point style repair used for points marginally outside.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexModel::Simplex { .. } | ConvexModel::ProbN => {
                let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
                let s: f64 = clipped.iter().sum();
                if s > 0.0 {
                    vector::scale(1.0 / s, &clipped)
                } else {
                    vec![1.0 / x.len().max(1) as f64; x.len().max(1)]
                }
            }
            ConvexModel::Ball { norm, radius, .. } => {
                let n = norm.eval(x);
                if n > *radius {
                    vector::scale(radius / n, x)
                } else {
                    x.to_vec()
                }
            }
            ConvexModel::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| v.clamp(*a, *b))
                .collect(),
            ConvexModel::Embedded(e) => e.project(x),
        }
    }

    /// Accepts points inside within `tol`, projects points within
    /// `PROJECTION_SLACK·tol` back with a warning, and rejects the rest.
    pub fn admit<'a>(&self, x: &'a [f64], tol: f64) -> Result<Cow<'a, [f64]>> {
        let v = self.violation(x)?;
        if v <= tol {
            Ok(Cow::Borrowed(x))
        } else if v <= PROJECTION_SLACK * tol {
            log::warn!("point outside {} by {v:.3e}; projecting back", self.label());
            Ok(Cow::Owned(self.project(x)))
        } else {
            Err(Error::domain(format!("point outside {} by {v:.3e}", self.label())))
        }
    }

    /// Diameter of the model in the seminorm `q` (exact for every model kind).
    pub fn diameter(&self, q: &Seminorm) -> f64 {
        match (self, q) {
            (ConvexModel::Simplex { .. } | ConvexModel::ProbN, Seminorm::Norm(n)) => match n {
                Norm::L1 => 2.0,
                Norm::L2 => std::f64::consts::SQRT_2,
                Norm::Linf => 1.0,
            },
            (ConvexModel::Simplex { coords }, Seminorm::Functional(phi)) => {
                let vals = (0..*coords).map(|i| phi.get(i).copied().unwrap_or(0.0));
                let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                hi - lo
            }
            (ConvexModel::ProbN, Seminorm::Functional(phi)) => {
                let hi = phi.iter().fold(0.0_f64, |m, v| m.max(*v));
                let lo = phi.iter().fold(0.0_f64, |m, v| m.min(*v));
                hi - lo
            }
            (ConvexModel::Ball { dim, norm, radius }, Seminorm::Norm(r)) => {
                // ‖u‖_r ≤ m^{1/r − 1/p} ‖u‖_p when r < p, and ‖u‖_r ≤ ‖u‖_p otherwise;
                // both bounds are attained on the ball.
                let exponent = (r.reciprocal() - norm.reciprocal()).max(0.0);
                2.0 * radius * (*dim as f64).powf(exponent)
            }
            (ConvexModel::Ball { dim, norm, radius }, Seminorm::Functional(phi)) => {
                let phi: Vec<f64> = (0..*dim).map(|i| phi.get(i).copied().unwrap_or(0.0)).collect();
                2.0 * radius * norm.dual().eval(&phi)
            }
            (ConvexModel::Box { lo, hi }, Seminorm::Norm(r)) => r.eval(&vector::sub(hi, lo)),
            (ConvexModel::Box { lo, hi }, Seminorm::Functional(phi)) => lo
                .iter()
                .zip(hi)
                .enumerate()
                .map(|(i, (a, b))| phi.get(i).copied().unwrap_or(0.0).abs() * (b - a))
                .sum(),
            (ConvexModel::Embedded(e), q) => e.diameter(q),
        }
    }

    /// Extreme points: all of them when there are at most `max` (or
    /// they are finite in number), otherwise a deterministic selection plus
    /// random ones.
    pub fn extreme_points<R: Rng>(&self, rng: &mut R, max: usize) -> Vec<Vec<f64>> {
        match self {
            ConvexModel::Simplex { coords } => (0..*coords).map(|i| unit(*coords, i, 1.0)).collect(),
            ConvexModel::ProbN => (0..PROB_SAMPLE_SUPPORT).map(|i| unit(i + 1, i, 1.0)).collect(),
            ConvexModel::Ball { dim, norm, radius } => {
                let mut out: Vec<Vec<f64>> = Vec::new();
                match norm {
                    Norm::L1 | Norm::L2 => {
                        for i in 0..*dim {
                            out.push(unit(*dim, i, *radius));
                            out.push(unit(*dim, i, -radius));
                        }
                    }
                    Norm::Linf => {}
                }
                while out.len() < max.max(2 * dim) && *norm != Norm::L1 {
                    let p = match norm {
                        Norm::L2 => {
                            let d: Vec<f64> = (0..*dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                            let n = vector::l2(&d);
                            if n == 0.0 {
                                continue;
                            }
                            vector::scale(radius / n, &d)
                        }
                        _ => (0..*dim).map(|_| if rng.gen() { *radius } else { -radius }).collect(),
                    };
                    out.push(p);
                }
                out
            }
            ConvexModel::Box { lo, hi } => {
                let m = lo.len();
                let corner = |bits: &dyn Fn(usize) -> bool| -> Vec<f64> {
                    (0..m).map(|i| if bits(i) { hi[i] } else { lo[i] }).collect()
                };
                if m < usize::BITS as usize && (1usize << m) <= max {
                    (0..1usize << m).map(|k| corner(&|i| k >> i & 1 == 1)).collect()
                } else {
                    (0..max).map(|_| {
                        let bits: Vec<bool> = (0..m).map(|_| rng.gen()).collect();
                        corner(&|i| bits[i])
                    }).collect()
                }
            }
            ConvexModel::Embedded(e) => e.extreme_points(),
        }
    }

    /// A random point of the model (not uniformly distributed in general).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            ConvexModel::Simplex { coords } => random_probability(rng, *coords),
            ConvexModel::ProbN => random_probability(rng, PROB_SAMPLE_SUPPORT),
            ConvexModel::Ball { dim, norm, radius } => loop {
                let d: Vec<f64> = (0..*dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = norm.eval(&d);
                if n > 0.0 {
                    let t: f64 = rng.gen();
                    break vector::scale(radius * t / n, &d);
                }
            },
            ConvexModel::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| if a < b { rng.gen_range(*a..=*b) } else { *a })
                .collect(),
            ConvexModel::Embedded(e) => {
                let x = e.family().domain().sample(rng);
                e.embed_unchecked(&x)
            }
        }
    }
}

fn simplex_violation(x: &[f64]) -> f64 {
    let neg = x.iter().fold(0.0_f64, |m, v| m.max(-v));
    let sum: f64 = x.iter().sum();
    neg.max((sum - 1.0).abs())
}

fn unit(len: usize, i: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[i] = value;
    v
}

/// Flat Dirichlet sample via normalized exponentials.
fn random_probability<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    vector::scale(1.0 / s, &e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<ConvexModel> {
        vec![
            ConvexModel::simplex(4),
            ConvexModel::unit_ball(3, Norm::L1),
            ConvexModel::unit_ball(3, Norm::L2),
            ConvexModel::Ball { dim: 3, norm: Norm::Linf, radius: 2.0 },
            ConvexModel::Box { lo: vec![-1.0, 0.0, 2.0], hi: vec![1.0, 0.5, 2.0] },
            ConvexModel::ProbN,
        ]
    }

    #[test]
    fn samples_and_extreme_points_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in models() {
            for _ in 0..200 {
                assert!(m.contains(&m.sample(&mut rng)), "{}", m.label());
            }
            for p in m.extreme_points(&mut rng, 16) {
                assert!(m.contains(&p), "{}", m.label());
            }
        }
    }

    #[test]
    fn diameters_dominate_sampled_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let qs = [
            Seminorm::Norm(Norm::L1),
            Seminorm::Norm(Norm::L2),
            Seminorm::Norm(Norm::Linf),
            Seminorm::Functional(vec![1.0, -2.0, 0.5]),
        ];
        for m in models() {
            let mut pts: Vec<Vec<f64>> = (0..100).map(|_| m.sample(&mut rng)).collect();
            pts.extend(m.extreme_points(&mut rng, 16));
            for q in &qs {
                let d = m.diameter(q);
                let mut best: f64 = 0.0;
                for x in &pts {
                    for y in &pts {
                        best = best.max(q.eval(&vector::sub(x, y)));
                    }
                }
                assert!(best <= d + 1e-12, "{} {:?}: {best} > {d}", m.label(), q);
            }
        }
    }

    #[test]
    fn closed_form_diameters() {
        let l2 = ConvexModel::unit_ball(4, Norm::L2);
        assert!((l2.diameter(&Norm::L1.into()) - 4.0).abs() < 1e-12);
        assert_eq!(l2.diameter(&Norm::Linf.into()), 2.0);
        assert_eq!(ConvexModel::simplex(3).diameter(&Norm::L1.into()), 2.0);
    }

    #[test]
    fn admission_projects_marginal_points_and_rejects_far_ones() {
        let s = ConvexModel::simplex(2);
        assert!(matches!(s.admit(&[0.5, 0.5], TAU_MEM), Ok(Cow::Borrowed(_))));
        let p = s.admit(&[1.0 + 5e-9, 0.0], TAU_MEM).unwrap();
        assert!(s.contains_within(&p, 1e-15));
        assert!(s.admit(&[1.1, 0.0], TAU_MEM).is_err());
        assert!(s.admit(&[1.0], TAU_MEM).is_err());
        let b = ConvexModel::unit_ball(2, Norm::L2);
        let p = b.admit(&[1.0 + 5e-9, 0.0], TAU_MEM).unwrap();
        assert!(b.contains_within(&p, 1e-15));
    }
}
