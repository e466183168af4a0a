use nalgebra::DMatrix;
use rustc_hash::FxHashMap;

use crate::group::{ball, Element, GeneratingSet, Group};
use crate::{Error, Limits, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KestenOptions {
    pub max_iterations: usize,
    /// Stop once the estimate changes by less than this (relative).
    pub tolerance: f64,
}

impl Default for KestenOptions {
    fn default() -> Self {
        KestenOptions { max_iterations: 500, tolerance: 1e-13 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KestenEstimate {
    pub estimate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub ball_size: usize,
    /// Points outside the ball reached in one step.
    pub boundary_size: usize,
}

/// Estimates `‖M P_R‖` on `ℓ²(G)`, where `M f = |S|⁻¹ Σ_{s∈S} s·f` is the
/// Markov operator of the symmetric set `S` and `P_R` restricts to the
/// ball of radius `R`. The mass `M` pushes out of the ball is kept, so the
/// estimate is nondecreasing in `R` and tends to `‖M‖`.
///
/// Lanczos iteration (Krylov-accelerated power iteration) on `P_R M² P_R`
/// from the indicator of the ball. The returned value is the square root of
/// the largest Rayleigh–Ritz quotient, a lower bound on `‖M P_R‖` that
/// increases with the iteration count. Plain power iteration stalls on
/// bipartite Cayley graphs, whose two parity classes give a nearly
/// degenerate top eigenvalue pair.
pub fn kesten_estimate(
    group: &Group,
    gens: &GeneratingSet,
    radius: usize,
    options: &KestenOptions,
    limits: &Limits,
) -> Result<KestenEstimate> {
    if !gens.is_symmetric() {
        return Err(Error::domain("the Markov operator needs a symmetric generating set"));
    }
    let elements = ball(group, gens, radius, limits)?.into_elements();
    let n = elements.len();
    let index: FxHashMap<&Element, u32> = elements.iter().enumerate().map(|(i, e)| (e, i as u32)).collect();
    let k = gens.len();
    // neighbours[i*k + s] = index of s·xᵢ; indices ≥ n name outside points.
    let mut outside: FxHashMap<Element, u32> = FxHashMap::default();
    let mut neighbours = Vec::with_capacity(n * k);
    for x in &elements {
        for s in gens.generators() {
            let y = group.mul_unchecked(s, x);
            let j = match index.get(&y) {
                Some(j) => *j,
                None => {
                    let next = (n + outside.len()) as u32;
                    *outside.entry(y).or_insert(next)
                }
            };
            neighbours.push(j);
        }
        if n + outside.len() > limits.ball_cap {
            return Err(Error::resource(
                format!("ball of radius {} in {}", radius + 1, group.name()),
                limits.ball_cap,
            ));
        }
    }
    let boundary_size = outside.len();
    drop(outside);
    drop(index);
    drop(elements);

    let w = 1.0 / k as f64;
    let mut mf = vec![0.0; n + boundary_size];
    // A = P M² P, applied via (P M M q)(xᵢ) = |S|⁻¹ Σ_s (Mq)(s⁻¹xᵢ) with S = S⁻¹.
    let mut apply = |q: &[f64], out: &mut [f64]| {
        mf.iter_mut().for_each(|v| *v = 0.0);
        for (i, qi) in q.iter().enumerate() {
            for &j in &neighbours[i * k..(i + 1) * k] {
                mf[j as usize] += w * qi;
            }
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = neighbours[i * k..(i + 1) * k].iter().map(|&j| mf[j as usize]).sum::<f64>() * w;
        }
    };

    let mut q = vec![1.0 / (n as f64).sqrt(); n];
    let mut q_prev = vec![0.0; n];
    let mut aq = vec![0.0; n];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut top = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=options.max_iterations {
        iterations = it;
        apply(&q, &mut aq);
        let alpha: f64 = q.iter().zip(&aq).map(|(a, b)| a * b).sum();
        let beta_prev = betas.last().copied().unwrap_or(0.0);
        for ((r, qi), pi) in aq.iter_mut().zip(&q).zip(&q_prev) {
            *r -= alpha * qi + beta_prev * pi;
        }
        let beta = aq.iter().map(|v| v * v).sum::<f64>().sqrt();
        alphas.push(alpha);
        let next = ritz_max(&alphas, &betas);
        let change = (next - top).abs();
        top = next;
        if beta <= 1e-14 || (it > 1 && change <= options.tolerance * top) {
            converged = true;
            break;
        }
        betas.push(beta);
        std::mem::swap(&mut q_prev, &mut q);
        for (qi, r) in q.iter_mut().zip(&aq) {
            *qi = r / beta;
        }
    }
    let estimate = top.max(0.0).sqrt();
    Ok(KestenEstimate { estimate, iterations, converged, ball_size: n, boundary_size })
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alphas` and off-diagonal `betas`.
fn ritz_max(alphas: &[f64], betas: &[f64]) -> f64 {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i.abs_diff(j) == 1 {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    t.symmetric_eigenvalues().max()
}
