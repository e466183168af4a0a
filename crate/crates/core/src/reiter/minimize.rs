use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::density::{check_exponent, GroupDensity};
use super::table::TranslationTable;
use crate::group::{GeneratingSet, Group};
use crate::{Error, Limits, Result};

/// Largest ball handed to the LP solver.
pub const LP_MAX_BALL: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Subgradient,
    Lp,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Subgradient => "subgradient",
            Method::Lp => "lp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Normalized indicator of the ball.
    Uniform,
    /// Point mass at the identity.
    PointMass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeOptions {
    pub iterations: usize,
    /// `s₀` in the step schedule `s_k = s₀/√k`.
    pub step0: f64,
    pub init: Init,
    /// Additional feasible starting density; the better start is used.
    pub warm_start: Option<GroupDensity>,
    /// Trace sampling period (iteration 1 and the last are always kept).
    pub trace_every: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { iterations: 2000, step0: 1.0, init: Init::Uniform, warm_start: None, trace_every: 100 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReiterResult {
    pub density: GroupDensity,
    /// `max_γ ‖γ·f − f‖_p`, recomputed from `density` by sparse evaluation.
    pub objective: f64,
    pub radius: usize,
    pub ball_size: usize,
    pub method: Method,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
    /// Optimal value reported by the LP solver.
    pub lp_objective: Option<f64>,
}

/// Minimizes `max_γ ‖γ·f − f‖_p` over normalized nonnegative `f` supported
/// in the ball of radius `radius`. Translates leaving the ball are kept in
/// full.
pub fn reiter_minimize(
    group: &Group,
    gens: &GeneratingSet,
    radius: usize,
    p: u32,
    method: Method,
    options: &MinimizeOptions,
    limits: &Limits,
) -> Result<ReiterResult> {
    check_exponent(p)?;
    if method == Method::Lp && p != 1 {
        return Err(Error::domain("the LP formulation needs p = 1"));
    }
    let table = TranslationTable::new(group, gens, radius, limits)?;
    let (f, iterations, trace, lp_objective) = match method {
        Method::Lp => {
            if table.len() > LP_MAX_BALL {
                return Err(Error::resource(format!("LP over a ball of radius {radius}"), LP_MAX_BALL));
            }
            let (f, value) = solve_lp(&table)?;
            (f, 0, Vec::new(), Some(value))
        }
        Method::Subgradient => {
            let start = starting_point(group, &table, p, options)?;
            let (f, trace) = subgradient(&table, p, start, options);
            (f, options.iterations, trace, None)
        }
    };
    let density = GroupDensity::new(group, table.elements.iter().cloned().zip(f), p)?;
    let objective = super::reiter_objective(&density, gens.generators())?;
    Ok(ReiterResult {
        density,
        objective,
        radius,
        ball_size: table.len(),
        method,
        iterations,
        trace,
        lp_objective,
    })
}

fn starting_point(group: &Group, table: &TranslationTable, p: u32, options: &MinimizeOptions) -> Result<Vec<f64>> {
    let n = table.len();
    let mut start = match options.init {
        Init::Uniform => vec![if p == 1 { 1.0 / n as f64 } else { 1.0 / (n as f64).sqrt() }; n],
        Init::PointMass => {
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            v
        }
    };
    if let Some(warm) = &options.warm_start {
        if warm.group() != group || warm.p() != p {
            return Err(Error::domain("warm start lives in a different space"));
        }
        let mut v = vec![0.0; n];
        let mut placed = 0;
        for (i, e) in table.elements.iter().enumerate() {
            let m = warm.mass(e);
            if m > 0.0 {
                v[i] = m;
                placed += 1;
            }
        }
        if placed != warm.support_size() {
            return Err(Error::domain("warm start is not supported in the ball"));
        }
        let mut scratch = Vec::new();
        if table.objective(&v, p, &mut scratch).0 < table.objective(&start, p, &mut scratch).0 {
            start = v;
        }
    }
    Ok(start)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Projected subgradient descent with normalized steps `s₀/√k` and
/// best-iterate tracking.
fn subgradient(table: &TranslationTable, p: u32, start: Vec<f64>, options: &MinimizeOptions) -> (Vec<f64>, Vec<TracePoint>) {
    let n = table.len();
    let mut scratch = Vec::with_capacity(n);
    let mut f = start;
    let (mut best_value, _) = table.objective(&f, p, &mut scratch);
    let mut best = f.clone();
    let mut trace = Vec::new();
    let mut grad = vec![0.0; n];
    for k in 1..=options.iterations {
        let (value, g) = table.objective(&f, p, &mut scratch);
        if value < best_value {
            best_value = value;
            best.clone_from(&f);
        }
        if k == 1 || k == options.iterations || (options.trace_every > 0 && k % options.trace_every == 0) {
            trace.push(TracePoint { iteration: k, objective: value, best: best_value });
        }
        if value == 0.0 {
            break;
        }
        // D = g·f − f; ∂/∂f_i of Σ_y φ(D_y) + Σ_leak φ(f_i).
        let _ = table.difference(g, &f, &mut scratch);
        let scale = if p == 1 { 1.0 } else { value };
        let outer = |d: f64| if p == 1 { sign(d) } else { d / scale };
        for i in 0..n {
            let moved = match table.forward[g][i] {
                Some(t) => outer(scratch[t as usize]),
                None => outer(f[i]).max(if p == 1 { 1.0 } else { 0.0 }),
            };
            grad[i] = moved - outer(scratch[i]);
        }
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let step = options.step0 / (k as f64).sqrt() / norm;
        for (fi, gi) in f.iter_mut().zip(&grad) {
            *fi -= step * gi;
        }
        if p == 1 {
            project_simplex(&mut f);
        } else {
            project_positive_sphere(&mut f);
        }
    }
    let (value, _) = table.objective(&f, p, &mut scratch);
    if value < best_value {
        best = f;
    }
    (best, trace)
}

/// Euclidean projection onto the probability simplex (sort-based).
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Clip negative entries and rescale to unit `ℓ²` norm.
fn project_positive_sphere(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = x.max(0.0);
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    } else {
        let c = 1.0 / (v.len() as f64).sqrt();
        v.iter_mut().for_each(|x| *x = c);
    }
}

/// min t  s.t.  Σ_y u_{γ,y} + Σ_{i leaks} f_i ≤ t,  u_{γ,y} ≥ ±(f(γ⁻¹y) − f(y)),
/// Σ f = 1,  f ≥ 0.
fn solve_lp(table: &TranslationTable) -> Result<(Vec<f64>, f64)> {
    let n = table.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let f: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    lp.add_constraint(f.iter().map(|v| (*v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for g in 0..table.forward.len() {
        let mut budget = vec![(t, -1.0)];
        for y in 0..n {
            let u = lp.add_var(0.0, (0.0, f64::INFINITY));
            budget.push((u, 1.0));
            match table.backward[g][y] {
                Some(s) if s as usize != y => {
                    lp.add_constraint([(u, 1.0), (f[s as usize], -1.0), (f[y], 1.0)], ComparisonOp::Ge, 0.0);
                    lp.add_constraint([(u, 1.0), (f[s as usize], 1.0), (f[y], -1.0)], ComparisonOp::Ge, 0.0);
                }
                Some(_) => {}
                None => lp.add_constraint([(u, 1.0), (f[y], -1.0)], ComparisonOp::Ge, 0.0),
            }
            if table.forward[g][y].is_none() {
                budget.push((f[y], 1.0));
            }
        }
        lp.add_constraint(budget, ComparisonOp::Le, 0.0);
    }
    let solution = lp.solve().map_err(|e| Error::Solver(e.to_string()))?;
    let mut x: Vec<f64> = f.iter().map(|v| solution[*v].max(0.0)).collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    Ok((x, solution.objective()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.5, 0.5, 0.5];
        project_simplex(&mut v);
        assert!(v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let mut v = vec![2.0, 0.0, -1.0];
        project_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
        let mut v = vec![1.0, 0.5, 0.0];
        project_simplex(&mut v);
        assert_eq!(v, vec![0.75, 0.25, 0.0]);
    }
}
