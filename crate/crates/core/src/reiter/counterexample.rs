use super::density::GroupDensity;
use super::minimize::{reiter_minimize, Init, Method, MinimizeOptions};
use crate::convex::{AffineAction, Norm};
use crate::group::{GeneratingSet, Group};
use crate::{Error, Limits, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleOptions {
    pub radii: Vec<usize>,
    /// Floors of the free group must stay above this.
    pub threshold: f64,
    /// Radii up to this use the LP, larger ones the subgradient method.
    pub lp_max_radius: usize,
    pub subgradient: MinimizeOptions,
    pub control_radius: usize,
    /// The `ℤ²` control floor must fall below this.
    pub control_threshold: f64,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        CounterexampleOptions {
            radii: vec![0, 1, 2, 3, 4, 5, 6],
            threshold: 0.05,
            lp_max_radius: 2,
            subgradient: MinimizeOptions::default(),
            control_radius: 20,
            control_threshold: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FloorRow {
    pub radius: usize,
    pub floor: f64,
    pub method: Method,
    pub iterations: usize,
    pub support_size: usize,
    pub ball_size: usize,
    /// The same displacement measured on the density as a point of
    /// `prob(ℕ)` moved by the coordinate permutations of `F₂`.
    pub prob_n_displacement: f64,
    pub density: GroupDensity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub rows: Vec<FloorRow>,
    pub threshold: f64,
    pub control_radius: usize,
    pub control_floor: f64,
    pub control_threshold: f64,
}

impl CounterexampleReport {
    pub fn above_threshold(&self) -> bool {
        self.rows.iter().all(|r| r.floor > self.threshold)
    }

    pub fn non_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].floor <= w[0].floor)
    }

    pub fn control_below(&self) -> bool {
        self.control_floor < self.control_threshold
    }

    /// Largest gap between the group-side and `prob(ℕ)`-side displacements.
    pub fn prob_n_gap(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max((r.floor - r.prob_n_displacement).abs()))
    }

    pub fn passed(&self) -> bool {
        self.above_threshold() && self.non_increasing() && self.control_below() && self.prob_n_gap() <= 1e-12
    }
}

/// `ℓ¹` Reiter floors of `F₂ = ⟨a, b⟩` on growing balls, each radius warm
/// started from the previous optimum, against a `ℤ²` control.
pub fn counterexample_run(options: &CounterexampleOptions, limits: &Limits) -> Result<CounterexampleReport> {
    if options.radii.is_empty() {
        return Err(Error::domain("no radii requested"));
    }
    let mut radii = options.radii.clone();
    radii.sort_unstable();
    radii.dedup();
    let f2 = Group::free(2);
    let gens = GeneratingSet::standard(&f2)?;
    let prob_n = AffineAction::left_regular(2)?;
    let mut rows: Vec<FloorRow> = Vec::new();
    for radius in radii {
        let method = if radius <= options.lp_max_radius { Method::Lp } else { Method::Subgradient };
        let mut opts = options.subgradient.clone();
        opts.warm_start = rows.last().map(|r| r.density.clone());
        let mut result = reiter_minimize(&f2, &gens, radius, 1, method, &opts, limits)?;
        // The previous optimum stays feasible on the larger ball.
        if let Some(prev) = rows.last() {
            if prev.floor < result.objective {
                result.density = prev.density.clone();
                result.objective = prev.floor;
            }
        }
        let point = result.density.to_prob_n()?;
        let prob_n_displacement = prob_n.displacement(&point, gens.generators(), &Norm::L1.into())?.max;
        log::info!("F2 radius {radius}: floor {:.6} via {}", result.objective, method.label());
        rows.push(FloorRow {
            radius,
            floor: result.objective,
            method,
            iterations: result.iterations,
            support_size: result.density.support_size(),
            ball_size: result.ball_size,
            prob_n_displacement,
            density: result.density,
        });
    }
    let z2 = Group::lattice(2);
    let control_opts = MinimizeOptions { init: Init::Uniform, warm_start: None, ..options.subgradient.clone() };
    let control = reiter_minimize(
        &z2,
        &GeneratingSet::standard(&z2)?,
        options.control_radius,
        1,
        Method::Subgradient,
        &control_opts,
        limits,
    )?;
    Ok(CounterexampleReport {
        rows,
        threshold: options.threshold,
        control_radius: options.control_radius,
        control_floor: control.objective,
        control_threshold: options.control_threshold,
    })
}
