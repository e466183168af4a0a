//! Følner averaging of orbits of affine actions and approximate fixed point
//! runs.

use rustc_hash::FxHashMap;

use crate::convex::{vector, AffineAction, Seminorm};
use crate::folner::{BoundaryStats, FolnerSchedule, FolnerSet};
use crate::group::{Element, GeneratingSet};
use crate::{Error, Limits, Result};

/// Tolerance on the total mass of averaging weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Slack added to the displacement bound.
pub const BOUND_SLACK: f64 = 1e-9;

/// Memoised orbit `g ↦ g·x` of a base point. Each new element costs one
/// generator application when its word's tail is already known.
pub struct OrbitCache<'a> {
    action: &'a AffineAction,
    points: FxHashMap<Element, Vec<f64>>,
}

impl<'a> OrbitCache<'a> {
    pub fn new(action: &'a AffineAction, x: &[f64]) -> Result<Self> {
        let x = action.model().admit(x, action.tolerance())?.into_owned();
        let mut points = FxHashMap::default();
        points.insert(action.group().identity(), x);
        Ok(OrbitCache { action, points })
    }

    pub fn base(&self) -> &[f64] {
        &self.points[&self.action.group().identity()]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&mut self, g: &Element) -> Result<&[f64]> {
        if !self.points.contains_key(g) {
            self.insert(g)?;
        }
        Ok(&self.points[g])
    }

    fn insert(&mut self, g: &Element) -> Result<()> {
        let group = self.action.group();
        let gens = self.action.generators().generators();
        let word = self.action.word(g)?;
        // suffixes[j] = s_j s_{j+1} ⋯ s_{k−1}
        let k = word.len();
        let mut suffixes = vec![group.identity(); k + 1];
        for j in (0..k).rev() {
            let s = &gens[word[j].generator];
            let s = if word[j].inverse { group.inv_unchecked(s) } else { s.clone() };
            suffixes[j] = group.mul_unchecked(&s, &suffixes[j + 1]);
        }
        let start = (0..=k).find(|&j| self.points.contains_key(&suffixes[j])).unwrap_or(k);
        let mut y = self.points[&suffixes[start]].clone();
        for j in (0..start).rev() {
            y = self.action.apply_step(word[j], &y)?;
            self.points.insert(suffixes[j].clone(), y.clone());
        }
        Ok(())
    }

    /// `Σ w_i g_i·x` by pairwise summation in the given order.
    fn combine(&mut self, terms: &[(Element, f64)]) -> Result<Vec<f64>> {
        for (g, _) in terms {
            self.point(g)?;
        }
        let weights: Vec<f64> = terms.iter().map(|(_, w)| *w).collect();
        let pts: Vec<&[f64]> = terms.iter().map(|(g, _)| self.points[g].as_slice()).collect();
        Ok(vector::weighted_sum(&weights, &pts))
    }

    /// `|Φ|⁻¹ Σ_{g∈Φ} g·x`.
    pub fn average(&mut self, phi: &[Element]) -> Result<Vec<f64>> {
        if phi.is_empty() {
            return Err(Error::domain("cannot average over an empty set"));
        }
        let w = 1.0 / phi.len() as f64;
        let terms: Vec<(Element, f64)> = phi.iter().map(|g| (g.clone(), w)).collect();
        self.combine(&terms)
    }
}

/// The uniform average of the orbit of `x` over `Φ`.
pub fn folner_average(action: &AffineAction, phi: &[Element], x: &[f64]) -> Result<Vec<f64>> {
    OrbitCache::new(action, x)?.average(phi)
}

/// `Σ_g w(g) g·x` for finitely supported probability weights.
pub fn weighted_average(action: &AffineAction, weights: &[(Element, f64)], x: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::domain("weights are empty"));
    }
    if let Some((g, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::domain(format!("weight {w} at {g} is not a nonnegative number")));
    }
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::domain(format!("weights sum to {total}, not 1")));
    }
    OrbitCache::new(action, x)?.combine(weights)
}

/// Both sides of `x_Φ − γx_Φ = (|γΦ△Φ|/2|Φ|)·[avg_{Φ∖γΦ} g·x − avg_{γΦ∖Φ} h·x]`
/// computed independently.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub stats: BoundaryStats,
    /// `q(x_Φ − γx_Φ)`, with `γx_Φ` obtained by acting on the average.
    pub displacement: f64,
    /// `q(lhs − rhs)`.
    pub residual: f64,
    /// `γΦ = Φ`: the right side vanishes and the residual is `q(lhs)`.
    pub empty_difference: bool,
}

pub fn verify_decomposition(
    action: &AffineAction,
    phi: &FolnerSet,
    x: &[f64],
    gamma: &Element,
    q: &Seminorm,
) -> Result<Decomposition> {
    let mut cache = OrbitCache::new(action, x)?;
    verify_with_cache(&mut cache, phi, gamma, q, None)
}

fn verify_with_cache(
    cache: &mut OrbitCache,
    phi: &FolnerSet,
    gamma: &Element,
    q: &Seminorm,
    average: Option<&[f64]>,
) -> Result<Decomposition> {
    let action = cache.action;
    let group = action.group();
    let stats = phi.boundary(group, gamma)?;
    let owned;
    let avg = match average {
        Some(a) => a,
        None => {
            owned = cache.average(phi.elements())?;
            &owned
        }
    };
    let moved = action.act_word(&action.word(gamma)?, avg)?;
    let lhs = vector::sub(avg, &moved);
    let displacement = q.eval(&lhs);
    if stats.symmetric_difference() == 0 {
        return Ok(Decomposition { stats, displacement, residual: displacement, empty_difference: true });
    }
    // Φ∖γΦ = {φ : γ⁻¹φ ∉ Φ},  γΦ∖Φ = {γφ : γφ ∉ Φ}
    let gamma_inv = group.inv_unchecked(gamma);
    let leaving: Vec<Element> = phi
        .elements()
        .iter()
        .filter(|p| !phi.contains(&group.mul_unchecked(&gamma_inv, p)))
        .cloned()
        .collect();
    let mut entering: Vec<Element> = phi
        .elements()
        .iter()
        .map(|p| group.mul_unchecked(gamma, p))
        .filter(|h| !phi.contains(h))
        .collect();
    entering.sort_unstable();
    let a = cache.average(&leaving)?;
    let b = cache.average(&entering)?;
    let factor = stats.symmetric_difference() as f64 / (2.0 * stats.size as f64);
    let rhs = vector::scale(factor, &vector::sub(&a, &b));
    let residual = q.eval(&vector::sub(&lhs, &rhs));
    Ok(Decomposition { stats, displacement, residual, empty_difference: false })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AfpConfig {
    pub epsilon: f64,
    pub max_index: usize,
    pub seminorm: Seminorm,
    /// Generators whose displacement is measured; the action's generating
    /// set when `None`.
    pub generators: Option<Vec<Element>>,
}

impl AfpConfig {
    pub fn new(seminorm: Seminorm) -> Self {
        AfpConfig { epsilon: 1e-2, max_index: 12, seminorm, generators: None }
    }
}

/// Measurements for one generator at one schedule index.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorRecord {
    pub generator: Element,
    pub displacement: f64,
    pub stats: BoundaryStats,
    /// `ratio/2 · diam_q(C)`
    pub bound: f64,
    pub residual: f64,
}

impl GeneratorRecord {
    pub fn ratio(&self) -> f64 {
        self.stats.ratio_f64()
    }

    pub fn within_bound(&self) -> bool {
        self.displacement <= self.bound + BOUND_SLACK
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub index: usize,
    pub set_size: usize,
    pub average: Vec<f64>,
    /// Model violation of the average (0 inside).
    pub membership_violation: f64,
    pub per_generator: Vec<GeneratorRecord>,
}

impl RunRecord {
    pub fn max_displacement(&self) -> f64 {
        self.per_generator.iter().fold(0.0, |m, g| m.max(g.displacement))
    }

    pub fn max_ratio(&self) -> f64 {
        self.per_generator.iter().fold(0.0, |m, g| m.max(g.ratio()))
    }

    pub fn max_bound(&self) -> f64 {
        self.per_generator.iter().fold(0.0, |m, g| m.max(g.bound))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub index: usize,
    pub displacement: f64,
    pub ratio: f64,
    pub bound: f64,
}

/// What the run observed at the indices it reached; never a statement about
/// the group itself.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Success(Certificate),
    NoDecay { through_index: usize, displacement: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AveragingRun {
    pub diameter: f64,
    pub records: Vec<RunRecord>,
    pub verdict: Verdict,
}

impl AveragingRun {
    /// Number of (record, generator) pairs violating the displacement bound.
    pub fn bound_violations(&self) -> usize {
        self.records
            .iter()
            .flat_map(|r| &r.per_generator)
            .filter(|g| !g.within_bound())
            .count()
    }
}

/// Averages the orbit of `x0` over each scheduled Følner set and measures
/// how far the averages are from being fixed.
pub fn afp_run(
    action: &AffineAction,
    schedule: &FolnerSchedule,
    x0: &[f64],
    config: &AfpConfig,
    limits: &Limits,
) -> Result<AveragingRun> {
    if schedule.group() != action.group() {
        return Err(Error::domain("schedule and action use different groups"));
    }
    if config.epsilon.is_nan() || config.epsilon <= 0.0 {
        return Err(Error::domain("epsilon must be positive"));
    }
    let group = action.group();
    let gens = match &config.generators {
        Some(g) => GeneratingSet::new(group, g.clone())?,
        None => action.generators().clone(),
    };
    let diameter = action.model().diameter(&config.seminorm);
    let last = schedule
        .finite_len()
        .map_or(config.max_index, |n| config.max_index.min(n.saturating_sub(1)));
    let mut cache = OrbitCache::new(action, x0)?;
    let mut records = Vec::new();
    for index in 0..=last {
        let phi = schedule.set(index, &gens, limits)?;
        let average = cache.average(phi.elements())?;
        if !vector::is_finite(&average) {
            return Err(Error::Numeric { index, detail: "non-finite Følner average".into() });
        }
        let membership_violation = action.model().violation(&average)?;
        let mut per_generator = Vec::new();
        for g in gens.generators() {
            let d = verify_with_cache(&mut cache, &phi, g, &config.seminorm, Some(&average))?;
            if !(d.displacement.is_finite() && d.residual.is_finite()) {
                return Err(Error::Numeric { index, detail: format!("non-finite displacement for generator {g}") });
            }
            per_generator.push(GeneratorRecord {
                generator: g.clone(),
                displacement: d.displacement,
                stats: d.stats,
                bound: d.stats.ratio_f64() / 2.0 * diameter,
                residual: d.residual,
            });
        }
        log::debug!("afp index {index}: |Φ|={} displacement {:.3e}", phi.len(), records_max(&per_generator));
        records.push(RunRecord { index, set_size: phi.len(), average, membership_violation, per_generator });
    }
    let final_record = records.last().expect("schedule has index 0");
    let displacement = final_record.max_displacement();
    let verdict = if displacement < config.epsilon {
        Verdict::Success(Certificate {
            index: final_record.index,
            displacement,
            ratio: final_record.max_ratio(),
            bound: final_record.max_bound(),
        })
    } else {
        Verdict::NoDecay { through_index: final_record.index, displacement }
    };
    Ok(AveragingRun { diameter, records, verdict })
}

fn records_max(per_generator: &[GeneratorRecord]) -> f64 {
    per_generator.iter().fold(0.0, |m, g| m.max(g.displacement))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{ConvexModel, Norm};
    use crate::folner::{box_schedule, SidesRule};
    use crate::group::{ball, transposition, Group};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn theta() -> f64 {
        2.0 * PI * (2f64.sqrt() - 1.0)
    }

    fn z(n: i64) -> Element {
        Element::vector(&[n])
    }

    /// |Σ_{k<n} e^{ikθ}| / n
    fn geometric_oracle(n: usize, t: f64) -> f64 {
        ((n as f64 * t / 2.0).sin() / (n as f64 * (t / 2.0).sin())).abs()
    }

    #[test]
    fn identity_set_returns_base_point() {
        let act = AffineAction::rotations(&[theta()]).unwrap();
        assert_eq!(folner_average(&act, &[z(0)], &[0.6, 0.8]).unwrap(), vec![0.6, 0.8]);
        let w = weighted_average(&act, &[(z(0), 1.0)], &[0.6, 0.8]).unwrap();
        assert_eq!(w, vec![0.6, 0.8]);
    }

    #[test]
    fn full_symmetrisation_gives_barycenter() {
        let act = AffineAction::coordinate_permutations(3).unwrap();
        let all = act.group().elements(&Limits::default()).unwrap();
        let avg = folner_average(&act, &all, &[0.7, 0.2, 0.1]).unwrap();
        for v in &avg {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rotation_average_matches_geometric_sum() {
        let act = AffineAction::rotations(&[theta()]).unwrap();
        for n in [1usize, 2, 7, 10, 64, 1000] {
            let phi: Vec<Element> = (0..n as i64).map(z).collect();
            let avg = folner_average(&act, &phi, &[1.0, 0.0]).unwrap();
            assert!((vector::l2(&avg) - geometric_oracle(n, theta())).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn two_point_weights_give_midpoint() {
        let act = AffineAction::rotations(&[theta()]).unwrap();
        let m = weighted_average(&act, &[(z(0), 0.5), (z(1), 0.5)], &[1.0, 0.0]).unwrap();
        assert!((m[0] - (1.0 + theta().cos()) / 2.0).abs() < 1e-15);
        assert!((m[1] - theta().sin() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let act = AffineAction::rotations(&[theta()]).unwrap();
        assert!(weighted_average(&act, &[(z(0), 1.5), (z(1), -0.5)], &[1.0, 0.0]).is_err());
        assert!(weighted_average(&act, &[(z(0), 0.5), (z(1), 0.4)], &[1.0, 0.0]).is_err());
        assert!(weighted_average(&act, &[(z(0), 1.0 - 1e-13)], &[1.0, 0.0]).is_ok());
    }

    #[test]
    fn uniform_weights_agree_with_folner_average() {
        let act = AffineAction::coordinate_permutations(4).unwrap();
        let phi = ball(act.group(), act.generators(), 2, &Limits::default()).unwrap().into_elements();
        let w = 1.0 / phi.len() as f64;
        let weights: Vec<(Element, f64)> = phi.iter().map(|g| (g.clone(), w)).collect();
        let x = [0.4, 0.3, 0.2, 0.1];
        let a = folner_average(&act, &phi, &x).unwrap();
        let b = weighted_average(&act, &weights, &x).unwrap();
        assert!(vector::linf(&vector::sub(&a, &b)) <= 1e-12);
    }

    #[test]
    fn identity_decomposition_is_flagged() {
        let act = AffineAction::rotations(&[theta()]).unwrap();
        let g = Group::lattice(1);
        let phi = FolnerSet::new(&g, (0..10).map(z).collect()).unwrap();
        let d = verify_decomposition(&act, &phi, &[1.0, 0.0], &z(0), &Norm::L2.into()).unwrap();
        assert!(d.empty_difference);
        assert_eq!(d.residual, 0.0);
    }

    #[test]
    fn decomposition_holds_for_rotation_boxes() {
        let act = AffineAction::rotations(&[theta()]).unwrap();
        let g = Group::lattice(1);
        let phi = FolnerSet::new(&g, (0..10).map(z).collect()).unwrap();
        for gamma in [z(1), z(-1), z(3)] {
            let d = verify_decomposition(&act, &phi, &[1.0, 0.0], &gamma, &Norm::L2.into()).unwrap();
            assert!(!d.empty_difference);
            assert!(d.residual <= 1e-9, "{d:?}");
        }
    }

    #[test]
    fn decomposition_holds_for_random_sym5_sets() {
        let act = AffineAction::coordinate_permutations(5).unwrap();
        let b2 = ball(act.group(), act.generators(), 2, &Limits::default()).unwrap().into_elements();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let phi: Vec<Element> = b2.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            if phi.is_empty() {
                continue;
            }
            let phi = FolnerSet::new(act.group(), phi).unwrap();
            let gamma = b2[rng.gen_range(0..b2.len())].clone();
            let x = act.model().sample(&mut rng);
            let d = verify_decomposition(&act, &phi, &x, &gamma, &Norm::L1.into()).unwrap();
            assert!(d.residual <= 1e-9 * phi.len() as f64);
        }
    }

    #[test]
    fn finite_group_run_succeeds_at_index_zero() {
        let act = AffineAction::coordinate_permutations(3).unwrap();
        let schedule = FolnerSchedule::WholeGroup { group: act.group().clone() };
        let run = afp_run(&act, &schedule, &[1.0, 0.0, 0.0], &AfpConfig::new(Norm::L1.into()), &Limits::default()).unwrap();
        assert_eq!(run.records.len(), 1);
        let Verdict::Success(c) = &run.verdict else { panic!("{:?}", run.verdict) };
        assert_eq!(c.index, 0);
        assert!(c.displacement <= 1e-12);
    }

    #[test]
    fn rotation_run_decays_like_the_oracle() {
        let t = theta();
        let act = AffineAction::rotations(&[t]).unwrap();
        let schedule = box_schedule(act.group(), SidesRule::Doubling).unwrap();
        let mut config = AfpConfig::new(Norm::L2.into());
        config.max_index = 10;
        config.epsilon = 0.05;
        let run = afp_run(&act, &schedule, &[1.0, 0.0], &config, &Limits::default()).unwrap();
        assert_eq!(run.bound_violations(), 0);
        let last = run.records.last().unwrap();
        assert_eq!(last.set_size, 1024);
        let d = last.max_displacement();
        // x_Φ − γx_Φ = (x − γ^n x)/n, so the displacement is |1 − e^{inθ}|/n.
        let exact = 2.0 * (1024.0 * t / 2.0).sin().abs() / 1024.0;
        assert!((d - exact).abs() < 1e-12);
        assert!(d <= 2.0 / (1024.0 * (t / 2.0).sin()));
        assert!(matches!(run.verdict, Verdict::Success(_)));
        for r in &run.records {
            assert!(r.membership_violation <= 1e-9);
            assert!(r.per_generator.iter().all(|g| g.residual <= 1e-9));
        }
    }

    #[test]
    fn free_group_run_shows_no_decay() {
        let act = AffineAction::left_regular(2).unwrap();
        let schedule = FolnerSchedule::Balls { group: act.group().clone(), gens: act.generators().clone() };
        let mut config = AfpConfig::new(Norm::L1.into());
        config.max_index = 6;
        config.epsilon = 0.05;
        let run = afp_run(&act, &schedule, &[1.0], &config, &Limits::default()).unwrap();
        assert_eq!(run.bound_violations(), 0);
        for r in &run.records {
            assert!(r.max_displacement() >= 0.1, "{}", r.max_displacement());
        }
        assert!(matches!(run.verdict, Verdict::NoDecay { through_index: 6, .. }));
    }

    #[test]
    fn mismatched_schedule_is_rejected() {
        let act = AffineAction::rotations(&[theta()]).unwrap();
        let schedule = FolnerSchedule::WholeGroup { group: Group::symmetric(3) };
        assert!(afp_run(&act, &schedule, &[1.0, 0.0], &AfpConfig::new(Norm::L2.into()), &Limits::default()).is_err());
    }

    #[test]
    fn averages_stay_in_model() {
        let act = AffineAction::coordinate_permutations(5).unwrap();
        let model = act.model().clone();
        let phi = ball(act.group(), act.generators(), 3, &Limits::default()).unwrap().into_elements();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let x = model.sample(&mut rng);
            assert!(model.contains(&folner_average(&act, &phi, &x).unwrap()));
        }
        assert!(ConvexModel::simplex(5).contains(&folner_average(&act, &phi, &[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn averaging_is_equivariant_and_affine(seed in any::<u64>(), lambda in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let act = AffineAction::coordinate_permutations(4).unwrap();
            let s4 = act.group().clone();
            let all = s4.elements(&Limits::default()).unwrap();
            let phi: Vec<Element> = all.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
            prop_assume!(!phi.is_empty());
            let gamma = all[rng.gen_range(0..all.len())].clone();
            let x = act.model().sample(&mut rng);
            let y = act.model().sample(&mut rng);
            let avg = folner_average(&act, &phi, &x).unwrap();
            let gphi: Vec<Element> = phi.iter().map(|p| s4.mul(&gamma, p).unwrap()).collect();
            let lhs = act.act(&gamma, &avg).unwrap();
            let rhs = folner_average(&act, &gphi, &x).unwrap();
            prop_assert!(vector::linf(&vector::sub(&lhs, &rhs)) <= 1e-9);
            let mix = folner_average(&act, &phi, &vector::lerp(lambda, &x, &y)).unwrap();
            let sep = vector::lerp(lambda, &avg, &folner_average(&act, &phi, &y).unwrap());
            prop_assert!(vector::linf(&vector::sub(&mix, &sep)) <= 1e-9);
        }

        #[test]
        fn bound_holds_on_random_z2_boxes(a in 0.01f64..3.0, b in 0.01f64..3.0, k in 0usize..5) {
            let act = AffineAction::rotations(&[a, b]).unwrap();
            let schedule = box_schedule(act.group(), SidesRule::Doubling).unwrap();
            let mut config = AfpConfig::new(Norm::L2.into());
            config.max_index = k;
            let run = afp_run(&act, &schedule, &[0.0, 1.0], &config, &Limits::default()).unwrap();
            prop_assert_eq!(run.bound_violations(), 0);
            for r in &run.records {
                for g in &r.per_generator {
                    prop_assert!(g.residual <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn transposition_decomposition_on_simplex() {
        let act = AffineAction::coordinate_permutations(5).unwrap();
        let phi = FolnerSet::new(act.group(), vec![transposition(5, 0, 1), transposition(5, 2, 3)]).unwrap();
        let d = verify_decomposition(&act, &phi, &[1.0, 0.0, 0.0, 0.0, 0.0], &transposition(5, 1, 2), &Norm::L1.into())
            .unwrap();
        assert!(d.residual <= 1e-12);
    }
}
