use nalgebra::DMatrix;
use rand::Rng;

use super::model::{ConvexModel, TAU_MEM};
use super::seminorm::{Norm, Seminorm};
use super::vector;
use crate::group::{index_word, word_index, Element, GeneratingSet, Group, WordOracle, WordStep};
use crate::{Error, Limits, Result};

/// Largest coordinate index a left-regular action may produce.
const MAX_PROB_INDEX: u128 = 1 << 26;

/// An affine self-map of the ambient space of a convex model.
#[derive(Clone, Debug, PartialEq)]
pub enum AffineMap {
    /// `x ↦ A·x + b` with `A` stored row-major.
    Dense { dim: usize, matrix: Vec<f64>, offset: Vec<f64> },
    /// Coordinate permutation `(σx)[σ(i)] = x[i]`.
    Permutation(Vec<u32>),
    /// Left multiplication by `by` on `prob(ℕ)`, with `ℕ` identified with
    /// the free group of rank `rank` through `word_index`.
    LeftRegular { rank: usize, by: Element },
}

impl AffineMap {
    pub fn dense(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        if dim == 0 || matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::domain(format!("affine map needs a {dim}x{dim} matrix")));
        }
        let matrix: Vec<f64> = matrix.into_iter().flatten().collect();
        if !vector::is_finite(&matrix) || !vector::is_finite(&offset) {
            return Err(Error::domain("affine map has non-finite entries"));
        }
        Ok(AffineMap::Dense { dim, matrix, offset })
    }

    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        AffineMap::Dense { dim, matrix, offset: vec![0.0; dim] }
    }

    /// Counter-clockwise rotation of the plane by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        AffineMap::Dense {
            dim: 2,
            matrix: vec![c, -s, s, c],
            offset: vec![0.0, 0.0],
        }
    }

    pub fn permutation(perm: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            match seen.get_mut(p as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::domain(format!("{perm:?} is not a permutation"))),
            }
        }
        Ok(AffineMap::Permutation(perm))
    }

    /// Ambient dimension the map acts on; `None` for maps on `prob(ℕ)`.
    pub fn dim(&self) -> Option<usize> {
        match self {
            AffineMap::Dense { dim, .. } => Some(*dim),
            AffineMap::Permutation(p) => Some(p.len()),
            AffineMap::LeftRegular { .. } => None,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(Error::domain(format!("map on R^{d} applied to a point of length {}", x.len())));
            }
        }
        Ok(match self {
            AffineMap::Dense { dim, matrix, offset } => (0..*dim)
                .map(|i| vector::dot(&matrix[i * dim..(i + 1) * dim], x) + offset[i])
                .collect(),
            AffineMap::Permutation(p) => {
                let mut out = vec![0.0; x.len()];
                for (i, v) in x.iter().enumerate() {
                    out[p[i] as usize] = *v;
                }
                out
            }
            AffineMap::LeftRegular { rank, by } => {
                let group = Group::free(*rank);
                let mut moved = Vec::new();
                for (i, &v) in x.iter().enumerate() {
                    if v != 0.0 {
                        let g = group.mul_unchecked(by, &Element::Word(index_word(i as u128, *rank)));
                        let Element::Word(w) = &g else { unreachable!() };
                        let j = word_index(w, *rank)?;
                        if j >= MAX_PROB_INDEX {
                            return Err(Error::resource("prob(N) coordinate index", MAX_PROB_INDEX as usize));
                        }
                        moved.push((j as usize, v));
                    }
                }
                let len = moved.iter().map(|(j, _)| j + 1).max().unwrap_or(0);
                let mut out = vec![0.0; len];
                for (j, v) in moved {
                    out[j] = v;
                }
                out
            }
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(match self {
            AffineMap::Dense { dim, matrix, offset } => {
                let a = DMatrix::from_row_slice(*dim, *dim, matrix);
                let inv = a
                    .try_inverse()
                    .ok_or_else(|| Error::domain("affine generator image is not invertible"))?;
                let b = -(&inv * nalgebra::DVector::from_column_slice(offset));
                let mut rows = Vec::with_capacity(dim * dim);
                for i in 0..*dim {
                    rows.extend(inv.row(i).iter());
                }
                AffineMap::Dense {
                    dim: *dim,
                    matrix: rows,
                    offset: b.iter().copied().collect(),
                }
            }
            AffineMap::Permutation(p) => {
                let mut inv = vec![0u32; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    inv[j as usize] = i as u32;
                }
                AffineMap::Permutation(inv)
            }
            AffineMap::LeftRegular { rank, by } => AffineMap::LeftRegular {
                rank: *rank,
                by: Group::free(*rank).inv(by)?,
            },
        })
    }
}

/// The image of a generator and of its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorImage {
    pub forward: AffineMap,
    pub inverse: AffineMap,
}

impl GeneratorImage {
    pub fn new(forward: AffineMap) -> Result<Self> {
        let inverse = forward.inverse()?;
        Ok(GeneratorImage { forward, inverse })
    }
}

/// Per-generator displacements `q(x − γx)` and their maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct Displacement {
    pub per_generator: Vec<f64>,
    pub max: f64,
}

impl Displacement {
    fn from_values(per_generator: Vec<f64>) -> Self {
        let max = per_generator.iter().fold(0.0_f64, |m, v| m.max(*v));
        Displacement { per_generator, max }
    }
}

/// Outcome of the statistical well-definedness checks of an action.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// Largest model violation of a generator image (or inverse image) of a
    /// sampled point.
    pub invariance: f64,
    /// Largest `ℓ∞` gap between two words for the same element.
    pub relation: f64,
    /// Largest `ℓ∞` failure of `γ(λx+(1−λ)y) = λγx + (1−λ)γy`.
    pub affine: f64,
}

impl ValidationReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.invariance <= tol && self.relation <= tol && self.affine <= tol
    }
}

/// An affine action of a finitely generated group on a convex model, given by
/// the images of the generators.
#[derive(Clone, Debug)]
pub struct AffineAction {
    model: ConvexModel,
    images: Vec<GeneratorImage>,
    words: WordOracle,
    tolerance: f64,
}

impl AffineAction {
    pub fn new(group: &Group, gens: &GeneratingSet, maps: Vec<AffineMap>, model: ConvexModel, limits: &Limits) -> Result<Self> {
        let images = maps.into_iter().map(GeneratorImage::new).collect::<Result<Vec<_>>>()?;
        Self::with_images(group, gens, images, model, limits)
    }

    pub fn with_images(
        group: &Group,
        gens: &GeneratingSet,
        images: Vec<GeneratorImage>,
        model: ConvexModel,
        limits: &Limits,
    ) -> Result<Self> {
        model.validate()?;
        if images.len() != gens.len() {
            return Err(Error::domain(format!(
                "{} generator images for {} generators",
                images.len(),
                gens.len()
            )));
        }
        for img in &images {
            for map in [&img.forward, &img.inverse] {
                match (map, &model) {
                    (AffineMap::LeftRegular { .. }, ConvexModel::ProbN) => {}
                    (AffineMap::LeftRegular { .. }, _) | (_, ConvexModel::ProbN) => {
                        return Err(Error::domain("left-regular maps act exactly on prob(N)"))
                    }
                    _ if map.dim() != model.dim() => {
                        return Err(Error::domain(format!("generator image does not act on {}", model.label())))
                    }
                    _ => {}
                }
            }
        }
        Ok(AffineAction {
            model,
            images,
            words: WordOracle::new(group, gens, limits)?,
            tolerance: TAU_MEM,
        })
    }

    /// `Sym(n)` permuting the coordinates of the simplex `Δ^{n−1}`.
    pub fn coordinate_permutations(n: usize) -> Result<Self> {
        let group = Group::symmetric(n);
        let gens = GeneratingSet::standard(&group)?;
        let maps = gens
            .generators()
            .iter()
            .map(|g| match g {
                Element::Perm(p) => AffineMap::permutation(p.to_vec()),
                _ => unreachable!(),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&group, &gens, maps, ConvexModel::simplex(n), &Limits::default())
    }

    /// `ℤᵈ` acting on the closed unit disk, generator `i` rotating by `angles[i]`.
    pub fn rotations(angles: &[f64]) -> Result<Self> {
        let group = Group::lattice(angles.len());
        let gens = GeneratingSet::standard(&group)?;
        let maps = angles.iter().map(|t| AffineMap::rotation(*t)).collect();
        Self::new(&group, &gens, maps, ConvexModel::unit_ball(2, Norm::L2), &Limits::default())
    }

    /// `F_rank` acting on `prob(ℕ)` by left multiplication, `ℕ ≅ F_rank` via
    /// `word_index`.
    pub fn left_regular(rank: usize) -> Result<Self> {
        let group = Group::free(rank);
        let gens = GeneratingSet::standard(&group)?;
        let maps = gens
            .generators()
            .iter()
            .map(|g| AffineMap::LeftRegular { rank, by: g.clone() })
            .collect();
        Self::new(&group, &gens, maps, ConvexModel::ProbN, &Limits::default())
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn group(&self) -> &Group {
        self.words.group()
    }

    pub fn generators(&self) -> &GeneratingSet {
        self.words.generators()
    }

    pub fn model(&self) -> &ConvexModel {
        &self.model
    }

    pub fn images(&self) -> &[GeneratorImage] {
        &self.images
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn word(&self, g: &Element) -> Result<Vec<WordStep>> {
        self.words.word(g)
    }

    pub fn apply_step(&self, step: WordStep, x: &[f64]) -> Result<Vec<f64>> {
        let img = self
            .images
            .get(step.generator)
            .ok_or_else(|| Error::domain(format!("unknown generator {}", step.generator)))?;
        if step.inverse {
            img.inverse.apply(x)
        } else {
            img.forward.apply(x)
        }
    }

    /// `s₁s₂⋯sₖ · x`, applying `sₖ` first. No membership checks.
    pub fn act_word(&self, word: &[WordStep], x: &[f64]) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        for s in word.iter().rev() {
            y = self.apply_step(*s, &y)?;
        }
        Ok(y)
    }

    /// `g · x` for a point of the model.
    pub fn act(&self, g: &Element, x: &[f64]) -> Result<Vec<f64>> {
        let x = self.model.admit(x, self.tolerance)?;
        let word = self.words.word(g)?;
        self.act_word(&word, &x)
    }

    /// `q(x − γx)` for each `γ` in `gens`.
    pub fn displacement(&self, x: &[f64], gens: &[Element], q: &Seminorm) -> Result<Displacement> {
        let values = gens
            .iter()
            .map(|g| Ok(q.eval(&vector::sub(x, &self.act(g, x)?))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Displacement::from_values(values))
    }

    /// `max_{γ,φ} |⟨φ, x − γx⟩|`.
    pub fn weak_displacement(&self, x: &[f64], gens: &[Element], functionals: &[Vec<f64>]) -> Result<Displacement> {
        if functionals.is_empty() {
            return Err(Error::domain("weak displacement needs at least one functional"));
        }
        let values = gens
            .iter()
            .map(|g| {
                let d = vector::sub(x, &self.act(g, x)?);
                Ok(functionals
                    .iter()
                    .fold(0.0_f64, |m, phi| m.max(vector::dot(phi, &d).abs())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Displacement::from_values(values))
    }

    /// Samples points of the model and random words to check that generator
    /// images preserve the model, that different words for one element act
    /// alike, and that the maps are affine.
    pub fn validate<R: Rng>(&self, rng: &mut R, samples: usize, max_word: usize) -> Result<ValidationReport> {
        let mut points = self.model.extreme_points(rng, samples);
        points.extend((0..samples).map(|_| self.model.sample(rng)));
        let mut report = ValidationReport { invariance: 0.0, relation: 0.0, affine: 0.0 };
        for x in &points {
            for img in &self.images {
                for map in [&img.forward, &img.inverse] {
                    report.invariance = report.invariance.max(self.model.violation(&map.apply(x)?)?);
                }
            }
        }
        let k = self.images.len();
        for (i, x) in points.iter().enumerate() {
            let len = rng.gen_range(1..=max_word.max(1));
            let word: Vec<WordStep> = (0..len)
                .map(|_| WordStep { generator: rng.gen_range(0..k), inverse: rng.gen() })
                .collect();
            let g = self.words.evaluate(&word);
            let normal = self.words.word(&g)?;
            let a = self.act_word(&word, x)?;
            let b = self.act_word(&normal, x)?;
            let scale = (word.len() + normal.len()).max(1) as f64;
            report.relation = report.relation.max(vector::linf(&vector::sub(&a, &b)) / scale);

            let y = &points[(i * 7 + 3) % points.len()];
            let lambda: f64 = rng.gen();
            let step = word[0];
            let lhs = self.apply_step(step, &vector::lerp(lambda, x, y))?;
            let rhs = vector::lerp(lambda, &self.apply_step(step, x)?, &self.apply_step(step, y)?);
            report.affine = report.affine.max(vector::linf(&vector::sub(&lhs, &rhs)));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{transposition, Letter};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn theta() -> f64 {
        2.0 * PI * (2f64.sqrt() - 1.0)
    }

    #[test]
    fn identity_acts_trivially() {
        let act = AffineAction::rotations(&[theta()]).unwrap();
        let x = [0.3, -0.4];
        assert_eq!(act.act(&Element::vector(&[0]), &x).unwrap(), x.to_vec());
    }

    #[test]
    fn transposition_swaps_coordinates() {
        let act = AffineAction::coordinate_permutations(5).unwrap();
        let y = act.act(&transposition(5, 0, 1), &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(y, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn permutation_convention() {
        // (σx)[σ(i)] = x[i] and (στ)x = σ(τx).
        let act = AffineAction::coordinate_permutations(4).unwrap();
        let s4 = Group::symmetric(4);
        let sigma = Element::perm(&[1, 2, 3, 0]);
        let tau = Element::perm(&[2, 0, 1, 3]);
        let x = [0.1, 0.2, 0.3, 0.4];
        let sx = act.act(&sigma, &x).unwrap();
        assert_eq!(sx, vec![0.4, 0.1, 0.2, 0.3]);
        let lhs = act.act(&s4.mul(&sigma, &tau).unwrap(), &x).unwrap();
        let rhs = act.act(&sigma, &act.act(&tau, &x).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn rotation_of_base_point() {
        let t = theta();
        let act = AffineAction::rotations(&[t]).unwrap();
        let y = act.act(&Element::vector(&[1]), &[1.0, 0.0]).unwrap();
        assert!((y[0] - t.cos()).abs() < 1e-15 && (y[1] - t.sin()).abs() < 1e-15);
        let d = act
            .displacement(&[1.0, 0.0], &[Element::vector(&[1])], &Norm::L2.into())
            .unwrap();
        let chord = 2.0 * (t / 2.0).sin().abs();
        assert!((d.max - chord).abs() < 1e-12);
        assert!((d.max - 1.9278).abs() < 1e-4);
    }

    #[test]
    fn fixed_point_has_zero_displacement() {
        let act = AffineAction::rotations(&[theta(), 1.0]).unwrap();
        let gens = act.generators().generators().to_vec();
        assert_eq!(act.displacement(&[0.0, 0.0], &gens, &Norm::L2.into()).unwrap().max, 0.0);
        assert_eq!(act.weak_displacement(&[0.0, 0.0], &gens, &[vec![1.0, 1.0]]).unwrap().max, 0.0);
    }

    #[test]
    fn simplex_swap_displacements() {
        let act = AffineAction::coordinate_permutations(2).unwrap();
        let swap = transposition(2, 0, 1);
        let strong = act.displacement(&[1.0, 0.0], std::slice::from_ref(&swap), &Norm::L1.into()).unwrap();
        assert_eq!(strong.max, 2.0);
        let weak = act.weak_displacement(&[1.0, 0.0], std::slice::from_ref(&swap), &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(weak.max, 1.0);
        assert!(act.weak_displacement(&[1.0, 0.0], &[swap], &[]).is_err());
    }

    #[test]
    fn points_outside_are_rejected() {
        let act = AffineAction::rotations(&[1.0]).unwrap();
        assert!(act.act(&Element::vector(&[1]), &[2.0, 0.0]).is_err());
        assert!(act.act(&Element::vector(&[1]), &[1.0, 0.0, 0.0]).is_err());
        assert!(act.act(&Element::vector(&[1, 1]), &[1.0, 0.0]).is_err());
    }

    #[test]
    fn left_regular_moves_point_masses() {
        let act = AffineAction::left_regular(2).unwrap();
        let a = Element::word(&[Letter::new(0, false)]);
        // δ_e ↦ δ_a, and a has index 1.
        let y = act.act(&a, &[1.0]).unwrap();
        assert_eq!(y, vec![0.0, 1.0]);
        assert_eq!(act.displacement(&[1.0], &[a], &Norm::L1.into()).unwrap().max, 2.0);
    }

    #[test]
    fn dense_inverse_round_trips() {
        let m = AffineMap::dense(vec![vec![2.0, 1.0], vec![0.0, 1.0]], vec![1.0, -1.0]).unwrap();
        let x = [0.3, 0.7];
        let back = m.inverse().unwrap().apply(&m.apply(&x).unwrap()).unwrap();
        assert!(vector::linf(&vector::sub(&back, &x)) < 1e-15);
        assert!(AffineMap::dense(vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![0.0, 0.0]).unwrap().inverse().is_err());
    }

    #[test]
    fn catalog_actions_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for act in [
            AffineAction::coordinate_permutations(5).unwrap(),
            AffineAction::rotations(&[theta(), 0.7]).unwrap(),
            AffineAction::left_regular(2).unwrap(),
        ] {
            let r = act.validate(&mut rng, 50, 8).unwrap();
            assert!(r.passed(1e-9), "{r:?}");
        }
    }

    #[test]
    fn non_commuting_images_fail_relation_check() {
        // Two non-commuting rotations-with-translation cannot define a ℤ² action.
        let z2 = Group::lattice(2);
        let gens = GeneratingSet::standard(&z2).unwrap();
        let maps = vec![
            AffineMap::permutation(vec![1, 0, 2]).unwrap(),
            AffineMap::permutation(vec![0, 2, 1]).unwrap(),
        ];
        let act = AffineAction::new(&z2, &gens, maps, ConvexModel::simplex(3), &Limits::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = act.validate(&mut rng, 50, 8).unwrap();
        assert!(r.relation > 1e-3);
    }

    proptest! {
        #[test]
        fn action_is_a_homomorphism_on_samples(
            a in -20i64..20, b in -20i64..20, c in -20i64..20, d in -20i64..20,
            x0 in -0.7f64..0.7, x1 in -0.7f64..0.7,
        ) {
            let act = AffineAction::rotations(&[theta(), 0.3]).unwrap();
            let g = Element::vector(&[a, b]);
            let h = Element::vector(&[c, d]);
            let gh = Group::lattice(2).mul(&g, &h).unwrap();
            let x = [x0, x1];
            let lhs = act.act(&gh, &x).unwrap();
            let rhs = act.act(&g, &act.act(&h, &x).unwrap()).unwrap();
            let len = (a.abs() + b.abs() + c.abs() + d.abs()).max(1) as f64;
            prop_assert!(vector::linf(&vector::sub(&lhs, &rhs)) <= 1e-9 * len);
        }

        #[test]
        fn affineness_and_weak_bound(
            seed in any::<u64>(), lambda in 0.0f64..1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let act = AffineAction::coordinate_permutations(5).unwrap();
            let s5 = act.group().clone();
            let g = s5.elements(&Limits::default()).unwrap()[rng.gen_range(0..120)].clone();
            let x = act.model().sample(&mut rng);
            let y = act.model().sample(&mut rng);
            let lhs = act.act(&g, &vector::lerp(lambda, &x, &y)).unwrap();
            let rhs = vector::lerp(lambda, &act.act(&g, &x).unwrap(), &act.act(&g, &y).unwrap());
            prop_assert!(vector::linf(&vector::sub(&lhs, &rhs)) <= 1e-9);
            // Hölder: |⟨φ, u⟩| ≤ ‖φ‖_∞ ‖u‖_1.
            let phi: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dual = Norm::Linf.eval(&phi);
            let weak = act.weak_displacement(&x, std::slice::from_ref(&g), &[phi]).unwrap().max;
            let strong = act.displacement(&x, &[g], &Norm::L1.into()).unwrap().max;
            prop_assert!(weak <= dual * strong + 1e-9);
        }
    }
}
