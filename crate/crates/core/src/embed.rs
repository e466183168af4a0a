//! Affine embeddings `T: Q → ℓ²`, `x ↦ (f_n(x)/n)`, of a compact convex set
//! `Q` (simplex or box) by a finite family of affine functions bounded by 1,
//! and actions transported along them.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convex::{vector, AffineAction, AffineMap, ConvexModel, GeneratorImage, Norm, Seminorm, TAU_MEM};
use crate::group::{ball, Element};
use crate::{Error, Limits, Result};

/// Members beyond `dim + 1` in the default family.
pub const DEFAULT_EXTRA_MEMBERS: usize = 8;

const DEFAULT_FAMILY_SEED: u64 = 0x5eed;
const MAX_BOX_VERTICES_DIM: usize = 16;

/// `x ↦ ⟨coeffs, x⟩ + constant`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFunction {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl AffineFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        vector::dot(&self.coeffs, x) + self.constant
    }

    fn combine(weights: &[f64], members: &[AffineFunction]) -> AffineFunction {
        let mut coeffs = vec![0.0; members[0].coeffs.len()];
        let mut constant = 0.0;
        for (w, f) in weights.iter().zip(members) {
            vector::axpy(*w, &f.coeffs, &mut coeffs);
            constant += w * f.constant;
        }
        AffineFunction { coeffs, constant }
    }

    fn scaled(&self, s: f64) -> AffineFunction {
        AffineFunction {
            coeffs: vector::scale(s, &self.coeffs),
            constant: s * self.constant,
        }
    }
}

/// Affine functions on a compact convex domain, each with sup-norm ≤ 1 there.
#[derive(Clone, Debug)]
pub struct AffineFunctionFamily {
    domain: ConvexModel,
    members: Vec<AffineFunction>,
    vertices: Vec<Vec<f64>>,
}

impl AffineFunctionFamily {
    pub fn new(domain: ConvexModel, members: Vec<AffineFunction>) -> Result<Self> {
        let vertices = domain_vertices(&domain)?;
        let m = vertices[0].len();
        if members.is_empty() {
            return Err(Error::domain("affine function family is empty"));
        }
        for (n, f) in members.iter().enumerate() {
            if f.coeffs.len() != m || !vector::is_finite(&f.coeffs) || !f.constant.is_finite() {
                return Err(Error::domain(format!("member {} is not a finite affine function on R^{m}", n + 1)));
            }
            let sup = vertices.iter().fold(0.0_f64, |s, v| s.max(f.eval(v).abs()));
            if sup > 1.0 + 1e-12 {
                return Err(Error::domain(format!("member {} has sup-norm {sup} > 1 on the domain", n + 1)));
            }
        }
        Ok(AffineFunctionFamily { domain, members, vertices })
    }

    pub fn domain(&self) -> &ConvexModel {
        &self.domain
    }

    pub fn members(&self) -> &[AffineFunction] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Dimension of the affine hull of the domain.
    pub fn dimension(&self) -> usize {
        tangent_basis(&self.domain).ncols()
    }

    /// `T(x)` without a membership check.
    pub fn embed_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.members
            .iter()
            .enumerate()
            .map(|(n, f)| f.eval(x) / (n + 1) as f64)
            .collect()
    }

    /// `T(x) = (f_n(x)/n)_{n=1..N}` for `x` in the domain.
    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        let x = self.domain.admit(x, TAU_MEM)?;
        Ok(self.embed_unchecked(&x))
    }
}

/// Coordinate functionals rescaled to `[−1, 1]`, the constant 1, then
/// pseudo-random rational combinations of these normalized on the vertices.
pub fn default_family(domain: &ConvexModel, n: usize) -> Result<AffineFunctionFamily> {
    default_family_seeded(domain, n, DEFAULT_FAMILY_SEED)
}

pub fn default_family_seeded(domain: &ConvexModel, n: usize, seed: u64) -> Result<AffineFunctionFamily> {
    domain.validate()?;
    let mut base = Vec::new();
    match domain {
        ConvexModel::Simplex { coords } => {
            // The last barycentric coordinate is determined by the others.
            for i in 0..coords - 1 {
                let mut coeffs = vec![0.0; *coords];
                coeffs[i] = 2.0;
                base.push(AffineFunction { coeffs, constant: -1.0 });
            }
            base.push(AffineFunction { coeffs: vec![0.0; *coords], constant: 1.0 });
        }
        ConvexModel::Box { lo, hi } => {
            for i in 0..lo.len() {
                if hi[i] > lo[i] {
                    let mut coeffs = vec![0.0; lo.len()];
                    coeffs[i] = 2.0 / (hi[i] - lo[i]);
                    base.push(AffineFunction { coeffs, constant: -(hi[i] + lo[i]) / (hi[i] - lo[i]) });
                }
            }
            base.push(AffineFunction { coeffs: vec![0.0; lo.len()], constant: 1.0 });
        }
        _ => return Err(Error::domain(format!("{} is not a simplex or box", domain.label()))),
    }
    if n < base.len() {
        return Err(Error::domain(format!(
            "family size {n} is below dimension + 1 = {}",
            base.len()
        )));
    }
    let vertices = domain_vertices(domain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = base.clone();
    while members.len() < n {
        let weights: Vec<f64> = (0..base.len())
            .map(|_| rng.gen_range(-4i32..=4) as f64 / rng.gen_range(1i32..=4) as f64)
            .collect();
        let f = AffineFunction::combine(&weights, &base);
        let sup = vertices.iter().fold(0.0_f64, |s, v| s.max(f.eval(v).abs()));
        if sup > 1e-9 {
            members.push(f.scaled(1.0 / sup));
        }
    }
    AffineFunctionFamily::new(domain.clone(), members)
}

fn domain_vertices(domain: &ConvexModel) -> Result<Vec<Vec<f64>>> {
    domain.validate()?;
    match domain {
        ConvexModel::Simplex { .. } => Ok(domain.extreme_points(&mut ChaCha8Rng::seed_from_u64(0), 0)),
        ConvexModel::Box { lo, .. } if lo.len() <= MAX_BOX_VERTICES_DIM => {
            Ok(domain.extreme_points(&mut ChaCha8Rng::seed_from_u64(0), 1 << lo.len()))
        }
        ConvexModel::Box { lo, .. } => Err(Error::resource(
            format!("vertex enumeration of a {}-dimensional box", lo.len()),
            1 << MAX_BOX_VERTICES_DIM,
        )),
        _ => Err(Error::domain(format!("{} is not a simplex or box", domain.label()))),
    }
}

/// Orthonormal basis (columns) of the direction space of the domain's affine hull.
fn tangent_basis(domain: &ConvexModel) -> DMatrix<f64> {
    match domain {
        ConvexModel::Simplex { coords } => {
            let m = *coords;
            if m == 1 {
                return DMatrix::zeros(1, 0);
            }
            let spanning = DMatrix::from_fn(m, m - 1, |r, c| {
                if r == c {
                    1.0
                } else if r == m - 1 {
                    -1.0
                } else {
                    0.0
                }
            });
            spanning.qr().q()
        }
        ConvexModel::Box { lo, hi } => {
            let free: Vec<usize> = (0..lo.len()).filter(|&i| hi[i] > lo[i]).collect();
            DMatrix::from_fn(lo.len(), free.len(), |r, c| if free[c] == r { 1.0 } else { 0.0 })
        }
        _ => unreachable!("checked by domain_vertices"),
    }
}

/// The image `T(Q)` together with the data to invert `T` on it.
#[derive(Clone, Debug)]
pub struct EmbeddedSet {
    family: AffineFunctionFamily,
    origin: Vec<f64>,
    basis: DMatrix<f64>,
    image_origin: Vec<f64>,
    /// `L·B` with `L` the linear part of `T`.
    image_linear: DMatrix<f64>,
    /// Pseudo-inverse of `L·B`.
    pinv: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl EmbeddedSet {
    /// Fails if `T` is not injective on the domain.
    pub fn new(family: AffineFunctionFamily) -> Result<Self> {
        let basis = tangent_basis(&family.domain);
        let origin = family.vertices[0].clone();
        let n = family.len();
        let m = origin.len();
        let linear = DMatrix::from_fn(n, m, |r, c| family.members[r].coeffs[c] / (r + 1) as f64);
        let image_linear = &linear * &basis;
        let svd = image_linear.clone().svd(true, true);
        let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
        singular_values.sort_by(|a, b| b.total_cmp(a));
        let top = singular_values.first().copied().unwrap_or(0.0);
        if singular_values.len() < basis.ncols() || singular_values.iter().any(|s| *s <= 1e-12 * top.max(1.0)) {
            return Err(Error::domain("affine family does not separate points of the domain"));
        }
        let pinv = svd
            .pseudo_inverse(0.0)
            .map_err(|e| Error::Numeric { index: 0, detail: e.to_string() })?;
        let image_origin = family.embed_unchecked(&origin);
        Ok(EmbeddedSet { family, origin, basis, image_origin, image_linear, pinv, singular_values })
    }

    pub fn family(&self) -> &AffineFunctionFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.family.len()
    }

    pub fn embed_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.family.embed_unchecked(x)
    }

    /// Least-squares preimage of `y` in the affine hull of the domain.
    pub fn preimage(&self, y: &[f64]) -> Vec<f64> {
        let d = DVector::from_vec(vector::sub(y, &self.image_origin));
        let x = DVector::from_column_slice(&self.origin) + &self.basis * (&self.pinv * d);
        x.iter().copied().collect()
    }

    /// Largest and smallest singular values of `T` on the tangent space: the
    /// exact Lipschitz constants of `T` and (inverted) of `T⁻¹` for `ℓ²`.
    pub fn moduli(&self) -> (f64, f64) {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        let bottom = self.singular_values.last().copied().unwrap_or(0.0);
        (top, if bottom > 0.0 { 1.0 / bottom } else { f64::INFINITY })
    }

    pub(crate) fn violation(&self, y: &[f64]) -> f64 {
        let x = self.preimage(y);
        let off_image = vector::linf(&vector::sub(&self.embed_unchecked(&x), y));
        off_image.max(self.family.domain.violation(&x).unwrap_or(f64::INFINITY))
    }

    pub(crate) fn project(&self, y: &[f64]) -> Vec<f64> {
        let x = self.family.domain.project(&self.preimage(y));
        self.embed_unchecked(&x)
    }

    pub(crate) fn extreme_points(&self) -> Vec<Vec<f64>> {
        self.family.vertices.iter().map(|v| self.embed_unchecked(v)).collect()
    }

    /// A seminorm of differences is convex, so it peaks at a pair of vertices.
    pub(crate) fn diameter(&self, q: &Seminorm) -> f64 {
        let pts = self.extreme_points();
        let mut d: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                d = d.max(q.eval(&vector::sub(a, b)));
            }
        }
        d
    }

    /// Affine map on `ℝ^N` that is `T∘f∘T⁻¹` on the affine hull of `T(Q)`
    /// and the identity on its orthogonal complement.
    fn conjugate(&self, f: &AffineMap) -> Result<AffineMap> {
        let n = self.dim();
        let hull = &self.image_linear * &self.pinv;
        let g = |y: &[f64]| -> Result<Vec<f64>> {
            let inside = self.embed_unchecked(&f.apply(&self.preimage(y))?);
            let d = DVector::from_vec(vector::sub(y, &self.image_origin));
            let normal = &d - &hull * &d;
            Ok(inside.iter().zip(normal.iter()).map(|(a, b)| a + b).collect())
        };
        let offset = g(&vec![0.0; n])?;
        let mut matrix = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = vector::sub(&g(&e)?, &offset);
            for i in 0..n {
                matrix[i][j] = col[i];
            }
        }
        AffineMap::dense(matrix, offset)
    }
}

/// Result of checking that `T` is an affine injective embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingReport {
    /// Largest `ℓ∞` failure of `T(λx+(1−λ)y) = λT(x)+(1−λ)T(y)`.
    pub affine_residual: f64,
    /// Smallest `ℓ²` distance between images of distinct vertices.
    pub injectivity_margin: f64,
    /// Sampled `max ‖Tx−Ty‖₂/‖x−y‖₂`.
    pub sampled_modulus: f64,
    /// Sampled `max ‖x−y‖₂/‖Tx−Ty‖₂`.
    pub sampled_inverse_modulus: f64,
    /// Exact Lipschitz constants of `T` and `T⁻¹` (infinite when `T` is not injective).
    pub modulus: f64,
    pub inverse_modulus: f64,
    /// Largest `ℓ²` norm of a sampled image point.
    pub max_image_norm: f64,
    pub verdict: EmbeddingVerdict,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EmbeddingVerdict {
    Passed,
    /// Two distinct domain points with the same image.
    Failed { witness: (Vec<f64>, Vec<f64>) },
}

pub fn verify_embedding<R: Rng>(family: &AffineFunctionFamily, samples: usize, rng: &mut R) -> EmbeddingReport {
    let domain = family.domain();
    let mut affine_residual: f64 = 0.0;
    let mut sampled_modulus: f64 = 0.0;
    let mut sampled_inverse_modulus: f64 = 0.0;
    let mut max_image_norm: f64 = 0.0;
    for _ in 0..samples {
        let x = domain.sample(rng);
        let y = domain.sample(rng);
        let lambda: f64 = rng.gen();
        let (tx, ty) = (family.embed_unchecked(&x), family.embed_unchecked(&y));
        let lhs = family.embed_unchecked(&vector::lerp(lambda, &x, &y));
        affine_residual = affine_residual.max(vector::linf(&vector::sub(&lhs, &vector::lerp(lambda, &tx, &ty))));
        let dx = vector::l2(&vector::sub(&x, &y));
        let dt = vector::l2(&vector::sub(&tx, &ty));
        if dx > 0.0 {
            sampled_modulus = sampled_modulus.max(dt / dx);
            sampled_inverse_modulus = sampled_inverse_modulus.max(if dt > 0.0 { dx / dt } else { f64::INFINITY });
        }
        max_image_norm = max_image_norm.max(vector::l2(&tx));
    }

    let vertices = family.vertices();
    let images: Vec<Vec<f64>> = vertices.iter().map(|v| family.embed_unchecked(v)).collect();
    let mut injectivity_margin = f64::INFINITY;
    let mut witness = None;
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            let d = vector::l2(&vector::sub(&images[i], &images[j]));
            if d < injectivity_margin {
                injectivity_margin = d;
                if d <= 1e-12 && witness.is_none() {
                    witness = Some((vertices[i].clone(), vertices[j].clone()));
                }
            }
        }
    }

    let (modulus, inverse_modulus, verdict) = match (witness, EmbeddedSet::new(family.clone())) {
        (Some(w), _) => (f64::NAN, f64::INFINITY, EmbeddingVerdict::Failed { witness: w }),
        (None, Ok(set)) => {
            let (a, b) = set.moduli();
            (a, b, EmbeddingVerdict::Passed)
        }
        (None, Err(_)) => {
            let w = kernel_witness(family);
            (f64::NAN, f64::INFINITY, EmbeddingVerdict::Failed { witness: w })
        }
    };
    EmbeddingReport {
        affine_residual,
        injectivity_margin,
        sampled_modulus,
        sampled_inverse_modulus,
        modulus,
        inverse_modulus,
        max_image_norm,
        verdict,
    }
}

/// Two points of the domain differing along a kernel direction of `T`.
fn kernel_witness(family: &AffineFunctionFamily) -> (Vec<f64>, Vec<f64>) {
    let basis = tangent_basis(family.domain());
    let m = basis.nrows();
    let linear = DMatrix::from_fn(family.len(), m, |r, c| family.members()[r].coeffs[c] / (r + 1) as f64);
    let svd = (&linear * &basis).svd(false, true);
    let v_t = svd.v_t.expect("requested");
    // With fewer members than dimensions, any direction orthogonal to the
    // row space of V^T is in the kernel.
    let k = basis.ncols();
    let direction_t = if v_t.nrows() < k {
        let mut full = v_t.clone().insert_rows(v_t.nrows(), k - v_t.nrows(), 0.0);
        for r in v_t.nrows()..k {
            full[(r, r)] = 1.0;
        }
        let q = full.transpose().qr().q();
        q.column(k - 1).into_owned()
    } else {
        let i = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        v_t.row(i).transpose()
    };
    let direction = &basis * direction_t;
    let vs = family.vertices();
    let centre = vector::scale(1.0 / vs.len() as f64, &vs.iter().fold(vec![0.0; m], |mut acc, v| {
        vector::axpy(1.0, v, &mut acc);
        acc
    }));
    // Step from the centre along the kernel direction while staying inside.
    let mut t = 1.0;
    loop {
        let mut y = centre.clone();
        vector::axpy(t, direction.as_slice(), &mut y);
        if family.domain().contains(&y) || t < 1e-6 {
            return (centre, y);
        }
        t /= 2.0;
    }
}

/// An action transported to `T(Q)`.
#[derive(Clone, Debug)]
pub struct ConjugatedAction {
    pub action: AffineAction,
    pub set: Arc<EmbeddedSet>,
}

pub fn conjugated_action(action: &AffineAction, family: &AffineFunctionFamily) -> Result<ConjugatedAction> {
    if action.model().dim() != family.domain().dim() {
        return Err(Error::domain("action and family live on different spaces"));
    }
    let set = Arc::new(EmbeddedSet::new(family.clone())?);
    let images = action
        .images()
        .iter()
        .map(|img| {
            Ok(GeneratorImage {
                forward: set.conjugate(&img.forward)?,
                inverse: set.conjugate(&img.inverse)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let conj = AffineAction::with_images(
        action.group(),
        action.generators(),
        images,
        ConvexModel::Embedded(set.clone()),
        &Limits::default(),
    )?;
    Ok(ConjugatedAction { action: conj, set })
}

/// `max ‖T(g·x) − g·T(x)‖∞` over sampled `x` and `g` in the radius-`radius` ball.
pub fn commutation_residual<R: Rng>(
    original: &AffineAction,
    conjugated: &ConjugatedAction,
    radius: usize,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let elements: Vec<Element> = ball(original.group(), original.generators(), radius, &Limits::default())?.into_elements();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = original.model().sample(rng);
        let tx = conjugated.set.embed_unchecked(&x);
        for g in &elements {
            let lhs = conjugated.set.embed_unchecked(&original.act(g, &x)?);
            let rhs = conjugated.action.act(g, &tx)?;
            worst = worst.max(vector::linf(&vector::sub(&lhs, &rhs)));
        }
    }
    Ok(worst)
}

/// Seminorm used to compare displacements across `T`.
pub fn euclidean() -> Seminorm {
    Seminorm::Norm(Norm::L2)
}
