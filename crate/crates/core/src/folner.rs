//! Følner sets, exact boundary ratios and constructive Følner schedules.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::group::{ball, Element, GeneratingSet, Group};
use crate::{Error, Limits, Result};

/// Exact counts behind `|γΦ △ Φ| / |Φ|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryStats {
    pub size: u64,
    /// `|γΦ ∖ Φ|`
    pub outgoing: u64,
    /// `|Φ ∖ γΦ|`
    pub incoming: u64,
}

impl BoundaryStats {
    pub fn symmetric_difference(&self) -> u64 {
        self.outgoing + self.incoming
    }

    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.symmetric_difference(), self.size)
    }

    pub fn ratio_f64(&self) -> f64 {
        self.symmetric_difference() as f64 / self.size as f64
    }
}

/// A nonempty finite subset of a group, kept in ascending payload order.
#[derive(Clone, Debug)]
pub struct FolnerSet {
    elements: Vec<Element>,
    members: FxHashSet<Element>,
    ratios: BTreeMap<Element, BoundaryStats>,
}

impl FolnerSet {
    pub fn new(group: &Group, mut elements: Vec<Element>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::domain("a Følner set must be nonempty"));
        }
        for e in &elements {
            group.check(e)?;
        }
        elements.sort_unstable();
        elements.dedup();
        let members = elements.iter().cloned().collect();
        Ok(FolnerSet {
            elements,
            members,
            ratios: BTreeMap::new(),
        })
    }

    /// Builds the set and caches the boundary statistics of every generator.
    pub fn with_generators(group: &Group, elements: Vec<Element>, gens: &GeneratingSet) -> Result<Self> {
        let mut set = Self::new(group, elements)?;
        for g in gens.generators() {
            let stats = set.boundary(group, g)?;
            set.ratios.insert(g.clone(), stats);
        }
        Ok(set)
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.members.contains(e)
    }

    /// Cached statistics for a generator passed to [`FolnerSet::with_generators`].
    pub fn cached(&self, gamma: &Element) -> Option<&BoundaryStats> {
        self.ratios.get(gamma)
    }

    /// Counts `|γΦ ∖ Φ|` and `|Φ ∖ γΦ|` independently.
    pub fn boundary(&self, group: &Group, gamma: &Element) -> Result<BoundaryStats> {
        group.check(gamma)?;
        let gamma_inv = group.inv_unchecked(gamma);
        let outgoing = self
            .elements
            .iter()
            .filter(|phi| !self.contains(&group.mul_unchecked(gamma, phi)))
            .count() as u64;
        // φ ∉ γΦ  ⇔  γ⁻¹φ ∉ Φ
        let incoming = self
            .elements
            .iter()
            .filter(|phi| !self.contains(&group.mul_unchecked(&gamma_inv, phi)))
            .count() as u64;
        Ok(BoundaryStats {
            size: self.len() as u64,
            outgoing,
            incoming,
        })
    }

    /// `γΦ` as a sorted element list.
    pub fn translate(&self, group: &Group, gamma: &Element) -> Result<Vec<Element>> {
        group.check(gamma)?;
        let mut out: Vec<Element> = self.elements.iter().map(|phi| group.mul_unchecked(gamma, phi)).collect();
        out.sort_unstable();
        Ok(out)
    }
}

/// Exact boundary ratio `|γΦ △ Φ| / |Φ|` together with the split counts.
pub fn boundary_ratio(group: &Group, phi: &FolnerSet, gamma: &Element) -> Result<(Ratio<u64>, BoundaryStats)> {
    let stats = phi.boundary(group, gamma)?;
    Ok((stats.ratio(), stats))
}

/// Side length of box number `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum SidesRule {
    /// `side(i) = 2^i`
    Doubling,
    /// `side(i) = start + step·i`
    Linear { start: u64, step: u64 },
}

impl SidesRule {
    pub fn side(&self, index: usize) -> Option<u64> {
        match *self {
            SidesRule::Doubling => 1u64.checked_shl(index as u32).filter(|_| index < 63),
            SidesRule::Linear { start, step } => step.checked_mul(index as u64)?.checked_add(start),
        }
    }
}

/// An ℕ-indexed family of finite sets whose sizes strictly increase.
#[derive(Clone, Debug)]
pub enum FolnerSchedule {
    /// `[0,n)ᵈ` in `ℤᵈ`, or `{(a,b,c) : 0 ≤ a,b < n, 0 ≤ c < n²}` in `H₃(ℤ)`.
    Boxes { group: Group, sides: SidesRule },
    /// Word-metric balls of radius `i`.
    Balls { group: Group, gens: GeneratingSet },
    /// A finite group as its own single Følner set, at index 0.
    WholeGroup { group: Group },
    /// Explicitly listed sets.
    Explicit { group: Group, sets: Vec<Vec<Element>> },
}

pub fn box_schedule(group: &Group, sides: SidesRule) -> Result<FolnerSchedule> {
    match group {
        Group::Lattice { .. } | Group::Heisenberg => {}
        _ => {
            return Err(Error::domain(format!(
                "box schedules exist only for Z^d and H3(Z), not {}",
                group.name()
            )))
        }
    }
    match sides {
        SidesRule::Linear { start, step } if start == 0 || step == 0 => {
            Err(Error::domain("linear sides need start >= 1 and step >= 1"))
        }
        _ => Ok(FolnerSchedule::Boxes {
            group: group.clone(),
            sides,
        }),
    }
}

impl FolnerSchedule {
    pub fn group(&self) -> &Group {
        match self {
            FolnerSchedule::Boxes { group, .. }
            | FolnerSchedule::Balls { group, .. }
            | FolnerSchedule::WholeGroup { group }
            | FolnerSchedule::Explicit { group, .. } => group,
        }
    }

    /// Number of indices, for finite schedules.
    pub fn finite_len(&self) -> Option<usize> {
        match self {
            FolnerSchedule::WholeGroup { .. } => Some(1),
            FolnerSchedule::Explicit { sets, .. } => Some(sets.len()),
            _ => None,
        }
    }

    pub fn side(&self, index: usize) -> Option<u64> {
        match self {
            FolnerSchedule::Boxes { sides, .. } => sides.side(index),
            _ => None,
        }
    }

    pub fn elements(&self, index: usize, limits: &Limits) -> Result<Vec<Element>> {
        match self {
            FolnerSchedule::Boxes { group, sides } => {
                let n = sides
                    .side(index)
                    .ok_or_else(|| Error::resource(format!("box side at index {index}"), limits.ball_cap))?;
                box_elements(group, n, limits)
            }
            FolnerSchedule::Balls { group, gens } => Ok(ball(group, gens, index, limits)?.into_elements()),
            FolnerSchedule::WholeGroup { group } if index == 0 => group.elements(limits),
            FolnerSchedule::Explicit { sets, .. } if index < sets.len() => Ok(sets[index].clone()),
            _ => Err(Error::domain(format!("schedule has no index {index}"))),
        }
    }

    pub fn set(&self, index: usize, gens: &GeneratingSet, limits: &Limits) -> Result<FolnerSet> {
        FolnerSet::with_generators(self.group(), self.elements(index, limits)?, gens)
    }
}

fn box_elements(group: &Group, n: u64, limits: &Limits) -> Result<Vec<Element>> {
    let too_big = || Error::resource(format!("box of side {n} in {}", group.name()), limits.ball_cap);
    let size = match group {
        Group::Lattice { dim } => n.checked_pow(*dim as u32),
        Group::Heisenberg => n.checked_pow(4),
        _ => unreachable!("box_schedule admits only Z^d and H3(Z)"),
    };
    match size {
        Some(s) if s <= limits.ball_cap as u64 => {}
        _ => return Err(too_big()),
    }
    let n = n as i64;
    let mut out = match group {
        Group::Lattice { dim } => {
            let mut pts: Vec<Vec<i64>> = vec![vec![]];
            for _ in 0..*dim {
                pts = pts
                    .into_iter()
                    .flat_map(|p| {
                        (0..n).map(move |x| {
                            let mut q = p.clone();
                            q.push(x);
                            q
                        })
                    })
                    .collect();
            }
            pts.iter().map(|p| Element::vector(p)).collect::<Vec<_>>()
        }
        Group::Heisenberg => {
            let mut v = Vec::with_capacity((n * n * n * n) as usize);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n * n {
                        v.push(Element::Heisenberg([a, b, c]));
                    }
                }
            }
            v
        }
        _ => unreachable!(),
    };
    out.sort_unstable();
    Ok(out)
}

/// One row of a ratio profile.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileRow {
    pub index: usize,
    pub set_size: usize,
    pub generator: Element,
    pub stats: BoundaryStats,
}

impl ProfileRow {
    pub fn ratio(&self) -> Ratio<u64> {
        self.stats.ratio()
    }
}

/// Boundary ratios for every generator at indices `0..=max_index` (fewer for
/// finite schedules).
pub fn ratio_profile(
    schedule: &FolnerSchedule,
    gens: &GeneratingSet,
    max_index: usize,
    limits: &Limits,
) -> Result<Vec<ProfileRow>> {
    let last = schedule.finite_len().map_or(max_index, |n| max_index.min(n.saturating_sub(1)));
    let mut rows = Vec::new();
    for index in 0..=last {
        let set = schedule.set(index, gens, limits)?;
        for g in gens.generators() {
            rows.push(ProfileRow {
                index,
                set_size: set.len(),
                generator: g.clone(),
                stats: *set.cached(g).expect("generator ratios are cached"),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Letter;

    fn z(n: i64) -> Element {
        Element::vector(&[n])
    }

    /// Symmetric difference by brute-force set construction.
    fn oracle_ratio(group: &Group, set: &[Element], gamma: &Element) -> Ratio<u64> {
        let phi: std::collections::BTreeSet<_> = set.iter().cloned().collect();
        let shifted: std::collections::BTreeSet<_> = set.iter().map(|p| group.mul(gamma, p).unwrap()).collect();
        Ratio::new(phi.symmetric_difference(&shifted).count() as u64, phi.len() as u64)
    }

    #[test]
    fn integer_interval() {
        let g = Group::lattice(1);
        let phi = FolnerSet::new(&g, (0..10).map(z).collect()).unwrap();
        let (r, stats) = boundary_ratio(&g, &phi, &z(1)).unwrap();
        assert_eq!(r, Ratio::new(2, 10));
        assert_eq!((stats.outgoing, stats.incoming), (1, 1));
        assert_eq!(boundary_ratio(&g, &phi, &z(0)).unwrap().0, Ratio::new(0, 1));
    }

    #[test]
    fn free_group_ball_one() {
        let g = Group::free(2);
        let gens = GeneratingSet::standard(&g).unwrap();
        let b1 = ball(&g, &gens, 1, &Limits::default()).unwrap().into_elements();
        let phi = FolnerSet::new(&g, b1.clone()).unwrap();
        let a = Element::word(&[Letter::new(0, false)]);
        let (r, stats) = boundary_ratio(&g, &phi, &a).unwrap();
        assert_eq!(r, Ratio::new(6, 5));
        assert_eq!((stats.outgoing, stats.incoming), (3, 3));
        assert_eq!(r, oracle_ratio(&g, &b1, &a));
    }

    #[test]
    fn empty_set_is_rejected() {
        assert!(FolnerSet::new(&Group::lattice(1), vec![]).is_err());
    }

    #[test]
    fn unsupported_box_group() {
        assert!(box_schedule(&Group::free(2), SidesRule::Doubling).is_err());
        assert!(box_schedule(&Group::lattice(1), SidesRule::Linear { start: 0, step: 1 }).is_err());
    }

    #[test]
    fn z2_box_side_four() {
        let g = Group::lattice(2);
        let s = box_schedule(&g, SidesRule::Doubling).unwrap();
        let gens = GeneratingSet::standard(&g).unwrap();
        let set = s.set(2, &gens, &Limits::default()).unwrap();
        assert_eq!(set.len(), 16);
        assert_eq!(set.cached(&Element::vector(&[1, 0])).unwrap().ratio(), Ratio::new(1, 2));
    }

    #[test]
    fn z_boxes_closed_form() {
        let g = Group::lattice(1);
        let s = box_schedule(&g, SidesRule::Doubling).unwrap();
        let gens = GeneratingSet::new(&g, vec![z(1), z(-1)]).unwrap();
        for k in 1..=10 {
            let set = s.set(k, &gens, &Limits::default()).unwrap();
            let n = 1u64 << k;
            for gamma in gens.generators() {
                assert_eq!(set.cached(gamma).unwrap().ratio(), Ratio::new(2, n));
                assert_eq!(set.cached(gamma).unwrap().ratio(), oracle_ratio(&g, set.elements(), gamma));
            }
        }
    }

    #[test]
    fn heisenberg_box_by_enumeration() {
        let g = Group::Heisenberg;
        let s = box_schedule(&g, SidesRule::Doubling).unwrap();
        let elems = s.elements(2, &Limits::default()).unwrap();
        assert_eq!(elems.len(), 256);
        let phi = FolnerSet::new(&g, elems.clone()).unwrap();
        let x = Element::Heisenberg([1, 0, 0]);
        let (r, _) = boundary_ratio(&g, &phi, &x).unwrap();
        assert_eq!(r, oracle_ratio(&g, &elems, &x));
        // x shifts a by one (the 64 elements with a = 3 leave) and c by b
        // (for a < 3, b elements of each column overflow c < 16): 3·(0+1+2+3)
        assert_eq!(r, Ratio::new(2 * (64 + 18), 256));
        assert!(r > Ratio::new(0, 1) && r <= Ratio::new(3, 4));
    }

    #[test]
    fn profile_examples() {
        let g = Group::lattice(1);
        let s = box_schedule(&g, SidesRule::Doubling).unwrap();
        let gens = GeneratingSet::new(&g, vec![z(1)]).unwrap();
        let rows = ratio_profile(&s, &gens, 5, &Limits::default()).unwrap();
        let ratios: Vec<_> = rows[1..].iter().map(|r| r.ratio()).collect();
        let expected: Vec<_> = [1, 2, 4, 8, 16].iter().map(|&d| Ratio::new(1, d)).collect();
        assert_eq!(ratios, expected);

        let s3 = Group::symmetric(3);
        let whole = FolnerSchedule::WholeGroup { group: s3.clone() };
        let gens = GeneratingSet::standard(&s3).unwrap();
        let rows = ratio_profile(&whole, &gens, 4, &Limits::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.stats.symmetric_difference() == 0));

        let f2 = Group::free(2);
        let balls = FolnerSchedule::Balls {
            group: f2.clone(),
            gens: GeneratingSet::standard(&f2).unwrap(),
        };
        let a = GeneratingSet::new(&f2, vec![Element::word(&[Letter::new(0, false)])]).unwrap();
        for row in ratio_profile(&balls, &a, 6, &Limits::default()).unwrap().iter().skip(1) {
            assert!(row.ratio() >= Ratio::new(1, 1));
        }
    }

    #[test]
    fn box_cap() {
        let s = box_schedule(&Group::Heisenberg, SidesRule::Doubling).unwrap();
        let err = s.elements(5, &Limits::default()).unwrap_err();
        assert!(matches!(err, Error::Resource { cap: 1_000_000, .. }));
    }

    #[test]
    fn lattice_box_ratio_is_constant_over_side() {
        let limits = Limits::default();
        for g in [Group::lattice(1), Group::lattice(2), Group::lattice(3)] {
            let s = box_schedule(&g, SidesRule::Doubling).unwrap();
            let gens = GeneratingSet::standard(&g).unwrap();
            let first = s.set(1, &gens, &limits).unwrap();
            for i in 2..=6 {
                if g == Group::lattice(3) && i > 5 {
                    break;
                }
                let set = s.set(i, &gens, &limits).unwrap();
                for gamma in gens.generators() {
                    let c = first.cached(gamma).unwrap().ratio() * s.side(1).unwrap();
                    assert!(set.cached(gamma).unwrap().ratio() <= c / s.side(i).unwrap());
                }
            }
        }
    }

    #[test]
    fn heisenberg_box_ratio_closed_form() {
        // x·(a,b,c) = (a+1, b, c+b): ratio 2/n + (n-1)²/n³, so ratio·n rises
        // towards 3; y only shifts b: ratio 2/n.
        let g = Group::Heisenberg;
        let s = box_schedule(&g, SidesRule::Linear { start: 2, step: 2 }).unwrap();
        let gens = GeneratingSet::standard(&g).unwrap();
        for i in 0..=6 {
            let n = s.side(i).unwrap();
            let set = s.set(i, &gens, &Limits::default()).unwrap();
            let x = set.cached(&gens.generators()[0]).unwrap().ratio();
            let y = set.cached(&gens.generators()[1]).unwrap().ratio();
            assert_eq!(x, Ratio::new(2, n) + Ratio::new((n - 1) * (n - 1), n * n * n));
            assert_eq!(y, Ratio::new(2, n));
            assert!(x * n < Ratio::from_integer(3));
        }
    }

    #[test]
    fn right_translation_invariance() {
        let g = Group::free(2);
        let gens = GeneratingSet::standard(&g).unwrap();
        let b2 = ball(&g, &gens, 2, &Limits::default()).unwrap().into_elements();
        let phi = FolnerSet::new(&g, b2.clone()).unwrap();
        let eta = Element::word(&[Letter::new(1, false), Letter::new(0, true)]);
        let phi_eta = FolnerSet::new(&g, b2.iter().map(|p| g.mul(p, &eta).unwrap()).collect()).unwrap();
        for gamma in ball(&g, &gens, 2, &Limits::default()).unwrap().elements() {
            assert_eq!(phi.boundary(&g, gamma).unwrap(), phi_eta.boundary(&g, gamma).unwrap());
        }
    }
}
