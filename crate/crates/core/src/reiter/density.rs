use std::collections::BTreeMap;

use crate::group::{word_index, Element, Group};
use crate::{Error, Result};

/// Tolerance for "normalized" in `ℓᵖ` norm.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

pub(crate) fn check_exponent(p: u32) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(Error::domain(format!("exponent p = {p} is not supported (use 1 or 2)")))
    }
}

pub(crate) fn lp_norm(values: impl Iterator<Item = f64>, p: u32) -> f64 {
    match p {
        1 => values.map(f64::abs).sum(),
        _ => values.map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// A finitely supported nonnegative function on a group, viewed in `ℓᵖ(G)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupDensity {
    group: Group,
    mass: BTreeMap<Element, f64>,
    p: u32,
}

impl GroupDensity {
    /// Zero masses are dropped; negative or non-finite ones are errors.
    pub fn new(group: &Group, masses: impl IntoIterator<Item = (Element, f64)>, p: u32) -> Result<Self> {
        check_exponent(p)?;
        let mut mass = BTreeMap::new();
        for (e, m) in masses {
            group.check(&e)?;
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::domain(format!("mass {m} at {e} is not a nonnegative number")));
            }
            if m > 0.0 && mass.insert(e.clone(), m).is_some() {
                return Err(Error::domain(format!("element {e} listed twice")));
            }
        }
        Ok(GroupDensity { group: group.clone(), mass, p })
    }

    pub fn point_mass(group: &Group, e: Element, p: u32) -> Result<Self> {
        Self::new(group, [(e, 1.0)], p)
    }

    /// The normalized indicator of a finite set.
    pub fn uniform(group: &Group, elements: &[Element], p: u32) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::domain("uniform density on an empty set"));
        }
        let n = elements.len() as f64;
        let m = if p == 1 { 1.0 / n } else { 1.0 / n.sqrt() };
        Self::new(group, elements.iter().map(|e| (e.clone(), m)), p)
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn mass(&self, e: &Element) -> f64 {
        self.mass.get(e).copied().unwrap_or(0.0)
    }

    /// Support with masses, in ascending payload order.
    pub fn iter(&self) -> impl Iterator<Item = (&Element, f64)> {
        self.mass.iter().map(|(e, m)| (e, *m))
    }

    pub fn support_size(&self) -> usize {
        self.mass.len()
    }

    pub fn norm(&self) -> f64 {
        lp_norm(self.mass.values().copied(), self.p)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    /// `(g·f)(x) = f(g⁻¹x)`: the mass at `x` moves to `gx`.
    pub fn translate(&self, g: &Element) -> Result<Self> {
        self.group.check(g)?;
        let mass = self
            .mass
            .iter()
            .map(|(x, m)| (self.group.mul_unchecked(g, x), *m))
            .collect();
        Ok(GroupDensity { group: self.group.clone(), mass, p: self.p })
    }

    /// `‖self − other‖_p` over the union of supports.
    pub fn distance(&self, other: &GroupDensity) -> Result<f64> {
        if self.group != other.group || self.p != other.p {
            return Err(Error::domain("densities live in different spaces"));
        }
        let only_other = other.mass.iter().filter(|(e, _)| !self.mass.contains_key(e)).map(|(_, m)| *m);
        let diffs = self.mass.iter().map(|(e, m)| m - other.mass(e)).chain(only_other);
        Ok(lp_norm(diffs, self.p))
    }

    /// The density as a point of `prob(ℕ)` under `ℕ ≅ F_k` (length-lex order).
    pub fn to_prob_n(&self) -> Result<Vec<f64>> {
        let Group::Free { rank } = self.group else {
            return Err(Error::domain("only free-group densities are points of prob(N)"));
        };
        let mut out = Vec::new();
        for (e, m) in &self.mass {
            let i = word_index(e.as_word().expect("free group element"), rank)? as usize;
            if out.len() <= i {
                out.resize(i + 1, 0.0);
            }
            out[i] = *m;
        }
        Ok(out)
    }
}

/// `max_γ ‖γ·f − f‖_p` over the listed generators.
pub fn reiter_objective(f: &GroupDensity, gens: &[Element]) -> Result<f64> {
    if !f.is_normalized() {
        return Err(Error::domain(format!("density has norm {}, expected 1", f.norm())));
    }
    gens.iter()
        .map(|g| f.translate(g)?.distance(f))
        .try_fold(0.0_f64, |m, d| Ok(m.max(d?)))
}
