use rustc_hash::FxHashSet;

use super::{Element, GeneratingSet, Group};
use crate::{Error, Limits, Result};

/// Word-metric ball in deterministic order: by length, then by payload.
#[derive(Clone, Debug)]
pub struct Ball {
    elements: Vec<Element>,
    /// `spheres[r]..spheres[r+1]` is the sphere of radius `r`.
    spheres: Vec<usize>,
}

impl Ball {
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<Element> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn radius(&self) -> usize {
        self.spheres.len() - 2
    }

    pub fn sphere(&self, r: usize) -> &[Element] {
        &self.elements[self.spheres[r]..self.spheres[r + 1]]
    }

    /// Number of elements of word length at most `r`.
    pub fn prefix_len(&self, r: usize) -> usize {
        self.spheres[(r + 1).min(self.spheres.len() - 1)]
    }
}

/// `{w : |w| ≤ radius}` for the word metric of `gens` (closed under inverses).
///
/// Enumeration is breadth-first by right multiplication; each sphere is then
/// sorted so the result does not depend on generator order.
pub fn ball(group: &Group, gens: &GeneratingSet, radius: usize, limits: &Limits) -> Result<Ball> {
    let sym = gens.symmetric_closure(group);
    let mut seen: FxHashSet<Element> = FxHashSet::default();
    let id = group.identity();
    seen.insert(id.clone());
    let mut elements = vec![id];
    let mut spheres = vec![0, 1];
    for r in 0..radius {
        let (lo, hi) = (spheres[r], spheres[r + 1]);
        let mut next = Vec::new();
        for w in &elements[lo..hi] {
            for s in sym.generators() {
                let p = group.mul_unchecked(w, s);
                if !seen.contains(&p) {
                    if seen.len() >= limits.ball_cap {
                        return Err(Error::resource(
                            format!("ball of radius {radius} in {}", group.name()),
                            limits.ball_cap,
                        ));
                    }
                    seen.insert(p.clone());
                    next.push(p);
                }
            }
        }
        next.sort_unstable();
        elements.extend(next);
        spheres.push(elements.len());
    }
    Ok(Ball { elements, spheres })
}
