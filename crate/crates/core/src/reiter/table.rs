use rustc_hash::FxHashMap;

use crate::group::{ball, Element, GeneratingSet, Group};
use crate::{Limits, Result};

/// Left translation by each generator restricted to a ball: `forward[g][i]`
/// is the index of `g·xᵢ` and `backward[g][y]` that of `g⁻¹·x_y`, `None`
/// when the product leaves the ball. Left multiplication is injective, so
/// each leaving product is a distinct point outside the ball.
#[derive(Clone, Debug)]
pub(crate) struct TranslationTable {
    pub elements: Vec<Element>,
    pub forward: Vec<Vec<Option<u32>>>,
    pub backward: Vec<Vec<Option<u32>>>,
}

impl TranslationTable {
    pub fn new(group: &Group, gens: &GeneratingSet, radius: usize, limits: &Limits) -> Result<Self> {
        let elements = ball(group, gens, radius, limits)?.into_elements();
        let index: FxHashMap<&Element, u32> = elements.iter().enumerate().map(|(i, e)| (e, i as u32)).collect();
        let lookup = |g: &Element| -> Vec<Option<u32>> {
            elements
                .iter()
                .map(|x| index.get(&group.mul_unchecked(g, x)).copied())
                .collect()
        };
        let forward = gens.generators().iter().map(lookup).collect();
        let backward = gens.generators().iter().map(|g| lookup(&group.inv_unchecked(g))).collect();
        Ok(TranslationTable { elements, forward, backward })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    /// `D = g·f − f` on the ball, and the `ℓᵖ` mass `f` leaks out of it.
    pub fn difference(&self, g: usize, f: &[f64], out: &mut Vec<f64>) -> Vec<f64> {
        out.clear();
        out.extend(
            self.backward[g]
                .iter()
                .zip(f)
                .map(|(src, fy)| src.map_or(0.0, |s| f[s as usize]) - fy),
        );
        self.forward[g]
            .iter()
            .zip(f)
            .filter(|(t, _)| t.is_none())
            .map(|(_, fi)| *fi)
            .collect()
    }

    /// `‖g·f − f‖_p`.
    pub fn displacement(&self, g: usize, f: &[f64], p: u32, scratch: &mut Vec<f64>) -> f64 {
        let leaked = self.difference(g, f, scratch);
        super::density::lp_norm(scratch.iter().copied().chain(leaked), p)
    }

    pub fn objective(&self, f: &[f64], p: u32, scratch: &mut Vec<f64>) -> (f64, usize) {
        (0..self.forward.len())
            .map(|g| (self.displacement(g, f, p, scratch), g))
            .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
    }
}
