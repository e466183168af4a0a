use rustc_hash::FxHashMap;

use super::{Element, GeneratingSet, Group};
use crate::{Error, Limits, Result};

/// One letter of a word over a generating set: generator `generator` of the
/// set, or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WordStep {
    pub generator: usize,
    pub inverse: bool,
}

impl WordStep {
    fn inverted(self) -> Self {
        WordStep {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }
}

#[derive(Clone, Debug)]
enum Mode {
    /// Each standard generator of the group (and the Heisenberg centre, when
    /// present) is realised by a generator of the set or its inverse.
    Normal {
        standard: Vec<WordStep>,
        centre: Option<WordStep>,
    },
    /// Finite group with arbitrary generators: a breadth-first word table.
    Table(FxHashMap<Element, Vec<WordStep>>),
}

/// Expresses group elements as words `s₁ s₂ ⋯ sₖ` over a generating set, so
/// that an action given by generator images can be applied to any element.
#[derive(Clone, Debug)]
pub struct WordOracle {
    group: Group,
    gens: GeneratingSet,
    mode: Mode,
}

impl WordOracle {
    pub fn new(group: &Group, gens: &GeneratingSet, limits: &Limits) -> Result<Self> {
        let find = |target: &Element| -> Option<WordStep> {
            let inv = group.inv_unchecked(target);
            gens.generators().iter().enumerate().find_map(|(i, g)| {
                if g == target {
                    Some(WordStep { generator: i, inverse: false })
                } else if *g == inv {
                    Some(WordStep { generator: i, inverse: true })
                } else {
                    None
                }
            })
        };
        let standard: Option<Vec<WordStep>> = group.standard_generators().iter().map(find).collect();
        let mode = match standard {
            Some(standard) => {
                let centre = match group {
                    Group::Heisenberg => find(&Element::Heisenberg([0, 0, 1])),
                    _ => None,
                };
                Mode::Normal { standard, centre }
            }
            None if group.order().is_some() => Mode::Table(word_table(group, gens, limits)?),
            None => {
                return Err(Error::domain(format!(
                    "cannot express elements of {} over a generating set that omits its standard generators",
                    group.name()
                )))
            }
        };
        Ok(WordOracle {
            group: group.clone(),
            gens: gens.clone(),
            mode,
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn generators(&self) -> &GeneratingSet {
        &self.gens
    }

    /// A word whose product (left to right) is `g`.
    pub fn word(&self, g: &Element) -> Result<Vec<WordStep>> {
        self.group.check(g)?;
        let (standard, centre) = match &self.mode {
            Mode::Table(table) => return Ok(table[g].clone()),
            Mode::Normal { standard, centre } => (standard, centre),
        };
        let std = |i: usize, inverse: bool| {
            let s = standard[i];
            if inverse {
                s.inverted()
            } else {
                s
            }
        };
        let repeat = |out: &mut Vec<WordStep>, i: usize, count: i64| {
            out.extend(std::iter::repeat_n(std(i, count < 0), count.unsigned_abs() as usize));
        };
        let mut out = Vec::new();
        match g {
            Element::Word(w) => out.extend(w.iter().map(|l| std(l.generator(), l.is_inverse()))),
            Element::Vector(v) => {
                for (i, &x) in v.iter().enumerate() {
                    repeat(&mut out, i, x);
                }
            }
            Element::Heisenberg([a, b, c]) => {
                // (a,b,c) = x^a y^b z^(c-ab)
                repeat(&mut out, 0, *a);
                repeat(&mut out, 1, *b);
                let k = c - a * b;
                let z = match centre {
                    Some(z) => vec![*z],
                    None => vec![std(0, false), std(1, false), std(0, true), std(1, true)],
                };
                let z_inv: Vec<WordStep> = z.iter().rev().map(|s| s.inverted()).collect();
                for _ in 0..k.unsigned_abs() {
                    out.extend_from_slice(if k > 0 { &z } else { &z_inv });
                }
            }
            Element::Perm(p) => {
                // Bubble sort p by right multiplication with adjacent
                // transpositions; the swaps in reverse order spell p.
                let mut q: Vec<u32> = p.to_vec();
                let mut swaps = Vec::new();
                let n = q.len();
                for pass in 0..n {
                    for i in 0..n.saturating_sub(1 + pass) {
                        if q[i] > q[i + 1] {
                            q.swap(i, i + 1);
                            swaps.push(i);
                        }
                    }
                }
                out.extend(swaps.iter().rev().map(|&i| std(i, false)));
            }
            Element::Residues(r) => {
                let Group::Cyclic { moduli } = &self.group else { unreachable!() };
                let mut k = 0;
                for (i, &x) in r.iter().enumerate() {
                    if moduli[i] > 1 {
                        repeat(&mut out, k, x as i64);
                        k += 1;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Evaluates a word back to a group element.
    pub fn evaluate(&self, word: &[WordStep]) -> Element {
        word.iter().fold(self.group.identity(), |acc, s| {
            let g = &self.gens.generators()[s.generator];
            if s.inverse {
                self.group.mul_unchecked(&acc, &self.group.inv_unchecked(g))
            } else {
                self.group.mul_unchecked(&acc, g)
            }
        })
    }
}

fn word_table(group: &Group, gens: &GeneratingSet, limits: &Limits) -> Result<FxHashMap<Element, Vec<WordStep>>> {
    let steps: Vec<(WordStep, Element)> = gens
        .generators()
        .iter()
        .enumerate()
        .flat_map(|(i, g)| {
            [
                (WordStep { generator: i, inverse: false }, g.clone()),
                (WordStep { generator: i, inverse: true }, group.inv_unchecked(g)),
            ]
        })
        .collect();
    let mut table = FxHashMap::default();
    table.insert(group.identity(), Vec::new());
    let mut frontier = vec![group.identity()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for w in &frontier {
            for (step, s) in &steps {
                let p = group.mul_unchecked(w, s);
                if !table.contains_key(&p) {
                    if table.len() >= limits.ball_cap {
                        return Err(Error::resource(format!("word table for {}", group.name()), limits.ball_cap));
                    }
                    let mut word = table[w].clone();
                    word.push(*step);
                    table.insert(p.clone(), word);
                    next.push(p);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
    }
    if Some(table.len() as u128) != group.order() {
        return Err(Error::domain(format!(
            "generators reach only {} elements of {}",
            table.len(),
            group.name()
        )));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::tests::arb_element;
    use crate::group::{transposition, Letter};
    use proptest::prelude::*;

    fn oracle(group: &Group, gens: Vec<Element>) -> WordOracle {
        let gs = GeneratingSet::new(group, gens).unwrap();
        WordOracle::new(group, &gs, &Limits::default()).unwrap()
    }

    #[test]
    fn heisenberg_with_and_without_centre() {
        let h = Group::Heisenberg;
        let plain = oracle(&h, h.standard_generators());
        let mut with_z = h.standard_generators();
        with_z.push(Element::Heisenberg([0, 0, 1]));
        let central = oracle(&h, with_z);
        for g in [[2, 3, 1], [-1, 4, -7], [0, 0, 5], [3, -2, 0]] {
            let e = Element::Heisenberg(g);
            assert_eq!(plain.evaluate(&plain.word(&e).unwrap()), e);
            assert_eq!(central.evaluate(&central.word(&e).unwrap()), e);
        }
    }

    #[test]
    fn inverted_generators_are_accepted() {
        let z2 = Group::lattice(2);
        let o = oracle(&z2, vec![Element::vector(&[-1, 0]), Element::vector(&[0, 1])]);
        let e = Element::vector(&[3, -2]);
        let w = o.word(&e).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(o.evaluate(&w), e);
    }

    #[test]
    fn finite_group_with_other_generators_uses_table() {
        let s4 = Group::symmetric(4);
        let o = oracle(&s4, vec![transposition(4, 0, 1), Element::perm(&[1, 2, 3, 0])]);
        for e in s4.elements(&Limits::default()).unwrap() {
            assert_eq!(o.evaluate(&o.word(&e).unwrap()), e);
        }
    }

    #[test]
    fn non_generating_finite_set_is_rejected() {
        let s3 = Group::symmetric(3);
        let gs = GeneratingSet::new(&s3, vec![transposition(3, 0, 1)]).unwrap();
        assert!(WordOracle::new(&s3, &gs, &Limits::default()).is_err());
    }

    #[test]
    fn infinite_group_needs_standard_generators() {
        let f2 = Group::free(2);
        let ab = Element::word(&[Letter::new(0, false), Letter::new(1, false)]);
        let gs = GeneratingSet::new(&f2, vec![ab, Element::word(&[Letter::new(1, false)])]).unwrap();
        assert!(WordOracle::new(&f2, &gs, &Limits::default()).is_err());
    }

    fn catalog_oracles() -> impl Strategy<Value = (WordOracle, Element)> {
        prop_oneof![
            Just(Group::free(2)),
            Just(Group::lattice(3)),
            Just(Group::Heisenberg),
            Just(Group::symmetric(5)),
            Just(Group::cyclic(&[1, 4, 3])),
        ]
        .prop_flat_map(|g| {
            let o = oracle(&g, g.standard_generators());
            (Just(o), arb_element(g))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn words_evaluate_back((o, e) in catalog_oracles()) {
            let w = o.word(&e).unwrap();
            prop_assert_eq!(o.evaluate(&w), e);
        }
    }
}
