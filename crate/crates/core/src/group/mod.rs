//! Exact arithmetic for the catalog of finitely generated groups.

mod ball;
mod element;
mod free;
mod words;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

pub use ball::{ball, Ball};
pub use element::{Element, Letter, Word};
pub use free::{index_word, word_index};
pub use words::{WordOracle, WordStep};

use crate::{Error, Result};

/// A catalog group. The JSON form is `{"group":"F","rank":2}`,
/// `{"group":"Z","dim":2}`, `{"group":"H3Z"}`, `{"group":"Sym","n":5}` or
/// `{"group":"Cyclic","moduli":[2,3]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "group", deny_unknown_fields)]
pub enum Group {
    /// Free group on `rank` generators `a, b, c, …`.
    #[serde(rename = "F")]
    Free { rank: usize },
    /// Free abelian group `ℤᵈ`.
    #[serde(rename = "Z")]
    Lattice { dim: usize },
    /// Integer Heisenberg group with `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')`.
    #[serde(rename = "H3Z")]
    Heisenberg,
    /// Symmetric group on `{0, …, n-1}`.
    #[serde(rename = "Sym")]
    Symmetric { n: usize },
    /// `ℤ/m₁ × … × ℤ/mₖ`.
    #[serde(rename = "Cyclic")]
    Cyclic { moduli: Vec<u64> },
}

/// Loose element notation used in configuration files: a word string for
/// free groups (`"aB"`, `"e"` for the identity) or a list of integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Word(String),
    Ints(Vec<i64>),
}

impl Group {
    pub fn free(rank: usize) -> Self {
        Group::Free { rank }
    }

    pub fn lattice(dim: usize) -> Self {
        Group::Lattice { dim }
    }

    pub fn symmetric(n: usize) -> Self {
        Group::Symmetric { n }
    }

    pub fn cyclic(moduli: &[u64]) -> Self {
        Group::Cyclic {
            moduli: moduli.to_vec(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Group::Free { rank } => format!("F{rank}"),
            Group::Lattice { dim } => format!("Z^{dim}"),
            Group::Heisenberg => "H3(Z)".to_string(),
            Group::Symmetric { n } => format!("Sym({n})"),
            Group::Cyclic { moduli } => {
                let parts: Vec<String> = moduli.iter().map(|m| format!("Z/{m}")).collect();
                parts.join("x")
            }
        }
    }

    /// Checks the catalog parameters themselves.
    pub fn validate(&self) -> Result<()> {
        match self {
            Group::Free { rank } if *rank == 0 || *rank > Letter::MAX_GENERATORS => Err(Error::domain(
                format!("free group rank must be in 1..={}", Letter::MAX_GENERATORS),
            )),
            Group::Lattice { dim } if *dim == 0 => Err(Error::domain("Z^d needs dim >= 1")),
            Group::Symmetric { n } if *n == 0 => Err(Error::domain("Sym(n) needs n >= 1")),
            Group::Cyclic { moduli } if moduli.is_empty() || moduli.contains(&0) => {
                Err(Error::domain("cyclic moduli must be a nonempty list of positive integers"))
            }
            _ => Ok(()),
        }
    }

    pub fn identity(&self) -> Element {
        match self {
            Group::Free { .. } => Element::Word(Word::new()),
            Group::Lattice { dim } => Element::Vector(SmallVec::from_elem(0, *dim)),
            Group::Heisenberg => Element::Heisenberg([0; 3]),
            Group::Symmetric { n } => Element::Perm((0..*n as u32).collect()),
            Group::Cyclic { moduli } => Element::Residues(SmallVec::from_elem(0, moduli.len())),
        }
    }

    pub fn is_identity(&self, e: &Element) -> bool {
        *e == self.identity()
    }

    /// Number of elements for finite groups.
    pub fn order(&self) -> Option<u128> {
        match self {
            Group::Symmetric { n } => (1..=*n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k)),
            Group::Cyclic { moduli } => moduli.iter().try_fold(1u128, |acc, &m| acc.checked_mul(m as u128)),
            _ => None,
        }
    }

    /// Validates that `e` is a canonical element of this group.
    pub fn check(&self, e: &Element) -> Result<()> {
        let ok = match (self, e) {
            (Group::Free { rank }, Element::Word(w)) => {
                w.iter().all(|l| l.generator() < *rank) && w.windows(2).all(|p| p[1] != p[0].inverse())
            }
            (Group::Lattice { dim }, Element::Vector(v)) => v.len() == *dim,
            (Group::Heisenberg, Element::Heisenberg(_)) => true,
            (Group::Symmetric { n }, Element::Perm(p)) => p.len() == *n && is_bijection(p),
            (Group::Cyclic { moduli }, Element::Residues(r)) => {
                r.len() == moduli.len() && r.iter().zip(moduli).all(|(x, m)| x < m)
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("element {e} is not a canonical element of {}", self.name())))
        }
    }

    /// Brings a payload of the right shape into canonical form: free reduction
    /// of words and reduction of residues. Permutations are only validated.
    pub fn canonical(&self, e: &Element) -> Result<Element> {
        match (self, e) {
            (Group::Free { rank }, Element::Word(w)) => {
                if let Some(l) = w.iter().find(|l| l.generator() >= *rank) {
                    return Err(Error::domain(format!("letter {} outside F{rank}", l.to_char())));
                }
                let mut out = Word::new();
                for &l in w {
                    push_reduced(&mut out, l);
                }
                Ok(Element::Word(out))
            }
            (Group::Cyclic { moduli }, Element::Residues(r)) if r.len() == moduli.len() => Ok(Element::Residues(
                r.iter().zip(moduli).map(|(x, m)| x % m).collect(),
            )),
            _ => {
                self.check(e)?;
                Ok(e.clone())
            }
        }
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        if let Group::Heisenberg = self {
            let (Element::Heisenberg(x), Element::Heisenberg(y)) = (a, b) else { unreachable!() };
            let c = x[0]
                .checked_mul(y[1])
                .and_then(|ab| ab.checked_add(x[2]))
                .and_then(|s| s.checked_add(y[2]));
            let (Some(c), Some(p), Some(q)) = (c, x[0].checked_add(y[0]), x[1].checked_add(y[1])) else {
                return Err(Error::domain("Heisenberg product overflows i64"));
            };
            return Ok(Element::Heisenberg([p, q, c]));
        }
        Ok(self.mul_unchecked(a, b))
    }

    /// Product of two elements already known to belong to this group.
    pub fn mul_unchecked(&self, a: &Element, b: &Element) -> Element {
        match (self, a, b) {
            (Group::Free { .. }, Element::Word(x), Element::Word(y)) => {
                let mut out = x.clone();
                for &l in y {
                    push_reduced(&mut out, l);
                }
                Element::Word(out)
            }
            (Group::Lattice { .. }, Element::Vector(x), Element::Vector(y)) => {
                Element::Vector(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (Group::Heisenberg, Element::Heisenberg(x), Element::Heisenberg(y)) => {
                Element::Heisenberg([x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]])
            }
            (Group::Symmetric { .. }, Element::Perm(p), Element::Perm(q)) => {
                // (pq)(i) = p(q(i))
                Element::Perm(q.iter().map(|&i| p[i as usize]).collect())
            }
            (Group::Cyclic { moduli }, Element::Residues(x), Element::Residues(y)) => Element::Residues(
                x.iter().zip(y).zip(moduli).map(|((p, q), m)| (p + q) % m).collect(),
            ),
            _ => panic!("mul_unchecked: {a} and {b} are not both elements of {}", self.name()),
        }
    }

    pub fn inv(&self, a: &Element) -> Result<Element> {
        self.check(a)?;
        Ok(self.inv_unchecked(a))
    }

    pub fn inv_unchecked(&self, a: &Element) -> Element {
        match (self, a) {
            (Group::Free { .. }, Element::Word(w)) => Element::Word(w.iter().rev().map(|l| l.inverse()).collect()),
            (Group::Lattice { .. }, Element::Vector(v)) => Element::Vector(v.iter().map(|x| -x).collect()),
            (Group::Heisenberg, Element::Heisenberg([a, b, c])) => Element::Heisenberg([-a, -b, a * b - c]),
            (Group::Symmetric { .. }, Element::Perm(p)) => {
                let mut q: SmallVec<[u32; 8]> = SmallVec::from_elem(0, p.len());
                for (i, &pi) in p.iter().enumerate() {
                    q[pi as usize] = i as u32;
                }
                Element::Perm(q)
            }
            (Group::Cyclic { moduli }, Element::Residues(r)) => {
                Element::Residues(r.iter().zip(moduli).map(|(x, m)| (m - x) % m).collect())
            }
            _ => panic!("inv_unchecked: {a} is not an element of {}", self.name()),
        }
    }

    /// Standard generators: free letters, unit vectors, `x=(1,0,0)` and
    /// `y=(0,1,0)` for the Heisenberg group, adjacent transpositions for
    /// `Sym(n)` and unit residues for cyclic products (trivial factors
    /// skipped).
    pub fn standard_generators(&self) -> Vec<Element> {
        match self {
            Group::Free { rank } => (0..*rank).map(|i| Element::word(&[Letter::new(i, false)])).collect(),
            Group::Lattice { dim } => (0..*dim)
                .map(|i| {
                    let mut v = vec![0; *dim];
                    v[i] = 1;
                    Element::vector(&v)
                })
                .collect(),
            Group::Heisenberg => vec![Element::Heisenberg([1, 0, 0]), Element::Heisenberg([0, 1, 0])],
            Group::Symmetric { n } => (0..n.saturating_sub(1)).map(|i| transposition(*n, i, i + 1)).collect(),
            Group::Cyclic { moduli } => (0..moduli.len())
                .filter(|&i| moduli[i] > 1)
                .map(|i| {
                    let mut r = vec![0; moduli.len()];
                    r[i] = 1;
                    Element::residues(&r)
                })
                .collect(),
        }
    }

    /// All elements of a finite group in ascending payload order.
    pub fn elements(&self, limits: &crate::Limits) -> Result<Vec<Element>> {
        let order = self
            .order()
            .ok_or_else(|| Error::domain(format!("{} is infinite", self.name())))?;
        if order > limits.ball_cap as u128 {
            return Err(Error::resource(format!("enumerating {}", self.name()), limits.ball_cap));
        }
        let mut out = match self {
            Group::Symmetric { n } => {
                let mut all = Vec::with_capacity(order as usize);
                let mut p: Vec<u32> = (0..*n as u32).collect();
                loop {
                    all.push(Element::perm(&p));
                    if !next_permutation(&mut p) {
                        break;
                    }
                }
                all
            }
            Group::Cyclic { moduli } => {
                let mut all = vec![Element::Residues(SmallVec::new())];
                for &m in moduli {
                    all = all
                        .into_iter()
                        .flat_map(|e| {
                            (0..m).map(move |x| {
                                let Element::Residues(mut r) = e.clone() else { unreachable!() };
                                r.push(x);
                                Element::Residues(r)
                            })
                        })
                        .collect();
                }
                all
            }
            _ => unreachable!(),
        };
        out.sort();
        Ok(out)
    }

    /// Parses configuration notation into a canonical element.
    pub fn parse(&self, spec: &ElementSpec) -> Result<Element> {
        let raw = match (self, spec) {
            (Group::Free { .. }, ElementSpec::Word(s)) => {
                if s == "e" || s.is_empty() {
                    Element::Word(Word::new())
                } else {
                    let letters: Option<Word> = s.chars().map(Letter::from_char).collect();
                    Element::Word(letters.ok_or_else(|| Error::domain(format!("bad word {s:?}")))?)
                }
            }
            (Group::Lattice { .. }, ElementSpec::Ints(v)) => Element::vector(v),
            (Group::Heisenberg, ElementSpec::Ints(v)) if v.len() == 3 => Element::Heisenberg([v[0], v[1], v[2]]),
            (Group::Symmetric { .. }, ElementSpec::Ints(v)) => {
                if v.iter().any(|&x| x < 0 || x > u32::MAX as i64) {
                    return Err(Error::domain(format!("bad permutation {v:?}")));
                }
                Element::Perm(v.iter().map(|&x| x as u32).collect())
            }
            (Group::Cyclic { .. }, ElementSpec::Ints(v)) => {
                if v.iter().any(|&x| x < 0) {
                    return Err(Error::domain(format!("negative residue in {v:?}")));
                }
                Element::Residues(v.iter().map(|&x| x as u64).collect())
            }
            _ => return Err(Error::domain(format!("{spec:?} is not an element of {}", self.name()))),
        };
        self.canonical(&raw)
    }
}

fn push_reduced(w: &mut Word, l: Letter) {
    if w.last() == Some(&l.inverse()) {
        w.pop();
    } else {
        w.push(l);
    }
}

fn is_bijection(p: &[u32]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&i| {
        let i = i as usize;
        i < seen.len() && !std::mem::replace(&mut seen[i], true)
    })
}

pub fn transposition(n: usize, i: usize, j: usize) -> Element {
    let mut p: Vec<u32> = (0..n as u32).collect();
    p.swap(i, j);
    Element::perm(&p)
}

fn next_permutation(p: &mut [u32]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// A finite generating set, validated against its group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratingSet {
    generators: Vec<Element>,
    symmetric: bool,
}

impl GeneratingSet {
    pub fn new(group: &Group, generators: Vec<Element>) -> Result<Self> {
        group.validate()?;
        if generators.is_empty() {
            return Err(Error::domain("generating set must be nonempty"));
        }
        for (i, g) in generators.iter().enumerate() {
            group.check(g)?;
            if group.is_identity(g) {
                return Err(Error::domain("the identity cannot be a generator"));
            }
            if generators[..i].contains(g) {
                return Err(Error::domain(format!("duplicate generator {g}")));
            }
        }
        let symmetric = generators
            .iter()
            .all(|g| generators.contains(&group.inv_unchecked(g)));
        Ok(GeneratingSet { generators, symmetric })
    }

    pub fn standard(group: &Group) -> Result<Self> {
        Self::new(group, group.standard_generators())
    }

    pub fn generators(&self) -> &[Element] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// The set together with all inverses, originals first.
    pub fn symmetric_closure(&self, group: &Group) -> GeneratingSet {
        let mut gens = self.generators.clone();
        for g in &self.generators {
            let gi = group.inv_unchecked(g);
            if !gens.contains(&gi) {
                gens.push(gi);
            }
        }
        GeneratingSet {
            generators: gens,
            symmetric: true,
        }
    }
}
