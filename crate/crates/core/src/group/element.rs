use std::fmt;

use smallvec::SmallVec;

/// A signed free generator. The encoding `2·generator + inverse` makes the
/// derived order `a < a⁻¹ < b < b⁻¹ < …`, which is the letter order used for
/// every length-lex enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u8);

impl Letter {
    pub const MAX_GENERATORS: usize = 26;

    pub fn new(generator: usize, inverse: bool) -> Self {
        assert!(generator < Self::MAX_GENERATORS, "free generator {generator} out of range");
        Letter((2 * generator + inverse as usize) as u8)
    }

    pub fn from_code(code: usize) -> Self {
        Letter(code as u8)
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    pub fn to_char(self) -> char {
        let c = (b'a' + self.generator() as u8) as char;
        if self.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        if c.is_ascii_lowercase() {
            Some(Letter::new((c as u8 - b'a') as usize, false))
        } else if c.is_ascii_uppercase() {
            Some(Letter::new((c as u8 - b'A') as usize, true))
        } else {
            None
        }
    }
}

pub type Word = SmallVec<[Letter; 24]>;

/// Canonical payload of a group element.
///
/// Equality of elements is equality of payloads; the owning [`Group`]
/// guarantees canonicity (`Group::canonical`).
///
/// [`Group`]: super::Group
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    /// Freely reduced word (free groups).
    Word(Word),
    /// Integer vector (`ℤᵈ`).
    Vector(SmallVec<[i64; 4]>),
    /// Triple `(a, b, c)` of the integer Heisenberg group.
    Heisenberg([i64; 3]),
    /// Permutation in one-line notation: `p[i]` is the image of `i`.
    Perm(SmallVec<[u32; 8]>),
    /// Residue vector for a product of cyclic groups.
    Residues(SmallVec<[u64; 4]>),
}

impl Element {
    pub fn word(letters: &[Letter]) -> Self {
        Element::Word(letters.iter().copied().collect())
    }

    pub fn vector(v: &[i64]) -> Self {
        Element::Vector(v.iter().copied().collect())
    }

    pub fn perm(p: &[u32]) -> Self {
        Element::Perm(p.iter().copied().collect())
    }

    pub fn residues(r: &[u64]) -> Self {
        Element::Residues(r.iter().copied().collect())
    }

    pub fn as_word(&self) -> Option<&[Letter]> {
        match self {
            Element::Word(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, open: &str, xs: &[T], close: &str) -> fmt::Result {
            f.write_str(open)?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(close)
        }
        match self {
            Element::Word(w) if w.is_empty() => f.write_str("e"),
            Element::Word(w) => w.iter().try_for_each(|l| write!(f, "{}", l.to_char())),
            Element::Vector(v) => join(f, "(", v, ")"),
            Element::Heisenberg(t) => join(f, "(", t, ")"),
            Element::Perm(p) => join(f, "[", p, "]"),
            Element::Residues(r) => join(f, "(", r, ")"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letter_order_is_a_then_inverse_then_b() {
        let a = Letter::new(0, false);
        let ai = Letter::new(0, true);
        let b = Letter::new(1, false);
        assert!(a < ai && ai < b);
        assert_eq!(a.inverse(), ai);
        assert_eq!(ai.to_char(), 'A');
        assert_eq!(Letter::from_char('B'), Some(Letter::new(1, true)));
    }

    #[test]
    fn display() {
        assert_eq!(Element::word(&[]).to_string(), "e");
        let w = Element::word(&[Letter::new(0, false), Letter::new(1, true)]);
        assert_eq!(w.to_string(), "aB");
        assert_eq!(Element::vector(&[1, -2]).to_string(), "(1,-2)");
        assert_eq!(Element::perm(&[1, 0, 2]).to_string(), "[1,0,2]");
    }
}
