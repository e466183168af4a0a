//! Length-lex bijection between a free group and the natural numbers.
//!
//! Words are ordered by length, then lexicographically in the letter order
//! `a < a⁻¹ < b < b⁻¹ < …`. Within a fixed length the rank of a word is a
//! mixed-radix number: the first letter has `2k` choices, every later letter
//! `2k − 1` (anything but the inverse of its predecessor).

use super::{Letter, Word};
use crate::{Error, Result};

fn words_of_length(rank: usize, n: usize) -> Option<u128> {
    if n == 0 {
        return Some(1);
    }
    let k = 2 * rank as u128;
    (1..n).try_fold(k, |acc, _| acc.checked_mul(k - 1))
}

pub fn word_index(word: &[Letter], rank: usize) -> Result<u128> {
    let overflow = || Error::domain(format!("word of length {} has no u128 index", word.len()));
    let mut offset: u128 = 0;
    for n in 0..word.len() {
        offset = offset
            .checked_add(words_of_length(rank, n).ok_or_else(overflow)?)
            .ok_or_else(overflow)?;
    }
    let mut rank_in_length: u128 = 0;
    let mut prev: Option<Letter> = None;
    for &l in word {
        if l.generator() >= rank {
            return Err(Error::domain(format!("letter {} outside F{rank}", l.to_char())));
        }
        let (digit, base) = match prev {
            None => (l.code(), 2 * rank),
            Some(p) => {
                let forbidden = p.inverse().code();
                if l.code() == forbidden {
                    return Err(Error::domain("word is not reduced"));
                }
                (l.code() - (l.code() > forbidden) as usize, 2 * rank - 1)
            }
        };
        rank_in_length = rank_in_length
            .checked_mul(base as u128)
            .and_then(|x| x.checked_add(digit as u128))
            .ok_or_else(overflow)?;
        prev = Some(l);
    }
    offset.checked_add(rank_in_length).ok_or_else(overflow)
}

pub fn index_word(mut index: u128, rank: usize) -> Word {
    let mut n = 0;
    loop {
        // lengths beyond u128 range are unreachable from a u128 index
        let count = words_of_length(rank, n).unwrap_or(u128::MAX);
        if index < count {
            break;
        }
        index -= count;
        n += 1;
    }
    let mut digits = vec![0usize; n];
    for i in (0..n).rev() {
        let base = if i == 0 { 2 * rank } else { 2 * rank - 1 } as u128;
        digits[i] = (index % base) as usize;
        index /= base;
    }
    let mut word = Word::new();
    for (i, &d) in digits.iter().enumerate() {
        let code = if i == 0 {
            d
        } else {
            let forbidden = word[i - 1].inverse().code();
            if d >= forbidden {
                d + 1
            } else {
                d
            }
        };
        word.push(Letter::from_code(code));
    }
    word
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{ball, Element, GeneratingSet, Group};
    use crate::Limits;
    use proptest::prelude::*;

    #[test]
    fn identity_is_zero() {
        assert_eq!(word_index(&[], 2).unwrap(), 0);
        assert!(index_word(0, 2).is_empty());
    }

    #[test]
    fn indices_follow_ball_order() {
        let g = Group::free(2);
        let s = GeneratingSet::standard(&g).unwrap();
        let b = ball(&g, &s, 4, &Limits::default()).unwrap();
        for (i, e) in b.elements().iter().enumerate() {
            let w = e.as_word().unwrap();
            assert_eq!(word_index(w, 2).unwrap(), i as u128);
            assert_eq!(Element::word(&index_word(i as u128, 2)), *e);
        }
    }

    #[test]
    fn unreduced_words_are_rejected() {
        let a = Letter::new(0, false);
        assert!(word_index(&[a, a.inverse()], 2).is_err());
        assert!(word_index(&[Letter::new(2, false)], 2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip(ls in prop::collection::vec((0usize..2, any::<bool>()), 0..30)) {
            let g = Group::free(2);
            let raw = Element::Word(ls.into_iter().map(|(x, i)| Letter::new(x, i)).collect());
            let w = g.canonical(&raw).unwrap();
            let idx = word_index(w.as_word().unwrap(), 2).unwrap();
            prop_assert_eq!(Element::word(&index_word(idx, 2)), w);
        }

        #[test]
        fn index_round_trip_rank3(idx in 0u128..1_000_000_000) {
            let w = index_word(idx, 3);
            prop_assert_eq!(word_index(&w, 3).unwrap(), idx);
        }
    }
}
