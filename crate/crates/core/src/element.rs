//! Canonical group elements.
//!
//! Every element is stored in a canonical form, so equality, ordering and
//! hashing all act on the payload directly.

use std::fmt;

/// A reduced word over the alphabet `±1..=rank`; `k` stands for the `k`-th
/// generator and `-k` for its inverse. No letter is ever adjacent to its
/// inverse.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<i8>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Builds a word from raw letters, freely reducing it.
    pub fn from_letters<I: IntoIterator<Item = i8>>(letters: I) -> Self {
        let mut w = Word::identity();
        for l in letters {
            w.push(l);
        }
        w
    }

    /// Appends a letter, cancelling against the last one when they are inverse.
    pub fn push(&mut self, letter: i8) {
        debug_assert!(letter != 0);
        if self.0.last() == Some(&-letter) {
            self.0.pop();
        } else {
            self.0.push(letter);
        }
    }

    pub fn letters(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != -p[1]) && !self.0.contains(&0)
    }

    pub fn concat(&self, other: &Word) -> Word {
        // Cancel the overlap first so the result stays reduced.
        let mut k = 0;
        let (a, b) = (&self.0, &other.0);
        while k < a.len() && k < b.len() && a[a.len() - 1 - k] == -b[k] {
            k += 1;
        }
        let mut out = Vec::with_capacity(a.len() + b.len() - 2 * k);
        out.extend_from_slice(&a[..a.len() - k]);
        out.extend_from_slice(&b[k..]);
        Word(out)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Prefix of length `k` (clamped).
    pub fn prefix(&self, k: usize) -> Word {
        Word(self.0[..k.min(self.0.len())].to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for &l in &self.0 {
            let c = (b'a' + (l.unsigned_abs() - 1)) as char;
            if l > 0 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}^-1")?;
            }
        }
        Ok(())
    }
}

/// An element of one of the supported group families.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    /// Reduced word in a free group.
    Free(Word),
    /// Index into the multiplication table of a finite group.
    Finite(u32),
    /// Element of a direct product, one component per factor.
    Pair(Box<Element>, Box<Element>),
}

impl Element {
    pub fn pair(left: Element, right: Element) -> Self {
        Element::Pair(Box::new(left), Box::new(right))
    }

    pub fn word<I: IntoIterator<Item = i8>>(letters: I) -> Self {
        Element::Free(Word::from_letters(letters))
    }

    pub fn components(&self) -> Option<(&Element, &Element)> {
        match self {
            Element::Pair(l, r) => Some((l, r)),
            _ => None,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Free(w) => write!(f, "{w}"),
            Element::Finite(i) => write!(f, "#{i}"),
            Element::Pair(l, r) => write!(f, "({l},{r})"),
        }
    }
}
