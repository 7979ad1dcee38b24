use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One post component an adversary can exploit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modality {
    Hashtag,
    Text,
    Image,
    Location,
    Network,
}

impl Modality {
    /// Canonical order H, T, I, L, E.
    pub const ALL: [Modality; 5] = [
        Modality::Hashtag,
        Modality::Text,
        Modality::Image,
        Modality::Location,
        Modality::Network,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Modality::Hashtag => 'H',
            Modality::Text => 'T',
            Modality::Image => 'I',
            Modality::Location => 'L',
            Modality::Network => 'E',
        }
    }

    pub fn from_letter(c: char) -> Option<Modality> {
        Modality::ALL
            .into_iter()
            .find(|m| m.letter() == c.to_ascii_uppercase())
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Hashtag => "hashtag",
            Modality::Text => "text",
            Modality::Image => "image",
            Modality::Location => "location",
            Modality::Network => "network",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of modalities packed into five bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModalitySet(u8);

impl ModalitySet {
    pub const EMPTY: ModalitySet = ModalitySet(0);
    pub const FULL: ModalitySet = ModalitySet(0b1_1111);

    pub fn single(m: Modality) -> Self {
        ModalitySet(1 << m.index())
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Self {
        ModalitySet(bits & Self::FULL.0)
    }

    pub fn contains(self, m: Modality) -> bool {
        self.0 & (1 << m.index()) != 0
    }

    pub fn insert(&mut self, m: Modality) {
        self.0 |= 1 << m.index();
    }

    pub fn remove(&mut self, m: Modality) {
        self.0 &= !(1 << m.index());
    }

    pub fn with(mut self, m: Modality) -> Self {
        self.insert(m);
        self
    }

    pub fn intersection(self, other: ModalitySet) -> Self {
        ModalitySet(self.0 & other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Modality> {
        Modality::ALL.into_iter().filter(move |&m| self.contains(m))
    }
}

impl FromIterator<Modality> for ModalitySet {
    fn from_iter<I: IntoIterator<Item = Modality>>(iter: I) -> Self {
        let mut s = ModalitySet::EMPTY;
        for m in iter {
            s.insert(m);
        }
        s
    }
}

impl fmt::Display for ModalitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in self.iter() {
            write!(f, "{}", m.letter())?;
        }
        Ok(())
    }
}

impl FromStr for ModalitySet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(ModalitySet::FULL);
        }
        let mut set = ModalitySet::EMPTY;
        for c in s.chars().filter(|c| !matches!(c, ',' | ' ' | '{' | '}')) {
            let m = Modality::from_letter(c)
                .ok_or_else(|| Error::Config(format!("unknown modality letter {c:?} in {s:?}")))?;
            set.insert(m);
        }
        if set.is_empty() {
            return Err(Error::Config(format!("empty modality set {s:?}")));
        }
        Ok(set)
    }
}
