use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A letter is a bit pattern over the atomic propositions: bit `i` is set
/// iff proposition `i` holds.
pub type Letter = u32;

/// Default cap on the number of explicit letters an alphabet may have.
pub const DEFAULT_LETTER_CAP: u64 = 1 << 16;

/// How promises are attached to letters of a promise alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromiseMode {
    /// Every letter carries exactly one schema state.
    Single,
    /// Every letter carries at most one schema state; code 0 is the trivial promise.
    AtMostOne,
    /// Every letter carries a set of schema states (bit mask, empty = trivial).
    Sets,
}

impl PromiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PromiseMode::Single => "single",
            PromiseMode::AtMostOne => "at-most-one",
            PromiseMode::Sets => "sets",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single" => Some(PromiseMode::Single),
            "at-most-one" => Some(PromiseMode::AtMostOne),
            "sets" => Some(PromiseMode::Sets),
            _ => None,
        }
    }
}

/// The promise component of a letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Promise {
    Top,
    State(u32),
    Set(u64),
}

/// Layout of the promise component appended to the base propositions.
///
/// The promise code occupies the auxiliary propositions `_p0, _p1, ...`
/// above the base propositions, least significant bit first:
/// * `Single`: code = schema state id;
/// * `AtMostOne`: code 0 = trivial promise, code k = schema state k-1;
/// * `Sets`: code = bit mask of promised schema states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PromiseLayout {
    pub mode: PromiseMode,
    pub count: usize,
}

impl PromiseLayout {
    pub fn code_count(&self) -> u64 {
        match self.mode {
            PromiseMode::Single => self.count as u64,
            PromiseMode::AtMostOne => self.count as u64 + 1,
            PromiseMode::Sets => 1u64 << self.count,
        }
    }

    pub fn bits(&self) -> usize {
        match self.mode {
            PromiseMode::Sets => self.count,
            _ => {
                let codes = self.code_count();
                if codes <= 1 {
                    0
                } else {
                    (64 - (codes - 1).leading_zeros()) as usize
                }
            }
        }
    }

    pub fn decode(&self, code: u32) -> Option<Promise> {
        if code as u64 >= self.code_count() {
            return None;
        }
        Some(match self.mode {
            PromiseMode::Single => Promise::State(code),
            PromiseMode::AtMostOne if code == 0 => Promise::Top,
            PromiseMode::AtMostOne => Promise::State(code - 1),
            PromiseMode::Sets if code == 0 => Promise::Top,
            PromiseMode::Sets => Promise::Set(code as u64),
        })
    }

    pub fn encode(&self, promise: Promise) -> Option<u32> {
        match (self.mode, promise) {
            (PromiseMode::Single, Promise::State(q)) if (q as usize) < self.count => Some(q),
            (PromiseMode::AtMostOne, Promise::Top) => Some(0),
            (PromiseMode::AtMostOne, Promise::State(q)) if (q as usize) < self.count => Some(q + 1),
            (PromiseMode::Sets, Promise::Top) => Some(0),
            (PromiseMode::Sets, Promise::State(q)) if (q as usize) < self.count => Some(1 << q),
            (PromiseMode::Sets, Promise::Set(m)) if m >> self.count == 0 => Some(m as u32),
            _ => None,
        }
    }
}

/// An alphabet `2^AP`, optionally extended by a promise component.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    aps: Vec<String>,
    base: usize,
    promise: Option<PromiseLayout>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(aps: impl IntoIterator<Item = S>) -> Result<Self> {
        let aps: Vec<String> = aps.into_iter().map(Into::into).collect();
        check_cap(aps.len(), DEFAULT_LETTER_CAP)?;
        let base = aps.len();
        Ok(Alphabet { aps, base, promise: None })
    }

    /// Anonymous propositions `p0, p1, ...`.
    pub fn with_ap_count(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("p{i}")))
    }

    /// The alphabet `2^AP × promises` for a schema with `count` states.
    pub fn with_promises(base: &Alphabet, mode: PromiseMode, count: usize) -> Result<Self> {
        if base.promise.is_some() {
            return Err(Error::AlphabetMismatch("base alphabet already carries promises".into()));
        }
        if mode == PromiseMode::Sets && count > 16 {
            return Err(Error::AlphabetTooLarge { letters: 1u64 << count.min(63), cap: DEFAULT_LETTER_CAP });
        }
        let layout = PromiseLayout { mode, count };
        let mut aps = base.aps.clone();
        aps.extend((0..layout.bits()).map(|i| format!("_p{i}")));
        check_cap(aps.len(), DEFAULT_LETTER_CAP)?;
        Ok(Alphabet { aps, base: base.base, promise: Some(layout) })
    }

    /// Reinterprets an alphabet whose trailing propositions encode promises.
    pub fn from_parts(aps: Vec<String>, base: usize, promise: Option<PromiseLayout>) -> Result<Self> {
        check_cap(aps.len(), DEFAULT_LETTER_CAP)?;
        if let Some(layout) = promise {
            if base + layout.bits() != aps.len() {
                return Err(Error::AlphabetMismatch(format!(
                    "{} propositions cannot hold {} base propositions and {} promise bits",
                    aps.len(),
                    base,
                    layout.bits()
                )));
            }
        } else if base != aps.len() {
            return Err(Error::AlphabetMismatch("base width differs from proposition count".into()));
        }
        Ok(Alphabet { aps, base, promise })
    }

    pub fn aps(&self) -> &[String] {
        &self.aps
    }

    pub fn num_aps(&self) -> usize {
        self.aps.len()
    }

    pub fn base_aps(&self) -> usize {
        self.base
    }

    pub fn promise_layout(&self) -> Option<PromiseLayout> {
        self.promise
    }

    /// The alphabet with the promise component dropped.
    pub fn base_alphabet(&self) -> Alphabet {
        Alphabet { aps: self.aps[..self.base].to_vec(), base: self.base, promise: None }
    }

    /// Number of bit patterns (including invalid promise codes).
    pub fn raw_size(&self) -> usize {
        1usize << self.aps.len()
    }

    pub fn is_valid(&self, letter: Letter) -> bool {
        if (letter as usize) >= self.raw_size() {
            return false;
        }
        match self.promise {
            None => true,
            Some(layout) => (letter >> self.base) < layout.code_count() as u32,
        }
    }

    /// All valid letters in increasing order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.raw_size() as Letter).filter(move |&l| self.is_valid(l))
    }

    pub fn num_letters(&self) -> usize {
        match self.promise {
            None => self.raw_size(),
            Some(layout) => (1usize << self.base) * layout.code_count() as usize,
        }
    }

    pub fn base_letter(&self, letter: Letter) -> Letter {
        letter & ((1 << self.base) - 1)
    }

    pub fn promise_of(&self, letter: Letter) -> Option<Promise> {
        self.promise.and_then(|layout| layout.decode(letter >> self.base))
    }

    pub fn promise_letter(&self, base_letter: Letter, promise: Promise) -> Option<Letter> {
        let layout = self.promise?;
        let code = layout.encode(promise)?;
        Some(base_letter | (code << self.base))
    }

    /// Letter with exactly the named propositions set.
    pub fn letter_of(&self, props: &[&str]) -> Result<Letter> {
        let mut letter = 0;
        for p in props {
            let i = self
                .aps
                .iter()
                .position(|a| a == p)
                .ok_or_else(|| Error::AlphabetMismatch(format!("unknown proposition {p}")))?;
            letter |= 1 << i;
        }
        Ok(letter)
    }

    /// Human-readable form such as `{a,c}`.
    pub fn format_letter(&self, letter: Letter) -> String {
        let names: Vec<&str> = (0..self.base)
            .filter(|i| letter >> i & 1 == 1)
            .map(|i| self.aps[i].as_str())
            .collect();
        let base = format!("{{{}}}", names.join(","));
        match self.promise_of(letter) {
            None if self.promise.is_none() => base,
            None => format!("{base}/?"),
            Some(Promise::Top) => format!("{base}/T"),
            Some(Promise::State(q)) => format!("{base}/q{q}"),
            Some(Promise::Set(m)) => format!("{base}/S{m:b}"),
        }
    }

    pub fn same_letters(&self, other: &Alphabet) -> bool {
        self.aps == other.aps && self.promise == other.promise
    }
}

fn check_cap(aps: usize, cap: u64) -> Result<()> {
    if aps >= 63 || (1u64 << aps) > cap {
        return Err(Error::AlphabetTooLarge { letters: 1u64 << aps.min(63), cap });
    }
    Ok(())
}
