//! Enumeration of tight level rankings.

/// Marker for states outside the domain of a ranking.
pub const NONE: u8 = u8::MAX;

/// Restrictions on the rankings used when entering the second phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entry {
    /// All tight rankings, optionally only odd values, optionally with the
    /// pinned state carrying the maximal rank (uniquely unless `ties`).
    General { odd_only: bool, pin: Option<usize>, ties: bool },
    /// Pinned state 1, all others 0.
    Reachability { pin: usize },
    /// Every state ranked 1.
    Safety,
}

/// Tight rankings of the states in `domain` (ascending state ids), as dense
/// vectors of length `n` with [`NONE`] outside the domain. Ordered by rank,
/// then lexicographically by the values in state-id order.
pub fn tight_rankings(domain: &[usize], n: usize, entry: Entry) -> Vec<Box<[u8]>> {
    let k = domain.len();
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let dense = |vals: &[u8]| {
        let mut f = vec![NONE; n].into_boxed_slice();
        for (&q, &v) in domain.iter().zip(vals) {
            f[q] = v;
        }
        f
    };
    match entry {
        Entry::Safety => out.push(dense(&vec![1; k])),
        Entry::Reachability { pin } => {
            if let Some(p) = domain.iter().position(|&q| q == pin) {
                let mut vals = vec![0; k];
                vals[p] = 1;
                out.push(dense(&vals));
            }
        }
        Entry::General { odd_only, pin, ties } => {
            let pin_pos = match pin {
                Some(p) => match domain.iter().position(|&q| q == p) {
                    Some(pos) => Some(pos),
                    None => return out,
                },
                None => None,
            };
            let mut vals = vec![0u8; k];
            for m in 1..=k {
                let rank = (2 * m - 1) as u8;
                let spec = Spec { rank, odd_only, pin: pin_pos, ties, k };
                spec.fill(0, &mut vals, &mut |v| out.push(dense(v)));
            }
        }
    }
    out
}

struct Spec {
    rank: u8,
    odd_only: bool,
    pin: Option<usize>,
    ties: bool,
    k: usize,
}

impl Spec {
    fn fill(&self, pos: usize, vals: &mut [u8], emit: &mut impl FnMut(&[u8])) {
        let odd_count = (self.rank as usize).div_ceil(2);
        let covered = |vals: &[u8]| {
            let mut seen = 0u128;
            for &v in vals {
                seen |= 1 << v;
            }
            (0..odd_count).filter(|&j| seen >> (2 * j + 1) & 1 == 0).count()
        };
        if pos == self.k {
            if covered(vals) == 0 {
                emit(vals);
            }
            return;
        }
        if covered(&vals[..pos]) > self.k - pos {
            return;
        }
        let (lo, hi) = if Some(pos) == self.pin {
            (self.rank, self.rank)
        } else if self.pin.is_some() && !self.ties {
            (0, self.rank - 1)
        } else {
            (0, self.rank)
        };
        for v in lo..=hi {
            if self.odd_only && v % 2 == 0 {
                continue;
            }
            vals[pos] = v;
            self.fill(pos + 1, vals, emit);
        }
    }
}

/// True iff `f` restricted to `domain` is tight.
pub fn is_tight(f: &[u8], domain: u64) -> bool {
    let mut seen = 0u128;
    let mut max = 0u8;
    for q in bits(domain) {
        let v = f[q];
        seen |= 1 << v;
        max = max.max(v);
    }
    if domain == 0 {
        return true;
    }
    if max % 2 == 0 {
        return false;
    }
    (1..=max).step_by(2).all(|v| seen >> v & 1 == 1)
}

/// Indices of the set bits of `mask`, ascending.
pub fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(k: usize, odd_only: bool) -> usize {
        let domain: Vec<usize> = (0..k).collect();
        tight_rankings(&domain, k, Entry::General { odd_only, pin: None, ties: true }).len()
    }

    #[test]
    fn odd_rankings_are_ordered_set_partitions() {
        // Fubini numbers
        assert_eq!(count(1, true), 1);
        assert_eq!(count(2, true), 3);
        assert_eq!(count(3, true), 13);
        assert_eq!(count(4, true), 75);
    }

    #[test]
    fn all_rankings_are_tight_and_sorted() {
        let domain = vec![0, 2, 3];
        let rs = tight_rankings(&domain, 4, Entry::General { odd_only: false, pin: None, ties: true });
        let mask = 0b1101;
        assert!(rs.iter().all(|f| is_tight(f, mask) && f[1] == NONE));
        let keys: Vec<(u8, Vec<u8>)> =
            rs.iter().map(|f| (*f.iter().filter(|&&v| v != NONE).max().unwrap(), f.to_vec())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        // brute force over {0..5}^3
        let mut brute = 0;
        for a in 0..6u8 {
            for b in 0..6u8 {
                for c in 0..6u8 {
                    if is_tight(&[a, 0, b, c], mask) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(rs.len(), brute);
    }

    #[test]
    fn pinning_keeps_the_pinned_state_on_top() {
        let domain = vec![0, 1, 2];
        for ties in [false, true] {
            let rs = tight_rankings(&domain, 3, Entry::General { odd_only: false, pin: Some(2), ties });
            assert!(!rs.is_empty());
            for f in rs {
                let r = f[2];
                assert!(f[0] <= r && f[1] <= r);
                if !ties {
                    assert!(f[0] < r && f[1] < r);
                }
            }
        }
    }

    #[test]
    fn universal_single_state_enters_with_rank_one() {
        let rs = tight_rankings(&[0], 1, Entry::General { odd_only: true, pin: None, ties: true });
        assert_eq!(rs, vec![vec![1u8].into_boxed_slice()]);
    }
}
