use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest |l| used anywhere in the protocol.
pub const MAX_OAM: i32 = 4;

/// The nine OAM numbers carried through every simulated channel.
pub const ALL_MODES: [i32; 9] = [-4, -3, -2, -1, 0, 1, 2, 3, 4];

/// Ordered set of OAM numbers forming the protocol alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct EncodingSubspace {
    ls: Vec<i32>,
}

impl EncodingSubspace {
    /// Sorts `ls` ascending; rejects duplicates, |l| > 4 and sizes outside 2..=9.
    pub fn new(mut ls: Vec<i32>) -> Result<Self> {
        ls.sort_unstable();
        if !(2..=9).contains(&ls.len()) {
            return Err(Error::UnsupportedDimension(ls.len()));
        }
        if ls.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("duplicate OAM numbers in {ls:?}")));
        }
        if ls.iter().any(|l| l.abs() > MAX_OAM) {
            return Err(Error::InvalidParameter(format!("OAM numbers {ls:?} exceed |l| = {MAX_OAM}")));
        }
        Ok(Self { ls })
    }

    /// All nine modes, the layout of stored crosstalk records.
    pub fn full() -> Self {
        Self { ls: ALL_MODES.to_vec() }
    }

    pub fn d(&self) -> usize {
        self.ls.len()
    }

    pub fn ls(&self) -> &[i32] {
        &self.ls
    }

    pub fn max_abs_l(&self) -> i32 {
        self.ls.iter().map(|l| l.abs()).max().unwrap_or(0)
    }

    pub fn index_of(&self, l: i32) -> Option<usize> {
        self.ls.binary_search(&l).ok()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.ls.iter().all(|&l| other.index_of(l).is_some())
    }

    /// Subspaces built from ± pairs of nonzero OAM numbers, with `0` added
    /// when `d` is odd: `{−l0, l0}` for d=2, `{−l0, 0, l0}` for d=3,
    /// `{−l2, −l1, l1, l2}` for d=4 and so on. Ordered by the largest |l|,
    /// then lexicographically.
    pub fn candidates(d: usize) -> Result<Vec<Self>> {
        if !(2..=9).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        let pairs = d / 2;
        let with_zero = d % 2 == 1;
        let mut out = Vec::new();
        for mask in 0u32..16 {
            if mask.count_ones() as usize != pairs {
                continue;
            }
            let mut ls: Vec<i32> = Vec::with_capacity(d);
            for l in 1..=MAX_OAM {
                if mask & (1 << (l - 1)) != 0 {
                    ls.push(l);
                    ls.push(-l);
                }
            }
            if with_zero {
                ls.push(0);
            }
            out.push(Self::new(ls)?);
        }
        out.sort_by(|a, b| a.max_abs_l().cmp(&b.max_abs_l()).then_with(|| a.ls.cmp(&b.ls)));
        Ok(out)
    }
}

impl TryFrom<Vec<i32>> for EncodingSubspace {
    type Error = Error;

    fn try_from(ls: Vec<i32>) -> Result<Self> {
        Self::new(ls)
    }
}

impl From<EncodingSubspace> for Vec<i32> {
    fn from(s: EncodingSubspace) -> Self {
        s.ls
    }
}

impl std::fmt::Display for EncodingSubspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.ls.iter().map(i32::to_string).collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}
