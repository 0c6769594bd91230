//! Interaction designs: the N interaction sets `V_1..V_N` that fully determine
//! the structure of an NK or generalized NK landscape.
//!
//! Loci are 1-based throughout, matching the design file format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The interaction sets of a landscape. Set `i` (0-based here, `V_{i+1}` in
/// 1-based notation) lists the loci feeding locus `i+1`'s weight table.
///
/// Sets are stored sorted strictly ascending, so set identity is
/// order-insensitive on ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InteractionDesign {
    n: usize,
    sets: Vec<Vec<usize>>,
    require_self: bool,
}

impl InteractionDesign {
    /// Builds a design requiring locus `i` to be a member of `V_i`.
    pub fn new(n: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        Self::with_require_self(n, sets, true)
    }

    /// Builds a design, optionally allowing `V_i` not to contain locus `i`.
    pub fn with_require_self(n: usize, sets: Vec<Vec<usize>>, require_self: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::malformed("N must be at least 1"));
        }
        if sets.len() != n {
            return Err(Error::malformed(format!(
                "expected {n} interaction sets, found {}",
                sets.len()
            )));
        }
        let mut canonical = Vec::with_capacity(n);
        for (idx, mut set) in sets.into_iter().enumerate() {
            let locus = idx + 1;
            if set.is_empty() {
                return Err(Error::malformed(format!("V_{locus} is empty")));
            }
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::malformed(format!("V_{locus} repeats a locus")));
            }
            if let Some(&bad) = set.iter().find(|&&l| l == 0 || l > n) {
                return Err(Error::malformed(format!(
                    "V_{locus} contains locus {bad}, outside 1..={n}"
                )));
            }
            if set.len() > 63 {
                return Err(Error::malformed(format!(
                    "V_{locus} has {} loci; at most 63 are supported",
                    set.len()
                )));
            }
            if require_self && set.binary_search(&locus).is_err() {
                return Err(Error::malformed(format!(
                    "V_{locus} does not contain locus {locus}"
                )));
            }
            canonical.push(set);
        }
        Ok(Self {
            n,
            sets: canonical,
            require_self,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// `V_i` for 1-based `i`.
    pub fn set(&self, i: usize) -> Option<&[usize]> {
        i.checked_sub(1)
            .and_then(|idx| self.sets.get(idx))
            .map(Vec::as_slice)
    }

    pub fn require_self(&self) -> bool {
        self.require_self
    }

    /// `K_i` for every set, in order.
    pub fn k_values(&self) -> Vec<usize> {
        self.sets.iter().map(|s| s.len() - 1).collect()
    }

    /// `(min K_i, max K_i)`.
    pub fn k_range(&self) -> (usize, usize) {
        let ks = self.sets.iter().map(|s| s.len() - 1);
        let min = ks.clone().min().unwrap_or(0);
        let max = ks.max().unwrap_or(0);
        (min, max)
    }

    /// Length of block `i` (0-based): `2^{K_i+1}`.
    pub fn block_len(&self, idx: usize) -> usize {
        1usize << self.sets[idx].len()
    }

    /// Offsets of each block in the concatenated weight vector; the final
    /// entry is the total length `C`.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.n + 1);
        let mut acc = 0;
        offsets.push(0);
        for idx in 0..self.n {
            acc += self.block_len(idx);
            offsets.push(acc);
        }
        offsets
    }

    /// `C = Σ 2^{K_i+1}`.
    pub fn weight_len(&self) -> usize {
        (0..self.n).map(|idx| self.block_len(idx)).sum()
    }

    /// Number of sets each locus appears in; entry `l-1` is the count for locus `l`.
    pub fn membership_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for set in &self.sets {
            for &l in set {
                counts[l - 1] += 1;
            }
        }
        counts
    }

    /// Classic NK: a common K and every locus in exactly K+1 sets.
    pub fn is_classic(&self) -> bool {
        let (kmin, kmax) = self.k_range();
        kmin == kmax && self.membership_counts().iter().all(|&c| c == kmin + 1)
    }

    pub fn to_file(&self) -> DesignFile {
        DesignFile {
            n: self.n,
            sets: self.sets.clone(),
            require_self: if self.require_self { None } else { Some(false) },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DesignFile = serde_json::from_str(text)?;
        file.into_design()
    }
}

/// On-disk design: `{"n": int, "sets": [[int,...],...]}` with 1-based loci.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    pub n: usize,
    pub sets: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub require_self: Option<bool>,
}

impl DesignFile {
    pub fn into_design(self) -> Result<InteractionDesign> {
        InteractionDesign::with_require_self(self.n, self.sets, self.require_self.unwrap_or(true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> InteractionDesign {
        InteractionDesign::new(3, vec![vec![1, 2], vec![2, 3], vec![1, 3]]).unwrap()
    }

    #[test]
    fn canonicalizes_unsorted_sets() {
        let d = InteractionDesign::new(
            7,
            vec![
                vec![1, 2, 4],
                vec![2, 3, 5],
                vec![3, 4, 6],
                vec![4, 5, 7],
                vec![5, 6, 1],
                vec![6, 7, 2],
                vec![7, 1, 3],
            ],
        )
        .unwrap();
        assert_eq!(d.set(5).unwrap(), &[1, 5, 6]);
        assert_eq!(d.set(7).unwrap(), &[1, 3, 7]);
    }

    #[test]
    fn rejects_malformed_sets() {
        assert!(InteractionDesign::new(0, vec![]).is_err());
        assert!(InteractionDesign::new(2, vec![vec![1]]).is_err());
        assert!(InteractionDesign::new(2, vec![vec![1], vec![]]).is_err());
        assert!(InteractionDesign::new(2, vec![vec![1, 1], vec![2]]).is_err());
        assert!(InteractionDesign::new(2, vec![vec![1, 3], vec![2]]).is_err());
        assert!(InteractionDesign::new(2, vec![vec![0, 1], vec![2]]).is_err());
    }

    #[test]
    fn require_self_flag() {
        let sets = vec![vec![2], vec![1]];
        assert!(InteractionDesign::new(2, sets.clone()).is_err());
        let d = InteractionDesign::with_require_self(2, sets, false).unwrap();
        assert!(!d.require_self());
        assert!(d.is_classic());
    }

    #[test]
    fn derived_quantities() {
        let d = example();
        assert_eq!(d.k_values(), vec![1, 1, 1]);
        assert_eq!(d.weight_len(), 12);
        assert_eq!(d.block_offsets(), vec![0, 4, 8, 12]);
        assert_eq!(d.membership_counts(), vec![2, 2, 2]);
        assert!(d.is_classic());
    }

    #[test]
    fn generalized_is_not_classic() {
        let a = InteractionDesign::new(
            5,
            vec![
                vec![1, 2, 3, 4],
                vec![2, 3],
                vec![1, 3],
                vec![1, 3, 4],
                vec![2, 5],
            ],
        )
        .unwrap();
        assert!(!a.is_classic());
        assert_eq!(a.k_range(), (1, 3));
    }

    #[test]
    fn json_round_trip() {
        let d = example();
        let text = d.to_json().unwrap();
        assert_eq!(text, r#"{"n":3,"sets":[[1,2],[2,3],[1,3]]}"#);
        assert_eq!(InteractionDesign::from_json(&text).unwrap(), d);
    }
}
