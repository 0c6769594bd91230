//! Design constructions: difference-set translates (maximal rank), adjacent
//! loci, random classic designs from Latin-square rows, and random
//! generalized designs.

use std::collections::HashSet;
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design::InteractionDesign;
use crate::error::{Error, Result};

/// A set of residues modulo `modulus` whose ordered pairwise differences are
/// all distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceSet {
    elements: Vec<usize>,
    modulus: usize,
}

impl DifferenceSet {
    pub fn new(elements: Vec<usize>, modulus: usize) -> Result<Self> {
        if !is_difference_set(&elements, modulus)? {
            return Err(Error::parameter(format!(
                "{elements:?} is not a difference set modulo {modulus}"
            )));
        }
        let mut elements: Vec<usize> = elements.into_iter().map(|e| e % modulus).collect();
        elements.sort_unstable();
        Ok(Self { elements, modulus })
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    /// `κ = K + 1`.
    pub fn size(&self) -> usize {
        self.elements.len()
    }
}

/// A tabulated difference set together with the smallest modulus it is
/// listed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TabulatedDifferenceSet {
    pub k: usize,
    pub min_n: usize,
    pub elements: &'static [usize],
}

const TABLE: [TabulatedDifferenceSet; 8] = [
    TabulatedDifferenceSet {
        k: 2,
        min_n: 7,
        elements: &[0, 1, 3],
    },
    TabulatedDifferenceSet {
        k: 3,
        min_n: 13,
        elements: &[0, 1, 4, 6],
    },
    TabulatedDifferenceSet {
        k: 4,
        min_n: 23,
        elements: &[0, 2, 7, 8, 11],
    },
    TabulatedDifferenceSet {
        k: 5,
        min_n: 35,
        elements: &[0, 1, 4, 10, 12, 17],
    },
    TabulatedDifferenceSet {
        k: 6,
        min_n: 51,
        elements: &[0, 1, 4, 10, 18, 23, 25],
    },
    TabulatedDifferenceSet {
        k: 7,
        min_n: 71,
        elements: &[0, 4, 5, 17, 19, 25, 28, 35],
    },
    TabulatedDifferenceSet {
        k: 8,
        min_n: 91,
        elements: &[0, 2, 10, 24, 25, 29, 36, 42, 45],
    },
    TabulatedDifferenceSet {
        k: 9,
        min_n: 111,
        elements: &[0, 1, 6, 10, 23, 26, 34, 41, 53, 55],
    },
];

/// The tabulated NK difference set for `2 <= k <= 9`.
pub fn builtin_difference_set(k: usize) -> Result<TabulatedDifferenceSet> {
    TABLE
        .iter()
        .find(|t| t.k == k)
        .copied()
        .ok_or_else(|| Error::Unsupported(format!("no tabulated difference set for K = {k}")))
}

pub fn tabulated_difference_sets() -> &'static [TabulatedDifferenceSet] {
    &TABLE
}

/// Whether every ordered difference `x_i - x_j (mod modulus)`, `i != j`, is
/// distinct. Elements are reduced modulo `modulus`; repeated residues are an
/// error.
pub fn is_difference_set(elements: &[usize], modulus: usize) -> Result<bool> {
    if modulus == 0 {
        return Err(Error::parameter("modulus must be positive"));
    }
    let residues: Vec<usize> = elements.iter().map(|e| e % modulus).collect();
    let distinct: HashSet<usize> = residues.iter().copied().collect();
    if distinct.len() != residues.len() {
        return Err(Error::parameter(format!(
            "{elements:?} repeats a residue modulo {modulus}"
        )));
    }
    let mut seen = vec![false; modulus];
    for (a_pos, &a) in residues.iter().enumerate() {
        for (b_pos, &b) in residues.iter().enumerate() {
            if a_pos == b_pos {
                continue;
            }
            let diff = (a + modulus - b) % modulus;
            if seen[diff] {
                return Ok(false);
            }
            seen[diff] = true;
        }
    }
    Ok(true)
}

/// The `n` translates `V_{g+1} = {(d + g) mod n + 1 : d ∈ D}`.
///
/// When `0 ∉ D` the translates need not contain their own locus, so the
/// design is built without that requirement.
pub fn translate_design(ds: &DifferenceSet, n: usize) -> Result<InteractionDesign> {
    if ds.modulus() != n {
        return Err(Error::parameter(format!(
            "difference set is modulo {}, not {n}",
            ds.modulus()
        )));
    }
    let sets = (0..n)
        .map(|g| ds.elements().iter().map(|&d| (d + g) % n + 1).collect())
        .collect();
    InteractionDesign::with_require_self(n, sets, ds.elements().contains(&0))
}

/// `V_i = {i, i+1, ..., i+k}` with wraparound.
pub fn adjacent_design(n: usize, k: usize) -> Result<InteractionDesign> {
    if n == 0 || k >= n {
        return Err(Error::parameter(format!(
            "adjacent design needs k <= n-1, got n = {n}, k = {k}"
        )));
    }
    let sets = (0..n)
        .map(|i| (0..=k).map(|d| (i + d) % n + 1).collect())
        .collect();
    InteractionDesign::new(n, sets)
}

/// Whether no unordered pair of loci occurs in more than one set.
pub fn is_packing(design: &InteractionDesign) -> bool {
    let mut pairs = HashSet::new();
    for set in design.sets() {
        for (pos, &a) in set.iter().enumerate() {
            for &b in &set[pos + 1..] {
                if !pairs.insert((a, b)) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalRankStatus {
    Exists,
    Unknown,
    BelowNecessary,
}

impl fmt::Display for MaximalRankStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaximalRankStatus::Exists => "exists",
            MaximalRankStatus::Unknown => "unknown",
            MaximalRankStatus::BelowNecessary => "below necessary condition N >= K^2+K+1",
        })
    }
}

/// Whether a classic design reaching the linear rank bound is known to exist.
pub fn maximal_rank_known(n: usize, k: usize) -> MaximalRankStatus {
    use MaximalRankStatus::*;
    if n < k * k + k + 1 {
        return BelowNecessary;
    }
    let exists = match k {
        0 | 1 => true,
        2 => n >= 7,
        3 => n >= 13,
        4 => n >= 21 && n != 22,
        5 => n >= 31 && !(32..=34).contains(&n),
        6 => n >= 51,
        7 => [57, 64, 67, 69].contains(&n) || n >= 71,
        8 => [73, 89].contains(&n) || n >= 91,
        9 => n == 91 || n >= 111,
        _ => false,
    };
    if exists {
        Exists
    } else {
        Unknown
    }
}

/// Builds a maximal-rank classic design: `{i}` for `k = 0`, translates of
/// `{0, 1}` for `k = 1`, and translates of the tabulated set for `2..=9`
/// whenever `n` reaches its tabulated threshold.
pub fn maximal_design(n: usize, k: usize) -> Result<InteractionDesign> {
    let status = maximal_rank_known(n, k);
    let unavailable = || Error::MaximalUnavailable { n, k, status };
    if status == MaximalRankStatus::BelowNecessary {
        return Err(unavailable());
    }
    let elements: Vec<usize> = match k {
        0 => return InteractionDesign::new(n, (1..=n).map(|i| vec![i]).collect()),
        1 => vec![0, 1],
        _ => match builtin_difference_set(k) {
            Ok(t) if n >= t.min_n => t.elements.to_vec(),
            _ => return Err(unavailable()),
        },
    };
    let ds = DifferenceSet::new(elements, n).map_err(|_| unavailable())?;
    translate_design(&ds, n)
}

/// A Latin square over symbols `1..=order`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatinSquare {
    order: usize,
    grid: Vec<usize>,
}

impl LatinSquare {
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Result<Self> {
        let order = rows.len();
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::parameter("Latin square rows must have length n"));
        }
        let sq = Self {
            order,
            grid: rows.into_iter().flatten().collect(),
        };
        if !sq.is_latin() {
            return Err(Error::parameter("not a Latin square"));
        }
        Ok(sq)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Symbol at 0-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> usize {
        self.grid[row * self.order + col]
    }

    pub fn row(&self, row: usize) -> &[usize] {
        &self.grid[row * self.order..(row + 1) * self.order]
    }

    pub fn is_latin(&self) -> bool {
        let n = self.order;
        let mut seen = vec![false; n + 1];
        let mut ok_line = |cells: &mut dyn Iterator<Item = usize>| {
            seen.fill(false);
            for s in cells {
                if !(1..=n).contains(&s) || seen[s] {
                    return false;
                }
                seen[s] = true;
            }
            true
        };
        (0..n).all(|r| ok_line(&mut (0..n).map(|c| self.get(r, c))))
            && (0..n).all(|c| ok_line(&mut (0..n).map(|r| self.get(r, c))))
    }
}

/// Positive entries along one line of the incidence cube; at most two.
#[derive(Debug, Clone, Copy, Default)]
struct LineSet {
    len: u8,
    items: [u32; 2],
}

impl LineSet {
    fn insert(&mut self, v: u32) {
        self.items[self.len as usize] = v;
        self.len += 1;
    }

    fn remove(&mut self, v: u32) {
        if self.items[0] == v {
            self.items[0] = self.items[1];
        }
        self.len -= 1;
    }

    fn only(&self) -> usize {
        debug_assert_eq!(self.len, 1);
        self.items[0] as usize
    }

    fn pick<R: Rng>(&self, rng: &mut R) -> usize {
        debug_assert_eq!(self.len, 2);
        self.items[rng.random_range(0..2)] as usize
    }
}

/// Jacobson–Matthews incidence cube: entries in {-1, 0, 1}, every line
/// summing to one, with at most one -1 (the improper cell).
struct IncidenceCube {
    n: usize,
    cube: Vec<i8>,
    rows_of: Vec<LineSet>,
    cols_of: Vec<LineSet>,
    syms_of: Vec<LineSet>,
    improper: Option<(usize, usize, usize)>,
}

impl IncidenceCube {
    fn cyclic(n: usize) -> Self {
        let mut cube = Self {
            n,
            cube: vec![0; n * n * n],
            rows_of: vec![LineSet::default(); n * n],
            cols_of: vec![LineSet::default(); n * n],
            syms_of: vec![LineSet::default(); n * n],
            improper: None,
        };
        for r in 0..n {
            for c in 0..n {
                cube.add(r, c, (r + c) % n, 1);
            }
        }
        cube
    }

    fn add(&mut self, r: usize, c: usize, s: usize, delta: i8) {
        let n = self.n;
        let cell = &mut self.cube[(r * n + c) * n + s];
        let before = *cell;
        *cell += delta;
        let after = *cell;
        if before == 1 && after == 0 {
            self.rows_of[c * n + s].remove(r as u32);
            self.cols_of[r * n + s].remove(c as u32);
            self.syms_of[r * n + c].remove(s as u32);
        } else if before == 0 && after == 1 {
            self.rows_of[c * n + s].insert(r as u32);
            self.cols_of[r * n + s].insert(c as u32);
            self.syms_of[r * n + c].insert(s as u32);
        }
    }

    fn get(&self, r: usize, c: usize, s: usize) -> i8 {
        self.cube[(r * self.n + c) * self.n + s]
    }

    fn step<R: Rng>(&mut self, rng: &mut R) {
        let n = self.n;
        let (r, c, s, r1, c1, s1) = match self.improper {
            None => {
                let r = rng.random_range(0..n);
                let c = rng.random_range(0..n);
                let current = self.syms_of[r * n + c].only();
                let mut s = rng.random_range(0..n - 1);
                if s >= current {
                    s += 1;
                }
                let r1 = self.rows_of[c * n + s].only();
                let c1 = self.cols_of[r * n + s].only();
                (r, c, s, r1, c1, current)
            }
            Some((r, c, s)) => {
                let r1 = self.rows_of[c * n + s].pick(rng);
                let c1 = self.cols_of[r * n + s].pick(rng);
                let s1 = self.syms_of[r * n + c].pick(rng);
                (r, c, s, r1, c1, s1)
            }
        };
        // Decrements first so no line ever holds more than two positives.
        self.add(r, c, s1, -1);
        self.add(r, c1, s, -1);
        self.add(r1, c, s, -1);
        self.add(r1, c1, s1, -1);
        self.add(r, c, s, 1);
        self.add(r, c1, s1, 1);
        self.add(r1, c, s1, 1);
        self.add(r1, c1, s, 1);
        self.improper = (self.get(r1, c1, s1) == -1).then_some((r1, c1, s1));
    }

    fn to_square(&self) -> LatinSquare {
        let n = self.n;
        let grid = (0..n * n).map(|rc| self.syms_of[rc].only() + 1).collect();
        LatinSquare { order: n, grid }
    }
}

/// Default Jacobson–Matthews walk length, `10 n^3` moves.
pub fn default_latin_steps(n: usize) -> u64 {
    10 * (n as u64).pow(3)
}

/// Samples a Latin square by the Jacobson–Matthews ±1-move walk started
/// from the cyclic square. Each move is taken with probability 1/2 (a lazy
/// chain, so that small orders such as `n = 2` are not periodic); the walk
/// continues past `steps` until the cube is proper.
pub fn random_latin_square(n: usize, seed: u64, steps: u64) -> Result<LatinSquare> {
    if n < 2 {
        return Err(Error::parameter("Latin square order must be at least 2"));
    }
    if n > u32::MAX as usize {
        return Err(Error::parameter("Latin square order too large"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cube = IncidenceCube::cyclic(n);
    let mut taken = 0u64;
    while taken < steps || cube.improper.is_some() {
        taken += 1;
        if cube.improper.is_none() && rng.random_bool(0.5) {
            continue;
        }
        cube.step(&mut rng);
    }
    Ok(cube.to_square())
}

/// Assigns each column to a distinct symbol it contains, so that locus `s`
/// receives a set containing `s`. Columns of selected Latin rows form a
/// regular bipartite graph, which always has a perfect matching.
fn match_columns_to_loci(columns: &[Vec<usize>], n: usize) -> Option<Vec<usize>> {
    // owner[s] = column matched to symbol s (0-based symbol)
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut by_symbol: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (col, set) in columns.iter().enumerate() {
        for &s in set {
            by_symbol[s - 1].push(col);
        }
    }
    let mut col_owner: Vec<Option<usize>> = vec![None; n];

    fn augment(
        s: usize,
        by_symbol: &[Vec<usize>],
        col_owner: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &col in &by_symbol[s] {
            if visited[col] {
                continue;
            }
            visited[col] = true;
            let free = match col_owner[col] {
                None => true,
                Some(other) => augment(other, by_symbol, col_owner, visited),
            };
            if free {
                col_owner[col] = Some(s);
                return true;
            }
        }
        false
    }

    for s in 0..n {
        let mut visited = vec![false; n];
        if !augment(s, &by_symbol, &mut col_owner, &mut visited) {
            return None;
        }
    }
    for (col, s) in col_owner.iter().enumerate() {
        owner[(*s)?] = Some(col);
    }
    owner.into_iter().collect()
}

/// Classic design from `k+1` uniformly chosen rows of a random Latin square;
/// the `n` columns become the interaction sets, matched to loci so that
/// locus `i` lies in `V_i`.
pub fn random_classic_design(n: usize, k: usize, seed: u64) -> Result<InteractionDesign> {
    random_classic_design_with_steps(n, k, seed, default_latin_steps(n))
}

pub fn random_classic_design_with_steps(
    n: usize,
    k: usize,
    seed: u64,
    steps: u64,
) -> Result<InteractionDesign> {
    if n == 0 || k + 1 > n {
        return Err(Error::parameter(format!(
            "random classic design needs k+1 <= n, got n = {n}, k = {k}"
        )));
    }
    if n == 1 {
        return InteractionDesign::new(1, vec![vec![1]]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let square = random_latin_square(n, rng.random(), steps)?;
    let rows = sample(&mut rng, n, k + 1).into_vec();
    let columns: Vec<Vec<usize>> = (0..n)
        .map(|c| rows.iter().map(|&r| square.get(r, c)).collect())
        .collect();
    let owner = match_columns_to_loci(&columns, n)
        .ok_or_else(|| Error::malformed("no column-to-locus matching (not a Latin square?)"))?;
    let sets = owner.into_iter().map(|col| columns[col].clone()).collect();
    InteractionDesign::new(n, sets)
}

/// `V_i = {i} ∪` (k loci drawn uniformly without replacement from the other
/// n-1). Membership counts are unrestricted.
pub fn random_generalized_design(n: usize, k: usize, seed: u64) -> Result<InteractionDesign> {
    if n == 0 || k + 1 > n {
        return Err(Error::parameter(format!(
            "random generalized design needs k+1 <= n, got n = {n}, k = {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = (1..=n)
        .map(|i| {
            let mut set: Vec<usize> = sample(&mut rng, n - 1, k)
                .into_iter()
                .map(|idx| if idx + 1 >= i { idx + 2 } else { idx + 1 })
                .collect();
            set.push(i);
            set
        })
        .collect();
    InteractionDesign::new(n, sets)
}

/// The design families used in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Maximal,
    Adjacent,
    RandomClassic,
    RandomGeneralized,
}

impl DesignKind {
    pub const ALL: [DesignKind; 4] = [
        DesignKind::Maximal,
        DesignKind::Adjacent,
        DesignKind::RandomClassic,
        DesignKind::RandomGeneralized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DesignKind::Maximal => "maximal",
            DesignKind::Adjacent => "adjacent",
            DesignKind::RandomClassic => "random_classic",
            DesignKind::RandomGeneralized => "random_generalized",
        }
    }

    pub fn is_classic(self) -> bool {
        self != DesignKind::RandomGeneralized
    }

    /// Builds a design of this kind; the seed only matters for random kinds.
    pub fn build(self, n: usize, k: usize, seed: u64) -> Result<InteractionDesign> {
        match self {
            DesignKind::Maximal => maximal_design(n, k),
            DesignKind::Adjacent => adjacent_design(n, k),
            DesignKind::RandomClassic => random_classic_design(n, k, seed),
            DesignKind::RandomGeneralized => random_generalized_design(n, k, seed),
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        DesignKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::parameter(format!("unknown design kind {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walsh::{max_rank_bound, rank};

    #[test]
    fn tabulated_sets() {
        assert_eq!(builtin_difference_set(2).unwrap().elements, &[0, 1, 3]);
        assert_eq!(
            builtin_difference_set(9).unwrap().elements,
            &[0, 1, 6, 10, 23, 26, 34, 41, 53, 55]
        );
        assert_eq!(builtin_difference_set(4).unwrap().min_n, 23);
        assert!(matches!(
            builtin_difference_set(1),
            Err(Error::Unsupported(_))
        ));
        assert!(builtin_difference_set(10).is_err());
    }

    #[test]
    fn difference_set_checks() {
        assert!(is_difference_set(&[0, 1, 3], 8).unwrap());
        assert!(is_difference_set(&[0, 1, 3], 7).unwrap());
        assert!(!is_difference_set(&[0, 1, 2], 7).unwrap());
        assert!(is_difference_set(&[0, 1, 1], 7).is_err());
        assert!(is_difference_set(&[0, 7], 7).is_err());
        // {0, 2} mod 4: 2 - 0 = 0 - 2 = 2.
        assert!(!is_difference_set(&[0, 2], 4).unwrap());
    }

    #[test]
    fn translate_example() {
        let ds = DifferenceSet::new(vec![0, 1, 3], 7).unwrap();
        let d = translate_design(&ds, 7).unwrap();
        let want: Vec<Vec<usize>> = vec![
            vec![1, 2, 4],
            vec![2, 3, 5],
            vec![3, 4, 6],
            vec![4, 5, 7],
            vec![1, 5, 6],
            vec![2, 6, 7],
            vec![1, 3, 7],
        ];
        assert_eq!(d.sets(), &want[..]);
        assert!(d.is_classic());
        assert!(is_packing(&d));
        assert_eq!(rank(&d), 36);
        assert!(translate_design(&ds, 8).is_err());
        assert!(DifferenceSet::new(vec![0, 1, 2], 7).is_err());
    }

    #[test]
    fn translate_without_zero_relaxes_self_membership() {
        let ds = DifferenceSet::new(vec![1, 2, 4], 7).unwrap();
        let d = translate_design(&ds, 7).unwrap();
        assert!(!d.require_self());
        assert!(is_packing(&d));
    }

    #[test]
    fn adjacent_designs() {
        let d = adjacent_design(7, 2).unwrap();
        assert_eq!(d.set(7).unwrap(), &[1, 2, 7]);
        assert_eq!(rank(&d), 29);
        assert!(!is_packing(&d));
        assert!(d.is_classic());
        assert_eq!(rank(&adjacent_design(5, 0).unwrap()), 6);
        assert_eq!(rank(&adjacent_design(5, 1).unwrap()), 11);
        assert!(adjacent_design(5, 5).is_err());
    }

    #[test]
    fn maximal_rank_status() {
        use MaximalRankStatus::*;
        assert_eq!(maximal_rank_known(7, 2), Exists);
        assert_eq!(maximal_rank_known(6, 2), BelowNecessary);
        assert_eq!(maximal_rank_known(22, 4), Unknown);
        assert_eq!(maximal_rank_known(21, 4), Exists);
        assert_eq!(maximal_rank_known(33, 5), Unknown);
        assert_eq!(maximal_rank_known(64, 7), Exists);
        assert_eq!(maximal_rank_known(65, 7), Unknown);
        assert_eq!(maximal_rank_known(89, 8), Exists);
        assert_eq!(maximal_rank_known(91, 9), Exists);
        assert_eq!(maximal_rank_known(100, 9), Unknown);
        assert_eq!(maximal_rank_known(50, 6), Unknown);
        assert_eq!(maximal_rank_known(50, 7), BelowNecessary);
        assert_eq!(maximal_rank_known(1000, 12), Unknown);
    }

    #[test]
    fn maximal_constructions() {
        let d = maximal_design(7, 2).unwrap();
        assert_eq!(rank(&d), 36);
        let d0 = maximal_design(5, 0).unwrap();
        assert_eq!(rank(&d0), 6);
        let d1 = maximal_design(9, 1).unwrap();
        assert!(is_packing(&d1));
        assert_eq!(rank(&d1) as u128, max_rank_bound(9, 1).unwrap());
        assert!(matches!(
            maximal_design(6, 2),
            Err(Error::MaximalUnavailable {
                status: MaximalRankStatus::BelowNecessary,
                ..
            })
        ));
        // Known to exist, but the tabulated set starts at 23.
        assert!(matches!(
            maximal_design(21, 4),
            Err(Error::MaximalUnavailable {
                status: MaximalRankStatus::Exists,
                ..
            })
        ));
    }

    #[test]
    fn k_zero_designs_are_packings() {
        assert!(is_packing(&adjacent_design(6, 0).unwrap()));
    }

    #[test]
    fn latin_square_walk_is_latin_and_deterministic() {
        for n in 2..12 {
            let sq = random_latin_square(n, n as u64, default_latin_steps(n)).unwrap();
            assert!(sq.is_latin(), "order {n}");
        }
        let a = random_latin_square(9, 5, 500).unwrap();
        let b = random_latin_square(9, 5, 500).unwrap();
        assert_eq!(a, b);
        assert!(random_latin_square(1, 0, 10).is_err());
    }

    #[test]
    fn latin_from_rows() {
        assert!(LatinSquare::from_rows(vec![vec![1, 2], vec![2, 1]]).is_ok());
        assert!(LatinSquare::from_rows(vec![vec![1, 2], vec![1, 2]]).is_err());
        assert!(LatinSquare::from_rows(vec![vec![1, 2], vec![2]]).is_err());
    }

    #[test]
    fn random_classic_is_classic() {
        for seed in 0..10 {
            let d = random_classic_design(10, 2, seed).unwrap();
            assert!(d.is_classic());
            assert!(d.sets().iter().all(|s| s.len() == 3));
        }
        assert!(random_classic_design(3, 3, 0).is_err());
    }

    #[test]
    fn random_generalized_properties() {
        for seed in 0..10 {
            let d = random_generalized_design(12, 3, seed).unwrap();
            for (idx, set) in d.sets().iter().enumerate() {
                assert_eq!(set.len(), 4);
                assert!(set.contains(&(idx + 1)));
            }
        }
        let full = random_generalized_design(5, 4, 17).unwrap();
        assert!(full.sets().iter().all(|s| s == &[1, 2, 3, 4, 5]));
    }

    #[test]
    fn design_kind_parsing() {
        assert_eq!(
            "random-classic".parse::<DesignKind>().unwrap(),
            DesignKind::RandomClassic
        );
        assert_eq!(
            "maximal".parse::<DesignKind>().unwrap(),
            DesignKind::Maximal
        );
        assert!("other".parse::<DesignKind>().is_err());
    }
}
