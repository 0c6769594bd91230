//! The interaction-model (Walsh) view of a landscape.
//!
//! A design induces the term set `T = ∪ 2^{V_i}`; the landscape is exactly
//! `p = F̃ β` where column `U` of `F̃` is `∏_{l∈U} x̃_l`. The rank of the
//! landscape is `|T|`, and under iid weights the coefficients are
//! uncorrelated with variances given by how many power sets contain each term.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use num_rational::Ratio;

use crate::design::InteractionDesign;
use crate::error::{check_cap, Error, Result};
use crate::landscape::{decode_subvector, full_fitness_vector, Landscape};

/// An interaction term: a sorted set of 1-based loci. The empty set is the
/// intercept.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    loci: Vec<usize>,
}

impl Term {
    pub fn new(mut loci: Vec<usize>) -> Self {
        loci.sort_unstable();
        loci.dedup();
        Self { loci }
    }

    pub fn intercept() -> Self {
        Self { loci: Vec::new() }
    }

    pub fn loci(&self) -> &[usize] {
        &self.loci
    }

    /// Interaction order, `|U|`.
    pub fn order(&self) -> usize {
        self.loci.len()
    }

    pub fn is_intercept(&self) -> bool {
        self.loci.is_empty()
    }

    /// Whether this term belongs to the power set of `set` (both sorted).
    pub fn is_subset_of(&self, set: &[usize]) -> bool {
        let mut it = set.iter();
        self.loci.iter().all(|l| it.any(|s| s == l))
    }

    /// Bit mask of the term's loci within a packed genotype index.
    fn mask(&self, n: usize) -> u64 {
        self.loci.iter().fold(0u64, |m, &l| m | (1u64 << (n - l)))
    }

    /// `∏_{l∈U} x̃_l` at packed genotype `g`.
    #[inline]
    fn sign_at(mask: u64, order: u32, g: u64) -> i8 {
        let zeros = order - (g & mask).count_ones();
        if zeros.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.loci
            .len()
            .cmp(&other.loci.len())
            .then_with(|| self.loci.cmp(&other.loci))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// `0` for the intercept, otherwise loci joined by `+`.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.loci.is_empty() {
            return f.write_str("0");
        }
        for (pos, l) in self.loci.iter().enumerate() {
            if pos > 0 {
                f.write_str("+")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "0" {
            return Ok(Self::intercept());
        }
        s.split('+')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&l| l > 0)
                    .ok_or_else(|| Error::parameter(format!("bad term {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Term::new)
    }
}

/// Deduplicated terms in canonical order: by interaction order, then
/// lexicographically on loci.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermSet {
    terms: Vec<Term>,
}

impl TermSet {
    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        let set: BTreeSet<Term> = terms.into_iter().collect();
        Self {
            terms: set.into_iter().collect(),
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: &Term) -> Option<usize> {
        self.terms.binary_search(term).ok()
    }

    pub fn contains(&self, term: &Term) -> bool {
        self.position(term).is_some()
    }

    /// Number of terms of each order; entry `m` counts order-`m` terms.
    pub fn counts_by_order(&self) -> Vec<usize> {
        let max = self.terms.last().map_or(0, Term::order);
        let mut counts = vec![0; max + 1];
        for t in &self.terms {
            counts[t.order()] += 1;
        }
        counts
    }
}

fn power_set(set: &[usize]) -> impl Iterator<Item = Term> + '_ {
    (0u64..(1u64 << set.len())).map(move |mask| Term {
        loci: set
            .iter()
            .enumerate()
            .filter(|(pos, _)| mask >> pos & 1 == 1)
            .map(|(_, &l)| l)
            .collect(),
    })
}

/// `T = ∪_i 2^{V_i}`. Always contains the intercept and every main effect
/// whose locus occurs in some set.
pub fn term_set(design: &InteractionDesign) -> TermSet {
    let mut all = BTreeSet::new();
    for set in design.sets() {
        all.extend(power_set(set));
    }
    TermSet {
        terms: all.into_iter().collect(),
    }
}

/// Landscape rank, `|T|`.
pub fn rank(design: &InteractionDesign) -> usize {
    term_set(design).len()
}

/// `min(2^n, n 2^{k+1} + 1 - n(k+1))`, the largest rank any classic design
/// with these parameters can reach.
pub fn max_rank_bound(n: usize, k: usize) -> Result<u128> {
    if n == 0 || k >= n {
        return Err(Error::parameter(format!(
            "need 0 <= k <= n-1, got n = {n}, k = {k}"
        )));
    }
    let n128 = n as u128;
    let linear = 1u128
        .checked_shl(k as u32 + 1)
        .and_then(|p| n128.checked_mul(p))
        .map(|v| v + 1 - n128 * (k as u128 + 1));
    let full = 1u128.checked_shl(n as u32).filter(|_| n < 128);
    Ok(match (full, linear) {
        (Some(f), Some(l)) => f.min(l),
        (Some(f), None) => f,
        (None, Some(l)) => l,
        (None, None) => u128::MAX,
    })
}

/// The `2^N × |T|` ±1 matrix `F̃` for the design's term set.
pub fn walsh_matrix(design: &InteractionDesign, cap: usize) -> Result<DMatrix<i8>> {
    walsh_matrix_for_terms(design.n(), &term_set(design), cap)
}

/// `F̃` for an arbitrary term set over `n` loci.
pub fn walsh_matrix_for_terms(n: usize, terms: &TermSet, cap: usize) -> Result<DMatrix<i8>> {
    check_cap(n, cap)?;
    if let Some(t) = terms
        .terms()
        .iter()
        .find(|t| t.loci().iter().any(|&l| l > n))
    {
        return Err(Error::Index(format!("term {t} has a locus beyond N = {n}")));
    }
    let rows = 1usize << n;
    let mut m = DMatrix::<i8>::zeros(rows, terms.len());
    for (col, t) in terms.terms().iter().enumerate() {
        let mask = t.mask(n);
        let order = t.order() as u32;
        for g in 0..rows {
            m[(g, col)] = Term::sign_at(mask, order, g as u64);
        }
    }
    Ok(m)
}

/// Coefficients `β_U` aligned with a [`TermSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub terms: TermSet,
    pub values: Vec<f64>,
}

impl CoefficientVector {
    pub fn get(&self, term: &Term) -> Option<f64> {
        self.terms.position(term).map(|k| self.values[k])
    }

    /// `F̃ β` over all `2^n` genotypes.
    pub fn reconstruct(&self, n: usize, cap: usize) -> Result<Vec<f64>> {
        check_cap(n, cap)?;
        let rows = 1u64 << n;
        let cols: Vec<(u64, u32, f64)> = self
            .terms
            .terms()
            .iter()
            .zip(&self.values)
            .map(|(t, &b)| (t.mask(n), t.order() as u32, b))
            .collect();
        Ok((0..rows)
            .map(|g| {
                cols.iter()
                    .map(|&(mask, order, b)| b * f64::from(Term::sign_at(mask, order, g)))
                    .sum()
            })
            .collect())
    }
}

/// `β = 2^{-N} F̃ᵀ p` using the orthogonality of the columns of `F̃`.
pub fn coefficients_from_fitness(
    n: usize,
    terms: &TermSet,
    p: &[f64],
) -> Result<CoefficientVector> {
    if p.len() as u128 != 1u128 << n {
        return Err(Error::DimensionMismatch(format!(
            "fitness vector of length {} for N = {n}",
            p.len()
        )));
    }
    let scale = (p.len() as f64).recip();
    let values = terms
        .terms()
        .iter()
        .map(|t| {
            let mask = t.mask(n);
            let order = t.order() as u32;
            let dot: f64 = p
                .iter()
                .enumerate()
                .map(|(g, &pg)| pg * f64::from(Term::sign_at(mask, order, g as u64)))
                .sum();
            dot * scale
        })
        .collect();
    Ok(CoefficientVector {
        terms: terms.clone(),
        values,
    })
}

/// Interaction-model coefficients of a concrete landscape.
pub fn extract_coefficients(ls: &Landscape, cap: usize) -> Result<CoefficientVector> {
    let p = full_fitness_vector(ls, cap)?;
    coefficients_from_fitness(ls.design().n(), &term_set(ls.design()), &p)
}

/// `Σ_i 2^{-(K_i+1)} I(U ∈ 2^{V_i}) / N`, so that `Var[β_U] = σ² ×` this.
pub fn variance_fraction(design: &InteractionDesign, term: &Term) -> Ratio<i128> {
    let n = design.n() as i128;
    design
        .sets()
        .iter()
        .filter(|set| term.is_subset_of(set))
        .fold(Ratio::from_integer(0), |acc, set| {
            acc + Ratio::new(1, n << set.len())
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermMoment {
    pub term: Term,
    pub mean: f64,
    pub variance: f64,
}

/// Analytic mean and variance of every coefficient in `T` under iid weights
/// with mean `mu/N` and variance `sigma2/N`.
pub fn coefficient_moments(design: &InteractionDesign, mu: f64, sigma2: f64) -> Vec<TermMoment> {
    term_set(design)
        .terms()
        .iter()
        .map(|t| term_moment(design, t, mu, sigma2))
        .collect()
}

/// Moments of a single term; terms outside `T` have mean 0 and variance 0.
pub fn term_moment(design: &InteractionDesign, term: &Term, mu: f64, sigma2: f64) -> TermMoment {
    let n = design.n() as f64;
    let variance = design
        .sets()
        .iter()
        .filter(|set| term.is_subset_of(set))
        .map(|set| (-(set.len() as f64)).exp2())
        .sum::<f64>()
        * sigma2
        / n;
    TermMoment {
        term: term.clone(),
        mean: if term.is_intercept() { mu } else { 0.0 },
        variance,
    }
}

/// `h(i, j, k)`: zero unless term `k` lies in `2^{V_i}`; otherwise the product
/// of the signed bits of `e_i^{-1}(j-1)` at the term's loci. All indices are
/// 1-based, `k` indexing `terms`.
pub fn h_function(
    design: &InteractionDesign,
    terms: &TermSet,
    i: usize,
    j: usize,
    k: usize,
) -> Result<i8> {
    let set = design
        .set(i)
        .ok_or_else(|| Error::Index(format!("set index {i} outside 1..={}", design.n())))?;
    let block = 1usize << set.len();
    if j == 0 || j > block {
        return Err(Error::Index(format!("column {j} outside 1..={block}")));
    }
    let term = k
        .checked_sub(1)
        .and_then(|idx| terms.terms().get(idx))
        .ok_or_else(|| Error::Index(format!("term index {k} outside 1..={}", terms.len())))?;
    if term.is_intercept() {
        return Ok(1);
    }
    if !term.is_subset_of(set) {
        return Ok(0);
    }
    let bits = decode_subvector(j - 1, set.len());
    Ok(set
        .iter()
        .zip(bits)
        .filter(|(l, _)| term.loci().contains(l))
        .map(|(_, b)| 2 * b as i8 - 1)
        .product())
}

/// Relative tolerance on singular values used for numeric ranks.
pub const RANK_TOL: f64 = 1e-9;

/// Number of singular values at or above `tol × σ_max`.
pub fn numeric_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = if m.ncols() > m.nrows() {
        m.transpose().singular_values()
    } else {
        m.singular_values()
    };
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= tol * max).count()
}

/// `C(A) = C(B)` iff `rank A = rank B = rank [A | B]`.
pub fn column_spaces_equal(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows versus {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    let ra = numeric_rank(a, tol);
    let rb = numeric_rank(b, tol);
    if ra != rb {
        return Ok(false);
    }
    let mut joined = DMatrix::<f64>::zeros(a.nrows(), a.ncols() + b.ncols());
    joined.columns_mut(0, a.ncols()).copy_from(a);
    joined.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    Ok(numeric_rank(&joined, tol) == ra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::DEFAULT_DENSE_CAP;
    use crate::landscape::{model_matrix, WeightVector};

    fn example() -> InteractionDesign {
        InteractionDesign::new(3, vec![vec![1, 2], vec![2, 3], vec![1, 3]]).unwrap()
    }

    fn t(loci: &[usize]) -> Term {
        Term::new(loci.to_vec())
    }

    #[test]
    fn example_term_set() {
        let ts = term_set(&example());
        let want: Vec<Term> = [&[][..], &[1], &[2], &[3], &[1, 2], &[1, 3], &[2, 3]]
            .iter()
            .map(|l| t(l))
            .collect();
        assert_eq!(ts.terms(), &want[..]);
        assert_eq!(ts.counts_by_order(), vec![1, 3, 3]);
    }

    #[test]
    fn k_zero_and_full_term_sets() {
        let d0 = InteractionDesign::new(6, (1..=6).map(|i| vec![i]).collect()).unwrap();
        assert_eq!(rank(&d0), 7);
        let full = InteractionDesign::new(4, vec![vec![1, 2, 3, 4]; 4]).unwrap();
        assert_eq!(rank(&full), 16);
    }

    #[test]
    fn bound_values() {
        assert_eq!(max_rank_bound(7, 2).unwrap(), 36);
        assert_eq!(max_rank_bound(13, 3).unwrap(), 157);
        for n in 1..20 {
            assert_eq!(max_rank_bound(n, 0).unwrap(), n as u128 + 1);
        }
        // 2^n is the binding term when k is close to n.
        assert_eq!(max_rank_bound(3, 2).unwrap(), 8);
        assert_eq!(max_rank_bound(100, 7).unwrap(), 100 * 256 + 1 - 800);
        assert!(max_rank_bound(5, 5).is_err());
        assert!(max_rank_bound(0, 0).is_err());
    }

    #[test]
    fn term_display_and_parse() {
        assert_eq!(Term::intercept().to_string(), "0");
        assert_eq!(t(&[3, 1]).to_string(), "1+3");
        assert_eq!("1+3".parse::<Term>().unwrap(), t(&[1, 3]));
        assert_eq!("0".parse::<Term>().unwrap(), Term::intercept());
        assert!("1+x".parse::<Term>().is_err());
    }

    #[test]
    fn interaction_column_is_product_of_main_effects() {
        let d = example();
        let ts = term_set(&d);
        let m = walsh_matrix(&d, DEFAULT_DENSE_CAP).unwrap();
        let c1 = ts.position(&t(&[1])).unwrap();
        let c2 = ts.position(&t(&[2])).unwrap();
        let c12 = ts.position(&t(&[1, 2])).unwrap();
        for r in 0..8 {
            assert_eq!(m[(r, c12)], m[(r, c1)] * m[(r, c2)]);
        }
        for c in 1..ts.len() {
            let dot: i32 = (0..8).map(|r| i32::from(m[(r, 0)] * m[(r, c)])).sum();
            assert_eq!(dot, 0);
        }
    }

    #[test]
    fn flat_landscape_has_only_intercept() {
        let d = example();
        let ls = Landscape::new(d.clone(), WeightVector::constant(&d, 1.5)).unwrap();
        let beta = extract_coefficients(&ls, DEFAULT_DENSE_CAP).unwrap();
        assert!((beta.values[0] - 4.5).abs() < 1e-12);
        assert!(beta.values[1..].iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn h_function_examples() {
        let d = example();
        let ts = term_set(&d);
        let k = |loci: &[usize]| ts.position(&t(loci)).unwrap() + 1;
        assert_eq!(h_function(&d, &ts, 1, 3, k(&[1])).unwrap(), 1);
        assert_eq!(h_function(&d, &ts, 1, 3, k(&[2])).unwrap(), -1);
        assert_eq!(h_function(&d, &ts, 1, 3, k(&[1, 2])).unwrap(), -1);
        for j in 1..=4 {
            assert_eq!(h_function(&d, &ts, 1, j, k(&[1, 3])).unwrap(), 0);
            for i in 1..=3 {
                assert_eq!(h_function(&d, &ts, i, j, 1).unwrap(), 1);
            }
        }
        assert!(h_function(&d, &ts, 4, 1, 1).is_err());
        assert!(h_function(&d, &ts, 1, 5, 1).is_err());
        assert!(h_function(&d, &ts, 1, 1, 8).is_err());
    }

    #[test]
    fn moments_for_terms_outside_t() {
        let d = example();
        let m = term_moment(&d, &t(&[1, 2, 3]), 1.0, 1.0);
        assert_eq!(m.variance, 0.0);
        assert_eq!(
            variance_fraction(&d, &t(&[1, 2, 3])),
            Ratio::from_integer(0)
        );
        let intercept = term_moment(&d, &Term::intercept(), 2.0, 3.0);
        assert_eq!(intercept.mean, 2.0);
        assert!((intercept.variance - 3.0 / 3.0 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn column_space_basics() {
        let id = DMatrix::<f64>::identity(4, 4);
        let mut perm = DMatrix::<f64>::zeros(4, 4);
        for (c, r) in [2usize, 0, 3, 1].iter().enumerate() {
            perm[(*r, c)] = 1.0;
        }
        assert!(column_spaces_equal(&id, &perm, RANK_TOL).unwrap());

        let d = InteractionDesign::new(2, vec![vec![1], vec![2]]).unwrap();
        let w = walsh_matrix(&d, DEFAULT_DENSE_CAP).unwrap().map(f64::from);
        let intercept = w.columns(0, 1).into_owned();
        let main = w.columns(1, 1).into_owned();
        assert!(!column_spaces_equal(&intercept, &main, RANK_TOL).unwrap());
        assert!(column_spaces_equal(&id, &DMatrix::zeros(3, 4), RANK_TOL).is_err());
    }

    #[test]
    fn model_matrix_and_walsh_span_the_same_space() {
        let d = example();
        let f = model_matrix(&d, DEFAULT_DENSE_CAP).unwrap().map(f64::from);
        let w = walsh_matrix(&d, DEFAULT_DENSE_CAP).unwrap().map(f64::from);
        assert_eq!(numeric_rank(&f, RANK_TOL), 7);
        assert!(column_spaces_equal(&f, &w, RANK_TOL).unwrap());
    }
}
