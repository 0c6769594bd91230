//! Landscapes: an interaction design bound to a weight vector, fitness
//! evaluation through the locus-subvector encoding, and the dense model
//! matrix `F` with `p = F w`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::design::{DesignFile, InteractionDesign};
use crate::error::{check_cap, Error, Result};

/// A point of `{0,1}^N`. Entry `l-1` is the state of locus `l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    bits: Vec<u8>,
}

impl Genotype {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::parameter("genotype entries must be 0 or 1"));
        }
        Ok(Self { bits })
    }

    /// Genotype for row index `index` of the dense matrices: `x_1` is the
    /// most significant bit of `index`.
    pub fn from_index(index: u64, n: usize) -> Self {
        let bits = (1..=n).map(|l| ((index >> (n - l)) & 1) as u8).collect();
        Self { bits }
    }

    pub fn to_index(&self) -> u64 {
        self.bits
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// `x̃_l = 2 x_l - 1` for 1-based locus `l`.
    pub fn signed(&self, locus: usize) -> i8 {
        2 * self.bits[locus - 1] as i8 - 1
    }
}

/// `e_i(x)`: the bits of `x` at the loci of `set`, read as a binary number
/// with the smallest locus as the most significant bit.
pub fn subvector_index(x: &Genotype, set: &[usize]) -> Result<usize> {
    if set.len() >= usize::BITS as usize {
        return Err(Error::malformed("interaction set too large to encode"));
    }
    set.iter().try_fold(0usize, |acc, &l| {
        if l == 0 || l > x.len() {
            return Err(Error::malformed(format!(
                "locus {l} outside 1..={}",
                x.len()
            )));
        }
        Ok((acc << 1) | x.bits[l - 1] as usize)
    })
}

/// `e_i^{-1}(value)`: the `len` bits of `value`, most significant first.
pub fn decode_subvector(value: usize, len: usize) -> Vec<u8> {
    (0..len)
        .map(|pos| ((value >> (len - 1 - pos)) & 1) as u8)
        .collect()
}

/// Per-set bit shifts into a packed genotype index, so that the subvector
/// index of row `g` can be read without building a [`Genotype`].
#[derive(Debug, Clone)]
pub(crate) struct PackedSets {
    shifts: Vec<Vec<u32>>,
}

impl PackedSets {
    pub(crate) fn new(design: &InteractionDesign) -> Self {
        let n = design.n();
        let shifts = design
            .sets()
            .iter()
            .map(|set| set.iter().map(|&l| (n - l) as u32).collect())
            .collect();
        Self { shifts }
    }

    #[inline]
    pub(crate) fn index(&self, set: usize, genotype: u64) -> usize {
        self.shifts[set].iter().fold(0usize, |acc, &s| {
            (acc << 1) | ((genotype >> s) & 1) as usize
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.shifts.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightDistribution {
    #[default]
    Normal,
    Uniform,
}

impl std::fmt::Display for WeightDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightDistribution::Normal => f.write_str("normal"),
            WeightDistribution::Uniform => f.write_str("uniform"),
        }
    }
}

impl std::str::FromStr for WeightDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Self::Normal),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::parameter(format!("unknown distribution {other:?}"))),
        }
    }
}

/// The concatenated weight blocks `w = (w_1 | ... | w_N)`, block `i` of
/// length `2^{K_i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    offsets: Vec<usize>,
    pub mu: f64,
    pub sigma2: f64,
    pub distribution: WeightDistribution,
    /// `None` for explicitly supplied weights.
    pub seed: Option<u64>,
}

impl WeightVector {
    /// Wraps explicit blocks; lengths must match `design`.
    pub fn from_blocks(design: &InteractionDesign, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() != design.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} weight blocks for {} interaction sets",
                blocks.len(),
                design.n()
            )));
        }
        for (idx, block) in blocks.iter().enumerate() {
            if block.len() != design.block_len(idx) {
                return Err(Error::DimensionMismatch(format!(
                    "block {} has length {}, expected {}",
                    idx + 1,
                    block.len(),
                    design.block_len(idx)
                )));
            }
        }
        let values: Vec<f64> = blocks.into_iter().flatten().collect();
        let n = design.n() as f64;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self {
            values,
            offsets: design.block_offsets(),
            mu: mean * n,
            sigma2: f64::NAN,
            distribution: WeightDistribution::Normal,
            seed: None,
        })
    }

    /// Every component equal to `value`.
    pub fn constant(design: &InteractionDesign, value: f64) -> Self {
        let offsets = design.block_offsets();
        Self {
            values: vec![value; design.weight_len()],
            offsets,
            mu: value * design.n() as f64,
            sigma2: 0.0,
            distribution: WeightDistribution::Normal,
            seed: None,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn block(&self, idx: usize) -> &[f64] {
        &self.values[self.offsets[idx]..self.offsets[idx + 1]]
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn matches(&self, design: &InteractionDesign) -> bool {
        self.offsets == design.block_offsets()
    }
}

/// Draws iid components with mean `mu/N` and variance `sigma2/N`.
///
/// The uniform family is the interval `mu/N ± sqrt(3 sigma2 / N)`, which has
/// exactly that mean and variance.
pub fn generate_weights(
    design: &InteractionDesign,
    mu: f64,
    sigma2: f64,
    distribution: WeightDistribution,
    seed: u64,
) -> Result<WeightVector> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::parameter(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if !mu.is_finite() {
        return Err(Error::parameter("mu must be finite"));
    }
    let n = design.n() as f64;
    let mean = mu / n;
    let var = sigma2 / n;
    let len = design.weight_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = match distribution {
        WeightDistribution::Normal => {
            let dist =
                Normal::new(mean, var.sqrt()).map_err(|e| Error::parameter(e.to_string()))?;
            (0..len).map(|_| dist.sample(&mut rng)).collect()
        }
        WeightDistribution::Uniform => {
            let half = (3.0 * var).sqrt();
            let dist = Uniform::new(mean - half, mean + half)
                .map_err(|e| Error::parameter(e.to_string()))?;
            (0..len).map(|_| dist.sample(&mut rng)).collect()
        }
    };
    Ok(WeightVector {
        values,
        offsets: design.block_offsets(),
        mu,
        sigma2,
        distribution,
        seed: Some(seed),
    })
}

#[derive(Debug, Clone)]
pub struct Landscape {
    design: InteractionDesign,
    weights: WeightVector,
}

impl Landscape {
    pub fn new(design: InteractionDesign, weights: WeightVector) -> Result<Self> {
        if !weights.matches(&design) {
            return Err(Error::DimensionMismatch(
                "weight blocks do not match the design".into(),
            ));
        }
        Ok(Self { design, weights })
    }

    pub fn generate(
        design: InteractionDesign,
        mu: f64,
        sigma2: f64,
        distribution: WeightDistribution,
        seed: u64,
    ) -> Result<Self> {
        let weights = generate_weights(&design, mu, sigma2, distribution, seed)?;
        Ok(Self { design, weights })
    }

    pub fn design(&self) -> &InteractionDesign {
        &self.design
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// `Σ_i w_i[e_i(x)]`.
    pub fn fitness(&self, x: &Genotype) -> Result<f64> {
        if x.len() != self.design.n() {
            return Err(Error::DimensionMismatch(format!(
                "genotype of length {} for N = {}",
                x.len(),
                self.design.n()
            )));
        }
        self.design
            .sets()
            .iter()
            .enumerate()
            .try_fold(0.0, |acc, (idx, set)| {
                Ok(acc + self.weights.block(idx)[subvector_index(x, set)?])
            })
    }

    pub fn to_file(&self) -> Result<LandscapeFile> {
        let seed = self.weights.seed.ok_or_else(|| {
            Error::parameter("only seeded landscapes can be written as landscape files")
        })?;
        Ok(LandscapeFile {
            design: self.design.to_file(),
            mu: self.weights.mu,
            sigma2: self.weights.sigma2,
            distribution: self.weights.distribution,
            seed,
        })
    }
}

/// Design file plus the parameters that regenerate the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeFile {
    #[serde(flatten)]
    pub design: DesignFile,
    pub mu: f64,
    pub sigma2: f64,
    pub distribution: WeightDistribution,
    pub seed: u64,
}

impl LandscapeFile {
    pub fn into_landscape(self) -> Result<Landscape> {
        let design = self.design.into_design()?;
        Landscape::generate(design, self.mu, self.sigma2, self.distribution, self.seed)
    }
}

/// The `2^N × C` binary model matrix. Row `j` is genotype `j` (x_1 most
/// significant), formed by concatenating the unit vectors `f_1(x) | ... | f_N(x)`.
pub fn model_matrix(design: &InteractionDesign, cap: usize) -> Result<DMatrix<u8>> {
    let n = design.n();
    check_cap(n, cap)?;
    let rows = 1usize << n;
    let offsets = design.block_offsets();
    let packed = PackedSets::new(design);
    let mut f = DMatrix::<u8>::zeros(rows, design.weight_len());
    for g in 0..rows {
        for idx in 0..packed.len() {
            f[(g, offsets[idx] + packed.index(idx, g as u64))] = 1;
        }
    }
    Ok(f)
}

/// `p = F w` evaluated by per-genotype lookup, without building `F`.
pub fn full_fitness_vector(ls: &Landscape, cap: usize) -> Result<Vec<f64>> {
    let design = ls.design();
    check_cap(design.n(), cap)?;
    let packed = PackedSets::new(design);
    let w = ls.weights();
    let rows = 1u64 << design.n();
    Ok((0..rows)
        .map(|g| {
            (0..packed.len())
                .map(|idx| w.block(idx)[packed.index(idx, g)])
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::DEFAULT_DENSE_CAP;

    fn example() -> InteractionDesign {
        InteractionDesign::new(3, vec![vec![1, 2], vec![2, 3], vec![1, 3]]).unwrap()
    }

    fn g(bits: &[u8]) -> Genotype {
        Genotype::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn subvector_index_examples() {
        assert_eq!(subvector_index(&g(&[0, 1, 0]), &[1, 2]).unwrap(), 1);
        assert_eq!(subvector_index(&g(&[1, 0, 0]), &[1, 2]).unwrap(), 2);
        assert_eq!(subvector_index(&g(&[0, 0, 0, 0]), &[1, 3, 4]).unwrap(), 0);
        assert_eq!(subvector_index(&g(&[1, 1, 1]), &[1, 2, 3]).unwrap(), 7);
        assert!(matches!(
            subvector_index(&g(&[1, 1]), &[1, 3]),
            Err(Error::MalformedDesign(_))
        ));
    }

    #[test]
    fn genotype_index_round_trip() {
        for idx in 0..32 {
            let x = Genotype::from_index(idx, 5);
            assert_eq!(x.to_index(), idx);
        }
        assert_eq!(Genotype::from_index(4, 3).bits(), &[1, 0, 0]);
        assert_eq!(Genotype::from_index(4, 3).signed(2), -1);
    }

    #[test]
    fn rejects_non_binary_genotype() {
        assert!(Genotype::new(vec![0, 2]).is_err());
    }

    #[test]
    fn single_locus_lookup() {
        let d = InteractionDesign::new(1, vec![vec![1]]).unwrap();
        let w = WeightVector::from_blocks(&d, vec![vec![0.25, -1.5]]).unwrap();
        let ls = Landscape::new(d, w).unwrap();
        assert_eq!(ls.fitness(&g(&[0])).unwrap(), 0.25);
        assert_eq!(ls.fitness(&g(&[1])).unwrap(), -1.5);
    }

    #[test]
    fn constant_weights_give_constant_fitness() {
        let d = example();
        let ls = Landscape::new(d.clone(), WeightVector::constant(&d, 2.0 / 3.0)).unwrap();
        for p in full_fitness_vector(&ls, DEFAULT_DENSE_CAP).unwrap() {
            assert!((p - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn model_matrix_single_locus_is_identity() {
        let d = InteractionDesign::new(1, vec![vec![1]]).unwrap();
        let f = model_matrix(&d, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(f, DMatrix::<u8>::identity(2, 2));
    }

    #[test]
    fn model_matrix_capacity() {
        let d = InteractionDesign::new(4, (1..=4).map(|i| vec![i]).collect()).unwrap();
        assert!(matches!(
            model_matrix(&d, 3),
            Err(Error::Capacity { n: 4, cap: 3 })
        ));
    }

    #[test]
    fn weight_blocks_follow_mixed_k() {
        let d = InteractionDesign::new(
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
        let w = generate_weights(&d, 0.0, 1.0, WeightDistribution::Uniform, 3).unwrap();
        let lens: Vec<usize> = (0..5).map(|i| w.block(i).len()).collect();
        assert_eq!(lens, vec![16, 4, 4, 8, 4]);
        assert_eq!(w.len(), 36);
    }

    #[test]
    fn weights_are_deterministic_per_seed() {
        let d = example();
        let a = generate_weights(&d, 1.0, 2.0, WeightDistribution::Normal, 42).unwrap();
        let b = generate_weights(&d, 1.0, 2.0, WeightDistribution::Normal, 42).unwrap();
        let c = generate_weights(&d, 1.0, 2.0, WeightDistribution::Normal, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn rejects_nonpositive_variance() {
        let d = example();
        assert!(generate_weights(&d, 0.0, 0.0, WeightDistribution::Normal, 1).is_err());
        assert!(generate_weights(&d, 0.0, -1.0, WeightDistribution::Uniform, 1).is_err());
    }

    #[test]
    fn mismatched_weights_rejected() {
        let d = example();
        assert!(WeightVector::from_blocks(&d, vec![vec![0.0; 4]; 2]).is_err());
        assert!(
            WeightVector::from_blocks(&d, vec![vec![0.0; 4], vec![0.0; 4], vec![0.0; 2]]).is_err()
        );
    }

    #[test]
    fn landscape_file_round_trip() {
        let ls = Landscape::generate(example(), 0.5, 1.0, WeightDistribution::Normal, 9).unwrap();
        let text = serde_json::to_string(&ls.to_file().unwrap()).unwrap();
        assert!(text.starts_with(r#"{"n":3,"sets":[[1,2],[2,3],[1,3]],"mu":0.5"#));
        let back: LandscapeFile = serde_json::from_str(&text).unwrap();
        let ls2 = back.into_landscape().unwrap();
        assert_eq!(ls2.weights(), ls.weights());
    }
}
