//! Landmark matching by a genetic algorithm over partial injective
//! assignments of source landmarks to target landmarks.
//!
//! Operators only see the landmark topology ([`Problem`]) and an
//! [`Oracle`] that scores matches and proposes functional-map guided
//! targets, so they can be exercised without meshes.

mod context;
mod evolve;
mod operators;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::descriptors::{Category, LandmarkSet};
use crate::error::{Error, Result};

pub use context::MatchContext;
pub use evolve::{
    evolve, init_population, select_parents, Evolution, GenerationRecord, Member, Population,
};
pub use operators::{
    create_random_chromosome, crossover, mutate_fmap_guidance, mutate_growth, mutate_shrinkage,
};

/// Target landmark of a gene; `None` is the empty gene.
pub type Target = Option<usize>;

/// One target (or empty) per source landmark.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chromosome {
    pub genes: Vec<Target>,
}

impl Chromosome {
    pub fn empty(m1: usize) -> Self {
        Self {
            genes: vec![None; m1],
        }
    }

    /// Number of non-empty genes.
    pub fn size(&self) -> usize {
        self.genes.iter().filter(|g| g.is_some()).count()
    }

    /// Landmark pairs `(l1, l2)` of the non-empty genes, by source.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.genes
            .iter()
            .enumerate()
            .filter_map(|(l, g)| g.map(|t| (l, t)))
            .collect()
    }

    pub fn matched_sources(&self) -> Vec<usize> {
        self.pairs().into_iter().map(|p| p.0).collect()
    }

    pub fn uses_target(&self, t: usize) -> bool {
        self.genes.contains(&Some(t))
    }

    /// Targets in range and pairwise distinct.
    pub fn is_valid(&self, m2: usize) -> bool {
        let mut seen = vec![false; m2];
        for t in self.genes.iter().flatten() {
            if *t >= m2 || seen[*t] {
                return false;
            }
            seen[*t] = true;
        }
        true
    }
}

/// Candidate target landmarks for every source landmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneBank {
    pub candidates: Vec<Vec<usize>>,
}

pub const MAX_PROMINENT_BANK: usize = 4;

impl GeneBank {
    /// `w12[l1][l2]` and `w21[l2][l1]` are normalized descriptor distances.
    /// A pair enters the bank when categories agree and both distances are
    /// below `eps`.
    pub fn from_distances(
        cat1: &[Category],
        cat2: &[Category],
        w12: &[Vec<f64>],
        w21: &[Vec<f64>],
        eps: f64,
    ) -> Self {
        let candidates = (0..cat1.len())
            .map(|l1| {
                (0..cat2.len())
                    .filter(|&l2| cat1[l1] == cat2[l2] && w12[l1][l2] < eps && w21[l2][l1] < eps)
                    .collect()
            })
            .collect();
        Self { candidates }
    }

    /// Sources whose bank holds between 1 and 4 genes.
    pub fn prominent(&self) -> Vec<usize> {
        (0..self.candidates.len())
            .filter(|&l| (1..=MAX_PROMINENT_BANK).contains(&self.candidates[l].len()))
            .collect()
    }
}

/// Gene bank that can seed chromosomes; fails without a prominent landmark.
pub fn build_gene_bank(
    cat1: &[Category],
    cat2: &[Category],
    w12: &[Vec<f64>],
    w21: &[Vec<f64>],
    eps: f64,
) -> Result<GeneBank> {
    let bank = GeneBank::from_distances(cat1, cat2, w12, w21, eps);
    if bank.prominent().is_empty() {
        return Err(Error::NoProminentLandmark);
    }
    Ok(bank)
}

/// Same-category target landmarks for every source landmark.
pub fn origins(cat1: &[Category], cat2: &[Category]) -> Vec<Vec<usize>> {
    cat1.iter()
        .map(|c| (0..cat2.len()).filter(|&l2| cat2[l2] == *c).collect())
        .collect()
}

/// Sources `g.0`, `h.0` adjacent on the source and targets adjacent on the target.
pub fn adjacency_preserving(
    g: (usize, usize),
    h: (usize, usize),
    adjacency_1: &[Vec<usize>],
    adjacency_2: &[Vec<usize>],
) -> bool {
    adjacency_1[g.0].binary_search(&h.0).is_ok() && adjacency_2[g.1].binary_search(&h.1).is_ok()
}

/// Operator probabilities and population controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population: usize,
    pub max_attempts: usize,
    pub e_max: f64,
    pub crossover: f64,
    pub growth: f64,
    pub shrinkage: f64,
    pub n_sh: usize,
    pub guidance: f64,
    pub patience: usize,
    pub max_generations: usize,
    pub convergence_threshold: f64,
    /// Full population gene arrays are logged every this many generations
    /// (and at the first and last). 0 disables population logging.
    pub population_log_interval: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 400,
            max_attempts: 8000,
            e_max: 0.06,
            crossover: 0.75,
            growth: 0.05,
            shrinkage: 0.1,
            n_sh: 6,
            guidance: 0.05,
            patience: 70,
            max_generations: 300,
            convergence_threshold: 0.06,
            population_log_interval: 10,
        }
    }
}

/// Landmark topology on both shapes plus the gene bank.
#[derive(Debug, Clone)]
pub struct Problem {
    pub categories_1: Vec<Category>,
    pub categories_2: Vec<Category>,
    pub adjacency_1: Vec<Vec<usize>>,
    pub adjacency_2: Vec<Vec<usize>>,
    /// Landmark-to-landmark geodesic distance on the source.
    pub distances_1: Vec<Vec<f64>>,
    pub bank: GeneBank,
    pub origins: Vec<Vec<usize>>,
    pub prominent: Vec<usize>,
    pub m_min: usize,
    pub m_max: usize,
}

impl Problem {
    pub fn new(
        categories_1: Vec<Category>,
        categories_2: Vec<Category>,
        adjacency_1: Vec<Vec<usize>>,
        adjacency_2: Vec<Vec<usize>>,
        distances_1: Vec<Vec<f64>>,
        bank: GeneBank,
    ) -> Result<Self> {
        let (m1, m2) = (categories_1.len(), categories_2.len());
        if adjacency_1.len() != m1 || distances_1.len() != m1 || bank.candidates.len() != m1 {
            return Err(Error::DimensionMismatch {
                expected: m1,
                actual: adjacency_1.len(),
            });
        }
        if adjacency_2.len() != m2 {
            return Err(Error::DimensionMismatch {
                expected: m2,
                actual: adjacency_2.len(),
            });
        }
        let prominent = bank.prominent();
        if prominent.is_empty() {
            return Err(Error::NoProminentLandmark);
        }
        let m_max = m1.min(m2);
        let m_min = (2 * m_max).div_ceil(3);
        let origins = origins(&categories_1, &categories_2);
        Ok(Self {
            categories_1,
            categories_2,
            adjacency_1,
            adjacency_2,
            distances_1,
            bank,
            origins,
            prominent,
            m_min,
            m_max,
        })
    }

    pub fn from_landmarks(
        lm1: &LandmarkSet,
        lm2: &LandmarkSet,
        w12: &[Vec<f64>],
        w21: &[Vec<f64>],
        eps_wks: f64,
    ) -> Result<Self> {
        let c1: Vec<Category> = lm1.landmarks.iter().map(|l| l.category).collect();
        let c2: Vec<Category> = lm2.landmarks.iter().map(|l| l.category).collect();
        let bank = build_gene_bank(&c1, &c2, w12, w21, eps_wks)?;
        Self::new(
            c1,
            c2,
            lm1.adjacency.clone(),
            lm2.adjacency.clone(),
            lm1.pairwise.clone(),
            bank,
        )
    }

    pub fn m1(&self) -> usize {
        self.categories_1.len()
    }

    pub fn m2(&self) -> usize {
        self.categories_2.len()
    }

    /// Valid and within the size bounds.
    pub fn admissible(&self, c: &Chromosome) -> bool {
        c.genes.len() == self.m1()
            && c.is_valid(self.m2())
            && (self.m_min..=self.m_max).contains(&c.size())
    }

    pub fn is_ap(&self, g: (usize, usize), h: (usize, usize)) -> bool {
        adjacency_preserving(g, h, &self.adjacency_1, &self.adjacency_2)
    }

    /// Closest adjacent pair `(l+, l~)` with `l+` matched and `l~` unprocessed;
    /// first in `(l+, l~)` order among equal distances.
    fn closest_pair(&self, matched: &BTreeSet<usize>, unprocessed: &BTreeSet<usize>) -> Option<(usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for &l in matched {
            for &r in &self.adjacency_1[l] {
                if !unprocessed.contains(&r) {
                    continue;
                }
                let d = self.distances_1[l][r];
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, l, r));
                }
            }
        }
        best.map(|(_, l, r)| (l, r))
    }
}

/// Scores matches and proposes functional-map guided targets.
pub trait Oracle: Sync {
    /// Fitness energy of the chromosome's match; lower is fitter.
    fn fitness(&self, c: &Chromosome) -> Result<f64>;

    /// For every source landmark, the target landmark closest to its image
    /// under the pointwise map induced by the chromosome's match.
    fn guided_targets(&self, c: &Chromosome) -> Result<Vec<usize>>;
}

#[cfg(test)]
pub(crate) mod testing;
