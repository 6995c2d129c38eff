//! Synthetic landmark problems for operator tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Chromosome, GeneBank, Oracle, Problem};
use crate::descriptors::Category;
use crate::error::Result;

fn pattern(l: usize) -> Category {
    [Category::Max, Category::Center, Category::Min][l % 3]
}

fn ring_adjacency(m: usize) -> Vec<Vec<usize>> {
    (0..m)
        .map(|l| {
            let mut a = vec![(l + 1) % m, (l + m - 1) % m];
            a.sort_unstable();
            a.dedup();
            a.retain(|&r| r != l);
            a
        })
        .collect()
}

/// Landmarks on two rings with categories cycling Max, Center, Min.
/// The bank of `l` holds `l` and `l + 3` when those exist on the target.
pub fn ring_problem(m1: usize, m2: usize) -> Problem {
    let c1: Vec<Category> = (0..m1).map(pattern).collect();
    let c2: Vec<Category> = (0..m2).map(pattern).collect();
    let distances = (0..m1)
        .map(|a| {
            (0..m1)
                .map(|b| {
                    let d = a.abs_diff(b);
                    d.min(m1 - d) as f64
                })
                .collect()
        })
        .collect();
    let bank = GeneBank {
        candidates: (0..m1)
            .map(|l| [l, l + 3].into_iter().filter(|&t| t < m2).collect())
            .collect(),
    };
    Problem::new(c1, c2, ring_adjacency(m1), ring_adjacency(m2), distances, bank).unwrap()
}

fn random_graph(m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut adj = ring_adjacency(m);
    for a in 0..m {
        for b in a + 1..m {
            if rng.gen_bool(0.25) && !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

/// Random categories, adjacency, distances and bank; always has a
/// prominent landmark.
pub fn random_problem(seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m1 = rng.gen_range(4..24);
    let m2 = rng.gen_range(4..24);
    let cat = |rng: &mut ChaCha8Rng| [Category::Max, Category::Min, Category::Center][rng.gen_range(0..3)];
    let c1: Vec<Category> = (0..m1).map(|_| cat(&mut rng)).collect();
    let mut c2: Vec<Category> = (0..m2).map(|_| cat(&mut rng)).collect();
    c2[0] = c1[0];
    let mut distances = vec![vec![0.0; m1]; m1];
    for a in 0..m1 {
        for b in a + 1..m1 {
            let d = rng.gen_range(0.05..1.0);
            distances[a][b] = d;
            distances[b][a] = d;
        }
    }
    let mut candidates: Vec<Vec<usize>> = (0..m1)
        .map(|l| {
            (0..m2)
                .filter(|&t| c2[t] == c1[l] && rng.gen_bool(0.4))
                .collect()
        })
        .collect();
    candidates[0] = vec![0];
    let adj1 = random_graph(m1, &mut rng);
    let adj2 = random_graph(m2, &mut rng);
    Problem::new(c1, c2, adj1, adj2, distances, GeneBank { candidates }).unwrap()
}

/// Prefers the identity assignment: energy grows with mismatched and
/// missing genes; guidance maps landmark `l` to `l mod m2`.
pub struct IdentityOracle(pub usize);

impl Oracle for IdentityOracle {
    fn fitness(&self, c: &Chromosome) -> Result<f64> {
        let wrong = c.pairs().iter().filter(|(s, t)| s != t).count();
        let missing = c.genes.len() - c.size();
        Ok(0.001 + 0.01 * wrong as f64 + 0.002 * missing as f64)
    }

    fn guided_targets(&self, c: &Chromosome) -> Result<Vec<usize>> {
        Ok((0..c.genes.len()).map(|l| l % self.0).collect())
    }
}
