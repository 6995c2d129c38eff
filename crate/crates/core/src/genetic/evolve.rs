use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::{
    create_random_chromosome, crossover, mutate_fmap_guidance, mutate_growth, mutate_shrinkage,
};
use super::{Chromosome, GaParams, Oracle, Problem};
use crate::error::{Error, Result};

/// Weights are floored so a zero energy stays finite.
const MIN_ENERGY: f64 = 1e-12;
const INIT_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub chromosome: Chromosome,
    pub e_fit: f64,
}

/// Distinct admissible chromosomes sorted fittest first.
#[derive(Debug, Clone, Default)]
pub struct Population {
    members: Vec<Member>,
    seen: HashSet<Chromosome>,
}

impl Population {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn contains(&self, c: &Chromosome) -> bool {
        self.seen.contains(c)
    }

    /// Adds a chromosome unless already present; returns whether it was added.
    /// Call [`Population::truncate`] to restore ordering and capacity.
    pub fn insert(&mut self, chromosome: Chromosome, e_fit: f64) -> bool {
        if !self.seen.insert(chromosome.clone()) {
            return false;
        }
        self.members.push(Member { chromosome, e_fit });
        true
    }

    /// Sorts by energy (gene array breaks ties) and keeps the `capacity` fittest.
    pub fn truncate(&mut self, capacity: usize) {
        self.members.sort_by(|a, b| {
            a.e_fit
                .total_cmp(&b.e_fit)
                .then_with(|| a.chromosome.cmp(&b.chromosome))
        });
        for m in self.members.drain(capacity.min(self.members.len())..) {
            self.seen.remove(&m.chromosome);
        }
    }

    pub fn best(&self) -> Option<&Member> {
        self.members.first()
    }

    pub fn mean_energy(&self) -> f64 {
        self.members.iter().map(|m| m.e_fit).sum::<f64>() / self.members.len().max(1) as f64
    }
}

fn evaluate_all<O: Oracle + ?Sized>(oracle: &O, cs: &[Chromosome]) -> Vec<Option<f64>> {
    cs.par_iter()
        .map(|c| oracle.fitness(c).ok().filter(|e| e.is_finite()))
        .collect()
}

/// Random chromosomes admitted while distinct and no more energetic than
/// `e_max`, until the population is full or `max_attempts` were built.
/// Chromosomes are generated in batches and evaluated concurrently; the
/// outcome does not depend on the number of threads.
pub fn init_population<R: Rng, O: Oracle + ?Sized>(
    problem: &Problem,
    oracle: &O,
    params: &GaParams,
    rng: &mut R,
) -> Result<Population> {
    let mut pop = Population::new();
    let mut attempts = 0;
    while pop.len() < params.population && attempts < params.max_attempts {
        let batch = INIT_BATCH.min(params.max_attempts - attempts);
        attempts += batch;
        let mut fresh: Vec<Chromosome> = Vec::new();
        for _ in 0..batch {
            if let Some(c) = create_random_chromosome(problem, rng) {
                if !pop.contains(&c) && !fresh.contains(&c) {
                    fresh.push(c);
                }
            }
        }
        for (c, e) in fresh.iter().zip(evaluate_all(oracle, &fresh)) {
            if pop.len() >= params.population {
                break;
            }
            if let Some(e) = e.filter(|&e| e <= params.e_max) {
                pop.insert(c.clone(), e);
            }
        }
    }
    if pop.is_empty() {
        return Err(Error::NoAdmissibleChromosomes(attempts));
    }
    pop.truncate(params.population);
    Ok(pop)
}

/// `k` distinct indices drawn one after another with probability
/// proportional to `1 / E` among those not yet drawn.
pub fn roulette_draw<R: Rng>(energies: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let mut weights: Vec<f64> = energies.iter().map(|e| 1.0 / e.max(MIN_ENERGY)).collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(energies.len()) {
        let total: f64 = weights.iter().sum();
        let mut r = rng.gen::<f64>() * total;
        let mut pick = None;
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            pick = Some(i);
            if r < w {
                break;
            }
            r -= w;
        }
        let i = pick.expect("a remaining index");
        weights[i] = 0.0;
        out.push(i);
    }
    out
}

/// Half the population drawn by inverse-energy roulette, paired in draw order.
pub fn select_parents<R: Rng>(energies: &[f64], rng: &mut R) -> Vec<(usize, usize)> {
    roulette_draw(energies, energies.len() / 2, rng)
        .chunks_exact(2)
        .map(|p| (p[0], p[1]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_e_fit: f64,
    pub mean_e_fit: f64,
    pub population_size: usize,
    pub best: Chromosome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<Vec<Chromosome>>,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub best: Chromosome,
    pub best_e_fit: f64,
    /// Generations run after initialization.
    pub generations: usize,
    pub converged: bool,
    pub records: Vec<GenerationRecord>,
    pub population: Population,
}

fn record(pop: &Population, generation: usize, with_population: bool) -> GenerationRecord {
    let best = pop.best().expect("non-empty population");
    GenerationRecord {
        generation,
        best_e_fit: best.e_fit,
        mean_e_fit: pop.mean_energy(),
        population_size: pop.len(),
        best: best.chromosome.clone(),
        population: with_population
            .then(|| pop.members().iter().map(|m| m.chromosome.clone()).collect()),
    }
}

fn mutate<R: Rng, O: Oracle + ?Sized>(
    problem: &Problem,
    oracle: &O,
    params: &GaParams,
    mut c: Chromosome,
    rng: &mut R,
) -> Chromosome {
    if rng.gen_bool(params.growth) {
        if let Ok(m) = mutate_growth(problem, oracle, &c, rng) {
            c = m;
        }
    }
    if rng.gen_bool(params.shrinkage) {
        if let Ok(m) = mutate_shrinkage(problem, oracle, &c, params.n_sh, rng) {
            c = m;
        }
    }
    if rng.gen_bool(params.guidance) {
        if let Ok(m) = mutate_fmap_guidance(problem, oracle, &c, rng) {
            c = m;
        }
    }
    c
}

/// Runs the generational loop from a fresh population.
///
/// Each generation selects parents, recombines them, mutates the offspring
/// (growth, shrinkage, guidance, each independently), admits distinct
/// offspring within `e_max`, and keeps the `population` fittest. Stops once
/// the fittest chromosome has been unchanged for `patience` generations
/// with energy at most `convergence_threshold`, or after `max_generations`.
pub fn evolve<R: Rng, O: Oracle + ?Sized>(
    problem: &Problem,
    oracle: &O,
    params: &GaParams,
    rng: &mut R,
) -> Result<Evolution> {
    let mut pop = init_population(problem, oracle, params, rng)?;
    let logs_population = |g: usize| {
        params.population_log_interval > 0 && g.is_multiple_of(params.population_log_interval)
    };
    let mut records = vec![record(&pop, 0, logs_population(0))];
    let mut unchanged = 0;
    let mut converged = false;
    let mut generation = 0;

    while generation < params.max_generations {
        generation += 1;
        let energies: Vec<f64> = pop.members().iter().map(|m| m.e_fit).collect();
        let mut offspring = Vec::new();
        for (i, j) in select_parents(&energies, rng) {
            let (a, b) = (&pop.members()[i].chromosome, &pop.members()[j].chromosome);
            let (ca, cb) = if rng.gen_bool(params.crossover) {
                crossover(problem, a, b, rng)
            } else {
                (a.clone(), b.clone())
            };
            offspring.push(ca);
            offspring.push(cb);
        }
        let mut fresh: Vec<Chromosome> = Vec::new();
        for c in offspring {
            let c = mutate(problem, oracle, params, c, rng);
            if !pop.contains(&c) && !fresh.contains(&c) {
                fresh.push(c);
            }
        }
        for (c, e) in fresh.iter().zip(evaluate_all(oracle, &fresh)) {
            if let Some(e) = e.filter(|&e| e <= params.e_max) {
                pop.insert(c.clone(), e);
            }
        }
        pop.truncate(params.population);
        let best = pop.best().expect("non-empty population");
        if records.last().map(|r| &r.best) == Some(&best.chromosome) {
            unchanged += 1;
        } else {
            unchanged = 0;
        }
        let done = unchanged >= params.patience && best.e_fit <= params.convergence_threshold;
        let last = done || generation == params.max_generations;
        records.push(record(&pop, generation, last || logs_population(generation)));
        if done {
            converged = true;
            break;
        }
    }

    let best = pop.best().expect("non-empty population").clone();
    Ok(Evolution {
        best: best.chromosome,
        best_e_fit: best.e_fit,
        generations: generation,
        converged,
        records,
        population: pop,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testing::{ring_problem, IdentityOracle};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roulette_first_draw_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 60_000;
        let first = (0..n)
            .filter(|_| roulette_draw(&[0.02, 0.04], 1, &mut rng)[0] == 0)
            .count();
        let p = first as f64 / n as f64;
        assert!((p - 2.0 / 3.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn roulette_uniform_for_equal_energies() {
        // chi-square against uniform, 9 degrees of freedom
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            counts[roulette_draw(&[0.03; 10], 1, &mut rng)[0]] += 1;
        }
        let expected = n as f64 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99th percentile of chi-square with 9 dof
        assert!(chi2 < 21.666, "{chi2}");
    }

    #[test]
    fn roulette_handles_zero_energy_and_draws_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = roulette_draw(&[0.0, 0.5, 0.5, 0.5], 4, &mut rng);
        let mut s = d.clone();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3]);
        assert_eq!(d[0], 0);
        assert_eq!(select_parents(&[0.1; 9], &mut rng).len(), 2);
    }

    #[test]
    fn duplicate_insert_ignored() {
        let mut pop = Population::new();
        let c = Chromosome { genes: vec![Some(0)] };
        assert!(pop.insert(c.clone(), 0.01));
        assert!(!pop.insert(c, 0.01));
        assert_eq!(pop.len(), 1);
    }

    #[test]
    fn zero_threshold_rejects_everything() {
        let p = ring_problem(9, 9);
        let params = GaParams {
            e_max: 0.0,
            max_attempts: 200,
            ..GaParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = init_population(&p, &IdentityOracle(9), &params, &mut rng).unwrap_err();
        assert!(matches!(err, Error::NoAdmissibleChromosomes(200)));
    }

    fn small_params() -> GaParams {
        GaParams {
            population: 30,
            max_attempts: 600,
            e_max: 0.2,
            patience: 10,
            max_generations: 80,
            convergence_threshold: 0.05,
            population_log_interval: 5,
            ..GaParams::default()
        }
    }

    #[test]
    fn evolution_improves_monotonically_and_reproduces() {
        let p = ring_problem(12, 12);
        let o = IdentityOracle(12);
        let run = |seed| evolve(&p, &o, &small_params(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let a = run(5);
        for w in a.records.windows(2) {
            assert!(w[1].best_e_fit <= w[0].best_e_fit);
        }
        for m in a.population.members() {
            assert!(p.admissible(&m.chromosome));
            assert!(m.e_fit <= small_params().e_max);
        }
        let b = run(5);
        assert_eq!(
            serde_json::to_string(&a.records).unwrap(),
            serde_json::to_string(&b.records).unwrap()
        );
        assert!(a.records.last().unwrap().population.is_some());
        assert!(a.records[0].population.is_some());
        assert!(a.records[1].population.is_none());
    }

    #[test]
    fn converges_to_identity_on_ring() {
        let p = ring_problem(12, 12);
        let r = evolve(&p, &IdentityOracle(12), &small_params(), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let right = r.best.pairs().iter().filter(|(s, t)| s == t).count();
        assert!(right >= 11, "{:?}", r.best);
        assert!(r.converged);
    }
}
