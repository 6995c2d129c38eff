use std::collections::BTreeSet;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

use super::{Chromosome, Oracle, Problem};
use crate::descriptors::Category;
use crate::error::Result;

/// First candidate target that is adjacency preserving with `anchor` and
/// unused in `c`.
fn pick_gene(
    problem: &Problem,
    c: &Chromosome,
    anchor: (usize, usize),
    source: usize,
    candidates: impl IntoIterator<Item = usize>,
) -> Option<usize> {
    candidates
        .into_iter()
        .find(|&t| problem.is_ap((source, t), anchor) && !c.uses_target(t))
}

fn shuffled<R: Rng>(items: &[usize], rng: &mut R) -> Vec<usize> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    v
}

/// Builds a chromosome by growing adjacency-preserving genes out from a
/// prominent seed, then trims it to a random size. `None` when the grown
/// match is smaller than `m_min`.
///
/// Bank and same-category candidates are tried in random order.
pub fn create_random_chromosome<R: Rng>(problem: &Problem, rng: &mut R) -> Option<Chromosome> {
    let m1 = problem.m1();
    let mut c = Chromosome::empty(m1);
    let seed = *problem.prominent.choose(rng)?;
    c.genes[seed] = Some(*problem.bank.candidates[seed].choose(rng)?);
    let mut matched = BTreeSet::from([seed]);
    let mut unprocessed: BTreeSet<usize> = (0..m1).filter(|&l| l != seed).collect();

    while let Some((lp, lt)) = problem.closest_pair(&matched, &unprocessed) {
        let anchor = (lp, c.genes[lp].expect("matched gene"));
        let mut candidates = shuffled(&problem.bank.candidates[lt], rng);
        candidates.extend(shuffled(&problem.origins[lt], rng));
        let g = pick_gene(problem, &c, anchor, lt, candidates);
        c.genes[lt] = g;
        unprocessed.remove(&lt);
        if g.is_some() {
            matched.insert(lt);
        }
    }

    if c.size() < problem.m_min {
        return None;
    }
    let target_size = rng.gen_range(problem.m_min..=problem.m_max.max(problem.m_min));
    while c.size() > target_size {
        let centers: Vec<usize> = c
            .matched_sources()
            .into_iter()
            .filter(|&l| problem.categories_1[l] == Category::Center)
            .collect();
        let Some(&l) = centers.choose(rng) else { break };
        c.genes[l] = None;
    }
    Some(c)
}

fn crossover_child<R: Rng>(
    problem: &Problem,
    parent: &Chromosome,
    other: &Chromosome,
    seed: usize,
    rng: &mut R,
) -> Chromosome {
    let m1 = problem.m1();
    let mut c = Chromosome::empty(m1);
    c.genes[seed] = parent.genes[seed];
    let mut matched = BTreeSet::from([seed]);
    let mut unprocessed: BTreeSet<usize> = (0..m1).filter(|&l| l != seed).collect();

    while !unprocessed.is_empty() {
        let (lt, g) = if let Some((lp, lt)) = problem.closest_pair(&matched, &unprocessed) {
            let anchor = (lp, c.genes[lp].expect("matched gene"));
            let mut candidates: Vec<usize> = Vec::new();
            for t in [parent.genes[lt], other.genes[lt]].into_iter().flatten() {
                if !candidates.contains(&t) {
                    candidates.push(t);
                }
            }
            candidates.extend(shuffled(&problem.bank.candidates[lt], rng));
            (lt, pick_gene(problem, &c, anchor, lt, candidates))
        } else {
            let pick = parent
                .pairs()
                .into_iter()
                .filter(|&(s, t)| unprocessed.contains(&s) && !c.uses_target(t))
                .choose(rng);
            match pick {
                Some((s, t)) => (s, Some(t)),
                None => break,
            }
        };
        c.genes[lt] = g;
        unprocessed.remove(&lt);
        if g.is_some() {
            matched.insert(lt);
        }
    }
    c
}

/// Recombines two parents around a seed landmark matched by both, preferring
/// parent genes, then bank genes. Parents are copied when they share no
/// matched landmark; a child below `m_min` is replaced by its parent.
pub fn crossover<R: Rng>(
    problem: &Problem,
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut R,
) -> (Chromosome, Chromosome) {
    let common: Vec<usize> = (0..problem.m1())
        .filter(|&l| a.genes[l].is_some() && b.genes[l].is_some())
        .collect();
    let Some(&seed) = common.choose(rng) else {
        return (a.clone(), b.clone());
    };
    let ca = crossover_child(problem, a, b, seed, rng);
    let cb = crossover_child(problem, b, a, seed, rng);
    let keep = |child: Chromosome, parent: &Chromosome| {
        if child.size() < problem.m_min {
            parent.clone()
        } else {
            child
        }
    };
    (keep(ca, a), keep(cb, b))
}

/// Tries to fill every empty gene, in random order, first with the
/// functional-map guided target and then with one random bank gene.
pub fn mutate_growth<R: Rng, O: Oracle + ?Sized>(
    problem: &Problem,
    oracle: &O,
    c: &Chromosome,
    rng: &mut R,
) -> Result<Chromosome> {
    let mut empty: Vec<usize> = (0..problem.m1()).filter(|&l| c.genes[l].is_none()).collect();
    if empty.is_empty() {
        return Ok(c.clone());
    }
    empty.shuffle(rng);
    let guided = oracle.guided_targets(c)?;
    let mut out = c.clone();
    for l in empty {
        let t = guided[l];
        if !out.uses_target(t) {
            out.genes[l] = Some(t);
            continue;
        }
        if let Some(&t) = problem.bank.candidates[l].choose(rng) {
            if !out.uses_target(t) {
                out.genes[l] = Some(t);
            }
        }
    }
    Ok(out)
}

/// Empties up to `n_sh` random matched centers one at a time and keeps the
/// fittest of the variants and the original. Variants below `m_min` are
/// not considered.
pub fn mutate_shrinkage<R: Rng, O: Oracle + ?Sized>(
    problem: &Problem,
    oracle: &O,
    c: &Chromosome,
    n_sh: usize,
    rng: &mut R,
) -> Result<Chromosome> {
    let centers: Vec<usize> = c
        .matched_sources()
        .into_iter()
        .filter(|&l| problem.categories_1[l] == Category::Center)
        .collect();
    if centers.is_empty() || c.size() <= problem.m_min {
        return Ok(c.clone());
    }
    let chosen: Vec<usize> = centers.choose_multiple(rng, n_sh.min(centers.len())).copied().collect();
    let mut best = c.clone();
    let mut best_e = oracle.fitness(c)?;
    for l in chosen {
        let mut v = c.clone();
        v.genes[l] = None;
        let e = oracle.fitness(&v)?;
        if e < best_e {
            best = v;
            best_e = e;
        }
    }
    Ok(best)
}

/// Reassigns every matched source to its guided target. Colliding sources
/// keep one winner: non-centers beat centers, otherwise uniformly random.
/// Reverts when the result falls below `m_min`.
pub fn mutate_fmap_guidance<R: Rng, O: Oracle + ?Sized>(
    problem: &Problem,
    oracle: &O,
    c: &Chromosome,
    rng: &mut R,
) -> Result<Chromosome> {
    let guided = oracle.guided_targets(c)?;
    let mut claims: Vec<Vec<usize>> = vec![Vec::new(); problem.m2()];
    for l in c.matched_sources() {
        claims[guided[l]].push(l);
    }
    let mut out = Chromosome::empty(problem.m1());
    for (t, sources) in claims.iter().enumerate() {
        if sources.is_empty() {
            continue;
        }
        let salient: Vec<usize> = sources
            .iter()
            .copied()
            .filter(|&l| problem.categories_1[l] != Category::Center)
            .collect();
        let pool = if salient.is_empty() { sources } else { &salient };
        let winner = if pool.len() == 1 {
            pool[0]
        } else {
            *pool.choose(rng).expect("non-empty")
        };
        out.genes[winner] = Some(t);
    }
    if out.size() < problem.m_min {
        return Ok(c.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::testing::{random_problem, ring_problem, IdentityOracle};
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity(m: usize) -> Chromosome {
        Chromosome {
            genes: (0..m).map(Some).collect(),
        }
    }

    #[test]
    fn ring_identity_is_reachable() {
        let p = ring_problem(12, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut found = false;
        for _ in 0..500 {
            if let Some(c) = create_random_chromosome(&p, &mut rng) {
                assert!(p.admissible(&c));
                if c == identity(12) {
                    found = true;
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn too_small_matches_rejected() {
        // two matchable adjacent landmarks, m_min = 4
        let mut p = ring_problem(6, 6);
        for l in 2..6 {
            p.bank.candidates[l].clear();
            p.origins[l].clear();
        }
        assert_eq!(p.m_min, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            assert!(create_random_chromosome(&p, &mut rng).is_none());
        }
    }

    #[test]
    fn crossover_of_identity_with_itself_is_identity() {
        let p = ring_problem(10, 10);
        let id = identity(10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (a, b) = crossover(&p, &id, &id, &mut rng);
            assert_eq!(a, id);
            assert_eq!(b, id);
        }
    }

    #[test]
    fn crossover_without_common_landmark_copies() {
        let p = ring_problem(6, 6);
        let a = Chromosome {
            genes: vec![Some(0), Some(1), Some(2), None, None, None],
        };
        let b = Chromosome {
            genes: vec![None, None, None, Some(3), Some(4), Some(5)],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(crossover(&p, &a, &b, &mut rng), (a, b));
    }

    #[test]
    fn growth_restores_emptied_gene() {
        let p = ring_problem(9, 9);
        let mut c = identity(9);
        c.genes[4] = None;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = mutate_growth(&p, &IdentityOracle(9), &c, &mut rng).unwrap();
        assert_eq!(g, identity(9));
        assert_eq!(mutate_growth(&p, &IdentityOracle(9), &g, &mut rng).unwrap(), g);
    }

    #[test]
    fn shrinkage_never_worsens_or_undershoots() {
        let p = ring_problem(12, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut c = identity(12);
        c.genes.swap(1, 2);
        let o = IdentityOracle(12);
        let s = mutate_shrinkage(&p, &o, &c, 6, &mut rng).unwrap();
        assert!(o.fitness(&s).unwrap() <= o.fitness(&c).unwrap());
        assert!(s.size() >= p.m_min);
        // no matched centers
        let mut only_salient = Chromosome::empty(12);
        for l in (0..12).filter(|&l| p.categories_1[l] != Category::Center) {
            only_salient.genes[l] = Some(l);
        }
        assert_eq!(mutate_shrinkage(&p, &o, &only_salient, 6, &mut rng).unwrap(), only_salient);
    }

    #[test]
    fn guidance_fixed_point_and_priority() {
        let p = ring_problem(9, 9);
        let id = identity(9);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(mutate_fmap_guidance(&p, &IdentityOracle(9), &id, &mut rng).unwrap(), id);

        // landmark 0 is Max, 1 is Center; both guided to target 0
        struct Collide;
        impl Oracle for Collide {
            fn fitness(&self, _: &Chromosome) -> Result<f64> {
                Ok(0.0)
            }
            fn guided_targets(&self, c: &Chromosome) -> Result<Vec<usize>> {
                Ok((0..c.genes.len()).map(|l| if l == 1 { 0 } else { l }).collect())
            }
        }
        assert_eq!(p.categories_1[0], Category::Max);
        assert_eq!(p.categories_1[1], Category::Center);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = mutate_fmap_guidance(&p, &Collide, &id, &mut rng).unwrap();
            assert_eq!(g.genes[0], Some(0));
            assert_eq!(g.genes[1], None);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn operators_keep_chromosomes_admissible(seed in any::<u64>()) {
            let p = random_problem(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
            let o = IdentityOracle(p.m2());
            let mut pool = Vec::new();
            for _ in 0..40 {
                if let Some(c) = create_random_chromosome(&p, &mut rng) {
                    prop_assert!(p.admissible(&c), "{:?}", c);
                    pool.push(c);
                }
            }
            for i in 1..pool.len() {
                let (a, b) = crossover(&p, &pool[i - 1], &pool[i], &mut rng);
                prop_assert!(p.admissible(&a) && p.admissible(&b));
                for c in [a, b] {
                    for m in [
                        mutate_growth(&p, &o, &c, &mut rng).unwrap(),
                        mutate_shrinkage(&p, &o, &c, 6, &mut rng).unwrap(),
                        mutate_fmap_guidance(&p, &o, &c, &mut rng).unwrap(),
                    ] {
                        prop_assert!(p.admissible(&m), "{:?}", m);
                    }
                }
            }
        }

        #[test]
        fn crossover_children_only_use_known_genes(seed in any::<u64>()) {
            let p = random_problem(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pool: Vec<Chromosome> = (0..30).filter_map(|_| create_random_chromosome(&p, &mut rng)).collect();
            for w in pool.windows(2) {
                let (a, b) = crossover(&p, &w[0], &w[1], &mut rng);
                for child in [a, b] {
                    for (s, t) in child.pairs() {
                        prop_assert!(
                            w[0].genes[s] == Some(t) || w[1].genes[s] == Some(t)
                                || p.bank.candidates[s].contains(&t)
                        );
                    }
                }
            }
        }
    }
}
