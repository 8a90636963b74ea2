//! Biased random-key genetic algorithm over packing sequence and
//! orientations.
//!
//! A chromosome for an `n`-item instance holds `2n` keys in `[0, 1)`. The
//! first `n` keys sort the items into a packing sequence; key `n + i` picks
//! the orientation of item `i`. Offspring that repeat an already
//! decoded sequence and orientation assignment are replaced by random
//! immigrants, so no decode is spent twice on the same assignment. Spaces are then chosen by whichever
//! [`Strategy`] the caller plugs in, which gives the GA+LWSC, GA+DBLF and
//! GA+DFTRC variants from one engine.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundingBox, Item, OrientationCode};
use crate::strategy::{evaluate, greedy_lwsc, Solution, Strategy, StrategyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaError {
    #[error("chromosome has {got} keys, expected {expected}")]
    ChromosomeLength { expected: usize, got: usize },
    #[error("key {0} is outside [0, 1)")]
    KeyOutOfRange(f64),
    #[error("invalid GA parameters: {0}")]
    Params(&'static str),
    #[error("DFTRC grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    keys: Vec<f64>,
}

impl Chromosome {
    pub fn new(keys: Vec<f64>) -> Result<Self, GaError> {
        if let Some(&k) = keys.iter().find(|k| !(0.0..1.0).contains(*k)) {
            return Err(GaError::KeyOutOfRange(k));
        }
        Ok(Self { keys })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self { keys: (0..2 * n).map(|_| rng.gen::<f64>()).collect() }
    }

    pub fn keys(&self) -> &[f64] {
        &self.keys
    }

    /// Sequence and per-step orientations encoded by the keys.
    pub fn genes(&self, n: usize) -> Result<(Vec<usize>, Vec<OrientationCode>), GaError> {
        if self.keys.len() != 2 * n {
            return Err(GaError::ChromosomeLength { expected: 2 * n, got: self.keys.len() });
        }
        let mut sequence: Vec<usize> = (0..n).collect();
        // stable: equal keys keep ascending id order
        sequence.sort_by(|&a, &b| self.keys[a].total_cmp(&self.keys[b]));
        let orientations = sequence.iter().map(|&id| key_to_code(self.keys[n + id])).collect();
        Ok((sequence, orientations))
    }
}

fn key_to_code(key: f64) -> OrientationCode {
    OrientationCode::ALL[((key * 6.0) as usize).min(5)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    pub elite_fraction: f64,
    pub mutant_fraction: f64,
    /// Probability that offspring inherit a key from the elite parent.
    pub elite_inherit_prob: f64,
    pub generations: usize,
    pub seed: u64,
}

impl GaParams {
    /// Population `30·n` capped at 500, 15% elites, 15% mutants, ρ = 0.7,
    /// 200 generations.
    pub fn for_instance(n: usize, seed: u64) -> Self {
        Self {
            population_size: (30 * n).clamp(4, 500),
            elite_fraction: 0.15,
            mutant_fraction: 0.15,
            elite_inherit_prob: 0.7,
            generations: 200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GaError> {
        if self.population_size < 2 {
            return Err(GaError::Params("population must hold at least two chromosomes"));
        }
        if !(self.elite_fraction > 0.0 && self.mutant_fraction >= 0.0) {
            return Err(GaError::Params("elite fraction must be positive"));
        }
        if self.elite_fraction + self.mutant_fraction >= 1.0 {
            return Err(GaError::Params("elite and mutant fractions must sum below 1"));
        }
        if !(0.5..1.0).contains(&self.elite_inherit_prob) {
            return Err(GaError::Params("elite inheritance probability must lie in [0.5, 1)"));
        }
        Ok(())
    }

    fn split(&self) -> (usize, usize) {
        let p = self.population_size as f64;
        let elites = ((p * self.elite_fraction).round() as usize).max(1);
        let mutants = ((p * self.mutant_fraction).round() as usize)
            .min(self.population_size - elites - 1);
        (elites, mutants)
    }
}

pub fn decode(chrom: &Chromosome, items: &[Item], strategy: &Strategy) -> Result<Solution, GaError> {
    let (sequence, orientations) = chrom.genes(items.len())?;
    Ok(evaluate(items, &sequence, &orientations, strategy)?)
}

/// Outcome of a GA run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evolution {
    pub best: Solution,
    /// Best objective after the initial population and after each generation.
    pub best_by_generation: Vec<u64>,
}

struct Member {
    chrom: Chromosome,
    solution: Solution,
}

fn decode_all(
    chroms: Vec<Chromosome>,
    items: &[Item],
    strategy: &Strategy,
) -> Result<Vec<Member>, GaError> {
    chroms
        .into_par_iter()
        .map(|chrom| {
            let solution = decode(&chrom, items, strategy)?;
            Ok(Member { chrom, solution })
        })
        .collect()
}

/// Orders by objective, with repeats of an already-ranked decoding moved
/// behind every distinct one so copies cannot crowd out the elite set.
/// Otherwise equal members keep their population slot order.
fn rank(population: &mut Vec<Member>) {
    population.sort_by_key(|m| m.solution.sa);
    let mut seen = HashSet::new();
    let (distinct, repeats): (Vec<Member>, Vec<Member>) = population
        .drain(..)
        .partition(|m| seen.insert(m.solution.layout.clone()));
    population.extend(distinct);
    population.extend(repeats);
}

/// Random redraws allowed for a chromosome whose assignment was already
/// decoded; small instances can run out of unseen assignments.
const IMMIGRANT_TRIES: usize = 8;

pub fn evolve(items: &[Item], params: &GaParams, strategy: &Strategy) -> Result<Solution, GaError> {
    Ok(evolve_with_history(items, params, strategy)?.best)
}

pub fn evolve_with_history(
    items: &[Item],
    params: &GaParams,
    strategy: &Strategy,
) -> Result<Evolution, GaError> {
    params.validate()?;
    if items.is_empty() {
        return Err(StrategyError::EmptyInstance.into());
    }
    let n = items.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (n_elite, n_mutant) = params.split();
    let n_offspring = params.population_size - n_elite - n_mutant;

    let initial: Vec<Chromosome> =
        (0..params.population_size).map(|_| Chromosome::random(n, &mut rng)).collect();
    let mut seen = HashSet::new();
    for chrom in &initial {
        seen.insert(chrom.genes(n)?);
    }
    let mut population = decode_all(initial, items, strategy)?;
    rank(&mut population);
    let mut history = vec![population[0].solution.sa];

    for _ in 0..params.generations {
        let mut fresh = Vec::with_capacity(n_mutant + n_offspring);
        for _ in 0..n_mutant {
            fresh.push(Chromosome::random(n, &mut rng));
        }
        for _ in 0..n_offspring {
            let elite = &population[rng.gen_range(0..n_elite)].chrom;
            let other = &population[rng.gen_range(n_elite..population.len())].chrom;
            let keys = elite
                .keys
                .iter()
                .zip(&other.keys)
                .map(|(&e, &o)| if rng.gen::<f64>() < params.elite_inherit_prob { e } else { o })
                .collect();
            fresh.push(Chromosome { keys });
        }
        for chrom in &mut fresh {
            let mut tries = 0;
            while !seen.insert(chrom.genes(n)?) && tries < IMMIGRANT_TRIES {
                *chrom = Chromosome::random(n, &mut rng);
                tries += 1;
            }
        }

        population.truncate(n_elite);
        population.extend(decode_all(fresh, items, strategy)?);
        rank(&mut population);
        history.push(population[0].solution.sa);
    }

    Ok(Evolution {
        best: population.swap_remove(0).solution,
        best_by_generation: history,
    })
}

/// Runs DFTRC-decoded evolution once per target bin and keeps the best.
/// Ties go to the earlier grid entry.
pub fn grid_search_dftrc(
    items: &[Item],
    params: &GaParams,
    grid: &[BoundingBox],
) -> Result<Solution, GaError> {
    let mut best: Option<Solution> = None;
    for &target in grid {
        let sol = evolve(items, params, &Strategy::Dftrc { target })?;
        if best.as_ref().is_none_or(|b| sol.sa < b.sa) {
            best = Some(sol);
        }
    }
    best.ok_or(GaError::EmptyGrid)
}

pub const DEFAULT_GRID_SCALES: [f64; 6] = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5];

/// Instance-adaptive DFTRC targets.
///
/// The greedy LWSC box is rescaled to the total item volume (by the cube
/// root of the volume ratio), then each of its distinct axis permutations is
/// stretched by every factor in `scales`.
pub fn dftrc_grid(items: &[Item], scales: &[f64]) -> Result<Vec<BoundingBox>, GaError> {
    let greedy = greedy_lwsc(items)?;
    let volume: u64 = items.iter().map(Item::volume).sum();
    let shrink = (volume as f64 / greedy.bbox.volume() as f64).cbrt();
    let [l, w, h] = greedy.bbox.extents();
    let mut perms = vec![[l, w, h], [l, h, w], [w, l, h], [w, h, l], [h, l, w], [h, w, l]];
    let mut seen = HashSet::new();
    perms.retain(|p| seen.insert(*p));

    let mut grid = Vec::new();
    for &s in scales {
        for p in &perms {
            let side = |d: u32| ((d as f64 * shrink * s).ceil() as u32).max(1);
            let target = BoundingBox::new(side(p[0]), side(p[1]), side(p[2]));
            if !grid.contains(&target) {
                grid.push(target);
            }
        }
    }
    Ok(grid)
}
