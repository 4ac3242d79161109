//! The micro-DE engine: population state, the synchronous generation loop
//! (mutation, crossover, greedy selection), and the termination rule.
//!
//! The engine minimizes throughout; callers optimizing for a maximum negate
//! their objective. One run proceeds as
//!
//! ```text
//! initialize population uniformly inside the bounds     (NFC += N_P)
//! while |BFV - VTR| > EVTR and NFC + N_P <= NFC_Max:
//!     for each member: mutant -> trial -> bound repair
//!     evaluate all trials                                (NFC += N_P)
//!     per slot, keep the trial when f(U) <= f(X)
//! ```
//!
//! The update is synchronous: every trial of generation `g` is built from
//! the generation-`g` population before any survivor replaces a parent. All
//! random draws happen on the single coordinating stream while trials are
//! built, so evaluating the trials in parallel produces bit-identical runs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diversity;
use crate::error::{Error, Result};
use crate::mutation::{crossover, mutant, MutationConfig};

/// Box constraints: one `[min, max)`-style interval per decision variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    /// Builds bounds from per-dimension limits. Every dimension must satisfy
    /// `min < max` and both limits must be finite.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidConfig(
                "bounds must cover at least one dimension".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidConfig(format!(
                "bounds length mismatch: {} lower vs {} upper",
                lower.len(),
                upper.len()
            )));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidConfig(format!(
                    "bounds must satisfy min < max with finite limits; dimension {d} has [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]` replicated over `dimension` variables.
    pub fn symmetric(dimension: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dimension], vec![hi; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, position: &[f64]) -> bool {
        position.len() == self.dimension()
            && position
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    /// One uniform point: `x_d = min_d + rand(0,1) * (max_d - min_d)`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| lo + rng.random_range(0.0..1.0) * (hi - lo))
            .collect()
    }
}

/// One candidate solution with a lazily filled fitness cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    position: Vec<f64>,
    fitness: Option<f64>,
}

impl Individual {
    pub fn new(position: Vec<f64>) -> Self {
        Self {
            position,
            fitness: None,
        }
    }

    pub fn evaluated(position: Vec<f64>, fitness: f64) -> Self {
        Self {
            position,
            fitness: Some(fitness),
        }
    }

    pub fn position(&self) -> &[f64] {
        &self.position
    }

    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }

    fn set_fitness(&mut self, fitness: f64) {
        self.fitness = Some(fitness);
    }
}

/// The evolving state of a run: `N_P` members of a shared dimension plus the
/// generation counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<Individual>,
    generation: u64,
}

impl Population {
    /// Wraps members as generation 0. Requires `N_P >= 2` and one common
    /// dimension.
    pub fn new(members: Vec<Individual>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "population size must be at least 2, got {}",
                members.len()
            )));
        }
        let dimension = members[0].position().len();
        if dimension == 0 {
            return Err(Error::InvalidConfig("members must be non-empty vectors".into()));
        }
        if members.iter().any(|m| m.position().len() != dimension) {
            return Err(Error::InvalidConfig(
                "all members must share one dimension".into(),
            ));
        }
        Ok(Self {
            members,
            generation: 0,
        })
    }

    fn next_generation(&self, members: Vec<Individual>) -> Self {
        Self {
            members,
            generation: self.generation + 1,
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn dimension(&self) -> usize {
        self.members[0].position().len()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn member(&self, index: usize) -> &Individual {
        &self.members[index]
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn positions(&self) -> Vec<&[f64]> {
        self.members.iter().map(|m| m.position()).collect()
    }

    pub fn is_evaluated(&self) -> bool {
        self.members.iter().all(|m| m.fitness().is_some())
    }

    /// Index of the best (lowest-fitness) member; ties go to the lowest
    /// index. Requires a fully evaluated population.
    pub fn best_index(&self) -> Result<usize> {
        if !self.is_evaluated() {
            return Err(Error::InvalidArgument(
                "population is not fully evaluated".into(),
            ));
        }
        let mut best = 0;
        for (i, m) in self.members.iter().enumerate().skip(1) {
            if m.fitness().unwrap() < self.members[best].fitness().unwrap() {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn best(&self) -> Result<&Individual> {
        self.best_index().map(|i| &self.members[i])
    }
}

/// Stop conditions: success when `|BFV - VTR| <= EVTR`, failure when the
/// evaluation budget `NFC_Max` cannot fit another generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminationCriteria {
    /// Fitness value to reach (the known optimum for benchmark problems).
    pub vtr: f64,
    /// Error tolerance around `vtr` that counts as success.
    pub evtr: f64,
    /// Budget of objective-function calls, including the initial pass.
    pub nfc_max: u64,
}

impl TerminationCriteria {
    pub fn new(vtr: f64, evtr: f64, nfc_max: u64) -> Result<Self> {
        if !vtr.is_finite() || !evtr.is_finite() || evtr < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "termination requires finite vtr and evtr >= 0, got vtr={vtr}, evtr={evtr}"
            )));
        }
        Ok(Self { vtr, evtr, nfc_max })
    }

    /// The budget must admit at least the initial evaluation pass.
    pub fn validate_for(&self, population_size: usize) -> Result<()> {
        if self.nfc_max < population_size as u64 {
            return Err(Error::InvalidConfig(format!(
                "nfc_max = {} cannot cover one evaluation pass of {} members",
                self.nfc_max, population_size
            )));
        }
        Ok(())
    }

    pub fn error_reached(&self, best_value: f64) -> bool {
        (best_value - self.vtr).abs() <= self.evtr
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ErrorReached,
    BudgetExhausted,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::ErrorReached => write!(f, "error_reached"),
            Termination::BudgetExhausted => write!(f, "budget_exhausted"),
        }
    }
}

/// One history row, sampled once per generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationSample {
    pub nfc: u64,
    pub best_value_so_far: f64,
    pub centroid_diversity: f64,
    pub pairwise_diversity: f64,
}

/// The full trace of a run: per-generation best value and diversity, the
/// final best individual, and the stop reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub history: Vec<GenerationSample>,
    pub final_best: Individual,
    pub terminated_by: Termination,
}

impl RunRecord {
    pub fn final_nfc(&self) -> u64 {
        self.history.last().map_or(0, |s| s.nfc)
    }

    pub fn final_best_value(&self) -> f64 {
        self.final_best.fitness().unwrap_or(f64::INFINITY)
    }

    pub fn generations(&self) -> usize {
        self.history.len()
    }
}

/// A minimization objective over real vectors.
///
/// Implementations must be pure: the engine may evaluate a generation's
/// trial vectors concurrently.
pub trait Objective: Sync {
    fn value(&self, position: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn value(&self, position: &[f64]) -> f64 {
        self(position)
    }
}

/// Everything one run needs besides the problem itself.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunConfig {
    pub mutation: MutationConfig,
    pub crossover_rate: f64,
    pub population_size: usize,
    pub termination: TerminationCriteria,
    pub seed: u64,
    /// Evaluate each generation's trial vectors on the rayon pool. Results
    /// are bit-identical to serial evaluation.
    #[serde(default)]
    pub parallel_eval: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.mutation.validate()?;
        self.mutation.scheme.require_population(self.population_size)?;
        self.termination.validate_for(self.population_size)?;
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::InvalidConfig(format!(
                "crossover rate must lie in [0, 1], got {}",
                self.crossover_rate
            )));
        }
        Ok(())
    }
}

/// Uniform random population inside `bounds`, generation 0, fitness
/// unevaluated.
pub fn initialize_population<R: Rng>(
    bounds: &Bounds,
    population_size: usize,
    rng: &mut R,
) -> Result<Population> {
    if population_size < 2 {
        return Err(Error::InvalidConfig(format!(
            "population size must be at least 2, got {population_size}"
        )));
    }
    let members = (0..population_size)
        .map(|_| Individual::new(bounds.sample(rng)))
        .collect();
    Population::new(members)
}

/// Resamples every out-of-bounds coordinate uniformly in its dimension's
/// range; in-bounds coordinates pass through untouched. Consumes one draw
/// per violated coordinate.
pub fn repair_bounds<R: Rng>(position: &mut [f64], bounds: &Bounds, rng: &mut R) {
    for (x, (&lo, &hi)) in position
        .iter_mut()
        .zip(bounds.lower().iter().zip(bounds.upper()))
    {
        // The negated test also catches NaN coordinates.
        if !(*x >= lo && *x <= hi) {
            *x = lo + rng.random_range(0.0..1.0) * (hi - lo);
        }
    }
}

fn evaluate_positions(
    objective: &impl Objective,
    positions: &[Vec<f64>],
    parallel: bool,
) -> Result<Vec<f64>> {
    let values: Vec<f64> = if parallel {
        positions.par_iter().map(|p| objective.value(p)).collect()
    } else {
        positions.iter().map(|p| objective.value(p)).collect()
    };
    for (position, &value) in positions.iter().zip(&values) {
        if !value.is_finite() {
            return Err(Error::Evaluation {
                value,
                position: position.clone(),
            });
        }
    }
    Ok(values)
}

/// Fills every missing fitness cache, charging one function call per member
/// to `nfc`.
pub fn evaluate_population(
    pop: &mut Population,
    objective: &impl Objective,
    parallel: bool,
    nfc: &mut u64,
) -> Result<()> {
    let positions: Vec<Vec<f64>> = pop.members.iter().map(|m| m.position.clone()).collect();
    let values = evaluate_positions(objective, &positions, parallel)?;
    for (member, value) in pop.members.iter_mut().zip(values) {
        member.set_fitness(value);
    }
    *nfc += pop.size() as u64;
    Ok(())
}

/// Advances the population by one synchronous generation.
///
/// All trial vectors are built from the incoming population (consuming the
/// RNG in the documented order), repaired into the bounds, evaluated, and
/// then compared slot-by-slot against their parents; the trial survives on
/// ties. `nfc` is incremented by exactly `N_P`.
#[allow(clippy::too_many_arguments)]
pub fn step_generation<R: Rng>(
    pop: &Population,
    config: &MutationConfig,
    cr: f64,
    bounds: &Bounds,
    objective: &impl Objective,
    parallel_eval: bool,
    rng: &mut R,
    nfc: &mut u64,
) -> Result<Population> {
    if !pop.is_evaluated() {
        return Err(Error::InvalidArgument(
            "step_generation requires a fully evaluated population".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cr) {
        return Err(Error::InvalidArgument(format!(
            "crossover rate must lie in [0, 1], got {cr}"
        )));
    }

    let mut trials = Vec::with_capacity(pop.size());
    for target in 0..pop.size() {
        let v = mutant(config, pop, target, rng)?;
        let mut u = crossover(pop.member(target).position(), &v, cr, rng)?;
        repair_bounds(&mut u, bounds, rng);
        trials.push(u);
    }

    let values = evaluate_positions(objective, &trials, parallel_eval)?;
    *nfc += pop.size() as u64;

    let members = pop
        .members
        .iter()
        .zip(trials.into_iter().zip(values))
        .map(|(parent, (trial, value))| {
            if value <= parent.fitness().unwrap() {
                Individual::evaluated(trial, value)
            } else {
                parent.clone()
            }
        })
        .collect();
    Ok(pop.next_generation(members))
}

fn sample_generation(pop: &Population, nfc: u64, best_value: f64) -> GenerationSample {
    let positions = pop.positions();
    GenerationSample {
        nfc,
        best_value_so_far: best_value,
        centroid_diversity: diversity::centroid_distance(&positions),
        // N_P >= 2 always holds here.
        pairwise_diversity: diversity::pairwise_distance(&positions).unwrap(),
    }
}

/// Runs Algorithm-1 style micro-DE to completion and records the trace.
///
/// The history holds one sample per generation including the initial one,
/// so a budget-terminated run satisfies
/// `final NFC == (generations) * N_P == history.len() * N_P`.
pub fn run(config: &RunConfig, bounds: &Bounds, objective: &impl Objective) -> Result<RunRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut nfc = 0u64;

    let mut pop = initialize_population(bounds, config.population_size, &mut rng)?;
    evaluate_population(&mut pop, objective, config.parallel_eval, &mut nfc)?;

    let mut best = pop.best()?.clone();
    let mut history = vec![sample_generation(&pop, nfc, best.fitness().unwrap())];

    let terminated_by = loop {
        if config.termination.error_reached(best.fitness().unwrap()) {
            break Termination::ErrorReached;
        }
        if nfc + config.population_size as u64 > config.termination.nfc_max {
            break Termination::BudgetExhausted;
        }
        pop = step_generation(
            &pop,
            &config.mutation,
            config.crossover_rate,
            bounds,
            objective,
            config.parallel_eval,
            &mut rng,
            &mut nfc,
        )?;
        let generation_best = pop.best()?;
        if generation_best.fitness().unwrap() <= best.fitness().unwrap() {
            best = generation_best.clone();
        }
        history.push(sample_generation(&pop, nfc, best.fitness().unwrap()));
    };

    Ok(RunRecord {
        history,
        final_best: best,
        terminated_by,
    })
}
