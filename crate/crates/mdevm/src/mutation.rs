//! Mutant-vector construction and binomial crossover.
//!
//! Covers the five classical schemes
//!
//! ```text
//! rand1:  V = X_r1   + F (X_r2   - X_r3)
//! best1:  V = X_best + F (X_r1   - X_r2)
//! t2b1:   V = X_i    + F (X_best - X_i)   + F (X_r1 - X_r2)
//! rand2:  V = X_r1   + F (X_r2   - X_r3)  + F (X_r4 - X_r5)
//! best2:  V = X_best + F (X_r1   - X_r2)  + F (X_r3 - X_r4)
//! ```
//!
//! plus the reduced micro-population forms: with two members `rand1`
//! degenerates to `V = X_1 + F X_2` (a scaled position, not a difference —
//! kept literal on purpose), and populations too small to exclude the
//! target from the donor draw waive that exclusion while keeping donors
//! mutually distinct.
//!
//! The factor `F` comes in three flavours:
//!
//! * [`FactorMode::Cmf`]  — one constant for everything,
//! * [`FactorMode::Srmf`] — one uniform draw per individual per generation,
//! * [`FactorMode::Vrmf`] — one uniform draw per decision variable.
//!
//! Two-term schemes draw their factors independently per term by default;
//! [`MutationConfig::shared_draws`] switches to one draw reused across both
//! terms.
//!
//! # Randomness contract
//!
//! Building one trial vector consumes the RNG in this order, so a run can be
//! traced draw by draw:
//!
//! 1. donor selection — one `random_range(k..pool_len)` per donor
//!    (partial Fisher–Yates over the candidate pool in ascending index
//!    order),
//! 2. `srmf` factors — one `random_range(lo..hi)` per difference term, in
//!    term order,
//! 3. `vrmf` factors — one `random_range(lo..hi)` per (dimension, term)
//!    pair, dimension-major with terms innermost,
//! 4. crossover — one `random_range(0..D)` for the forced coordinate, then
//!    one `random_range(0.0..1.0)` per dimension in ascending order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Population;
use crate::error::{Error, Result};

/// The five supported mutant-vector schemes. The string forms used in
/// configs and CLI flags are `rand1`, `best1`, `t2b1`, `rand2`, `best2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationScheme {
    Rand1,
    Best1,
    #[serde(rename = "t2b1")]
    TargetToBest1,
    Rand2,
    Best2,
}

impl MutationScheme {
    pub const ALL: [MutationScheme; 5] = [
        MutationScheme::Rand1,
        MutationScheme::Best1,
        MutationScheme::TargetToBest1,
        MutationScheme::Rand2,
        MutationScheme::Best2,
    ];

    pub fn id(self) -> &'static str {
        match self {
            MutationScheme::Rand1 => "rand1",
            MutationScheme::Best1 => "best1",
            MutationScheme::TargetToBest1 => "t2b1",
            MutationScheme::Rand2 => "rand2",
            MutationScheme::Best2 => "best2",
        }
    }

    /// Smallest population the scheme is defined for.
    pub fn min_population(self) -> usize {
        match self {
            MutationScheme::Rand1 | MutationScheme::Best1 | MutationScheme::TargetToBest1 => 2,
            MutationScheme::Best2 => 4,
            MutationScheme::Rand2 => 5,
        }
    }

    /// Number of random donors the scheme consumes at population size `n_p`.
    fn donor_count(self, n_p: usize) -> usize {
        match self {
            // Two members: the reduced form V = X_1 + F X_2.
            MutationScheme::Rand1 if n_p == 2 => 2,
            MutationScheme::Rand1 => 3,
            MutationScheme::Best1 | MutationScheme::TargetToBest1 => 2,
            MutationScheme::Best2 => 4,
            MutationScheme::Rand2 => 5,
        }
    }

    /// Number of F-scaled difference terms in the scheme's formula.
    pub fn difference_terms(self) -> usize {
        match self {
            MutationScheme::Rand1 | MutationScheme::Best1 => 1,
            MutationScheme::TargetToBest1 | MutationScheme::Rand2 | MutationScheme::Best2 => 2,
        }
    }

    /// Whether the formula references the population's best member.
    pub fn uses_best(self) -> bool {
        matches!(
            self,
            MutationScheme::Best1 | MutationScheme::TargetToBest1 | MutationScheme::Best2
        )
    }

    pub fn require_population(self, n_p: usize) -> Result<()> {
        if n_p < self.min_population() {
            return Err(Error::InvalidConfig(format!(
                "scheme {} requires a population of at least {} members, got {}",
                self.id(),
                self.min_population(),
                n_p
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for MutationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MutationScheme::ALL
            .into_iter()
            .find(|scheme| scheme.id() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown mutation scheme {s:?}; expected one of rand1, best1, t2b1, rand2, best2"
                ))
            })
    }
}

impl std::fmt::Display for MutationScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// How the mutation factor is drawn. The string forms are `cmf`, `srmf`,
/// `vrmf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FactorMode {
    /// Constant mutation factor.
    Cmf { value: f64 },
    /// Scalar random: one draw per individual per generation, shared across
    /// all decision variables.
    Srmf { lo: f64, hi: f64 },
    /// Vectorized random: a fresh draw per decision variable.
    Vrmf { lo: f64, hi: f64 },
}

impl FactorMode {
    pub fn cmf(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "cmf factor must be positive, got {value}"
            )));
        }
        Ok(FactorMode::Cmf { value })
    }

    pub fn srmf(lo: f64, hi: f64) -> Result<Self> {
        check_range(lo, hi)?;
        Ok(FactorMode::Srmf { lo, hi })
    }

    pub fn vrmf(lo: f64, hi: f64) -> Result<Self> {
        check_range(lo, hi)?;
        Ok(FactorMode::Vrmf { lo, hi })
    }

    /// Assembles a mode from its config-file name plus the configured
    /// constant and range.
    pub fn from_name(name: &str, cmf_value: f64, range: (f64, f64)) -> Result<Self> {
        match name {
            "cmf" => Self::cmf(cmf_value),
            "srmf" => Self::srmf(range.0, range.1),
            "vrmf" => Self::vrmf(range.0, range.1),
            other => Err(Error::InvalidConfig(format!(
                "unknown factor mode {other:?}; expected one of cmf, srmf, vrmf"
            ))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            FactorMode::Cmf { .. } => "cmf",
            FactorMode::Srmf { .. } => "srmf",
            FactorMode::Vrmf { .. } => "vrmf",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FactorMode::Cmf { value } => Self::cmf(value).map(|_| ()),
            FactorMode::Srmf { lo, hi } | FactorMode::Vrmf { lo, hi } => check_range(lo, hi),
        }
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || lo >= hi {
        return Err(Error::InvalidConfig(format!(
            "factor range must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Scheme, factor mode, and the per-term draw policy of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub scheme: MutationScheme,
    pub mode: FactorMode,
    /// Reuse one factor draw across both difference terms of a two-term
    /// scheme instead of drawing independently per term.
    #[serde(default)]
    pub shared_draws: bool,
}

impl MutationConfig {
    pub fn new(scheme: MutationScheme, mode: FactorMode) -> Self {
        Self {
            scheme,
            mode,
            shared_draws: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mode.validate()
    }
}

/// Draws the factor layout for one individual: `factors[t][d]` scales
/// difference term `t` in dimension `d`.
///
/// `cmf` fills the layout with the constant (no draws); `srmf` draws one
/// scalar per term and reuses it across dimensions; `vrmf` draws per
/// (dimension, term). With `shared_draws` the terms reuse one draw instead
/// of drawing independently.
pub fn draw_factors<R: Rng>(
    mode: &FactorMode,
    terms: usize,
    dimension: usize,
    shared_draws: bool,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    match *mode {
        FactorMode::Cmf { value } => vec![vec![value; dimension]; terms],
        FactorMode::Srmf { lo, hi } => {
            if shared_draws {
                let f = rng.random_range(lo..hi);
                vec![vec![f; dimension]; terms]
            } else {
                (0..terms)
                    .map(|_| vec![rng.random_range(lo..hi); dimension])
                    .collect()
            }
        }
        FactorMode::Vrmf { lo, hi } => {
            let mut factors = vec![vec![0.0; dimension]; terms];
            for d in 0..dimension {
                if shared_draws {
                    let f = rng.random_range(lo..hi);
                    for row in factors.iter_mut() {
                        row[d] = f;
                    }
                } else {
                    for row in factors.iter_mut() {
                        row[d] = rng.random_range(lo..hi);
                    }
                }
            }
            factors
        }
    }
}

/// Uniform donor indices without replacement, via partial Fisher–Yates.
///
/// Donors exclude the target whenever enough other members exist; in the
/// reduced micro forms (`count == n_p`, e.g. two donors from two members)
/// the exclusion is waived and only mutual distinctness remains.
pub fn select_donors<R: Rng>(
    n_p: usize,
    count: usize,
    target: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if count > n_p {
        return Err(Error::InvalidConfig(format!(
            "cannot draw {count} distinct donors from {n_p} members"
        )));
    }
    let mut pool: Vec<usize> = if n_p > count {
        (0..n_p).filter(|&i| i != target).collect()
    } else {
        (0..n_p).collect()
    };
    for k in 0..count {
        let j = rng.random_range(k..pool.len());
        pool.swap(k, j);
    }
    pool.truncate(count);
    Ok(pool)
}

/// Pure scheme arithmetic over already-chosen donors and factors.
pub(crate) fn compose_mutant(
    scheme: MutationScheme,
    positions: &[&[f64]],
    target: usize,
    best: Option<usize>,
    donors: &[usize],
    factors: &[Vec<f64>],
) -> Vec<f64> {
    let dimension = positions[target].len();
    let x = |i: usize, d: usize| positions[i][d];
    let n_p = positions.len();
    (0..dimension)
        .map(|d| match scheme {
            MutationScheme::Rand1 if n_p == 2 => {
                x(donors[0], d) + factors[0][d] * x(donors[1], d)
            }
            MutationScheme::Rand1 => {
                x(donors[0], d) + factors[0][d] * (x(donors[1], d) - x(donors[2], d))
            }
            MutationScheme::Best1 => {
                x(best.unwrap(), d) + factors[0][d] * (x(donors[0], d) - x(donors[1], d))
            }
            MutationScheme::TargetToBest1 => {
                x(target, d)
                    + factors[0][d] * (x(best.unwrap(), d) - x(target, d))
                    + factors[1][d] * (x(donors[0], d) - x(donors[1], d))
            }
            MutationScheme::Rand2 => {
                x(donors[0], d)
                    + factors[0][d] * (x(donors[1], d) - x(donors[2], d))
                    + factors[1][d] * (x(donors[3], d) - x(donors[4], d))
            }
            MutationScheme::Best2 => {
                x(best.unwrap(), d)
                    + factors[0][d] * (x(donors[0], d) - x(donors[1], d))
                    + factors[1][d] * (x(donors[2], d) - x(donors[3], d))
            }
        })
        .collect()
}

/// Builds the mutant vector for `target` from the current population.
///
/// Best-based schemes require a fully evaluated population; ties for best go
/// to the lowest index.
pub fn mutant<R: Rng>(
    config: &MutationConfig,
    pop: &Population,
    target: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n_p = pop.size();
    config.scheme.require_population(n_p)?;
    if target >= n_p {
        return Err(Error::InvalidArgument(format!(
            "target index {target} out of range for population of {n_p}"
        )));
    }
    let donors = select_donors(n_p, config.scheme.donor_count(n_p), target, rng)?;
    let factors = draw_factors(
        &config.mode,
        config.scheme.difference_terms(),
        pop.dimension(),
        config.shared_draws,
        rng,
    );
    let best = if config.scheme.uses_best() {
        Some(pop.best_index()?)
    } else {
        None
    };
    let positions = pop.positions();
    Ok(compose_mutant(
        config.scheme,
        &positions,
        target,
        best,
        &donors,
        &factors,
    ))
}

/// Binomial crossover: the trial takes the mutant coordinate where
/// `rand(0,1) <= cr` and always in one uniformly drawn forced dimension, so
/// at least one coordinate comes from the mutant.
pub fn crossover<R: Rng>(
    parent: &[f64],
    mutant: &[f64],
    cr: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if parent.len() != mutant.len() || parent.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "crossover requires equal non-empty vectors, got {} and {}",
            parent.len(),
            mutant.len()
        )));
    }
    if !(0.0..=1.0).contains(&cr) {
        return Err(Error::InvalidArgument(format!(
            "crossover rate must lie in [0, 1], got {cr}"
        )));
    }
    let forced = rng.random_range(0..parent.len());
    Ok(parent
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(d, (&p, &m))| {
            let r: f64 = rng.random_range(0.0..1.0);
            if r <= cr || d == forced {
                m
            } else {
                p
            }
        })
        .collect())
}
