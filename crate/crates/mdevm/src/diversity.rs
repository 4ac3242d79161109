//! Population-diversity metrics and the Monte-Carlo simulations that
//! compare the three factor modes.
//!
//! Two metrics are used throughout:
//!
//! * centroid distance `C_D` — the mean Euclidean distance of members from
//!   the population centroid,
//! * pairwise distance `P_D` — the double sum of distances over ordered
//!   pairs `i != j`, divided by `N_P (N_P - 1)` (identical to the mean over
//!   unordered pairs).
//!
//! The simulators measure how much spread each factor mode injects:
//! [`monte_carlo_mutants`] scales a fixed base vector (`F ⊙ R`) and emits
//! the raw cloud, while [`monte_carlo_trials`] repeatedly builds full
//! `rand1` trial populations from one frozen uniform population and averages
//! the per-round `C_D`/`P_D` of the generated trials.

use rand::Rng;
use serde::Serialize;

use crate::engine::{Individual, Population};
use crate::error::{Error, Result};
use crate::mutation::{crossover, draw_factors, mutant, FactorMode, MutationConfig, MutationScheme};

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean Euclidean distance of the points from their coordinate-wise mean.
pub fn centroid_distance<S: AsRef<[f64]>>(points: &[S]) -> f64 {
    assert!(!points.is_empty(), "centroid distance needs at least one point");
    let n = points.len();
    let dimension = points[0].as_ref().len();
    let mut centroid = vec![0.0; dimension];
    for p in points {
        for (c, x) in centroid.iter_mut().zip(p.as_ref()) {
            *c += x;
        }
    }
    for c in centroid.iter_mut() {
        *c /= n as f64;
    }
    points
        .iter()
        .map(|p| euclidean(p.as_ref(), &centroid))
        .sum::<f64>()
        / n as f64
}

/// Average distance over ordered pairs:
/// `P_D = 1 / (N_P (N_P - 1)) * sum_{i != j} ||X_i - X_j||`.
pub fn pairwise_distance<S: AsRef<[f64]>>(points: &[S]) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "pairwise distance needs at least two points, got {n}"
        )));
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += euclidean(points[i].as_ref(), points[j].as_ref());
            }
        }
    }
    Ok(sum / (n * (n - 1)) as f64)
}

pub fn population_centroid_distance(pop: &Population) -> f64 {
    centroid_distance(&pop.positions())
}

pub fn population_pairwise_distance(pop: &Population) -> Result<f64> {
    pairwise_distance(&pop.positions())
}

/// Samples the cloud `F ⊙ base` under the given factor mode: a single point
/// for `cmf`, a ray segment through `base` for `srmf`, and a filled box for
/// `vrmf`.
pub fn monte_carlo_mutants<R: Rng>(
    base: &[f64],
    mode: &FactorMode,
    samples: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..samples)
        .map(|_| {
            let factors = draw_factors(mode, 1, base.len(), false, rng);
            base.iter()
                .zip(&factors[0])
                .map(|(&x, &f)| f * x)
                .collect()
        })
        .collect()
}

/// One aggregated Monte-Carlo measurement cell.
#[derive(Debug, Clone, Serialize)]
pub struct DiversitySample {
    pub dimension: usize,
    pub population_size: usize,
    pub mode: FactorMode,
    pub with_crossover: bool,
    /// Number of trial vectors generated (rounds * N_P).
    pub samples: usize,
    pub c_d_mean: f64,
    pub p_d_mean: f64,
    /// Standard error of the per-round C_D values.
    pub c_d_se: f64,
    /// Standard error of the per-round P_D values.
    pub p_d_se: f64,
}

/// Parameters of one [`monte_carlo_trials`] cell.
#[derive(Debug, Clone)]
pub struct TrialDiversityConfig {
    pub dimension: usize,
    pub population_size: usize,
    pub mode: FactorMode,
    /// Requested number of trial vectors; rounded up to whole rounds of
    /// `N_P` trials.
    pub samples: usize,
    pub crossover_rate: f64,
    pub with_crossover: bool,
}

impl TrialDiversityConfig {
    fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        if self.dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        if self.population_size < 2 {
            return Err(Error::InvalidConfig(
                "trial simulation needs a population of at least 2".into(),
            ));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::InvalidConfig(format!(
                "crossover rate must lie in [0, 1], got {}",
                self.crossover_rate
            )));
        }
        Ok(())
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs the trial-diversity simulation and also returns the raw trial cloud
/// (for the 2-D scatter figures).
pub fn monte_carlo_trials_with_cloud<R: Rng>(
    config: &TrialDiversityConfig,
    rng: &mut R,
) -> Result<(DiversitySample, Vec<Vec<f64>>)> {
    config.validate()?;
    let n_p = config.population_size;

    // One frozen base population, uniform in [0, 1]^D.
    let members = (0..n_p)
        .map(|_| {
            Individual::new(
                (0..config.dimension)
                    .map(|_| rng.random_range(0.0..1.0))
                    .collect(),
            )
        })
        .collect();
    let base = Population::new(members)?;
    let mutation = MutationConfig::new(MutationScheme::Rand1, config.mode);

    let rounds = config.samples.div_ceil(n_p);
    let mut cloud = Vec::with_capacity(rounds * n_p);
    let mut c_d = Vec::with_capacity(rounds);
    let mut p_d = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut trial_population = Vec::with_capacity(n_p);
        for target in 0..n_p {
            let v = mutant(&mutation, &base, target, rng)?;
            let trial = if config.with_crossover {
                crossover(
                    base.member(target).position(),
                    &v,
                    config.crossover_rate,
                    rng,
                )?
            } else {
                v
            };
            trial_population.push(trial);
        }
        c_d.push(centroid_distance(&trial_population));
        p_d.push(pairwise_distance(&trial_population)?);
        cloud.extend(trial_population);
    }

    let (c_d_mean, c_d_se) = mean_and_se(&c_d);
    let (p_d_mean, p_d_se) = mean_and_se(&p_d);
    Ok((
        DiversitySample {
            dimension: config.dimension,
            population_size: n_p,
            mode: config.mode,
            with_crossover: config.with_crossover,
            samples: rounds * n_p,
            c_d_mean,
            p_d_mean,
            c_d_se,
            p_d_se,
        },
        cloud,
    ))
}

/// Like [`monte_carlo_trials_with_cloud`] but discards the raw points.
pub fn monte_carlo_trials<R: Rng>(
    config: &TrialDiversityConfig,
    rng: &mut R,
) -> Result<DiversitySample> {
    monte_carlo_trials_with_cloud(config, rng).map(|(sample, _)| sample)
}

/// Writes simulator results as CSV with the stable column set
/// `d,n_p,mode,samples,c_d_mean,p_d_mean`.
pub fn write_samples_csv<W: std::io::Write>(
    samples: &[DiversitySample],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["d", "n_p", "mode", "samples", "c_d_mean", "p_d_mean"])?;
    for s in samples {
        w.write_record([
            s.dimension.to_string(),
            s.population_size.to_string(),
            s.mode.id().to_string(),
            s.samples.to_string(),
            s.c_d_mean.to_string(),
            s.p_d_mean.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a raw point cloud as CSV, one coordinate column per dimension.
pub fn write_cloud_csv<W: std::io::Write>(cloud: &[Vec<f64>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(first) = cloud.first() {
        let header: Vec<String> = (1..=first.len()).map(|d| format!("x{d}")).collect();
        w.write_record(&header)?;
        for point in cloud {
            w.write_record(point.iter().map(|x| x.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}
