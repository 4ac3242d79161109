//! Analytic objective functions with known optima: two uni-modal, five
//! multi-modal, and two shifted-rotated weighted compositions.
//!
//! All functions are pure and total over real vectors. The composites place
//! origin-optimal components at seeded random shifts behind seeded random
//! rotations and blend them with distance-based weights; their data derives
//! deterministically from a seed, so runs are replayable from the recorded
//! seed alone. Every entry registers bounds of `[-100, 100]^D` except
//! `schwefel`, whose canonical minimizer needs `[-500, 500]^D`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engine::{Bounds, Objective};
use crate::error::{Error, Result};

/// Problem families used when grouping report tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    UniModal,
    MultiModal,
    Composite,
}

/// Coordinate of the Schwefel minimizer, accurate to f64 precision.
const SCHWEFEL_OPTIMIZER_COORD: f64 = 420.96874635998205;

fn schwefel_offset() -> f64 {
    // Written as the same expression the kernel evaluates so the frozen
    // minimizer cancels to exactly zero.
    SCHWEFEL_OPTIMIZER_COORD * SCHWEFEL_OPTIMIZER_COORD.abs().sqrt().sin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BaseKernel {
    Sphere,
    Elliptic,
    Rosenbrock,
    Rastrigin,
    Ackley,
    Griewank,
    Schwefel,
}

impl BaseKernel {
    fn value(self, x: &[f64]) -> f64 {
        let n = x.len();
        match self {
            BaseKernel::Sphere => x.iter().map(|v| v * v).sum(),
            BaseKernel::Elliptic => x
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let exponent = if n > 1 {
                        6.0 * i as f64 / (n - 1) as f64
                    } else {
                        0.0
                    };
                    10f64.powf(exponent) * v * v
                })
                .sum(),
            BaseKernel::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            BaseKernel::Rastrigin => {
                10.0 * n as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                        .sum::<f64>()
            }
            BaseKernel::Ackley => {
                let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
                let mean_cos = x
                    .iter()
                    .map(|v| (2.0 * std::f64::consts::PI * v).cos())
                    .sum::<f64>()
                    / n as f64;
                -20.0 * (-0.2 * mean_sq.sqrt()).exp() - mean_cos.exp()
                    + 20.0
                    + std::f64::consts::E
            }
            BaseKernel::Griewank => {
                let sum = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let product: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                1.0 + sum - product
            }
            BaseKernel::Schwefel => x
                .iter()
                .map(|v| schwefel_offset() - v * v.abs().sqrt().sin())
                .sum(),
        }
    }
}

/// One component of a composition: an origin-optimal base kernel placed at a
/// shift behind a rotation.
#[derive(Debug, Clone)]
struct CompositeComponent {
    kernel: BaseKernel,
    shift: Vec<f64>,
    /// Row-major orthogonal matrix applied to `x - shift`.
    rotation: Vec<Vec<f64>>,
    /// Scales `rotation * (x - shift)` into the kernel's natural domain.
    input_scale: f64,
    /// Scales the kernel value so components have comparable magnitude.
    output_scale: f64,
    /// Width of the distance-based weight kernel.
    sigma: f64,
    /// Added to the component value; the global component carries 0.
    bias: f64,
}

impl CompositeComponent {
    fn component_value(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let mut z = vec![0.0; d];
        for (row, zi) in self.rotation.iter().zip(z.iter_mut()) {
            *zi = row
                .iter()
                .zip(x.iter().zip(&self.shift))
                .map(|(m, (xi, oi))| m * (xi - oi))
                .sum::<f64>()
                * self.input_scale;
        }
        self.output_scale * self.kernel.value(&z) + self.bias
    }

    fn squared_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.shift)
            .map(|(xi, oi)| (xi - oi) * (xi - oi))
            .sum()
    }
}

#[derive(Debug, Clone)]
struct Composite {
    components: Vec<CompositeComponent>,
}

impl Composite {
    /// CEC-style blend: `w_k = exp(-dist^2 / (2 D sigma_k^2)) / dist`, with
    /// an exact hit on a shift collapsing all weight onto that component.
    fn value(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        let mut weights = Vec::with_capacity(self.components.len());
        for component in &self.components {
            let dist2 = component.squared_distance(x);
            if dist2 == 0.0 {
                return component.component_value(x);
            }
            weights.push(
                (-dist2 / (2.0 * d * component.sigma * component.sigma)).exp() / dist2.sqrt(),
            );
        }
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            // All weights underflowed; fall back to the nearest component.
            let nearest = self
                .components
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    a.squared_distance(x).total_cmp(&b.squared_distance(x))
                })
                .map(|(i, _)| i)
                .unwrap();
            return self.components[nearest].component_value(x);
        }
        self.components
            .iter()
            .zip(&weights)
            .map(|(component, w)| (w / total) * component.component_value(x))
            .sum()
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    Base(BaseKernel),
    Composite(Composite),
}

/// A registered objective with bounds, category, and exact optimum metadata.
#[derive(Debug, Clone)]
pub struct BenchmarkFunction {
    name: String,
    bounds: Bounds,
    optimizer: Vec<f64>,
    optimum_value: f64,
    category: Category,
    kernel: Kernel,
}

impl BenchmarkFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.bounds.dimension()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// A position attaining [`BenchmarkFunction::optimum_value`].
    pub fn optimizer(&self) -> &[f64] {
        &self.optimizer
    }

    /// The value to reach (VTR) for termination checks.
    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    pub fn category(&self) -> Category {
        self.category
    }

    fn raw(&self, position: &[f64]) -> f64 {
        match &self.kernel {
            Kernel::Base(kernel) => kernel.value(position),
            Kernel::Composite(composite) => composite.value(position),
        }
    }

    /// Evaluates the function, rejecting wrong-length inputs and non-finite
    /// results.
    pub fn evaluate(&self, position: &[f64]) -> Result<f64> {
        if position.len() != self.dimension() {
            return Err(Error::InvalidArgument(format!(
                "{} expects {} coordinates, got {}",
                self.name,
                self.dimension(),
                position.len()
            )));
        }
        let value = self.raw(position);
        if !value.is_finite() {
            return Err(Error::Evaluation {
                value,
                position: position.to_vec(),
            });
        }
        Ok(value)
    }
}

impl Objective for BenchmarkFunction {
    fn value(&self, position: &[f64]) -> f64 {
        self.raw(position)
    }
}

/// Random orthogonal matrix via Gram–Schmidt over Gaussian columns.
fn random_rotation<R: Rng>(dimension: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dimension);
    while rows.len() < dimension {
        let mut v: Vec<f64> = (0..dimension)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        // Two orthogonalization passes keep the basis clean at larger D.
        for _ in 0..2 {
            for row in &rows {
                let dot: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ri) in v.iter_mut().zip(row) {
                    *vi -= dot * ri;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            rows.push(v);
        }
    }
    rows
}

fn uniform_shift<R: Rng>(dimension: usize, half_range: f64, rng: &mut R) -> Vec<f64> {
    (0..dimension)
        .map(|_| rng.random_range(-half_range..half_range))
        .collect()
}

struct ComponentSpec {
    kernel: BaseKernel,
    input_scale: f64,
    output_scale: f64,
    sigma: f64,
    bias: f64,
}

fn build_composite(
    name: &str,
    dimension: usize,
    specs: Vec<ComponentSpec>,
    rng: &mut ChaCha8Rng,
) -> Result<BenchmarkFunction> {
    let components: Vec<CompositeComponent> = specs
        .into_iter()
        .map(|spec| CompositeComponent {
            kernel: spec.kernel,
            // Shifts stay away from the boundary so the optimum is interior.
            shift: uniform_shift(dimension, 80.0, rng),
            rotation: random_rotation(dimension, rng),
            input_scale: spec.input_scale,
            output_scale: spec.output_scale,
            sigma: spec.sigma,
            bias: spec.bias,
        })
        .collect();
    let optimizer = components[0].shift.clone();
    Ok(BenchmarkFunction {
        name: name.to_string(),
        bounds: Bounds::symmetric(dimension, -100.0, 100.0)?,
        optimizer,
        optimum_value: 0.0,
        category: Category::Composite,
        kernel: Kernel::Composite(Composite { components }),
    })
}

fn base_function(
    name: &str,
    dimension: usize,
    kernel: BaseKernel,
    category: Category,
) -> Result<BenchmarkFunction> {
    let (bounds, optimizer) = match kernel {
        BaseKernel::Schwefel => (
            Bounds::symmetric(dimension, -500.0, 500.0)?,
            vec![SCHWEFEL_OPTIMIZER_COORD; dimension],
        ),
        BaseKernel::Rosenbrock => (
            Bounds::symmetric(dimension, -100.0, 100.0)?,
            vec![1.0; dimension],
        ),
        _ => (
            Bounds::symmetric(dimension, -100.0, 100.0)?,
            vec![0.0; dimension],
        ),
    };
    Ok(BenchmarkFunction {
        name: name.to_string(),
        bounds,
        optimizer,
        optimum_value: 0.0,
        category,
        kernel: Kernel::Base(kernel),
    })
}

/// The names served by [`by_name`] and [`suite`], in suite order.
pub fn names() -> [&'static str; 9] {
    [
        "sphere",
        "elliptic",
        "rosenbrock",
        "rastrigin",
        "ackley",
        "griewank",
        "schwefel",
        "composite1",
        "composite2",
    ]
}

/// Builds one registered function. Composite shift/rotation data derives
/// from `seed` (and the name), so equal seeds reproduce equal functions;
/// the analytic entries ignore the seed.
pub fn by_name(name: &str, dimension: usize, seed: u64) -> Result<BenchmarkFunction> {
    if dimension == 0 {
        return Err(Error::InvalidConfig("dimension must be at least 1".into()));
    }
    match name {
        "sphere" => base_function(name, dimension, BaseKernel::Sphere, Category::UniModal),
        "elliptic" => base_function(name, dimension, BaseKernel::Elliptic, Category::UniModal),
        "rosenbrock" => {
            base_function(name, dimension, BaseKernel::Rosenbrock, Category::MultiModal)
        }
        "rastrigin" => {
            base_function(name, dimension, BaseKernel::Rastrigin, Category::MultiModal)
        }
        "ackley" => base_function(name, dimension, BaseKernel::Ackley, Category::MultiModal),
        "griewank" => base_function(name, dimension, BaseKernel::Griewank, Category::MultiModal),
        "schwefel" => base_function(name, dimension, BaseKernel::Schwefel, Category::MultiModal),
        "composite1" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0fe_0001);
            build_composite(
                name,
                dimension,
                vec![
                    ComponentSpec {
                        kernel: BaseKernel::Sphere,
                        input_scale: 1.0,
                        output_scale: 1e-2,
                        sigma: 10.0,
                        bias: 0.0,
                    },
                    ComponentSpec {
                        kernel: BaseKernel::Rastrigin,
                        input_scale: 5.12 / 100.0,
                        output_scale: 1.0,
                        sigma: 20.0,
                        bias: 100.0,
                    },
                    ComponentSpec {
                        kernel: BaseKernel::Griewank,
                        input_scale: 6.0,
                        output_scale: 1.0,
                        sigma: 30.0,
                        bias: 200.0,
                    },
                ],
                &mut rng,
            )
        }
        "composite2" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0fe_0002);
            build_composite(
                name,
                dimension,
                vec![
                    ComponentSpec {
                        kernel: BaseKernel::Elliptic,
                        input_scale: 1.0,
                        output_scale: 1e-6,
                        sigma: 10.0,
                        bias: 0.0,
                    },
                    ComponentSpec {
                        kernel: BaseKernel::Ackley,
                        input_scale: 0.32,
                        output_scale: 10.0,
                        sigma: 20.0,
                        bias: 100.0,
                    },
                    ComponentSpec {
                        kernel: BaseKernel::Griewank,
                        input_scale: 6.0,
                        output_scale: 1.0,
                        sigma: 30.0,
                        bias: 200.0,
                    },
                    ComponentSpec {
                        kernel: BaseKernel::Rastrigin,
                        input_scale: 5.12 / 100.0,
                        output_scale: 1.0,
                        sigma: 40.0,
                        bias: 300.0,
                    },
                ],
                &mut rng,
            )
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown benchmark function {other:?}; known: {}",
            names().join(", ")
        ))),
    }
}

/// The full local suite at one dimension.
pub fn suite(dimension: usize, seed: u64) -> Result<Vec<BenchmarkFunction>> {
    names()
        .iter()
        .map(|name| by_name(name, dimension, seed))
        .collect()
}
