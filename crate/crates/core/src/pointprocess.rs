//! Seeded samplers for homogeneous Poisson processes on windows and for
//! Poisson and binomial processes on a compact domain with a density.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::ensure;
use crate::estimate::Estimate;
use crate::geometry::{dist2, norm, union_bounding_box, Configuration};
use crate::math::{self, ball_volume_any};
use crate::rng::{derive_key, CounterRng, StreamRole};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// `[0, 1]^d`
    UnitCube,
    /// `B_1(o)`
    UnitBall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Uniform,
    /// `f(x) ∝ 1 + slope * x_1`, normalized on the shape; `|slope| < 1`.
    Affine { slope: f64 },
}

/// Sampling region plus probability density on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    shape: Shape,
    density: Density,
    dim: usize,
}

/// `f_0 = inf_A f`, `f_1 = inf_{∂A} f`, `f_max = sup_A f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityExtremes {
    pub f0: f64,
    pub f1: f64,
    pub fmax: f64,
}

impl DomainSpec {
    pub fn new(shape: Shape, density: Density, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if let Density::Affine { slope } = density {
            ensure!(
                slope > -1.0 && slope < 1.0,
                "affine slope must lie in (-1, 1), got {slope}"
            );
        }
        Ok(Self { shape, density, dim })
    }

    pub fn uniform_cube(dim: usize) -> Result<Self> {
        Self::new(Shape::UnitCube, Density::Uniform, dim)
    }

    pub fn uniform_ball(dim: usize) -> Result<Self> {
        Self::new(Shape::UnitBall, Density::Uniform, dim)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn density_family(&self) -> Density {
        self.density
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.density, Density::Uniform)
    }

    pub fn volume(&self) -> f64 {
        match self.shape {
            Shape::UnitCube => 1.0,
            Shape::UnitBall => ball_volume_any(self.dim),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::UnitCube => math::sqrt(self.dim as f64),
            Shape::UnitBall => 2.0,
        }
    }

    /// Per-axis bounds of the shape.
    pub fn bounds(&self) -> (f64, f64) {
        match self.shape {
            Shape::UnitCube => (0.0, 1.0),
            Shape::UnitBall => (-1.0, 1.0),
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self.shape {
            Shape::UnitCube => x.iter().all(|&c| (0.0..=1.0).contains(&c)),
            Shape::UnitBall => x.iter().map(|c| c * c).sum::<f64>() <= 1.0,
        }
    }

    /// Whether `B_r(c)` lies inside the shape.
    pub fn contains_ball(&self, c: &[f64], r: f64) -> bool {
        match self.shape {
            Shape::UnitCube => c.iter().all(|&x| x - r >= 0.0 && x + r <= 1.0),
            Shape::UnitBall => norm(c) + r <= 1.0,
        }
    }

    fn normalizer(&self) -> f64 {
        match (self.density, self.shape) {
            (Density::Uniform, _) => self.volume(),
            (Density::Affine { slope }, Shape::UnitCube) => 1.0 + slope / 2.0,
            (Density::Affine { .. }, Shape::UnitBall) => ball_volume_any(self.dim),
        }
    }

    fn unnormalized(&self, x: &[f64]) -> f64 {
        match self.density {
            Density::Uniform => 1.0,
            Density::Affine { slope } => 1.0 + slope * x[0],
        }
    }

    /// Density `f(x)`, zero off the shape.
    pub fn density(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            self.unnormalized(x) / self.normalizer()
        } else {
            0.0
        }
    }

    pub fn extremes(&self) -> DensityExtremes {
        let z = self.normalizer();
        match self.density {
            Density::Uniform => {
                let f = 1.0 / z;
                DensityExtremes { f0: f, f1: f, fmax: f }
            }
            Density::Affine { slope } => {
                let (lo, hi) = self.bounds();
                let a = (1.0 + slope * lo) / z;
                let b = (1.0 + slope * hi) / z;
                // the extreme x_1 values are attained on the boundary
                let f0 = a.min(b);
                DensityExtremes {
                    f0,
                    f1: f0,
                    fmax: a.max(b),
                }
            }
        }
    }

    /// Uniform point on the shape.
    pub(crate) fn sample_uniform(&self, rng: &mut CounterRng, out: &mut [f64]) {
        match self.shape {
            Shape::UnitCube => out.iter_mut().for_each(|x| *x = rng.uniform()),
            Shape::UnitBall => uniform_in_ball(rng, &vec![0.0; self.dim], 1.0, out),
        }
    }

    /// Point with density `f`, by rejection from the uniform law with
    /// envelope `f_max`.
    pub(crate) fn sample(&self, rng: &mut CounterRng, out: &mut [f64]) {
        if self.is_uniform() {
            return self.sample_uniform(rng, out);
        }
        let ext = self.extremes();
        let envelope = ext.fmax * self.normalizer();
        loop {
            self.sample_uniform(rng, out);
            if rng.uniform() * envelope <= self.unnormalized(out) {
                return;
            }
        }
    }

    /// Monte Carlo check that `f` integrates to one over the shape.
    pub fn density_mass(&self, samples: u64, seed: u64) -> Estimate {
        let mut rng = CounterRng::stream(seed, 0, StreamRole::Volume);
        let mut x = vec![0.0; self.dim];
        let mut m = crate::estimate::Moments::default();
        for _ in 0..samples {
            self.sample_uniform(&mut rng, &mut x);
            m.push(self.density(&x) * self.volume());
        }
        m.estimate()
    }
}

/// `(f0, f1, fmax)` for the domain's density.
pub fn density_extremes(dom: &DomainSpec) -> DensityExtremes {
    dom.extremes()
}

/// Uniform point in `B_radius(center)`.
pub(crate) fn uniform_in_ball(rng: &mut CounterRng, center: &[f64], radius: f64, out: &mut [f64]) {
    let d = out.len();
    rng.direction(out);
    let rho = radius * math::powf(rng.uniform(), 1.0 / d as f64);
    for (x, c) in out.iter_mut().zip(center) {
        *x = c + rho * *x;
    }
}

/// Draws `Z ~ Poisson(mean)`: inversion for `mean <= 30`, Hörmann's
/// transformed rejection (PTRS) above.
pub fn sample_poisson_count(rng: &mut CounterRng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean <= 30.0 {
        let mut k = 0u64;
        let mut p = math::exp(-mean);
        let mut cdf = p;
        let u = rng.uniform();
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if k > 1000 {
                break;
            }
        }
        return k;
    }
    let smu = math::sqrt(mean);
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let ln_mean = math::ln(mean);
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - math::abs(u);
        let k = math::floor((2.0 * a / us + b) * u + mean + 0.43);
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if math::ln(v) + math::ln(inv_alpha) - math::ln(a / (us * us) + b)
            <= -mean + k * ln_mean - math::ln_gamma(k + 1.0)
        {
            return k as u64;
        }
    }
}

/// Observation window for a homogeneous process.
#[derive(Debug, Clone, PartialEq)]
pub enum Window {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Window {
    pub fn dim(&self) -> usize {
        match self {
            Window::Ball { center, .. } => center.len(),
            Window::Box { lo, .. } => lo.len(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Window::Ball { center, radius } => {
                ball_volume_any(center.len()) * math::powi(*radius, center.len() as i32)
            }
            Window::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    Poisson,
    Binomial,
    Homogeneous,
}

/// One realization of a point process.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSample {
    pub points: Configuration,
    pub kind: ProcessKind,
    /// Intensity (homogeneous), mean count (Poisson), or count (binomial).
    pub intensity_or_count: f64,
    pub seed: u64,
}

/// Homogeneous Poisson process of intensity `lambda` on `window`.
pub fn sample_homogeneous(lambda: f64, window: &Window, seed: u64) -> Result<ProcessSample> {
    let d = window.dim();
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    ensure!(lambda >= 0.0 && lambda.is_finite(), "intensity must be finite and >= 0, got {lambda}");
    let vol = window.volume();
    ensure!(vol > 0.0 && vol.is_finite(), "window must have positive volume");
    let mut count_rng = CounterRng::stream(seed, 0, StreamRole::Count);
    let mut point_rng = CounterRng::stream(seed, 0, StreamRole::Points);
    let n = sample_poisson_count(&mut count_rng, lambda * vol) as usize;
    let mut coords = vec![0.0; n * d];
    for p in coords.chunks_exact_mut(d) {
        match window {
            Window::Ball { center, radius } => uniform_in_ball(&mut point_rng, center, *radius, p),
            Window::Box { lo, hi } => {
                for a in 0..d {
                    p[a] = point_rng.uniform_in(lo[a], hi[a]);
                }
            }
        }
    }
    Ok(ProcessSample {
        points: Configuration::from_flat_unchecked(d, coords),
        kind: ProcessKind::Homogeneous,
        intensity_or_count: lambda,
        seed,
    })
}

/// Points of a homogeneous process of intensity `lambda` in the shell
/// `B_{j+1}(o) \ B_j(o)`. Shells are independent streams, so the process on
/// `B_m(o)` is the union of shells `0..m` regardless of how many are drawn.
pub(crate) fn sample_shell(lambda: f64, dim: usize, j: u64, key: u64, count: Option<u64>) -> Vec<f64> {
    let inner = math::powi(j as f64, dim as i32);
    let outer = math::powi(j as f64 + 1.0, dim as i32);
    let mut rng = CounterRng::new(derive_key(key, j, StreamRole::Shell));
    let n = match count {
        Some(n) => n,
        None => sample_poisson_count(&mut rng, lambda * ball_volume_any(dim) * (outer - inner)),
    } as usize;
    let mut coords = vec![0.0; n * dim];
    for p in coords.chunks_exact_mut(dim) {
        rng.direction(p);
        let rho = math::powf(inner + rng.uniform() * (outer - inner), 1.0 / dim as f64);
        p.iter_mut().for_each(|x| *x *= rho);
    }
    coords
}

/// Binomial process: exactly `n` i.i.d. points with the domain's density.
pub fn sample_binomial(n: usize, dom: &DomainSpec, seed: u64) -> Result<ProcessSample> {
    ensure!(n >= 1, "binomial process needs n >= 1");
    Ok(ProcessSample {
        points: sample_points(n, dom, seed),
        kind: ProcessKind::Binomial,
        intensity_or_count: n as f64,
        seed,
    })
}

fn sample_points(n: usize, dom: &DomainSpec, seed: u64) -> Configuration {
    let d = dom.dim();
    let mut rng = CounterRng::stream(seed, 0, StreamRole::Points);
    let mut coords = vec![0.0; n * d];
    for p in coords.chunks_exact_mut(d) {
        dom.sample(&mut rng, p);
    }
    Configuration::from_flat_unchecked(d, coords)
}

/// Poisson process with intensity measure `n f(x) dx` on the domain; `n`
/// need not be an integer.
pub fn sample_poisson_on_domain(n: f64, dom: &DomainSpec, seed: u64) -> Result<ProcessSample> {
    ensure!(n > 0.0 && n.is_finite(), "mean count must be positive, got {n}");
    let mut count_rng = CounterRng::stream(seed, 0, StreamRole::Count);
    let count = sample_poisson_count(&mut count_rng, n) as usize;
    Ok(ProcessSample {
        points: sample_points(count, dom, seed),
        kind: ProcessKind::Poisson,
        intensity_or_count: n,
        seed,
    })
}

/// `ν(B_radius(centers)) = ∫_{A ∩ ∪ B} f`, by uniform sampling of the
/// union's bounding box.
pub fn nu_ball_union(
    dom: &DomainSpec,
    centers: &Configuration,
    radius: f64,
    mc_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if centers.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    ensure!(centers.dim() == dom.dim(), "centers and domain differ in dimension");
    ensure!(radius > 0.0, "radius must be positive, got {radius}");
    ensure!(mc_samples > 0, "mc_samples must be positive");
    let d = dom.dim();
    let (mut lo, mut hi) = union_bounding_box(centers, radius);
    let (a, b) = dom.bounds();
    for i in 0..d {
        lo[i] = lo[i].max(a);
        hi[i] = hi[i].min(b);
        if lo[i] >= hi[i] {
            return Ok(Estimate::exact(0.0));
        }
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    let r2 = radius * radius;
    let mut rng = CounterRng::stream(seed, 0, StreamRole::Volume);
    let mut x = vec![0.0; d];
    let mut m = crate::estimate::Moments::default();
    for _ in 0..mc_samples {
        for i in 0..d {
            x[i] = rng.uniform_in(lo[i], hi[i]);
        }
        let hit = centers.points().any(|c| dist2(&x, c) <= r2);
        m.push(if hit { dom.density(&x) * box_volume } else { 0.0 });
    }
    Ok(m.estimate())
}

/// `ν(B_radius(centers))` by sampling inside each ball and weighting by the
/// inverse coverage multiplicity. Returns `(estimate, variance)` of the
/// estimate. Exact for a single ball inside a uniform domain.
pub(crate) fn nu_union_coverage(
    dom: &DomainSpec,
    centers: &[f64],
    radius: f64,
    samples: u64,
    rng: &mut CounterRng,
    scratch: &mut Vec<f64>,
) -> (f64, f64) {
    let d = dom.dim();
    let k = centers.len() / d;
    let ball = ball_volume_any(d) * math::powi(radius, d as i32);
    if k == 1 && dom.is_uniform() && dom.contains_ball(centers, radius) {
        return (dom.extremes().f0 * ball, 0.0);
    }
    let per_ball = samples.div_ceil(k as u64).max(2);
    let r2 = radius * radius;
    scratch.resize(d, 0.0);
    let mut value = 0.0;
    let mut variance = 0.0;
    for c in centers.chunks_exact(d) {
        let mut m = crate::estimate::Moments::default();
        for _ in 0..per_ball {
            uniform_in_ball(rng, c, radius, scratch);
            let f = dom.density(scratch);
            if f == 0.0 {
                m.push(0.0);
                continue;
            }
            let cover = centers
                .chunks_exact(d)
                .filter(|o| dist2(scratch, o) <= r2)
                .count()
                .max(1);
            m.push(f / cover as f64);
        }
        value += ball * m.mean();
        variance += ball * ball * m.variance() / per_ball as f64;
    }
    (value, variance)
}

/// Exact `ν` of a union of intervals in `d = 1`.
pub(crate) fn nu_union_1d(dom: &DomainSpec, centers: &[f64], radius: f64, scratch: &mut Vec<f64>) -> f64 {
    let (lo, hi) = dom.bounds();
    scratch.clear();
    scratch.extend_from_slice(centers);
    scratch.sort_by(|a, b| a.total_cmp(b));
    let z = dom.normalizer();
    let slope = match dom.density_family() {
        Density::Uniform => 0.0,
        Density::Affine { slope } => slope,
    };
    // ∫_a^b (1 + slope x) dx / z
    let mass = |a: f64, b: f64| (b - a) * (1.0 + slope * 0.5 * (a + b)) / z;
    let mut total = 0.0;
    let mut run: Option<(f64, f64)> = None;
    for &c in scratch.iter() {
        let (a, b) = ((c - radius).max(lo), (c + radius).min(hi));
        if a >= b {
            continue;
        }
        run = match run {
            Some((s, e)) if a <= e => Some((s, e.max(b))),
            Some((s, e)) => {
                total += mass(s, e);
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((s, e)) = run {
        total += mass(s, e);
    }
    total
}

/// Public wrapper of the coverage estimator.
pub fn nu_ball_union_by_coverage(
    dom: &DomainSpec,
    centers: &Configuration,
    radius: f64,
    mc_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if centers.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    ensure!(centers.dim() == dom.dim(), "centers and domain differ in dimension");
    ensure!(radius > 0.0, "radius must be positive, got {radius}");
    ensure!(mc_samples > 0, "mc_samples must be positive");
    let mut rng = CounterRng::stream(seed, 0, StreamRole::Volume);
    let mut scratch = Vec::new();
    let (v, var) = nu_union_coverage(dom, centers.coords(), radius, mc_samples, &mut rng, &mut scratch);
    Ok(Estimate::new(v, math::sqrt(var), mc_samples))
}
