//! Geometric primitives: ball volumes, connectivity of small configurations,
//! union-of-balls volumes, and the quasi-gravitational energy
//! `g(z) = ∫_{S^{d-1}} max_i <u, z_i>^+ σ(du)` together with its
//! finite-radius approximant `g_r(z) = Vol(∪_i B_1(r z_i) \ B_1(o)) / r`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::ensure;
use crate::estimate::{Estimate, Moments};
use crate::math::{self, ball_volume_any};
use crate::rng::{CounterRng, StreamRole};
use crate::{Error, Result};

/// An ordered list of points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    coords: Vec<f64>,
}

impl Configuration {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, points: usize) -> Self {
        Self {
            dim,
            coords: Vec::with_capacity(dim * points),
        }
    }

    /// Builds a configuration from flat row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        ensure!(
            coords.len().is_multiple_of(dim),
            "coordinate count {} is not a multiple of dimension {}",
            coords.len(),
            dim
        );
        ensure!(
            coords.iter().all(|x| x.is_finite()),
            "all coordinates must be finite"
        );
        Ok(Self { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            let p = p.as_ref();
            ensure!(
                p.len() == dim,
                "point of dimension {} in a {}-dimensional configuration",
                p.len(),
                dim
            );
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    pub(crate) fn from_flat_unchecked(dim: usize, coords: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && coords.len().is_multiple_of(dim));
        Self { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    /// Multiplies every coordinate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * s).collect(),
        }
    }

    /// Sorts the points into increasing lexicographic order.
    pub fn sort_lex(&mut self) {
        let dim = self.dim;
        let mut pts: Vec<&[f64]> = self.coords.chunks_exact(dim).collect();
        pts.sort_by(|a, b| lex_cmp(a, b));
        self.coords = pts.concat();
    }

    pub fn max_norm(&self) -> f64 {
        self.points().map(norm).fold(0.0, f64::max)
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(core::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    core::cmp::Ordering::Equal
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Volume `theta_d = pi^{d/2} / Gamma(d/2 + 1)` of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok(ball_volume_any(d))
}

/// Whether the graph joining points at distance `<= r` is connected.
pub fn connectivity(c: &Configuration, r: f64) -> Result<bool> {
    if c.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    ensure!(r > 0.0, "radius must be positive, got {r}");
    Ok(is_connected(c.coords(), c.dim(), r * r))
}

/// Connectivity test on flat coordinates; quadratic, meant for small sets.
pub(crate) fn is_connected(coords: &[f64], dim: usize, r2: f64) -> bool {
    let m = coords.len() / dim;
    if m <= 1 {
        return true;
    }
    let mut reached = vec![false; m];
    let mut stack = vec![0usize];
    reached[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        let p = &coords[i * dim..(i + 1) * dim];
        for j in 0..m {
            if !reached[j] && dist2(p, &coords[j * dim..(j + 1) * dim]) <= r2 {
                reached[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == m
}

/// Whether the first point strictly precedes every other point in
/// lexicographic order.
pub fn is_lex_leader(c: &Configuration) -> Result<bool> {
    if c.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            if c.point(i) == c.point(j) {
                return Err(Error::DuplicatePoint(i, j));
            }
        }
    }
    let first = c.point(0);
    Ok(c.points()
        .skip(1)
        .all(|p| lex_cmp(first, p) == core::cmp::Ordering::Less))
}

/// Axis-aligned bounding box of the union of balls of `radius` about
/// `centers`.
pub(crate) fn union_bounding_box(centers: &Configuration, radius: f64) -> (Vec<f64>, Vec<f64>) {
    let d = centers.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in centers.points() {
        for a in 0..d {
            lo[a] = lo[a].min(p[a] - radius);
            hi[a] = hi[a].max(p[a] + radius);
        }
    }
    (lo, hi)
}

/// Lebesgue volume of `∪_i B_radius(c_i)`.
///
/// A single ball is evaluated in closed form; otherwise the union's bounding
/// box is sampled uniformly.
pub fn union_ball_volume(
    centers: &Configuration,
    radius: f64,
    mc_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if centers.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    ensure!(radius > 0.0, "radius must be positive, got {radius}");
    ensure!(mc_samples > 0, "mc_samples must be positive");
    let d = centers.dim();
    if centers.len() == 1 {
        return Ok(Estimate::exact(ball_volume_any(d) * math::powi(radius, d as i32)));
    }
    let (lo, hi) = union_bounding_box(centers, radius);
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    let r2 = radius * radius;
    let mut rng = CounterRng::stream(seed, 0, StreamRole::Volume);
    let mut x = vec![0.0; d];
    let mut hits = 0u64;
    for _ in 0..mc_samples {
        for a in 0..d {
            x[a] = rng.uniform_in(lo[a], hi[a]);
        }
        if centers.points().any(|c| dist2(&x, c) <= r2) {
            hits += 1;
        }
    }
    let p = hits as f64 / mc_samples as f64;
    Ok(Estimate::new(
        box_volume * p,
        box_volume * math::sqrt(p * (1.0 - p) / mc_samples as f64),
        mc_samples,
    ))
}

/// How `g` is integrated over the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyQuadrature {
    /// `d = 1`: `g(z) = max_i z_i^+ + max_i z_i^-`.
    ClosedForm,
    /// `d = 2`: trapezoid rule over `nodes` equally spaced angles.
    ExactAngular { nodes: usize },
    /// `d >= 2`: `nodes` uniform directions (antithetic pairs) drawn from
    /// `seed`, weighted by the sphere area `d * theta_d`.
    SphereMonteCarlo { nodes: usize, seed: u64 },
}

pub const DEFAULT_ANGULAR_NODES: usize = 4096;
pub const DEFAULT_SPHERE_NODES: usize = 200_000;

impl EnergyQuadrature {
    /// Default rule for dimension `d`.
    pub fn default_for(d: usize) -> Self {
        match d {
            1 => EnergyQuadrature::ClosedForm,
            2 => EnergyQuadrature::ExactAngular {
                nodes: DEFAULT_ANGULAR_NODES,
            },
            _ => EnergyQuadrature::SphereMonteCarlo {
                nodes: DEFAULT_SPHERE_NODES,
                seed: 0,
            },
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        match *self {
            EnergyQuadrature::ClosedForm => {
                ensure!(d == 1, "closed-form energy only exists for d = 1, got d = {d}")
            }
            EnergyQuadrature::ExactAngular { nodes } => {
                ensure!(d == 2, "angular quadrature needs d = 2, got d = {d}");
                ensure!(nodes >= 16, "angular quadrature needs at least 16 nodes, got {nodes}");
            }
            EnergyQuadrature::SphereMonteCarlo { nodes, .. } => {
                ensure!(d >= 2, "sphere Monte Carlo needs d >= 2, got d = {d}");
                ensure!(
                    nodes >= 1000,
                    "sphere Monte Carlo needs at least 1000 directions, got {nodes}"
                );
            }
        }
        Ok(())
    }
}

/// Precomputed evaluator for `g` in a fixed dimension.
#[derive(Debug, Clone)]
pub struct EnergyEvaluator {
    dim: usize,
    /// Flat unit directions; empty for the closed form.
    directions: Vec<f64>,
    weight: f64,
    angular: bool,
}

impl EnergyEvaluator {
    pub fn new(dim: usize, quad: EnergyQuadrature) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        quad.validate(dim)?;
        Ok(match quad {
            EnergyQuadrature::ClosedForm => Self {
                dim,
                directions: Vec::new(),
                weight: 0.0,
                angular: false,
            },
            EnergyQuadrature::ExactAngular { nodes } => {
                let h = 2.0 * PI / nodes as f64;
                let mut directions = Vec::with_capacity(2 * nodes);
                for j in 0..nodes {
                    let phi = h * j as f64;
                    directions.push(math::cos(phi));
                    directions.push(math::sin(phi));
                }
                Self {
                    dim,
                    directions,
                    weight: h,
                    angular: true,
                }
            }
            EnergyQuadrature::SphereMonteCarlo { nodes, seed } => {
                let pairs = nodes.div_ceil(2);
                let mut rng = CounterRng::stream(seed, dim as u64, StreamRole::Directions);
                let mut directions = vec![0.0; 2 * pairs * dim];
                for p in 0..pairs {
                    let (a, b) = directions[2 * p * dim..(2 * p + 2) * dim].split_at_mut(dim);
                    rng.direction(a);
                    for (y, x) in b.iter_mut().zip(a.iter()) {
                        *y = -*x;
                    }
                }
                Self {
                    dim,
                    directions,
                    weight: dim as f64 * ball_volume_any(dim) / (2 * pairs) as f64,
                    angular: false,
                }
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `g` of the points in flat coordinates.
    pub fn eval(&self, z: &[f64]) -> f64 {
        if self.dim == 1 {
            let pos = z.iter().fold(0.0f64, |m, &x| m.max(x));
            let neg = z.iter().fold(0.0f64, |m, &x| m.max(-x));
            return pos + neg;
        }
        let d = self.dim;
        let mut total = 0.0;
        for u in self.directions.chunks_exact(d) {
            let mut best = 0.0f64;
            for p in z.chunks_exact(d) {
                best = best.max(dot(u, p));
            }
            total += best;
        }
        total * self.weight
    }

    /// Randomly shifted angular rule (`d = 2` only): the grid is rotated by
    /// `shift * h` with `shift ∈ [0, 1)`. Averaged over the shift this is
    /// exactly `g`, so it is an unbiased evaluation for Monte Carlo use.
    pub(crate) fn eval_shifted(&self, z: &[f64], shift: f64, scratch: &mut Vec<f64>) -> f64 {
        if !self.angular {
            return self.eval(z);
        }
        let angle = -shift * self.weight;
        let (s, c) = (math::sin(angle), math::cos(angle));
        scratch.clear();
        for p in z.chunks_exact(2) {
            scratch.push(c * p[0] - s * p[1]);
            scratch.push(s * p[0] + c * p[1]);
        }
        self.eval(scratch)
    }
}

/// Quasi-gravitational energy `g(z)` of the configuration `z`.
pub fn quasi_grav_energy(z: &Configuration, quad: EnergyQuadrature) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    Ok(EnergyEvaluator::new(z.dim(), quad)?.eval(z.coords()))
}

/// `((1 + s)^d - 1) / d` for the radial extent `s` of `∪_i B_1(y_i)` beyond
/// the unit sphere in direction `u`. Every ball contains `o`, so the ray
/// meets the union in a single segment.
fn shell_radial_term(u: &[f64], ys: &[f64], d: usize) -> f64 {
    let mut s_max = 0.0f64;
    for y in ys.chunks_exact(d) {
        let a = dot(u, y);
        let q = (dot(y, y) - a * a).max(0.0);
        // t - 1 where t = a + sqrt(1 - q), written to avoid cancellation
        let s = a - q / (1.0 + math::sqrt((1.0 - q).max(0.0)));
        s_max = s_max.max(s);
    }
    math::expm1(d as f64 * math::ln1p(s_max)) / d as f64
}

/// Monte Carlo estimate of `g_r(z) = r^{-1} Vol(∪_i B_1(r z_i) \ B_1(o))`.
///
/// The volume is integrated in polar coordinates about `o`, so only the
/// direction is random: `d = 1` is exact, `d = 2` averages eight randomly
/// shifted angular grids, `d >= 3` uses antithetic uniform directions.
pub fn scaled_shell_energy(
    z: &Configuration,
    r: f64,
    mc_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if z.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    ensure!(r > 0.0 && r <= 1.0, "r must lie in (0, 1], got {r}");
    ensure!(
        r * z.max_norm() <= 1.0,
        "r * max_i |z_i| = {} exceeds 1",
        r * z.max_norm()
    );
    ensure!(mc_samples > 0, "mc_samples must be positive");
    let d = z.dim();
    let ys: Vec<f64> = z.coords().iter().map(|x| x * r).collect();
    match d {
        1 => {
            let total = shell_radial_term(&[1.0], &ys, 1) + shell_radial_term(&[-1.0], &ys, 1);
            Ok(Estimate::exact(total / r))
        }
        2 => {
            const SHIFTS: u64 = 8;
            let nodes = mc_samples.div_ceil(SHIFTS).max(1);
            let h = 2.0 * PI / nodes as f64;
            let mut rng = CounterRng::stream(seed, 0, StreamRole::Directions);
            let mut m = Moments::default();
            for _ in 0..SHIFTS {
                let offset = rng.uniform() * h;
                let mut sum = 0.0;
                for j in 0..nodes {
                    let phi = offset + h * j as f64;
                    sum += shell_radial_term(&[math::cos(phi), math::sin(phi)], &ys, 2);
                }
                m.push(sum * h / r);
            }
            let e = m.estimate();
            Ok(Estimate::new(e.value, e.std_error, nodes * SHIFTS))
        }
        _ => {
            let pairs = mc_samples.div_ceil(2).max(2);
            let area = d as f64 * ball_volume_any(d);
            let mut rng = CounterRng::stream(seed, 0, StreamRole::Directions);
            let mut u = vec![0.0; d];
            let mut m = Moments::default();
            for _ in 0..pairs {
                rng.direction(&mut u);
                let a = shell_radial_term(&u, &ys, d);
                u.iter_mut().for_each(|x| *x = -*x);
                let b = shell_radial_term(&u, &ys, d);
                m.push(0.5 * (a + b) * area / r);
            }
            let e = m.estimate();
            Ok(Estimate::new(e.value, e.std_error, 2 * pairs))
        }
    }
}
