//! Component censuses of `G(X, r)` and the origin cluster of the Poisson
//! Boolean model.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::ensure;
use crate::estimate::Estimate;
use crate::exec::{Executor, Sequential};
use crate::geometry::{dist2, lex_cmp, norm, Configuration};
use crate::math::{self, ball_volume_any};
use crate::pointprocess::sample_shell;
use crate::rng::{derive_key, CounterRng, StreamRole};
use crate::{Error, Result};

/// Disjoint sets with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns false if already joined.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    /// Sizes of all components, one entry per root.
    pub fn component_sizes(&mut self) -> Vec<usize> {
        (0..self.parent.len() as u32)
            .filter(|&i| self.parent[i as usize] == i)
            .map(|i| self.size[i as usize] as usize)
            .collect()
    }
}

/// Number of components of each order in `G(X, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCensus {
    counts: BTreeMap<usize, u64>,
    total_points: usize,
    radius: f64,
}

impl ClusterCensus {
    fn from_sizes(sizes: impl IntoIterator<Item = usize>, total_points: usize, radius: f64) -> Self {
        let mut histogram: Vec<u64> = Vec::new();
        for s in sizes {
            if s >= histogram.len() {
                histogram.resize(s + 1, 0);
            }
            histogram[s] += 1;
        }
        let counts = histogram
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect();
        Self {
            counts,
            total_points,
            radius,
        }
    }

    /// Components with exactly `order` vertices.
    pub fn count(&self, order: usize) -> u64 {
        self.counts.get(&order).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn total_points(&self) -> usize {
        self.total_points
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Cell lookup for the grid hash: dense table when the occupied bounding
/// grid is small, sorted cell keys otherwise.
enum CellIndex {
    Dense { lo: Vec<i64>, extent: Vec<i64> },
    Sparse { keys: Vec<i64> },
}

/// Points reordered so that each cell occupies a contiguous range; neighbor
/// scans and union-find then touch nearby memory.
struct Grid {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<i64>,
    starts: Vec<u32>,
    index: CellIndex,
}

impl Grid {
    fn build(coords: &[f64], dim: usize, r: f64) -> Self {
        let n = coords.len() / dim;
        let cells: Vec<i64> = coords.iter().map(|x| math::floor(x / r) as i64).collect();
        let mut lo = vec![i64::MAX; dim];
        let mut hi = vec![i64::MIN; dim];
        for c in cells.chunks_exact(dim) {
            for a in 0..dim {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        let extent: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
        let total = extent
            .iter()
            .try_fold(1u64, |acc, &e| acc.checked_mul(e as u64));
        let (order, starts, index) = match total {
            Some(total) if total <= 4 * n as u64 + 1024 => {
                let total = total as usize;
                let linear = |c: &[i64]| -> usize {
                    let mut idx = 0i64;
                    for a in 0..dim {
                        idx = idx * extent[a] + (c[a] - lo[a]);
                    }
                    idx as usize
                };
                let mut starts = vec![0u32; total + 1];
                for c in cells.chunks_exact(dim) {
                    starts[linear(c) + 1] += 1;
                }
                for i in 0..total {
                    starts[i + 1] += starts[i];
                }
                let mut fill = starts.clone();
                let mut order = vec![0u32; n];
                for (i, c) in cells.chunks_exact(dim).enumerate() {
                    let l = linear(c);
                    order[fill[l] as usize] = i as u32;
                    fill[l] += 1;
                }
                (order, starts, CellIndex::Dense { lo, extent })
            }
            _ => {
                let mut order: Vec<u32> = (0..n as u32).collect();
                order.sort_unstable_by(|&a, &b| {
                    let (a, b) = (a as usize, b as usize);
                    cells[a * dim..(a + 1) * dim].cmp(&cells[b * dim..(b + 1) * dim])
                });
                let mut keys = Vec::new();
                let mut starts = Vec::new();
                for (pos, &i) in order.iter().enumerate() {
                    let c = &cells[i as usize * dim..(i as usize + 1) * dim];
                    if keys.len() < dim || &keys[keys.len() - dim..] != c {
                        keys.extend_from_slice(c);
                        starts.push(pos as u32);
                    }
                }
                starts.push(n as u32);
                (order, starts, CellIndex::Sparse { keys })
            }
        };
        let mut sorted = Vec::with_capacity(n * dim);
        let mut sorted_cells = Vec::with_capacity(n * dim);
        for &i in &order {
            let i = i as usize;
            sorted.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
            sorted_cells.extend_from_slice(&cells[i * dim..(i + 1) * dim]);
        }
        Grid {
            dim,
            coords: sorted,
            cells: sorted_cells,
            starts,
            index,
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn cell_of(&self, i: usize) -> &[i64] {
        &self.cells[i * self.dim..(i + 1) * self.dim]
    }

    /// Positions of the points in the cell with integer coordinates `c`.
    fn members(&self, c: &[i64]) -> core::ops::Range<usize> {
        let slot = match &self.index {
            CellIndex::Dense { lo, extent } => {
                let mut idx = 0i64;
                for a in 0..self.dim {
                    let off = c[a] - lo[a];
                    if off < 0 || off >= extent[a] {
                        return 0..0;
                    }
                    idx = idx * extent[a] + off;
                }
                idx as usize
            }
            CellIndex::Sparse { keys } => {
                let (mut a, mut b) = (0usize, self.starts.len() - 1);
                loop {
                    if a >= b {
                        return 0..0;
                    }
                    let mid = (a + b) / 2;
                    match keys[mid * self.dim..(mid + 1) * self.dim].cmp(c) {
                        core::cmp::Ordering::Less => a = mid + 1,
                        core::cmp::Ordering::Greater => b = mid,
                        core::cmp::Ordering::Equal => break mid,
                    }
                }
            }
        };
        self.starts[slot] as usize..self.starts[slot + 1] as usize
    }
}

/// Neighbor-cell offsets in `{-1, 0, 1}^d` whose first nonzero entry is `+1`;
/// together with the cell itself they visit every adjacent pair once.
fn forward_offsets(dim: usize) -> Vec<i64> {
    let total = 3usize.pow(dim as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut off = vec![0i64; dim];
        for a in (0..dim).rev() {
            off[a] = (c % 3) as i64 - 1;
            c /= 3;
        }
        if off.iter().find(|&&x| x != 0) == Some(&1) {
            out.extend_from_slice(&off);
        }
    }
    out
}

/// Component sizes of `G(coords, r)`.
fn component_sizes(coords: &[f64], dim: usize, r: f64) -> Vec<usize> {
    let n = coords.len() / dim;
    let mut uf = UnionFind::new(n);
    if n < 2 {
        return uf.component_sizes();
    }
    let r2 = r * r;
    let grid = Grid::build(coords, dim, r);
    if dim == 1 {
        return interval_run_sizes(grid, r);
    }
    let offsets = forward_offsets(dim);
    let mut probe = vec![0i64; dim];
    for i in 0..n {
        let p = grid.point(i);
        let cell = grid.cell_of(i);
        for j in i + 1..grid.members(cell).end {
            if dist2(p, grid.point(j)) <= r2 {
                uf.union(i as u32, j as u32);
            }
        }
        for off in offsets.chunks_exact(dim) {
            for a in 0..dim {
                probe[a] = cell[a] + off[a];
            }
            for j in grid.members(&probe) {
                if dist2(p, grid.point(j)) <= r2 {
                    uf.union(i as u32, j as u32);
                }
            }
        }
    }
    uf.component_sizes()
}

/// On the line the components are maximal runs of sorted points with gaps
/// at most `r`. Cells are already in order, so sorting within each cell
/// sorts everything.
fn interval_run_sizes(mut grid: Grid, r: f64) -> Vec<usize> {
    for w in grid.starts.windows(2) {
        let cell = &mut grid.coords[w[0] as usize..w[1] as usize];
        for i in 1..cell.len() {
            let mut j = i;
            while j > 0 && cell[j - 1] > cell[j] {
                cell.swap(j - 1, j);
                j -= 1;
            }
        }
    }
    let mut sizes = Vec::new();
    let mut run = 1;
    for w in grid.coords.windows(2) {
        if (w[1] - w[0]) * (w[1] - w[0]) <= r * r {
            run += 1;
        } else {
            sizes.push(run);
            run = 1;
        }
    }
    sizes.push(run);
    sizes
}

/// Census of component orders of `G(pts, r)` via grid hashing with cell side
/// `r` and union-find.
pub fn component_census(pts: &Configuration, r: f64) -> Result<ClusterCensus> {
    ensure!(r > 0.0 && r.is_finite(), "radius must be positive and finite, got {r}");
    if pts.is_empty() {
        return Ok(ClusterCensus::from_sizes([], 0, r));
    }
    let sizes = component_sizes(pts.coords(), pts.dim(), r);
    Ok(ClusterCensus::from_sizes(sizes, pts.len(), r))
}

pub const BRUTE_FORCE_LIMIT: usize = 10_000;

/// Quadratic all-pairs census; test oracle for [`component_census`].
pub fn brute_force_census(pts: &Configuration, r: f64) -> Result<ClusterCensus> {
    ensure!(r > 0.0 && r.is_finite(), "radius must be positive and finite, got {r}");
    let n = pts.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyPoints {
            len: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let r2 = r * r;
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dist2(pts.point(i), pts.point(j)) <= r2 {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    Ok(ClusterCensus::from_sizes(sizes, n, r))
}

#[derive(Debug, Clone, PartialEq)]
pub enum OriginOutcome {
    /// The origin's component has `size <= k_max` points, origin first.
    ExactSize { size: usize, cluster: Configuration },
    /// The component has more than `k_max` points.
    ExceedsWindowBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OriginClusterResult {
    pub outcome: OriginOutcome,
    pub lambda: f64,
}

impl OriginClusterResult {
    pub fn size(&self) -> Option<usize> {
        match self.outcome {
            OriginOutcome::ExactSize { size, .. } => Some(size),
            OriginOutcome::ExceedsWindowBound => None,
        }
    }
}

/// Grows the component of `o` in `G(H_λ ∪ {o}, 1)`, drawing the unit-width
/// shells of `H_λ` around `o` only when the search reaches them. Returns the
/// flat cluster coordinates (origin first), or `None` once the component
/// has more than `k_max` points. A component of at most `k_max` points lies
/// in `B_{k_max-1}(o)` and its neighbors in `B_{k_max}(o)`, so only shells
/// `0..=k_max` (the window `B_{k_max+1}(o)`) are ever drawn.
///
/// `shell0` fixes the number of points in `B_1(o)`, the origin's neighbors.
pub(crate) fn grow_origin_cluster(
    lambda: f64,
    dim: usize,
    k_max: usize,
    key: u64,
    shell0: Option<u64>,
) -> Option<Vec<f64>> {
    let mut shells: Vec<Option<(Vec<f64>, Vec<bool>)>> = vec![None; k_max + 1];
    let mut cluster = vec![0.0; dim];
    let mut head = 0;
    while head * dim < cluster.len() {
        let p: Vec<f64> = cluster[head * dim..(head + 1) * dim].to_vec();
        let rho = norm(&p);
        if rho > (k_max - 1) as f64 {
            return None;
        }
        let first = math::floor((rho - 1.0).max(0.0)) as usize;
        let last = (math::floor(rho + 1.0) as usize).min(k_max);
        for (j, shell) in shells.iter_mut().enumerate().take(last + 1).skip(first) {
            let (pts, used) = shell.get_or_insert_with(|| {
                let count = if j == 0 { shell0 } else { None };
                let pts = sample_shell(lambda, dim, j as u64, key, count);
                let used = vec![false; pts.len() / dim];
                (pts, used)
            });
            for (q, flag) in pts.chunks_exact(dim).zip(used.iter_mut()) {
                if !*flag && dist2(&p, q) <= 1.0 {
                    *flag = true;
                    cluster.extend_from_slice(q);
                    if cluster.len() / dim > k_max {
                        return None;
                    }
                }
            }
        }
        head += 1;
    }
    Some(cluster)
}

/// Simulates the cluster `C(λ)` of the origin in the Boolean model with
/// unit connection radius, resolved exactly up to `k_max` points.
pub fn origin_cluster(lambda: f64, d: usize, k_max: usize, seed: u64) -> Result<OriginClusterResult> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    ensure!(k_max >= 1, "k_max must be at least 1");
    ensure!(lambda >= 0.0 && lambda.is_finite(), "intensity must be finite and >= 0");
    let outcome = match grow_origin_cluster(lambda, d, k_max, seed, None) {
        Some(coords) => OriginOutcome::ExactSize {
            size: coords.len() / d,
            cluster: Configuration::from_flat_unchecked(d, coords),
        },
        None => OriginOutcome::ExceedsWindowBound,
    };
    Ok(OriginClusterResult { outcome, lambda })
}

/// Draws the number of points of `H_λ` in `B_1(o)` conditioned on being at
/// most `max`.
pub(crate) fn truncated_poisson(rng: &mut CounterRng, mean: f64, max: u64) -> u64 {
    // weights mean^j / j!, normalized over 0..=max
    let mut weights = Vec::with_capacity(max as usize + 1);
    let mut w = 1.0;
    for j in 0..=max {
        if j > 0 {
            w *= mean / j as f64;
        }
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    let mut u = rng.uniform() * total;
    for (j, w) in weights.iter().enumerate() {
        if u < *w {
            return j as u64;
        }
        u -= w;
    }
    max
}

/// `Σ_{j < k} μ^j / j!`, i.e. `e^μ P[Poisson(μ) <= k - 1]`.
pub(crate) fn scaled_poisson_head(mean: f64, k: usize) -> f64 {
    let mut w = 1.0;
    let mut s = 1.0;
    for j in 1..k {
        w *= mean / j as f64;
        s += w;
    }
    s
}

/// Estimate of `p_k(λ) = P[|C(λ)| = k]` and of the rescaled
/// `λ^{(k-1)(d-1)} e^{θλ} p_k(λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterProbability {
    pub probability: Estimate,
    pub rescaled: Estimate,
    /// `P[|H_λ ∩ B_1(o)| <= k - 1]`, computed exactly.
    pub conditioning_mass: f64,
    pub draws: u64,
    pub hits: u64,
}

/// Estimates `p_k(λ)` from `draws` origin clusters.
///
/// `|C(λ)| = k` forces the origin to have at most `k - 1` neighbors, an
/// event of known probability. Each draw is an origin cluster conditioned
/// on that event, and the hit fraction is multiplied by its probability.
/// This is the plain simulation estimator restricted to the only draws that
/// can succeed, so it stays usable where `p_k(λ)` is astronomically small.
pub fn estimate_cluster_probability(
    lambda: f64,
    d: usize,
    k: usize,
    draws: u64,
    seed: u64,
) -> Result<ClusterProbability> {
    estimate_cluster_probability_with(&Sequential, lambda, d, k, draws, seed)
}

pub fn estimate_cluster_probability_with<E: Executor>(
    exec: &E,
    lambda: f64,
    d: usize,
    k: usize,
    draws: u64,
    seed: u64,
) -> Result<ClusterProbability> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    ensure!(k >= 1, "cluster order k must be at least 1");
    ensure!(lambda > 0.0 && lambda.is_finite(), "intensity must be positive and finite");
    ensure!(draws >= 1, "draws must be positive");
    let theta = ball_volume_any(d);
    let mu = lambda * theta;
    let head = scaled_poisson_head(mu, k);
    let mass = (math::exp(-mu) * head).min(1.0);
    let batches = crate::exec::batches(draws);
    let hits: u64 = exec
        .map(batches.len(), |b| {
            let (index, size) = batches[b];
            let mut hits = 0u64;
            for i in 0..size {
                let global = index * crate::exec::BATCH + i;
                let key = derive_key(seed, global, StreamRole::Attempt);
                let mut rng = CounterRng::new(key);
                let n0 = truncated_poisson(&mut rng, mu, k as u64 - 1);
                if let Some(c) = grow_origin_cluster(lambda, d, k, key, Some(n0)) {
                    if c.len() / d == k {
                        hits += 1;
                    }
                }
            }
            hits
        })
        .into_iter()
        .sum();
    let q = hits as f64 / draws as f64;
    let q_se = math::sqrt(q * (1.0 - q) / draws as f64);
    let probability = Estimate::new(mass * q, mass * q_se, draws);
    let scale = math::powi(lambda, ((k - 1) * (d - 1)) as i32) * head;
    let rescaled = Estimate::new(scale * q, scale * q_se, draws);
    Ok(ClusterProbability {
        probability,
        rescaled,
        conditioning_mass: mass,
        draws,
        hits,
    })
}

/// Largest pairwise distance; zero for a single point.
pub fn cluster_diameter(c: &Configuration) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    let mut best = 0.0f64;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            best = best.max(dist2(c.point(i), c.point(j)));
        }
    }
    Ok(math::sqrt(best))
}

/// Points of a cluster other than the origin, scaled by `s` and sorted
/// lexicographically.
pub(crate) fn scaled_non_origin(cluster: &[f64], dim: usize, s: f64) -> Configuration {
    let mut pts: Vec<&[f64]> = cluster.chunks_exact(dim).skip(1).collect();
    pts.sort_by(|a, b| lex_cmp(a, b));
    let coords = pts.iter().flat_map(|p| p.iter().map(|x| x * s)).collect();
    Configuration::from_flat_unchecked(dim, coords)
}
