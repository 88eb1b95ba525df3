//! Stopping-time decomposition of a density's root box into leveled cube
//! families: low-mass cubes `G^{n,0}`, light clusters `G^{n,1}` and heavy
//! clusters `G^{n,2}`, with cluster closures and the odd-subdivision
//! variant used for Hardy pipelines.
//!
//! Cubes are addressed by integer `(level, index)` pairs; a level-`n` cube
//! has side `eps^n` in internal box coordinates, `eps = 1/n0`. Grid cells
//! are assigned to cubes by an exact integer computation on cell centers,
//! so tiling checks are exact and never depend on floating-point
//! comparisons. Closures are rasterized by the strict cell-center rule
//! `dist(x, Omega_K) < eps^n / 4`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoxSpec, DomainMask, GridFunction};

/// Parameters of the stopping-time construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringParams {
    /// Subdivision factor `n0 >= 2`; the cube side shrinks by `1/n0` per level.
    pub epsilon_inv: u32,
    /// Mass threshold in (0,1): cubes with mass `<= delta` stop refining.
    pub delta: f64,
    /// Depth cap; heavy clusters surviving at this level land in `residual`.
    pub max_level: u32,
    /// Require an odd `n0 >= 3` so subdivision preserves the center cube.
    pub hardy_mode: bool,
}

impl CoveringParams {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon_inv < 2 {
            return Err(Error::config("epsilon_inv must be >= 2"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta must lie in (0,1)"));
        }
        if self.max_level == 0 {
            return Err(Error::config("max_level must be >= 1"));
        }
        if self.hardy_mode && (self.epsilon_inv % 2 == 0 || self.epsilon_inv < 3) {
            return Err(Error::config(
                "hardy_mode requires an odd subdivision factor n0 >= 3",
            ));
        }
        Ok(())
    }

    /// Largest light-cluster size guaranteed by the construction:
    /// every cluster cube carries mass > delta while the closure mass stays
    /// below 1 + delta.
    pub fn cluster_size_bound(&self) -> usize {
        (1.0 / self.delta).floor() as usize + 1
    }
}

/// A dyadic/triadic cube: level plus per-axis integer index in `[0, n0^level)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub level: u32,
    pub index: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterKind {
    Light,
    Heavy,
}

/// Connected component of above-threshold cubes at one level
/// (corner-touching adjacency).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cluster {
    pub level: u32,
    /// Sorted lexicographically; the first entry labels the cluster.
    pub cubes: Vec<Cube>,
    pub kind: ClusterKind,
    /// Mass of the cube union `Omega_K`.
    pub support_mass: f64,
    /// Mass of the closure `~Omega_K` (the `eps^n/4` neighborhood).
    pub closure_mass: f64,
}

/// One refinement level of the decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSets {
    pub level: u32,
    /// `G^{n,0}`: cubes with mass `<= delta`, with their masses.
    pub low_mass: Vec<(Cube, f64)>,
    /// `G^{n,1}`.
    pub light_clusters: Vec<Cluster>,
    /// `G^{n,2}`; their cubes are refined at the next level.
    pub heavy_clusters: Vec<Cluster>,
}

/// The full leveled family, plus whatever was still heavy at the depth cap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub root: BoxSpec,
    pub params: CoveringParams,
    pub total_mass: f64,
    pub levels: Vec<LevelSets>,
    /// Heavy-cluster cubes at `max_level` (with masses) when the recursion
    /// was cut off rather than terminating.
    pub residual: Vec<(Cube, f64)>,
}

impl Cube {
    /// Physical span along one axis inside `root`.
    pub fn span(&self, root: &BoxSpec, n0: u32, axis: usize) -> (f64, f64) {
        let side = root.extent(axis) / (n0 as f64).powi(self.level as i32);
        let lo = root.lo()[axis] + self.index[axis] as f64 * side;
        (lo, lo + side)
    }

    /// Physical side length inside `root`.
    pub fn side(&self, root: &BoxSpec, n0: u32) -> f64 {
        root.extent(0) / (n0 as f64).powi(self.level as i32)
    }

    /// Center point.
    pub fn center(&self, root: &BoxSpec, n0: u32) -> Vec<f64> {
        (0..root.d())
            .map(|a| {
                let (lo, hi) = self.span(root, n0, a);
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Euclidean distance from a point to this (closed) cube.
    pub fn distance_to(&self, root: &BoxSpec, n0: u32, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for a in 0..root.d() {
            let (lo, hi) = self.span(root, n0, a);
            let d = if point[a] < lo {
                lo - point[a]
            } else if point[a] > hi {
                point[a] - hi
            } else {
                0.0
            };
            acc += d * d;
        }
        acc.sqrt()
    }
}

/// Exact integer cube index of a grid cell: cell `j` (center at
/// `(2j+1)/(2 points)` in box coordinates) lies in cube
/// `floor((2j+1) n0^level / (2 points))`.
fn cell_cube_index(j: usize, points: usize, n0_pow: u64) -> u64 {
    ((2 * j as u64 + 1) * n0_pow) / (2 * points as u64)
}

fn cells_of_cube(root: &BoxSpec, cube: &Cube, n0: u32) -> Vec<usize> {
    // per-axis cell ranges, then cartesian product
    let n0_pow = (n0 as u64).pow(cube.level);
    let mut ranges: Vec<Vec<usize>> = Vec::with_capacity(root.d());
    for a in 0..root.d() {
        let pts = root.points()[a];
        let cells = (0..pts)
            .filter(|&j| cell_cube_index(j, pts, n0_pow) == cube.index[a])
            .collect();
        ranges.push(cells);
    }
    let mut out = Vec::new();
    let mut stack = vec![0usize; root.d()];
    fn rec(
        axis: usize,
        ranges: &[Vec<usize>],
        points: &[usize],
        stack: &mut Vec<usize>,
        flat_prefix: usize,
        out: &mut Vec<usize>,
    ) {
        if axis == ranges.len() {
            out.push(flat_prefix);
            return;
        }
        for &j in &ranges[axis] {
            stack[axis] = j;
            rec(
                axis + 1,
                ranges,
                points,
                stack,
                flat_prefix * points[axis] + j,
                out,
            );
        }
    }
    rec(0, &ranges, root.points(), &mut stack, 0, &mut out);
    out
}

struct DensityView<'a> {
    rho: &'a GridFunction,
    cell_weight: f64,
}

impl<'a> DensityView<'a> {
    fn mass_of_cells(&self, cells: &[usize]) -> f64 {
        cells
            .iter()
            .map(|&i| self.rho.values[i].re.max(0.0) * self.cell_weight)
            .sum()
    }
}

/// Union-find with path halving.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // attach the larger root id under the smaller for determinism
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Cells whose centers lie strictly within `side/4` of the cube union.
fn closure_cells(root: &BoxSpec, cubes: &[Cube], n0: u32) -> Vec<usize> {
    let level = cubes[0].level;
    let n0_pow = (n0 as u64).pow(level);
    let margin = root.extent(0) / (n0 as f64).powi(level as i32) / 4.0;
    // cube membership lookup
    let cube_set: std::collections::BTreeSet<&[u64]> =
        cubes.iter().map(|c| c.index.as_slice()).collect();
    let d = root.d();
    let mut out = Vec::new();
    for (flat, idx) in root.multi_indices() {
        let center = root.center(flat);
        // level-n cube holding this cell
        let mut home = vec![0u64; d];
        for a in 0..d {
            home[a] = cell_cube_index(idx[a], root.points()[a], n0_pow);
        }
        // check the home cube and its Chebyshev neighbours
        let mut inside = false;
        let mut probe = vec![0u64; d];
        let mut offsets = vec![-1i64; d];
        'outer: loop {
            let mut valid = true;
            for a in 0..d {
                let v = home[a] as i64 + offsets[a];
                if v < 0 || v >= n0_pow as i64 {
                    valid = false;
                    break;
                }
                probe[a] = v as u64;
            }
            if valid && cube_set.contains(probe.as_slice()) {
                let cube = Cube {
                    level,
                    index: probe.clone(),
                };
                if cube.distance_to(root, n0, &center[..d]) < margin {
                    inside = true;
                }
            }
            if inside {
                break;
            }
            // advance offsets in {-1,0,1}^d
            for a in (0..d).rev() {
                offsets[a] += 1;
                if offsets[a] <= 1 {
                    continue 'outer;
                }
                offsets[a] = -1;
            }
            break;
        }
        if inside {
            out.push(flat);
        }
    }
    out
}

/// Run the stopping-time construction on a nonnegative density.
pub fn decompose(rho: &GridFunction, params: &CoveringParams) -> Result<Decomposition> {
    params.validate()?;
    let root = rho.box_spec.clone();
    if !root.is_cube() {
        return Err(Error::config("covering requires a cubic root box"));
    }
    for v in &rho.values {
        if v.im.abs() > 1e-12 || v.re < -1e-12 {
            return Err(Error::config("density must be real and nonnegative"));
        }
    }
    let n0 = params.epsilon_inv;
    let view = DensityView {
        rho,
        cell_weight: root.cell_volume(),
    };
    let all_cells: Vec<usize> = (0..root.total_points()).collect();
    let total_mass = view.mass_of_cells(&all_cells);

    // level-0 root cube is refined unconditionally
    let mut active: Vec<(Cube, Vec<usize>)> = vec![(
        Cube {
            level: 0,
            index: vec![0; root.d()],
        },
        all_cells,
    )];
    let mut levels = Vec::new();
    let mut residual = Vec::new();

    for n in 1..=params.max_level {
        // resolution guard: a level-n cube must span at least one cell
        let cells_per_cube = root.points()[0] as f64 / (n0 as f64).powi(n as i32);
        if cells_per_cube < 1.0 {
            return Err(Error::config(format!(
                "resolution exhausted: level {n} cubes are smaller than a grid cell"
            )));
        }
        let n0_pow = (n0 as u64).pow(n);
        // split every active cube into its children and weigh them
        let mut children: Vec<(Cube, Vec<usize>, f64)> = Vec::new();
        for (parent, cells) in &active {
            let mut buckets: std::collections::BTreeMap<Vec<u64>, Vec<usize>> =
                std::collections::BTreeMap::new();
            for &cell in cells {
                let mut rem = cell;
                let mut key = vec![0u64; root.d()];
                for a in (0..root.d()).rev() {
                    let j = rem % root.points()[a];
                    rem /= root.points()[a];
                    key[a] = cell_cube_index(j, root.points()[a], n0_pow);
                }
                buckets.entry(key).or_default().push(cell);
            }
            // enumerate all n0^d children, including empty ones
            let mut child_idx = vec![0u64; root.d()];
            loop {
                let idx: Vec<u64> = (0..root.d())
                    .map(|a| parent.index[a] * n0 as u64 + child_idx[a])
                    .collect();
                let cells = buckets.remove(&idx).unwrap_or_default();
                let mass = view.mass_of_cells(&cells);
                children.push((
                    Cube {
                        level: n,
                        index: idx,
                    },
                    cells,
                    mass,
                ));
                let mut a = root.d();
                loop {
                    if a == 0 {
                        break;
                    }
                    a -= 1;
                    child_idx[a] += 1;
                    if child_idx[a] < n0 as u64 {
                        break;
                    }
                    child_idx[a] = 0;
                }
                if child_idx.iter().all(|&v| v == 0) {
                    break;
                }
            }
        }
        children.sort_by(|a, b| a.0.cmp(&b.0));

        let mut low_mass = Vec::new();
        let mut above: Vec<(Cube, Vec<usize>, f64)> = Vec::new();
        for (cube, cells, mass) in children {
            if mass <= params.delta {
                low_mass.push((cube, mass));
            } else {
                above.push((cube, cells, mass));
            }
        }

        // cluster the above-threshold cubes by corner-touching adjacency
        let mut uf = UnionFind::new(above.len());
        let index_of: std::collections::BTreeMap<Vec<u64>, usize> = above
            .iter()
            .enumerate()
            .map(|(i, (c, _, _))| (c.index.clone(), i))
            .collect();
        for (i, (cube, _, _)) in above.iter().enumerate() {
            let d = root.d();
            let mut offsets = vec![-1i64; d];
            loop {
                let mut probe = vec![0u64; d];
                let mut valid = false;
                let mut ok = true;
                for a in 0..d {
                    let v = cube.index[a] as i64 + offsets[a];
                    if v < 0 || v >= n0_pow as i64 {
                        ok = false;
                        break;
                    }
                    probe[a] = v as u64;
                    if offsets[a] != 0 {
                        valid = true;
                    }
                }
                if ok && valid {
                    if let Some(&j) = index_of.get(&probe) {
                        uf.union(i, j);
                    }
                }
                let mut a = d;
                let mut done = true;
                while a > 0 {
                    a -= 1;
                    offsets[a] += 1;
                    if offsets[a] <= 1 {
                        done = false;
                        break;
                    }
                    offsets[a] = -1;
                }
                if done {
                    break;
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> =
            std::collections::BTreeMap::new();
        for i in 0..above.len() {
            groups.entry(uf.find(i)).or_default().push(i);
        }

        let mut light_clusters = Vec::new();
        let mut heavy_clusters = Vec::new();
        let mut next_active = Vec::new();
        // groups come out ordered by their smallest member (above is sorted)
        for (_, members) in groups {
            let cubes: Vec<Cube> = members.iter().map(|&i| above[i].0.clone()).collect();
            let support_mass: f64 = members.iter().map(|&i| above[i].2).sum();
            let closure = closure_cells(&root, &cubes, n0);
            let closure_mass = view.mass_of_cells(&closure);
            let kind = if closure_mass < 1.0 + params.delta {
                ClusterKind::Light
            } else {
                ClusterKind::Heavy
            };
            let cluster = Cluster {
                level: n,
                cubes: cubes.clone(),
                kind,
                support_mass,
                closure_mass,
            };
            match kind {
                ClusterKind::Light => light_clusters.push(cluster),
                ClusterKind::Heavy => {
                    for &i in &members {
                        next_active.push((above[i].0.clone(), above[i].1.clone()));
                    }
                    heavy_clusters.push(cluster);
                }
            }
        }
        let heavy_masses: Vec<(Cube, f64)> = next_active
            .iter()
            .map(|(c, cells)| (c.clone(), view.mass_of_cells(cells)))
            .collect();
        levels.push(LevelSets {
            level: n,
            low_mass,
            light_clusters,
            heavy_clusters,
        });
        if next_active.is_empty() {
            active = Vec::new();
            break;
        }
        if n == params.max_level {
            residual = heavy_masses;
            active = Vec::new();
            break;
        }
        // guard before descending another level
        let next_cells_per_cube = root.points()[0] as f64 / (n0 as f64).powi(n as i32 + 1);
        if next_cells_per_cube < 1.0 {
            return Err(Error::config(format!(
                "resolution exhausted: heavy clusters remain but level {} cubes \
                 would be smaller than a grid cell",
                n + 1
            )));
        }
        active = next_active;
    }
    let _ = active;
    Ok(Decomposition {
        root,
        params: params.clone(),
        total_mass,
        levels,
        residual,
    })
}

impl Decomposition {
    pub fn epsilon(&self) -> f64 {
        1.0 / self.params.epsilon_inv as f64
    }

    /// Physical cube side at a level.
    pub fn side_at(&self, level: u32) -> f64 {
        self.root.extent(0) * self.epsilon().powi(level as i32)
    }

    /// All terminal cubes: low-mass cubes, light-cluster cubes, residual.
    pub fn terminal_cubes(&self) -> Vec<Cube> {
        let mut out = Vec::new();
        for lv in &self.levels {
            out.extend(lv.low_mass.iter().map(|(c, _)| c.clone()));
            for cl in &lv.light_clusters {
                out.extend(cl.cubes.iter().cloned());
            }
        }
        out.extend(self.residual.iter().map(|(c, _)| c.clone()));
        out
    }

    /// Mask of cells belonging to a cube.
    pub fn cube_mask(&self, cube: &Cube) -> Result<DomainMask> {
        let cells = cells_of_cube(&self.root, cube, self.params.epsilon_inv);
        let mut mask = vec![false; self.root.total_points()];
        for c in cells {
            mask[c] = true;
        }
        DomainMask::new(self.root.clone(), mask)
    }

    /// Mask of a cluster's support `Omega_K`.
    pub fn cluster_support_mask(&self, cluster: &Cluster) -> Result<DomainMask> {
        let mut mask = vec![false; self.root.total_points()];
        for cube in &cluster.cubes {
            for c in cells_of_cube(&self.root, cube, self.params.epsilon_inv) {
                mask[c] = true;
            }
        }
        DomainMask::new(self.root.clone(), mask)
    }

    /// Mask of a cluster's closure `~Omega_K`.
    pub fn cluster_closure_mask(&self, cluster: &Cluster) -> Result<DomainMask> {
        let cells = closure_cells(&self.root, &cluster.cubes, self.params.epsilon_inv);
        let mut mask = vec![false; self.root.total_points()];
        for c in cells {
            mask[c] = true;
        }
        DomainMask::new(self.root.clone(), mask)
    }

    /// Origin property of the odd subdivision: every terminal cube either
    /// has the origin as its center or lies at distance `>= side/2` from it.
    pub fn hardy_origin_check(&self) -> Result<bool> {
        if !self.params.hardy_mode {
            return Err(Error::config("hardy_origin_check requires hardy_mode"));
        }
        let d = self.root.d();
        let origin = vec![0.0; d];
        // the box itself must be centered at the origin
        for a in 0..d {
            if (self.root.lo()[a] + self.root.hi()[a]).abs() > 1e-9 * self.root.extent(a) {
                return Err(Error::config(
                    "hardy_origin_check requires an origin-centered root box",
                ));
            }
        }
        let n0 = self.params.epsilon_inv;
        for cube in self.terminal_cubes() {
            let side = cube.side(&self.root, n0);
            let center = cube.center(&self.root, n0);
            let center_is_origin = center.iter().all(|c| c.abs() < 1e-9 * side);
            if center_is_origin {
                continue;
            }
            let dist = cube.distance_to(&self.root, n0, &origin);
            if dist < side / 2.0 - 1e-9 * side {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Outcome of the invariant audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tiling_exact: bool,
    pub mass_thresholds: bool,
    pub cluster_sizes: bool,
    pub closures_disjoint: bool,
    pub clusters_connected: bool,
    /// Only present when the decomposition ran in hardy mode.
    pub hardy_origin: Option<bool>,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.tiling_exact
            && self.mass_thresholds
            && self.cluster_sizes
            && self.closures_disjoint
            && self.clusters_connected
            && self.hardy_origin.unwrap_or(true)
    }
}

/// Audit every structural invariant of a decomposition against the density.
pub fn verify(dec: &Decomposition, rho: &GridFunction) -> VerifyReport {
    let mut failures = Vec::new();
    let n0 = dec.params.epsilon_inv as u64;
    let view = DensityView {
        rho,
        cell_weight: dec.root.cell_volume(),
    };

    // 1. exact tiling at the finest level, in integer arithmetic
    let terminal = dec.terminal_cubes();
    let finest = terminal.iter().map(|c| c.level).max().unwrap_or(1);
    let per_axis = n0.pow(finest);
    let d = dec.root.d();
    let total_fine: u128 = (per_axis as u128).pow(d as u32);
    let mut tiling_exact = true;
    if total_fine <= (1 << 26) {
        let mut occupancy = vec![0u8; total_fine as usize];
        for cube in &terminal {
            let scale = n0.pow(finest - cube.level);
            // paint the fine-cell block of this cube
            let mut counters = vec![0u64; d];
            loop {
                let mut flat: u128 = 0;
                for a in 0..d {
                    flat = flat * per_axis as u128
                        + (cube.index[a] * scale + counters[a]) as u128;
                }
                occupancy[flat as usize] += 1;
                let mut a = d;
                let mut done = true;
                while a > 0 {
                    a -= 1;
                    counters[a] += 1;
                    if counters[a] < scale {
                        done = false;
                        break;
                    }
                    counters[a] = 0;
                }
                if done {
                    break;
                }
            }
        }
        if occupancy.iter().any(|&o| o != 1) {
            tiling_exact = false;
            let over = occupancy.iter().filter(|&&o| o > 1).count();
            let under = occupancy.iter().filter(|&&o| o == 0).count();
            failures.push(format!(
                "tiling: {over} fine cells covered more than once, {under} uncovered"
            ));
        }
    } else {
        // volume check only (still exact integers)
        let mut vol: u128 = 0;
        for cube in &terminal {
            vol += (n0.pow(finest - cube.level) as u128).pow(d as u32);
        }
        if vol != total_fine {
            tiling_exact = false;
            failures.push(format!("tiling volume {vol} != {total_fine}"));
        }
    }

    // 2. mass thresholds, recomputed from the density
    let mut mass_thresholds = true;
    for lv in &dec.levels {
        for (cube, recorded) in &lv.low_mass {
            let mass = view.mass_of_cells(&cells_of_cube(&dec.root, cube, dec.params.epsilon_inv));
            if mass > dec.params.delta + 1e-12 || (mass - recorded).abs() > 1e-9 {
                mass_thresholds = false;
                failures.push(format!(
                    "level {} low-mass cube {:?}: mass {mass} vs recorded {recorded}",
                    lv.level, cube.index
                ));
            }
        }
        for cl in lv.light_clusters.iter().chain(&lv.heavy_clusters) {
            let closure = closure_cells(&dec.root, &cl.cubes, dec.params.epsilon_inv);
            let mass = view.mass_of_cells(&closure);
            let light_ok = mass < 1.0 + dec.params.delta;
            match cl.kind {
                ClusterKind::Light if !light_ok => {
                    mass_thresholds = false;
                    failures.push(format!(
                        "level {} light cluster has closure mass {mass}",
                        lv.level
                    ));
                }
                ClusterKind::Heavy if light_ok => {
                    mass_thresholds = false;
                    failures.push(format!(
                        "level {} heavy cluster has closure mass {mass}",
                        lv.level
                    ));
                }
                _ => {}
            }
            // every cluster cube must be above the refinement threshold
            for cube in &cl.cubes {
                let m = view
                    .mass_of_cells(&cells_of_cube(&dec.root, cube, dec.params.epsilon_inv));
                if m <= dec.params.delta - 1e-12 {
                    mass_thresholds = false;
                    failures.push(format!(
                        "level {} cluster cube {:?} has mass {m} <= delta",
                        lv.level, cube.index
                    ));
                }
            }
        }
    }

    // 3. light-cluster size bound
    let bound = dec.params.cluster_size_bound();
    let mut cluster_sizes = true;
    for lv in &dec.levels {
        for cl in &lv.light_clusters {
            if cl.cubes.len() > bound {
                cluster_sizes = false;
                failures.push(format!(
                    "level {} light cluster has {} cubes (bound {bound})",
                    lv.level,
                    cl.cubes.len()
                ));
            }
        }
    }

    // 4. same-level closures pairwise disjoint (all clusters)
    let mut closures_disjoint = true;
    for lv in &dec.levels {
        let all: Vec<&Cluster> = lv
            .light_clusters
            .iter()
            .chain(&lv.heavy_clusters)
            .collect();
        let masks: Vec<Vec<usize>> = all
            .iter()
            .map(|cl| closure_cells(&dec.root, &cl.cubes, dec.params.epsilon_inv))
            .collect();
        for i in 0..masks.len() {
            for j in i + 1..masks.len() {
                let set: std::collections::BTreeSet<usize> = masks[i].iter().copied().collect();
                if masks[j].iter().any(|c| set.contains(c)) {
                    closures_disjoint = false;
                    failures.push(format!("level {}: closures {i} and {j} overlap", lv.level));
                }
            }
        }
    }

    // 5. clusters connected under corner-touching adjacency
    let mut clusters_connected = true;
    for lv in &dec.levels {
        for cl in lv.light_clusters.iter().chain(&lv.heavy_clusters) {
            if !is_connected(&cl.cubes) {
                clusters_connected = false;
                failures.push(format!("level {}: disconnected cluster", lv.level));
            }
        }
    }

    let hardy_origin = if dec.params.hardy_mode {
        Some(dec.hardy_origin_check().unwrap_or(false))
    } else {
        None
    };
    if hardy_origin == Some(false) {
        failures.push("hardy origin property violated".to_string());
    }

    VerifyReport {
        tiling_exact,
        mass_thresholds,
        cluster_sizes,
        closures_disjoint,
        clusters_connected,
        hardy_origin,
        failures,
    }
}

fn is_connected(cubes: &[Cube]) -> bool {
    if cubes.is_empty() {
        return false;
    }
    let n = cubes.len();
    let adjacent = |a: &Cube, b: &Cube| {
        a.index
            .iter()
            .zip(&b.index)
            .all(|(&x, &y)| (x as i64 - y as i64).abs() <= 1)
    };
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && adjacent(&cubes[i], &cubes[j]) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box(n: usize) -> BoxSpec {
        BoxSpec::new(vec![0.0], vec![1.0], vec![n]).unwrap()
    }

    fn uniform_density(n: usize, total_mass: f64) -> GridFunction {
        let b = unit_box(n);
        GridFunction::from_fn(b, move |_| Complex64::new(total_mass, 0.0))
    }

    fn params(eps_inv: u32, delta: f64) -> CoveringParams {
        CoveringParams {
            epsilon_inv: eps_inv,
            delta,
            max_level: 6,
            hardy_mode: false,
        }
    }

    #[test]
    fn uniform_low_mass_terminates_at_level_one() {
        // total mass 0.5, eps=1/2, delta=0.3: both level-1 cubes carry 0.25
        let rho = uniform_density(64, 0.5);
        let dec = decompose(&rho, &params(2, 0.3)).unwrap();
        assert_eq!(dec.levels.len(), 1);
        let lv = &dec.levels[0];
        assert_eq!(lv.low_mass.len(), 2);
        for (_, m) in &lv.low_mass {
            approx::assert_relative_eq!(*m, 0.25, max_relative = 1e-12);
        }
        assert!(lv.light_clusters.is_empty() && lv.heavy_clusters.is_empty());
        assert!(dec.residual.is_empty());
    }

    #[test]
    fn two_interior_bumps_form_one_light_cluster() {
        // Two interior bumps of mass 0.6 at 1/4 and 3/4. Both level-1 cubes
        // exceed delta and touch at the midpoint, so corner-touching
        // adjacency joins them into a single light cluster of two cubes
        // with closure mass 1.2 < 1.3.
        let b = unit_box(256);
        let mut rho = GridFunction::from_fn(b, |x| {
            let bump = |c: f64| (-(x[0] - c) * (x[0] - c) / (2.0 * 0.03 * 0.03)).exp();
            Complex64::new(bump(0.25) + bump(0.75), 0.0)
        });
        // normalize each bump to mass 0.6 (they are identical and far apart)
        let total: f64 = rho.integral().re;
        for v in rho.values.iter_mut() {
            *v *= 1.2 / total;
        }
        let dec = decompose(&rho, &params(2, 0.3)).unwrap();
        assert_eq!(dec.levels.len(), 1);
        let lv = &dec.levels[0];
        assert!(lv.low_mass.is_empty());
        assert_eq!(lv.light_clusters.len(), 1);
        let cl = &lv.light_clusters[0];
        assert_eq!(cl.cubes.len(), 2);
        approx::assert_relative_eq!(cl.support_mass, 1.2, max_relative = 1e-9);
        assert!(cl.closure_mass < 1.3);
        assert_eq!(cl.kind, ClusterKind::Light);
    }

    #[test]
    fn uniform_heavy_chain_descends_four_levels() {
        // total mass 2.6, eps=1/2, delta=0.3: cube masses 1.3, 0.65, 0.325
        // all exceed 0.3 and each level is a single heavy chain; level 4
        // cubes carry 0.1625 <= 0.3 and everything terminates there.
        let rho = uniform_density(64, 2.6);
        let dec = decompose(&rho, &params(2, 0.3)).unwrap();
        assert_eq!(dec.levels.len(), 4);
        for lv in &dec.levels[..3] {
            assert!(lv.low_mass.is_empty());
            assert!(lv.light_clusters.is_empty());
            assert_eq!(lv.heavy_clusters.len(), 1, "level {}", lv.level);
            let expected = 2.6 / 2f64.powi(lv.level as i32);
            for cube in &dec.levels[lv.level as usize - 1].heavy_clusters[0].cubes {
                let m = DensityView {
                    rho: &rho,
                    cell_weight: rho.box_spec.cell_volume(),
                }
                .mass_of_cells(&cells_of_cube(&rho.box_spec, cube, 2));
                approx::assert_relative_eq!(m, expected, max_relative = 1e-9);
            }
        }
        let last = &dec.levels[3];
        assert_eq!(last.low_mass.len(), 16);
        for (_, m) in &last.low_mass {
            approx::assert_relative_eq!(*m, 0.1625, max_relative = 1e-9);
        }
        assert!(last.heavy_clusters.is_empty());
        assert!(dec.residual.is_empty());
    }

    #[test]
    fn verify_passes_on_seeded_random_densities() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..20 {
            let n = 128;
            let b = unit_box(n);
            let f = GridFunction::random_band_limited(b.clone(), 6, &mut rng);
            let mut rho = GridFunction::from_fn(b, |_| Complex64::new(0.0, 0.0));
            for (r, v) in rho.values.iter_mut().zip(&f.values) {
                *r = Complex64::new(v.norm_sqr(), 0.0);
            }
            let total = rho.integral().re;
            let target = rng.gen_range(0.5..4.0);
            for v in rho.values.iter_mut() {
                *v *= target / total;
            }
            let p = params(2, 0.25);
            let dec = decompose(&rho, &p).unwrap();
            let rep = verify(&dec, &rho);
            assert!(rep.all_pass(), "trial {trial}: {:?}", rep.failures);
        }
    }

    #[test]
    fn verify_catches_moved_cube() {
        let rho = uniform_density(64, 2.6);
        let mut dec = decompose(&rho, &params(2, 0.3)).unwrap();
        // move one terminal cube up a level: tiling must now fail
        let (cube, m) = dec.levels[3].low_mass[0].clone();
        dec.levels[3].low_mass[0] = (
            Cube {
                level: cube.level - 1,
                index: cube.index.iter().map(|&i| i / 2).collect(),
            },
            m,
        );
        let rep = verify(&dec, &rho);
        assert!(!rep.tiling_exact);
        assert!(!rep.all_pass());
    }

    #[test]
    fn verify_catches_oversized_cluster() {
        let rho = uniform_density(64, 2.6);
        let mut dec = decompose(&rho, &params(2, 0.3)).unwrap();
        // inject a fake light cluster with more than floor(1/delta)+1 cubes
        let bound = dec.params.cluster_size_bound();
        let cubes: Vec<Cube> = (0..bound as u64 + 1)
            .map(|i| Cube {
                level: 4,
                index: vec![i],
            })
            .collect();
        dec.levels[3].light_clusters.push(Cluster {
            level: 4,
            cubes,
            kind: ClusterKind::Light,
            support_mass: 1.0,
            closure_mass: 1.0,
        });
        let rep = verify(&dec, &rho);
        assert!(!rep.cluster_sizes);
    }

    #[test]
    fn hardy_origin_property_odd_subdivision() {
        // centered box, n0 = 3: the central cube of every level is
        // origin-centered, every other cube is at distance >= side/2
        let b = BoxSpec::new(vec![-0.5], vec![0.5], vec![128]).unwrap();
        let rho = GridFunction::from_fn(b, |x| {
            Complex64::new(3.0 * (-(x[0] * x[0]) / 0.02).exp(), 0.0)
        });
        let p = CoveringParams {
            epsilon_inv: 3,
            delta: 0.3,
            max_level: 3,
            hardy_mode: true,
        };
        let dec = decompose(&rho, &p).unwrap();
        assert!(dec.hardy_origin_check().unwrap());
        let rep = verify(&dec, &rho);
        assert!(rep.all_pass(), "{:?}", rep.failures);
    }

    #[test]
    fn even_subdivision_fails_origin_property() {
        // n0 = 2 on a centered box puts the origin at a corner of all four
        // level-1 cubes: distance 0 without being a center.
        let b = BoxSpec::new(vec![-0.5, -0.5], vec![0.5, 0.5], vec![32, 32]).unwrap();
        let rho = GridFunction::from_fn(b, |x| {
            Complex64::new(8.0 * (-(x[0] * x[0] + x[1] * x[1]) / 0.005).exp(), 0.0)
        });
        let mut p = params(2, 0.3);
        p.max_level = 2;
        let mut dec = decompose(&rho, &p).unwrap();
        // force the check despite the even subdivision
        dec.params.hardy_mode = true;
        assert!(!dec.hardy_origin_check().unwrap());
    }

    #[test]
    fn hardy_mode_rejects_even_subdivision() {
        let p = CoveringParams {
            epsilon_inv: 2,
            delta: 0.3,
            max_level: 3,
            hardy_mode: true,
        };
        assert!(p.validate().is_err());
        let rho = uniform_density(64, 1.0);
        assert!(decompose(&rho, &p).is_err());
    }

    #[test]
    fn residual_kicks_in_at_depth_cap() {
        // a very concentrated spike stays heavy past the cap
        let b = unit_box(256);
        let rho = {
            let mut f = GridFunction::from_fn(b, |_| Complex64::new(0.0, 0.0));
            // put mass 3 into a couple of adjacent cells
            let w = f.box_spec.cell_volume();
            f.values[128] = Complex64::new(1.5 / w, 0.0);
            f.values[129] = Complex64::new(1.5 / w, 0.0);
            f
        };
        let p = CoveringParams {
            epsilon_inv: 2,
            delta: 0.2,
            max_level: 3,
            hardy_mode: false,
        };
        let dec = decompose(&rho, &p).unwrap();
        assert!(!dec.residual.is_empty());
        let rep = verify(&dec, &rho);
        assert!(rep.all_pass(), "{:?}", rep.failures);
    }

    #[test]
    fn resolution_exhaustion_is_an_error() {
        let b = unit_box(8);
        let rho = {
            let mut f = GridFunction::from_fn(b, |_| Complex64::new(0.0, 0.0));
            let w = f.box_spec.cell_volume();
            f.values[3] = Complex64::new(3.0 / w, 0.0);
            f
        };
        let p = CoveringParams {
            epsilon_inv: 2,
            delta: 0.2,
            max_level: 10,
            hardy_mode: false,
        };
        let err = decompose(&rho, &p).unwrap_err();
        assert!(err.to_string().contains("resolution exhausted"));
    }

    #[test]
    fn determinism_identical_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = unit_box(128);
        let f = GridFunction::random_band_limited(b.clone(), 5, &mut rng);
        let mut rho = GridFunction::from_fn(b, |_| Complex64::new(0.0, 0.0));
        for (r, v) in rho.values.iter_mut().zip(&f.values) {
            *r = Complex64::new(2.0 * v.norm_sqr(), 0.0);
        }
        let total = rho.integral().re;
        for v in rho.values.iter_mut() {
            *v *= 2.5 / total;
        }
        let p = params(2, 0.25);
        let a = decompose(&rho, &p).unwrap();
        let b2 = decompose(&rho, &p).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b2).unwrap());
    }
}
