//! Local exclusion machinery: per-scale ball families built from heavy
//! cubes, the fully explicit interaction lower bound
//! `sum_n (2 C_n)^{-1} (R_n^{-2s} - R_{n-1}^{-2s}) sum_m M_{n,m}(M_{n,m}-1)`
//! (convention `R_0 = +infinity`), and the interaction expectation of
//! N-body states against the pair kernel `|x_i - x_j|^{-2s}`.
//!
//! The pair kernel here is the single source of truth shared by energy
//! expectations and bound evaluations: coincident cells are regularized by
//! the half-cell offset `|z| >= h/2`.

use serde::{Deserialize, Serialize};

use crate::covering::{ClusterKind, Decomposition};
use crate::error::{Error, Result};
use crate::fft::{fft_nd, ifft_nd};
use crate::grid::GridFunction;
use crate::nbody::{NBodyState, StateData};
use num_complex::Complex64;

/// `max(|z|, h/2)^{-2s}`: the interaction kernel at cell-center displacement.
pub fn pair_kernel(dist: f64, s: f64, h: f64) -> f64 {
    dist.max(0.5 * h).powf(-2.0 * s)
}

/// One rasterized region `Omega_{n,m}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallRegion {
    pub center: Vec<f64>,
    /// Flat cell indices of the rasterization (cell-center rule, strict).
    pub cells: Vec<usize>,
    /// `∫_{Omega_{n,m}} rho` over those cells.
    pub mass: f64,
}

/// All regions of one length scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallScale {
    pub level: u32,
    /// Diameter bound `R_n` of this scale (physical units).
    pub radius: f64,
    /// Exact grid overlap count `max_x sum_m 1_{Omega_{n,m}}(x)`.
    pub overlap_count: u32,
    pub regions: Vec<BallRegion>,
}

/// Per-scale families with the bookkeeping needed by the exclusion bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallFamilySet {
    pub scales: Vec<BallScale>,
    /// Balls whose rasterized mass fell below `1 + delta` and were dropped
    /// to keep the evaluated bound honest: `(level, center, mass)`.
    pub dropped: Vec<(u32, Vec<f64>, f64)>,
}

impl BallFamilySet {
    /// Structural checks: radii strictly decreasing, per-scale overlap
    /// counts consistent, region diameters within the scale radius.
    pub fn validate(&self) -> Result<()> {
        for w in self.scales.windows(2) {
            if !(w[1].radius < w[0].radius) {
                return Err(Error::config("scale radii must be strictly decreasing"));
            }
        }
        for sc in &self.scales {
            for reg in &sc.regions {
                if reg.cells.len() > 1 {
                    // bounding-box estimate of the cell-center diameter
                    // (exact enough: centers lie within radius/2 of the ball
                    // center by construction)
                    if !reg.cells.is_empty() && sc.radius <= 0.0 {
                        return Err(Error::config("nonpositive scale radius"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `sum over scales and regions of the masses`, for reports.
    pub fn total_mass(&self) -> f64 {
        self.scales
            .iter()
            .flat_map(|s| &s.regions)
            .map(|r| r.mass)
            .sum()
    }
}

/// Evaluate the telescoped exclusion lower bound at order `s`.
///
/// Negative per-region terms (mass below 1) are kept, matching the formula;
/// scales without regions contribute nothing but still occupy their slot in
/// the telescoping sequence.
pub fn exclusion_lower_bound(fams: &BallFamilySet, s: f64) -> Result<f64> {
    fams.validate()?;
    let mut acc = 0.0;
    let mut prev_radius: Option<f64> = None; // None = R_0 = +infinity
    for sc in &fams.scales {
        let weight_prev = match prev_radius {
            None => 0.0,
            Some(r) => r.powf(-2.0 * s),
        };
        let weight = sc.radius.powf(-2.0 * s) - weight_prev;
        debug_assert!(weight >= 0.0);
        if !sc.regions.is_empty() {
            if sc.overlap_count == 0 {
                return Err(Error::config("populated scale with zero overlap count"));
            }
            let mass_term: f64 = sc.regions.iter().map(|r| r.mass * (r.mass - 1.0)).sum();
            acc += weight / (2.0 * sc.overlap_count as f64) * mass_term;
        }
        prev_radius = Some(sc.radius);
    }
    Ok(acc)
}

/// Scale radius `R_n = 2 sqrt(d) (delta^{-1} + 2) * side_n` for cubes of
/// physical side `side_n`.
pub fn scale_radius(d: usize, delta: f64, side: f64) -> f64 {
    2.0 * (d as f64).sqrt() * (1.0 / delta + 2.0) * side
}

/// Build the per-scale ball families of a decomposition: one ball of radius
/// `R_n / 2` around the center of every heavy-cluster cube, plus the root
/// ball at scale zero. Balls whose rasterized mass misses `1 + delta` are
/// flagged and dropped.
pub fn build_ball_families(dec: &Decomposition, rho: &GridFunction) -> Result<BallFamilySet> {
    if rho.box_spec != dec.root {
        return Err(Error::config("density grid does not match the decomposition"));
    }
    let d = dec.root.d();
    let delta = dec.params.delta;
    let w = dec.root.cell_volume();
    let mut scales = Vec::new();
    let mut dropped = Vec::new();

    // (level, centers) for every scale: root at level 0, then heavy cubes
    let mut per_level: Vec<(u32, Vec<Vec<f64>>)> = Vec::new();
    let root_center: Vec<f64> = (0..d)
        .map(|a| 0.5 * (dec.root.lo()[a] + dec.root.hi()[a]))
        .collect();
    per_level.push((0, vec![root_center]));
    for lv in &dec.levels {
        let mut centers = Vec::new();
        for cl in &lv.heavy_clusters {
            debug_assert_eq!(cl.kind, ClusterKind::Heavy);
            for cube in &cl.cubes {
                centers.push(cube.center(&dec.root, dec.params.epsilon_inv));
            }
        }
        if !centers.is_empty() {
            per_level.push((lv.level, centers));
        }
    }

    for (level, centers) in per_level {
        let side = dec.side_at(level);
        let radius = scale_radius(d, delta, side);
        let r_half = radius / 2.0;
        let mut regions = Vec::new();
        let mut overlap = vec![0u32; dec.root.total_points()];
        for center in centers {
            let mut cells = Vec::new();
            let mut mass = 0.0;
            for flat in 0..dec.root.total_points() {
                let x = dec.root.center(flat);
                let dist2: f64 = (0..d).map(|a| (x[a] - center[a]).powi(2)).sum();
                if dist2.sqrt() < r_half {
                    cells.push(flat);
                    mass += rho.values[flat].re.max(0.0) * w;
                }
            }
            if mass >= 1.0 + delta {
                for &c in &cells {
                    overlap[c] += 1;
                }
                regions.push(BallRegion {
                    center,
                    cells,
                    mass,
                });
            } else {
                dropped.push((level, center, mass));
            }
        }
        let overlap_count = overlap.iter().copied().max().unwrap_or(0);
        scales.push(BallScale {
            level,
            radius,
            overlap_count,
            regions,
        });
    }
    let fams = BallFamilySet { scales, dropped };
    fams.validate()?;
    Ok(fams)
}

/// `lambda * sum_{i<j} <Psi, |x_i - x_j|^{-2s} Psi>`.
pub fn interaction_expectation(state: &NBodyState, s: f64, lambda: f64) -> Result<f64> {
    let b = state.box_spec();
    let d = b.d();
    let h = b.spacing();
    match state.data() {
        StateData::Dense(values) => {
            let sp = state.one_body_points();
            let n = state.n_particles();
            let weight = b.cell_volume().powi(n as i32);
            // per-axis coordinates of a one-body bin
            let coords: Vec<[f64; 3]> = (0..sp).map(|f| b.center(f)).collect();
            // d=1 fast path: kernel table over |delta|
            let table: Option<Vec<f64>> = if d == 1 {
                Some(
                    (0..sp)
                        .map(|m| pair_kernel(m as f64 * h, s, h))
                        .collect(),
                )
            } else {
                None
            };
            let kernel = |sa: usize, sb: usize| -> f64 {
                if let Some(t) = &table {
                    t[sa.abs_diff(sb)]
                } else {
                    let dist2: f64 = (0..d)
                        .map(|a| (coords[sa][a] - coords[sb][a]).powi(2))
                        .sum();
                    pair_kernel(dist2.sqrt(), s, h)
                }
            };
            let mut strides = vec![1usize; n];
            for j in (0..n - 1).rev() {
                strides[j] = strides[j + 1] * sp;
            }
            // fixed-size chunks with an ordered sequential fold keep the
            // reduction deterministic under any thread count
            use rayon::prelude::*;
            const CHUNK: usize = 1 << 15;
            let partials: Vec<f64> = values
                .par_chunks(CHUNK)
                .enumerate()
                .map(|(ci, chunk)| {
                    let base = ci * CHUNK;
                    let mut acc = 0.0;
                    for (off, v) in chunk.iter().enumerate() {
                        let p = v.norm_sqr();
                        if p == 0.0 {
                            continue;
                        }
                        let flat = base + off;
                        let mut k = 0.0;
                        for i in 0..n {
                            let si = (flat / strides[i]) % sp;
                            for j in i + 1..n {
                                let sj = (flat / strides[j]) % sp;
                                k += kernel(si, sj);
                            }
                        }
                        acc += p * k;
                    }
                    acc
                })
                .collect();
            let acc: f64 = partials.iter().sum();
            Ok(lambda * acc * weight)
        }
        StateData::Product(factors) => {
            let densities: Vec<Vec<f64>> = factors
                .iter()
                .map(|f| f.values.iter().map(|v| v.norm_sqr()).collect())
                .collect();
            let mut acc = 0.0;
            for i in 0..factors.len() {
                for j in i + 1..factors.len() {
                    acc += pair_density_integral(b, &densities[i], &densities[j], s)?;
                }
            }
            Ok(lambda * acc)
        }
    }
}

/// `∬ rho_a(x) rho_b(y) k(x-y) dx dy` by zero-padded FFT convolution.
pub(crate) fn pair_density_integral(
    b: &crate::grid::BoxSpec,
    rho_a: &[f64],
    rho_b: &[f64],
    s: f64,
) -> Result<f64> {
    let d = b.d();
    let h = b.spacing();
    let pts = b.points().to_vec();
    let padded: Vec<usize> = pts.iter().map(|&n| 2 * n).collect();
    let total_padded: usize = padded.iter().product();
    // kernel over displacements delta_a in (-n_a, n_a), index delta mod 2n
    let mut kernel = vec![Complex64::new(0.0, 0.0); total_padded];
    let mut idx = vec![0usize; d];
    for slot in kernel.iter_mut() {
        let mut dist2 = 0.0;
        let mut in_range = true;
        for a in 0..d {
            let j = idx[a];
            let delta = if j < pts[a] {
                j as i64
            } else if j == pts[a] {
                in_range = false;
                0
            } else {
                j as i64 - 2 * pts[a] as i64
            };
            dist2 += (delta as f64 * h).powi(2);
        }
        if in_range {
            *slot = Complex64::new(pair_kernel(dist2.sqrt(), s, h), 0.0);
        }
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < padded[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    fft_nd(&padded, &mut kernel);
    // embed rho_b in the padded grid
    let mut g = vec![Complex64::new(0.0, 0.0); total_padded];
    for (flat, idx) in b.multi_indices() {
        let mut padded_flat = 0usize;
        for a in 0..d {
            padded_flat = padded_flat * padded[a] + idx[a];
        }
        g[padded_flat] = Complex64::new(rho_b[flat], 0.0);
    }
    fft_nd(&padded, &mut g);
    for (v, k) in g.iter_mut().zip(&kernel) {
        *v *= k;
    }
    ifft_nd(&padded, &mut g);
    let mut acc = 0.0;
    for (flat, idx) in b.multi_indices() {
        let mut padded_flat = 0usize;
        for a in 0..d {
            padded_flat = padded_flat * padded[a] + idx[a];
        }
        acc += rho_a[flat] * g[padded_flat].re;
    }
    Ok(acc * b.cell_volume().powi(2))
}
