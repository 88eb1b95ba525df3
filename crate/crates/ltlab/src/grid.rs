//! Discretization substrate: periodic tensor grids, the Fourier-space
//! fractional Laplacian, global and domain-restricted fractional Sobolev
//! seminorms, Hardy potential energies, and partition-of-unity utilities.
//!
//! Functions live on uniform periodic grids sampled at *cell centers*
//! `x_j = lo + (j + 1/2) h`. On a box symmetric about the origin with an
//! even point count this guarantees `|x| >= h/2` at every sample, which is
//! what the Hardy energy quadrature relies on.
//!
//! The fractional Laplacian is realized through the periodic symbol
//! `|k|^{2s}`; it approximates the whole-space operator for functions that
//! decay below `1e-8` of their peak at the box boundary. Domain seminorms
//! with fractional part `sigma > 0` use the midpoint double sum over cell
//! pairs (diagonal excluded) against the *periodized* distance kernel, so
//! that for `Omega` = whole box the quadrature targets the same periodic
//! operator as the Fourier symbol; for domains much smaller than the box
//! the periodization correction is negligible and the value approaches the
//! Euclidean seminorm.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constants::seminorm_normalization;
use crate::error::{Error, Result};
use crate::fft::{fft_nd, ifft_nd, mode_number};

/// Relative decay required of a field at the box boundary before the
/// periodic seminorm is considered a faithful stand-in for the whole-space one.
pub const BOUNDARY_DECAY_TOL: f64 = 1e-8;

/// Axis-aligned periodic box with a uniform tensor grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    d: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    points: Vec<usize>,
}

impl BoxSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || d > 3 {
            return Err(Error::config(format!("dimension must be 1..=3, got {d}")));
        }
        if hi.len() != d || points.len() != d {
            return Err(Error::config("lo/hi/points length mismatch"));
        }
        for a in 0..d {
            if !(hi[a] > lo[a]) {
                return Err(Error::config(format!("axis {a}: need hi > lo")));
            }
            if points[a] < 8 || !points[a].is_power_of_two() {
                return Err(Error::config(format!(
                    "axis {a}: points must be a power of two >= 8, got {}",
                    points[a]
                )));
            }
        }
        let h0 = (hi[0] - lo[0]) / points[0] as f64;
        for a in 1..d {
            let ha = (hi[a] - lo[a]) / points[a] as f64;
            if ((ha - h0) / h0).abs() > 1e-12 {
                return Err(Error::config(format!(
                    "all axes must share the grid spacing: h0={h0} vs h{a}={ha}"
                )));
            }
        }
        Ok(BoxSpec { d, lo, hi, points })
    }

    /// Cube `[-half, half]^d` with `n` points per axis.
    pub fn centered_cube(d: usize, half: f64, n: usize) -> Result<Self> {
        Self::new(vec![-half; d], vec![half; d], vec![n; d])
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn points(&self) -> &[usize] {
        &self.points
    }
    /// Shared grid spacing.
    pub fn spacing(&self) -> f64 {
        (self.hi[0] - self.lo[0]) / self.points[0] as f64
    }
    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }
    pub fn total_points(&self) -> usize {
        self.points.iter().product()
    }
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }
    /// True when every axis has the same extent (a cube).
    pub fn is_cube(&self) -> bool {
        let e0 = self.extent(0);
        (1..self.d).all(|a| ((self.extent(a) - e0) / e0).abs() < 1e-12)
    }

    /// Cell-center coordinate along one axis.
    pub fn coord(&self, axis: usize, idx: usize) -> f64 {
        self.lo[axis] + (idx as f64 + 0.5) * self.spacing()
    }

    /// Cell center of a flat index.
    pub fn center(&self, flat: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let mut rem = flat;
        for a in (0..self.d).rev() {
            let idx = rem % self.points[a];
            rem /= self.points[a];
            out[a] = self.coord(a, idx);
        }
        out
    }

    /// Angular wavevector for bin `j` along one axis.
    pub fn wavevector(&self, axis: usize, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * mode_number(j, self.points[axis]) as f64
            / self.extent(axis)
    }

    /// Iterate flat indices together with per-axis indices (row-major).
    pub(crate) fn multi_indices(&self) -> MultiIndexIter {
        MultiIndexIter {
            points: self.points.clone(),
            idx: vec![0; self.d],
            flat: 0,
            total: self.total_points(),
        }
    }
}

pub(crate) struct MultiIndexIter {
    points: Vec<usize>,
    idx: Vec<usize>,
    flat: usize,
    total: usize,
}

impl Iterator for MultiIndexIter {
    type Item = (usize, Vec<usize>);
    fn next(&mut self) -> Option<Self::Item> {
        if self.flat >= self.total {
            return None;
        }
        let item = (self.flat, self.idx.clone());
        self.flat += 1;
        for a in (0..self.points.len()).rev() {
            self.idx[a] += 1;
            if self.idx[a] < self.points[a] {
                break;
            }
            self.idx[a] = 0;
        }
        Some(item)
    }
}

/// Complex field sampled on the cell centers of a [`BoxSpec`], row-major.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub box_spec: BoxSpec,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(box_spec: BoxSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != box_spec.total_points() {
            return Err(Error::config("value array does not match the grid"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::numeric("non-finite field values"));
        }
        Ok(GridFunction { box_spec, values })
    }

    pub fn zeros(box_spec: BoxSpec) -> Self {
        let n = box_spec.total_points();
        GridFunction {
            box_spec,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Sample a scalar function of the cell-center coordinates.
    pub fn from_fn(box_spec: BoxSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(box_spec.total_points());
        for flat in 0..box_spec.total_points() {
            let c = box_spec.center(flat);
            values.push(f(&c[..box_spec.d()]));
        }
        GridFunction { box_spec, values }
    }

    /// Real Gaussian bump `exp(-|x-c|^2 / (2 w^2))`.
    pub fn gaussian(box_spec: BoxSpec, center: &[f64], width: f64) -> Self {
        Self::from_fn(box_spec, |x| {
            let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            Complex64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
        })
    }

    /// Complex exponential `e^{i k.x}` for integer mode numbers (one per axis).
    pub fn plane_wave(box_spec: BoxSpec, modes: &[i64]) -> Self {
        let ks: Vec<f64> = (0..box_spec.d())
            .map(|a| 2.0 * std::f64::consts::PI * modes[a] as f64 / box_spec.extent(a))
            .collect();
        Self::from_fn(box_spec, |x| {
            let phase: f64 = x.iter().zip(&ks).map(|(xi, ki)| xi * ki).sum();
            Complex64::new(phase.cos(), phase.sin())
        })
    }

    /// Random field with Fourier content restricted to `|mode| <= kmax` per axis.
    pub fn random_band_limited(box_spec: BoxSpec, kmax: i64, rng: &mut impl Rng) -> Self {
        let total = box_spec.total_points();
        let mut hat = vec![Complex64::new(0.0, 0.0); total];
        for (flat, idx) in box_spec.multi_indices() {
            let within = (0..box_spec.d())
                .all(|a| mode_number(idx[a], box_spec.points()[a]).abs() <= kmax);
            if within {
                hat[flat] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        ifft_nd(box_spec.points(), &mut hat);
        GridFunction {
            box_spec,
            values: hat,
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let w = self.box_spec.cell_volume();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w
    }

    /// `∫ f` by the rectangle rule.
    pub fn integral(&self) -> Complex64 {
        let w = self.box_spec.cell_volume();
        self.values.iter().sum::<Complex64>() * w
    }

    /// Rescale to unit L2 norm. Errors on the zero field.
    pub fn normalize_l2(&mut self) -> Result<()> {
        let n = self.l2_norm_sq().sqrt();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::numeric("cannot normalize a zero field"));
        }
        for v in self.values.iter_mut() {
            *v /= n;
        }
        Ok(())
    }

    /// `∫ |f|^p` by the rectangle rule.
    pub fn lp_power_integral(&self, p: f64) -> f64 {
        let w = self.box_spec.cell_volume();
        self.values
            .iter()
            .map(|v| v.norm_sqr().powf(p / 2.0))
            .sum::<f64>()
            * w
    }

    /// Pointwise product with another field on the same grid.
    pub fn pointwise_mul(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.box_spec, other.box_spec, "grids differ");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        GridFunction {
            box_spec: self.box_spec.clone(),
            values,
        }
    }

    /// Max |f| over all samples.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max |f| over boundary cells (any axis index 0 or n-1).
    pub fn boundary_max_abs(&self) -> f64 {
        let mut out: f64 = 0.0;
        for (flat, idx) in self.box_spec.multi_indices() {
            let on_boundary = (0..self.box_spec.d())
                .any(|a| idx[a] == 0 || idx[a] + 1 == self.box_spec.points()[a]);
            if on_boundary {
                out = out.max(self.values[flat].norm());
            }
        }
        out
    }

    /// True when the field has decayed below [`BOUNDARY_DECAY_TOL`] of its
    /// peak at the box boundary.
    pub fn boundary_decay_ok(&self) -> bool {
        let peak = self.max_abs();
        peak == 0.0 || self.boundary_max_abs() <= BOUNDARY_DECAY_TOL * peak
    }

    /// Shift by an integer number of cells per axis (periodic).
    pub fn shift_cells(&self, offset: &[i64]) -> GridFunction {
        let pts = self.box_spec.points();
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for (flat, idx) in self.box_spec.multi_indices() {
            let mut src = 0usize;
            for a in 0..self.box_spec.d() {
                let n = pts[a] as i64;
                let j = (idx[a] as i64 - offset[a]).rem_euclid(n) as usize;
                src = src * pts[a] + j;
            }
            values[flat] = self.values[src];
        }
        GridFunction {
            box_spec: self.box_spec.clone(),
            values,
        }
    }
}

/// Fractional order split into integer and fractional parts, with the
/// normalization constant of the double-integral representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeminormSpec {
    pub s: f64,
    pub m: usize,
    pub sigma: f64,
    pub c_norm: f64,
}

impl SeminormSpec {
    pub fn new(s: f64, d: usize) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::config(format!("order s must be positive, got {s}")));
        }
        let m = s.floor() as usize;
        let sigma = s - m as f64;
        let c_norm = if sigma > 0.0 {
            seminorm_normalization(sigma, d)?
        } else {
            1.0
        };
        Ok(SeminormSpec { s, m, sigma, c_norm })
    }
}

/// Boolean cell membership mask for a domain `Omega`.
#[derive(Debug, Clone)]
pub struct DomainMask {
    pub box_spec: BoxSpec,
    pub mask: Vec<bool>,
}

impl DomainMask {
    pub fn new(box_spec: BoxSpec, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != box_spec.total_points() {
            return Err(Error::config("mask length does not match the grid"));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::config("empty domain"));
        }
        Ok(DomainMask { box_spec, mask })
    }

    /// Cells whose centers satisfy a predicate.
    pub fn from_predicate(box_spec: BoxSpec, pred: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let d = box_spec.d();
        let mask: Vec<bool> = (0..box_spec.total_points())
            .map(|flat| {
                let c = box_spec.center(flat);
                pred(&c[..d])
            })
            .collect();
        Self::new(box_spec, mask)
    }

    /// The whole box.
    pub fn full(box_spec: BoxSpec) -> Self {
        let n = box_spec.total_points();
        DomainMask {
            box_spec,
            mask: vec![true; n],
        }
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_disjoint(&self, other: &DomainMask) -> bool {
        self.mask
            .iter()
            .zip(&other.mask)
            .all(|(&a, &b)| !(a && b))
    }

    /// Pointwise union (same grid).
    pub fn union(&self, other: &DomainMask) -> DomainMask {
        assert_eq!(self.box_spec, other.box_spec);
        let mask = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(&a, &b)| a || b)
            .collect();
        DomainMask {
            box_spec: self.box_spec.clone(),
            mask,
        }
    }

    /// True when `self` is contained in `other` with at least one cell of
    /// grid distance to the complement along every axis direction.
    pub fn compactly_inside(&self, other: &DomainMask) -> bool {
        // every cell of self, and all its face neighbours, must be in other
        let pts = self.box_spec.points().to_vec();
        for (flat, idx) in self.box_spec.multi_indices() {
            if !self.mask[flat] {
                continue;
            }
            if !other.mask[flat] {
                return false;
            }
            for a in 0..self.box_spec.d() {
                for step in [-1i64, 1] {
                    let mut j = idx.clone();
                    let nj = idx[a] as i64 + step;
                    if nj < 0 || nj >= pts[a] as i64 {
                        return false; // touching the box edge counts as no margin
                    }
                    j[a] = nj as usize;
                    let mut nf = 0usize;
                    for a2 in 0..self.box_spec.d() {
                        nf = nf * pts[a2] + j[a2];
                    }
                    if !other.mask[nf] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Energy value plus a flag recording whether the boundary-decay
/// precondition held.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    pub boundary_decay_ok: bool,
}

/// Apply `(-Δ)^s` through the periodic Fourier symbol `|k|^{2s}`.
pub fn frac_laplacian_apply(u: &GridFunction, s: f64) -> Result<GridFunction> {
    if !(s > 0.0) {
        return Err(Error::config("order s must be positive"));
    }
    let pts = u.box_spec.points().to_vec();
    let mut hat = u.values.clone();
    fft_nd(&pts, &mut hat);
    for (flat, idx) in u.box_spec.multi_indices() {
        let k2: f64 = (0..u.box_spec.d())
            .map(|a| {
                let k = u.box_spec.wavevector(a, idx[a]);
                k * k
            })
            .sum();
        hat[flat] *= k2.powf(s);
    }
    ifft_nd(&pts, &mut hat);
    GridFunction::new(u.box_spec.clone(), hat)
}

/// `⟨u, (-Δ)^s u⟩` in Fourier space; nonnegative real.
pub fn seminorm_global(u: &GridFunction, spec: &SeminormSpec) -> EnergyValue {
    let pts = u.box_spec.points().to_vec();
    let mut hat = u.values.clone();
    fft_nd(&pts, &mut hat);
    let total = u.box_spec.total_points() as f64;
    let weight = u.box_spec.cell_volume() / total;
    let mut acc = 0.0;
    for (flat, idx) in u.box_spec.multi_indices() {
        let k2: f64 = (0..u.box_spec.d())
            .map(|a| {
                let k = u.box_spec.wavevector(a, idx[a]);
                k * k
            })
            .sum();
        acc += k2.powf(spec.s) * hat[flat].norm_sqr();
    }
    EnergyValue {
        value: acc * weight,
        boundary_decay_ok: u.boundary_decay_ok(),
    }
}

/// Spectral mixed derivative `D^alpha u` on the full grid.
pub fn spectral_derivative(u: &GridFunction, alpha: &[usize]) -> GridFunction {
    let pts = u.box_spec.points().to_vec();
    let mut hat = u.values.clone();
    fft_nd(&pts, &mut hat);
    for (flat, idx) in u.box_spec.multi_indices() {
        let mut factor = Complex64::new(1.0, 0.0);
        for a in 0..u.box_spec.d() {
            let ik = Complex64::new(0.0, u.box_spec.wavevector(a, idx[a]));
            for _ in 0..alpha[a] {
                factor *= ik;
            }
        }
        hat[flat] *= factor;
    }
    ifft_nd(&pts, &mut hat);
    GridFunction {
        box_spec: u.box_spec.clone(),
        values: hat,
    }
}

/// Multi-indices `alpha` with `|alpha| = m` over `d` axes, with their
/// multinomial weights `m!/alpha!`.
pub fn multi_indices_of_order(m: usize, d: usize) -> Vec<(Vec<usize>, f64)> {
    fn fact(n: usize) -> f64 {
        (1..=n).map(|x| x as f64).product::<f64>().max(1.0)
    }
    let mut out = Vec::new();
    let mut alpha = vec![0usize; d];
    fn rec(axis: usize, remaining: usize, alpha: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if axis + 1 == alpha.len() {
            alpha[axis] = remaining;
            out.push(alpha.clone());
            return;
        }
        for v in 0..=remaining {
            alpha[axis] = v;
            rec(axis + 1, remaining - v, alpha, out);
        }
    }
    let mut raw = Vec::new();
    rec(0, m, &mut alpha, &mut raw);
    for a in raw {
        let weight = fact(m) / a.iter().map(|&x| fact(x)).product::<f64>();
        out.push((a, weight));
    }
    out
}

/// Periodized 1-d distance kernel `sum_nu |r + nu L|^{-q}` for `r in (0, L)`,
/// summed directly over `M` images with an Euler–Maclaurin tail.
pub(crate) fn periodized_kernel_1d(r: f64, length: f64, q: f64) -> f64 {
    debug_assert!(r > 0.0 && r < length);
    const M: usize = 48;
    let mut acc = 0.0;
    for nu in 0..=M {
        acc += (r + nu as f64 * length).powf(-q);
    }
    for nu in 1..=M {
        acc += (nu as f64 * length - r).powf(-q);
    }
    // midpoint Euler–Maclaurin tail for both directions:
    // sum_{nu>M} f(nu) = int_{M+1/2}^inf f + f'(M+1/2)/24 + O(f''')
    let tail = |a: f64| {
        let x0 = a + (M as f64 + 0.5) * length;
        x0.powf(1.0 - q) / ((q - 1.0) * length) - q * length * x0.powf(-q - 1.0) / 24.0
    };
    acc + tail(r) + tail(-r) // second argument enters as (L - r) + M L = -r + (M+1) L
}

/// Kernel table over grid offsets: `K[offset] = periodized |z|^{-(d+2 sigma)}`
/// at the minimum-image displacement, with `K[0] = 0` (excluded diagonal).
fn kernel_table(box_spec: &BoxSpec, sigma: f64) -> Vec<f64> {
    let d = box_spec.d();
    let q = d as f64 + 2.0 * sigma;
    let h = box_spec.spacing();
    let mut table = vec![0.0; box_spec.total_points()];
    if d == 1 {
        let n = box_spec.points()[0];
        let length = box_spec.extent(0);
        for j in 1..n {
            // offsets j and n-j share the same set of image distances, and
            // the full-line image sum already covers both signs
            let r = (j as f64 * h).min(length - j as f64 * h);
            table[j] = periodized_kernel_1d(r, length, q);
        }
    } else {
        // minimum-image distance plus the first shell of periodic images
        for (flat, idx) in box_spec.multi_indices() {
            if flat == 0 {
                continue;
            }
            let mut z = [0.0f64; 3];
            for a in 0..d {
                let n = box_spec.points()[a] as i64;
                let mut off = idx[a] as i64;
                if off > n / 2 {
                    off -= n;
                }
                z[a] = off as f64 * h;
            }
            let mut acc = 0.0;
            let length = box_spec.extent(0);
            let shells: &[f64] = &[-length, 0.0, length];
            match d {
                2 => {
                    for &s0 in shells {
                        for &s1 in shells {
                            let r2 = (z[0] + s0).powi(2) + (z[1] + s1).powi(2);
                            acc += r2.powf(-q / 2.0);
                        }
                    }
                }
                _ => {
                    for &s0 in shells {
                        for &s1 in shells {
                            for &s2 in shells {
                                let r2 = (z[0] + s0).powi(2)
                                    + (z[1] + s1).powi(2)
                                    + (z[2] + s2).powi(2);
                                acc += r2.powf(-q / 2.0);
                            }
                        }
                    }
                }
            }
            table[flat] = acc;
        }
    }
    table
}

/// Circular convolution of a real kernel table with a complex field.
fn circular_convolve(points: &[usize], kernel_hat: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
    let mut fhat = f.to_vec();
    fft_nd(points, &mut fhat);
    for (v, k) in fhat.iter_mut().zip(kernel_hat) {
        *v *= k;
    }
    ifft_nd(points, &mut fhat);
    fhat
}

/// Restricted seminorm `‖u‖²_{Ḣ^s(Ω)}`.
///
/// For integer order (`sigma = 0`) this is the masked quadrature of the
/// spectral derivatives. For `sigma > 0` it is the excluded-diagonal
/// midpoint double sum of `|D^α u(x) - D^α u(y)|² K(x-y)` over `Ω × Ω`,
/// evaluated through three circular convolutions per derivative.
pub fn seminorm_domain(u: &GridFunction, spec: &SeminormSpec, omega: &DomainMask) -> Result<f64> {
    if omega.box_spec != u.box_spec {
        return Err(Error::config("mask grid does not match the field"));
    }
    let d = u.box_spec.d();
    let alphas = multi_indices_of_order(spec.m, d);
    let w = u.box_spec.cell_volume();
    if spec.sigma == 0.0 {
        let mut acc = 0.0;
        for (alpha, weight) in &alphas {
            let da = spectral_derivative(u, alpha);
            let mut local = 0.0;
            for (v, &inside) in da.values.iter().zip(&omega.mask) {
                if inside {
                    local += v.norm_sqr();
                }
            }
            acc += weight * local * w;
        }
        return Ok(acc);
    }
    let pts = u.box_spec.points().to_vec();
    let table = kernel_table(&u.box_spec, spec.sigma);
    let mut kernel_hat: Vec<Complex64> =
        table.iter().map(|&k| Complex64::new(k, 0.0)).collect();
    fft_nd(&pts, &mut kernel_hat);
    let mask_c: Vec<Complex64> = omega
        .mask
        .iter()
        .map(|&m| Complex64::new(if m { 1.0 } else { 0.0 }, 0.0))
        .collect();
    let conv_mask = circular_convolve(&pts, &kernel_hat, &mask_c);
    let mut acc = 0.0;
    for (alpha, weight) in &alphas {
        let da = spectral_derivative(u, alpha);
        // masked |a|^2 and masked conjugate field
        let mut a2 = vec![Complex64::new(0.0, 0.0); da.values.len()];
        let mut bb = vec![Complex64::new(0.0, 0.0); da.values.len()];
        for i in 0..da.values.len() {
            if omega.mask[i] {
                a2[i] = Complex64::new(da.values[i].norm_sqr(), 0.0);
                bb[i] = da.values[i].conj();
            }
        }
        let conv_b = circular_convolve(&pts, &kernel_hat, &bb);
        let mut s_alpha = 0.0;
        for i in 0..da.values.len() {
            if omega.mask[i] {
                s_alpha += 2.0 * (a2[i].re * conv_mask[i].re
                    - (da.values[i] * conv_b[i]).re);
            }
        }
        acc += weight * s_alpha;
    }
    Ok(spec.c_norm * acc * w * w)
}

/// Direct pair-sum evaluation of the fractional part; test oracle for the
/// convolution path (O(n^2), use on small grids only).
pub fn seminorm_domain_direct(
    u: &GridFunction,
    spec: &SeminormSpec,
    omega: &DomainMask,
) -> Result<f64> {
    if spec.sigma == 0.0 {
        return seminorm_domain(u, spec, omega);
    }
    let d = u.box_spec.d();
    let alphas = multi_indices_of_order(spec.m, d);
    let table = kernel_table(&u.box_spec, spec.sigma);
    let pts = u.box_spec.points().to_vec();
    let cells: Vec<usize> = (0..u.box_spec.total_points())
        .filter(|&i| omega.mask[i])
        .collect();
    let w = u.box_spec.cell_volume();
    let mut acc = 0.0;
    for (alpha, weight) in &alphas {
        let da = spectral_derivative(u, alpha);
        let mut s_alpha = 0.0;
        for &i in &cells {
            for &j in &cells {
                if i == j {
                    continue;
                }
                // offset index of (i - j) mod grid, per axis
                let (mut ri, mut rj, mut off) = (i, j, 0usize);
                for a in 0..d {
                    let stride: usize = pts[a + 1..].iter().product();
                    let ia = ri / stride;
                    let ja = rj / stride;
                    ri %= stride;
                    rj %= stride;
                    let diff = (ia as i64 - ja as i64).rem_euclid(pts[a] as i64) as usize;
                    off = off * pts[a] + diff;
                }
                let diff2 = (da.values[i] - da.values[j]).norm_sqr();
                s_alpha += diff2 * table[off];
            }
        }
        acc += weight * s_alpha;
    }
    Ok(spec.c_norm * acc * w * w)
}

/// `∫ |u(x)|² / |x|^{2s} dx` by the rectangle rule on cell centers.
pub fn hardy_energy(u: &GridFunction, s: f64) -> Result<f64> {
    let d = u.box_spec.d();
    if !(2.0 * s < d as f64) {
        return Err(Error::config("Hardy regime requires 2s < d"));
    }
    if !(s > 0.0) {
        return Err(Error::config("order s must be positive"));
    }
    let h = u.box_spec.spacing();
    let w = u.box_spec.cell_volume();
    let mut acc = 0.0;
    for (flat, _) in u.box_spec.multi_indices() {
        let c = u.box_spec.center(flat);
        let r2: f64 = c[..d].iter().map(|x| x * x).sum();
        if r2 < (h / 4.0) * (h / 4.0) {
            return Err(Error::config(
                "grid has a cell center at the origin; use an origin-centered box with even points",
            ));
        }
        acc += u.values[flat].norm_sqr() * r2.powf(-s);
    }
    Ok(acc * w)
}

/// IMS localization defect `| ‖u‖²_{Ḣ^s(Ω)} - ‖χu‖²_{Ḣ^s(Ω)} - ‖ηu‖²_{Ḣ^s(Ω)} |`
/// with `η = sqrt(1 - χ²)`.
pub fn ims_defect(
    u: &GridFunction,
    chi: &GridFunction,
    spec: &SeminormSpec,
    omega: &DomainMask,
) -> Result<f64> {
    if chi.box_spec != u.box_spec {
        return Err(Error::config("cutoff grid does not match the field"));
    }
    let mut eta = GridFunction::zeros(chi.box_spec.clone());
    for (i, c) in chi.values.iter().enumerate() {
        if c.im.abs() > 1e-12 || c.re < -1e-12 || c.re > 1.0 + 1e-12 {
            return Err(Error::config("cutoff values must lie in [0, 1]"));
        }
        let c2 = c.re.clamp(0.0, 1.0);
        eta.values[i] = Complex64::new((1.0 - c2 * c2).max(0.0).sqrt(), 0.0);
    }
    let chiu = u.pointwise_mul(chi);
    let etau = u.pointwise_mul(&eta);
    let full = seminorm_domain(u, spec, omega)?;
    let loc1 = seminorm_domain(&chiu, spec, omega)?;
    let loc2 = seminorm_domain(&etau, spec, omega)?;
    Ok((full - loc1 - loc2).abs())
}

/// C-infinity transition: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Smooth plateau cutoff: 1 inside radius `inner` of `center`, C-infinity
/// falloff to 0 at radius `outer`. Values in [0, 1]; building block for
/// partitions of unity.
pub fn smooth_plateau(box_spec: BoxSpec, center: &[f64], inner: f64, outer: f64) -> GridFunction {
    let c = center.to_vec();
    GridFunction::from_fn(box_spec, move |x| {
        let r: f64 = x
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let v = 1.0 - smooth_step((r - inner) / (outer - inner));
        Complex64::new(v, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn line_box(half: f64, n: usize) -> BoxSpec {
        BoxSpec::centered_cube(1, half, n).unwrap()
    }

    #[test]
    fn box_spec_rejects_bad_grids() {
        assert!(BoxSpec::new(vec![0.0], vec![1.0], vec![7]).is_err());
        assert!(BoxSpec::new(vec![0.0], vec![1.0], vec![12]).is_err());
        assert!(BoxSpec::new(vec![0.0], vec![-1.0], vec![16]).is_err());
        // unequal spacing across axes
        assert!(BoxSpec::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![16, 16]).is_err());
        // equal spacing with unequal extents is fine
        assert!(BoxSpec::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![16, 32]).is_ok());
    }

    #[test]
    fn plane_wave_is_eigenfunction() {
        let b = line_box(5.0, 64);
        for &s in &[0.5, 1.0, 1.7] {
            for &mode in &[1i64, 3, -5] {
                let u = GridFunction::plane_wave(b.clone(), &[mode]);
                let au = frac_laplacian_apply(&u, s).unwrap();
                let k = 2.0 * PI * mode as f64 / b.extent(0);
                let lambda = (k * k).powf(s);
                for (a, u0) in au.values.iter().zip(&u.values) {
                    let expect = u0 * lambda;
                    assert!(
                        (a - expect).norm() <= 1e-10 * lambda.max(1.0),
                        "s={s} mode={mode}"
                    );
                }
            }
        }
    }

    #[test]
    fn constant_field_is_annihilated() {
        let b = BoxSpec::centered_cube(2, 3.0, 16).unwrap();
        let u = GridFunction::from_fn(b, |_| Complex64::new(2.5, -1.0));
        let au = frac_laplacian_apply(&u, 0.75).unwrap();
        assert!(au.max_abs() < 1e-12);
    }

    #[test]
    fn gaussian_kinetic_ratio_half() {
        // exp(-x^2/2) has ∫|u'|²/∫|u|² = 1/2; cross-checked below by a
        // finite-difference quadrature oracle on the same samples.
        let b = line_box(20.0, 2048);
        let u = GridFunction::from_fn(b.clone(), |x| {
            Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0)
        });
        let spec = SeminormSpec::new(1.0, 1).unwrap();
        let e = seminorm_global(&u, &spec);
        assert!(e.boundary_decay_ok);
        let ratio = e.value / u.l2_norm_sq();
        assert_relative_eq!(ratio, 0.5, max_relative = 1e-8);

        // independent oracle: centered finite differences (O(h^2) accurate)
        let h = b.spacing();
        let mut fd = 0.0;
        let n = b.total_points();
        for i in 0..n {
            let prev = u.values[(i + n - 1) % n].re;
            let next = u.values[(i + 1) % n].re;
            let d = (next - prev) / (2.0 * h);
            fd += d * d * h;
        }
        assert_relative_eq!(e.value, fd, max_relative = 1e-3);
    }

    #[test]
    fn seminorm_global_plane_wave_and_constant() {
        let b = line_box(5.0, 128);
        let spec = SeminormSpec::new(0.8, 1).unwrap();
        let c = GridFunction::from_fn(b.clone(), |_| Complex64::new(1.0, 0.0));
        assert!(seminorm_global(&c, &spec).value.abs() < 1e-12);
        let u = GridFunction::plane_wave(b.clone(), &[4]);
        let k = 2.0 * PI * 4.0 / b.extent(0);
        let expect = u.l2_norm_sq() * (k * k).powf(0.8);
        assert_relative_eq!(seminorm_global(&u, &spec).value, expect, max_relative = 1e-10);
    }

    #[test]
    fn soliton_seminorm_matches_quadrature() {
        // Q(x) = 3^{1/4} sech^{1/2}(2x): ∫ Q'^2 = sqrt(3) pi / 4.
        let b = line_box(20.0, 2048);
        let u = GridFunction::from_fn(b, |x| {
            Complex64::new(3f64.powf(0.25) / (2.0 * x[0]).cosh().sqrt(), 0.0)
        });
        let spec = SeminormSpec::new(1.0, 1).unwrap();
        let e = seminorm_global(&u, &spec).value;
        assert_relative_eq!(e, 3f64.sqrt() * PI / 4.0, max_relative = 1e-6);
    }

    #[test]
    fn linear_field_domain_seminorm() {
        // u(x) = x on Omega = (0,1), s=1: ∫_Omega |u'|^2 = 1. The field is
        // extended by a C-infinity taper outside (0,1) so the spectral
        // derivative is clean on the masked cells; 1/h divides 1 so the
        // masked cell union has measure exactly 1.
        let b = BoxSpec::new(vec![-4.0], vec![4.0], vec![1024]).unwrap();
        let u = GridFunction::from_fn(b.clone(), |x| {
            let t = x[0];
            let w = 1.0 - smooth_step(((t - 0.5).abs() - 1.0) / 1.5);
            Complex64::new(t * w, 0.0)
        });
        let omega = DomainMask::from_predicate(b.clone(), |x| x[0] > 0.0 && x[0] < 1.0).unwrap();
        let spec = SeminormSpec::new(1.0, 1).unwrap();
        let val = seminorm_domain(&u, &spec, &omega).unwrap();
        assert_relative_eq!(val, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn constant_field_domain_seminorm_vanishes() {
        let b = line_box(2.0, 64);
        let u = GridFunction::from_fn(b.clone(), |_| Complex64::new(3.0, 1.0));
        let omega = DomainMask::from_predicate(b, |x| x[0].abs() < 1.0).unwrap();
        for &s in &[0.5, 1.0, 1.5] {
            let spec = SeminormSpec::new(s, 1).unwrap();
            let v = seminorm_domain(&u, &spec, &omega).unwrap();
            assert!(v.abs() < 1e-10, "s={s}: {v}");
        }
    }

    #[test]
    fn convolution_path_matches_direct_pair_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = line_box(4.0, 64);
        let u = GridFunction::random_band_limited(b.clone(), 6, &mut rng);
        let omega = DomainMask::from_predicate(b.clone(), |x| x[0] > -2.0 && x[0] < 1.0).unwrap();
        for &s in &[0.5, 1.5] {
            let spec = SeminormSpec::new(s, 1).unwrap();
            let fast = seminorm_domain(&u, &spec, &omega).unwrap();
            let slow = seminorm_domain_direct(&u, &spec, &omega).unwrap();
            assert_relative_eq!(fast, slow, max_relative = 1e-10);
        }
        // and in d=2
        let b2 = BoxSpec::centered_cube(2, 3.0, 16).unwrap();
        let u2 = GridFunction::random_band_limited(b2.clone(), 3, &mut rng);
        let om2 = DomainMask::from_predicate(b2, |x| x[0].abs() < 1.5 && x[1] > 0.0).unwrap();
        let spec2 = SeminormSpec::new(0.5, 2).unwrap();
        let fast = seminorm_domain(&u2, &spec2, &om2).unwrap();
        let slow = seminorm_domain_direct(&u2, &spec2, &om2).unwrap();
        assert_relative_eq!(fast, slow, max_relative = 1e-10);
    }

    #[test]
    fn periodized_kernel_matches_cosecant_closed_form() {
        // In d=1 with sigma=1/2 the image sum has the closed form
        // (pi/L)^2 / sin^2(pi r / L).
        let length = 7.0;
        for &r in &[0.3, 1.0, 3.4, 6.9] {
            let pk = periodized_kernel_1d(r, length, 2.0);
            let exact = (PI / length).powi(2) / (PI * r / length).sin().powi(2);
            assert_relative_eq!(pk, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn seminorm_monotone_under_disjoint_union() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = line_box(4.0, 128);
        for trial in 0..50 {
            let u = GridFunction::random_band_limited(b.clone(), 8, &mut rng);
            let o1 = DomainMask::from_predicate(b.clone(), |x| x[0] > -3.0 && x[0] < -1.0).unwrap();
            let o2 = DomainMask::from_predicate(b.clone(), |x| x[0] > 0.5 && x[0] < 2.5).unwrap();
            assert!(o1.is_disjoint(&o2));
            let union = o1.union(&o2);
            for &s in &[0.5, 1.0] {
                let spec = SeminormSpec::new(s, 1).unwrap();
                let a = seminorm_domain(&u, &spec, &o1).unwrap();
                let c = seminorm_domain(&u, &spec, &o2).unwrap();
                let t = seminorm_domain(&u, &spec, &union).unwrap();
                assert!(
                    a + c <= t + 1e-9,
                    "trial {trial} s={s}: {a} + {c} > {t}"
                );
            }
        }
    }

    #[test]
    fn parseval_consistency_integer_order() {
        // sigma = 0: the masked quadrature over the whole box is Parseval-exact.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = line_box(10.0, 256);
        let u = GridFunction::random_band_limited(b.clone(), 12, &mut rng);
        let spec = SeminormSpec::new(1.0, 1).unwrap();
        let full = DomainMask::full(b);
        let dom = seminorm_domain(&u, &spec, &full).unwrap();
        let glob = seminorm_global(&u, &spec).value;
        assert_relative_eq!(dom, glob, max_relative = 1e-10);
    }

    #[test]
    fn hardy_energy_far_support_bound() {
        // u supported in {|x| >= R}: value <= ||u||^2 / R^{2s}.
        let b = BoxSpec::centered_cube(3, 4.0, 16).unwrap();
        let r_min = 2.0;
        let u = GridFunction::from_fn(b, |x| {
            let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r >= r_min {
                Complex64::new((-(r - 3.0) * (r - 3.0)).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let s = 1.0;
        let e = hardy_energy(&u, s).unwrap();
        assert!(e <= u.l2_norm_sq() / r_min.powf(2.0 * s) + 1e-12);
        let zero = GridFunction::zeros(BoxSpec::centered_cube(3, 4.0, 16).unwrap());
        assert_eq!(hardy_energy(&zero, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hardy_energy_rejects_bad_regime() {
        let b = line_box(4.0, 64);
        let u = GridFunction::gaussian(b, &[0.0], 1.0);
        assert!(hardy_energy(&u, 0.5).is_err()); // 2s = 1 = d
    }

    #[test]
    fn classical_radial_hardy_oracle() {
        // 1-d half-line Hardy with v(0)=0: ∫ v'^2 >= (1/4) ∫ v^2/r^2,
        // the same constant as hardy_constant(1, 3).
        let constant = crate::constants::hardy_constant(1.0, 3).unwrap().value;
        assert_relative_eq!(constant, 0.25, max_relative = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let n = 4000;
        let l = 10.0;
        let h = l / n as f64;
        for _ in 0..100 {
            // random smooth v with v(0) = 0: v = r * (mix of gaussians)
            let a: f64 = rng.gen_range(0.3..2.0);
            let c1: f64 = rng.gen_range(1.0..6.0);
            let w1: f64 = rng.gen_range(0.5..2.0);
            let b2: f64 = rng.gen_range(-1.0..1.0);
            let c2: f64 = rng.gen_range(1.0..6.0);
            let w2: f64 = rng.gen_range(0.5..2.0);
            let v = |r: f64| {
                r * (a * (-(r - c1).powi(2) / (2.0 * w1 * w1)).exp()
                    + b2 * (-(r - c2).powi(2) / (2.0 * w2 * w2)).exp())
            };
            let mut kin = 0.0;
            let mut har = 0.0;
            for i in 0..n {
                let r = (i as f64 + 0.5) * h;
                let d = (v(r + h / 2.0) - v(r - h / 2.0)) / h;
                kin += d * d * h;
                har += v(r) * v(r) / (r * r) * h;
            }
            assert!(kin + 1e-9 >= constant * har, "kin={kin} har={har}");
        }
    }

    #[test]
    fn ims_defect_trivial_cutoffs() {
        let b = line_box(6.0, 128);
        let u = GridFunction::gaussian(b.clone(), &[0.5], 1.0);
        let omega = DomainMask::full(b.clone());
        let ones = GridFunction::from_fn(b.clone(), |_| Complex64::new(1.0, 0.0));
        for &s in &[0.5, 1.0, 1.5] {
            let spec = SeminormSpec::new(s, 1).unwrap();
            let d = ims_defect(&u, &ones, &spec, &omega).unwrap();
            assert!(d < 1e-10, "chi=1, s={s}: {d}");
        }
        // constant chi = 1/sqrt(2): bilinearity makes the defect vanish for any s
        let half = GridFunction::from_fn(b, |_| Complex64::new(0.5f64.sqrt(), 0.0));
        for &s in &[0.5, 1.0, 1.5] {
            let spec = SeminormSpec::new(s, 1).unwrap();
            let d = ims_defect(&u, &half, &spec, &omega).unwrap();
            assert!(d < 1e-10, "chi=const, s={s}: {d}");
        }
    }

    #[test]
    fn ims_defect_classical_identity_s1() {
        // At s=1 the defect equals ∫ (|chi'|^2 + |eta'|^2) |u|^2 exactly.
        let b = line_box(8.0, 1024);
        let u = GridFunction::gaussian(b.clone(), &[0.2], 1.1);
        let chi = smooth_plateau(b.clone(), &[0.0], 1.0, 3.0);
        let omega = DomainMask::full(b.clone());
        let spec = SeminormSpec::new(1.0, 1).unwrap();
        let defect = ims_defect(&u, &chi, &spec, &omega).unwrap();
        let mut eta = GridFunction::zeros(b.clone());
        for (i, c) in chi.values.iter().enumerate() {
            eta.values[i] = Complex64::new((1.0 - c.re * c.re).max(0.0).sqrt(), 0.0);
        }
        let dchi = spectral_derivative(&chi, &[1]);
        let deta = spectral_derivative(&eta, &[1]);
        let w = b.cell_volume();
        let expect: f64 = (0..b.total_points())
            .map(|i| {
                (dchi.values[i].norm_sqr() + deta.values[i].norm_sqr()) * u.values[i].norm_sqr()
                    * w
            })
            .sum();
        assert_relative_eq!(defect, expect, max_relative = 1e-6);
    }

    #[test]
    fn ims_defect_rejects_out_of_range_cutoff() {
        let b = line_box(4.0, 64);
        let u = GridFunction::gaussian(b.clone(), &[0.0], 1.0);
        let chi = GridFunction::from_fn(b.clone(), |_| Complex64::new(1.5, 0.0));
        let spec = SeminormSpec::new(1.0, 1).unwrap();
        let omega = DomainMask::full(b);
        assert!(ims_defect(&u, &chi, &spec, &omega).is_err());
    }

    #[test]
    fn energies_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = line_box(5.0, 128);
        for _ in 0..20 {
            let u = GridFunction::random_band_limited(b.clone(), 10, &mut rng);
            for &s in &[0.5, 1.0, 1.5] {
                let spec = SeminormSpec::new(s, 1).unwrap();
                assert!(seminorm_global(&u, &spec).value >= -1e-12);
                let om =
                    DomainMask::from_predicate(b.clone(), |x| x[0].abs() < 2.0).unwrap();
                assert!(seminorm_domain(&u, &spec, &om).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn empty_domain_rejected() {
        let b = line_box(4.0, 64);
        assert!(DomainMask::new(b, vec![false; 64]).is_err());
    }

    #[test]
    fn shift_preserves_energies() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = line_box(6.0, 256);
        let u = GridFunction::random_band_limited(b.clone(), 8, &mut rng);
        let spec = SeminormSpec::new(0.7, 1).unwrap();
        let shifted = u.shift_cells(&[37]);
        assert_relative_eq!(
            seminorm_global(&u, &spec).value,
            seminorm_global(&shifted, &spec).value,
            max_relative = 1e-8
        );
        assert_relative_eq!(u.l2_norm_sq(), shifted.l2_norm_sq(), max_relative = 1e-12);
    }
}

