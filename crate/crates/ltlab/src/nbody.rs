//! Desk-scale N-body states on tensor-product grids: densities,
//! kinetic/Hardy energies, energy quotients and the trial-state
//! constructions behind the upper-bound mechanisms.
//!
//! Two storage layouts share one interface: `Dense` holds the full
//! `(points^d)^N` tensor and is meant for small products `N*d <= 3`
//! (random 2- and 3-body states in d=1); `Product` holds one normalized
//! factor per particle, which is exact for the separated and Hardy-pair
//! trial states and keeps d=3 work at one-body cost. No antisymmetry is
//! imposed anywhere.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fft::{fft_nd, ifft_nd, mode_number};
use crate::grid::{hardy_energy, BoxSpec, GridFunction, SeminormSpec};

/// Hard cap on dense tensor entries (2^26 complex values = 1 GiB).
const DENSE_CAP: usize = 1 << 26;

#[derive(Debug, Clone)]
pub enum StateData {
    /// Full tensor, row-major with particle 0 slowest.
    Dense(Vec<Complex64>),
    /// One normalized one-body factor per particle.
    Product(Vec<GridFunction>),
}

/// Normalized wave function of `N` particles in a shared one-body box.
#[derive(Debug, Clone)]
pub struct NBodyState {
    n_particles: usize,
    box_spec: BoxSpec,
    data: StateData,
}

/// Parameters selecting the quotient's Hamiltonian.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct QuotientParams {
    pub s: f64,
    pub lambda: f64,
    /// Subtract the sharp Hardy potential from each particle's kinetic term.
    pub hardy: bool,
}

/// The quotient together with its ingredients.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct QuotientBreakdown {
    pub kinetic: f64,
    /// `C_{s,d} * sum_i <|x_i|^{-2s}>`; zero when the Hardy flag is off.
    pub hardy_term: f64,
    /// Interaction expectation at coupling 1.
    pub interaction_unit: f64,
    /// `∫ rho^{1+2s/d}`.
    pub denominator: f64,
    pub value: f64,
}

impl NBodyState {
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }
    pub fn box_spec(&self) -> &BoxSpec {
        &self.box_spec
    }
    pub fn data(&self) -> &StateData {
        &self.data
    }
    /// Points per one-body grid.
    pub fn one_body_points(&self) -> usize {
        self.box_spec.total_points()
    }

    /// Dense state from a raw tensor; normalizes to unit L2 norm.
    pub fn dense(box_spec: BoxSpec, n_particles: usize, mut values: Vec<Complex64>) -> Result<Self> {
        if !(2..=3).contains(&n_particles) {
            return Err(Error::config("n_particles must be 2 or 3"));
        }
        let s = box_spec.total_points();
        let total = s.checked_pow(n_particles as u32).ok_or_else(|| {
            Error::config("dense tensor too large")
        })?;
        if total > DENSE_CAP {
            return Err(Error::config(format!(
                "dense tensor of {total} entries exceeds the budget; use a product state"
            )));
        }
        if values.len() != total {
            return Err(Error::config("tensor length does not match grid^N"));
        }
        let w = box_spec.cell_volume().powi(n_particles as i32);
        let norm_sq: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w;
        if !(norm_sq > 0.0) || !norm_sq.is_finite() {
            return Err(Error::numeric("cannot normalize state"));
        }
        let scale = 1.0 / norm_sq.sqrt();
        for v in values.iter_mut() {
            *v *= scale;
        }
        Ok(NBodyState {
            n_particles,
            box_spec,
            data: StateData::Dense(values),
        })
    }

    /// Product state from per-particle factors (each normalized here).
    pub fn product(factors: Vec<GridFunction>) -> Result<Self> {
        if !(2..=3).contains(&factors.len()) {
            return Err(Error::config("n_particles must be 2 or 3"));
        }
        let box_spec = factors[0].box_spec.clone();
        if factors.iter().any(|f| f.box_spec != box_spec) {
            return Err(Error::config("all factors must share one grid"));
        }
        let mut normalized = factors;
        for f in normalized.iter_mut() {
            f.normalize_l2()?;
        }
        Ok(NBodyState {
            n_particles: normalized.len(),
            box_spec,
            data: StateData::Product(normalized),
        })
    }

    /// Seeded random band-limited dense state.
    pub fn random_band_limited(
        box_spec: BoxSpec,
        n_particles: usize,
        kmax: i64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let pts = Self::tensor_points(&box_spec, n_particles);
        let total: usize = pts.iter().product();
        if total > DENSE_CAP {
            return Err(Error::config("random dense state too large"));
        }
        let mut hat = vec![Complex64::new(0.0, 0.0); total];
        let mut idx = vec![0usize; pts.len()];
        for slot in hat.iter_mut() {
            let within = idx
                .iter()
                .zip(&pts)
                .all(|(&j, &n)| mode_number(j, n).abs() <= kmax);
            if within {
                *slot = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            for a in (0..pts.len()).rev() {
                idx[a] += 1;
                if idx[a] < pts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        ifft_nd(&pts, &mut hat);
        Self::dense(box_spec, n_particles, hat)
    }

    /// Per-axis lengths of the full tensor grid.
    pub fn tensor_points(box_spec: &BoxSpec, n_particles: usize) -> Vec<usize> {
        let mut pts = Vec::with_capacity(n_particles * box_spec.d());
        for _ in 0..n_particles {
            pts.extend_from_slice(box_spec.points());
        }
        pts
    }

    /// One-body density `rho(x) = sum_j ∫ |Psi|^2 d(all but x_j)`; integrates to N.
    pub fn density(&self) -> GridFunction {
        let s = self.one_body_points();
        let mut rho = vec![0.0f64; s];
        match &self.data {
            StateData::Product(factors) => {
                for f in factors {
                    for (r, v) in rho.iter_mut().zip(&f.values) {
                        *r += v.norm_sqr();
                    }
                }
            }
            StateData::Dense(values) => {
                let n = self.n_particles;
                let w_rest = self.box_spec.cell_volume().powi(n as i32 - 1);
                let mut strides = vec![1usize; n];
                for j in (0..n - 1).rev() {
                    strides[j] = strides[j + 1] * s;
                }
                for (flat, v) in values.iter().enumerate() {
                    let p = v.norm_sqr() * w_rest;
                    for j in 0..n {
                        let sub = (flat / strides[j]) % s;
                        rho[sub] += p;
                    }
                }
            }
        }
        GridFunction {
            box_spec: self.box_spec.clone(),
            values: rho.into_iter().map(|r| Complex64::new(r, 0.0)).collect(),
        }
    }

    /// `<Psi, sum_i (-Delta_{x_i})^s Psi>`.
    pub fn kinetic_expectation(&self, s: f64) -> Result<f64> {
        match &self.data {
            StateData::Product(factors) => {
                let spec = SeminormSpec::new(s, self.box_spec.d())?;
                Ok(factors
                    .iter()
                    .map(|f| crate::grid::seminorm_global(f, &spec).value)
                    .sum())
            }
            StateData::Dense(values) => {
                let pts = Self::tensor_points(&self.box_spec, self.n_particles);
                let total: usize = pts.iter().product();
                let mut hat = values.clone();
                fft_nd(&pts, &mut hat);
                let kin1 = self.one_body_symbol(s);
                let sp = self.one_body_points();
                let mut strides = vec![1usize; self.n_particles];
                for j in (0..self.n_particles - 1).rev() {
                    strides[j] = strides[j + 1] * sp;
                }
                let w = self.box_spec.cell_volume().powi(self.n_particles as i32)
                    / total as f64;
                let mut acc = 0.0;
                for (flat, v) in hat.iter().enumerate() {
                    let mut sym = 0.0;
                    for j in 0..self.n_particles {
                        sym += kin1[(flat / strides[j]) % sp];
                    }
                    acc += sym * v.norm_sqr();
                }
                Ok(acc * w)
            }
        }
    }

    /// Table of `(|k|^2)^s` over the one-body grid bins.
    fn one_body_symbol(&self, s: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.one_body_points());
        for (_, idx) in self.box_spec.multi_indices() {
            let k2: f64 = (0..self.box_spec.d())
                .map(|a| {
                    let k = self.box_spec.wavevector(a, idx[a]);
                    k * k
                })
                .sum();
            out.push(k2.powf(s));
        }
        out
    }

    /// `C_{s,d} * sum_i <Psi, |x_i|^{-2s} Psi>`, the Hardy potential term.
    pub fn hardy_potential_term(&self, s: f64) -> Result<f64> {
        let d = self.box_spec.d();
        let c = crate::constants::hardy_constant(s, d)?.value;
        match &self.data {
            StateData::Product(factors) => {
                let mut acc = 0.0;
                for f in factors {
                    acc += hardy_energy(f, s)?;
                }
                Ok(c * acc)
            }
            StateData::Dense(values) => {
                let sp = self.one_body_points();
                let h = self.box_spec.spacing();
                let mut pot1 = Vec::with_capacity(sp);
                for flat in 0..sp {
                    let x = self.box_spec.center(flat);
                    let r2: f64 = x[..d].iter().map(|v| v * v).sum();
                    if r2 < (h / 4.0) * (h / 4.0) {
                        return Err(Error::config("grid has a cell center at the origin"));
                    }
                    pot1.push(r2.powf(-s));
                }
                let mut strides = vec![1usize; self.n_particles];
                for j in (0..self.n_particles - 1).rev() {
                    strides[j] = strides[j + 1] * sp;
                }
                let w = self.box_spec.cell_volume().powi(self.n_particles as i32);
                let mut acc = 0.0;
                for (flat, v) in values.iter().enumerate() {
                    let mut pot = 0.0;
                    for j in 0..self.n_particles {
                        pot += pot1[(flat / strides[j]) % sp];
                    }
                    acc += pot * v.norm_sqr();
                }
                Ok(c * acc * w)
            }
        }
    }

    /// Kinetic minus Hardy potential: `<Psi, sum_i ((-Delta_i)^s - C_{s,d}|x_i|^{-2s}) Psi>`.
    pub fn hardy_expectation(&self, s: f64) -> Result<f64> {
        Ok(self.kinetic_expectation(s)? - self.hardy_potential_term(s)?)
    }

    /// `∫ rho^{1+2s/d}`.
    pub fn density_power_integral(&self, s: f64) -> f64 {
        let rho = self.density();
        let p = 1.0 + 2.0 * s / self.box_spec.d() as f64;
        let w = self.box_spec.cell_volume();
        rho.values
            .iter()
            .map(|r| r.re.max(0.0).powf(p))
            .sum::<f64>()
            * w
    }

    /// Energy quotient of the selected Hamiltonian.
    pub fn lt_quotient(&self, params: &QuotientParams) -> Result<QuotientBreakdown> {
        let kinetic = self.kinetic_expectation(params.s)?;
        let hardy_term = if params.hardy {
            self.hardy_potential_term(params.s)?
        } else {
            0.0
        };
        let interaction_unit = crate::exclusion::interaction_expectation(self, params.s, 1.0)?;
        let denominator = self.density_power_integral(params.s);
        if denominator <= 0.0 {
            return Err(Error::numeric("zero density power integral"));
        }
        let value =
            (kinetic - hardy_term + params.lambda * interaction_unit) / denominator;
        Ok(QuotientBreakdown {
            kinetic,
            hardy_term,
            interaction_unit,
            denominator,
            value,
        })
    }
}

/// Integer-factor spectral dilation about the box midpoint:
/// `v_ell(mid + y) = ell^{d/2} v(mid + ell y)`.
///
/// Moving the Fourier coefficient of mode `m` to mode `ell*m` (with the
/// phase factor that re-anchors the dilation at the midpoint rather than at
/// grid index zero) evaluates the compressed field exactly at every grid
/// point; on the torus that map wraps around `ell^d` times, so the profile
/// appears once per fundamental window. The extra appearances are zeroed
/// (they sit far from the retained one whenever `v` decays inside its box),
/// leaving the single compressed copy. Errors when the input carries
/// noticeable spectral mass beyond the fold-over cutoff `n/(2 ell)` (an
/// under-resolved rescaling).
pub fn dilate_spectral(v: &GridFunction, ell: u32) -> Result<GridFunction> {
    if ell == 0 {
        return Err(Error::config("dilation factor must be >= 1"));
    }
    if ell == 1 {
        return Ok(v.clone());
    }
    let d = v.box_spec.d();
    let pts = v.box_spec.points().to_vec();
    let mut hat = v.values.clone();
    fft_nd(&pts, &mut hat);
    let total: usize = pts.iter().product();
    let mut out_hat = vec![Complex64::new(0.0, 0.0); total];
    let mut kept = 0.0;
    let mut dropped = 0.0;
    let h = v.box_spec.spacing();
    for (flat, idx) in v.box_spec.multi_indices() {
        let modes: Vec<i64> = (0..d).map(|a| mode_number(idx[a], pts[a])).collect();
        let within = (0..d).all(|a| (ell as i64 * modes[a]).unsigned_abs() < pts[a] as u64 / 2);
        let mass = hat[flat].norm_sqr();
        if within {
            kept += mass;
            // target bin of mode ell*m, with the midpoint-anchoring phase
            // exp(i k_m (ell-1)(h/2 - extent/2)) per axis
            let mut target = 0usize;
            let mut phase = Complex64::new(1.0, 0.0);
            for a in 0..d {
                let m = ell as i64 * modes[a];
                let bin = m.rem_euclid(pts[a] as i64) as usize;
                target = target * pts[a] + bin;
                let k = 2.0 * std::f64::consts::PI * modes[a] as f64 / v.box_spec.extent(a);
                let arg = k * (ell as f64 - 1.0) * (0.5 * h - 0.5 * v.box_spec.extent(a));
                phase *= Complex64::new(arg.cos(), arg.sin());
            }
            out_hat[target] = hat[flat] * phase;
        } else {
            dropped += mass;
        }
    }
    if dropped > 1e-8 * (kept + dropped) {
        return Err(Error::config(format!(
            "rescaled field under-resolved: {:.2e} of the spectral mass lies \
             beyond the dilation cutoff",
            dropped / (kept + dropped)
        )));
    }
    ifft_nd(&pts, &mut out_hat);
    // keep the single copy in the central window |x - x_mid| < extent/(2 ell)
    let amp = (ell as f64).powf(d as f64 / 2.0);
    for (flat, _) in v.box_spec.multi_indices() {
        let x = v.box_spec.center(flat);
        let inside = (0..d).all(|a| {
            let mid = 0.5 * (v.box_spec.lo()[a] + v.box_spec.hi()[a]);
            (x[a] - mid).abs() < v.box_spec.extent(a) / (2.0 * ell as f64)
        });
        out_hat[flat] = if inside {
            out_hat[flat] * amp
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    GridFunction::new(v.box_spec.clone(), out_hat)
}

/// Product state of translated copies `prod_i u_i(x_i - c_i)` (centers are
/// rounded to whole cells). Returns the state together with the largest
/// pairwise overlap `∫ |u_i u_j|`; values above 1e-6 mean the separation
/// assumption is dubious.
pub fn trial_separated(
    u_list: &[GridFunction],
    centers: &[Vec<f64>],
    box_spec: &BoxSpec,
) -> Result<(NBodyState, f64)> {
    if u_list.len() != centers.len() {
        return Err(Error::config("one center per factor required"));
    }
    let h = box_spec.spacing();
    let mut factors = Vec::with_capacity(u_list.len());
    for (u, c) in u_list.iter().zip(centers) {
        if u.box_spec != *box_spec {
            return Err(Error::config("factors must live on the target box"));
        }
        let offset: Vec<i64> = c.iter().map(|x| (x / h).round() as i64).collect();
        factors.push(u.shift_cells(&offset));
    }
    let mut max_overlap = 0.0f64;
    let w = box_spec.cell_volume();
    for i in 0..factors.len() {
        for j in i + 1..factors.len() {
            let ni = factors[i].l2_norm_sq().sqrt();
            let nj = factors[j].l2_norm_sq().sqrt();
            let ov: f64 = factors[i]
                .values
                .iter()
                .zip(&factors[j].values)
                .map(|(a, b)| a.norm() * b.norm())
                .sum::<f64>()
                * w
                / (ni * nj);
            max_overlap = max_overlap.max(ov);
        }
    }
    Ok((NBodyState::product(factors)?, max_overlap))
}

/// Stretch about the box midpoint by an integer factor `r`:
/// `w(mid + y) = r^{-d/2} v_p(mid + y/r)` where `v_p` is the trigonometric
/// interpolant of `v`. Realizes the dilation `v_ell` with `ell = 1/r < 1`.
/// Evaluation points are off-lattice, so this applies one dense `n x n`
/// transform per axis instead of an FFT.
pub fn stretch_spectral(v: &GridFunction, r: u32) -> Result<GridFunction> {
    if r == 0 {
        return Err(Error::config("stretch factor must be >= 1"));
    }
    if r == 1 {
        return Ok(v.clone());
    }
    let d = v.box_spec.d();
    let pts = v.box_spec.points().to_vec();
    let mut work = v.values.clone();
    fft_nd(&pts, &mut work);
    // per-axis inverse transform evaluated at the contracted points
    for axis in 0..d {
        let n = pts[axis];
        let extent = v.box_spec.extent(axis);
        let mid = 0.5 * (v.box_spec.lo()[axis] + v.box_spec.hi()[axis]);
        let x0 = v.box_spec.coord(axis, 0);
        // evaluation matrix M[j][q] = exp(i k_q (y_j - x_0)) / n
        let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let xj = v.box_spec.coord(axis, j);
            let yj = mid + (xj - mid) / r as f64;
            for q in 0..n {
                let k = 2.0 * std::f64::consts::PI * mode_number(q, n) as f64 / extent;
                let arg = k * (yj - x0);
                matrix[j * n + q] =
                    Complex64::new(arg.cos(), arg.sin()) / n as f64;
            }
        }
        let stride: usize = pts[axis + 1..].iter().product();
        let lines = work.len() / n;
        let mut out = vec![Complex64::new(0.0, 0.0); work.len()];
        for line in 0..lines {
            let outer = line / stride;
            let inner = line % stride;
            let base = outer * stride * n + inner;
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for q in 0..n {
                    acc += matrix[j * n + q] * work[base + q * stride];
                }
                out[base + j * stride] = acc;
            }
        }
        work = out;
    }
    let amp = (r as f64).powf(-(d as f64) / 2.0);
    for w in work.iter_mut() {
        *w *= amp;
    }
    GridFunction::new(v.box_spec.clone(), work)
}

/// Dilation `v_ell(mid + y) = ell^{d/2} v(mid + ell y)` for `ell` an
/// integer (compression) or the reciprocal of an integer (stretch).
pub fn dilate(v: &GridFunction, ell: f64) -> Result<GridFunction> {
    if !(ell > 0.0) {
        return Err(Error::config("dilation factor must be positive"));
    }
    if ell >= 1.0 {
        let r = ell.round();
        if (ell - r).abs() > 1e-9 {
            return Err(Error::config(
                "dilation supports integer or reciprocal-integer factors",
            ));
        }
        dilate_spectral(v, r as u32)
    } else {
        let r = (1.0 / ell).round();
        if (1.0 / ell - r).abs() > 1e-9 {
            return Err(Error::config(
                "dilation supports integer or reciprocal-integer factors",
            ));
        }
        stretch_spectral(v, r as u32)
    }
}

/// The 2-body Hardy trial state `Psi(x, y) = u(x) * v_ell(y - z)` with
/// `v_ell(x) = ell^{d/2} v(ell x)`.
pub fn trial_hardy_pair(
    u: &GridFunction,
    v: &GridFunction,
    z: &[f64],
    ell: f64,
) -> Result<NBodyState> {
    if u.box_spec != v.box_spec {
        return Err(Error::config("u and v must share one grid"));
    }
    let d = u.box_spec.d();
    if d != z.len() {
        return Err(Error::config("shift dimension mismatch"));
    }
    let vl = dilate(v, ell)?;
    let h = u.box_spec.spacing();
    let offset: Vec<i64> = z.iter().map(|x| (x / h).round() as i64).collect();
    let shifted = vl.shift_cells(&offset);
    NBodyState::product(vec![u.clone(), shifted])
}

/// Copy a field into a larger box with the same spacing (the source box
/// must sit on the target's cell lattice); values outside are zero.
pub fn embed(v: &GridFunction, target: &BoxSpec) -> Result<GridFunction> {
    let d = v.box_spec.d();
    if target.d() != d {
        return Err(Error::config("dimension mismatch"));
    }
    let h = v.box_spec.spacing();
    if ((target.spacing() - h) / h).abs() > 1e-12 {
        return Err(Error::config("embedding requires equal grid spacing"));
    }
    let mut offsets = vec![0i64; d];
    for a in 0..d {
        let shift = (v.box_spec.lo()[a] - target.lo()[a]) / h;
        let r = shift.round();
        if (shift - r).abs() > 1e-9 {
            return Err(Error::config("source box is off the target lattice"));
        }
        if r < 0.0 || v.box_spec.hi()[a] > target.hi()[a] + 1e-9 * h {
            return Err(Error::config("source box does not fit in the target"));
        }
        offsets[a] = r as i64;
    }
    let mut out = GridFunction::zeros(target.clone());
    for (flat, idx) in v.box_spec.multi_indices() {
        let mut t = 0usize;
        for a in 0..d {
            t = t * target.points()[a] + (idx[a] as i64 + offsets[a]) as usize;
        }
        out.values[t] = v.values[flat];
    }
    Ok(out)
}
