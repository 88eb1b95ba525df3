//! Variational estimates of the quotient constants: the global
//! Gagliardo–Nirenberg constant, its Hardy counterpart, and the empirical
//! constants appearing in the local uncertainty principles.
//!
//! The minimizers run normalized projected gradient descent with Armijo
//! backtracking over the unit L2 sphere, restarted from random Gaussian
//! bumps. Empirical constants (which the underlying inequalities assert to
//! exist without giving values) are estimated adversarially over a declared
//! trial family and reported together with their safety margin and holdout
//! audit; they are calibrated values, not proofs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::hardy_constant;
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::grid::{
    hardy_energy, seminorm_domain, BoxSpec, DomainMask, GridFunction, SeminormSpec,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerParams {
    pub max_iters: usize,
    /// Initial line-search step.
    pub step_size: f64,
    /// Stop when the quotient's relative change stays below this.
    pub tol_rel: f64,
    /// Independent random initializations (also the adversarial family size
    /// for the empirical-constant estimators).
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            max_iters: 2000,
            step_size: 0.1,
            tol_rel: 1e-9,
            restarts: 4,
            seed: 7,
        }
    }
}

/// Outcome of a quotient minimization.
#[derive(Debug, Clone)]
pub struct QuotientResult {
    pub value: f64,
    pub minimizer: GridFunction,
    pub iterations: usize,
    pub converged: bool,
    pub per_restart: Vec<f64>,
    /// Quotient after each accepted step of the winning restart.
    pub trace: Vec<f64>,
}

/// The quotient functional `J(u) = T_s(u) / ∫|u|^{2(1+2s/d)}` with an
/// optional Hardy well in the numerator.
struct QuotientFunctional {
    spec_points: Vec<usize>,
    symbol: Vec<f64>,
    hardy_weight: Vec<f64>, // C_{s,d} / |x|^{2s}, empty when not used
    p: f64,
    cell_volume: f64,
}

impl QuotientFunctional {
    fn new(box_spec: &BoxSpec, s: f64, hardy: bool) -> Result<Self> {
        let d = box_spec.d();
        let mut symbol = Vec::with_capacity(box_spec.total_points());
        for (_, idx) in box_spec.multi_indices() {
            let k2: f64 = (0..d)
                .map(|a| {
                    let k = box_spec.wavevector(a, idx[a]);
                    k * k
                })
                .sum();
            symbol.push(k2.powf(s));
        }
        let hardy_weight = if hardy {
            let c = hardy_constant(s, d)?.value;
            let h = box_spec.spacing();
            let mut w = Vec::with_capacity(box_spec.total_points());
            for flat in 0..box_spec.total_points() {
                let x = box_spec.center(flat);
                let r2: f64 = x[..d].iter().map(|v| v * v).sum();
                if r2 < (h / 4.0) * (h / 4.0) {
                    return Err(Error::config("grid has a cell center at the origin"));
                }
                w.push(c * r2.powf(-s));
            }
            w
        } else {
            Vec::new()
        };
        Ok(QuotientFunctional {
            spec_points: box_spec.points().to_vec(),
            symbol,
            hardy_weight,
            p: 2.0 * (1.0 + 2.0 * s / d as f64),
            cell_volume: box_spec.cell_volume(),
        })
    }

    /// Numerator, denominator, and the kinetic operator applied to `u`
    /// (for the gradient). `u` must be L2-normalized.
    fn evaluate(&self, u: &[Complex64]) -> (f64, f64, Vec<Complex64>) {
        let total = u.len() as f64;
        let mut hat = u.to_vec();
        fft_nd(&self.spec_points, &mut hat);
        let mut kinetic = 0.0;
        for (v, &sym) in hat.iter_mut().zip(&self.symbol) {
            kinetic += sym * v.norm_sqr();
            *v *= sym;
        }
        crate::fft::ifft_nd(&self.spec_points, &mut hat);
        kinetic *= self.cell_volume / total;
        let mut numerator = kinetic;
        if !self.hardy_weight.is_empty() {
            let pot: f64 = u
                .iter()
                .zip(&self.hardy_weight)
                .map(|(v, &w)| w * v.norm_sqr())
                .sum::<f64>()
                * self.cell_volume;
            numerator -= pot;
        }
        let denom: f64 = u
            .iter()
            .map(|v| v.norm_sqr().powf(self.p / 2.0))
            .sum::<f64>()
            * self.cell_volume;
        (numerator, denom, hat)
    }

    #[cfg(test)]
    fn quotient(&self, u: &[Complex64]) -> f64 {
        let (num, den, _) = self.evaluate(u);
        num / den
    }
}

fn normalize(values: &mut [Complex64], cell_volume: f64) {
    let n: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell_volume;
    let s = 1.0 / n.sqrt();
    for v in values.iter_mut() {
        *v *= s;
    }
}

/// Boundary-decay gate on descent iterates: the periodic box represents
/// the whole space only for fields that die out before the boundary, and
/// on the torus itself the quotient degenerates (the constant function has
/// quotient zero), so steps that spread mass to the boundary are rejected.
const DECAY_GATE: f64 = 1e-4;

fn decays(f: &QuotientFunctional, u: &[Complex64]) -> bool {
    let pts = &f.spec_points;
    let d = pts.len();
    let mut peak: f64 = 0.0;
    for v in u {
        peak = peak.max(v.norm_sqr());
    }
    if peak == 0.0 {
        return true;
    }
    let mut boundary: f64 = 0.0;
    let mut idx = vec![0usize; d];
    for (flat, v) in u.iter().enumerate() {
        let _ = flat;
        if idx.iter().zip(pts).any(|(&j, &n)| j == 0 || j + 1 == n) {
            boundary = boundary.max(v.norm_sqr());
        }
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < pts[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    boundary.sqrt() <= DECAY_GATE * peak.sqrt()
}

/// One projected-gradient descent run from a given normalized start.
fn descend(
    f: &QuotientFunctional,
    start: Vec<Complex64>,
    params: &OptimizerParams,
) -> (Vec<Complex64>, f64, usize, bool, Vec<f64>) {
    let w = f.cell_volume;
    let mut u = start;
    normalize(&mut u, w);
    let (mut num, mut den, mut op_u) = f.evaluate(&u);
    let mut j = num / den;
    let mut trace = vec![j];
    let mut step = params.step_size;
    let mut stall = 0usize;
    let mut iters = 0usize;
    let mut prev: Option<(Vec<Complex64>, Vec<Complex64>)> = None; // (u, grad)
    for it in 0..params.max_iters {
        iters = it + 1;
        // gradient of num/den on the sphere
        let mut grad: Vec<Complex64> = Vec::with_capacity(u.len());
        for i in 0..u.len() {
            let gn = 2.0 * op_u[i]
                - if f.hardy_weight.is_empty() {
                    Complex64::new(0.0, 0.0)
                } else {
                    2.0 * f.hardy_weight[i] * u[i]
                };
            let gd = f.p * u[i].norm_sqr().powf(f.p / 2.0 - 1.0) * u[i];
            grad.push((gn - j * gd) / den);
        }
        // project out the radial component
        let radial: f64 = grad
            .iter()
            .zip(&u)
            .map(|(g, v)| (g.conj() * v).re)
            .sum::<f64>()
            * w;
        for (g, v) in grad.iter_mut().zip(&u) {
            *g -= radial * v;
        }
        let grad_norm_sq: f64 = grad.iter().map(|g| g.norm_sqr()).sum::<f64>() * w;
        if grad_norm_sq < 1e-28 {
            return (u, j, iters, true, trace);
        }
        // Barzilai-Borwein guess for the initial trial step; the
        // scale-invariant quotient has a flat valley along dilations and
        // plain descent crawls there
        if let Some((pu, pg)) = &prev {
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..u.len() {
                let du = u[i] - pu[i];
                let dg = grad[i] - pg[i];
                ss += du.norm_sqr();
                sy += (du.conj() * dg).re;
            }
            if sy.abs() > 1e-300 {
                step = (ss / sy).abs().clamp(1e-6, 1e4);
            }
        }
        prev = Some((u.clone(), grad.clone()));
        // backtracking line search
        let mut accepted = false;
        let mut t = step;
        for _ in 0..40 {
            let mut cand: Vec<Complex64> = u
                .iter()
                .zip(&grad)
                .map(|(v, g)| v - t * g)
                .collect();
            normalize(&mut cand, w);
            if !decays(f, &cand) {
                t *= 0.5;
                continue;
            }
            let (cn, cd, cop) = f.evaluate(&cand);
            let cj = cn / cd;
            if cj <= j - 1e-4 * t * grad_norm_sq {
                let rel = ((j - cj) / j.abs().max(1e-300)).abs();
                u = cand;
                num = cn;
                den = cd;
                op_u = cop;
                j = cj;
                trace.push(j);
                step = t;
                accepted = true;
                if rel < params.tol_rel {
                    stall += 1;
                } else {
                    stall = 0;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no descent direction at line-search resolution: converged
            return (u, j, iters, true, trace);
        }
        if stall >= 3 {
            return (u, j, iters, true, trace);
        }
        // window test: BB steps alternate sizes, so also accept a stretch
        // of 20 iterations whose total improvement is below tolerance
        if trace.len() > 20 {
            let past = trace[trace.len() - 21];
            if ((past - j) / j.abs().max(1e-300)).abs() < 20.0 * params.tol_rel {
                return (u, j, iters, true, trace);
            }
        }
    }
    let _ = (num, den);
    (u, j, iters, false, trace)
}

fn random_bump(box_spec: &BoxSpec, rng: &mut impl Rng) -> GridFunction {
    let d = box_spec.d();
    let extent = box_spec.extent(0);
    let width = extent * rng.gen_range(0.02..0.08);
    let center: Vec<f64> = (0..d)
        .map(|a| {
            let mid = 0.5 * (box_spec.lo()[a] + box_spec.hi()[a]);
            mid + extent * rng.gen_range(-0.15..0.15)
        })
        .collect();
    GridFunction::gaussian(box_spec.clone(), &center, width)
}

fn run_restarts(
    f: &QuotientFunctional,
    box_spec: &BoxSpec,
    params: &OptimizerParams,
    extra_inits: &[GridFunction],
) -> Result<QuotientResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Vec<Complex64>, f64, usize, bool, Vec<f64>)> = None;
    let mut per_restart = Vec::new();
    let mut starts: Vec<Vec<Complex64>> = extra_inits
        .iter()
        .map(|g| {
            if g.box_spec != *box_spec {
                Err(Error::config("initializer grid mismatch"))
            } else {
                Ok(g.values.clone())
            }
        })
        .collect::<Result<_>>()?;
    for _ in 0..params.restarts {
        starts.push(random_bump(box_spec, &mut rng).values);
    }
    for start in starts {
        let out = descend(f, start, params);
        per_restart.push(out.1);
        let better = match &best {
            None => true,
            Some(b) => out.1 < b.1,
        };
        if better {
            best = Some(out);
        }
    }
    let (u, value, iterations, converged, trace) =
        best.ok_or_else(|| Error::numeric("no restarts executed"))?;
    Ok(QuotientResult {
        value,
        minimizer: GridFunction::new(box_spec.clone(), u)?,
        iterations,
        converged,
        per_restart,
        trace,
    })
}

/// Estimate the Gagliardo–Nirenberg constant
/// `inf { T_s(u) / ∫|u|^{2(1+2s/d)} : ||u||_2 = 1 }` by projected descent.
/// The returned value is an upper bound on the true infimum by construction.
pub fn minimize_gn(
    s: f64,
    d: usize,
    box_spec: &BoxSpec,
    params: &OptimizerParams,
) -> Result<QuotientResult> {
    minimize_gn_seeded(s, d, box_spec, params, &[])
}

/// Same, with caller-provided initializers tried before the random ones.
pub fn minimize_gn_seeded(
    s: f64,
    d: usize,
    box_spec: &BoxSpec,
    params: &OptimizerParams,
    extra_inits: &[GridFunction],
) -> Result<QuotientResult> {
    if box_spec.d() != d {
        return Err(Error::config("box dimension mismatch"));
    }
    if !(s > 0.0) {
        return Err(Error::config("order s must be positive"));
    }
    let f = QuotientFunctional::new(box_spec, s, false)?;
    run_restarts(&f, box_spec, params, extra_inits)
}

/// Estimate the Hardy variant `inf (T_s(u) - C_{s,d} ∫|u|²/|x|^{2s}) / ∫|u|^p`.
/// Requires `0 < 2s < d` and an origin-centered box. The winning minimizer
/// of the plain quotient is included among the initializers, so the
/// estimate never exceeds the plain one. The reported value clamps the
/// numerator at zero (the descent itself uses the raw quotient).
pub fn minimize_hgn(
    s: f64,
    d: usize,
    box_spec: &BoxSpec,
    params: &OptimizerParams,
) -> Result<QuotientResult> {
    if !(2.0 * s < d as f64) {
        return Err(Error::config("Hardy regime requires 2s < d"));
    }
    let gn = minimize_gn(s, d, box_spec, params)?;
    let f = QuotientFunctional::new(box_spec, s, true)?;
    let mut out = run_restarts(&f, box_spec, params, &[gn.minimizer])?;
    if out.value < 0.0 {
        out.value = 0.0;
    }
    Ok(out)
}

/// An adversarially calibrated empirical constant, with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalConstant {
    pub value: f64,
    /// Largest requirement seen over the trial family, before the margin.
    pub raw_supremum: f64,
    /// Relative safety margin applied on top of the supremum.
    pub margin: f64,
    pub trials: usize,
    pub holdout_trials: usize,
    /// Holdout draws that exceeded the margined value (0 in a sound run;
    /// when positive the value was bumped to cover them).
    pub holdout_violations: usize,
}

const EMPIRICAL_MARGIN: f64 = 0.05;

/// Trial family for the local estimators: Gaussian bumps and band-limited
/// random fields supported in the 1.5-dilated region around `center`.
pub fn trial_field(
    box_spec: &BoxSpec,
    center: &[f64],
    extent: f64,
    rng: &mut impl Rng,
) -> GridFunction {
    let d = box_spec.d();
    let reach = 0.75 * extent; // half-width of the 1.5-dilated region
    if rng.gen_bool(0.5) {
        let width = extent * rng.gen_range(0.05..0.6);
        let c: Vec<f64> = (0..d)
            .map(|a| center[a] + rng.gen_range(-reach..reach) * 0.8)
            .collect();
        GridFunction::gaussian(box_spec.clone(), &c, width)
    } else {
        let kmax = rng.gen_range(1..=(box_spec.points()[0] as i64 / 8).max(2));
        let f = GridFunction::random_band_limited(box_spec.clone(), kmax, rng);
        let window = crate::grid::smooth_plateau(box_spec.clone(), center, reach * 0.7, reach);
        f.pointwise_mul(&window)
    }
}

fn mask_geometry(mask: &DomainMask) -> (Vec<f64>, f64) {
    let d = mask.box_spec.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (flat, _) in mask.box_spec.multi_indices() {
        if mask.mask[flat] {
            let c = mask.box_spec.center(flat);
            for a in 0..d {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
    }
    let center: Vec<f64> = (0..d).map(|a| 0.5 * (lo[a] + hi[a])).collect();
    let extent = (0..d).map(|a| hi[a] - lo[a]).fold(0.0f64, f64::max);
    (center, extent)
}

/// Masked rectangle-rule integrals used by the local estimators.
fn masked_l2(u: &GridFunction, mask: &DomainMask) -> f64 {
    let w = u.box_spec.cell_volume();
    u.values
        .iter()
        .zip(&mask.mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.norm_sqr())
        .sum::<f64>()
        * w
}

fn masked_lp(u: &GridFunction, mask: &DomainMask, p: f64) -> f64 {
    let w = u.box_spec.cell_volume();
    u.values
        .iter()
        .zip(&mask.mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.norm_sqr().powf(p / 2.0))
        .sum::<f64>()
        * w
}

/// Empirical constant of the refined local uncertainty principle on a pair
/// `Omega ⊂⊂ ~Omega`: the largest observed deficit
/// `[C_GN (1-delta) (∫_Omega |u|^p) / (∫_~Omega |u|²)^{2s/d} - ||u||²_{H^s(~Omega)}] / ∫_~Omega |u|²`,
/// clamped at zero and margined. With `hardy_constant_term` set, the
/// seminorm is credited with the Hardy well on `Omega` (the origin-cluster
/// variant) and `gn_constant` should then be the Hardy-GN estimate.
#[allow(clippy::too_many_arguments)]
pub fn estimate_local_constant(
    s: f64,
    delta: f64,
    omega: &DomainMask,
    omega_tilde: &DomainMask,
    params: &OptimizerParams,
    gn_constant: f64,
    hardy_constant_term: bool,
) -> Result<EmpiricalConstant> {
    if omega.box_spec != omega_tilde.box_spec {
        return Err(Error::config("masks must share one grid"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config("delta must lie in (0,1)"));
    }
    if !omega.compactly_inside(omega_tilde) {
        return Err(Error::config("Omega must be compactly contained in ~Omega"));
    }
    let d = omega.box_spec.d();
    let spec = SeminormSpec::new(s, d)?;
    let p = 2.0 * (1.0 + 2.0 * s / d as f64);
    let q = 2.0 * s / d as f64;
    let (center, extent) = mask_geometry(omega_tilde);
    let c_hardy = if hardy_constant_term {
        hardy_constant(s, d)?.value
    } else {
        0.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let deficit = |u: &GridFunction| -> Result<Option<f64>> {
        let l2_tilde = masked_l2(u, omega_tilde);
        if l2_tilde < 1e-6 * u.l2_norm_sq().max(1e-300) || l2_tilde <= 0.0 {
            return Ok(None); // degenerate trial, excluded by the mass floor
        }
        let lp_omega = masked_lp(u, omega, p);
        let mut sem = seminorm_domain(u, &spec, omega_tilde)?;
        if hardy_constant_term {
            let w = u.box_spec.cell_volume();
            let h = u.box_spec.spacing();
            let mut pot = 0.0;
            for (flat, _) in u.box_spec.multi_indices() {
                if omega.mask[flat] {
                    let x = u.box_spec.center(flat);
                    let r2: f64 = x[..d].iter().map(|v| v * v).sum();
                    pot += u.values[flat].norm_sqr() * r2.max(h * h / 16.0).powf(-s) * w;
                }
            }
            sem -= c_hardy * pot;
        }
        let gain = gn_constant * (1.0 - delta) * lp_omega / l2_tilde.powf(q);
        Ok(Some((gain - sem) / l2_tilde))
    };
    let mut raw: f64 = 0.0;
    for _ in 0..params.restarts.max(32) {
        let u = trial_field(&omega.box_spec, &center, extent, &mut rng);
        if let Some(v) = deficit(&u)? {
            raw = raw.max(v);
        }
    }
    let value = raw.max(0.0) * (1.0 + EMPIRICAL_MARGIN);
    Ok(EmpiricalConstant {
        value,
        raw_supremum: raw,
        margin: EMPIRICAL_MARGIN,
        trials: params.restarts.max(32),
        holdout_trials: 0,
        holdout_violations: 0,
    })
}

/// Empirical constant `C` of the unit-cube local uncertainty principle
/// `||u||²_{H^s(Q)} >= (1/C) ∫_Q rho^{1+2s/d} / (∫_Q rho)^{2s/d} - C ∫_Q rho / |Q|^{2s/d}`.
///
/// For each trial the smallest admissible constant has the closed form
/// `c*(u) = (-S + sqrt(S² + 4AB)) / (2B)`; the estimate is the margined
/// supremum over the family, audited against a fresh holdout set of 500
/// draws (any holdout excess bumps the value to cover it).
pub fn estimate_lup1_constant(
    s: f64,
    d: usize,
    params: &OptimizerParams,
) -> Result<EmpiricalConstant> {
    let points = match d {
        1 => 512,
        2 => 64,
        3 => 32,
        _ => return Err(Error::config("dimension must be 1..=3")),
    };
    // unit cube Q inside its 1.5-dilation: box [-0.25, 1.25]^d
    let box_spec = BoxSpec::new(vec![-0.25; d], vec![1.25; d], vec![points; d])?;
    let omega = DomainMask::from_predicate(box_spec.clone(), |x| {
        x.iter().all(|&v| v > 0.0 && v < 1.0)
    })?;
    let spec = SeminormSpec::new(s, d)?;
    let p = 1.0 + 2.0 * s / d as f64;
    let q = 2.0 * s / d as f64;
    let center = vec![0.5; d];
    let requirement = |u: &GridFunction| -> Result<Option<f64>> {
        let mass = masked_l2(u, &omega);
        if mass < 1e-6 * u.l2_norm_sq().max(1e-300) || mass <= 0.0 {
            return Ok(None);
        }
        let a = masked_lp(u, &omega, 2.0 * p) / mass.powf(q);
        let b = mass; // |Q| = 1
        let sem = seminorm_domain(u, &spec, &omega)?;
        Ok(Some((-sem + (sem * sem + 4.0 * a * b).sqrt()) / (2.0 * b)))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let trials = params.restarts.max(64);
    let mut raw: f64 = 0.0;
    // the constant-density trial forces C >= 1 and anchors the family
    let flat_trial = GridFunction::from_fn(box_spec.clone(), |_| Complex64::new(1.0, 0.0));
    if let Some(v) = requirement(&flat_trial)? {
        raw = raw.max(v);
    }
    for _ in 0..trials {
        let u = trial_field(&box_spec, &center, 1.0, &mut rng);
        if let Some(v) = requirement(&u)? {
            raw = raw.max(v);
        }
    }
    let mut value = raw * (1.0 + EMPIRICAL_MARGIN);
    // holdout audit with a fresh stream
    let mut holdout_rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(0x9E3779B9));
    let holdout_trials = 500;
    let mut violations = 0usize;
    for _ in 0..holdout_trials {
        let u = trial_field(&box_spec, &center, 1.0, &mut holdout_rng);
        if let Some(v) = requirement(&u)? {
            if v > value {
                violations += 1;
                value = v * (1.0 + EMPIRICAL_MARGIN);
            }
        }
    }
    Ok(EmpiricalConstant {
        value,
        raw_supremum: raw,
        margin: EMPIRICAL_MARGIN,
        trials: trials + 1,
        holdout_trials,
        holdout_violations: violations,
    })
}

/// Calibrate the constant in the kinetic improvement of Hardy's inequality
/// `(-Delta)^s - C_{s,d}|x|^{-2s} >= ell^{s-t} (-Delta)^t - C ell^s`:
/// the margined supremum of `[ell^{s-t} T_t + C_{s,d} H_s - T_s] / (ell^s ||u||²)`
/// over the trial family and a grid of scales `ell`.
pub fn calibrate_frank_constant(
    s: f64,
    t: f64,
    d: usize,
    box_spec: &BoxSpec,
    params: &OptimizerParams,
) -> Result<EmpiricalConstant> {
    if !(0.0 < t && t < s && 2.0 * s < d as f64) {
        return Err(Error::config("need 0 < t < s < d/2"));
    }
    let c_hardy = hardy_constant(s, d)?.value;
    let spec_s = SeminormSpec::new(s, d)?;
    let spec_t = SeminormSpec::new(t, d)?;
    let mid: Vec<f64> = (0..d)
        .map(|a| 0.5 * (box_spec.lo()[a] + box_spec.hi()[a]))
        .collect();
    let extent = box_spec.extent(0) * 0.5;
    let ells: [f64; 5] = [0.1, 0.3, 1.0, 3.0, 10.0];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let trials = params.restarts.max(48);
    let mut raw: f64 = 0.0;
    for _ in 0..trials {
        let u = trial_field(box_spec, &mid, extent, &mut rng);
        let norm = u.l2_norm_sq();
        if norm <= 0.0 {
            continue;
        }
        let t_s = crate::grid::seminorm_global(&u, &spec_s).value;
        let t_t = crate::grid::seminorm_global(&u, &spec_t).value;
        let h_s = hardy_energy(&u, s)?;
        for &ell in &ells {
            let req = (ell.powf(s - t) * t_t + c_hardy * h_s - t_s) / (ell.powf(s) * norm);
            raw = raw.max(req);
        }
    }
    Ok(EmpiricalConstant {
        value: raw.max(0.0) * (1.0 + EMPIRICAL_MARGIN),
        raw_supremum: raw,
        margin: EMPIRICAL_MARGIN,
        trials,
        holdout_trials: 0,
        holdout_violations: 0,
    })
}

/// Check the calibrated Hardy-improvement inequality on a concrete field.
/// Returns the margin `LHS - RHS`; nonnegative (up to `tol`) means it holds.
pub fn check_frank_improvement(
    s: f64,
    t: f64,
    ell: f64,
    u: &GridFunction,
    calibrated: f64,
    tol: f64,
) -> Result<(bool, f64)> {
    let d = u.box_spec.d();
    if !(0.0 < t && t < s && 2.0 * s < d as f64) {
        return Err(Error::config("need 0 < t < s < d/2"));
    }
    if !(ell > 0.0) {
        return Err(Error::config("scale ell must be positive"));
    }
    let c_hardy = hardy_constant(s, d)?.value;
    let spec_s = SeminormSpec::new(s, d)?;
    let spec_t = SeminormSpec::new(t, d)?;
    let lhs = crate::grid::seminorm_global(u, &spec_s).value - c_hardy * hardy_energy(u, s)?;
    let rhs = ell.powf(s - t) * crate::grid::seminorm_global(u, &spec_t).value
        - calibrated * ell.powf(s) * u.l2_norm_sq();
    let margin = lhs - rhs;
    Ok((margin >= -tol, margin))
}
