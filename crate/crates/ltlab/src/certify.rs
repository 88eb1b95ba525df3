//! Certificate pipeline: assembles the local uncertainty ledgers (low-mass
//! cubes and light clusters), the exclusion credit from heavy cubes, and
//! the coupling gate into a numeric lower bound
//! `quotient >= min{ 1/(C delta^{s/d}), C_GN (1-delta)(1-delta^{s/d})/(1+delta)^{2s/d} }`
//! on the energy quotient of a state or density, valid once the coupling
//! exceeds the computed threshold.
//!
//! All non-closed-form constants enter through a [`Calibration`] produced
//! by the variational module; every report records which calibration it
//! used. Certificates are empirical-constant statements, not proofs.

use serde::{Deserialize, Serialize};

use crate::constants::hardy_constant;
use crate::covering::{decompose, CoveringParams};
use crate::error::{Error, Result};
use crate::exclusion::{build_ball_families, exclusion_lower_bound, pair_density_integral};
use crate::gn::{
    calibrate_frank_constant, estimate_local_constant, estimate_lup1_constant, minimize_gn,
    minimize_hgn, EmpiricalConstant, OptimizerParams,
};
use crate::grid::{BoxSpec, DomainMask, GridFunction, SeminormSpec};
use crate::nbody::{NBodyState, QuotientParams};

/// Empirical constants and their provenance, as produced by [`calibrate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub schema: u32,
    pub s: f64,
    pub d: usize,
    pub delta: f64,
    /// Variational estimate of the Gagliardo–Nirenberg constant.
    pub gn_constant: f64,
    /// Hardy variant, present when `2s < d`.
    pub hgn_constant: Option<f64>,
    /// Constant of the plain local uncertainty principle on a cube.
    pub lup1: EmpiricalConstant,
    /// Constant of the refined principle for unit-side cluster shapes
    /// (max over the calibrated shape catalogue); rescales as `side^{-2s}`.
    pub lup2_unit: EmpiricalConstant,
    /// Hardy variant of `lup2_unit` for origin-centered shapes.
    pub lup2_hardy_unit: Option<EmpiricalConstant>,
    /// Calibrated constant of the kinetic Hardy improvement, when computed.
    pub frank: Option<EmpiricalConstant>,
    pub provenance: CalibrationProvenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationProvenance {
    pub seed: u64,
    pub optimizer: OptimizerParams,
    pub grid_points: usize,
    pub box_extent: f64,
    pub shapes: Vec<String>,
}

/// Shape catalogue for the unit-side refined-principle constant: a single
/// cube `(0,1)^d` or a two-cube domino `(0,2)x(0,1)^{d-1}`, each inside its
/// strict `side/4` closure, on a box wide enough for the 1.5-dilated trials.
fn lup2_shape_masks(d: usize, points: usize, domino: bool) -> Result<(DomainMask, DomainMask)> {
    let long = if domino { 2.0 } else { 1.0 };
    let box_spec = BoxSpec::new(vec![-1.0; d], vec![long + 1.0; d], vec![points; d])?;
    let omega = DomainMask::from_predicate(box_spec.clone(), move |x| {
        x[0] > 0.0 && x[0] < long && x[1..].iter().all(|&v| v > 0.0 && v < 1.0)
    })?;
    let tilde = DomainMask::from_predicate(box_spec, move |x| {
        let mut acc = 0.0;
        for (i, &v) in x.iter().enumerate() {
            let hi = if i == 0 { long } else { 1.0 };
            let dv = if v < 0.0 {
                -v
            } else if v > hi {
                v - hi
            } else {
                0.0
            };
            acc += dv * dv;
        }
        acc.sqrt() < 0.25
    })?;
    Ok((omega, tilde))
}

/// Origin-centered unit cube and its closure, for the Hardy variant.
fn lup2_hardy_masks(d: usize, points: usize) -> Result<(DomainMask, DomainMask)> {
    let box_spec = BoxSpec::centered_cube(d, 1.5, points)?;
    let omega = DomainMask::from_predicate(box_spec.clone(), |x| {
        x.iter().all(|&v| v.abs() < 0.5)
    })?;
    let tilde = DomainMask::from_predicate(box_spec, |x| {
        let mut acc = 0.0;
        for &v in x {
            let dv = (v.abs() - 0.5).max(0.0);
            acc += dv * dv;
        }
        acc.sqrt() < 0.25
    })?;
    Ok((omega, tilde))
}

/// Run the full calibration for one `(s, d, delta)` triple.
pub fn calibrate(
    s: f64,
    d: usize,
    delta: f64,
    params: &OptimizerParams,
    with_hardy: bool,
    with_frank: bool,
) -> Result<Calibration> {
    let (points, extent) = match d {
        1 => (2048usize, 40.0),
        2 => (128, 30.0),
        3 => (32, 20.0),
        _ => return Err(Error::config("dimension must be 1..=3")),
    };
    let box_spec = BoxSpec::centered_cube(d, extent / 2.0, points)?;
    let gn = minimize_gn(s, d, &box_spec, params)?;
    let hgn = if with_hardy && 2.0 * s < d as f64 {
        Some(minimize_hgn(s, d, &box_spec, params)?)
    } else {
        None
    };
    let lup1 = estimate_lup1_constant(s, d, params)?;
    let shape_points = match d {
        1 => 512,
        2 => 64,
        _ => 32,
    };
    let mut shapes = vec!["cube".to_string()];
    let (omega, tilde) = lup2_shape_masks(d, shape_points, false)?;
    let mut lup2 =
        estimate_local_constant(s, delta, &omega, &tilde, params, gn.value, false)?;
    if d >= 1 {
        let (omega2, tilde2) = lup2_shape_masks(d, shape_points, true)?;
        let domino =
            estimate_local_constant(s, delta, &omega2, &tilde2, params, gn.value, false)?;
        shapes.push("domino".to_string());
        if domino.value > lup2.value {
            let trials = lup2.trials;
            lup2 = domino;
            lup2.trials += trials;
        }
    }
    let lup2_hardy_unit = match &hgn {
        Some(h) if with_hardy => {
            let (omega_h, tilde_h) = lup2_hardy_masks(d, shape_points)?;
            Some(estimate_local_constant(
                s, delta, &omega_h, &tilde_h, params, h.value, true,
            )?)
        }
        _ => None,
    };
    let frank = if with_frank && 2.0 * s < d as f64 {
        Some(calibrate_frank_constant(s, s * 0.5, d, &box_spec, params)?)
    } else {
        None
    };
    Ok(Calibration {
        schema: 1,
        s,
        d,
        delta,
        gn_constant: gn.value,
        hgn_constant: hgn.map(|h| h.value),
        lup1,
        lup2_unit: lup2,
        lup2_hardy_unit,
        frank,
        provenance: CalibrationProvenance {
            seed: params.seed,
            optimizer: params.clone(),
            grid_points: points,
            box_extent: extent,
            shapes,
        },
    })
}

/// The closed-form combination of the two uncertainty channels:
/// `min{ 1/(C_emp delta^{s/d}), gn (1-delta)(1-delta^{s/d})/(1+delta)^{2s/d} }`.
pub fn certificate_factor(delta: f64, s: f64, d: usize, c_emp: f64, gn_constant: f64) -> f64 {
    let q = s / d as f64;
    let branch1 = 1.0 / (c_emp * delta.powf(q));
    let branch2 =
        gn_constant * (1.0 - delta) * (1.0 - delta.powf(q)) / (1.0 + delta).powf(2.0 * q);
    branch1.min(branch2)
}

/// Geometric overlap bound for same-scale balls: centers sit on the cube
/// lattice, so at most `(2 sqrt(d)(delta^{-1}+2) + 1)^d` balls cover a point.
pub fn geometric_overlap_bound(d: usize, delta: f64) -> f64 {
    (2.0 * (d as f64).sqrt() * (1.0 / delta + 2.0) + 1.0).powi(d as i32)
}

/// State-independent coupling threshold
/// `lambda* = C_chan * max(C_lup1 delta^{s/d}, (1-delta^{s/d}) C_lup2)`,
/// where the channel constant converts one scale of exclusion credit into
/// coverage of the next scale's uncertainty errors.
pub fn lambda_threshold(delta: f64, s: f64, d: usize, cal: &Calibration) -> Result<f64> {
    if cal.lup1.value <= 0.0 {
        return Err(Error::config("missing calibration"));
    }
    let eps = 0.5f64; // the threshold formula is quoted for the default split
    lambda_threshold_eps(delta, s, d, cal, eps)
}

/// Same with an explicit subdivision ratio `eps = 1/n0`.
pub fn lambda_threshold_eps(
    delta: f64,
    s: f64,
    d: usize,
    cal: &Calibration,
    eps: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config("delta must lie in (0,1)"));
    }
    let q = s / d as f64;
    let r0 = 2.0 * (d as f64).sqrt() * (1.0 / delta + 2.0);
    let c_geom = geometric_overlap_bound(d, delta);
    // per-ball mass excess M(M-1) >= delta * M for M >= 1+delta, the sum
    // covers both error channels, hence the factor 4 (2 from the
    // Cauchy-Schwarz halving, 2 from serving both channels)
    let channel = 4.0 * c_geom * r0.powf(2.0 * s)
        / (delta * (1.0 - eps.powf(2.0 * s)) * eps.powf(2.0 * s));
    let branch_low_mass = delta.powf(q) * cal.lup1.value;
    let branch_cluster = (1.0 - delta.powf(q)) * cal.lup2_unit.value;
    Ok(channel * branch_low_mass.max(branch_cluster))
}

/// One line of the certificate ledger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub level: u32,
    pub kind: String,
    /// Coefficient multiplying this piece's `∫ rho^{1+2s/d}`.
    pub gain_coefficient: f64,
    /// `∫_piece rho^{1+2s/d}`.
    pub power_integral: f64,
    /// Mass entering the error budget.
    pub mass: f64,
    /// Error-budget contribution (nonnegative).
    pub error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyParams {
    pub s: f64,
    pub delta: f64,
    pub epsilon_inv: u32,
    pub lambda: f64,
    pub hardy: bool,
    pub max_level: u32,
}

/// The assembled certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub schema: u32,
    pub params: CertifyParams,
    pub d: usize,
    pub calibration: CalibrationSummary,
    pub ledger: Vec<LedgerEntry>,
    /// Total uncertainty error budget `E`.
    pub uncertainty_error: f64,
    /// Exclusion lower bound `X` on the unit-coupling interaction.
    pub exclusion_bound: f64,
    /// State-independent threshold from the calibrated constants.
    pub lambda_threshold: f64,
    /// Sharper per-input gate `E / X` (infinite when `X = 0` with `E > 0`).
    pub lambda_gate_state: f64,
    pub lambda: f64,
    pub valid: bool,
    /// `min{1/(C delta^{s/d}), gn (1-delta)(1-delta^{s/d})/(1+delta)^{2s/d}}`.
    pub factor: f64,
    /// Fraction of `∫ rho^{1+2s/d}` covered by terminal pieces (1 unless
    /// the decomposition hit the depth cap).
    pub coverage: f64,
    /// `factor * coverage`: the certified lower bound on the quotient.
    pub certified_lower_bound: f64,
    pub residual_cubes: usize,
    /// Origin-cube bookkeeping of the Hardy pipeline, when it applies:
    /// whether the carved sub-cube is disjoint from all light closures.
    pub hardy_origin_subcube_disjoint: Option<bool>,
    /// Directly measured quotient, when a full state was supplied.
    pub measured_quotient: Option<f64>,
    /// `certified <= measured + tol`, when measurable.
    pub sound: Option<bool>,
}

/// The slice of calibration data a report embeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub gn_constant: f64,
    pub hgn_constant: Option<f64>,
    pub lup1_constant: f64,
    pub lup2_unit_constant: f64,
    pub lup2_hardy_unit_constant: Option<f64>,
    pub seed: u64,
}

pub enum CertifyInput<'a> {
    State(&'a NBodyState),
    Density(&'a GridFunction),
}

fn masked_power_integral(rho: &GridFunction, cells: &[usize], p: f64) -> f64 {
    let w = rho.box_spec.cell_volume();
    cells
        .iter()
        .map(|&i| rho.values[i].re.max(0.0).powf(p))
        .sum::<f64>()
        * w
}

fn mask_cells(mask: &DomainMask) -> Vec<usize> {
    mask.mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i)
        .collect()
}

/// Run the full pipeline on a state or density.
pub fn certify(
    input: CertifyInput<'_>,
    params: &CertifyParams,
    cal: &Calibration,
) -> Result<CertificateReport> {
    let rho = match &input {
        CertifyInput::State(st) => st.density(),
        CertifyInput::Density(g) => (*g).clone(),
    };
    let d = rho.box_spec.d();
    let s = params.s;
    if (cal.s - s).abs() > 1e-12 || cal.d != d {
        return Err(Error::config("calibration does not match (s, d)"));
    }
    if params.hardy {
        if 2.0 * s >= d as f64 {
            return Err(Error::config("Hardy certificates require 2s < d"));
        }
        for a in 0..d {
            if (rho.box_spec.lo()[a] + rho.box_spec.hi()[a]).abs()
                > 1e-9 * rho.box_spec.extent(a)
            {
                return Err(Error::config(
                    "Hardy certificates require an origin-centered box",
                ));
            }
        }
        if cal.hgn_constant.is_none() || cal.lup2_hardy_unit.is_none() {
            return Err(Error::config("missing Hardy calibration"));
        }
    }
    let cov_params = CoveringParams {
        epsilon_inv: params.epsilon_inv,
        delta: params.delta,
        max_level: params.max_level,
        hardy_mode: params.hardy,
    };
    let dec = decompose(&rho, &cov_params)?;
    if params.hardy && !dec.hardy_origin_check()? {
        return Err(Error::numeric("origin property violated by the covering"));
    }
    let fams = build_ball_families(&dec, &rho)?;
    let exclusion_bound = exclusion_lower_bound(&fams, s)?;

    let delta = params.delta;
    let q = s / d as f64;
    let p = 1.0 + 2.0 * s / d as f64;
    let gn_for_factor = if params.hardy {
        cal.hgn_constant.unwrap()
    } else {
        cal.gn_constant
    };
    let factor = certificate_factor(delta, s, d, cal.lup1.value, gn_for_factor);
    let coeff_lup1 = 1.0 / (cal.lup1.value * delta.powf(q));
    let coeff_lup2 = gn_for_factor * (1.0 - delta) * (1.0 - delta.powf(q))
        / (1.0 + delta).powf(2.0 * q);
    let weight_low = delta.powf(q);
    let weight_cluster = 1.0 - delta.powf(q);
    let lup2_scaled = if params.hardy {
        cal.lup2_hardy_unit.as_ref().unwrap().value.max(cal.lup2_unit.value)
    } else {
        cal.lup2_unit.value
    };

    let mut ledger = Vec::new();
    let mut covered_power = 0.0;
    let mut error_total = 0.0;
    let mut hardy_origin_disjoint: Option<bool> = None;
    let h_cell = rho.box_spec.spacing();

    for lv in &dec.levels {
        let side = dec.side_at(lv.level);
        let side_pow = side.powf(2.0 * s);
        for (cube, mass) in &lv.low_mass {
            let cells = mask_cells(&dec.cube_mask(cube)?);
            let power = masked_power_integral(&rho, &cells, p);
            covered_power += power;
            // plain pipeline: LUP-I error weighted delta^{s/d};
            // Hardy pipeline adds the step-4 error in the other channel
            let mut error = weight_low * cal.lup1.value / side_pow * mass;
            if params.hardy {
                error += weight_cluster * cal.lup1.value / side_pow * mass;
                // origin-cube bookkeeping: the carved sub-cube Q0 must be
                // disjoint from every light-cluster closure
                let center = cube.center(&dec.root, dec.params.epsilon_inv);
                if center.iter().all(|c| c.abs() < 1e-9 * side) {
                    let q0_half = side / (8.0 * (d as f64).sqrt());
                    let q0 = DomainMask::from_predicate(rho.box_spec.clone(), |x| {
                        x.iter().all(|&v| v.abs() < q0_half)
                    });
                    let mut disjoint = true;
                    if let Ok(q0) = q0 {
                        for lv2 in &dec.levels {
                            for cl in &lv2.light_clusters {
                                let closure = dec.cluster_closure_mask(cl)?;
                                if !q0.is_disjoint(&closure) {
                                    disjoint = false;
                                }
                            }
                        }
                    }
                    hardy_origin_disjoint = Some(disjoint);
                }
            }
            error_total += error;
            ledger.push(LedgerEntry {
                level: lv.level,
                kind: if params.hardy {
                    "hardy-low-mass-cube".into()
                } else {
                    "low-mass-cube".into()
                },
                gain_coefficient: coeff_lup1,
                power_integral: power,
                mass: *mass,
                error,
            });
        }
        for cl in &lv.light_clusters {
            let support = mask_cells(&dec.cluster_support_mask(cl)?);
            let power = masked_power_integral(&rho, &support, p);
            covered_power += power;
            let mut error = weight_cluster * lup2_scaled / side_pow * cl.closure_mass;
            if params.hardy {
                // step-2 error of the Hardy pipeline also spends on cluster cubes
                error += weight_low * cal.lup1.value / side_pow * cl.support_mass;
            }
            error_total += error;
            ledger.push(LedgerEntry {
                level: lv.level,
                kind: if params.hardy {
                    "hardy-light-cluster".into()
                } else {
                    "light-cluster".into()
                },
                gain_coefficient: coeff_lup2,
                power_integral: power,
                mass: cl.closure_mass,
                error,
            });
        }
    }
    for sc in &fams.scales {
        if sc.regions.is_empty() {
            continue;
        }
        let mass: f64 = sc.regions.iter().map(|r| r.mass).sum();
        ledger.push(LedgerEntry {
            level: sc.level,
            kind: "exclusion-scale".into(),
            gain_coefficient: 0.0,
            power_integral: 0.0,
            mass,
            error: 0.0,
        });
    }
    let _ = h_cell;

    let total_power = {
        let w = rho.box_spec.cell_volume();
        rho.values
            .iter()
            .map(|v| v.re.max(0.0).powf(p))
            .sum::<f64>()
            * w
    };
    let coverage = if total_power > 0.0 {
        (covered_power / total_power).min(1.0)
    } else {
        1.0
    };

    let lambda_schematic = lambda_threshold_eps(
        delta,
        s,
        d,
        cal,
        1.0 / params.epsilon_inv as f64,
    )?;
    let lambda_gate_state = if error_total <= 0.0 {
        0.0
    } else if exclusion_bound > 0.0 {
        error_total / exclusion_bound
    } else {
        f64::INFINITY
    };
    let threshold = lambda_schematic.max(lambda_gate_state);
    let valid = params.lambda >= threshold && params.lambda >= lambda_gate_state;
    let certified = factor * coverage;

    let (measured, sound) = match &input {
        CertifyInput::State(st) => {
            let qp = QuotientParams {
                s,
                lambda: params.lambda,
                hardy: params.hardy,
            };
            let m = st.lt_quotient(&qp)?.value;
            let tol = 1e-6 * m.abs().max(certified.abs()).max(1.0);
            (Some(m), Some(certified <= m + tol))
        }
        CertifyInput::Density(_) => (None, None),
    };

    Ok(CertificateReport {
        schema: 1,
        params: params.clone(),
        d,
        calibration: CalibrationSummary {
            gn_constant: cal.gn_constant,
            hgn_constant: cal.hgn_constant,
            lup1_constant: cal.lup1.value,
            lup2_unit_constant: cal.lup2_unit.value,
            lup2_hardy_unit_constant: cal.lup2_hardy_unit.as_ref().map(|e| e.value),
            seed: cal.provenance.seed,
        },
        ledger,
        uncertainty_error: error_total,
        exclusion_bound,
        lambda_threshold: lambda_schematic,
        lambda_gate_state,
        lambda: params.lambda,
        valid,
        factor,
        coverage,
        certified_lower_bound: certified,
        residual_cubes: dec.residual.len(),
        hardy_origin_subcube_disjoint: hardy_origin_disjoint,
        measured_quotient: measured,
        sound,
    })
}

/// Recompute the certified bound from a report's own ledger; it must equal
/// `factor * coverage` bit-for-bit modulo the stated combination.
pub fn recompute_from_ledger(report: &CertificateReport, total_power: f64) -> f64 {
    let covered: f64 = report
        .ledger
        .iter()
        .filter(|e| e.gain_coefficient > 0.0)
        .map(|e| e.power_integral)
        .sum();
    let min_coeff = report
        .ledger
        .iter()
        .filter(|e| e.gain_coefficient > 0.0)
        .map(|e| e.gain_coefficient)
        .fold(f64::INFINITY, f64::min);
    let min_coeff = if min_coeff.is_finite() {
        min_coeff.min(report.factor)
    } else {
        report.factor
    };
    if total_power > 0.0 {
        min_coeff * (covered / total_power).min(1.0)
    } else {
        min_coeff
    }
}

/// Margin of the one-body interpolation inequality
/// `(T_s - C_{s,d} H_s)^{1-2s/d} (∬ rho rho / |x-y|^{2s})^{2s/d} >= C ∫|u|^{2(1+2s/d)}`
/// with a calibrated `C`. Returns `(holds, lhs/rhs ratio)`.
pub fn interp_inequality_check(
    u: &GridFunction,
    s: f64,
    calibrated: f64,
) -> Result<(bool, f64)> {
    let d = u.box_spec.d();
    if !(2.0 * s < d as f64) {
        return Err(Error::config("interpolation check requires 2s < d"));
    }
    let spec = SeminormSpec::new(s, d)?;
    let c_hardy = hardy_constant(s, d)?.value;
    let kinetic = crate::grid::seminorm_global(u, &spec).value;
    let hardy = crate::grid::hardy_energy(u, s)?;
    let numerator = (kinetic - c_hardy * hardy).max(0.0);
    let rho: Vec<f64> = u.values.iter().map(|v| v.norm_sqr()).collect();
    let coulomb = pair_density_integral(&u.box_spec, &rho, &rho, s)?;
    let q = 2.0 * s / d as f64;
    let lhs = numerator.powf(1.0 - q) * coulomb.powf(q);
    let rhs = calibrated * u.lp_power_integral(2.0 * (1.0 + q));
    if rhs <= 0.0 {
        return Err(Error::numeric("degenerate field in interpolation check"));
    }
    Ok((lhs >= rhs * (1.0 - 1e-9), lhs / rhs))
}

/// Calibrate the interpolation constant as the margined infimum of
/// `lhs / ∫|u|^{2(1+2s/d)}` over the trial family.
pub fn calibrate_interp_constant(
    s: f64,
    d: usize,
    box_spec: &BoxSpec,
    params: &OptimizerParams,
) -> Result<EmpiricalConstant> {
    use rand::SeedableRng;
    if !(2.0 * s < d as f64) {
        return Err(Error::config("interpolation check requires 2s < d"));
    }
    let spec = SeminormSpec::new(s, d)?;
    let c_hardy = hardy_constant(s, d)?.value;
    let mid: Vec<f64> = (0..d)
        .map(|a| 0.5 * (box_spec.lo()[a] + box_spec.hi()[a]))
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
    let trials = params.restarts.max(48);
    let q = 2.0 * s / d as f64;
    let mut inf = f64::INFINITY;
    for _ in 0..trials {
        let u = crate::gn::trial_field(box_spec, &mid, box_spec.extent(0) * 0.5, &mut rng);
        let denom = u.lp_power_integral(2.0 * (1.0 + q));
        if denom <= 1e-12 * u.l2_norm_sq().max(1e-300) {
            continue;
        }
        let kinetic = crate::grid::seminorm_global(&u, &spec).value;
        let hardy = crate::grid::hardy_energy(&u, s)?;
        let numerator = (kinetic - c_hardy * hardy).max(0.0);
        let rho: Vec<f64> = u.values.iter().map(|v| v.norm_sqr()).collect();
        let coulomb = pair_density_integral(&u.box_spec, &rho, &rho, s)?;
        let lhs = numerator.powf(1.0 - q) * coulomb.powf(q);
        inf = inf.min(lhs / denom);
    }
    if !inf.is_finite() {
        return Err(Error::numeric("no usable trials in interpolation calibration"));
    }
    Ok(EmpiricalConstant {
        value: inf * 0.95,
        raw_supremum: inf,
        margin: 0.05,
        trials,
        holdout_trials: 0,
        holdout_violations: 0,
    })
}
