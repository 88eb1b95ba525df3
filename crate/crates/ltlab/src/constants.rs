//! Closed-form analytic constants.
//!
//! Everything here has an explicit formula: the semiclassical constant
//! `K_cl(d)`, the sharp Hardy constant `C_{s,d}`, the seminorm
//! normalization `c_{d,σ}`, and the d=1, s=1 Gagliardo–Nirenberg value
//! `π²/4` used as an oracle for the variational solver.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// A named constant with a record of which formula produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantValue {
    pub name: String,
    pub value: f64,
    /// Formula tag, e.g. `"d/(d+2) * 4 pi^2 / |B(0,1)|^{2/d}"`.
    pub provenance: String,
}

impl ConstantValue {
    fn new(name: impl Into<String>, value: f64, provenance: impl Into<String>) -> Self {
        ConstantValue {
            name: name.into(),
            value,
            provenance: provenance.into(),
        }
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let d = d as f64;
    std::f64::consts::PI.powf(d / 2.0) / gamma(d / 2.0 + 1.0)
}

/// Semiclassical kinetic constant `d/(d+2) * 4π² / |B(0,1)|^{2/d}`.
pub fn semiclassical_constant(d: usize) -> ConstantValue {
    assert!(d >= 1, "dimension must be >= 1");
    let df = d as f64;
    let ball = unit_ball_volume(d);
    let value = df / (df + 2.0) * 4.0 * std::f64::consts::PI.powi(2) / ball.powf(2.0 / df);
    ConstantValue::new(
        format!("K_cl({d})"),
        value,
        "d/(d+2) * 4 pi^2 / |B(0,1)|^{2/d}",
    )
}

/// Sharp Hardy constant `2^{2s} (Γ((d+2s)/4) / Γ((d-2s)/4))²`, valid for `0 < 2s < d`.
pub fn hardy_constant(s: f64, d: usize) -> Result<ConstantValue> {
    let df = d as f64;
    if !(s > 0.0 && 2.0 * s < df) {
        return Err(Error::config(format!(
            "Hardy regime requires 0 < 2s < d (got s={s}, d={d})"
        )));
    }
    let ratio = gamma((df + 2.0 * s) / 4.0) / gamma((df - 2.0 * s) / 4.0);
    let value = 2f64.powf(2.0 * s) * ratio * ratio;
    Ok(ConstantValue::new(
        format!("C_hardy(s={s},d={d})"),
        value,
        "2^{2s} (Gamma((d+2s)/4)/Gamma((d-2s)/4))^2",
    ))
}

/// Normalization `c_{d,σ} = 2^{2σ-1} π^{-d/2} Γ(d/2+σ) / |Γ(-σ)|` of the
/// fractional seminorm double integral, for `0 < σ < 1`.
///
/// `|Γ(-σ)| = Γ(2-σ) / (σ(1-σ))` keeps the evaluation on positive arguments.
pub fn seminorm_normalization(sigma: f64, d: usize) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::config(format!(
            "c_(d,sigma) requires 0 < sigma < 1 (got {sigma})"
        )));
    }
    let df = d as f64;
    let abs_gamma_neg = gamma(2.0 - sigma) / (sigma * (1.0 - sigma));
    Ok(2f64.powf(2.0 * sigma - 1.0) * std::f64::consts::PI.powf(-df / 2.0)
        * gamma(df / 2.0 + sigma)
        / abs_gamma_neg)
}

/// The sharp Gagliardo–Nirenberg constant for s=1, d=1: `π²/4`.
///
/// This is the quotient of the quintic soliton `Q(x) = 3^{1/4} sech^{1/2}(2x)`,
/// for which `∫Q² = √3·π/2`, `∫Q'² = √3·π/4` and `∫Q⁶ = 3√3·π/4`, so
/// `(∫Q'²)(∫Q²)² / ∫Q⁶ = π²/4`.
pub fn gn_reference_1d() -> ConstantValue {
    ConstantValue::new(
        "C_GN(s=1,d=1)",
        std::f64::consts::PI.powi(2) / 4.0,
        "Weinstein quotient of the quintic soliton 3^{1/4} sech^{1/2}(2x)",
    )
}

/// All constants exposed by the `constants` CLI subcommand.
pub fn catalogue() -> Vec<ConstantValue> {
    let mut out = Vec::new();
    for d in 1..=3 {
        out.push(semiclassical_constant(d));
    }
    for &(s, d) in &[(1.0, 3usize), (0.5, 3), (1.0, 4), (0.5, 2), (1.25, 3)] {
        if let Ok(c) = hardy_constant(s, d) {
            out.push(c);
        }
    }
    for &(sigma, d) in &[(0.5f64, 1usize), (0.5, 2), (0.5, 3), (0.25, 1), (0.75, 1)] {
        if let Ok(v) = seminorm_normalization(sigma, d) {
            out.push(ConstantValue::new(
                format!("c_norm(sigma={sigma},d={d})"),
                v,
                "2^{2 sigma - 1} pi^{-d/2} Gamma(d/2+sigma)/|Gamma(-sigma)|",
            ));
        }
    }
    out.push(gn_reference_1d());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn semiclassical_known_dimensions() {
        // |B(0,1)| = 2 in d=1, pi in d=2, 4pi/3 in d=3.
        assert_relative_eq!(
            semiclassical_constant(1).value,
            PI * PI / 3.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(semiclassical_constant(2).value, 2.0 * PI, max_relative = 1e-12);
        let b3: f64 = 4.0 * PI / 3.0;
        let expect3 = 0.6 * 4.0 * PI * PI / b3.powf(2.0 / 3.0);
        assert_relative_eq!(semiclassical_constant(3).value, expect3, max_relative = 1e-12);
        assert_relative_eq!(semiclassical_constant(3).value, 9.115597, max_relative = 1e-6);
    }

    #[test]
    fn semiclassical_increasing_in_low_dimensions() {
        let k1 = semiclassical_constant(1).value;
        let k2 = semiclassical_constant(2).value;
        let k3 = semiclassical_constant(3).value;
        assert!(k1 < k2 && k2 < k3);
    }

    #[test]
    fn hardy_constant_gamma_reductions() {
        // Gamma(5/4) = Gamma(1/4)/4 collapses the s=1, d=3 formula to 1/4.
        assert_relative_eq!(hardy_constant(1.0, 3).unwrap().value, 0.25, max_relative = 1e-10);
        // Gamma(1) = 1, Gamma(1/2) = sqrt(pi) gives 2/pi for s=1/2, d=3.
        assert_relative_eq!(
            hardy_constant(0.5, 3).unwrap().value,
            2.0 / PI,
            max_relative = 1e-10
        );
        // Classical cross-check (d-2)^2/4 at s=1.
        for d in [3usize, 4, 5] {
            let classical = ((d as f64 - 2.0) / 2.0).powi(2);
            assert_relative_eq!(
                hardy_constant(1.0, d).unwrap().value,
                classical,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn hardy_constant_rejects_bad_regime() {
        assert!(hardy_constant(1.0, 2).is_err());
        assert!(hardy_constant(1.5, 3).is_err());
        assert!(hardy_constant(-1.0, 3).is_err());
    }

    #[test]
    fn seminorm_normalization_half_order_1d() {
        // c_{1,1/2} = 1/(2 pi): Gamma(1)=1 and |Gamma(-1/2)| = 2 sqrt(pi).
        assert_relative_eq!(
            seminorm_normalization(0.5, 1).unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-12
        );
    }

    #[test]
    fn gn_reference_matches_soliton_algebra() {
        // Quadrature oracle for the soliton integrals, independent of the
        // closed forms quoted in the doc comment.
        let n = 400_000;
        let l = 30.0;
        let h = l / n as f64;
        let (mut m0, mut kin, mut m6) = (0.0, 0.0, 0.0);
        let q = |x: f64| 3f64.powf(0.25) / (2.0 * x).cosh().sqrt();
        let qp = |x: f64| -3f64.powf(0.25) * (2.0 * x).tanh() / (2.0 * x).cosh().sqrt();
        for i in 0..n {
            let x = -l / 2.0 + (i as f64 + 0.5) * h;
            m0 += q(x).powi(2) * h;
            kin += qp(x).powi(2) * h;
            m6 += q(x).powi(6) * h;
        }
        assert_relative_eq!(m0, PI * 3f64.sqrt() / 2.0, max_relative = 1e-8);
        assert_relative_eq!(kin, PI * 3f64.sqrt() / 4.0, max_relative = 1e-8);
        assert_relative_eq!(m6, 3.0 * 3f64.sqrt() * PI / 4.0, max_relative = 1e-8);
        let quotient = kin * m0 * m0 / m6;
        assert_relative_eq!(quotient, gn_reference_1d().value, max_relative = 1e-8);
    }

    #[test]
    fn catalogue_values_finite_positive() {
        for c in catalogue() {
            assert!(c.value.is_finite() && c.value > 0.0, "{} = {}", c.name, c.value);
        }
    }
}
