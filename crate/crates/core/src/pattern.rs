//! Element radiation patterns.
//!
//! The directional element is a cosine-family pattern pointing radially
//! outward from its ring: power `Q sin^κ ϑ cos^κ φ` on the front half-space,
//! zero behind, with `Q = 2(κ+1)` so that the power integrates to `4π`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FclaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Pattern {
    Omni,
    Directional { kappa: f64 },
}

impl Pattern {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Pattern::Omni => Ok(()),
            Pattern::Directional { kappa } if kappa >= 1.0 && kappa.is_finite() => Ok(()),
            Pattern::Directional { kappa } => Err(FclaError::InvalidConfig(format!(
                "pattern sharpness must be finite and >= 1, got {kappa}"
            ))),
        }
    }

    /// Normalization constant `Q = 2(κ+1)`; 1 for the omni pattern.
    pub fn normalization(&self) -> f64 {
        match *self {
            Pattern::Omni => 1.0,
            Pattern::Directional { kappa } => 2.0 * (kappa + 1.0),
        }
    }

    /// Peak power gain over all directions.
    pub fn peak_gain(&self) -> f64 {
        self.normalization()
    }

    /// Power gain toward elevation `theta` at azimuth `phi_rel` measured from
    /// the element boresight.
    pub fn power_gain(&self, theta: f64, phi_rel: f64) -> f64 {
        match *self {
            Pattern::Omni => 1.0,
            Pattern::Directional { kappa } => {
                let phi = wrap_angle(phi_rel);
                if phi.abs() > PI / 2.0 {
                    return 0.0;
                }
                // clamp tiny negative values from cos(±π/2) and sin near 0/π
                let s = theta.sin().max(0.0);
                let c = phi.cos().max(0.0);
                self.normalization() * s.powf(kappa) * c.powf(kappa)
            }
        }
    }

    /// Field amplitude of an element oriented at `psi` toward `(theta, phi)`.
    pub fn amplitude(&self, theta: f64, phi: f64, psi: f64) -> f64 {
        match self {
            Pattern::Omni => 1.0,
            Pattern::Directional { .. } => self.power_gain(theta, phi - psi).sqrt(),
        }
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

/// `(1/4π)∬ G(ϑ,φ) sin ϑ dϑ dφ` by composite Simpson's rule over the full
/// sphere. Equals 1 for a correctly normalized pattern.
pub fn sphere_average(pattern: &Pattern, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let weight = |i: usize| -> f64 {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let h_theta = PI / n as f64;
    let h_phi = 2.0 * PI / n as f64;
    let mut total = 0.0;
    for i in 0..=n {
        let theta = i as f64 * h_theta;
        let mut inner = 0.0;
        for j in 0..=n {
            let phi = -PI + j as f64 * h_phi;
            inner += weight(j) * pattern.power_gain(theta, phi);
        }
        total += weight(i) * theta.sin() * inner * h_phi / 3.0;
    }
    total * h_theta / 3.0 / (4.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    const K1: Pattern = Pattern::Directional { kappa: 1.0 };

    #[test]
    fn power_gain_examples() {
        assert!((K1.power_gain(PI / 2.0, 0.0) - 4.0).abs() < 1e-15);
        assert_eq!(K1.power_gain(PI / 2.0, PI), 0.0);
        assert_eq!(Pattern::Omni.power_gain(0.3, 2.9), 1.0);
    }

    #[test]
    fn amplitude_examples() {
        assert!((K1.amplitude(PI / 2.0, 0.7, 0.7) - 2.0).abs() < 1e-15);
        let a = K1.amplitude(PI / 2.0, PI / 3.0 + 0.2, 0.2);
        assert!((a - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert_eq!(Pattern::Omni.amplitude(1.0, 2.0, 3.0), 1.0);
    }

    #[test]
    fn wrapping_handles_full_turns() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(2.0 * PI + 0.1) - 0.1).abs() < 1e-12);
        // boresight facing ψ = 7π/4 still sees a user at φ = 0.1
        assert!(K1.amplitude(PI / 2.0, 0.1, 7.0 * PI / 4.0) > 0.0);
    }

    #[test]
    fn normalization_by_quadrature() {
        for kappa in [1.0, 2.0, 3.0, 1.5] {
            let avg = sphere_average(&Pattern::Directional { kappa }, 800);
            assert!((avg - 1.0).abs() < 1e-3, "kappa {kappa}: {avg}");
        }
        assert!((sphere_average(&Pattern::Omni, 200) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sharper_patterns_have_higher_peaks() {
        let mut last = 0.0;
        for kappa in [1.0, 1.5, 2.0, 3.0, 5.0] {
            let peak = Pattern::Directional { kappa }.power_gain(PI / 2.0, 0.0);
            assert!((peak - 2.0 * (kappa + 1.0)).abs() < 1e-12);
            assert!(peak > last);
            last = peak;
        }
    }

    #[test]
    fn rejects_blunt_kappa() {
        assert!(Pattern::Directional { kappa: 0.5 }.validate().is_err());
        assert!(Pattern::Directional { kappa: f64::NAN }.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn amplitude_even_and_monotone(
                kappa in 1.0f64..6.0,
                theta in 0.0f64..PI,
                psi in -PI..PI,
                d1 in 0.0f64..(PI / 2.0),
                d2 in 0.0f64..(PI / 2.0),
            ) {
                let p = Pattern::Directional { kappa };
                let plus = p.amplitude(theta, psi + d1, psi);
                let minus = p.amplitude(theta, psi - d1, psi);
                prop_assert!((plus - minus).abs() < 1e-12);
                let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
                prop_assert!(p.amplitude(theta, psi + lo, psi) >= p.amplitude(theta, psi + hi, psi) - 1e-12);
            }
        }
    }
}
