//! Likelihood-ratio-optimal threshold at the destination.
//!
//! The destination does not see the source symbol, only a count whose law is
//! a two-component Gaussian mixture weighted by the relay's detection
//! quality. Comparing the mixture likelihood ratio against the prior ratio
//! `(1 - beta) / beta` reduces to `(count + alpha)^2 >= gamma'`, and keeping
//! the positive root gives the scalar rule `count > gamma`.

use crate::error::{Error, Result};
use crate::stats::{RelayQuality, SlotMoments};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSetting {
    /// Log term combining the variance ratio with relay quality and prior.
    pub zeta: f64,
    /// Shift completing the square [molecules].
    pub alpha: f64,
    /// Squared radius [molecules^2].
    pub gamma_prime: f64,
    /// Decision threshold `sqrt(gamma') - alpha` [molecules].
    pub gamma: f64,
}

impl DetectorSetting {
    /// A fixed threshold with no underlying LRT derivation.
    pub fn fixed(gamma: f64) -> Self {
        Self {
            zeta: f64::NAN,
            alpha: f64::NAN,
            gamma_prime: f64::NAN,
            gamma,
        }
    }

    /// The root `-sqrt(gamma') - alpha` dropped by the scalar rule.
    pub fn discarded_root(&self) -> f64 {
        -self.gamma_prime.sqrt() - self.alpha
    }

    /// Whether the scalar rule is the exact LRT over all nonnegative counts,
    /// i.e. the discarded root lies at or below zero.
    pub fn is_exact_for_nonnegative_counts(&self) -> bool {
        self.discarded_root() <= 0.0
    }
}

/// LRT-optimal threshold for one slot.
pub fn optimal_threshold(
    moments: &SlotMoments,
    quality: RelayQuality,
    beta: f64,
) -> Result<DetectorSetting> {
    moments.validate()?;
    quality.validate()?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta", format!("must lie in (0, 1), got {beta}")));
    }
    let SlotMoments {
        mu0,
        sigma2_0: s0,
        mu1,
        sigma2_1: s1,
    } = *moments;
    let gap = s1 - s0;
    if !(gap > 1e-12 * s1) {
        return Err(Error::EqualVariances { gap });
    }

    let (pd, pf) = (quality.pd, quality.pf);
    let favour_one = beta * pd - (1.0 - beta) * pf;
    if !(favour_one > 0.0) {
        return Err(Error::DegenerateRegime {
            violated: "beta*P_D^r - (1-beta)*P_F^r",
            value: favour_one,
        });
    }
    let favour_zero = (1.0 - beta) * (1.0 - pf) - beta * (1.0 - pd);
    if !(favour_zero > 0.0) {
        return Err(Error::DegenerateRegime {
            violated: "(1-beta)*(1-P_F^r) - beta*(1-P_D^r)",
            value: favour_zero,
        });
    }

    let zeta = 0.5 * (s1.ln() - s0.ln()) + favour_zero.ln() - favour_one.ln();
    let alpha = (mu1 * s0 - mu0 * s1) / gap;
    let gamma_prime =
        zeta * 2.0 * s1 * s0 / gap + alpha * alpha + (mu1 * mu1 * s0 - mu0 * mu0 * s1) / gap;
    if !(gamma_prime >= 0.0) {
        return Err(Error::ThresholdNegative {
            quantity: "gamma_prime",
            value: gamma_prime,
        });
    }
    Ok(DetectorSetting {
        zeta,
        alpha,
        gamma_prime,
        gamma: gamma_prime.sqrt() - alpha,
    })
}

/// Decides symbol 1 iff `count > gamma`; ties go to 0.
pub fn decide(count: f64, setting: &DetectorSetting) -> u8 {
    u8::from(count > setting.gamma)
}

fn ln_gaussian(x: f64, mu: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mu).powi(2) / (2.0 * var)
}

fn ln_mix(ln_a: f64, wa: f64, ln_b: f64, wb: f64) -> f64 {
    let terms = [(ln_a, wa), (ln_b, wb)];
    let peak = terms
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    peak + terms.iter().map(|(l, w)| w * (l - peak).exp()).sum::<f64>().ln()
}

/// Log of the mixture likelihood ratio of a received count: H1 mixes the
/// burst-present and burst-absent Gaussians with weights `P_D^r`,
/// `1 - P_D^r`; H0 mixes them with `P_F^r`, `1 - P_F^r`.
pub fn ln_likelihood_ratio(count: f64, moments: &SlotMoments, quality: RelayQuality) -> f64 {
    let ln_p1 = ln_gaussian(count, moments.mu1, moments.sigma2_1);
    let ln_p0 = ln_gaussian(count, moments.mu0, moments.sigma2_0);
    ln_mix(ln_p1, quality.pd, ln_p0, 1.0 - quality.pd)
        - ln_mix(ln_p1, quality.pf, ln_p0, 1.0 - quality.pf)
}

pub fn likelihood_ratio(count: f64, moments: &SlotMoments, quality: RelayQuality) -> f64 {
    ln_likelihood_ratio(count, moments, quality).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn moments() -> SlotMoments {
        SlotMoments {
            mu0: 10.0,
            sigma2_0: 20.0,
            mu1: 30.27,
            sigma2_1: 46.0,
        }
    }

    #[test]
    fn perfect_relay_zeta_is_log_sigma_ratio() {
        let m = moments();
        let s = optimal_threshold(&m, RelayQuality::new(1.0, 0.0), 0.5).unwrap();
        assert_relative_eq!(s.zeta, (m.sigma1() / m.sigma0()).ln(), max_relative = 1e-14);
        assert_relative_eq!(s.gamma, s.gamma_prime.sqrt() - s.alpha, max_relative = 1e-15);
    }

    #[test]
    fn gamma_is_a_fixed_point_of_the_likelihood_ratio() {
        let m = moments();
        for (pd, pf, beta) in [(0.99, 0.01, 0.5), (0.85, 0.1, 0.4), (0.9, 0.05, 0.6)] {
            let q = RelayQuality::new(pd, pf);
            let s = optimal_threshold(&m, q, beta).unwrap();
            let target = (1.0 - beta) / beta;
            assert_relative_eq!(likelihood_ratio(s.gamma, &m, q), target, max_relative = 1e-9);
        }
    }

    #[test]
    fn equal_variances_rejected() {
        let m = SlotMoments {
            sigma2_1: 20.0,
            mu1: 10.0,
            ..moments()
        };
        assert!(matches!(
            optimal_threshold(&m, RelayQuality::new(0.9, 0.1), 0.5),
            Err(Error::EqualVariances { .. })
        ));
    }

    #[test]
    fn degenerate_regime_names_inequality() {
        // beta*pd - (1-beta)*pf = 0.05*0.5 - 0.95*0.1 < 0
        let err = optimal_threshold(&moments(), RelayQuality::new(0.5, 0.1), 0.05).unwrap_err();
        match err {
            Error::DegenerateRegime { violated, value } => {
                assert!(violated.starts_with("beta*P_D^r"));
                assert!(value < 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = optimal_threshold(&moments(), RelayQuality::new(0.5, 0.1), 0.95).unwrap_err();
        assert!(matches!(err, Error::DegenerateRegime { violated, .. } if violated.starts_with("(1-beta)")));
    }

    #[test]
    fn negative_radius_is_reported() {
        // Prior so skewed towards 1 that every count favours H1.
        let m = SlotMoments {
            mu0: 10.0,
            sigma2_0: 20.0,
            mu1: 10.5,
            sigma2_1: 200.0,
        };
        let err = optimal_threshold(&m, RelayQuality::new(1.0, 0.0), 0.999).unwrap_err();
        assert!(matches!(err, Error::ThresholdNegative { quantity: "gamma_prime", .. }), "{err:?}");
    }

    #[test]
    fn decide_ties_to_zero() {
        let s = DetectorSetting::fixed(18.5);
        assert_eq!(decide(19.5, &s), 1);
        assert_eq!(decide(17.5, &s), 0);
        assert_eq!(decide(18.5, &s), 0);
        assert_eq!(decide(f64::NEG_INFINITY, &s), 0);
    }

    #[test]
    fn negative_alpha_is_accepted() {
        // Low MSI variance: sigma2_0 = 1 + mu0.
        let m = SlotMoments {
            mu0: 10.0,
            sigma2_0: 11.0,
            mu1: 30.27,
            sigma2_1: 37.85,
        };
        let s = optimal_threshold(&m, RelayQuality::new(0.99, 0.01), 0.5).unwrap();
        assert!(s.alpha < 0.0, "alpha = {}", s.alpha);
        assert!(s.gamma > 0.0);
        assert_eq!(s.is_exact_for_nonnegative_counts(), s.discarded_root() <= 0.0);
    }
}
