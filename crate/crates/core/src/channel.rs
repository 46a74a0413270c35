//! First-hitting-time density of the mobile 1-D flow-induced channel and the
//! slot-binned arrival probabilities derived from it.
//!
//! A molecule emitted by the relay `a` slots after the time origin sees a
//! relay/destination separation that has already diffused for `a * tau`
//! seconds. The density of its absorption time `t` (measured from emission) is
//!
//! ```text
//! f(t; a) = sqrt(a tau Dtot D) / (pi sqrt(t) w) * exp(-d0^2 / (4 a tau Dtot))
//!         + d0 / sqrt(4 pi D u^3) * exp(-d0^2 / (4 D u)) * erf(d0/2 * sqrt(t D / (a tau Dtot w)))
//! u = t + a tau Dtot / D,  w = a tau Dtot + t D
//! ```
//!
//! with `Dtot = D_m + D_dn` and `D = D_dn + D_p`. The drift velocity does not
//! appear: the flow advects every entity alike.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::quadrature;
use crate::special::{erf, exp_guarded};

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Physical constants of the relay-to-destination link (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ChannelParams {
    /// Initial relay-destination distance [m].
    pub d0: f64,
    /// Slot duration [s].
    pub tau: f64,
    /// Drift velocity [m/s].
    pub v: f64,
    /// Molecule diffusion coefficient [m^2/s].
    pub d_p: f64,
    /// Relay diffusion coefficient [m^2/s].
    pub d_m: f64,
    /// Destination diffusion coefficient [m^2/s].
    pub d_dn: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            d0: 1e-6,
            tau: 0.01,
            v: 1e-3,
            d_p: 5e-10,
            d_m: 1e-10,
            d_dn: 5e-13,
        }
    }
}

impl ChannelParams {
    /// Relay plus destination diffusion, which spreads the separation.
    pub fn d_tot(&self) -> f64 {
        self.d_m + self.d_dn
    }

    /// Molecule plus destination diffusion, the relative molecule motion.
    pub fn d_eff(&self) -> f64 {
        self.d_dn + self.d_p
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("d0", self.d0), ("tau", self.tau), ("d_p", self.d_p)];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(field, format!("must be finite and > 0, got {value}")));
            }
        }
        let nonneg = [("d_m", self.d_m), ("d_dn", self.d_dn), ("v", self.v)];
        for (field, value) in nonneg {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(field, format!("must be finite and >= 0, got {value}")));
            }
        }
        Ok(())
    }
}

/// Classical first-hitting-time density for a static receiver at distance
/// `d0` with diffusion `d`: `d0 / sqrt(4 pi d t^3) * exp(-d0^2 / (4 d t))`.
pub fn static_first_hit_pdf(t: f64, d0: f64, d: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let log = d0.ln() - 0.5 * (4.0 * std::f64::consts::PI * d).ln() - 1.5 * t.ln()
        - d0 * d0 / (4.0 * d * t);
    exp_guarded(log)
}

/// First-hitting-time density for one emission age, with the parameter
/// combinations that do not depend on `t` precomputed.
#[derive(Debug, Clone, Copy)]
pub struct FirstHitDensity {
    d0: f64,
    d: f64,
    /// `a * tau * Dtot`; zero selects the static branch.
    spread: f64,
    log_first_prefactor: f64,
}

impl FirstHitDensity {
    pub fn new(params: &ChannelParams, age: usize) -> Result<Self> {
        params.validate()?;
        let d = params.d_eff();
        let spread = age as f64 * params.tau * params.d_tot();
        let log_first_prefactor = if spread > 0.0 {
            0.5 * (spread * d).ln() - std::f64::consts::PI.ln() - params.d0 * params.d0 / (4.0 * spread)
        } else {
            f64::NEG_INFINITY
        };
        Ok(Self {
            d0: params.d0,
            d,
            spread,
            log_first_prefactor,
        })
    }

    pub fn is_static(&self) -> bool {
        self.spread == 0.0
    }

    /// Density at elapsed time `t` since emission; zero for `t <= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        if self.is_static() {
            return static_first_hit_pdf(t, self.d0, self.d);
        }
        let (d0, d, spread) = (self.d0, self.d, self.spread);
        let w = spread + t * d;
        let u = w / d;

        let first = exp_guarded(self.log_first_prefactor - 0.5 * t.ln() - w.ln());

        let log_second = d0.ln() - 0.5 * (4.0 * std::f64::consts::PI * d).ln() - 1.5 * u.ln()
            - d0 * d0 / (4.0 * w);
        let erf_arg = 0.5 * d0 * (t * d / (spread * w)).sqrt();
        let second = exp_guarded(log_second) * erf(erf_arg);

        first + second
    }
}

/// Density of the absorption time `t` [s] of a molecule emitted with mobility
/// age `age` slots. Age zero uses the static-receiver density.
pub fn first_hit_pdf(t: f64, age: usize, params: &ChannelParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("must be > 0, got {t}")));
    }
    Ok(FirstHitDensity::new(params, age)?.eval(t))
}

/// Probability that a molecule emitted with mobility age `age` is absorbed
/// during the `offset`-th slot after its emission.
pub fn arrival_prob(offset: usize, age: usize, params: &ChannelParams, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let density = FirstHitDensity::new(params, age)?;
    let tau = params.tau;
    let result = if offset == 0 {
        // t = s^2 removes the t^(-1/2) endpoint singularity.
        quadrature::integrate(|s| 2.0 * s * density.eval(s * s), 0.0, tau.sqrt(), tol)?
    } else {
        let lo = offset as f64 * tau;
        quadrature::integrate(|t| density.eval(t), lo, lo + tau, tol)?
    };
    Ok(result.value.clamp(0.0, 1.0))
}

/// Slot-binned arrival probabilities `q(offset, age)` for ages `1..=horizon`
/// and offsets `0..horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalTable {
    horizon: usize,
    tolerance: f64,
    // row-major: (age - 1) * horizon + offset
    q: Vec<f64>,
}

impl ArrivalTable {
    /// Builds a table from explicit rows; `rows[a - 1][m]` is `q(m, a)`.
    pub fn from_rows(rows: Vec<Vec<f64>>, tolerance: f64) -> Result<Self> {
        let horizon = rows.len();
        if horizon == 0 {
            return Err(Error::invalid("horizon", "must be >= 1"));
        }
        let mut q = Vec::with_capacity(horizon * horizon);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != horizon {
                return Err(Error::invalid(
                    "rows",
                    format!("row for age {} has {} offsets, expected {horizon}", i + 1, row.len()),
                ));
            }
            q.extend(row);
        }
        let table = Self {
            horizon,
            tolerance,
            q,
        };
        table.check_axioms()?;
        Ok(table)
    }

    fn check_axioms(&self) -> Result<()> {
        let slack = 1e-9_f64.max(self.horizon as f64 * self.tolerance);
        for age in 1..=self.horizon {
            let row = self.row(age);
            if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::invalid("q", format!("entry {bad} for age {age} outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if sum > 1.0 + slack {
                return Err(Error::invalid("q", format!("row for age {age} sums to {sum} > 1")));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn get(&self, offset: usize, age: usize) -> Option<f64> {
        (age >= 1 && age <= self.horizon && offset < self.horizon)
            .then(|| self.q[(age - 1) * self.horizon + offset])
    }

    /// `q(offset, age)`.
    ///
    /// Panics when the cell lies outside the table.
    pub fn q(&self, offset: usize, age: usize) -> f64 {
        self.get(offset, age).unwrap_or_else(|| {
            panic!("q(offset={offset}, age={age}) outside table of horizon {}", self.horizon)
        })
    }

    /// Offsets `0..horizon` for one age.
    pub fn row(&self, age: usize) -> &[f64] {
        let start = (age - 1) * self.horizon;
        &self.q[start..start + self.horizon]
    }

    /// `(age, offset, q)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.q
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i / self.horizon + 1, i % self.horizon, p))
    }
}

pub fn build_arrival_table(params: &ChannelParams, horizon: usize, tol: f64) -> Result<ArrivalTable> {
    build_arrival_table_with(Execution::default(), params, horizon, tol)
}

pub fn build_arrival_table_with(
    exec: Execution,
    params: &ChannelParams,
    horizon: usize,
    tol: f64,
) -> Result<ArrivalTable> {
    if horizon == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    params.validate()?;
    let cells = par::map_indexed(exec, horizon * horizon, |i| {
        let (age, offset) = (i / horizon + 1, i % horizon);
        arrival_prob(offset, age, params, tol).map_err(|e| Error::ArrivalCell {
            age,
            offset,
            source: Box::new(e),
        })
    });
    let q = cells.into_iter().collect::<Result<Vec<_>>>()?;
    let table = ArrivalTable {
        horizon,
        tolerance: tol,
        q,
    };
    table.check_axioms()?;
    Ok(table)
}
