//! Learning-rate schedules `η_t`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `θ·t^{−α}`
    Power,
    /// `θ·(ln(t+1))^{ν/2}·t^{−α}`
    LogPower,
    /// `θ·(ln(t+1))^{ν/2}·(t+1)^{−α}`
    ShiftedLogPower,
    /// `θ`
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub kind: ScheduleKind,
    #[serde(default = "one")]
    pub theta: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub nu_log: f64,
}

fn one() -> f64 {
    1.0
}

impl Schedule {
    pub fn power(theta: f64, alpha: f64) -> Result<Self> {
        Self {
            kind: ScheduleKind::Power,
            theta,
            alpha,
            nu_log: 0.0,
        }
        .validated()
    }

    pub fn log_power(theta: f64, alpha: f64, nu_log: f64) -> Result<Self> {
        Self {
            kind: ScheduleKind::LogPower,
            theta,
            alpha,
            nu_log,
        }
        .validated()
    }

    pub fn shifted_log_power(theta: f64, alpha: f64, nu_log: f64) -> Result<Self> {
        Self {
            kind: ScheduleKind::ShiftedLogPower,
            theta,
            alpha,
            nu_log,
        }
        .validated()
    }

    pub fn constant(theta: f64) -> Result<Self> {
        Self {
            kind: ScheduleKind::Constant,
            theta,
            alpha: 0.0,
            nu_log: 0.0,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(param("theta", format!("{} must be positive", self.theta)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(param("alpha", format!("{} is outside [0, 1]", self.alpha)));
        }
        if !(self.nu_log >= 0.0 && self.nu_log.is_finite()) {
            return Err(param("nu_log", format!("{} must be ≥ 0", self.nu_log)));
        }
        Ok(self)
    }

    /// `η_t` for `t ≥ 1`.
    pub fn learning_rate(&self, t: usize) -> f64 {
        let t = t.max(1) as f64;
        let log_factor = |nu: f64| {
            if nu == 0.0 {
                1.0
            } else {
                (t + 1.0).ln().powf(0.5 * nu)
            }
        };
        match self.kind {
            ScheduleKind::Power => self.theta * t.powf(-self.alpha),
            ScheduleKind::LogPower => self.theta * log_factor(self.nu_log) * t.powf(-self.alpha),
            ScheduleKind::ShiftedLogPower => {
                self.theta * log_factor(self.nu_log) * (t + 1.0).powf(-self.alpha)
            }
            ScheduleKind::Constant => self.theta,
        }
    }

    /// Polynomial decay exponent of `η_t`.
    pub fn alpha(&self) -> f64 {
        match self.kind {
            ScheduleKind::Constant => 0.0,
            _ => self.alpha,
        }
    }

    /// Exponent of the logarithmic factor of `η_t`.
    pub fn nu_log(&self) -> f64 {
        match self.kind {
            ScheduleKind::LogPower | ScheduleKind::ShiftedLogPower => self.nu_log,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn examples() {
        assert_abs_diff_eq!(Schedule::power(1.0, 0.4).unwrap().learning_rate(32), 0.25, epsilon = 1e-14);
        let s = Schedule::log_power(1.0, 0.5, 1.0).unwrap();
        let t = 1f64.exp().powi(2) - 1.0;
        let expected = 2f64.sqrt() / t.sqrt();
        let eta = s.theta * (t + 1.0).ln().sqrt() * t.powf(-0.5);
        assert_abs_diff_eq!(eta, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.5594, epsilon = 1e-4);
        assert_abs_diff_eq!(s.learning_rate(1), 2f64.ln().sqrt(), epsilon = 1e-15);
        let sh = Schedule::shifted_log_power(1.0, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(sh.learning_rate(3), (4f64.ln() / 4.0).sqrt(), epsilon = 1e-15);
        assert_eq!(Schedule::constant(0.3).unwrap().learning_rate(1000), 0.3);
    }

    #[test]
    fn power_is_nonincreasing() {
        let s = Schedule::power(2.0, 0.7).unwrap();
        for t in 1..1000 {
            assert!(s.learning_rate(t + 1) <= s.learning_rate(t));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Schedule::power(0.0, 0.5).is_err());
        assert!(Schedule::power(1.0, 1.5).is_err());
        assert!(Schedule::log_power(1.0, 0.5, -1.0).is_err());
    }

}
