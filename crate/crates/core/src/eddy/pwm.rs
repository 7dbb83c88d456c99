use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Pulse-width-modulated approximation of `sin(2 pi t / period)` with `teeth`
/// switching cycles per period.
///
/// The signal is the sign of the sine wherever the sawtooth
/// `frac(teeth * t / period)` lies below `|sin|`, and zero elsewhere, so its
/// average over a few teeth follows the sine.
pub fn pwm_excitation(t: f64, period: f64, teeth: u32) -> f64 {
    let tau = t.rem_euclid(period);
    let sine = (2.0 * PI * tau / period).sin();
    let x = teeth as f64 * tau / period;
    let saw = x - x.floor();
    if saw < sine.abs() {
        sine.signum()
    } else {
        0.0
    }
}

/// Time profile of the wire current, in amperes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Excitation {
    Pwm { period: f64, teeth: u32, amplitude: f64 },
    Sine { period: f64, amplitude: f64 },
}

impl Default for Excitation {
    fn default() -> Self {
        Excitation::Pwm {
            period: 0.02,
            teeth: 1100,
            amplitude: 1.0,
        }
    }
}

impl Excitation {
    pub fn current(&self, t: f64) -> f64 {
        match *self {
            Excitation::Pwm {
                period,
                teeth,
                amplitude,
            } => amplitude * pwm_excitation(t, period, teeth),
            Excitation::Sine { period, amplitude } => amplitude * (2.0 * PI * t / period).sin(),
        }
    }

    pub fn period(&self) -> f64 {
        match *self {
            Excitation::Pwm { period, .. } | Excitation::Sine { period, .. } => period,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let (period, amplitude) = match *self {
            Excitation::Pwm {
                period,
                teeth,
                amplitude,
            } => {
                if teeth == 0 {
                    return Err("PWM needs at least one tooth".into());
                }
                (period, amplitude)
            }
            Excitation::Sine { period, amplitude } => (period, amplitude),
        };
        if !(period > 0.0 && period.is_finite()) || !amplitude.is_finite() {
            return Err(format!("invalid source period {period} or amplitude {amplitude}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: f64 = 0.02;

    #[test]
    fn spec_points() {
        assert_eq!(pwm_excitation(0.0, T, 1100), 0.0);
        assert_eq!(pwm_excitation(T / 4.0, T, 1100), 1.0);
        assert_eq!(pwm_excitation(3.0 * T / 4.0, T, 1100), -1.0);
        assert_eq!(pwm_excitation(T + T / 4.0, T, 1100), 1.0);
    }

    #[test]
    fn values_are_ternary() {
        for i in 0..10_000 {
            let f = pwm_excitation(i as f64 * 3.7e-6, T, 1100);
            assert!(f == 0.0 || f == 1.0 || f == -1.0);
        }
    }

    #[test]
    fn moving_average_follows_sine() {
        let n = 1100;
        let window = 10.0 * T / n as f64;
        let samples = 2000;
        for k in 0..50 {
            let t0 = k as f64 * T / 50.0;
            let avg: f64 = (0..samples)
                .map(|s| pwm_excitation(t0 + (s as f64 + 0.5) * window / samples as f64, T, n))
                .sum::<f64>()
                / samples as f64;
            let mid = (2.0 * PI * (t0 + window / 2.0) / T).sin();
            assert!((avg - mid).abs() <= 0.1, "t0={t0}: {avg} vs {mid}");
        }
    }

    #[test]
    fn excitation_scales_and_validates() {
        let e = Excitation::Pwm {
            period: T,
            teeth: 1100,
            amplitude: 3.0,
        };
        assert_eq!(e.current(T / 4.0), 3.0);
        let s = Excitation::Sine {
            period: T,
            amplitude: 2.0,
        };
        assert!((s.current(T / 4.0) - 2.0).abs() < 1e-12);
        assert!(e.validate().is_ok());
        assert!(Excitation::Sine {
            period: 0.0,
            amplitude: 1.0
        }
        .validate()
        .is_err());
    }
}
