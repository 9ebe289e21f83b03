//! Pulse envelopes for the photon and escort fields.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    Square,
    Sampled,
}

/// A dimensionless pulse envelope on [0, duration], scaled so the peak is
/// order unity. Square pulses are exactly 1 inside the window; sampled pulses
/// are given on a uniform time grid and interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseShape<S> {
    duration: S,
    samples: Option<Vec<Complex<S>>>,
}

impl<S: Scalar> PulseShape<S> {
    pub fn square(duration: S) -> Result<Self> {
        if !(duration.is_finite() && duration > S::zero()) {
            return Err(Error::invalid("pulse duration must be positive"));
        }
        Ok(PulseShape {
            duration,
            samples: None,
        })
    }

    /// Envelope sampled on a uniform grid spanning [0, duration]; at least
    /// two points, all finite.
    pub fn sampled(duration: S, samples: Vec<Complex<S>>) -> Result<Self> {
        if !(duration.is_finite() && duration > S::zero()) {
            return Err(Error::invalid("pulse duration must be positive"));
        }
        if samples.len() < 2 {
            return Err(Error::invalid("sampled pulse needs at least 2 points"));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::invalid("sampled pulse contains non-finite values"));
        }
        Ok(PulseShape {
            duration,
            samples: Some(samples),
        })
    }

    /// Gaussian envelope exp(-(t-center)²/(2·width²)) sampled on `points`
    /// grid nodes. Convenience constructor for wavepacket tests.
    pub fn gaussian_sampled(duration: S, center: S, width: S, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid("gaussian pulse needs at least 2 points"));
        }
        let n = S::from_count((points - 1) as u64);
        let samples = (0..points)
            .map(|i| {
                let t = duration * S::from_count(i as u64) / n;
                let arg = (t - center) / width;
                Complex::new((-arg * arg / S::of(2.0)).exp(), S::zero())
            })
            .collect();
        Self::sampled(duration, samples)
    }

    pub fn kind(&self) -> PulseKind {
        if self.samples.is_some() {
            PulseKind::Sampled
        } else {
            PulseKind::Square
        }
    }

    pub fn duration(&self) -> S {
        self.duration
    }

    /// Envelope value at time `t`; zero outside [0, duration].
    pub fn envelope(&self, t: S) -> Complex<S> {
        let zero = Complex::new(S::zero(), S::zero());
        if t < S::zero() || t > self.duration {
            return zero;
        }
        match &self.samples {
            None => Complex::new(S::one(), S::zero()),
            Some(samples) => {
                let n = samples.len() - 1;
                let x = t / self.duration * S::from_count(n as u64);
                let i = x.floor().as_f64() as usize;
                if i >= n {
                    return samples[n];
                }
                let frac = x - S::from_count(i as u64);
                samples[i] * (S::one() - frac) + samples[i + 1] * frac
            }
        }
    }
}
