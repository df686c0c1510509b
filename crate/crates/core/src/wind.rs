//! Horizontal wind forcing, uniform in space.
//!
//! Measured series are ingested in m/s, aggregated to daily means, interpolated
//! with Akima splines and capped at [`MAX_SPEED_MPS`]. All evaluators return
//! m/day, the unit of the advection terms.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::SECONDS_PER_DAY;

/// Cap on the interpolated wind speed.
pub const MAX_SPEED_MPS: f64 = 5.0;

/// Spatially uniform wind field `v(t)` in m/day.
pub trait Wind: Sync {
    fn velocity(&self, t: f64) -> [f64; 2];
}

/// Constant wind in m/day.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConstantWind(pub [f64; 2]);

impl Wind for ConstantWind {
    fn velocity(&self, _t: f64) -> [f64; 2] {
        self.0
    }
}

/// Synthetic wind `A (sin(2 pi t / T + phi), cos(2 pi t / T + phi))`, amplitude in m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatoryWind {
    pub amplitude: f64,
    /// Period in days.
    pub period: f64,
    pub phase: f64,
}

impl OscillatoryWind {
    pub fn new(amplitude: f64, period: f64, phase: f64) -> Result<Self> {
        if !(period > 0.0) || !amplitude.is_finite() || !phase.is_finite() {
            return Err(Error::Wind(format!("oscillatory wind needs period > 0, got {period}")));
        }
        Ok(OscillatoryWind { amplitude, period, phase })
    }

    /// Components in m/s.
    pub fn velocity_mps(&self, t: f64) -> [f64; 2] {
        let arg = core::f64::consts::TAU * t / self.period + self.phase;
        [self.amplitude * arg.sin(), self.amplitude * arg.cos()]
    }
}

impl Wind for OscillatoryWind {
    fn velocity(&self, t: f64) -> [f64; 2] {
        self.velocity_mps(t).map(|c| c * SECONDS_PER_DAY)
    }
}

/// Time series of wind components in m/s, times in days.
#[derive(Debug, Clone, PartialEq)]
pub struct WindSeries {
    times: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    slopes_u: Vec<f64>,
    slopes_v: Vec<f64>,
}

impl WindSeries {
    /// Builds a series from strictly increasing times and finite components.
    pub fn new(times: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Wind("empty series".into()));
        }
        if times.len() != u.len() || times.len() != v.len() {
            return Err(Error::Wind(format!("{} times, {} u values, {} v values", times.len(), u.len(), v.len())));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Wind(format!("times not strictly increasing at index {}", i + 1)));
        }
        if times.iter().chain(&u).chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::Wind("non-finite value".into()));
        }
        let slopes_u = akima_slopes(&times, &u);
        let slopes_v = akima_slopes(&times, &v);
        Ok(WindSeries { times, u, v, slopes_u, slopes_v })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    /// Daily means over `[d, d + 1)`, placed at day centres `d + 0.5`.
    ///
    /// Days without records between the first and last take the previous
    /// day's mean; their day indices are returned alongside.
    pub fn aggregate_daily(&self) -> Result<(WindSeries, Vec<i64>)> {
        let first = self.times[0].floor() as i64;
        let last = self.times.last().unwrap().floor() as i64;
        let days = (last - first + 1) as usize;
        let mut sum_u = alloc::vec![0.0; days];
        let mut sum_v = alloc::vec![0.0; days];
        let mut count = alloc::vec![0usize; days];
        for i in 0..self.len() {
            let d = (self.times[i].floor() as i64 - first) as usize;
            sum_u[d] += self.u[i];
            sum_v[d] += self.v[i];
            count[d] += 1;
        }
        let mut times = Vec::with_capacity(days);
        let mut u = Vec::with_capacity(days);
        let mut v = Vec::with_capacity(days);
        let mut filled = Vec::new();
        for d in 0..days {
            times.push((first + d as i64) as f64 + 0.5);
            if count[d] > 0 {
                u.push(sum_u[d] / count[d] as f64);
                v.push(sum_v[d] / count[d] as f64);
            } else {
                // The first day always holds the first record.
                let (pu, pv) = (u[d - 1], v[d - 1]);
                u.push(pu);
                v.push(pv);
                filled.push(first + d as i64);
            }
        }
        Ok((WindSeries::new(times, u, v)?, filled))
    }

    /// Interpolated components in m/s before the speed cap; clamped to the span.
    pub fn interpolate_mps(&self, t: f64) -> [f64; 2] {
        let n = self.len();
        if n == 1 || t <= self.times[0] {
            return [self.u[0], self.v[0]];
        }
        if t >= self.times[n - 1] {
            return [self.u[n - 1], self.v[n - 1]];
        }
        let k = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(k) => return [self.u[k], self.v[k]],
            Err(k) => k - 1,
        };
        [
            hermite(&self.times, &self.u, &self.slopes_u, k, t),
            hermite(&self.times, &self.v, &self.slopes_v, k, t),
        ]
    }

    /// Capped wind in m/s, direction preserved.
    pub fn wind_at_mps(&self, t: f64) -> [f64; 2] {
        cap_speed(self.interpolate_mps(t), MAX_SPEED_MPS)
    }

    /// Capped wind in m/day.
    pub fn wind_at(&self, t: f64) -> [f64; 2] {
        self.wind_at_mps(t).map(|c| c * SECONDS_PER_DAY)
    }
}

impl Wind for WindSeries {
    fn velocity(&self, t: f64) -> [f64; 2] {
        self.wind_at(t)
    }
}

/// Scales `w` down to `max` when its norm exceeds it.
pub fn cap_speed(w: [f64; 2], max: f64) -> [f64; 2] {
    let speed = (w[0] * w[0] + w[1] * w[1]).sqrt();
    if speed > max {
        [w[0] * max / speed, w[1] * max / speed]
    } else {
        w
    }
}

/// Akima node slopes with the usual two-point linear extension at each end.
fn akima_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return alloc::vec![0.0];
    }
    let m: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    if n == 2 {
        return alloc::vec![m[0], m[0]];
    }
    let mm = 2.0 * m[0] - m[1];
    let mmm = 2.0 * mm - m[0];
    let mp = 2.0 * m[n - 2] - m[n - 3];
    let mpp = 2.0 * mp - m[n - 2];
    let mut ext = Vec::with_capacity(n + 3);
    ext.push(mmm);
    ext.push(mm);
    ext.extend_from_slice(&m);
    ext.push(mp);
    ext.push(mpp);
    let dm: Vec<f64> = ext.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let f12_max = (0..n).map(|i| dm[i + 2] + dm[i]).fold(0.0, f64::max);
    (0..n)
        .map(|i| {
            let f1 = dm[i + 2];
            let f2 = dm[i];
            let f12 = f1 + f2;
            if f12 > 1e-9 * f12_max {
                (f1 * ext[i + 1] + f2 * ext[i + 2]) / f12
            } else {
                0.5 * (ext[i + 1] + ext[i + 2])
            }
        })
        .collect()
}

fn hermite(x: &[f64], y: &[f64], s: &[f64], k: usize, t: f64) -> f64 {
    let h = x[k + 1] - x[k];
    let q = (t - x[k]) / h;
    let q2 = q * q;
    let q3 = q2 * q;
    let h00 = 2.0 * q3 - 3.0 * q2 + 1.0;
    let h10 = q3 - 2.0 * q2 + q;
    let h01 = -2.0 * q3 + 3.0 * q2;
    let h11 = q3 - q2;
    h00 * y[k] + h10 * h * s[k] + h01 * y[k + 1] + h11 * h * s[k + 1]
}
