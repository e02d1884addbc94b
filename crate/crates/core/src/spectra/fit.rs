//! Lorentzian peak fitting by Levenberg–Marquardt.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::Spectrum;

/// Local maxima whose prominence over the window minimum is below this
/// fraction of the tallest one are treated as noise.
pub const PEAK_FLOOR: f64 = 0.05;

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    /// Center [Hz].
    pub center: f64,
    /// FWHM [Hz] with the apodization width removed.
    pub width: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// RMS residual relative to the amplitude.
    pub residual: f64,
    /// One-sigma center uncertainty from the fit covariance [Hz].
    pub center_std: f64,
    pub iterations: usize,
}

fn lorentzian(p: &Vector4<f64>, f: f64) -> (f64, Vector4<f64>) {
    let (c, hw, a, b) = (p[0], p[1], p[2], p[3]);
    let d = f - c;
    let den = d * d + hw * hw;
    let shape = hw * hw / den;
    let grad = Vector4::new(
        a * hw * hw * 2.0 * d / (den * den),
        a * 2.0 * hw * d * d / (den * den),
        shape,
        1.0,
    );
    (a * shape + b, grad)
}

fn interior_maxima(v: &[f64], floor: f64, height: f64) -> Vec<usize> {
    (1..v.len() - 1)
        .filter(|&k| v[k] > v[k - 1] && v[k] >= v[k + 1] && v[k] - floor >= PEAK_FLOOR * height)
        .collect()
}

/// Frequencies of the local maxima above the noise floor inside `window`.
pub fn peak_positions(spectrum: &Spectrum, window: (f64, f64)) -> Vec<f64> {
    let idx: Vec<usize> = (0..spectrum.freqs.len())
        .filter(|&k| spectrum.freqs[k] >= window.0 && spectrum.freqs[k] <= window.1)
        .collect();
    if idx.len() < 3 {
        return Vec::new();
    }
    let v: Vec<f64> = idx.iter().map(|&k| spectrum.values[k]).collect();
    let floor = v.iter().copied().fold(f64::INFINITY, f64::min);
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    interior_maxima(&v, floor, top - floor)
        .into_iter()
        .map(|k| spectrum.freqs[idx[k]])
        .collect()
}

/// Fit `A·(w/2)² / ((f − c)² + (w/2)²) + B` to the single peak inside
/// `window = (f_lo, f_hi)`.
pub fn fit_peak(spectrum: &Spectrum, window: (f64, f64)) -> Result<PeakFit> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(invalid("window", format!("empty search window [{lo}, {hi}]")));
    }
    let idx: Vec<usize> = (0..spectrum.freqs.len())
        .filter(|&k| spectrum.freqs[k] >= lo && spectrum.freqs[k] <= hi)
        .collect();
    if idx.len() < 5 {
        return Err(Error::AmbiguousPeak(format!("only {} grid points in the search window", idx.len())));
    }
    let f: Vec<f64> = idx.iter().map(|&k| spectrum.freqs[k]).collect();
    let v: Vec<f64> = idx.iter().map(|&k| spectrum.values[k]).collect();
    let floor = v.iter().copied().fold(f64::INFINITY, f64::min);
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let height = top - floor;
    if !(height > 0.0) {
        return Err(Error::AmbiguousPeak("flat spectrum in the search window".into()));
    }

    let maxima = interior_maxima(&v, floor, height);
    let peak = match maxima.as_slice() {
        [] => return Err(Error::AmbiguousPeak("no interior maximum in the search window".into())),
        [k] => *k,
        many => {
            return Err(Error::AmbiguousPeak(format!(
                "{} maxima in the search window, at {:?} Hz",
                many.len(),
                many.iter().map(|&k| f[k]).collect::<Vec<_>>()
            )))
        }
    };

    // Half-maximum crossings for the starting width.
    let half = floor + 0.5 * (v[peak] - floor);
    let left = (0..peak).rev().find(|&k| v[k] < half).unwrap_or(0);
    let right = (peak + 1..v.len()).find(|&k| v[k] < half).unwrap_or(v.len() - 1);
    let fwhm0 = (f[right] - f[left]).max(f[1] - f[0]);

    // Symmetric span of three widths around the maximum.
    let spacing = (f[v.len() - 1] - f[0]) / (v.len() - 1) as f64;
    let reach = ((3.0 * fwhm0 / spacing).ceil() as usize).max(3);
    let span = reach.min(peak).min(v.len() - 1 - peak);
    if span < 2 {
        return Err(Error::AmbiguousPeak("peak sits on the edge of the search window".into()));
    }
    let pts: Vec<(f64, f64)> = (peak - span..=peak + span).map(|k| ((f[k] - f[peak]), v[k] / height)).collect();

    // Work in coordinates centered on the maximum and scaled to unit height.
    let mut p = Vector4::new(0.0, 0.5 * fwhm0, (v[peak] - floor) / height, floor / height);
    let cost = |p: &Vector4<f64>| pts.iter().map(|(x, y)| (y - lorentzian(p, *x).0).powi(2)).sum::<f64>();
    let mut chi2 = cost(&p);
    let mut mu = 1e-3;
    let mut iterations = 0;
    for it in 0..MAX_ITER {
        iterations = it + 1;
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (x, y) in &pts {
            let (m, g) = lorentzian(&p, *x);
            jtj += g * g.transpose();
            jtr += g * (y - m);
        }
        let mut accepted = false;
        let mut converged = false;
        while mu < 1e12 {
            let mut a = jtj;
            for d in 0..4 {
                a[(d, d)] += mu * jtj[(d, d)].max(1e-30);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let trial = p + step;
            let c = cost(&trial);
            if trial[1] > 0.0 && c <= chi2 {
                converged = step.iter().zip(p.iter()).all(|(s, q)| s.abs() <= 1e-12 * q.abs().max(fwhm0 * 1e-3));
                p = trial;
                chi2 = c;
                mu = (mu / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted || converged || chi2 == 0.0 {
            break;
        }
    }

    let mut jtj = Matrix4::<f64>::zeros();
    for (x, _) in &pts {
        let (_, g) = lorentzian(&p, *x);
        jtj += g * g.transpose();
    }
    let dof = (pts.len() as f64 - 4.0).max(1.0);
    let center_std = jtj
        .try_inverse()
        .map(|cov| (chi2 / dof * cov[(0, 0)]).max(0.0).sqrt())
        .unwrap_or(f64::INFINITY);

    let width = 2.0 * p[1] - spectrum.apodization;
    if !(width > 0.0) {
        return Err(Error::AmbiguousPeak(format!(
            "fitted width {} Hz does not exceed the apodization {} Hz",
            2.0 * p[1],
            spectrum.apodization
        )));
    }
    let amplitude = p[2] * height;
    Ok(PeakFit {
        center: f[peak] + p[0],
        width,
        amplitude,
        offset: p[3] * height,
        residual: (chi2 / pts.len() as f64).sqrt() / p[2].abs().max(f64::MIN_POSITIVE),
        center_std,
        iterations,
    })
}
