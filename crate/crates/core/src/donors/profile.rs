//! Tabulated field-gradient and strain profiles with monotone cubic
//! (Fritsch–Carlson) interpolation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// Values are `∇B` [T/m].
    Gradient,
    /// Values are strain per zero-point displacement.
    Strain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    pub kind: ProfileKind,
    /// Distances [m], strictly increasing.
    pub distance: Vec<f64>,
    pub value: Vec<f64>,
    /// Comment lines of the source file.
    pub note: String,
    slopes: Vec<f64>,
}

impl FieldProfile {
    pub fn new(kind: ProfileKind, distance: Vec<f64>, value: Vec<f64>, note: impl Into<String>) -> Result<Self> {
        if distance.len() != value.len() {
            return Err(invalid("profile", "distance and value columns differ in length"));
        }
        if distance.len() < 2 {
            return Err(invalid("profile", "need at least two samples"));
        }
        if distance.iter().chain(&value).any(|v| !v.is_finite()) {
            return Err(invalid("profile", "samples must be finite"));
        }
        if let Some(k) = distance.windows(2).position(|w| w[1] <= w[0]) {
            return Err(invalid("profile", format!("distance not strictly increasing at sample {}", k + 1)));
        }
        let slopes = pchip_slopes(&distance, &value);
        Ok(Self { kind, distance, value, note: note.into(), slopes })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.distance[0], *self.distance.last().expect("non-empty"))
    }

    /// Monotone cubic interpolation; queries outside the grid are errors.
    pub fn interp(&self, x: f64) -> Result<f64> {
        let (min, max) = self.range();
        if !(x >= min && x <= max) {
            return Err(Error::OutOfRange { x, min, max });
        }
        let xs = &self.distance;
        let k = match xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(k) => return Ok(self.value[k]),
            Err(k) => k - 1,
        };
        let h = xs[k + 1] - xs[k];
        let t = (x - xs[k]) / h;
        let (y0, y1) = (self.value[k], self.value[k + 1]);
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1)
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Shape-preserving one-sided three-point slope.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Two whitespace-separated columns `distance_m value`; `#` lines are comments.
pub fn parse_profile(text: &str, kind: ProfileKind) -> Result<FieldProfile> {
    let mut distance = Vec::new();
    let mut value = Vec::new();
    let mut note = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('#') {
            note.push(c.trim().to_string());
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let lineno = k + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Parse { line: lineno, reason: format!("expected 2 columns, found {}", cols.len()) });
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line: lineno, reason: format!("not a finite number: {s:?}") })
        };
        let (d, v) = (num(cols[0])?, num(cols[1])?);
        if let Some(&last) = distance.last() {
            if d <= last {
                return Err(Error::Parse { line: lineno, reason: format!("distance {d:e} does not increase") });
            }
        }
        distance.push(d);
        value.push(v);
    }
    FieldProfile::new(kind, distance, value, note.join("\n"))
}

pub fn load_profile(path: impl AsRef<Path>, kind: ProfileKind) -> Result<FieldProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse_profile(&text, kind)
}
