//! Total variation of the beamlet intensity map and descent directions for it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gradient norms at or below this are treated as zero.
pub const GRADIENT_FLOOR: f64 = 1e-12;

/// Default smoothing for the TV gradient.
pub const DEFAULT_DELTA: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
#[error("intensity vector of length {len} does not fit a {fields}x{beamlets} map")]
pub struct ShapeError {
    pub len: usize,
    pub fields: usize,
    pub beamlets: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvMode {
    /// `Σ_f Σ_b |x_{f,b+1} − x_{f,b}|`: each field's profile on its own.
    #[default]
    #[serde(rename = "per_field_1d")]
    PerField1d,
    /// Isotropic forward-difference TV over the whole fields × beamlets
    /// array, with the last row and column only entering as neighbours.
    #[serde(rename = "full_2d")]
    Full2d,
}

impl std::str::FromStr for TvMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per_field_1d" => Ok(TvMode::PerField1d),
            "full_2d" => Ok(TvMode::Full2d),
            other => Err(format!("unknown TV mode `{other}` (per_field_1d | full_2d)")),
        }
    }
}

/// Borrowed view of an intensity vector as a row-major `fields × beamlets`
/// array; `x[f·B + b]` is beamlet `b` of field `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityMap<'a> {
    values: &'a [f64],
    fields: usize,
    beamlets: usize,
}

impl<'a> IntensityMap<'a> {
    pub fn new(values: &'a [f64], fields: usize, beamlets: usize) -> Result<Self, ShapeError> {
        if fields * beamlets != values.len() || fields == 0 {
            return Err(ShapeError {
                len: values.len(),
                fields,
                beamlets,
            });
        }
        Ok(Self {
            values,
            fields,
            beamlets,
        })
    }

    pub fn fields(&self) -> usize {
        self.fields
    }

    pub fn beamlets(&self) -> usize {
        self.beamlets
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.values
    }

    #[inline]
    pub fn get(&self, f: usize, b: usize) -> f64 {
        self.values[f * self.beamlets + b]
    }

    pub fn rows(&self) -> impl Iterator<Item = &'a [f64]> {
        self.values.chunks(self.beamlets)
    }
}

/// Exact (unsmoothed) total variation.
pub fn tv_value(map: &IntensityMap<'_>, mode: TvMode) -> f64 {
    match mode {
        TvMode::PerField1d => map
            .rows()
            .map(|row| row.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>())
            .sum(),
        TvMode::Full2d => {
            let mut total = 0.0;
            for u in 0..map.fields().saturating_sub(1) {
                for v in 0..map.beamlets().saturating_sub(1) {
                    let x = map.get(u, v);
                    let du = map.get(u + 1, v) - x;
                    let dv = map.get(u, v + 1) - x;
                    total += du.hypot(dv);
                }
            }
            total
        }
    }
}

/// Total variation with every root term `√s` replaced by `√(s + δ²)`.
pub fn tv_smoothed_value(map: &IntensityMap<'_>, mode: TvMode, delta: f64) -> f64 {
    let d2 = delta * delta;
    match mode {
        TvMode::PerField1d => map
            .rows()
            .map(|row| {
                row.windows(2)
                    .map(|w| ((w[1] - w[0]).powi(2) + d2).sqrt())
                    .sum::<f64>()
            })
            .sum(),
        TvMode::Full2d => {
            let mut total = 0.0;
            for u in 0..map.fields().saturating_sub(1) {
                for v in 0..map.beamlets().saturating_sub(1) {
                    let x = map.get(u, v);
                    let du = map.get(u + 1, v) - x;
                    let dv = map.get(u, v + 1) - x;
                    total += (du * du + dv * dv + d2).sqrt();
                }
            }
            total
        }
    }
}

/// Gradient of [`tv_smoothed_value`], laid out like the input vector.
pub fn tv_smoothed_gradient(map: &IntensityMap<'_>, mode: TvMode, delta: f64) -> Vec<f64> {
    let d2 = delta * delta;
    let nb = map.beamlets();
    let mut grad = vec![0.0; map.as_slice().len()];
    match mode {
        TvMode::PerField1d => {
            for (f, row) in map.rows().enumerate() {
                for b in 0..nb.saturating_sub(1) {
                    let diff = row[b + 1] - row[b];
                    let g = diff / (diff * diff + d2).sqrt();
                    grad[f * nb + b + 1] += g;
                    grad[f * nb + b] -= g;
                }
            }
        }
        TvMode::Full2d => {
            for u in 0..map.fields().saturating_sub(1) {
                for v in 0..nb.saturating_sub(1) {
                    let x = map.get(u, v);
                    let du = map.get(u + 1, v) - x;
                    let dv = map.get(u, v + 1) - x;
                    let norm = (du * du + dv * dv + d2).sqrt();
                    grad[(u + 1) * nb + v] += du / norm;
                    grad[u * nb + v + 1] += dv / norm;
                    grad[u * nb + v] -= (du + dv) / norm;
                }
            }
        }
    }
    grad
}

/// Unit vector along the negated smoothed-TV gradient, or the zero vector
/// when the gradient norm is at most [`GRADIENT_FLOOR`].
pub fn nonascending_direction(map: &IntensityMap<'_>, mode: TvMode, delta: f64) -> Vec<f64> {
    let mut g = tv_smoothed_gradient(map, mode, delta);
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > GRADIENT_FLOOR {
        g.iter_mut().for_each(|v| *v = -*v / norm);
    } else {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(v: &[f64], f: usize, b: usize) -> IntensityMap<'_> {
        IntensityMap::new(v, f, b).unwrap()
    }

    #[test]
    fn shape_is_checked() {
        assert!(IntensityMap::new(&[1.0, 2.0, 3.0], 2, 2).is_err());
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let m = map(&v, 2, 3);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.as_slice(), &v);
    }

    #[test]
    fn constant_map_has_zero_tv_and_gradient() {
        let v = [7.0; 12];
        let m = map(&v, 3, 4);
        for mode in [TvMode::PerField1d, TvMode::Full2d] {
            assert_eq!(tv_value(&m, mode), 0.0);
            assert!(tv_smoothed_gradient(&m, mode, DEFAULT_DELTA).iter().all(|&g| g == 0.0));
            assert!(nonascending_direction(&m, mode, DEFAULT_DELTA).iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn two_by_two_full_2d() {
        let v = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(tv_value(&map(&v, 2, 2), TvMode::Full2d), 1.0);
    }

    #[test]
    fn three_by_three_spike_full_2d() {
        let mut v = [0.0; 9];
        v[4] = 1.0;
        let tv = tv_value(&map(&v, 3, 3), TvMode::Full2d);
        assert!((tv - (2.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((tv - 3.41421).abs() < 1e-5);
    }

    #[test]
    fn per_field_ignores_cross_field_jumps() {
        let v = [0.0, 0.0, 5.0, 5.0];
        assert_eq!(tv_value(&map(&v, 2, 2), TvMode::PerField1d), 0.0);
        let v = [0.0, 2.0, 5.0, 4.0];
        assert_eq!(tv_value(&map(&v, 2, 2), TvMode::PerField1d), 3.0);
    }

    #[test]
    fn one_by_two_gradient_and_direction() {
        let v = [0.0, 1.0];
        let m = map(&v, 1, 2);
        let g = tv_smoothed_gradient(&m, TvMode::PerField1d, 1e-12);
        assert!((g[0] + 1.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
        let d = nonascending_direction(&m, TvMode::PerField1d, 1e-12);
        let s = 1.0 / 2f64.sqrt();
        assert!((d[0] - s).abs() < 1e-12 && (d[1] + s).abs() < 1e-12);
    }

    #[test]
    fn tv_mode_parses() {
        assert_eq!("full_2d".parse::<TvMode>(), Ok(TvMode::Full2d));
        assert_eq!("per_field_1d".parse::<TvMode>(), Ok(TvMode::PerField1d));
        assert!("both".parse::<TvMode>().is_err());
    }
}
