//! Measurement-setting grids and correlation values sampled on them.

use std::f64::consts::PI;

use crate::error::{BellError, Result};
use crate::tensor::CorrelationTensor;

/// Largest grid (`n_settings^N` points) that is materialized or summed
/// directly. `3^16 ≈ 4.3e7`.
pub const MAX_DIRECT_TERMS: usize = 43_046_721;

/// Per-observer angles `α^l = (l - 1) π / n_settings`, `l = 1..=n_settings`.
///
/// All observers share the same angle list.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingGrid {
    n_parties: usize,
    angles: Vec<f64>,
}

impl SettingGrid {
    pub fn new(n_parties: usize, n_settings: usize) -> Result<Self> {
        if n_parties < 2 {
            return Err(BellError::TooFewParties(n_parties));
        }
        if n_settings < 2 {
            return Err(BellError::InvalidSettingCount(n_settings));
        }
        let angles = (0..n_settings)
            .map(|l| l as f64 * PI / n_settings as f64)
            .collect();
        Ok(SettingGrid { n_parties, angles })
    }

    /// The grid `(0, π/3, 2π/3)` for every observer.
    pub fn three_setting(n_parties: usize) -> Result<Self> {
        Self::new(n_parties, 3)
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn n_settings(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Number of grid points `n_settings^N`, or `None` on overflow.
    pub fn n_points(&self) -> Option<usize> {
        u32::try_from(self.n_parties)
            .ok()
            .and_then(|n| self.n_settings().checked_pow(n))
    }

    pub fn is_directly_summable(&self) -> bool {
        self.n_points().is_some_and(|p| p <= MAX_DIRECT_TERMS)
    }

    pub(crate) fn check_tensor(&self, tensor: &CorrelationTensor) -> Result<()> {
        if tensor.n_parties() != self.n_parties {
            return Err(BellError::SizeMismatch {
                what: "setting grid",
                expected: tensor.n_parties(),
                found: self.n_parties,
            });
        }
        Ok(())
    }
}

/// Contracts each binary party mode with the `m × 2` matrix of rows
/// `(cos α^l, sin α^l)`, turning `2^N` components into `m^N` grid values.
pub(crate) fn sample_grid(mut data: Vec<f64>, n_parties: usize, rows: &[[f64; 2]]) -> Vec<f64> {
    let m = rows.len();
    // After processing party j, parties < j have extent m and the rest 2.
    let mut stride = 1usize;
    for _ in 0..n_parties {
        let upper = data.len() / (2 * stride);
        let mut out = vec![0.0; stride * m * upper];
        for high in 0..upper {
            for (l, row) in rows.iter().enumerate() {
                let dst = stride * (l + m * high);
                let src0 = stride * (2 * high);
                let src1 = src0 + stride;
                for low in 0..stride {
                    out[dst + low] = row[0] * data[src0 + low] + row[1] * data[src1 + low];
                }
            }
        }
        data = out;
        stride *= m;
    }
    data
}

/// Correlation values `E(α^{l_1}, ..., α^{l_N})` at every grid point.
///
/// Storage is flat with observer `j`'s setting index as the base-`n_settings`
/// digit of weight `n_settings^j`.
#[derive(Debug, Clone)]
pub struct GridValues {
    n_parties: usize,
    n_settings: usize,
    values: Vec<f64>,
}

impl GridValues {
    /// Samples the tensor on every grid point.
    pub fn compute(tensor: &CorrelationTensor, grid: &SettingGrid) -> Result<Self> {
        grid.check_tensor(tensor)?;
        if !grid.is_directly_summable() {
            return Err(BellError::GridTooLarge {
                n_settings: grid.n_settings(),
                n_parties: grid.n_parties(),
            });
        }
        let n = grid.n_parties();
        let m = grid.n_settings();
        let rows: Vec<[f64; 2]> = grid.angles().iter().map(|a| [a.cos(), a.sin()]).collect();
        let data = sample_grid(tensor.components().to_vec(), n, &rows);
        Ok(GridValues {
            n_parties: n,
            n_settings: m,
            values: data,
        })
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn n_settings(&self) -> usize {
        self.n_settings
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at 0-based setting indices `(l_1 - 1, ..., l_N - 1)`.
    pub fn at(&self, settings: &[usize]) -> f64 {
        assert_eq!(settings.len(), self.n_parties);
        let idx = settings
            .iter()
            .rev()
            .fold(0, |acc, &l| acc * self.n_settings + l);
        self.values[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{evaluate, ghz_werner_tensor};

    #[test]
    fn default_grid_angles() {
        let g = SettingGrid::three_setting(4).unwrap();
        assert_eq!(g.angles(), &[0.0, PI / 3.0, 2.0 * PI / 3.0]);
        assert_eq!(g.n_points(), Some(81));
    }

    #[test]
    fn angles_strictly_increasing_below_pi() {
        for m in 2..12 {
            let g = SettingGrid::new(2, m).unwrap();
            assert!(g.angles().windows(2).all(|w| w[0] < w[1]));
            assert!(g.angles().iter().all(|a| (0.0..PI).contains(a)));
        }
    }

    #[test]
    fn grid_validation() {
        assert!(SettingGrid::new(1, 3).is_err());
        assert!(SettingGrid::new(3, 1).is_err());
        assert!(SettingGrid::three_setting(16).unwrap().is_directly_summable());
        assert!(!SettingGrid::three_setting(17).unwrap().is_directly_summable());
    }

    #[test]
    fn grid_values_match_pointwise_evaluation() {
        let comps: Vec<f64> = (0..16).map(|i| ((i * 7 % 11) as f64 / 5.0) - 1.0).collect();
        let t = CorrelationTensor::new(4, comps).unwrap();
        let g = SettingGrid::new(4, 3).unwrap();
        let gv = GridValues::compute(&t, &g).unwrap();
        for idx in 0..81usize {
            let settings: Vec<usize> = (0..4).map(|j| idx / 3usize.pow(j) % 3).collect();
            let angles: Vec<f64> = settings.iter().map(|&l| g.angles()[l]).collect();
            let e = evaluate(&t, &angles.into()).unwrap();
            assert!((gv.at(&settings) - e).abs() < 1e-14);
            assert_eq!(gv.values()[idx], gv.at(&settings));
        }
    }

    #[test]
    fn grid_values_reject_mismatch() {
        let t = ghz_werner_tensor(3, 1.0).unwrap();
        let g = SettingGrid::three_setting(2).unwrap();
        assert!(matches!(
            GridValues::compute(&t, &g),
            Err(BellError::SizeMismatch { .. })
        ));
    }
}
