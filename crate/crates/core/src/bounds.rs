//! Both sides of the three-setting Bell inequality and the resulting
//! classification of two-setting versus three-setting local realism.
//!
//! For a plane-restricted tensor `T` and the grid `α^l = (l - 1)π/3`:
//!
//! * `(E, E) = Σ_grid E² = (3/2)^N Σ T²` (computed both ways),
//! * any three-setting local realistic `E_LR` obeys `(E_LR, E) ≤ 2^N T_max`,
//! * `Σ T² ≤ 1` guarantees a two-setting local realistic model.
//!
//! A tensor with `(E, E) > 2^N T_max` therefore has no three-setting model.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};
use crate::grid::{sample_grid, SettingGrid};
use crate::tensor::{contract, contract_party, sum_squared_components, CorrelationTensor};

/// Absolute slack on `(E, E) > 2^N T_max`.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;
/// Absolute slack on `Σ T² ≤ 1`.
pub const ZB_TOLERANCE: f64 = 1e-12;
pub const GRID_REFINE_MAX_PARTIES: usize = 6;
/// Coarse grid resolution per party over `[0, 2π)`.
pub const GRID_REFINE_POINTS: usize = 64;

pub const HEADLINE_VERDICT: &str =
    "two-setting model exists but cannot extend to a three-setting model";

// ---------------------------------------------------------------------------
// (E, E)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EeMode {
    Direct,
    ClosedForm,
}

/// Result of [`ee_inner_product`]: the direct grid sum when the grid is small
/// enough, always alongside the closed form `(n/2)^N Σ T²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeValue {
    pub direct: Option<f64>,
    pub closed_form: f64,
}

impl EeValue {
    pub fn value(&self) -> f64 {
        self.direct.unwrap_or(self.closed_form)
    }

    pub fn mode(&self) -> EeMode {
        if self.direct.is_some() {
            EeMode::Direct
        } else {
            EeMode::ClosedForm
        }
    }

    /// `|direct - closed| / max(|closed|, tiny)` when both are present.
    pub fn relative_error(&self) -> Option<f64> {
        self.direct.map(|d| {
            let scale = self.closed_form.abs().max(f64::MIN_POSITIVE);
            (d - self.closed_form).abs() / scale
        })
    }
}

/// Largest sub-grid materialized at once by the direct sum (`3^10` points).
const DIRECT_CHUNK_PARTIES: usize = 10;

fn direct_square_sum(data: &[f64], n_parties: usize, rows: &[[f64; 2]]) -> f64 {
    if n_parties <= DIRECT_CHUNK_PARTIES {
        return sample_grid(data.to_vec(), n_parties, rows)
            .iter()
            .map(|e| e * e)
            .sum();
    }
    rows.iter()
        .map(|&row| {
            let sub = contract_party(data, n_parties - 1, row);
            direct_square_sum(&sub, n_parties - 1, rows)
        })
        .sum()
}

/// `Σ_{l_1...l_N} E(α^{l_1}, ..., α^{l_N})²` by explicit summation over the grid.
pub fn ee_direct(tensor: &CorrelationTensor, grid: &SettingGrid) -> Result<f64> {
    grid.check_tensor(tensor)?;
    if !grid.is_directly_summable() {
        return Err(BellError::GridTooLarge {
            n_settings: grid.n_settings(),
            n_parties: grid.n_parties(),
        });
    }
    let rows: Vec<[f64; 2]> = grid.angles().iter().map(|a| [a.cos(), a.sin()]).collect();
    Ok(direct_square_sum(tensor.components(), tensor.n_parties(), &rows))
}

/// `(n/2)^N Σ T²`, using `Σ_l cos α^l sin α^l = 0` and
/// `Σ_l cos² α^l = Σ_l sin² α^l = n/2` on the uniform half-circle grid.
pub fn ee_closed_form(tensor: &CorrelationTensor, grid: &SettingGrid) -> Result<f64> {
    grid.check_tensor(tensor)?;
    let half = grid.n_settings() as f64 / 2.0;
    Ok(half.powi(tensor.n_parties() as i32) * sum_squared_components(tensor))
}

/// The self inner product `(E, E)` on the grid, by both routes.
///
/// Grids beyond [`crate::grid::MAX_DIRECT_TERMS`] points only carry the
/// closed form.
pub fn ee_inner_product(tensor: &CorrelationTensor, grid: &SettingGrid) -> Result<EeValue> {
    let closed_form = ee_closed_form(tensor, grid)?;
    let direct = if grid.is_directly_summable() {
        Some(ee_direct(tensor, grid)?)
    } else {
        None
    };
    Ok(EeValue {
        direct,
        closed_form,
    })
}

// ---------------------------------------------------------------------------
// T_max

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TMaxMethod {
    GridRefine,
    Alternating,
    ClosedFormGhz,
}

impl fmt::Display for TMaxMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TMaxMethod::GridRefine => "grid_refine",
            TMaxMethod::Alternating => "alternating",
            TMaxMethod::ClosedFormGhz => "closed_form_ghz",
        })
    }
}

impl FromStr for TMaxMethod {
    type Err = BellError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid_refine" | "grid-refine" => Ok(TMaxMethod::GridRefine),
            "alternating" => Ok(TMaxMethod::Alternating),
            "closed_form_ghz" | "closed-form-ghz" => Ok(TMaxMethod::ClosedFormGhz),
            other => Err(BellError::UnknownMethod(other.to_string())),
        }
    }
}

/// Multistart settings for the alternating maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternatingOptions {
    pub restarts: usize,
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        AlternatingOptions {
            restarts: 32,
            tolerance: 1e-12,
            max_sweeps: 500,
            seed: 0x5eed,
        }
    }
}

/// Maximum in-plane component and the angles attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct TMaxResult {
    pub value: f64,
    pub angles: Vec<f64>,
    pub method: TMaxMethod,
}

/// `T_max = max_β T · (d_1 ⊗ ... ⊗ d_N)` over in-plane unit vectors
/// `d_j = (cos β_j, sin β_j)`, with default options.
pub fn t_max(tensor: &CorrelationTensor, method: TMaxMethod) -> Result<f64> {
    t_max_with(tensor, method, &AlternatingOptions::default()).map(|r| r.value)
}

pub fn t_max_with(
    tensor: &CorrelationTensor,
    method: TMaxMethod,
    options: &AlternatingOptions,
) -> Result<TMaxResult> {
    match method {
        TMaxMethod::GridRefine => t_max_grid_refine(tensor),
        TMaxMethod::Alternating => Ok(t_max_alternating(tensor, options)),
        TMaxMethod::ClosedFormGhz => {
            let v = tensor
                .ghz_werner_visibility()
                .ok_or(BellError::NotGhzWerner)?;
            // V cos(Σβ) peaks at β = 0.
            Ok(TMaxResult {
                value: v,
                angles: vec![0.0; tensor.n_parties()],
                method,
            })
        }
    }
}

/// Partial contraction over every party except `party`, leaving its 2-vector.
fn partial_vector(tensor: &CorrelationTensor, angles: &[f64], party: usize) -> [f64; 2] {
    let mut data = tensor.components().to_vec();
    for p in (0..tensor.n_parties()).rev() {
        if p != party {
            data = contract_party(&data, p, [angles[p].cos(), angles[p].sin()]);
        }
    }
    [data[0], data[1]]
}

fn eval_angles(tensor: &CorrelationTensor, angles: &[f64]) -> f64 {
    let pairs: Vec<[f64; 2]> = angles.iter().map(|a| [a.cos(), a.sin()]).collect();
    contract(tensor, &pairs).expect("angle count matches tensor")
}

fn t_max_grid_refine(tensor: &CorrelationTensor) -> Result<TMaxResult> {
    let n = tensor.n_parties();
    if n > GRID_REFINE_MAX_PARTIES {
        return Err(BellError::GridRefineTooLarge {
            got: n,
            max: GRID_REFINE_MAX_PARTIES,
        });
    }

    // Coarse search equivalent to the 64-point grid on [0, 2π) per party:
    // β_j + π flips the sign, and the sign is absorbed by the last party,
    // which is maximized exactly (its optimum is the norm of its partial
    // contraction). So parties 0..N-1 range over 32 points on [0, π).
    let half = GRID_REFINE_POINTS / 2;
    let step = PI / half as f64;
    let pairs: Vec<[f64; 2]> = (0..half)
        .map(|k| {
            let a = k as f64 * step;
            [a.cos(), a.sin()]
        })
        .collect();

    fn search(
        data: &[f64],
        pairs: &[[f64; 2]],
        current: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>, [f64; 2]),
    ) {
        if data.len() == 2 {
            let v = data[0].hypot(data[1]);
            if v > best.0 {
                *best = (v, current.clone(), [data[0], data[1]]);
            }
            return;
        }
        for (k, &c) in pairs.iter().enumerate() {
            current.push(k);
            let sub = contract_party(data, 0, c);
            search(&sub, pairs, current, best);
            current.pop();
        }
    }

    let mut best = (f64::NEG_INFINITY, Vec::new(), [0.0, 0.0]);
    search(tensor.components(), &pairs, &mut Vec::new(), &mut best);
    let (_, ks, last) = best;
    let mut angles: Vec<f64> = ks.iter().map(|&k| k as f64 * step).collect();
    angles.push(if last == [0.0, 0.0] { 0.0 } else { last[1].atan2(last[0]) });

    refine_coordinatewise(tensor, &mut angles, step);
    let value = eval_angles(tensor, &angles).max(0.0);
    Ok(TMaxResult {
        value,
        angles: angles.iter().map(|a| a.rem_euclid(TAU)).collect(),
        method: TMaxMethod::GridRefine,
    })
}

/// Golden-section line search on each angle in turn, bracket `±radius`
/// around the current value, until no angle moves by more than `1e-10`.
fn refine_coordinatewise(tensor: &CorrelationTensor, angles: &mut [f64], radius: f64) {
    const ANGLE_TOL: f64 = 1e-10;
    const MAX_SWEEPS: usize = 2000;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;

    for _ in 0..MAX_SWEEPS {
        let mut moved = 0.0f64;
        for j in 0..angles.len() {
            let start = angles[j];
            let mut f = |x: f64| {
                angles[j] = x;
                eval_angles(tensor, angles)
            };
            let (mut lo, mut hi) = (start - radius, start + radius);
            let mut x1 = hi - inv_phi * (hi - lo);
            let mut x2 = lo + inv_phi * (hi - lo);
            let (mut f1, mut f2) = (f(x1), f(x2));
            while hi - lo > ANGLE_TOL {
                if f1 < f2 {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + inv_phi * (hi - lo);
                    f2 = f(x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - inv_phi * (hi - lo);
                    f1 = f(x1);
                }
            }
            let candidate = 0.5 * (lo + hi);
            let f_start = f(start);
            let f_cand = f(candidate);
            angles[j] = if f_cand > f_start { candidate } else { start };
            moved = moved.max((angles[j] - start).abs());
        }
        if moved <= ANGLE_TOL {
            break;
        }
    }
}

fn alternating_from(
    tensor: &CorrelationTensor,
    mut angles: Vec<f64>,
    options: &AlternatingOptions,
) -> (f64, Vec<f64>) {
    let mut value = eval_angles(tensor, &angles);
    for _ in 0..options.max_sweeps {
        let previous = value;
        for j in 0..angles.len() {
            let [a, b] = partial_vector(tensor, &angles, j);
            if a != 0.0 || b != 0.0 {
                angles[j] = b.atan2(a);
            }
            value = a.hypot(b);
        }
        if value - previous <= options.tolerance {
            break;
        }
    }
    (value, angles)
}

/// Multistart alternating ascent: with all other directions fixed the best
/// direction for one party is its normalized partial contraction.
fn t_max_alternating(tensor: &CorrelationTensor, options: &AlternatingOptions) -> TMaxResult {
    let n = tensor.n_parties();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let starts: Vec<Vec<f64>> = (0..options.restarts.max(1))
        .map(|_| (0..n).map(|_| rng.gen_range(0.0..TAU)).collect())
        .collect();

    let (value, angles) = starts
        .into_par_iter()
        .map(|s| alternating_from(tensor, s, options))
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |best, cand| {
            if cand.0 > best.0 {
                cand
            } else {
                best
            }
        });

    TMaxResult {
        value: value.max(0.0),
        angles: angles.iter().map(|a| a.rem_euclid(TAU)).collect(),
        method: TMaxMethod::Alternating,
    }
}

/// Right-hand side `2^N T_max` of the three-setting inequality.
pub fn three_setting_bound(tensor: &CorrelationTensor, method: TMaxMethod) -> Result<f64> {
    Ok(bound_from_t_max(tensor.n_parties(), t_max(tensor, method)?))
}

pub fn bound_from_t_max(n_parties: usize, t_max: f64) -> f64 {
    2f64.powi(n_parties as i32) * t_max
}

// ---------------------------------------------------------------------------
// GHZ–Werner thresholds

/// Visibilities `lower < V ≤ upper` for which a GHZ–Werner state admits a
/// two-setting model but violates the three-setting inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationWindow {
    pub n_parties: usize,
    /// `2 (2/3)^N`, exclusive.
    pub lower: f64,
    /// `1 / √(2^(N-1))`, inclusive.
    pub upper: f64,
    pub nonempty: bool,
}

impl ViolationWindow {
    pub fn contains(&self, visibility: f64) -> bool {
        self.lower < visibility && visibility <= self.upper
    }
}

pub fn violation_window(n_parties: usize) -> Result<ViolationWindow> {
    if n_parties < 2 {
        return Err(BellError::TooFewParties(n_parties));
    }
    let n = n_parties as i32;
    let lower = 2.0 * (2.0f64 / 3.0).powi(n);
    let upper = 2f64.powf(-(n_parties as f64 - 1.0) / 2.0);
    Ok(ViolationWindow {
        n_parties,
        lower,
        upper,
        nonempty: lower < upper,
    })
}

/// `2 (2/π)^N`, the visibility threshold of the plane-infinite-setting
/// inequality; reported for comparison only.
pub fn plane_infinite_threshold(n_parties: usize) -> f64 {
    2.0 * (2.0 / PI).powi(n_parties as i32)
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Two-setting model exists, three-setting model impossible.
    TwoSettingOnly,
    /// Three-setting model impossible; the two-setting sufficient condition fails.
    ThreeSettingViolated,
    NoViolation,
}

impl Verdict {
    fn from_flags(zb: bool, violated: bool) -> Self {
        match (zb, violated) {
            (true, true) => Verdict::TwoSettingOnly,
            (false, true) => Verdict::ThreeSettingViolated,
            _ => Verdict::NoViolation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n_parties: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub ee_value: f64,
    pub ee_mode: EeMode,
    pub t_max: f64,
    pub t_max_method: TMaxMethod,
    pub three_setting_bound: f64,
    pub sum_sq: f64,
    pub zb_two_setting_exists: bool,
    pub three_setting_violated: bool,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub headline: Option<String>,
    pub visibility: Option<f64>,
    pub plane_infinite_threshold: Option<f64>,
    pub window: Option<ViolationWindow>,
    pub lhv_oracle_max: Option<f64>,
}

impl BoundsReport {
    /// Recomputes both flags and the verdict from the numeric fields.
    pub fn verdicts_consistent(&self) -> bool {
        let violated = self.ee_value > self.three_setting_bound + VIOLATION_TOLERANCE;
        let zb = self.sum_sq <= 1.0 + ZB_TOLERANCE;
        violated == self.three_setting_violated
            && zb == self.zb_two_setting_exists
            && self.verdict == Verdict::from_flags(zb, violated)
            && self.three_setting_bound == bound_from_t_max(self.n_parties, self.t_max)
    }

    pub fn sweep_row(&self) -> SweepRow {
        SweepRow {
            n: self.n_parties,
            v: self.visibility,
            ee: self.ee_value,
            t_max: self.t_max,
            bound: self.three_setting_bound,
            sum_sq: self.sum_sq,
            zb_exists: self.zb_two_setting_exists,
            violated: self.three_setting_violated,
        }
    }
}

/// One CSV row of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub v: Option<f64>,
    pub ee: f64,
    pub t_max: f64,
    pub bound: f64,
    pub sum_sq: f64,
    pub zb_exists: bool,
    pub violated: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ClassifyOptions {
    /// Forces a `T_max` method; otherwise the GHZ closed form is used when it
    /// applies and alternating ascent elsewhere.
    pub method: Option<TMaxMethod>,
    pub alternating: AlternatingOptions,
}

pub fn classify(tensor: &CorrelationTensor, lhv_max: Option<f64>) -> Result<BoundsReport> {
    classify_with(tensor, lhv_max, &ClassifyOptions::default())
}

pub fn classify_with(
    tensor: &CorrelationTensor,
    lhv_max: Option<f64>,
    options: &ClassifyOptions,
) -> Result<BoundsReport> {
    let n = tensor.n_parties();
    let grid = SettingGrid::three_setting(n)?;
    let ee = ee_inner_product(tensor, &grid)?;
    let visibility = tensor.ghz_werner_visibility();
    let method = options.method.unwrap_or(if visibility.is_some() {
        TMaxMethod::ClosedFormGhz
    } else {
        TMaxMethod::Alternating
    });
    let t = t_max_with(tensor, method, &options.alternating)?.value;
    let bound = bound_from_t_max(n, t);
    let sum_sq = sum_squared_components(tensor);

    let violated = ee.value() > bound + VIOLATION_TOLERANCE;
    let zb = sum_sq <= 1.0 + ZB_TOLERANCE;
    let verdict = Verdict::from_flags(zb, violated);

    Ok(BoundsReport {
        n_parties: n,
        label: tensor.label().map(str::to_owned),
        ee_value: ee.value(),
        ee_mode: ee.mode(),
        t_max: t,
        t_max_method: method,
        three_setting_bound: bound,
        sum_sq,
        zb_two_setting_exists: zb,
        three_setting_violated: violated,
        verdict,
        headline: (verdict == Verdict::TwoSettingOnly).then(|| HEADLINE_VERDICT.to_string()),
        visibility,
        plane_infinite_threshold: visibility.map(|_| plane_infinite_threshold(n)),
        window: visibility.map(|_| violation_window(n)).transpose()?,
        lhv_oracle_max: lhv_max,
    })
}
