//! Local hidden-variable side of the three-setting inequality.
//!
//! A local realistic correlation is a mixture over hidden variables of
//! products of predetermined ±1 outcomes. The scalar product `(E_LR, E)` is
//! linear in the mixture weights, so its maximum is reached at a single
//! deterministic strategy; this module enumerates those exhaustively (or by
//! best-response ascent for large `N`) and checks the algebra behind the
//! `2^N T_max` bound: the trigonometric grid sums, the projection of a
//! strategy onto the plane spanned by `M_1`, `M_2`, and the factored form
//! `(3/2)^(N/2) Π ‖I_j‖ T · (d_1 ⊗ ... ⊗ d_N)`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_from_t_max, t_max, TMaxMethod, GRID_REFINE_MAX_PARTIES};
use crate::error::{BellError, Result};
use crate::grid::{GridValues, SettingGrid};
use crate::tensor::{evaluate, CorrelationTensor, DirectionSet};

pub const SETTINGS: usize = 3;
pub const EXHAUSTIVE_MAX_PARTIES: usize = 9;
/// `2 √(2/3)`, the largest possible projection norm of a ±1 triple.
pub const MAX_PROJECTION_NORM: f64 = 1.632_993_161_855_452;

/// Three-setting angles `0, π/3, 2π/3`.
pub fn setting_angles() -> [f64; SETTINGS] {
    [0.0, PI / 3.0, 2.0 * PI / 3.0]
}

/// `M_1 = √(2/3) (cos 0, cos π/3, cos 2π/3)`.
pub fn basis_m1() -> [f64; SETTINGS] {
    let s = (2.0f64 / 3.0).sqrt();
    setting_angles().map(|a| s * a.cos())
}

/// `M_2 = √(2/3) (sin 0, sin π/3, sin 2π/3)`.
pub fn basis_m2() -> [f64; SETTINGS] {
    let s = (2.0f64 / 3.0).sqrt();
    setting_angles().map(|a| s * a.sin())
}

// ---------------------------------------------------------------------------
// Strategies

/// Predetermined ±1 outcomes of every observer at each of the three settings;
/// one hidden-variable value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    signs: Vec<[i8; SETTINGS]>,
}

impl DeterministicStrategy {
    pub fn new(signs: Vec<[i8; SETTINGS]>) -> Result<Self> {
        if signs.iter().flatten().any(|&s| s != 1 && s != -1) {
            return Err(BellError::InvalidSign);
        }
        Ok(DeterministicStrategy { signs })
    }

    pub fn constant(n_parties: usize, sign: i8) -> Result<Self> {
        Self::new(vec![[sign; SETTINGS]; n_parties])
    }

    /// Decodes a packed index: bit `3j + l` set means observer `j` answers
    /// −1 at setting `l`.
    pub fn from_packed(n_parties: usize, packed: u64) -> Self {
        let signs = (0..n_parties)
            .map(|j| pattern_signs(((packed >> (SETTINGS * j)) & 0b111) as u8))
            .collect();
        DeterministicStrategy { signs }
    }

    pub fn packed(&self) -> u64 {
        self.signs
            .iter()
            .enumerate()
            .map(|(j, s)| (pattern_bits(s) as u64) << (SETTINGS * j))
            .fold(0, |acc, b| acc | b)
    }

    pub fn random<R: Rng + ?Sized>(n_parties: usize, rng: &mut R) -> Self {
        let packed = rng.gen::<u64>() & mask(n_parties);
        Self::from_packed(n_parties, packed)
    }

    pub fn n_parties(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[[i8; SETTINGS]] {
        &self.signs
    }

    /// Same strategy with observer `party`'s outcomes negated.
    pub fn negate_observer(&self, party: usize) -> Self {
        let mut signs = self.signs.clone();
        signs[party] = signs[party].map(|s| -s);
        DeterministicStrategy { signs }
    }
}

fn mask(n_parties: usize) -> u64 {
    if SETTINGS * n_parties >= 64 {
        u64::MAX
    } else {
        (1u64 << (SETTINGS * n_parties)) - 1
    }
}

fn pattern_signs(bits: u8) -> [i8; SETTINGS] {
    [0, 1, 2].map(|l| if bits >> l & 1 == 1 { -1 } else { 1 })
}

fn pattern_bits(signs: &[i8; SETTINGS]) -> u8 {
    signs
        .iter()
        .enumerate()
        .fold(0, |acc, (l, &s)| acc | (((s < 0) as u8) << l))
}

/// Finite mixture `Σ_k w_k λ_k` of deterministic strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexLhvModel {
    strategies: Vec<DeterministicStrategy>,
    weights: Vec<f64>,
}

impl ConvexLhvModel {
    pub fn new(strategies: Vec<DeterministicStrategy>, weights: Vec<f64>) -> Result<Self> {
        if strategies.is_empty() || strategies.len() != weights.len() {
            return Err(BellError::InvalidWeights(format!(
                "{} strategies, {} weights",
                strategies.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BellError::InvalidWeights("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(BellError::InvalidWeights(format!("weights sum to {total}")));
        }
        let n = strategies[0].n_parties();
        if strategies.iter().any(|s| s.n_parties() != n) {
            return Err(BellError::InvalidWeights("strategies differ in party count".into()));
        }
        Ok(ConvexLhvModel {
            strategies,
            weights,
        })
    }

    pub fn strategies(&self) -> &[DeterministicStrategy] {
        &self.strategies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

// ---------------------------------------------------------------------------
// Inner products

/// Contracts observer `party` of a base-3 grid array with per-setting weights.
fn contract_setting(data: &[f64], party: usize, weights: [f64; SETTINGS]) -> Vec<f64> {
    let stride = SETTINGS.pow(party as u32);
    let len = data.len() / SETTINGS;
    (0..len)
        .map(|idx| {
            let low = idx % stride;
            let high = idx / stride;
            let base = high * stride * SETTINGS + low;
            weights[0] * data[base]
                + weights[1] * data[base + stride]
                + weights[2] * data[base + 2 * stride]
        })
        .collect()
}

fn sign_weights(signs: &[i8; SETTINGS]) -> [f64; SETTINGS] {
    signs.map(f64::from)
}

fn check_three_setting(tensor: &CorrelationTensor, grid: &SettingGrid) -> Result<()> {
    grid.check_tensor(tensor)?;
    if grid.n_settings() != SETTINGS {
        return Err(BellError::NotThreeSetting(grid.n_settings()));
    }
    Ok(())
}

/// Evaluates `(E_λ, E)` for many strategies against one precomputed grid of
/// correlation values.
#[derive(Debug, Clone)]
pub struct LhvEvaluator {
    values: GridValues,
}

impl LhvEvaluator {
    pub fn new(tensor: &CorrelationTensor, grid: &SettingGrid) -> Result<Self> {
        check_three_setting(tensor, grid)?;
        Ok(LhvEvaluator {
            values: GridValues::compute(tensor, grid)?,
        })
    }

    pub fn n_parties(&self) -> usize {
        self.values.n_parties()
    }

    pub fn grid_values(&self) -> &GridValues {
        &self.values
    }

    /// `Σ_{l_1...l_N} I_1(l_1) ⋯ I_N(l_N) E(l_1, ..., l_N)`.
    pub fn inner_product(&self, strategy: &DeterministicStrategy) -> Result<f64> {
        if strategy.n_parties() != self.n_parties() {
            return Err(BellError::SizeMismatch {
                what: "strategy",
                expected: self.n_parties(),
                found: strategy.n_parties(),
            });
        }
        let mut data = self.values.values().to_vec();
        for (party, signs) in strategy.signs().iter().enumerate().rev() {
            data = contract_setting(&data, party, sign_weights(signs));
        }
        Ok(data[0])
    }

    /// Local field on observer `party`: the 3-vector left after contracting
    /// every other observer with its signs.
    fn local_field(&self, strategy: &DeterministicStrategy, party: usize) -> [f64; SETTINGS] {
        let mut data = self.values.values().to_vec();
        for (p, signs) in strategy.signs().iter().enumerate().rev() {
            if p != party {
                data = contract_setting(&data, p, sign_weights(signs));
            }
        }
        [data[0], data[1], data[2]]
    }
}

/// `(E_λ, E)` for a single hidden-variable value.
pub fn lhv_inner_product(
    strategy: &DeterministicStrategy,
    tensor: &CorrelationTensor,
    grid: &SettingGrid,
) -> Result<f64> {
    LhvEvaluator::new(tensor, grid)?.inner_product(strategy)
}

/// `(E_LR, E) = Σ_k w_k (E_{λ_k}, E)`.
pub fn mixture_inner_product(
    model: &ConvexLhvModel,
    tensor: &CorrelationTensor,
    grid: &SettingGrid,
) -> Result<f64> {
    let eval = LhvEvaluator::new(tensor, grid)?;
    model
        .strategies
        .iter()
        .zip(&model.weights)
        .map(|(s, w)| eval.inner_product(s).map(|v| w * v))
        .sum()
}

// ---------------------------------------------------------------------------
// Maximization

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    Alternating,
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::Exhaustive => "exhaustive",
            SearchMode::Alternating => "alternating",
        })
    }
}

impl FromStr for SearchMode {
    type Err = BellError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(SearchMode::Exhaustive),
            "alternating" => Ok(SearchMode::Alternating),
            other => Err(BellError::UnknownMethod(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LhvSearchOptions {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for LhvSearchOptions {
    fn default() -> Self {
        LhvSearchOptions {
            restarts: 64,
            max_sweeps: 1000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LhvMaximum {
    pub value: f64,
    pub argmax: DeterministicStrategy,
    pub mode: SearchMode,
}

pub fn max_lhv_inner_product(
    tensor: &CorrelationTensor,
    grid: &SettingGrid,
    mode: SearchMode,
) -> Result<LhvMaximum> {
    max_lhv_inner_product_with(tensor, grid, mode, &LhvSearchOptions::default())
}

pub fn max_lhv_inner_product_with(
    tensor: &CorrelationTensor,
    grid: &SettingGrid,
    mode: SearchMode,
    options: &LhvSearchOptions,
) -> Result<LhvMaximum> {
    let n = tensor.n_parties();
    if mode == SearchMode::Exhaustive && n > EXHAUSTIVE_MAX_PARTIES {
        return Err(BellError::ExhaustiveTooLarge {
            got: n,
            max: EXHAUSTIVE_MAX_PARTIES,
        });
    }
    let eval = LhvEvaluator::new(tensor, grid)?;
    let (value, packed) = match mode {
        SearchMode::Exhaustive => exhaustive(&eval),
        SearchMode::Alternating => alternating(&eval, options),
    };
    Ok(LhvMaximum {
        value,
        argmax: DeterministicStrategy::from_packed(n, packed),
        mode,
    })
}

/// Larger value wins; equal values go to the smaller packed index.
fn better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1) {
        a
    } else {
        b
    }
}

/// Exact maximum over all `8^N` strategies.
///
/// Observers are fixed from the highest index down; observer 0 is resolved
/// in closed form (its best response to the local field `w` is `sign(w_l)`,
/// worth `Σ_l |w_l|`). Negating observers `N-1` and `0` together leaves the
/// value unchanged, so observer `N-1` only ranges over the four patterns
/// with a `+1` first entry.
fn exhaustive(eval: &LhvEvaluator) -> (f64, u64) {
    let n = eval.n_parties();
    let top = n - 1;

    fn descend(data: &[f64], party: usize, prefix: u64, n: usize) -> (f64, u64) {
        if party == 0 {
            let mut bits = 0u64;
            let mut value = 0.0;
            for (l, &w) in data.iter().enumerate() {
                if w < 0.0 {
                    bits |= 1 << l;
                }
                value += w.abs();
            }
            let packed = prefix | bits;
            // mirror partner: observers N-1 and 0 negated
            let mirror = packed ^ 0b111 ^ (0b111 << (SETTINGS * (n - 1)));
            return (value, packed.min(mirror));
        }
        (0u8..8)
            .map(|pattern| {
                let sub = contract_setting(data, party, sign_weights(&pattern_signs(pattern)));
                descend(&sub, party - 1, prefix | (pattern as u64) << (SETTINGS * party), n)
            })
            .fold((f64::NEG_INFINITY, u64::MAX), better)
    }

    let top_patterns = [0b000u8, 0b010, 0b100, 0b110];
    let tasks: Vec<(Vec<f64>, u64)> = top_patterns
        .iter()
        .map(|&pattern| {
            let sub = contract_setting(
                eval.values.values(),
                top,
                sign_weights(&pattern_signs(pattern)),
            );
            (sub, (pattern as u64) << (SETTINGS * top))
        })
        .collect();

    tasks
        .par_iter()
        .map(|(data, prefix)| descend(data, top - 1, *prefix, n))
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, u64::MAX), better)
}

/// Best-response ascent from random strategies: each observer in turn
/// switches to `sign` of its local field until no observer can improve.
fn alternating(eval: &LhvEvaluator, options: &LhvSearchOptions) -> (f64, u64) {
    let n = eval.n_parties();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let starts: Vec<DeterministicStrategy> = (0..options.restarts.max(1))
        .map(|_| DeterministicStrategy::random(n, &mut rng))
        .collect();

    starts
        .into_par_iter()
        .map(|mut strategy| {
            let mut value = eval.inner_product(&strategy).expect("sizes checked");
            for _ in 0..options.max_sweeps {
                let previous = value;
                for j in 0..n {
                    let field = eval.local_field(&strategy, j);
                    let response = field.map(|w| if w < 0.0 { -1 } else { 1 });
                    let gain: f64 = field.iter().map(|w| w.abs()).sum();
                    if gain > value {
                        strategy.signs[j] = response;
                        value = gain;
                    }
                }
                if value - previous <= 1e-12 {
                    break;
                }
            }
            (value, strategy.packed())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, u64::MAX), better)
}

// ---------------------------------------------------------------------------
// Projection onto span(M_1, M_2)

/// Norm and direction of one observer's outcome triple projected onto the
/// plane spanned by `M_1`, `M_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDecomposition {
    pub norm: f64,
    /// In `[0, 2π)`; zero when the projection vanishes.
    pub beta: f64,
}

/// `z = Σ_l s_l e^{i α^l}`; takes only the values `0, ±2, ±2e^{iπ/3}, ±2e^{i2π/3}`.
pub fn phase_sum(signs: &[i8; SETTINGS]) -> Complex64 {
    signs
        .iter()
        .zip(setting_angles())
        .map(|(&s, a)| f64::from(s) * Complex64::from_polar(1.0, a))
        .sum()
}

/// `(I · M_1, I · M_2)`.
pub fn plane_components(signs: &[i8; SETTINGS]) -> (f64, f64) {
    let dot = |m: [f64; SETTINGS]| -> f64 {
        signs.iter().zip(m).map(|(&s, c)| f64::from(s) * c).sum()
    };
    (dot(basis_m1()), dot(basis_m2()))
}

pub fn projection_decomposition(signs: &[i8; SETTINGS]) -> Result<ProjectionDecomposition> {
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(BellError::InvalidSign);
    }
    let z = phase_sum(signs);
    if z.norm() < 1e-12 {
        return Ok(ProjectionDecomposition {
            norm: 0.0,
            beta: 0.0,
        });
    }
    Ok(ProjectionDecomposition {
        norm: (2.0f64 / 3.0).sqrt() * z.norm(),
        beta: z.arg().rem_euclid(TAU),
    })
}

/// `(E_λ, E)` through the factored form
/// `(3/2)^(N/2) Π_j ‖I_j‖ · E(β_1, ..., β_N)`.
pub fn factored_inner_product(
    strategy: &DeterministicStrategy,
    tensor: &CorrelationTensor,
    grid: &SettingGrid,
) -> Result<f64> {
    check_three_setting(tensor, grid)?;
    if strategy.n_parties() != tensor.n_parties() {
        return Err(BellError::SizeMismatch {
            what: "strategy",
            expected: tensor.n_parties(),
            found: strategy.n_parties(),
        });
    }
    let parts = strategy
        .signs()
        .iter()
        .map(projection_decomposition)
        .collect::<Result<Vec<_>>>()?;
    let norm_product: f64 = parts.iter().map(|p| p.norm).product();
    if norm_product == 0.0 {
        return Ok(0.0);
    }
    let betas = DirectionSet::new(parts.iter().map(|p| p.beta).collect());
    let prefactor = 1.5f64.powf(tensor.n_parties() as f64 / 2.0);
    Ok(prefactor * norm_product * evaluate(tensor, &betas)?)
}

// ---------------------------------------------------------------------------
// Grid identities

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigIdentityReport {
    pub n_settings: usize,
    /// `Σ_l cos α^l sin α^l`, expected 0.
    pub cross_sum: f64,
    /// `Σ_l cos² α^l`, expected `n/2`.
    pub cos_sq_sum: f64,
    /// `Σ_l sin² α^l`, expected `n/2`.
    pub sin_sq_sum: f64,
    /// `|Σ_l e^{2i α^l}|`, expected 0.
    pub root_of_unity_abs: f64,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks the grid sums behind `(E, E) = (n/2)^N Σ T²` on `α^l = (l-1)π/n`.
pub fn trig_identity_suite(n_settings: usize) -> Result<TrigIdentityReport> {
    if n_settings < 2 {
        return Err(BellError::InvalidSettingCount(n_settings));
    }
    let angles: Vec<f64> = (0..n_settings)
        .map(|l| l as f64 * PI / n_settings as f64)
        .collect();
    let cross_sum: f64 = angles.iter().map(|a| a.cos() * a.sin()).sum();
    let cos_sq_sum: f64 = angles.iter().map(|a| a.cos().powi(2)).sum();
    let sin_sq_sum: f64 = angles.iter().map(|a| a.sin().powi(2)).sum();
    let root_of_unity_abs = angles
        .iter()
        .map(|a| Complex64::from_polar(1.0, 2.0 * a))
        .sum::<Complex64>()
        .norm();

    let half = n_settings as f64 / 2.0;
    let max_residual = [
        cross_sum.abs(),
        (cos_sq_sum - half).abs(),
        (sin_sq_sum - half).abs(),
        root_of_unity_abs,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let tolerance = 1e-14 * (n_settings as f64 / 3.0).max(1.0);

    Ok(TrigIdentityReport {
        n_settings,
        cross_sum,
        cos_sq_sum,
        sin_sq_sum,
        root_of_unity_abs,
        max_residual,
        tolerance,
        passed: max_residual <= tolerance,
    })
}

// ---------------------------------------------------------------------------
// Oracle report

/// Serialized result of an LHV maximization checked against `2^N T_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub max_value: f64,
    pub argmax_signs: Vec<[i8; SETTINGS]>,
    pub bound: f64,
    pub satisfied: bool,
    pub mode: SearchMode,
}

/// Slack on `max (E_λ, E) ≤ 2^N T_max`.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Maximizes the LHV inner product on the three-setting grid and compares it
/// with `2^N T_max`. `T_max` uses the GHZ closed form when it applies, grid
/// refinement up to six parties, and alternating ascent beyond.
pub fn run_oracle(
    tensor: &CorrelationTensor,
    mode: SearchMode,
    options: &LhvSearchOptions,
) -> Result<OracleReport> {
    let n = tensor.n_parties();
    let grid = SettingGrid::three_setting(n)?;
    let max = max_lhv_inner_product_with(tensor, &grid, mode, options)?;
    let method = if tensor.ghz_werner_visibility().is_some() {
        TMaxMethod::ClosedFormGhz
    } else if n <= GRID_REFINE_MAX_PARTIES {
        TMaxMethod::GridRefine
    } else {
        TMaxMethod::Alternating
    };
    let bound = bound_from_t_max(n, t_max(tensor, method)?);
    Ok(OracleReport {
        max_value: max.value,
        argmax_signs: max.argmax.signs().to_vec(),
        bound,
        satisfied: max.value <= bound + BOUND_TOLERANCE,
        mode,
    })
}
