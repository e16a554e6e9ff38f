//! Plane-restricted correlation tensors.
//!
//! A tensor for `N` parties stores the `2^N` components `T_{i_1...i_N}` with
//! `i_j ∈ {1, 2}` selecting the local in-plane axes `x_j^(1)`, `x_j^(2)`.
//! Components live in a flat array; party `j` owns bit `j` of the flat index
//! and the bit holds `i_j - 1`. Third-axis components are not represented.

use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};

/// Dense `2^N` correlation tensor restricted to the measurement plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr")]
pub struct CorrelationTensor {
    n_parties: usize,
    components: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Deserialize)]
struct TensorRepr {
    n_parties: usize,
    components: Vec<f64>,
    #[serde(default)]
    label: Option<String>,
}

impl TryFrom<TensorRepr> for CorrelationTensor {
    type Error = BellError;

    fn try_from(repr: TensorRepr) -> Result<Self> {
        let tensor = CorrelationTensor::new(repr.n_parties, repr.components)?;
        Ok(match repr.label {
            Some(label) => tensor.with_label(label),
            None => tensor,
        })
    }
}

impl CorrelationTensor {
    /// Builds a tensor from components in packed index order.
    ///
    /// Components are not required to lie in `[-1, 1]`; see
    /// [`CorrelationTensor::is_physical`].
    pub fn new(n_parties: usize, components: Vec<f64>) -> Result<Self> {
        if n_parties < 2 {
            return Err(BellError::TooFewParties(n_parties));
        }
        let expected = checked_len(n_parties)?;
        if components.len() != expected {
            return Err(BellError::ComponentCount {
                n_parties,
                expected,
                found: components.len(),
            });
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(BellError::NonFiniteComponent { index });
        }
        Ok(CorrelationTensor {
            n_parties,
            components,
            label: None,
        })
    }

    pub fn zeros(n_parties: usize) -> Result<Self> {
        Self::new(n_parties, vec![0.0; checked_len(n_parties)?])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Component `T_{i_1...i_N}` with 1-based axis indices.
    ///
    /// Panics if `axes` has the wrong length or contains values other than 1 or 2.
    pub fn get(&self, axes: &[u8]) -> f64 {
        self.components[packed_index(axes, self.n_parties)]
    }

    /// True when every component is a valid correlation, i.e. lies in `[-1, 1]`.
    pub fn is_physical(&self) -> bool {
        self.components.iter().all(|c| (-1.0..=1.0).contains(c))
    }

    /// If this tensor equals `ghz_werner_tensor(N, V)` for some `V` (within
    /// `1e-12` per component), returns that visibility.
    pub fn ghz_werner_visibility(&self) -> Option<f64> {
        let v = self.components[0];
        if !(0.0..=1.0).contains(&v) {
            return None;
        }
        let matches = self
            .components
            .iter()
            .enumerate()
            .all(|(idx, &c)| (c - ghz_component(idx, v)).abs() <= 1e-12);
        matches.then_some(v)
    }
}

fn checked_len(n_parties: usize) -> Result<usize> {
    // 2^N must stay addressable; 40 parties is already 8 TiB of doubles.
    if n_parties > 40 {
        return Err(BellError::PartiesOutOfRange {
            got: n_parties,
            min: 2,
            max: 40,
        });
    }
    Ok(1usize << n_parties)
}

pub(crate) fn packed_index(axes: &[u8], n_parties: usize) -> usize {
    assert_eq!(axes.len(), n_parties, "axis tuple length");
    axes.iter().enumerate().fold(0, |acc, (j, &a)| {
        assert!(a == 1 || a == 2, "axis index must be 1 or 2");
        acc | (((a - 1) as usize) << j)
    })
}

fn ghz_component(idx: usize, visibility: f64) -> f64 {
    let k = idx.count_ones();
    if k % 2 == 1 {
        0.0
    } else if (k / 2).is_multiple_of(2) {
        visibility
    } else {
        -visibility
    }
}

/// Plane-restricted correlation tensor of the GHZ–Werner state
/// `V |GHZ⟩⟨GHZ| + (1 - V) 1/2^N` with `x^(1) = x̂`, `x^(2) = ŷ`.
///
/// A component with `k` indices equal to 2 is `(-1)^(k/2) V` for even `k`
/// and zero for odd `k`; the sign rule matches the state-vector oracle in
/// [`crate::statevector`].
pub fn ghz_werner_tensor(n_parties: usize, visibility: f64) -> Result<CorrelationTensor> {
    if n_parties < 2 {
        return Err(BellError::TooFewParties(n_parties));
    }
    if !(0.0..=1.0).contains(&visibility) {
        return Err(BellError::InvalidVisibility(visibility));
    }
    let len = checked_len(n_parties)?;
    let components = (0..len).map(|idx| ghz_component(idx, visibility)).collect();
    Ok(CorrelationTensor::new(n_parties, components)?
        .with_label(format!("ghz-werner N={n_parties} V={visibility}")))
}

/// One in-plane measurement angle per party.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    angles: Vec<f64>,
}

impl DirectionSet {
    pub fn new(angles: Vec<f64>) -> Self {
        DirectionSet { angles }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// `(cos α, sin α)` for every party.
    pub fn component_pairs(&self) -> Vec<[f64; 2]> {
        self.angles.iter().map(|a| [a.cos(), a.sin()]).collect()
    }
}

impl From<Vec<f64>> for DirectionSet {
    fn from(angles: Vec<f64>) -> Self {
        DirectionSet::new(angles)
    }
}

/// Contracts one party's index against the 2-vector `c`.
///
/// `data` has `n` binary modes; the result has `n - 1` modes with the
/// remaining parties keeping their relative order.
pub(crate) fn contract_party(data: &[f64], party: usize, c: [f64; 2]) -> Vec<f64> {
    let half = data.len() / 2;
    let low_mask = (1usize << party) - 1;
    (0..half)
        .map(|idx| {
            let low = idx & low_mask;
            let high = (idx >> party) << (party + 1);
            let base = high | low;
            c[0] * data[base] + c[1] * data[base | (1 << party)]
        })
        .collect()
}

/// Full contraction `Σ_i T_i Π_j vectors[j][i_j - 1]` with arbitrary
/// (not necessarily unit) per-party 2-vectors.
pub fn contract(tensor: &CorrelationTensor, vectors: &[[f64; 2]]) -> Result<f64> {
    if vectors.len() != tensor.n_parties {
        return Err(BellError::SizeMismatch {
            what: "direction list",
            expected: tensor.n_parties,
            found: vectors.len(),
        });
    }
    let mut data = tensor.components.clone();
    for (party, &c) in vectors.iter().enumerate().rev() {
        data = contract_party(&data, party, c);
    }
    Ok(data[0])
}

/// Correlation `E(n_1, ..., n_N) = T · (n_1 ⊗ ... ⊗ n_N)` for in-plane
/// directions `n_j = cos α_j x^(1) + sin α_j x^(2)`.
pub fn evaluate(tensor: &CorrelationTensor, directions: &DirectionSet) -> Result<f64> {
    contract(tensor, &directions.component_pairs())
}

/// `Σ T²` over all `2^N` components (Neumaier-compensated).
pub fn sum_squared_components(tensor: &CorrelationTensor) -> f64 {
    let (sum, compensation) = tensor.components.iter().map(|c| c * c).fold(
        (0.0f64, 0.0f64),
        |(sum, comp), x| {
            let t = sum + x;
            let comp = if sum.abs() >= x.abs() {
                comp + ((sum - t) + x)
            } else {
                comp + ((x - t) + sum)
            };
            (t, comp)
        },
    );
    sum + compensation
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn ghz_two_party_components() {
        let t = ghz_werner_tensor(2, 1.0).unwrap();
        assert_eq!(t.get(&[1, 1]), 1.0);
        assert_eq!(t.get(&[2, 2]), -1.0);
        assert_eq!(t.get(&[1, 2]), 0.0);
        assert_eq!(t.get(&[2, 1]), 0.0);
    }

    #[test]
    fn ghz_three_party_components() {
        let t = ghz_werner_tensor(3, 0.5).unwrap();
        assert_eq!(t.get(&[1, 1, 1]), 0.5);
        for axes in [[1, 2, 2], [2, 1, 2], [2, 2, 1]] {
            assert_eq!(t.get(&axes), -0.5);
        }
        let nonzero = t.components().iter().filter(|c| **c != 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn ghz_nonzero_count_is_half() {
        for n in 2..=10 {
            let t = ghz_werner_tensor(n, 0.3).unwrap();
            let nonzero = t.components().iter().filter(|c| **c != 0.0).count();
            assert_eq!(nonzero, 1 << (n - 1));
        }
    }

    #[test]
    fn pure_noise_vanishes() {
        let t = ghz_werner_tensor(4, 0.0).unwrap();
        assert_eq!(t.components().len(), 16);
        assert!(t.components().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn ghz_rejects_bad_arguments() {
        assert_eq!(
            ghz_werner_tensor(1, 0.5).unwrap_err(),
            BellError::TooFewParties(1)
        );
        assert!(matches!(
            ghz_werner_tensor(3, 1.5),
            Err(BellError::InvalidVisibility(_))
        ));
        assert!(matches!(
            ghz_werner_tensor(3, -0.1),
            Err(BellError::InvalidVisibility(_))
        ));
        assert!(ghz_werner_tensor(3, f64::NAN).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let t = ghz_werner_tensor(2, 1.0).unwrap();
        let e = evaluate(&t, &vec![0.0, 0.0].into()).unwrap();
        assert_eq!(e, 1.0);
        let e = evaluate(&t, &vec![FRAC_PI_4, FRAC_PI_4].into()).unwrap();
        assert!(e.abs() < 1e-15);

        let z = CorrelationTensor::zeros(3).unwrap();
        assert_eq!(evaluate(&z, &vec![0.3, 1.2, -2.0].into()).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_rejects_length_mismatch() {
        let t = ghz_werner_tensor(3, 1.0).unwrap();
        assert!(matches!(
            evaluate(&t, &vec![0.0, 0.0].into()),
            Err(BellError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn contraction_matches_naive_sum() {
        // naive Σ_i T_i Π c over all components
        let comps: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let t = CorrelationTensor::new(4, comps.clone()).unwrap();
        let vecs = [[0.3, -1.1], [2.0, 0.5], [-0.7, 0.2], [1.0, 1.0]];
        let naive: f64 = comps
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                (0..4)
                    .map(|j| vecs[j][(idx >> j) & 1])
                    .product::<f64>()
                    * c
            })
            .sum();
        assert!((contract(&t, &vecs).unwrap() - naive).abs() < 1e-12);
    }

    #[test]
    fn sum_squared_examples() {
        let t = ghz_werner_tensor(3, 0.5).unwrap();
        assert!((sum_squared_components(&t) - 1.0).abs() < 1e-15);
        assert_eq!(sum_squared_components(&CorrelationTensor::zeros(5).unwrap()), 0.0);
        let t = ghz_werner_tensor(6, 0.1765).unwrap();
        let closed = 0.1765f64.powi(2) * 32.0;
        assert!((sum_squared_components(&t) - closed).abs() < 1e-12);
        assert!((closed - 0.996872).abs() < 1e-6);
    }

    #[test]
    fn new_validates_shape() {
        assert!(matches!(
            CorrelationTensor::new(3, vec![0.0; 7]),
            Err(BellError::ComponentCount { expected: 8, .. })
        ));
        assert!(matches!(
            CorrelationTensor::new(2, vec![0.0, f64::INFINITY, 0.0, 0.0]),
            Err(BellError::NonFiniteComponent { index: 1 })
        ));
        assert!(CorrelationTensor::new(1, vec![0.0; 2]).is_err());
    }

    #[test]
    fn physical_check_is_separate_from_construction() {
        let t = CorrelationTensor::new(2, vec![1.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(!t.is_physical());
        assert!(ghz_werner_tensor(5, 1.0).unwrap().is_physical());
    }

    #[test]
    fn ghz_detection() {
        let t = ghz_werner_tensor(5, 0.42).unwrap();
        assert_eq!(t.ghz_werner_visibility(), Some(0.42));
        let mut comps = t.components().to_vec();
        comps[3] += 0.01;
        let perturbed = CorrelationTensor::new(5, comps).unwrap();
        assert_eq!(perturbed.ghz_werner_visibility(), None);
        assert_eq!(CorrelationTensor::zeros(3).unwrap().ghz_werner_visibility(), Some(0.0));
    }

    #[test]
    fn json_round_trip_and_schema() {
        let t = ghz_werner_tensor(3, 0.5).unwrap();
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["n_parties"], 3);
        assert_eq!(json["components"].as_array().unwrap().len(), 8);
        assert_eq!(json["label"], "ghz-werner N=3 V=0.5");
        let back: CorrelationTensor = serde_json::from_value(json).unwrap();
        assert_eq!(back, t);

        let bad = r#"{"n_parties": 3, "components": [0, 0, 0]}"#;
        assert!(serde_json::from_str::<CorrelationTensor>(bad).is_err());
        let unlabeled = r#"{"n_parties": 2, "components": [0.25, 0, 0, -0.25]}"#;
        let t: CorrelationTensor = serde_json::from_str(unlabeled).unwrap();
        assert_eq!(t.label(), None);
    }

    #[test]
    fn basis_angles_select_components() {
        let comps: Vec<f64> = (0..8).map(|i| i as f64 / 10.0).collect();
        let t = CorrelationTensor::new(3, comps).unwrap();
        let e = evaluate(&t, &vec![PI / 2.0, 0.0, PI / 2.0].into()).unwrap();
        assert!((e - t.get(&[2, 1, 2])).abs() < 1e-15);
    }
}
