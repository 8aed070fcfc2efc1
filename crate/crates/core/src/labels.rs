//! One-hot targets and label smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over classes. Holds both hard (one-hot) and soft
/// targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(Vec<f64>);

impl LabelVector {
    /// Validates non-negativity and unit sum (within 1e-9).
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidLabel("empty label vector".into()));
        }
        if let Some(c) = components.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidLabel(format!("component {c} is not a probability")));
        }
        let sum: f64 = components.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidLabel(format!("components sum to {sum}")));
        }
        Ok(Self(components))
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// True when exactly one component is 1 and the rest are 0.
    pub fn is_one_hot(&self) -> bool {
        self.0.iter().filter(|&&c| c == 1.0).count() == 1
            && self.0.iter().all(|&c| c == 0.0 || c == 1.0)
    }
}

/// Smoothing coefficient in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SmoothingAlpha(f64);

impl SmoothingAlpha {
    pub const ZERO: SmoothingAlpha = SmoothingAlpha(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Config(format!("smoothing alpha {value} outside [0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SmoothingAlpha {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SmoothingAlpha> for f64 {
    fn from(a: SmoothingAlpha) -> f64 {
        a.0
    }
}

pub fn one_hot(class_index: usize, n_classes: usize) -> Result<LabelVector> {
    if n_classes < 2 || class_index >= n_classes {
        return Err(Error::ClassOutOfRange {
            index: class_index,
            n_classes,
        });
    }
    let mut v = vec![0.0; n_classes];
    v[class_index] = 1.0;
    Ok(LabelVector(v))
}

/// Mixes `label` with the uniform distribution: `(1 - alpha) * y + alpha / N`.
///
/// Works for soft inputs too, and smoothing composes:
/// `smooth(smooth(y, a), b) == smooth(y, a + b - a * b)`.
pub fn smooth(label: &LabelVector, alpha: SmoothingAlpha) -> LabelVector {
    let a = alpha.value();
    let uniform = a / label.n_classes() as f64;
    LabelVector(label.0.iter().map(|&y| (1.0 - a) * y + uniform).collect())
}

/// Index of the largest component; the smallest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_class(label: &LabelVector) -> usize {
    argmax(&label.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alpha(a: f64) -> SmoothingAlpha {
        SmoothingAlpha::new(a).unwrap()
    }

    #[test]
    fn one_hot_cases() {
        assert_eq!(one_hot(1, 2).unwrap().as_slice(), &[0.0, 1.0]);
        assert_eq!(
            one_hot(0, 6).unwrap().as_slice(),
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert!(matches!(one_hot(2, 2), Err(Error::ClassOutOfRange { .. })));
        assert!(one_hot(0, 1).is_err());
    }

    #[test]
    fn smooth_binary() {
        let s = smooth(&one_hot(0, 2).unwrap(), alpha(0.1));
        assert!((s.as_slice()[0] - 0.95).abs() < 1e-15);
        assert!((s.as_slice()[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn smooth_zero_alpha_is_identity() {
        let y = LabelVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(smooth(&y, SmoothingAlpha::ZERO), y);
    }

    #[test]
    fn smooth_six_classes() {
        let s = smooth(&one_hot(2, 6).unwrap(), alpha(0.3));
        for (i, &c) in s.as_slice().iter().enumerate() {
            let want = if i == 2 { 0.75 } else { 0.05 };
            assert!((c - want).abs() < 1e-15, "{i}: {c}");
        }
    }

    #[test]
    fn argmax_ties_pick_first() {
        let v = |xs: &[f64]| LabelVector::new(xs.to_vec()).unwrap();
        assert_eq!(argmax_class(&v(&[0.95, 0.05])), 0);
        assert_eq!(argmax_class(&v(&[0.5, 0.5])), 0);
        assert_eq!(argmax_class(&v(&[0.05, 0.05, 0.9])), 2);
    }

    #[test]
    fn label_vector_validation() {
        assert!(LabelVector::new(vec![0.5, 0.4]).is_err());
        assert!(LabelVector::new(vec![1.5, -0.5]).is_err());
        assert!(LabelVector::new(vec![]).is_err());
        assert!(SmoothingAlpha::new(1.0).is_err());
        assert!(SmoothingAlpha::new(-0.1).is_err());
    }

    fn soft_label(n: usize) -> impl Strategy<Value = LabelVector> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter_map("zero mass", |raw| {
            let total: f64 = raw.iter().sum();
            (total > 1e-6).then(|| {
                let mut v: Vec<f64> = raw.iter().map(|x| x / total).collect();
                // push the rounding residue onto the largest component
                let residue = 1.0 - v.iter().sum::<f64>();
                let i = argmax(&v);
                v[i] += residue;
                LabelVector::new(v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn smoothing_preserves_sum(y in (2usize..10).prop_flat_map(soft_label), a in 0.0f64..0.999) {
            let s = smooth(&y, alpha(a));
            prop_assert!((s.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn smoothing_composes(y in (2usize..10).prop_flat_map(soft_label), a in 0.0f64..0.99, b in 0.0f64..0.99) {
            let twice = smooth(&smooth(&y, alpha(a)), alpha(b));
            let once = smooth(&y, alpha(a + b - a * b));
            for (x, z) in twice.as_slice().iter().zip(once.as_slice()) {
                prop_assert!((x - z).abs() < 1e-12);
            }
        }

        #[test]
        fn smoothing_keeps_argmax(n in 2usize..12, i in 0usize..12, frac in 0.0f64..1.0) {
            let i = i % n;
            let limit = (n as f64 - 1.0) / n as f64;
            let s = smooth(&one_hot(i, n).unwrap(), alpha(frac * limit));
            prop_assert_eq!(argmax_class(&s), i);
        }
    }
}
