//! Forward-only versions of the elementwise and probability operations.
//!
//! These evaluate the same formulas the [`Tape`](super::Tape) records, for
//! callers that only need values.

use super::tape::{cross_entropy_values, softmax_values};
use super::tensor::Tensor;
use crate::error::Result;

/// Elementwise `max(0, x)`.
pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|v| v.max(0.0)).collect();
    Tensor::from_vec(x.shape(), data).expect("same shape")
}

/// `S_i = exp(V_i) / Σ_j exp(V_j)`, evaluated after subtracting `max_j V_j`.
///
/// ```
/// use citeaz::ndnet::{softmax, Tensor};
///
/// let s = softmax(&Tensor::vector(vec![0.0, 0.0])).unwrap();
/// assert_eq!(s.data(), &[0.5, 0.5]);
/// ```
pub fn softmax(v: &Tensor) -> Result<Tensor> {
    Ok(Tensor::from_vec(v.shape(), softmax_values(v.data())?).expect("same shape"))
}

/// `−Σ p_i ln p̂_i`, with `p̂_i` clamped below at [`LOG_CLAMP`](super::LOG_CLAMP).
pub fn cross_entropy(p: &Tensor, p_hat: &Tensor) -> Result<f64> {
    cross_entropy_values(p.data(), p_hat.data())
}

/// Index of the largest value; the earliest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn relu_examples() {
        let y = relu(&Tensor::vector(vec![-2.0, 0.0, 3.0]));
        assert_eq!(y.data(), &[0.0, 0.0, 3.0]);
        let y = relu(&Tensor::vector(vec![-1.0, -0.5, -7.0]));
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn softmax_examples() {
        let s = softmax(&Tensor::vector(vec![1.0; 5])).unwrap();
        for v in s.data() {
            assert!((v - 0.2).abs() < 1e-15);
        }
        let a = softmax(&Tensor::vector(vec![2.0, 1.0])).unwrap();
        let b = softmax(&Tensor::vector(vec![12.0, 11.0])).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(softmax(&Tensor::vector(vec![f64::NAN, 1.0])).is_err());
        assert!(softmax(&Tensor::vector(vec![f64::INFINITY])).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let p = Tensor::vector(vec![0.0, 1.0]);
        assert_eq!(cross_entropy(&p, &Tensor::vector(vec![0.0, 1.0])).unwrap(), 0.0);
        let l = cross_entropy(&p, &Tensor::vector(vec![0.5, 0.5])).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let p5 = Tensor::vector(vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let l = cross_entropy(&p5, &Tensor::vector(vec![0.2; 5])).unwrap();
        assert!((l - 5f64.ln()).abs() < 1e-12);
        assert!((l - 1.609438).abs() < 1e-6);
        assert!(cross_entropy(&p, &Tensor::vector(vec![1.0])).is_err());
        // clamped, still finite
        let l = cross_entropy(&p, &Tensor::vector(vec![1.0, 0.0])).unwrap();
        assert!((l - (-(1e-12f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[0.2, 0.2, 0.2]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }

    proptest! {
        #[test]
        fn softmax_normalises_and_is_shift_invariant(
            v in prop::collection::vec(-30.0f64..30.0, 1..12),
            shift in -50.0f64..50.0,
        ) {
            let s = softmax(&Tensor::vector(v.clone())).unwrap();
            let total: f64 = s.data().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(s.data().iter().all(|&x| x >= 0.0));
            let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
            let t = softmax(&Tensor::vector(shifted.clone())).unwrap();
            for (a, b) in s.data().iter().zip(t.data()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert_eq!(argmax(&v), argmax(&shifted));
        }

        #[test]
        fn cross_entropy_is_nonnegative(
            logits in prop::collection::vec(-10.0f64..10.0, 2..8),
            class in 0usize..8,
        ) {
            let n = logits.len();
            let mut p = vec![0.0; n];
            p[class % n] = 1.0;
            let p_hat = softmax(&Tensor::vector(logits)).unwrap();
            let l = cross_entropy(&Tensor::vector(p), &p_hat).unwrap();
            prop_assert!(l >= 0.0);
        }
    }
}
