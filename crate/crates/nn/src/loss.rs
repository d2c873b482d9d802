use crate::error::{shape_err, Result};
use crate::{Real, Tensor};

/// Squared error summed over output elements and averaged over the batch
/// (leading axis), with its gradient `2 (pred - target) / batch`.
pub fn mse_loss<F: Real>(pred: &Tensor<F>, target: &Tensor<F>) -> Result<(F, Tensor<F>)> {
    if pred.shape() != target.shape() {
        return Err(shape_err("mse target", pred.shape(), target.shape()));
    }
    let n = F::from_usize(pred.shape().first().copied().unwrap_or(1).max(1)).unwrap();
    let diff = pred - target;
    let loss = diff.iter().fold(F::zero(), |acc, &d| acc + d * d) / n;
    let two = F::lit(2.0);
    let grad = diff.mapv(|d| two * d / n);
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn known_values() {
        let p = array![[1.0], [3.0]].into_dyn();
        let t = array![[0.0], [0.0]].into_dyn();
        let (l, g) = mse_loss::<f64>(&p, &t).unwrap();
        assert_eq!(l, 5.0);
        assert_eq!(g, array![[1.0], [3.0]].into_dyn());
    }

    #[test]
    fn single_record() {
        let (l, g) = mse_loss::<f64>(&array![[0.0]].into_dyn(), &array![[1.0]].into_dyn()).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g[[0, 0]], -2.0);
    }

    #[test]
    fn shape_mismatch() {
        let p = array![[1.0]].into_dyn();
        let t = array![1.0].into_dyn();
        assert!(mse_loss::<f64>(&p, &t).is_err());
    }
}
