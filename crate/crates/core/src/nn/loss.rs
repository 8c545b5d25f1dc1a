use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Row-wise softmax with max-subtraction.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        row.iter_mut().for_each(|x| *x /= sum);
    }
    out
}

/// Mean negative log-likelihood over the rows in `mask`, and its gradient
/// with respect to `logits` (zero outside the mask).
pub fn softmax_cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, DenseMatrix)> {
    if mask.is_empty() {
        return Err(Error::param("cross-entropy mask is empty"));
    }
    if labels.len() != logits.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    let classes = logits.cols();
    let scale = 1.0 / mask.len() as f64;
    let mut grad = DenseMatrix::zeros(logits.rows(), classes);
    let mut loss = 0.0;
    for &i in mask {
        if i >= logits.rows() {
            return Err(Error::param(format!("mask index {i} out of range")));
        }
        let y = labels[i];
        if y >= classes {
            return Err(Error::param(format!("label {y} at row {i} exceeds {classes} classes")));
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&x| (x - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        let g = grad.row_mut(i);
        for (j, (gj, &x)) in g.iter_mut().zip(row).enumerate() {
            let p = (x - log_z).exp();
            *gj = scale * (p - if j == y { 1.0 } else { 0.0 });
        }
    }
    let loss = loss * scale;
    if !loss.is_finite() {
        return Err(Error::NonFinite("cross-entropy loss".into()));
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_logits_give_log_classes() {
        let logits = DenseMatrix::zeros(4, 5);
        let (loss, _) = softmax_cross_entropy(&logits, &[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn saturated_correct_logits_give_zero_loss() {
        let mut logits = DenseMatrix::zeros(2, 3);
        logits[(0, 1)] = 50.0;
        logits[(1, 2)] = 50.0;
        let (loss, _) = softmax_cross_entropy(&logits, &[1, 2], &[0, 1]).unwrap();
        assert!(loss < 1e-12, "loss {loss}");
    }

    #[test]
    fn empty_mask_rejected() {
        let logits = DenseMatrix::zeros(2, 2);
        assert!(softmax_cross_entropy(&logits, &[0, 1], &[]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = (0..15).map(|_| rng.random_range(-2.0..2.0)).collect();
        let logits = DenseMatrix::from_vec(5, 3, data).unwrap();
        let labels = [0, 2, 1, 1, 0];
        let mask = [0, 1, 3, 4];
        let (_, grad) = softmax_cross_entropy(&logits, &labels, &mask).unwrap();
        let h = 1e-5;
        for i in 0..5 {
            for j in 0..3 {
                let mut plus = logits.clone();
                plus[(i, j)] += h;
                let mut minus = logits.clone();
                minus[(i, j)] -= h;
                let fd = (softmax_cross_entropy(&plus, &labels, &mask).unwrap().0
                    - softmax_cross_entropy(&minus, &labels, &mask).unwrap().0)
                    / (2.0 * h);
                let g = grad[(i, j)];
                let rel = (fd - g).abs() / fd.abs().max(g.abs()).max(1e-8);
                assert!(rel < 1e-6 || (fd - g).abs() < 1e-10, "({i},{j}) fd {fd} vs {g}");
            }
        }
        // row 2 is outside the mask
        assert!(grad.row(2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let data = (0..40).map(|_| rng.random_range(-30.0..30.0)).collect();
        let p = softmax_rows(&DenseMatrix::from_vec(10, 4, data).unwrap());
        for i in 0..10 {
            assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
