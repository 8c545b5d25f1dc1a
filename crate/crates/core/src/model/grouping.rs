use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

/// Row-distance statistics of an embedding matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupingReport {
    /// Mean Euclidean distance over sampled same-label pairs (NaN if none).
    pub mean_intra: f64,
    /// Mean Euclidean distance over sampled different-label pairs (NaN if none).
    pub mean_inter: f64,
    pub intra_pairs: usize,
    pub inter_pairs: usize,
    /// `max |Z(u,p) - Z(v,p)|` over the given twin pairs; 0 when there are none.
    pub twin_max_deviation: f64,
}

pub fn row_distance(z: &DenseMatrix, u: usize, v: usize) -> f64 {
    z.row(u)
        .iter()
        .zip(z.row(v))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Samples `pair_sample` distinct-node pairs uniformly and stratifies their
/// row distances by label agreement.
pub fn grouping_report<R: Rng + ?Sized>(
    z: &DenseMatrix,
    labels: &[usize],
    pair_sample: usize,
    twins: &[(usize, usize)],
    rng: &mut R,
) -> Result<GroupingReport> {
    let n = z.rows();
    if pair_sample == 0 {
        return Err(Error::param("pair_sample must be at least 1"));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} rows", labels.len())));
    }
    if n < 2 {
        return Err(Error::param("grouping needs at least two rows"));
    }
    let (mut intra, mut inter) = (0.0, 0.0);
    let (mut n_intra, mut n_inter) = (0usize, 0usize);
    for _ in 0..pair_sample {
        let u = rng.random_range(0..n);
        let mut v = rng.random_range(0..n - 1);
        if v >= u {
            v += 1;
        }
        let d = row_distance(z, u, v);
        if labels[u] == labels[v] {
            intra += d;
            n_intra += 1;
        } else {
            inter += d;
            n_inter += 1;
        }
    }
    let mut twin_max = 0.0f64;
    for &(u, v) in twins {
        if u >= n || v >= n {
            return Err(Error::param(format!("twin pair ({u}, {v}) out of range")));
        }
        for (a, b) in z.row(u).iter().zip(z.row(v)) {
            twin_max = twin_max.max((a - b).abs());
        }
    }
    Ok(GroupingReport {
        mean_intra: intra / n_intra as f64,
        mean_inter: inter / n_inter as f64,
        intra_pairs: n_intra,
        inter_pairs: n_inter,
        twin_max_deviation: twin_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::rng_from_seed;

    #[test]
    fn identical_rows_have_zero_distance() {
        let z = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let r = grouping_report(&z, &[0, 0, 1], 50, &[(0, 1)], &mut rng_from_seed(1)).unwrap();
        assert_eq!(r.mean_intra, 0.0);
        assert_eq!(r.mean_inter, 0.0);
        assert_eq!(r.twin_max_deviation, 0.0);
        assert_eq!(r.intra_pairs + r.inter_pairs, 50);
    }

    #[test]
    fn clustered_rows_separate() {
        let z = DenseMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![5.0, 5.0],
            vec![5.0, 5.1],
        ])
        .unwrap();
        let r = grouping_report(&z, &[0, 0, 1, 1], 200, &[(2, 3)], &mut rng_from_seed(2)).unwrap();
        assert!(r.mean_intra < r.mean_inter);
        assert!((r.twin_max_deviation - 0.1).abs() < 1e-12);
        assert!(grouping_report(&z, &[0, 0, 1, 1], 0, &[], &mut rng_from_seed(2)).is_err());
    }
}
