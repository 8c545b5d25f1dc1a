use super::SimMatrix;
use crate::error::{Error, Result};

/// Counts of `log10(score)` over off-diagonal pairs, split by whether the two
/// endpoints share a label. Scores below `floor` are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    pub floor: f64,
    /// `bins + 1` bin edges in log10 space, from `log10(floor)` to 0.
    pub edges: Vec<f64>,
    pub intra: Vec<usize>,
    pub inter: Vec<usize>,
}

impl ScoreHistogram {
    pub fn retained_pairs(&self) -> usize {
        self.intra.iter().sum::<usize>() + self.inter.iter().sum::<usize>()
    }

    /// Tab-separated rows: `lo hi intra inter`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("log10_lo\tlog10_hi\tintra\tinter\n");
        for i in 0..self.intra.len() {
            s.push_str(&format!(
                "{:.4}\t{:.4}\t{}\t{}\n",
                self.edges[i],
                self.edges[i + 1],
                self.intra[i],
                self.inter[i]
            ));
        }
        s
    }
}

pub fn class_score_histogram(
    s: &SimMatrix,
    labels: &[usize],
    bins: usize,
    floor: f64,
) -> Result<ScoreHistogram> {
    let n = s.n();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} nodes", labels.len())));
    }
    if bins == 0 || !(floor > 0.0 && floor < 1.0) {
        return Err(Error::param("histogram needs bins >= 1 and floor in (0, 1)"));
    }
    let lo = floor.log10();
    let width = -lo / bins as f64;
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut intra = vec![0; bins];
    let mut inter = vec![0; bins];
    for u in 0..n {
        for v in 0..n {
            let x = s.get(u, v);
            if u == v || x < floor {
                continue;
            }
            let bin = (((x.log10() - lo) / width) as usize).min(bins - 1);
            if labels[u] == labels[v] {
                intra[bin] += 1;
            } else {
                inter[bin] += 1;
            }
        }
    }
    Ok(ScoreHistogram {
        floor,
        edges,
        intra,
        inter,
    })
}
