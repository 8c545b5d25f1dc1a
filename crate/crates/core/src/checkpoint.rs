//! Plain-text checkpoints.
//!
//! ```text
//! simga-checkpoint 1
//! hyper delta 0.5
//! ...
//! tensor mlp_f.0.weight 16 64
//! <16 lines of 64 values>
//! tensor mlp_f.0.bias 1 64
//! <1 line>
//! ...
//! end
//! ```
//!
//! Values use 17 significant digits so a save/load round trip is exact.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::format::fmt_g17;
use crate::model::{HyperParams, SimChoice, SimgaParams};
use crate::nn::{DenseMatrix, LinearLayer, Mlp};

const MAGIC: &str = "simga-checkpoint";
const VERSION: u32 = 1;

fn sim_choice_name(c: SimChoice) -> &'static str {
    match c {
        SimChoice::Auto => "auto",
        SimChoice::Exact => "exact",
        SimChoice::Approx => "approx",
    }
}

fn hyper_lines(hp: &HyperParams) -> Vec<(&'static str, String)> {
    vec![
        ("delta", fmt_g17(hp.delta)),
        ("alpha", fmt_g17(hp.alpha)),
        ("decay", fmt_g17(hp.decay)),
        ("topk", hp.topk.to_string()),
        ("eps", fmt_g17(hp.eps)),
        ("hidden", hp.hidden.to_string()),
        ("main_depth", hp.main_depth.to_string()),
        ("lr", fmt_g17(hp.lr)),
        ("dropout", fmt_g17(hp.dropout)),
        ("weight_decay", fmt_g17(hp.weight_decay)),
        ("max_epochs", hp.max_epochs.to_string()),
        (
            "patience",
            hp.patience.map_or("inf".to_string(), |p| p.to_string()),
        ),
        ("seed", hp.seed.to_string()),
        ("sim_mode", sim_choice_name(hp.sim_mode).to_string()),
    ]
}

fn write_matrix<W: Write>(w: &mut W, name: &str, m: &DenseMatrix) -> std::io::Result<()> {
    writeln!(w, "tensor {name} {} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&x| fmt_g17(x)).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(
    params: &SimgaParams,
    hp: &HyperParams,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "{MAGIC} {VERSION}")?;
    for (k, v) in hyper_lines(hp) {
        writeln!(w, "hyper {k} {v}")?;
    }
    for (branch, mlp) in [
        ("mlp_f", &params.mlp_f),
        ("mlp_a", &params.mlp_a),
        ("mlp_h", &params.mlp_h),
    ] {
        for (i, layer) in mlp.layers.iter().enumerate() {
            write_matrix(&mut w, &format!("{branch}.{i}.weight"), &layer.weight)?;
            let bias = DenseMatrix::from_vec(1, layer.bias.len(), layer.bias.clone())
                .expect("row vector");
            write_matrix(&mut w, &format!("{branch}.{i}.bias"), &bias)?;
        }
    }
    writeln!(w, "end")
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(self.err(e.to_string())),
            None => Err(self.err("unexpected end of checkpoint".into())),
        }
    }

    fn err(&self, message: String) -> Error {
        Error::Parse {
            line: self.line_no,
            message,
        }
    }
}

pub fn read_checkpoint<R: BufRead>(reader: R) -> Result<(SimgaParams, HyperParams)> {
    let mut lines = Lines {
        inner: reader.lines(),
        line_no: 0,
    };
    let header = lines.next_line()?;
    let version = header
        .strip_prefix(MAGIC)
        .map(str::trim)
        .ok_or_else(|| lines.err(format!("not a checkpoint (header '{header}')")))?;
    if version != VERSION.to_string() {
        return Err(lines.err(format!("unsupported checkpoint version '{version}'")));
    }

    let mut hp = HyperParams::default();
    let mut branches: [Vec<LinearLayer>; 3] = Default::default();
    let mut pending_weight: Option<(usize, usize, DenseMatrix)> = None;
    loop {
        let line = lines.next_line()?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end"] => break,
            ["hyper", key, value] => hp.set(key, value).map_err(|e| lines.err(e.to_string()))?,
            ["tensor", name, rows, cols] => {
                let rows: usize = rows.parse().map_err(|_| lines.err("bad row count".into()))?;
                let cols: usize = cols.parse().map_err(|_| lines.err("bad column count".into()))?;
                let (branch, index, kind) = parse_name(name).ok_or_else(|| lines.err(format!("bad tensor name '{name}'")))?;
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let row = lines.next_line()?;
                    let before = data.len();
                    for tok in row.split_whitespace() {
                        data.push(
                            tok.parse::<f64>()
                                .map_err(|_| lines.err(format!("bad value '{tok}'")))?,
                        );
                    }
                    if data.len() - before != cols {
                        return Err(lines.err(format!("expected {cols} values")));
                    }
                }
                let m = DenseMatrix::from_vec(rows, cols, data)?;
                match kind {
                    "weight" => {
                        if pending_weight.is_some() {
                            return Err(lines.err("weight without bias".into()));
                        }
                        pending_weight = Some((branch, index, m));
                    }
                    _ => {
                        let (wb, wi, weight) = pending_weight
                            .take()
                            .ok_or_else(|| lines.err("bias without weight".into()))?;
                        if wb != branch || wi != index || branches[branch].len() != index {
                            return Err(lines.err(format!("tensor '{name}' out of order")));
                        }
                        if rows != 1 || cols != weight.cols() {
                            return Err(lines.err(format!("bias shape {rows}x{cols} does not fit weight")));
                        }
                        branches[branch].push(LinearLayer {
                            weight,
                            bias: m.into_vec(),
                        });
                    }
                }
            }
            _ => return Err(lines.err(format!("unexpected line '{line}'"))),
        }
    }
    if pending_weight.is_some() || branches.iter().any(Vec::is_empty) {
        return Err(lines.err("checkpoint is missing tensors".into()));
    }
    let [f, a, h] = branches;
    let params = SimgaParams {
        mlp_f: Mlp { layers: f },
        mlp_a: Mlp { layers: a },
        mlp_h: Mlp { layers: h },
    };
    hp.validate()?;
    Ok((params, hp))
}

fn parse_name(name: &str) -> Option<(usize, usize, &str)> {
    let mut parts = name.split('.');
    let branch = match parts.next()? {
        "mlp_f" => 0,
        "mlp_a" => 1,
        "mlp_h" => 2,
        _ => return None,
    };
    let index = parts.next()?.parse().ok()?;
    let kind = parts.next()?;
    if parts.next().is_some() || !(kind == "weight" || kind == "bias") {
        return None;
    }
    Some((branch, index, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::rng_from_seed;

    fn sample() -> (SimgaParams, HyperParams) {
        let hp = HyperParams {
            main_depth: 2,
            hidden: 5,
            alpha: 0.3,
            patience: None,
            ..HyperParams::default()
        };
        let params = SimgaParams::init(7, 3, 4, &hp, &mut rng_from_seed(9));
        (params, hp)
    }

    #[test]
    fn round_trip_is_exact() {
        let (params, hp) = sample();
        let mut buf = Vec::new();
        write_checkpoint(&params, &hp, &mut buf).unwrap();
        let (p2, hp2) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(p2, params);
        assert_eq!(hp2, hp);
    }

    #[test]
    fn rejects_damaged_files() {
        let (params, hp) = sample();
        let mut buf = Vec::new();
        write_checkpoint(&params, &hp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let wrong_version = text.replacen("simga-checkpoint 1", "simga-checkpoint 2", 1);
        assert!(read_checkpoint(wrong_version.as_bytes()).is_err());
        let truncated: String = text.lines().take(30).map(|l| format!("{l}\n")).collect();
        assert!(read_checkpoint(truncated.as_bytes()).is_err());
        let renamed = text.replacen("mlp_a.0.bias", "mlp_q.0.bias", 1);
        assert!(read_checkpoint(renamed.as_bytes()).is_err());
        assert!(read_checkpoint("hello\n".as_bytes()).is_err());
    }
}
