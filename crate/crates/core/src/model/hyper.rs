use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::simrank::SimMode;

/// Which similarity route `fit` precomputes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimChoice {
    /// Exact up to [`AUTO_EXACT_MAX_NODES`] nodes, approximate beyond.
    Auto,
    Exact,
    Approx,
}

/// Node count up to which [`SimChoice::Auto`] uses the exact route.
pub const AUTO_EXACT_MAX_NODES: usize = 2_000;

impl SimChoice {
    pub fn resolve(self, n: usize) -> SimMode {
        match self {
            SimChoice::Exact => SimMode::Exact,
            SimChoice::Approx => SimMode::Approx,
            SimChoice::Auto if n <= AUTO_EXACT_MAX_NODES => SimMode::Exact,
            SimChoice::Auto => SimMode::Approx,
        }
    }
}

impl FromStr for SimChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SimChoice::Auto),
            "exact" => Ok(SimChoice::Exact),
            "approx" => Ok(SimChoice::Approx),
            other => Err(Error::param(format!("sim_mode must be auto, exact or approx, got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Weight of the feature branch against the adjacency branch.
    pub delta: f64,
    /// Skip-connection weight.
    pub alpha: f64,
    /// SimRank decay factor.
    pub decay: f64,
    pub topk: usize,
    pub eps: f64,
    /// Width of the intermediate embeddings.
    pub hidden: usize,
    /// Layer count of the main MLP.
    pub main_depth: usize,
    pub lr: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; `None` never stops early.
    pub patience: Option<usize>,
    pub seed: u64,
    pub sim_mode: SimChoice,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            delta: 0.5,
            alpha: 0.5,
            decay: 0.6,
            topk: 1024,
            eps: 0.1,
            hidden: 64,
            main_depth: 1,
            lr: 0.01,
            dropout: 0.5,
            weight_decay: 5e-4,
            max_epochs: 500,
            patience: Some(100),
            seed: 0,
            sim_mode: SimChoice::Auto,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::param(format!("bad value '{value}' for {key}")))
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::param(format!("{name} = {x} must lie in [0, 1]")))
            }
        };
        unit("delta", self.delta)?;
        unit("alpha", self.alpha)?;
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::param(format!("decay = {} must lie in (0, 1)", self.decay)));
        }
        if self.topk == 0 {
            return Err(Error::param("topk must be at least 1"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::param("eps must be positive"));
        }
        if self.hidden == 0 {
            return Err(Error::param("hidden width must be positive"));
        }
        if !(1..=2).contains(&self.main_depth) {
            return Err(Error::param("main_depth must be 1 or 2"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::param("lr must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::param("dropout must lie in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::param("weight_decay must be non-negative"));
        }
        if self.patience == Some(0) {
            return Err(Error::param("patience must be at least 1 (or inf)"));
        }
        Ok(())
    }

    /// Sets one field by name. `c` and `k` are accepted for `decay` and `topk`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "delta" => self.delta = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "decay" | "c" => self.decay = parse_value(key, value)?,
            "topk" | "k" => self.topk = parse_value(key, value)?,
            "eps" => self.eps = parse_value(key, value)?,
            "hidden" => self.hidden = parse_value(key, value)?,
            "main_depth" => self.main_depth = parse_value(key, value)?,
            "lr" => self.lr = parse_value(key, value)?,
            "dropout" => self.dropout = parse_value(key, value)?,
            "weight_decay" => self.weight_decay = parse_value(key, value)?,
            "max_epochs" => self.max_epochs = parse_value(key, value)?,
            "patience" => {
                self.patience = match value {
                    "inf" | "none" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "seed" => self.seed = parse_value(key, value)?,
            "sim_mode" => self.sim_mode = value.parse()?,
            other => return Err(Error::param(format!("unknown hyperparameter '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_config<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let text = line.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (key, value) = text.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected key=value, got '{text}'"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}
