//! Node-classification datasets and their plain-text file formats.
//!
//! * features: one node per line, whitespace-separated reals;
//! * labels: one non-negative integer per line;
//! * splits: one node id per line, one file per split.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::format::fmt_g17;
use crate::graph::{load_edge_list, Graph};
use crate::nn::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Splits {
    pub fn get(&self, which: Split) -> &[usize] {
        match which {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::param(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub splits: Splits,
}

impl DatasetBundle {
    /// Checks row counts, label range and split disjointness.
    pub fn new(
        graph: Graph,
        features: DenseMatrix,
        labels: Vec<usize>,
        num_classes: usize,
        splits: Splits,
    ) -> Result<Self> {
        let b = DatasetBundle {
            graph,
            features,
            labels,
            num_classes,
            splits,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.num_nodes();
        if self.features.rows() != n {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows for {n} nodes",
                self.features.rows()
            )));
        }
        if self.labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {n} nodes",
                self.labels.len()
            )));
        }
        if let Some((i, &y)) = self
            .labels
            .iter()
            .enumerate()
            .find(|(_, &y)| y >= self.num_classes)
        {
            return Err(Error::InvalidDataset(format!(
                "label {y} of node {i} exceeds {} classes",
                self.num_classes
            )));
        }
        let mut seen = vec![false; n];
        for (name, ids) in [
            ("train", &self.splits.train),
            ("val", &self.splits.val),
            ("test", &self.splits.test),
        ] {
            for &i in ids {
                if i >= n {
                    return Err(Error::InvalidDataset(format!("{name} index {i} >= n = {n}")));
                }
                if seen[i] {
                    return Err(Error::InvalidDataset(format!(
                        "node {i} appears twice across splits ({name})"
                    )));
                }
                seen[i] = true;
            }
        }
        self.features.ensure_finite("feature file")?;
        Ok(())
    }

    /// Loads a bundle from the text formats. The class count is
    /// `max(label) + 1`.
    pub fn load(paths: &BundlePaths) -> Result<Self> {
        let graph = load_edge_list(open(&paths.edges)?)?;
        let features = read_features(open(&paths.features)?)?;
        let labels = read_labels(open(&paths.labels)?)?;
        let splits = Splits {
            train: read_index_list(open(&paths.train)?)?,
            val: read_index_list(open(&paths.val)?)?,
            test: read_index_list(open(&paths.test)?)?,
        };
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        // Trailing isolated nodes never appear in the edge list.
        let graph = if graph.num_nodes() < labels.len() {
            let edges: Vec<_> = graph.edges().collect();
            Graph::from_edges(labels.len(), &edges)?
        } else {
            graph
        };
        DatasetBundle::new(graph, features, labels, num_classes, splits)
    }

    /// Writes every component into `dir` using the default file names.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = BundlePaths::in_dir(dir);
        write_file(&p.edges, |w| write_edge_list(&self.graph, w))?;
        write_file(&p.features, |w| write_features(&self.features, w))?;
        write_file(&p.labels, |w| write_labels(&self.labels, w))?;
        write_file(&p.train, |w| write_index_list(&self.splits.train, w))?;
        write_file(&p.val, |w| write_index_list(&self.splits.val, w))?;
        write_file(&p.test, |w| write_index_list(&self.splits.test, w))?;
        Ok(())
    }
}

/// File locations of a bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundlePaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub train: PathBuf,
    pub val: PathBuf,
    pub test: PathBuf,
}

impl BundlePaths {
    /// `edges.txt`, `features.txt`, `labels.txt`, `train.txt`, `val.txt` and
    /// `test.txt` inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        BundlePaths {
            edges: dir.join("edges.txt"),
            features: dir.join("features.txt"),
            labels: dir.join("labels.txt"),
            train: dir.join("train.txt"),
            val: dir.join("val.txt"),
            test: dir.join("test.txt"),
        }
    }

    pub fn load(&self) -> Result<DatasetBundle> {
        DatasetBundle::load(self)
    }
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, l)| match l {
        Err(e) => Some(Err(Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })),
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, t.to_string())))
            }
        }
    })
}

pub fn read_features<R: BufRead>(reader: R) -> Result<DenseMatrix> {
    let mut rows = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let row = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad feature value '{tok}'"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::Parse {
                    line,
                    message: format!("{} values, expected {first}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("feature file has no rows".into()));
    }
    DenseMatrix::from_rows(&rows)
}

fn read_usize_lines<R: BufRead>(reader: R, what: &str) -> Result<Vec<usize>> {
    content_lines(reader)
        .map(|item| {
            let (line, text) = item?;
            text.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("bad {what} '{text}'"),
            })
        })
        .collect()
}

pub fn read_labels<R: BufRead>(reader: R) -> Result<Vec<usize>> {
    let labels = read_usize_lines(reader, "label")?;
    if labels.is_empty() {
        return Err(Error::EmptyInput("label file has no rows".into()));
    }
    Ok(labels)
}

pub fn read_index_list<R: BufRead>(reader: R) -> Result<Vec<usize>> {
    read_usize_lines(reader, "node id")
}

pub fn write_edge_list<W: Write>(g: &Graph, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "# {} nodes, {} edges", g.num_nodes(), g.num_edges())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn write_features<W: Write>(m: &DenseMatrix, w: &mut W) -> std::io::Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&x| fmt_g17(x)).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_labels<W: Write>(labels: &[usize], w: &mut W) -> std::io::Result<()> {
    for y in labels {
        writeln!(w, "{y}")?;
    }
    Ok(())
}

pub fn write_index_list<W: Write>(ids: &[usize], w: &mut W) -> std::io::Result<()> {
    write_labels(ids, w)
}
