//! Versioned plain-text model files.
//!
//! ```text
//! eyetask-model 1
//! kind adaboost
//! rng chacha8
//! classes Blank Waldo Natural Puzzle
//! features lx_pix ly_pix lx_href ly_href lp
//! scale lx_pix 512.3 140.2
//! ...
//! ```
//!
//! followed by the classifier payload. Floats are written in Rust's shortest
//! round-trip form, so loading reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::boosting::{AdaBoostModel, DecisionTreeModel, Node, VoteMode};
use crate::error::{Error, Result};
use crate::eval::Classifier;
use crate::gaze_data::{LabelSet, TaskLabel};
use crate::matrix::Matrix;
use crate::preprocess::{FeatureScale, StandardizationParams};
use crate::rng::RNG_ALGORITHM;
use crate::svm::{BinarySvmModel, Kernel, OvrSvmModel};

pub const MODEL_MAGIC: &str = "eyetask-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelPayload {
    Svm(OvrSvmModel),
    AdaBoost(AdaBoostModel),
}

impl ModelPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelPayload::Svm(_) => "svm",
            ModelPayload::AdaBoost(_) => "adaboost",
        }
    }

    pub fn classifier(&self) -> &dyn Classifier {
        match self {
            ModelPayload::Svm(m) => m,
            ModelPayload::AdaBoost(m) => m,
        }
    }
}

/// A trained classifier together with everything needed to apply it to raw
/// gaze rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub label_set: LabelSet,
    pub standardizer: StandardizationParams,
    pub payload: ModelPayload,
}

impl ModelFile {
    pub fn feature_names(&self) -> Vec<String> {
        self.standardizer.feature_names().map(String::from).collect()
    }

    /// Standardizes a raw row and classifies it.
    pub fn predict_raw(&self, raw: &[f64]) -> Result<TaskLabel> {
        if raw.len() != self.standardizer.features.len() {
            return Err(Error::Shape {
                expected: self.standardizer.features.len(),
                got: raw.len(),
            });
        }
        let mut row = raw.to_vec();
        self.standardizer.standardize_row(&mut row);
        self.payload.classifier().predict_row(&row)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("{MODEL_MAGIC} {MODEL_VERSION}"));
        line(format!("kind {}", self.payload.kind()));
        line(format!("rng {RNG_ALGORITHM}"));
        line(format!("classes {}", self.label_set.names().join(" ")));
        line(format!("features {}", self.feature_names().join(" ")));
        for f in &self.standardizer.features {
            line(format!("scale {} {} {}", f.name, f.mean, f.std));
        }
        match &self.payload {
            ModelPayload::Svm(m) => {
                line(format!("machines {}", m.machines.len()));
                for (class, svm) in m.classes.iter().zip(&m.machines) {
                    let kernel = match svm.kernel {
                        Kernel::Linear => "linear".to_string(),
                        Kernel::Rbf { gamma } => format!("rbf {gamma}"),
                    };
                    line(format!(
                        "machine {} {} {} {} {}",
                        class.index(),
                        svm.support_vectors.rows(),
                        svm.bias,
                        svm.c,
                        kernel
                    ));
                    for (alpha, sv) in svm.alphas_signed.iter().zip(svm.support_vectors.iter_rows()) {
                        let mut s = format!("sv {alpha}");
                        for v in sv {
                            let _ = write!(s, " {v}");
                        }
                        line(s);
                    }
                }
            }
            ModelPayload::AdaBoost(m) => {
                let vote = match m.vote {
                    VoteMode::Weighted => "weighted",
                    VoteMode::Unweighted => "unweighted",
                };
                line(format!("vote {vote}"));
                line(format!(
                    "ensemble-classes {}",
                    m.classes.iter().map(|c| c.index().to_string()).collect::<Vec<_>>().join(" ")
                ));
                line(format!("estimators {}", m.learners.len()));
                for (tree, lb) in m.learners.iter().zip(&m.log_betas) {
                    line(format!("tree {lb} {} {} {}", tree.max_depth(), tree.n_features(), tree.nodes().len()));
                    for node in tree.nodes() {
                        line(match node {
                            Node::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            } => format!("node {feature} {threshold} {left} {right}"),
                            Node::Leaf { class } => format!("leaf {}", class.index()),
                        });
                    }
                }
            }
        }
        line("end".into());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = Lines::new(text);
        let header = p.next("header")?;
        if header.first() != Some(&MODEL_MAGIC) {
            return Err(p.err(format!("not a model file (expected `{MODEL_MAGIC} {MODEL_VERSION}`)")));
        }
        let version: u32 = p.field(&header, 1)?;
        if version != MODEL_VERSION {
            return Err(p.err(format!("unsupported model version {version}, expected version {MODEL_VERSION}")));
        }
        let kind = p.keyed("kind")?;
        let kind = kind.first().copied().unwrap_or_default();
        if kind != "svm" && kind != "adaboost" {
            return Err(p.err(format!("unknown model kind `{kind}`")));
        }
        let rng = p.keyed("rng")?;
        if rng.first() != Some(&RNG_ALGORITHM) {
            return Err(p.err(format!("model was built with rng {:?}, this build uses {RNG_ALGORITHM}", rng.first())));
        }
        let label_set = LabelSet::new(p.keyed("classes")?).map_err(|e| p.err(e.to_string()))?;
        let features: Vec<String> = p.keyed("features")?.into_iter().map(String::from).collect();
        let d = features.len();
        let mut scales = Vec::with_capacity(d);
        for name in &features {
            let t = p.keyed("scale")?;
            if t.first() != Some(&name.as_str()) {
                return Err(p.err(format!("expected scale for `{name}`")));
            }
            scales.push(FeatureScale {
                name: name.clone(),
                mean: p.field(&t, 1)?,
                std: p.field(&t, 2)?,
            });
        }
        let class = |p: &Lines, i: usize| {
            if i < label_set.len() {
                Ok(TaskLabel::new(i))
            } else {
                Err(p.err(format!("class index {i} out of range")))
            }
        };

        let payload = if kind == "svm" {
            let t = p.keyed("machines")?;
            let n: usize = p.field(&t, 0)?;
            let mut classes = Vec::with_capacity(n);
            let mut machines = Vec::with_capacity(n);
            for _ in 0..n {
                let t = p.keyed("machine")?;
                classes.push(class(&p, p.field(&t, 0)?)?);
                let n_sv: usize = p.field(&t, 1)?;
                let bias = p.field(&t, 2)?;
                let c = p.field(&t, 3)?;
                let kernel = match t.get(4).copied() {
                    Some("linear") => Kernel::Linear,
                    Some("rbf") => Kernel::rbf(p.field(&t, 5)?).map_err(|e| p.err(e.to_string()))?,
                    other => return Err(p.err(format!("unknown kernel {other:?}"))),
                };
                let mut alphas = Vec::with_capacity(n_sv);
                let mut data = Vec::with_capacity(n_sv * d);
                for _ in 0..n_sv {
                    let t = p.keyed("sv")?;
                    if t.len() != d + 1 {
                        return Err(p.err(format!("support vector needs {} values", d + 1)));
                    }
                    alphas.push(p.field(&t, 0)?);
                    for k in 1..=d {
                        data.push(p.field(&t, k)?);
                    }
                }
                machines.push(BinarySvmModel {
                    support_vectors: Matrix::from_vec(n_sv, d, data)?,
                    alphas_signed: alphas,
                    bias,
                    kernel,
                    c,
                });
            }
            ModelPayload::Svm(OvrSvmModel { classes, machines })
        } else {
            let vote = match p.keyed("vote")?.first().copied() {
                Some("weighted") => VoteMode::Weighted,
                Some("unweighted") => VoteMode::Unweighted,
                other => return Err(p.err(format!("unknown vote mode {other:?}"))),
            };
            let t = p.keyed("ensemble-classes")?;
            let classes = (0..t.len())
                .map(|k| class(&p, p.field(&t, k)?))
                .collect::<Result<Vec<_>>>()?;
            let t = p.keyed("estimators")?;
            let n: usize = p.field(&t, 0)?;
            let mut learners = Vec::with_capacity(n);
            let mut log_betas = Vec::with_capacity(n);
            for _ in 0..n {
                let t = p.keyed("tree")?;
                log_betas.push(p.field(&t, 0)?);
                let max_depth: usize = p.field(&t, 1)?;
                let n_features: usize = p.field(&t, 2)?;
                let n_nodes: usize = p.field(&t, 3)?;
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    let t = p.next("tree node")?;
                    nodes.push(match t.first().copied() {
                        Some("node") => Node::Split {
                            feature: p.field(&t, 1)?,
                            threshold: p.field(&t, 2)?,
                            left: p.field(&t, 3)?,
                            right: p.field(&t, 4)?,
                        },
                        Some("leaf") => Node::Leaf {
                            class: class(&p, p.field(&t, 1)?)?,
                        },
                        _ => return Err(p.err("expected `node` or `leaf`")),
                    });
                }
                let tree = DecisionTreeModel::from_nodes(nodes, max_depth, n_features).map_err(|e| p.err(e.to_string()))?;
                if tree.n_features() != d || tree.nodes().iter().any(|n| matches!(n, Node::Leaf { class } if !classes.contains(class))) {
                    return Err(p.err("tree does not match the model's features or classes"));
                }
                learners.push(tree);
            }
            ModelPayload::AdaBoost(AdaBoostModel {
                learners,
                log_betas,
                classes,
                vote,
            })
        };
        p.keyed("end")?;
        if let Some(extra) = p.peek() {
            return Err(Error::Model(format!("line {}: trailing content", extra)));
        }
        if let ModelPayload::Svm(m) = &payload {
            if m.machines.is_empty() {
                return Err(Error::Model("model has no machines".into()));
            }
        }
        Ok(ModelFile {
            label_set,
            standardizer: StandardizationParams { features: scales },
            payload,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Model(m) => Error::Model(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Whitespace-tokenized line cursor that skips blank lines.
struct Lines<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            lines: text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
                .filter(|(_, t)| !t.is_empty())
                .collect(),
            pos: 0,
        }
    }

    fn line_no(&self) -> usize {
        self.lines.get(self.pos.saturating_sub(1)).map_or(0, |l| l.0)
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Model(format!("line {}: {msg}", self.line_no()))
    }

    fn peek(&self) -> Option<usize> {
        self.lines.get(self.pos).map(|l| l.0)
    }

    fn next(&mut self, what: &str) -> Result<Vec<&'a str>> {
        let Some((_, tokens)) = self.lines.get(self.pos) else {
            return Err(Error::Model(format!("unexpected end of file, expected {what}")));
        };
        self.pos += 1;
        Ok(tokens.clone())
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let t = self.next(key)?;
        if t[0] != key {
            return Err(self.err(format!("expected `{key}`, found `{}`", t[0])));
        }
        Ok(t[1..].to_vec())
    }

    fn field<T: FromStr>(&self, tokens: &[&str], i: usize) -> Result<T> {
        let tok = tokens.get(i).ok_or_else(|| self.err(format!("missing field {}", i + 1)))?;
        tok.parse().map_err(|_| self.err(format!("bad value `{tok}`")))
    }
}
