//! Text persistence for learned models.
//!
//! One file per model: a version tag line, `meta key value` lines, then named
//! tensor sections (`tensor <name> <rank> <dims...>` followed by row-major
//! values). Values are printed with Rust's shortest round-trip formatting, so
//! read(write(x)) reproduces every float bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, Layer, MlpParams, NnError, Tensor};

const VERSION_TAG: &str = "pushplan-model v1";
const VALUES_PER_LINE: usize = 8;

#[derive(Debug, Clone, Default)]
pub struct ModelFile {
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<(String, Tensor)>,
}

impl ModelFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Result<&str, NnError> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| NnError::Parse(format!("missing meta key `{key}`")))
    }

    pub fn meta_f64(&self, key: &str) -> Result<f64, NnError> {
        self.meta(key)?
            .parse()
            .map_err(|_| NnError::Parse(format!("meta key `{key}` is not a float")))
    }

    pub fn meta_usize(&self, key: &str) -> Result<usize, NnError> {
        self.meta(key)?
            .parse()
            .map_err(|_| NnError::Parse(format!("meta key `{key}` is not an integer")))
    }

    pub fn push_tensor(&mut self, name: &str, tensor: Tensor) {
        self.tensors.push((name.to_string(), tensor));
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor, NnError> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| NnError::Parse(format!("missing tensor `{name}`")))
    }

    /// Store an MLP under a name prefix: activations in meta, weights/bias as tensors.
    pub fn push_mlp(&mut self, prefix: &str, mlp: &MlpParams) {
        let acts: Vec<&str> = mlp.layers().iter().map(|l| l.activation.tag()).collect();
        self.set_meta(&format!("{prefix}.activations"), acts.join(","));
        for (i, layer) in mlp.layers().iter().enumerate() {
            self.push_tensor(
                &format!("{prefix}.w{i}"),
                Tensor::new(vec![layer.out_dim, layer.in_dim], layer.weights.clone()).expect("valid layer"),
            );
            self.push_tensor(
                &format!("{prefix}.b{i}"),
                Tensor::new(vec![layer.out_dim], layer.bias.clone()).expect("valid layer"),
            );
        }
    }

    pub fn read_mlp(&self, prefix: &str) -> Result<MlpParams, NnError> {
        let acts: Vec<Activation> = self
            .meta(&format!("{prefix}.activations"))?
            .split(',')
            .map(Activation::from_tag)
            .collect::<Result<_, _>>()?;
        let mut layers = Vec::with_capacity(acts.len());
        for (i, act) in acts.iter().enumerate() {
            let w = self.tensor(&format!("{prefix}.w{i}"))?;
            let b = self.tensor(&format!("{prefix}.b{i}"))?;
            if w.shape().len() != 2 {
                return Err(NnError::Parse(format!("{prefix}.w{i} is not a matrix")));
            }
            layers.push(Layer {
                weights: w.data().to_vec(),
                bias: b.data().to_vec(),
                activation: *act,
                in_dim: w.shape()[1],
                out_dim: w.shape()[0],
            });
        }
        MlpParams::new(layers)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(VERSION_TAG);
        out.push('\n');
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}").unwrap();
        }
        for (name, tensor) in &self.tensors {
            write!(out, "tensor {name} {}", tensor.shape().len()).unwrap();
            for d in tensor.shape() {
                write!(out, " {d}").unwrap();
            }
            out.push('\n');
            for chunk in tensor.data().chunks(VALUES_PER_LINE) {
                let line: Vec<String> = chunk.iter().map(|v| format!("{v}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NnError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(line) if line == VERSION_TAG => {}
            other => {
                return Err(NnError::Parse(format!(
                    "bad version tag: {:?} (expected `{VERSION_TAG}`)",
                    other.unwrap_or("")
                )))
            }
        }
        let mut file = ModelFile::new();
        let mut saw_end = false;
        while let Some(line) = lines.next() {
            let line = line.trim_end();
            if line == "end" {
                saw_end = true;
                break;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest
                    .split_once(' ')
                    .ok_or_else(|| NnError::Parse(format!("malformed meta line `{line}`")))?;
                file.meta.insert(k.to_string(), v.to_string());
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let mut parts = rest.split_whitespace();
                let name = parts
                    .next()
                    .ok_or_else(|| NnError::Parse("tensor line missing name".into()))?
                    .to_string();
                let rank: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| NnError::Parse(format!("tensor `{name}` missing rank")))?;
                let shape: Vec<usize> = parts
                    .map(|s| s.parse().map_err(|_| NnError::Parse(format!("bad dim in tensor `{name}`"))))
                    .collect::<Result<_, _>>()?;
                if shape.len() != rank {
                    return Err(NnError::Parse(format!("tensor `{name}` rank/dims mismatch")));
                }
                let n: usize = shape.iter().product();
                let mut data = Vec::with_capacity(n);
                while data.len() < n {
                    let line = lines
                        .next()
                        .ok_or_else(|| NnError::Parse(format!("tensor `{name}` truncated")))?;
                    for tok in line.split_whitespace() {
                        let v: f64 = tok
                            .parse()
                            .map_err(|_| NnError::Parse(format!("bad float `{tok}` in tensor `{name}`")))?;
                        data.push(v);
                    }
                }
                if data.len() != n {
                    return Err(NnError::Parse(format!("tensor `{name}` has extra values")));
                }
                file.tensors.push((name, Tensor::new(shape, data)?));
            } else if !line.trim().is_empty() {
                return Err(NnError::Parse(format!("unexpected line `{line}`")));
            }
        }
        if !saw_end {
            return Err(NnError::Parse("missing `end` terminator".into()));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        std::fs::write(path, self.to_text()).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}
