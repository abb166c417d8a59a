//! Versioned text format for fitted models.
//!
//! ```text
//! btpredict-model v1
//! race protoss
//! t_max 3600
//! sigma_min 5
//! n0 1
//! sigma0 120
//! prior_mode uniform
//! building pylon max 2
//! building gateway requires pylon max 2
//! tree pylon n 3 sum 90 sum2 2750
//! tree pylon+gateway mu 140 sigma 12.5 prior 4
//! checksum sha256:<hex digest of every preceding byte>
//! ```
//!
//! The embedded `building` lines make a model file self-describing; loading
//! against an external dag checks that both name the same buildings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::model::{Model, ModelConfig, ModelEntry, PriorMode, TimeParams};
use super::stats::{GaussianPrior, GaussianStats, TimeGaussian};
use super::LearnError;
use crate::techtree::{load_tech_dag, DagError, Race, TechDag};

pub const MODEL_MAGIC: &str = "btpredict-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelFileError {
    #[error("not a model file (missing `{MODEL_MAGIC}` header)")]
    NotAModel,
    #[error("unsupported model version `{0}` (expected v{MODEL_VERSION})")]
    Version(String),
    #[error("checksum missing or wrong; the file is truncated or corrupted")]
    Checksum,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model dag does not match: {0}")]
    DagMismatch(String),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Model(#[from] LearnError),
}

fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn save_model(model: &Model) -> String {
    let dag = model.dag();
    let c = model.config();
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC} v{MODEL_VERSION}");
    let _ = writeln!(out, "race {}", dag.race());
    let _ = writeln!(out, "t_max {}", c.t_max_s);
    let _ = writeln!(out, "sigma_min {}", c.sigma_min_s);
    let _ = writeln!(out, "n0 {}", c.prior.n0);
    let _ = writeln!(out, "sigma0 {}", c.prior.sigma0_s);
    let _ = writeln!(out, "prior_mode {}", c.prior_mode);
    for line in dag.building_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    for (bt, entry) in model.entries() {
        let _ = write!(out, "tree {}", dag.format_tree(bt));
        match entry.time {
            TimeParams::Learned(s) => {
                let _ = write!(out, " n {} sum {} sum2 {}", s.n(), s.sum_t(), s.sum_t2());
            }
            TimeParams::Fixed(g) => {
                let _ = write!(out, " mu {} sigma {}", g.mu, g.sigma);
            }
        }
        if entry.prior_count > 0 {
            let _ = write!(out, " prior {}", entry.prior_count);
        }
        out.push('\n');
    }
    let sum = digest_hex(out.as_bytes());
    let _ = writeln!(out, "checksum sha256:{sum}");
    out
}

/// Loads a model and re-targets it onto `dag`, which must declare the same
/// set of building names as the dag embedded in the file.
pub fn load_model(source: &str, dag: &Arc<TechDag>) -> Result<Model, ModelFileError> {
    let parsed = parse(source)?;
    let embedded: BTreeSet<&str> = parsed.dag.buildings().iter().map(|b| b.name.as_str()).collect();
    let given: BTreeSet<&str> = dag.buildings().iter().map(|b| b.name.as_str()).collect();
    if parsed.dag.race() != dag.race() {
        return Err(ModelFileError::DagMismatch(format!(
            "model is for {}, dag is {}",
            parsed.dag.race(),
            dag.race()
        )));
    }
    if embedded != given {
        let missing: Vec<&str> = embedded.difference(&given).copied().collect();
        let extra: Vec<&str> = given.difference(&embedded).copied().collect();
        return Err(ModelFileError::DagMismatch(format!(
            "buildings only in model: [{}]; only in dag: [{}]",
            missing.join(","),
            extra.join(",")
        )));
    }
    build(parsed, dag.clone())
}

/// Loads a model using the dag embedded in the file.
pub fn load_model_embedded(source: &str) -> Result<Model, ModelFileError> {
    let parsed = parse(source)?;
    let dag = Arc::new(parsed.dag.clone());
    build(parsed, dag)
}

struct Parsed {
    dag: TechDag,
    config: ModelConfig,
    // (line, tree text, entry)
    rows: Vec<(usize, String, ModelEntry)>,
}

fn build(parsed: Parsed, dag: Arc<TechDag>) -> Result<Model, ModelFileError> {
    let mut entries = BTreeMap::new();
    for (line, text, entry) in parsed.rows {
        let bt = dag.parse_tree(&text).map_err(|e| match e {
            DagError::MalformedTree(_) | DagError::CountOverCap { .. } => {
                ModelFileError::DagMismatch(format!("tree `{text}` on line {line} is not valid under the dag"))
            }
            other => ModelFileError::Dag(other),
        })?;
        if entries.insert(bt, entry).is_some() {
            return Err(ModelFileError::Parse {
                line,
                message: format!("duplicate tree `{text}`"),
            });
        }
    }
    Ok(Model::new(dag, parsed.config, entries)?)
}

fn parse(source: &str) -> Result<Parsed, ModelFileError> {
    let first = source.lines().next().unwrap_or("");
    let mut head = first.split_whitespace();
    if head.next() != Some(MODEL_MAGIC) {
        return Err(ModelFileError::NotAModel);
    }
    match head.next() {
        Some(v) if v == format!("v{MODEL_VERSION}") => {}
        Some(v) => return Err(ModelFileError::Version(v.to_string())),
        None => return Err(ModelFileError::Version(String::new())),
    }

    let body = verify_checksum(source)?;
    let lines: Vec<&str> = body.lines().collect();

    let mut idx = 1;
    let mut header = |key: &str| -> Result<(usize, String), ModelFileError> {
        let line_no = idx + 1;
        let line = lines.get(idx).copied().unwrap_or("");
        idx += 1;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok((line_no, v.trim().to_string())),
            _ => Err(ModelFileError::Parse {
                line: line_no,
                message: format!("expected `{key} <value>`"),
            }),
        }
    };
    let (_, race) = header("race")?;
    let race: Race = race.parse()?;
    let (l, t_max) = header("t_max")?;
    let t_max_s = parse_num::<u32>(&t_max, l)?;
    let (l, v) = header("sigma_min")?;
    let sigma_min_s = parse_num::<f64>(&v, l)?;
    let (l, v) = header("n0")?;
    let n0 = parse_num::<f64>(&v, l)?;
    let (l, v) = header("sigma0")?;
    let sigma0_s = parse_num::<f64>(&v, l)?;
    let (l, v) = header("prior_mode")?;
    let prior_mode: PriorMode = v.parse().map_err(|e: LearnError| ModelFileError::Parse {
        line: l,
        message: e.to_string(),
    })?;
    let config = ModelConfig {
        t_max_s,
        sigma_min_s,
        prior: GaussianPrior { n0, sigma0_s },
        prior_mode,
    };

    let mut dag_text = format!("race {race}\n");
    let mut rows = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(idx) {
        let line_no = i + 1;
        if line.starts_with("building ") {
            if !rows.is_empty() {
                return Err(ModelFileError::Parse {
                    line: line_no,
                    message: "building lines must precede tree lines".into(),
                });
            }
            dag_text.push_str(line);
            dag_text.push('\n');
        } else if let Some(rest) = line.strip_prefix("tree ") {
            let (text, entry) = parse_tree_row(rest, line_no, config.prior)?;
            rows.push((line_no, text, entry));
        } else {
            return Err(ModelFileError::Parse {
                line: line_no,
                message: "expected a `building` or `tree` line".into(),
            });
        }
    }
    let dag = load_tech_dag(&dag_text)?;
    Ok(Parsed { dag, config, rows })
}

fn verify_checksum(source: &str) -> Result<&str, ModelFileError> {
    let trimmed = source.strip_suffix('\n').ok_or(ModelFileError::Checksum)?;
    let start = trimmed.rfind('\n').map_or(0, |i| i + 1);
    let expected = trimmed[start..]
        .strip_prefix("checksum sha256:")
        .ok_or(ModelFileError::Checksum)?;
    let body = &source[..start];
    if digest_hex(body.as_bytes()) != expected {
        return Err(ModelFileError::Checksum);
    }
    Ok(body)
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, ModelFileError> {
    s.parse().map_err(|_| ModelFileError::Parse {
        line,
        message: format!("bad number `{s}`"),
    })
}

fn parse_tree_row(rest: &str, line: usize, prior: GaussianPrior) -> Result<(String, ModelEntry), ModelFileError> {
    let mut words = rest.split_whitespace();
    let text = words
        .next()
        .ok_or_else(|| ModelFileError::Parse {
            line,
            message: "missing tree".into(),
        })?
        .to_string();
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    while let Some(k) = words.next() {
        let v = words.next().ok_or_else(|| ModelFileError::Parse {
            line,
            message: format!("`{k}` has no value"),
        })?;
        if fields.insert(k, v).is_some() {
            return Err(ModelFileError::Parse {
                line,
                message: format!("repeated field `{k}`"),
            });
        }
    }
    let mut take = |k: &str| fields.remove(k);
    let prior_count = take("prior").map(|v| parse_num::<u64>(v, line)).transpose()?.unwrap_or(0);
    let time = match (take("n"), take("sum"), take("sum2"), take("mu"), take("sigma")) {
        (Some(n), Some(sum), Some(sum2), None, None) => TimeParams::Learned(GaussianStats::from_sums(
            parse_num(n, line)?,
            parse_num(sum, line)?,
            parse_num(sum2, line)?,
            prior,
        )?),
        (None, None, None, Some(mu), Some(sigma)) => TimeParams::Fixed(TimeGaussian {
            mu: parse_num(mu, line)?,
            sigma: parse_num(sigma, line)?,
        }),
        _ => {
            return Err(ModelFileError::Parse {
                line,
                message: "expected `n/sum/sum2` or `mu/sigma` fields".into(),
            })
        }
    };
    if let Some(k) = fields.keys().next() {
        return Err(ModelFileError::Parse {
            line,
            message: format!("unknown field `{k}`"),
        });
    }
    Ok((text, ModelEntry { time, prior_count }))
}
