//! Evaluation pools: the full labeled dataset an estimator samples from,
//! with its exact finite-population accuracy.
//!
//! On disk a pool is a CSV of `instance_id,correct[,confidence]` rows plus an
//! optional JSONL embeddings sidecar, tied together by a JSON manifest:
//!
//! ```json
//! { "records": "records.csv", "embeddings": "embeddings.jsonl", "name": "physics-like" }
//! ```
//!
//! Relative paths in the manifest resolve against the manifest's directory.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One dataset instance's recorded outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub instance_id: String,
    /// Whether the model's prediction matched the label.
    pub correct: bool,
    pub confidence: Option<f64>,
    pub embedding: Option<Vec<f64>>,
}

/// The full dataset D and its ground-truth accuracy θ*.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationPool {
    name: String,
    records: Vec<PredictionRecord>,
    ground_truth: f64,
}

impl EvaluationPool {
    pub fn new(name: impl Into<String>, records: Vec<PredictionRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("pool has no records"));
        }
        let mut seen = HashMap::with_capacity(records.len());
        let mut dim = None;
        for (i, r) in records.iter().enumerate() {
            if r.instance_id.is_empty() {
                return Err(Error::invalid(format!("record {i} has an empty instance_id")));
            }
            if let Some(prev) = seen.insert(r.instance_id.as_str(), i) {
                return Err(Error::invalid(format!(
                    "duplicate instance_id {:?} (records {prev} and {i})",
                    r.instance_id
                )));
            }
            if let Some(c) = r.confidence {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::invalid(format!(
                        "confidence {c} of {:?} outside [0, 1]",
                        r.instance_id
                    )));
                }
            }
            let this_dim = r.embedding.as_ref().map(Vec::len);
            if let Some(v) = &r.embedding {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid(format!(
                        "embedding of {:?} is empty or non-finite",
                        r.instance_id
                    )));
                }
            }
            match (i, dim) {
                (0, _) => dim = Some(this_dim),
                (_, Some(d)) if d != this_dim => {
                    return Err(Error::invalid(format!(
                        "ragged embeddings: {:?} has {:?} dimensions, expected {:?}",
                        r.instance_id, this_dim, d
                    )))
                }
                _ => {}
            }
        }
        let correct = records.iter().filter(|r| r.correct).count();
        let ground_truth = correct as f64 / records.len() as f64;
        Ok(Self {
            name: name.into(),
            records,
            ground_truth,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// θ*: the fraction of correct records.
    pub fn ground_truth(&self) -> f64 {
        self.ground_truth
    }

    pub fn correct(&self, index: usize) -> bool {
        self.records[index].correct
    }

    /// Embedding vectors in record order, if the pool has them.
    pub fn embeddings(&self) -> Option<Vec<&[f64]>> {
        self.records.iter().map(|r| r.embedding.as_deref()).collect()
    }

    pub fn has_embeddings(&self) -> bool {
        self.records[0].embedding.is_some()
    }

    /// Per-record confidences, if every record carries one.
    pub fn confidences(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.confidence).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolManifest {
    pub records: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub name: String,
}

#[derive(Deserialize, Serialize)]
struct EmbeddingRow {
    instance_id: String,
    vector: Vec<f64>,
}

/// Loads a pool from a JSON manifest, or from a bare CSV (named after the
/// file stem, without embeddings).
pub fn load_pool(path: impl AsRef<Path>) -> Result<EvaluationPool> {
    let path = path.as_ref();
    let is_manifest = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if !is_manifest {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let records = read_records_csv(path)?;
        return EvaluationPool::new(name, records);
    }

    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: PoolManifest = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut records = read_records_csv(&base.join(&manifest.records))?;
    if let Some(emb) = &manifest.embeddings {
        attach_embeddings(&mut records, &base.join(emb))?;
    }
    EvaluationPool::new(manifest.name, records)
}

fn parse_err(line: usize, field: &str, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.to_string(),
        msg: msg.into(),
    }
}

fn read_records_csv(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("instance_id").ok_or_else(|| parse_err(1, "instance_id", "missing column instance_id"))?;
    let correct_col = col("correct").ok_or_else(|| parse_err(1, "correct", "missing column correct"))?;
    let conf_col = col("confidence");

    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let id = row.get(id_col).unwrap_or("");
        if id.is_empty() {
            return Err(parse_err(line, "instance_id", "missing instance_id"));
        }
        if let Some(first) = seen.insert(id.to_string(), line) {
            return Err(parse_err(
                line,
                "instance_id",
                format!("duplicate instance_id {id:?} (first seen at line {first})"),
            ));
        }
        let correct = match row.get(correct_col) {
            Some("1") => true,
            Some("0") => false,
            _ => return Err(parse_err(line, "correct", "invalid correctness")),
        };
        let confidence = match conf_col.and_then(|c| row.get(c)) {
            None | Some("") => None,
            Some(s) => {
                let c: f64 = s
                    .parse()
                    .map_err(|_| parse_err(line, "confidence", "invalid confidence"))?;
                if !(0.0..=1.0).contains(&c) {
                    return Err(parse_err(line, "confidence", "invalid confidence"));
                }
                Some(c)
            }
        };
        out.push(PredictionRecord {
            instance_id: id.to_string(),
            correct,
            confidence,
            embedding: None,
        });
    }
    if out.is_empty() {
        return Err(parse_err(1, "records", "empty file"));
    }
    Ok(out)
}

fn attach_embeddings(records: &mut [PredictionRecord], path: &Path) -> Result<()> {
    let index: HashMap<String, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.instance_id.clone(), i))
        .collect();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dim = None;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: EmbeddingRow = serde_json::from_str(&line)
            .map_err(|e| parse_err(line_no, "vector", format!("malformed embedding row ({e})")))?;
        let &i = index.get(&row.instance_id).ok_or_else(|| {
            parse_err(
                line_no,
                "instance_id",
                format!("unknown instance_id {:?}", row.instance_id),
            )
        })?;
        if *dim.get_or_insert(row.vector.len()) != row.vector.len() {
            return Err(parse_err(line_no, "vector", "ragged embeddings"));
        }
        if records[i].embedding.is_some() {
            return Err(parse_err(line_no, "instance_id", "duplicate embedding"));
        }
        records[i].embedding = Some(row.vector);
    }
    if let Some(r) = records.iter().find(|r| r.embedding.is_none()) {
        return Err(Error::invalid(format!(
            "{}: no embedding for instance_id {:?}",
            path.display(),
            r.instance_id
        )));
    }
    Ok(())
}

/// Writes `records.csv`, `embeddings.jsonl` (when present) and `pool.json`
/// into `dir`, returning the manifest path.
pub fn save_pool(pool: &EvaluationPool, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let csv_path = dir.join("records.csv");
    let with_conf = pool.records.iter().any(|r| r.confidence.is_some());
    {
        let mut w = csv::Writer::from_path(&csv_path)?;
        if with_conf {
            w.write_record(["instance_id", "correct", "confidence"])?;
        } else {
            w.write_record(["instance_id", "correct"])?;
        }
        for r in &pool.records {
            let bit = if r.correct { "1" } else { "0" };
            if with_conf {
                let c = r.confidence.map(|c| c.to_string()).unwrap_or_default();
                w.write_record([r.instance_id.as_str(), bit, c.as_str()])?;
            } else {
                w.write_record([r.instance_id.as_str(), bit])?;
            }
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))?;
    }

    let embeddings = if pool.has_embeddings() {
        let emb_path = dir.join("embeddings.jsonl");
        let f = fs::File::create(&emb_path).map_err(|e| Error::io(&emb_path, e))?;
        let mut w = BufWriter::new(f);
        for r in &pool.records {
            let row = EmbeddingRow {
                instance_id: r.instance_id.clone(),
                vector: r.embedding.clone().unwrap_or_default(),
            };
            let line = serde_json::to_string(&row).map_err(|e| Error::json(&emb_path, e))?;
            writeln!(w, "{line}").map_err(|e| Error::io(&emb_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&emb_path, e))?;
        Some(PathBuf::from("embeddings.jsonl"))
    } else {
        None
    };

    let manifest = PoolManifest {
        records: PathBuf::from("records.csv"),
        embeddings,
        name: pool.name.clone(),
    };
    let manifest_path = dir.join("pool.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&manifest_path, e))?;
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

/// Gaussian-mixture layout for synthetic embeddings. Each component gets its
/// own accuracy, spread evenly over `target ± accuracy_spread`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSpec {
    pub count: usize,
    pub dim: usize,
    pub accuracy_spread: f64,
    pub center_scale: f64,
    pub point_std: f64,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        Self {
            count: 6,
            dim: 8,
            accuracy_spread: 0.25,
            center_scale: 6.0,
            point_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub name: String,
    pub target_accuracy: f64,
    pub size: usize,
    #[serde(default)]
    pub clusters: Option<ClusterSpec>,
    /// Emit a per-record confidence near the record's cluster accuracy.
    #[serde(default)]
    pub confidence: bool,
    pub seed: u64,
}

/// Dataset sizes and ground-truth accuracies of the reference benchmarks.
pub const PRESETS: &[(&str, usize, f64)] = &[
    ("cifar100-like", 10_000, 0.728),
    ("imagenet-like", 50_000, 0.787),
    ("svhn-like", 26_000, 0.904),
    ("newsgroup-like", 7_500, 0.695),
    ("dbpedia-like", 70_000, 0.990),
    ("math-like", 1_351, 0.737),
    ("physics-like", 1_299, 0.622),
    ("chemistry-like", 1_132, 0.633),
    ("law-like", 1_101, 0.372),
    ("engineering-like", 969, 0.387),
];

impl SynthConfig {
    /// A clustered configuration for one of [`PRESETS`].
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        PRESETS.iter().find(|(n, _, _)| *n == name).map(|&(n, size, acc)| Self {
            name: n.to_string(),
            target_accuracy: acc,
            size,
            clusters: Some(ClusterSpec::default()),
            confidence: true,
            seed,
        })
    }

    pub fn newsgroup_like(seed: u64) -> Self {
        Self::preset("newsgroup-like", seed).expect("preset exists")
    }

    pub fn physics_like(seed: u64) -> Self {
        Self::preset("physics-like", seed).expect("preset exists")
    }

    fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::invalid("synthetic pool size must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.target_accuracy) {
            return Err(Error::invalid("target_accuracy must lie in [0, 1]"));
        }
        if let Some(c) = &self.clusters {
            if c.count == 0 || c.count > self.size {
                return Err(Error::invalid(format!(
                    "invalid cluster_spec: count {} must be in 1..={}",
                    c.count, self.size
                )));
            }
            if c.dim == 0 {
                return Err(Error::invalid("invalid cluster_spec: dim must be >= 1"));
            }
            if !(0.0..=1.0).contains(&c.accuracy_spread) {
                return Err(Error::invalid(
                    "invalid cluster_spec: accuracy_spread must lie in [0, 1]",
                ));
            }
            if !(c.center_scale > 0.0 && c.point_std > 0.0) {
                return Err(Error::invalid("invalid cluster_spec: scales must be positive"));
            }
        }
        Ok(())
    }
}

/// Deterministically synthesizes a pool whose overall accuracy is the
/// closest achievable fraction to the target.
pub fn synth_pool(config: &SynthConfig) -> Result<EvaluationPool> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let size = config.size;
    let k = config.clusters.as_ref().map_or(1, |c| c.count);
    let target = config.target_accuracy;
    let spread = config.clusters.as_ref().map_or(0.0, |c| c.accuracy_spread);

    let sizes: Vec<usize> = (0..k).map(|c| size / k + usize::from(c < size % k)).collect();
    let accs: Vec<f64> = (0..k)
        .map(|c| {
            let offset = if k == 1 {
                0.0
            } else {
                spread * (2.0 * c as f64 / (k - 1) as f64 - 1.0)
            };
            (target + offset).clamp(0.0, 1.0)
        })
        .collect();

    let total = (target * size as f64).round() as usize;
    let mut counts: Vec<usize> = sizes
        .iter()
        .zip(&accs)
        .map(|(&n, &a)| ((a * n as f64).round() as usize).min(n))
        .collect();
    // nudge per-cluster counts until they sum to the overall target
    let mut c = 0;
    while counts.iter().sum::<usize>() != total {
        let sum: usize = counts.iter().sum();
        if sum < total && counts[c] < sizes[c] {
            counts[c] += 1;
        } else if sum > total && counts[c] > 0 {
            counts[c] -= 1;
        }
        c = (c + 1) % k;
    }

    let centers: Vec<Vec<f64>> = match &config.clusters {
        Some(spec) => {
            let normal = Normal::new(0.0, spec.center_scale).map_err(|e| Error::invalid(e.to_string()))?;
            (0..k)
                .map(|_| (0..spec.dim).map(|_| normal.sample(&mut rng)).collect())
                .collect()
        }
        None => Vec::new(),
    };
    let point_noise = config
        .clusters
        .as_ref()
        .map(|s| Normal::new(0.0, s.point_std))
        .transpose()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let conf_noise = Normal::new(0.0, 0.05).expect("valid std");

    let mut items = Vec::with_capacity(size);
    for cluster in 0..k {
        let mut bits: Vec<bool> = (0..sizes[cluster]).map(|i| i < counts[cluster]).collect();
        bits.shuffle(&mut rng);
        for correct in bits {
            let embedding = point_noise.as_ref().map(|noise| {
                centers[cluster]
                    .iter()
                    .map(|m| m + noise.sample(&mut rng))
                    .collect::<Vec<f64>>()
            });
            let confidence = config
                .confidence
                .then(|| (accs[cluster] + conf_noise.sample(&mut rng)).clamp(0.01, 0.99));
            items.push((correct, confidence, embedding));
        }
    }
    items.shuffle(&mut rng);

    let width = size.to_string().len().max(5);
    let records = items
        .into_iter()
        .enumerate()
        .map(|(i, (correct, confidence, embedding))| PredictionRecord {
            instance_id: format!("item-{i:0width$}"),
            correct,
            confidence,
            embedding,
        })
        .collect();
    EvaluationPool::new(config.name.clone(), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn ground_truth_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "preds.csv", "instance_id,correct\na,1\nb,1\nc,0\nd,1\n");
        let pool = load_pool(&p).unwrap();
        assert_eq!(pool.ground_truth(), 0.75);
        assert_eq!(pool.name(), "preds");
        assert!(!pool.has_embeddings());
    }

    #[test]
    fn invalid_correctness_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", "instance_id,correct\na,1\nb,2\n");
        let err = load_pool(&p).unwrap_err();
        assert_eq!(err.to_string(), "invalid correctness at line 3");
        assert!(matches!(err, Error::Parse { line: 3, ref field, .. } if field == "correct"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", "instance_id,correct\na,1\na,0\n");
        assert!(matches!(load_pool(&p), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn missing_id_and_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", "instance_id,correct\n,1\n");
        assert!(matches!(load_pool(&p), Err(Error::Parse { line: 2, .. })));
        let p = write(dir.path(), "q.csv", "instance_id,correct\n");
        assert!(load_pool(&p).unwrap_err().to_string().contains("empty file"));
        let p = write(dir.path(), "r.csv", "id,correct\nx,1\n");
        assert!(load_pool(&p).is_err());
    }

    #[test]
    fn confidence_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.csv",
            "instance_id,correct,confidence\na,1,0.9\nb,0,0.25\n",
        );
        let pool = load_pool(&p).unwrap();
        assert_eq!(pool.confidences(), Some(vec![0.9, 0.25]));
        let p = write(dir.path(), "q.csv", "instance_id,correct,confidence\na,1,1.5\n");
        assert!(matches!(load_pool(&p), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn manifest_with_embeddings() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "r.csv", "instance_id,correct\na,1\nb,0\n");
        write(
            dir.path(),
            "e.jsonl",
            "{\"instance_id\":\"b\",\"vector\":[0.0,1.0]}\n{\"instance_id\":\"a\",\"vector\":[2.0,3.0]}\n",
        );
        let m = write(
            dir.path(),
            "m.json",
            r#"{"records":"r.csv","embeddings":"e.jsonl","name":"tiny"}"#,
        );
        let pool = load_pool(&m).unwrap();
        assert_eq!(pool.name(), "tiny");
        assert_eq!(pool.embeddings().unwrap(), vec![&[2.0, 3.0][..], &[0.0, 1.0][..]]);
    }

    #[test]
    fn ragged_embeddings_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "r.csv", "instance_id,correct\na,1\nb,0\n");
        write(
            dir.path(),
            "e.jsonl",
            "{\"instance_id\":\"a\",\"vector\":[0.0,1.0]}\n{\"instance_id\":\"b\",\"vector\":[2.0]}\n",
        );
        let m = write(
            dir.path(),
            "m.json",
            r#"{"records":"r.csv","embeddings":"e.jsonl","name":"x"}"#,
        );
        let err = load_pool(&m).unwrap_err();
        assert!(
            matches!(err, Error::Parse { line: 2, ref field, .. } if field == "vector"),
            "{err}"
        );
    }

    #[test]
    fn missing_embedding_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "r.csv", "instance_id,correct\na,1\nb,0\n");
        write(dir.path(), "e.jsonl", "{\"instance_id\":\"a\",\"vector\":[0.0]}\n");
        let m = write(
            dir.path(),
            "m.json",
            r#"{"records":"r.csv","embeddings":"e.jsonl","name":"x"}"#,
        );
        assert!(load_pool(&m).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let cfg = SynthConfig {
            name: "rt".into(),
            target_accuracy: 0.4,
            size: 57,
            clusters: Some(ClusterSpec {
                count: 3,
                dim: 4,
                ..Default::default()
            }),
            confidence: true,
            seed: 3,
        };
        let pool = synth_pool(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_pool(&pool, dir.path()).unwrap();
        assert_eq!(load_pool(&manifest).unwrap(), pool);
    }

    #[test]
    fn new_rejects_bad_records() {
        let rec = |id: &str, emb: Option<Vec<f64>>| PredictionRecord {
            instance_id: id.into(),
            correct: true,
            confidence: None,
            embedding: emb,
        };
        assert!(EvaluationPool::new("x", vec![]).is_err());
        assert!(EvaluationPool::new("x", vec![rec("a", None), rec("a", None)]).is_err());
        assert!(EvaluationPool::new("x", vec![rec("a", Some(vec![1.0])), rec("b", None)]).is_err());
        assert!(EvaluationPool::new("x", vec![rec("a", Some(vec![1.0])), rec("b", Some(vec![1.0, 2.0]))]).is_err());
    }

    #[test]
    fn synth_single_record() {
        let cfg = SynthConfig {
            name: "one".into(),
            target_accuracy: 1.0,
            size: 1,
            clusters: None,
            confidence: false,
            seed: 0,
        };
        let pool = synth_pool(&cfg).unwrap();
        assert_eq!(pool.len(), 1);
        assert!(pool.records()[0].correct);
        assert_eq!(pool.ground_truth(), 1.0);
    }

    #[test]
    fn newsgroup_fixture() {
        let pool = synth_pool(&SynthConfig::newsgroup_like(0)).unwrap();
        assert_eq!(pool.len(), 7_500);
        assert!((pool.ground_truth() - 0.695).abs() <= 0.5 / 7_500.0 + 1e-12);
        assert!(pool.has_embeddings());
    }

    #[test]
    fn physics_fixture_close_to_target() {
        let pool = synth_pool(&SynthConfig::physics_like(42)).unwrap();
        assert_eq!(pool.len(), 1_299);
        assert!((pool.ground_truth() - 0.622).abs() < 0.02);
    }

    #[test]
    fn synth_clusters_are_heterogeneous() {
        let pool = synth_pool(&SynthConfig::physics_like(1)).unwrap();
        let conf = pool.confidences().unwrap();
        // confidences track the cluster accuracy, so they are spread out
        let lo = conf.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = conf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo > 0.3);
    }

    #[test]
    fn synth_is_deterministic_to_the_byte() {
        let cfg = SynthConfig::physics_like(9);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        save_pool(&synth_pool(&cfg).unwrap(), a.path()).unwrap();
        save_pool(&synth_pool(&cfg).unwrap(), b.path()).unwrap();
        for f in ["records.csv", "embeddings.jsonl", "pool.json"] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn synth_rejects_invalid_cluster_spec() {
        let mut cfg = SynthConfig::physics_like(0);
        cfg.clusters.as_mut().unwrap().count = 0;
        assert!(synth_pool(&cfg).is_err());
        let mut cfg = SynthConfig::physics_like(0);
        cfg.clusters.as_mut().unwrap().dim = 0;
        assert!(synth_pool(&cfg).is_err());
    }
}
