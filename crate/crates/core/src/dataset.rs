//! Survey reaction matrices: loading, Likert encoding, binarization,
//! train/test splitting and random cell masking.
//!
//! A [`ReactionMatrix`] holds one row per respondent (candidate or voter)
//! and one column per question. Present values lie in `[0, 1]`, where `0`
//! is "fully disagree" and `1` is "fully agree".

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The sparsity ratios used for both train (`u`) and test (`v`) masking.
pub const SPARSITY_GRID: [f64; 10] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Binarization threshold; values at or above it encode as agreement.
pub const BINARY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionMatrix {
    user_ids: Vec<String>,
    question_ids: Vec<String>,
    /// Row-major, `n_users * n_questions`.
    values: Vec<Option<f64>>,
}

impl ReactionMatrix {
    pub fn new(user_ids: Vec<String>, question_ids: Vec<String>, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != user_ids.len() * question_ids.len() {
            return Err(Error::input(format!(
                "expected {} cells for {} users x {} questions, got {}",
                user_ids.len() * question_ids.len(),
                user_ids.len(),
                question_ids.len(),
                values.len()
            )));
        }
        ensure_unique("user", &user_ids)?;
        ensure_unique("question", &question_ids)?;
        for (idx, v) in values.iter().enumerate() {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(v) {
                    let (u, q) = (idx / question_ids.len(), idx % question_ids.len());
                    return Err(Error::input(format!(
                        "value {v} for user `{}`, question `{}` is outside [0, 1]",
                        user_ids[u], question_ids[q]
                    )));
                }
            }
        }
        Ok(Self {
            user_ids,
            question_ids,
            values,
        })
    }

    /// Builds a matrix from complete rows, generating ids `u0..` and `q0..`.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_questions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_questions) {
            return Err(Error::input("rows have different lengths"));
        }
        let user_ids = (0..rows.len()).map(|i| format!("u{i}")).collect();
        let question_ids = (0..n_questions).map(|j| format!("q{j}")).collect();
        let values = rows.iter().flatten().map(|&v| Some(v)).collect();
        Self::new(user_ids, question_ids, values)
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_questions(&self) -> usize {
        self.question_ids.len()
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn question_ids(&self) -> &[String] {
        &self.question_ids
    }

    pub fn question_index(&self, id: &str) -> Option<usize> {
        self.question_ids.iter().position(|q| q == id)
    }

    pub fn get(&self, user: usize, question: usize) -> Option<f64> {
        self.values[user * self.n_questions() + question]
    }

    pub fn row(&self, user: usize) -> &[Option<f64>] {
        let n = self.n_questions();
        &self.values[user * n..(user + 1) * n]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Complete rows as dense vectors. Fails if any cell is missing.
    pub fn dense_rows(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.n_users())
            .map(|u| {
                self.row(u)
                    .iter()
                    .map(|v| v.ok_or_else(|| Error::input("matrix has missing cells")))
                    .collect()
            })
            .collect()
    }

    /// Mean of the present cells in each column; `None` for empty columns.
    pub fn column_means(&self) -> Vec<Option<f64>> {
        let n = self.n_questions();
        let mut sums = vec![0.0; n];
        let mut counts = vec![0usize; n];
        for row in self.values.chunks(n.max(1)) {
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    sums[j] += v;
                    counts[j] += 1;
                }
            }
        }
        sums.into_iter()
            .zip(counts)
            .map(|(s, c)| (c > 0).then(|| s / c as f64))
            .collect()
    }

    /// Every present cell `r` becomes 1 if `r >= 0.5`, otherwise 0.
    pub fn binarize(&self) -> ReactionMatrix {
        ReactionMatrix {
            user_ids: self.user_ids.clone(),
            question_ids: self.question_ids.clone(),
            values: self.values.iter().map(|v| v.map(binarize_value)).collect(),
        }
    }

    /// Sub-matrix with the given rows, in the given order.
    pub fn select_users(&self, users: &[usize]) -> ReactionMatrix {
        let values = users.iter().flat_map(|&u| self.row(u).iter().copied()).collect();
        ReactionMatrix {
            user_ids: users.iter().map(|&u| self.user_ids[u].clone()).collect(),
            question_ids: self.question_ids.clone(),
            values,
        }
    }

    /// Cells present here but missing in `masked`; the imputation targets.
    pub fn masked_cells(&self, masked: &ReactionMatrix) -> Vec<(usize, usize)> {
        let n = self.n_questions();
        self.values
            .iter()
            .zip(&masked.values)
            .enumerate()
            .filter(|(_, (a, b))| a.is_some() && b.is_none())
            .map(|(idx, _)| (idx / n, idx % n))
            .collect()
    }

    pub fn present_cells(&self) -> Vec<(usize, usize)> {
        let n = self.n_questions();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_some())
            .map(|(idx, _)| (idx / n, idx % n))
            .collect()
    }

    /// Reads the CSV layout: a header of question ids and one row per user.
    /// An optional leading `user_id` column carries user ids; otherwise
    /// rows are named by their position. Empty cells are missing.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let has_user_col = headers.get(0).is_some_and(|h| h.eq_ignore_ascii_case("user_id"));
        let skip = usize::from(has_user_col);
        let question_ids: Vec<String> = headers.iter().skip(skip).map(str::to_owned).collect();
        let mut user_ids = Vec::new();
        let mut values = Vec::new();
        for (row_idx, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::input(format!(
                    "row {} has {} fields, header has {}",
                    row_idx + 1,
                    record.len(),
                    headers.len()
                )));
            }
            user_ids.push(if has_user_col {
                record[0].to_owned()
            } else {
                row_idx.to_string()
            });
            for field in record.iter().skip(skip) {
                let field = field.trim();
                if field.is_empty() {
                    values.push(None);
                } else {
                    let v: f64 = field
                        .parse()
                        .map_err(|_| Error::input(format!("row {}: bad value `{field}`", row_idx + 1)))?;
                    values.push(Some(v));
                }
            }
        }
        Self::new(user_ids, question_ids, values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_csv_writer(file)
    }

    pub fn to_csv_writer(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["user_id".to_owned()];
        header.extend(self.question_ids.iter().cloned());
        wtr.write_record(&header)?;
        for u in 0..self.n_users() {
            let mut record = vec![self.user_ids[u].clone()];
            record.extend(self.row(u).iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()));
            wtr.write_record(&record)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn ensure_unique(kind: &str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::input(format!("duplicate {kind} id `{id}`")));
        }
    }
    Ok(())
}

/// Maps an ordinal Likert option onto evenly spaced points of `[0, 1]`.
pub fn encode_likert(raw_answer: usize, n_options: usize) -> Result<f64> {
    if n_options < 2 {
        return Err(Error::input(format!(
            "a Likert scale needs at least 2 options, got {n_options}"
        )));
    }
    if raw_answer >= n_options {
        return Err(Error::input(format!(
            "answer index {raw_answer} out of range for {n_options} options"
        )));
    }
    Ok(raw_answer as f64 / (n_options - 1) as f64)
}

pub fn binarize_value(r: f64) -> f64 {
    if r >= BINARY_THRESHOLD {
        1.0
    } else {
        0.0
    }
}

/// How many users go to the test partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSize {
    /// `round(fraction * n_users)`.
    Fraction(f64),
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMaskConfig {
    pub test_size: TestSize,
    /// `u`: fraction of train cells removed.
    pub train_sparsity: f64,
    /// `v`: fraction of test cells removed.
    pub test_sparsity: f64,
    pub seed: u64,
}

impl Default for SplitMaskConfig {
    fn default() -> Self {
        Self {
            test_size: TestSize::Fraction(0.15),
            train_sparsity: 0.0,
            test_sparsity: 0.0,
            seed: 0,
        }
    }
}

impl SplitMaskConfig {
    pub fn test_count(&self, n_users: usize) -> Result<usize> {
        let n = match self.test_size {
            TestSize::Fraction(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::input(format!("test fraction {f} must lie in (0, 1)")));
                }
                (f * n_users as f64).round() as usize
            }
            TestSize::Count(c) => c,
        };
        if n > n_users {
            return Err(Error::input(format!("test size {n} exceeds {n_users} users")));
        }
        Ok(n)
    }
}

/// Partitions users into train and test sets. Both keep the original row
/// order; the partition depends only on `cfg.seed` and the user count.
pub fn split(matrix: &ReactionMatrix, cfg: &SplitMaskConfig) -> Result<(ReactionMatrix, ReactionMatrix)> {
    if matrix.n_users() == 0 || matrix.n_questions() == 0 {
        return Err(Error::input("cannot split an empty matrix"));
    }
    if !matrix.is_complete() {
        return Err(Error::input("split expects a complete matrix"));
    }
    let n_test = cfg.test_count(matrix.n_users())?;
    let mut order: Vec<usize> = (0..matrix.n_users()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let (test, train) = order.split_at(n_test);
    let mut test = test.to_vec();
    let mut train = train.to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((matrix.select_users(&train), matrix.select_users(&test)))
}

/// Removes `round(sparsity * n_cells)` present cells, drawn uniformly
/// without replacement over the whole matrix.
pub fn mask(matrix: &ReactionMatrix, sparsity: f64, seed: u64) -> Result<ReactionMatrix> {
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::input(format!("sparsity {sparsity} must lie in [0, 1)")));
    }
    let n_remove = (sparsity * matrix.n_cells() as f64).round() as usize;
    let present: Vec<usize> = matrix
        .values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|_| i))
        .collect();
    if n_remove > present.len() {
        return Err(Error::input(format!(
            "cannot remove {n_remove} cells, only {} present",
            present.len()
        )));
    }
    let mut out = matrix.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for pick in index::sample(&mut rng, present.len(), n_remove) {
        out.values[present[pick]] = None;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionMeta {
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default = "default_options")]
    pub n_options: usize,
}

fn default_options() -> usize {
    4
}

pub fn read_questions(path: impl AsRef<Path>) -> Result<Vec<QuestionMeta>> {
    read_json(path)
}

/// An ordered list of question ids, e.g. the condensed questionnaire.
pub fn read_question_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    read_json(path)
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

pub(crate) fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)?;
    Ok(())
}

/// A data directory: either `reactions.csv` (split on demand) or a
/// pre-split `train.csv` + `test.csv`, plus optional `questions.json`,
/// `rapid_version.json` and `default_order.json`.
#[derive(Debug, Clone)]
pub struct DataDir {
    pub root: PathBuf,
    pub reactions: Option<ReactionMatrix>,
    pub presplit: Option<(ReactionMatrix, ReactionMatrix)>,
    pub questions: Option<Vec<QuestionMeta>>,
    pub rapid_version: Option<Vec<String>>,
    pub default_order: Option<Vec<String>>,
}

impl DataDir {
    pub fn load(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let opt_path = |name: &str| Some(root.join(name)).filter(|p| p.exists());
        let reactions = opt_path("reactions.csv").map(ReactionMatrix::read_csv).transpose()?;
        let presplit = match (opt_path("train.csv"), opt_path("test.csv")) {
            (Some(tr), Some(te)) => Some((ReactionMatrix::read_csv(tr)?, ReactionMatrix::read_csv(te)?)),
            _ => None,
        };
        if reactions.is_none() && presplit.is_none() {
            return Err(Error::input(format!(
                "{}: expected reactions.csv or train.csv + test.csv",
                root.display()
            )));
        }
        Ok(Self {
            questions: opt_path("questions.json").map(read_questions).transpose()?,
            rapid_version: opt_path("rapid_version.json").map(read_question_list).transpose()?,
            default_order: opt_path("default_order.json").map(read_question_list).transpose()?,
            root,
            reactions,
            presplit,
        })
    }

    /// Train/test partition: the shipped one if present, otherwise `split`.
    pub fn train_test(&self, cfg: &SplitMaskConfig) -> Result<(ReactionMatrix, ReactionMatrix)> {
        match (&self.presplit, &self.reactions) {
            (Some((train, test)), _) => Ok((train.clone(), test.clone())),
            (None, Some(all)) => split(all, cfg),
            (None, None) => unreachable!("checked on load"),
        }
    }

    /// All candidate rows, whichever layout the directory uses.
    pub fn all_reactions(&self) -> ReactionMatrix {
        match (&self.reactions, &self.presplit) {
            (Some(all), _) => all.clone(),
            (None, Some((train, test))) => {
                let mut values = train.values.clone();
                values.extend_from_slice(&test.values);
                let mut users = train.user_ids.clone();
                users.extend(test.user_ids.iter().cloned());
                ReactionMatrix {
                    user_ids: users,
                    question_ids: train.question_ids.clone(),
                    values,
                }
            }
            (None, None) => unreachable!("checked on load"),
        }
    }

    /// Maps a list of question ids onto column indices of `matrix`.
    pub fn resolve_ids(matrix: &ReactionMatrix, ids: &[String]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                matrix
                    .question_index(id)
                    .ok_or_else(|| Error::UnknownQuestion(id.clone()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(n_users: usize, n_q: usize) -> ReactionMatrix {
        let rows: Vec<Vec<f64>> = (0..n_users)
            .map(|u| (0..n_q).map(|q| ((u * 7 + q * 3) % 5) as f64 / 4.0).collect())
            .collect();
        ReactionMatrix::from_dense(&rows).unwrap()
    }

    #[test]
    fn likert_encoding() {
        assert_eq!(encode_likert(0, 4).unwrap(), 0.0);
        assert_eq!(encode_likert(3, 4).unwrap(), 1.0);
        assert!((encode_likert(1, 4).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(encode_likert(4, 4).is_err());
        assert!(encode_likert(0, 1).is_err());
        let encoded: Vec<f64> = (0..7).map(|i| encode_likert(i, 7).unwrap()).collect();
        assert!(encoded.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn binarize_threshold_and_missing() {
        let m = ReactionMatrix::new(
            vec!["a".into()],
            vec!["x".into(), "y".into(), "z".into()],
            vec![Some(0.5), Some(0.49), None],
        )
        .unwrap();
        let b = m.binarize();
        assert_eq!(b.row(0), &[Some(1.0), Some(0.0), None]);
        assert_eq!(b.binarize(), b);
    }

    #[test]
    fn rejects_out_of_range_and_duplicates() {
        assert!(ReactionMatrix::new(vec!["a".into()], vec!["x".into()], vec![Some(1.5)]).is_err());
        assert!(ReactionMatrix::new(
            vec!["a".into(), "a".into()],
            vec!["x".into()],
            vec![Some(1.0), Some(0.0)]
        )
        .is_err());
    }

    #[test]
    fn split_counts_and_determinism() {
        let m = full(100, 3);
        let cfg = SplitMaskConfig {
            seed: 9,
            ..Default::default()
        };
        let (train, test) = split(&m, &cfg).unwrap();
        assert_eq!(test.n_users(), 15);
        assert_eq!(train.n_users(), 85);
        let (train2, test2) = split(&m, &cfg).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);

        let mut all: Vec<&String> = train.user_ids().iter().chain(test.user_ids()).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 100);
    }

    #[test]
    fn split_fraction_count_arithmetic() {
        let cfg = SplitMaskConfig::default();
        assert_eq!(cfg.test_count(1912).unwrap(), 287);
        let cfg = SplitMaskConfig {
            test_size: TestSize::Count(290),
            ..Default::default()
        };
        assert_eq!(1912 - cfg.test_count(1912).unwrap(), 1622);
    }

    #[test]
    fn split_rejects_empty_and_sparse() {
        let empty = ReactionMatrix::new(vec![], vec![], vec![]).unwrap();
        assert!(split(&empty, &SplitMaskConfig::default()).is_err());
        let sparse = mask(&full(10, 4), 0.2, 1).unwrap();
        assert!(split(&sparse, &SplitMaskConfig::default()).is_err());
    }

    #[test]
    fn mask_counts() {
        let m = full(10, 10);
        assert_eq!(mask(&m, 0.0, 3).unwrap(), m);
        let masked = mask(&m, 0.3, 3).unwrap();
        assert_eq!(masked.present_count(), 70);
        assert_eq!(masked, mask(&m, 0.3, 3).unwrap());
        assert_ne!(masked, mask(&m, 0.3, 4).unwrap());
        assert_eq!(m.masked_cells(&masked).len(), 30);
        assert!(mask(&m, 1.0, 0).is_err());
    }

    #[test]
    fn csv_round_trip_with_missing() {
        let m = mask(&full(4, 3), 0.25, 2).unwrap();
        let mut buf = Vec::new();
        m.to_csv_writer(&mut buf).unwrap();
        let back = ReactionMatrix::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csv_without_user_column() {
        let text = "q1,q2\n1,0.5\n,0\n";
        let m = ReactionMatrix::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(m.user_ids(), &["0", "1"]);
        assert_eq!(m.row(1), &[None, Some(0.0)]);
    }
}
