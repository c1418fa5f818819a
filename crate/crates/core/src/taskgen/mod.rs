//! Task datasets built from properties, representations and call graphs,
//! with project-disjoint splits and an exact-match evaluation harness.

mod builders;
mod eval;

pub use builders::{
    augment_with_context, make_call_masking_task, make_mutation_task, make_property_task, recover_masked, Cmp,
    Filter, MaskConfig, MaskRecord, MutationRecord, CTX, MASK,
};
pub use eval::{
    evaluate_exact_match, most_frequent_name, read_predictions, unigram_baseline, write_predictions, Accuracy,
    EvalReport,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::callgraph::CallType;
use crate::corpus::csvio::{read_csv, write_csv};
use crate::corpus::{EntityId, SizeBucket};
use crate::{Error, Result};

pub const DATASET_HEADER: &[&str] = &["sample_id", "method_id", "split", "stratum", "size_bucket", "label", "payload"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown split `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFracs {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFracs {
    fn default() -> Self {
        SplitFracs { train: 0.8, valid: 0.05, test: 0.15 }
    }
}

impl SplitFracs {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let f = SplitFracs { train, valid, test };
        let all = [train, valid, test];
        if all.iter().any(|x| !(0.0..=1.0).contains(x)) || (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions must lie in [0,1] and sum to 1, got {train}/{valid}/{test}"
            )));
        }
        Ok(f)
    }

    fn get(&self, s: Split) -> f64 {
        match s {
            Split::Train => self.train,
            Split::Valid => self.valid,
            Split::Test => self.test,
        }
    }
}

impl FromStr for SplitFracs {
    type Err = Error;

    /// `0.8/0.05/0.15` or `0.8,0.05,0.15`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(['/', ','])
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("bad split fractions `{s}`")))?;
        match parts[..] {
            [a, b, c] => SplitFracs::new(a, b, c),
            _ => Err(Error::InvalidArgument(format!("expected three split fractions, got `{s}`"))),
        }
    }
}

/// Assigns whole projects to splits. Projects are visited largest first
/// (equal sizes in seeded-shuffle order) and each goes to the split
/// furthest below its sample target, so small splits still get filled.
pub fn assign_project_splits(
    samples_per_project: &BTreeMap<EntityId, usize>,
    fracs: &SplitFracs,
    seed: u64,
) -> BTreeMap<EntityId, Split> {
    let mut projects: Vec<(EntityId, usize)> = samples_per_project
        .iter()
        .filter(|&(_, &n)| n > 0)
        .map(|(&p, &n)| (p, n))
        .collect();
    let total: usize = projects.iter().map(|&(_, n)| n).sum();
    projects.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    projects.sort_by_key(|p| std::cmp::Reverse(p.1));
    let mut filled: BTreeMap<Split, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (p, n) in projects {
        let split = Split::ALL
            .into_iter()
            .max_by(|&a, &b| {
                let deficit = |s: Split| fracs.get(s) * total as f64 - *filled.get(&s).unwrap_or(&0) as f64;
                // earlier splits win ties
                deficit(a).total_cmp(&deficit(b)).then(b.cmp(&a))
            })
            .expect("three splits");
        *filled.entry(split).or_default() += n;
        out.insert(p, split);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSample {
    pub sample_id: String,
    pub method_id: EntityId,
    pub project_id: EntityId,
    pub split: Split,
    pub stratum: Option<CallType>,
    pub size_bucket: SizeBucket,
    pub label: String,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskDataset {
    /// Task descriptor, e.g. `property:CMPX` or `call-mask`.
    pub task: String,
    pub seed: u64,
    pub samples: Vec<TaskSample>,
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    sample_id: String,
    method_id: EntityId,
    split: Split,
    stratum: String,
    size_bucket: SizeBucket,
    label: String,
    payload: String,
}

impl TaskDataset {
    pub fn split(&self, s: Split) -> impl Iterator<Item = &TaskSample> {
        self.samples.iter().filter(move |x| x.split == s)
    }

    pub fn split_indices(&self) -> BTreeMap<Split, Vec<usize>> {
        let mut out: BTreeMap<Split, Vec<usize>> = Split::ALL.iter().map(|&s| (s, Vec::new())).collect();
        for (i, s) in self.samples.iter().enumerate() {
            out.get_mut(&s.split).expect("all splits").push(i);
        }
        out
    }

    /// Projects appearing in more than one split; empty for valid datasets.
    pub fn leaking_projects(&self) -> BTreeSet<EntityId> {
        let mut seen: BTreeMap<EntityId, Split> = BTreeMap::new();
        let mut leaks = BTreeSet::new();
        for s in &self.samples {
            if let Some(prev) = seen.insert(s.project_id, s.split) {
                if prev != s.split {
                    leaks.insert(s.project_id);
                }
            }
        }
        leaks
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<SampleRow> = self
            .samples
            .iter()
            .map(|s| SampleRow {
                sample_id: s.sample_id.clone(),
                method_id: s.method_id,
                split: s.split,
                stratum: s.stratum.map(|c| c.to_string()).unwrap_or_default(),
                size_bucket: s.size_bucket,
                label: s.label.clone(),
                payload: s.payload.clone(),
            })
            .collect();
        write_csv(path, &rows, DATASET_HEADER)
    }

    /// Reads a dataset file; project ids come from `project_of`.
    pub fn read_csv(
        path: &Path,
        task: &str,
        seed: u64,
        project_of: &BTreeMap<EntityId, EntityId>,
    ) -> Result<Self> {
        let rows: Vec<SampleRow> = read_csv(path, DATASET_HEADER)?;
        let samples = rows
            .into_iter()
            .map(|r| {
                let project_id = *project_of
                    .get(&r.method_id)
                    .ok_or_else(|| Error::NotFound(format!("method {} of sample {}", r.method_id, r.sample_id)))?;
                Ok(TaskSample {
                    stratum: if r.stratum.is_empty() { None } else { Some(r.stratum.parse()?) },
                    sample_id: r.sample_id,
                    method_id: r.method_id,
                    project_id,
                    split: r.split,
                    size_bucket: r.size_bucket,
                    label: r.label,
                    payload: r.payload,
                })
            })
            .collect::<Result<_>>()?;
        Ok(TaskDataset {
            task: task.to_string(),
            seed,
            samples,
        })
    }
}

pub(crate) fn sample_id(task: &str, i: usize) -> String {
    let prefix: String = task.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    format!("{}-{i:06}", prefix.to_ascii_lowercase())
}
