//! Training labels from contribution statements.
//!
//! Contribution verbs are clustered by how often the same author uses them on
//! the same paper. The three clusters are named Lead, Direct Support and
//! Indirect Support from known seed verbs, and each (paper, author) unit gets a
//! lead value: the fraction of its distinct known verbs that fall in the Lead
//! cluster.

pub mod cooccur;
pub mod kmeans;
mod lemma;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cooccur::{build_cooccurrence, CooccurrenceAccumulator, CooccurrenceMatrix};
pub use kmeans::{kmeans, KMeansResult};
pub use lemma::normalize_verb;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RolesError {
    #[error("no contribution records")]
    EmptyCorpus,
    #[error("vocabulary of {size} verbs is smaller than k = {k}")]
    VocabularyTooSmall { size: usize, k: usize },
    #[error("invalid co-occurrence matrix: {0}")]
    InvalidMatrix(String),
    #[error("no {0} seed verb occurs in the vocabulary")]
    MissingSeeds(Role),
    #[error("seed verbs do not single out one cluster per role ({0})")]
    AmbiguousLabeling(String),
    #[error("label_clusters needs exactly 3 clusters, got {0}")]
    WrongClusterCount(usize),
    #[error("no known verbs for paper {paper_id} author {author_id}")]
    NoKnownVerbs { paper_id: String, author_id: String },
    #[error("contribution line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("role model line {line}: {message}")]
    ModelFormat { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Lead,
    DirectSupport,
    IndirectSupport,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Lead, Role::DirectSupport, Role::IndirectSupport];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Lead => "lead",
            Role::DirectSupport => "direct_support",
            Role::IndirectSupport => "indirect_support",
        }
    }

    pub fn is_lead(self) -> bool {
        self == Role::Lead
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL.into_iter().find(|r| r.as_str() == s).ok_or_else(|| format!("unknown role {s:?}"))
    }
}

/// One author's self-reported contributions to one paper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributionRecord {
    pub paper_id: String,
    pub author_id: String,
    pub verbs: Vec<String>,
}

impl ContributionRecord {
    /// Parses one `{paper_id, author_id, verbs[]}` line and normalizes the verbs.
    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, RolesError> {
        let malformed = |message: String| RolesError::Malformed { line: line_no, message };
        let mut r: ContributionRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        if r.paper_id.trim().is_empty() || r.author_id.trim().is_empty() {
            return Err(malformed("empty paper_id or author_id".into()));
        }
        r.verbs = r.verbs.iter().map(|v| normalize_verb(v)).filter(|v| !v.is_empty()).collect();
        if r.verbs.is_empty() {
            return Err(malformed("no verbs".into()));
        }
        Ok(r)
    }
}

/// Reads contribution records, merging repeated (paper, author) units into one.
/// Output is sorted by (paper_id, author_id).
pub fn read_contributions<R: BufRead>(reader: R) -> Result<Vec<ContributionRecord>, RolesError> {
    read_contributions_with(reader, true).map(|(records, _)| records)
}

/// Like [`read_contributions`]; when not strict, bad lines are skipped and counted.
pub fn read_contributions_with<R: BufRead>(
    reader: R,
    strict: bool,
) -> Result<(Vec<ContributionRecord>, usize), RolesError> {
    let mut units: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    let mut rejected = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| RolesError::Malformed { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let r = match ContributionRecord::parse_line(&line, i + 1) {
            Ok(r) => r,
            Err(e) if strict => return Err(e),
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        units.entry((r.paper_id, r.author_id)).or_default().extend(r.verbs);
    }
    if rejected > 0 {
        log::warn!("skipped {rejected} malformed contribution lines");
    }
    let records = units
        .into_iter()
        .map(|((paper_id, author_id), verbs)| ContributionRecord { paper_id, author_id, verbs })
        .collect();
    Ok((records, rejected))
}

/// Verbs known to belong to each role; used only to name clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedVerbs {
    pub lead: Vec<String>,
    pub direct_support: Vec<String>,
    pub indirect_support: Vec<String>,
}

impl SeedVerbs {
    pub fn for_role(&self, role: Role) -> &[String] {
        match role {
            Role::Lead => &self.lead,
            Role::DirectSupport => &self.direct_support,
            Role::IndirectSupport => &self.indirect_support,
        }
    }
}

impl Default for SeedVerbs {
    fn default() -> Self {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self {
            lead: own(&["conceive", "design", "lead", "supervise", "coordinate", "interpret", "write"]),
            direct_support: own(&[
                "help", "assist", "prepare", "develop", "collect", "generate", "purify", "carry", "do", "perform",
                "conduct", "analyze",
            ]),
            indirect_support: own(&["participate", "provide", "contribute", "comment", "discuss", "edit"]),
        }
    }
}

/// Unlabeled partition of a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub vocabulary: Vec<String>,
    pub assignments: Vec<usize>,
    pub k: usize,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
}

impl Partition {
    pub fn members(&self, cluster: usize) -> Vec<&str> {
        self.vocabulary.iter().zip(&self.assignments).filter(|(_, c)| **c == cluster).map(|(v, _)| v.as_str()).collect()
    }

    /// Clusters as sets of verbs, independent of cluster numbering.
    pub fn blocks(&self) -> BTreeSet<BTreeSet<String>> {
        (0..self.k).map(|c| self.members(c).into_iter().map(String::from).collect()).collect()
    }
}

/// Clusters verbs by their PPMI co-occurrence rows.
pub fn cluster_roles(matrix: &CooccurrenceMatrix, k: usize, seed: u64) -> Result<Partition, RolesError> {
    if k == 0 || matrix.len() < k {
        return Err(RolesError::VocabularyTooSmall { size: matrix.len(), k });
    }
    let points = matrix.ppmi_embedding();
    let result = kmeans(&points, k, seed);
    Ok(Partition {
        vocabulary: matrix.vocabulary().to_vec(),
        assignments: result.assignments,
        k,
        seed,
        iterations: result.iterations,
        converged: result.converged,
    })
}

/// Verb to role mapping plus clustering metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleClusterModel {
    pub roles: BTreeMap<String, Role>,
    pub seed: u64,
    pub k: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Names the three clusters so that the total number of seed verbs landing in
/// their own role's cluster is maximal. Fails when two labelings tie.
pub fn label_clusters(partition: &Partition, seeds: &SeedVerbs) -> Result<RoleClusterModel, RolesError> {
    if partition.k != 3 {
        return Err(RolesError::WrongClusterCount(partition.k));
    }
    let cluster_of: HashMap<&str, usize> =
        partition.vocabulary.iter().map(String::as_str).zip(partition.assignments.iter().copied()).collect();
    // hits[cluster][role]
    let mut hits = [[0usize; 3]; 3];
    for (r, role) in Role::ALL.iter().enumerate() {
        let mut any = false;
        for verb in seeds.for_role(*role) {
            if let Some(&c) = cluster_of.get(verb.as_str()) {
                hits[c][r] += 1;
                any = true;
            }
        }
        if !any {
            return Err(RolesError::MissingSeeds(*role));
        }
    }
    const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    // perm[cluster] = role index
    let score = |perm: &[usize; 3]| (0..3).map(|c| hits[c][perm[c]]).sum::<usize>();
    let best = PERMUTATIONS.iter().map(score).max().expect("non-empty");
    let winners: Vec<&[usize; 3]> = PERMUTATIONS.iter().filter(|p| score(p) == best).collect();
    if winners.len() != 1 {
        return Err(RolesError::AmbiguousLabeling(format!("seed hits per cluster (lead, direct, indirect): {hits:?}")));
    }
    let perm = winners[0];
    let roles = partition
        .vocabulary
        .iter()
        .zip(&partition.assignments)
        .map(|(v, &c)| (v.clone(), Role::ALL[perm[c]]))
        .collect();
    Ok(RoleClusterModel {
        roles,
        seed: partition.seed,
        k: partition.k,
        iterations: partition.iterations,
        converged: partition.converged,
    })
}

/// How mixed contributions become a lead value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LabelMode {
    /// Share of distinct known verbs that are Lead verbs.
    #[default]
    Fractional,
    /// 1 if any known verb is a Lead verb, else 0.
    StrictBinary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadValue {
    pub value: f64,
    pub known: usize,
    pub unknown: usize,
}

pub fn fractional_lead_value(
    record: &ContributionRecord,
    model: &RoleClusterModel,
    mode: LabelMode,
) -> Result<LeadValue, RolesError> {
    let distinct: BTreeSet<&str> = record.verbs.iter().map(String::as_str).collect();
    let mut lead = 0usize;
    let mut known = 0usize;
    let mut unknown = 0usize;
    for verb in distinct {
        match model.roles.get(verb) {
            Some(role) => {
                known += 1;
                if role.is_lead() {
                    lead += 1;
                }
            }
            None => unknown += 1,
        }
    }
    if known == 0 {
        return Err(RolesError::NoKnownVerbs {
            paper_id: record.paper_id.clone(),
            author_id: record.author_id.clone(),
        });
    }
    let value = match mode {
        LabelMode::Fractional => lead as f64 / known as f64,
        LabelMode::StrictBinary => f64::from(u8::from(lead > 0)),
    };
    Ok(LeadValue { value, known, unknown })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLabel {
    pub paper_id: String,
    pub author_id: String,
    pub lead_value: f64,
}

/// Labels every record with at least one known verb; returns the labels and the
/// number of records dropped for having none.
pub fn training_labels(
    records: &[ContributionRecord],
    model: &RoleClusterModel,
    mode: LabelMode,
) -> (Vec<TrainingLabel>, usize) {
    let mut labels = Vec::with_capacity(records.len());
    let mut dropped = 0;
    let mut unknown_verbs = 0;
    for r in records {
        match fractional_lead_value(r, model, mode) {
            Ok(v) => {
                unknown_verbs += v.unknown;
                labels.push(TrainingLabel {
                    paper_id: r.paper_id.clone(),
                    author_id: r.author_id.clone(),
                    lead_value: v.value,
                });
            }
            Err(_) => dropped += 1,
        }
    }
    if unknown_verbs > 0 || dropped > 0 {
        log::warn!("{unknown_verbs} unknown verbs ignored, {dropped} units without known verbs");
    }
    (labels, dropped)
}

impl RoleClusterModel {
    /// Flat table: `#`-prefixed `key=value` metadata lines, then `verb<TAB>role` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "# k={}\n# seed={}\n# iterations={}\n# converged={}\nverb\trole\n",
            self.k, self.seed, self.iterations, self.converged
        );
        for (verb, role) in &self.roles {
            out.push_str(&format!("{verb}\t{role}\n"));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, RolesError> {
        let mut meta: HashMap<&str, &str> = HashMap::new();
        let mut roles = BTreeMap::new();
        let mut header = false;
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| RolesError::ModelFormat { line: i + 1, message };
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest.trim().split_once('=').ok_or_else(|| err("metadata must be key=value".into()))?;
                meta.insert(k.trim(), v.trim());
            } else if !header {
                if line != "verb\trole" {
                    return Err(err("expected header verb<TAB>role".into()));
                }
                header = true;
            } else if !line.is_empty() {
                let (verb, role) = line.split_once('\t').ok_or_else(|| err("expected verb<TAB>role".into()))?;
                roles.insert(verb.to_string(), role.parse().map_err(err)?);
            }
        }
        let get = |key: &str| {
            meta.get(key)
                .copied()
                .ok_or_else(|| RolesError::ModelFormat { line: 0, message: format!("missing metadata {key}") })
        };
        let bad = |key: &str| RolesError::ModelFormat { line: 0, message: format!("bad metadata {key}") };
        Ok(Self {
            roles,
            k: get("k")?.parse().map_err(|_| bad("k"))?,
            seed: get("seed")?.parse().map_err(|_| bad("seed"))?,
            iterations: get("iterations")?.parse().map_err(|_| bad("iterations"))?,
            converged: get("converged")?.parse().map_err(|_| bad("converged"))?,
        })
    }
}
