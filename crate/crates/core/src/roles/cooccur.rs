//! Verb co-occurrence counts over (paper, author) units and their PPMI embedding.

use std::collections::{BTreeSet, HashMap};

use super::{ContributionRecord, RolesError};

/// Symmetric co-occurrence counts. `counts[i][i]` is the number of units using verb `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    vocabulary: Vec<String>,
    counts: Vec<u64>,
    n_units: u64,
}

impl CooccurrenceMatrix {
    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn n_units(&self) -> u64 {
        self.n_units
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.len() + j]
    }

    pub fn index_of(&self, verb: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|v| v.as_str().cmp(verb)).ok()
    }

    pub fn count(&self, a: &str, b: &str) -> Option<u64> {
        Some(self.get(self.index_of(a)?, self.index_of(b)?))
    }

    /// Builds a matrix directly from a vocabulary and a dense row-major count table.
    pub fn from_dense(vocabulary: Vec<String>, counts: Vec<u64>, n_units: u64) -> Result<Self, RolesError> {
        let n = vocabulary.len();
        let sorted = vocabulary.windows(2).all(|w| w[0] < w[1]);
        if counts.len() != n * n || !sorted {
            return Err(RolesError::InvalidMatrix(
                "vocabulary must be sorted and unique with an n*n count table".into(),
            ));
        }
        let m = Self { vocabulary, counts, n_units };
        for i in 0..n {
            for j in 0..n {
                if m.get(i, j) != m.get(j, i) || m.get(i, j) > m.get(i, i).min(m.get(j, j)) {
                    return Err(RolesError::InvalidMatrix(format!(
                        "cell ({i},{j}) breaks symmetry or the diagonal bound"
                    )));
                }
            }
        }
        Ok(m)
    }

    /// Positive PMI rows with add-one smoothing on every off-diagonal cell, L2-normalized.
    ///
    /// With smoothed joint counts `c'(i,j) = c(i,j) + 1` for `i != j`, marginals
    /// `R(i) = sum_j c'(i,j)` and total `T = sum_i R(i)`, the entry is
    /// `max(0, ln(c'(i,j) * T / (R(i) * R(j))))`. The diagonal is zero.
    pub fn ppmi_embedding(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let smoothed = |i: usize, j: usize| (self.get(i, j) + 1) as f64;
        let marginals: Vec<f64> = (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| smoothed(i, j)).sum()).collect();
        let total: f64 = marginals.iter().sum();
        (0..n)
            .map(|i| {
                let mut row: Vec<f64> = (0..n)
                    .map(|j| {
                        if i == j {
                            0.0
                        } else {
                            (smoothed(i, j) * total / (marginals[i] * marginals[j])).ln().max(0.0)
                        }
                    })
                    .collect();
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|v| *v /= norm);
                }
                row
            })
            .collect()
    }
}

/// Commutative accumulator for co-occurrence counts; shards can be merged in any order.
#[derive(Debug, Clone, Default)]
pub struct CooccurrenceAccumulator {
    // (a, b) with a <= b; a == b holds the per-verb unit count
    pairs: HashMap<(String, String), u64>,
    n_units: u64,
}

impl CooccurrenceAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, record: &ContributionRecord) {
        let verbs: BTreeSet<&str> = record.verbs.iter().map(String::as_str).collect();
        let verbs: Vec<&str> = verbs.into_iter().collect();
        for (i, a) in verbs.iter().enumerate() {
            for b in &verbs[i..] {
                *self.pairs.entry((a.to_string(), b.to_string())).or_insert(0) += 1;
            }
        }
        self.n_units += 1;
    }

    pub fn merge(&mut self, other: CooccurrenceAccumulator) {
        for (k, v) in other.pairs {
            *self.pairs.entry(k).or_insert(0) += v;
        }
        self.n_units += other.n_units;
    }

    pub fn finish(self) -> Result<CooccurrenceMatrix, RolesError> {
        if self.n_units == 0 {
            return Err(RolesError::EmptyCorpus);
        }
        let vocab: BTreeSet<&String> = self.pairs.keys().flat_map(|(a, b)| [a, b]).collect();
        let vocabulary: Vec<String> = vocab.into_iter().cloned().collect();
        let n = vocabulary.len();
        let index: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut counts = vec![0u64; n * n];
        for ((a, b), c) in &self.pairs {
            let (i, j) = (index[a.as_str()], index[b.as_str()]);
            counts[i * n + j] = *c;
            counts[j * n + i] = *c;
        }
        Ok(CooccurrenceMatrix { vocabulary, counts, n_units: self.n_units })
    }
}

/// Each record is one (paper, author) unit; repeated verbs within a unit count once.
pub fn build_cooccurrence<'a, I>(records: I) -> Result<CooccurrenceMatrix, RolesError>
where
    I: IntoIterator<Item = &'a ContributionRecord>,
{
    let mut acc = CooccurrenceAccumulator::new();
    for r in records {
        acc.add(r);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(verbs: &[&str]) -> ContributionRecord {
        ContributionRecord {
            paper_id: "p".into(),
            author_id: "a".into(),
            verbs: verbs.iter().map(|v| v.to_string()).collect(),
        }
    }

    #[test]
    fn single_unit() {
        let m = build_cooccurrence(&[rec(&["design", "write"])]).unwrap();
        assert_eq!(m.count("design", "write"), Some(1));
        assert_eq!(m.count("write", "design"), Some(1));
        assert_eq!(m.count("design", "design"), Some(1));
        assert_eq!(m.count("write", "write"), Some(1));
        let dup = build_cooccurrence(&[rec(&["design", "design", "write"])]).unwrap();
        assert_eq!(dup, m);
    }

    #[test]
    fn two_units_hand_count() {
        let m = build_cooccurrence(&[rec(&["a", "b"]), rec(&["b", "c"])]).unwrap();
        assert_eq!(m.count("a", "b"), Some(1));
        assert_eq!(m.count("b", "c"), Some(1));
        assert_eq!(m.count("a", "c"), Some(0));
        assert_eq!(m.count("b", "b"), Some(2));
        assert_eq!(m.n_units(), 2);
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(build_cooccurrence(std::iter::empty()), Err(RolesError::EmptyCorpus)));
    }

    #[test]
    fn ppmi_rows_are_unit_or_zero() {
        let m = build_cooccurrence(&[rec(&["a", "b"]), rec(&["b", "c"]), rec(&["a"])]).unwrap();
        for (i, row) in m.ppmi_embedding().iter().enumerate() {
            assert_eq!(row[i], 0.0);
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>();
            assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn from_dense_checks_bound() {
        let v = vec!["a".to_string(), "b".to_string()];
        assert!(CooccurrenceMatrix::from_dense(v.clone(), vec![1, 2, 2, 3], 3).is_err());
        assert!(CooccurrenceMatrix::from_dense(v, vec![2, 1, 1, 3], 4).is_ok());
    }

    fn arb_records() -> impl Strategy<Value = Vec<ContributionRecord>> {
        prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 1..5).prop_map(|v| rec(&v)),
            1..20,
        )
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(records in arb_records()) {
            let m = build_cooccurrence(&records).unwrap();
            for i in 0..m.len() {
                for j in 0..m.len() {
                    prop_assert_eq!(m.get(i, j), m.get(j, i));
                    prop_assert!(m.get(i, j) <= m.get(i, i).min(m.get(j, j)));
                }
            }
        }

        #[test]
        fn order_and_sharding_do_not_matter(records in arb_records(), split in 0usize..20) {
            let whole = build_cooccurrence(&records).unwrap();
            let mut rev = records.clone();
            rev.reverse();
            prop_assert_eq!(&build_cooccurrence(&rev).unwrap(), &whole);
            let split = split.min(records.len());
            let mut left = CooccurrenceAccumulator::new();
            records[..split].iter().for_each(|r| left.add(r));
            let mut right = CooccurrenceAccumulator::new();
            records[split..].iter().for_each(|r| right.add(r));
            right.merge(left);
            prop_assert_eq!(right.finish().unwrap(), whole);
        }
    }
}
