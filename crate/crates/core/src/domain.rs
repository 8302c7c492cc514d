//! Finite data domains, histograms, and linear query workloads.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::WorkloadMatrix;

/// A discrete, finite data domain: the list of legal record values.
///
/// Identity is structural: two domains are equal when they have the same
/// size and the same labels (or both have none).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataDomain {
    size: usize,
    labels: Option<Vec<String>>,
}

impl DataDomain {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("domain", "size must be at least 1"));
        }
        Ok(DataDomain { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("domain", "size must be at least 1"));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::invalid("domain", format!("duplicate label {a:?}")));
            }
        }
        Ok(DataDomain {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Nonnegative integer counts over a finite data domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    domain: DataDomain,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(domain: DataDomain, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != domain.size() {
            return Err(Error::invalid(
                "histogram",
                format!(
                    "expected {} counts for the domain, got {}",
                    domain.size(),
                    counts.len()
                ),
            ));
        }
        Ok(Histogram { domain, counts })
    }

    /// Parse the plain-text matrix format: a `domain <size>` header line
    /// followed by one whitespace-separated row of counts.
    pub fn from_text(text: &str) -> Result<Self> {
        let (domain, rows) = parse_matrix_text(text)?;
        if rows.len() != 1 {
            return Err(Error::ParseError {
                line: 2,
                message: format!("expected exactly one count row, got {}", rows.len()),
            });
        }
        let mut counts = Vec::with_capacity(domain.size());
        for (j, v) in rows[0].iter().enumerate() {
            if *v < 0.0 || v.fract() != 0.0 {
                return Err(Error::ParseError {
                    line: 2,
                    message: format!("count {j} must be a nonnegative integer, got {v}"),
                });
            }
            counts.push(*v as u64);
        }
        Histogram::new(domain, counts)
    }

    pub fn domain(&self) -> &DataDomain {
        &self.domain
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of records in the database (the histogram's l1 norm).
    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of records that differ between the two histograms.
    ///
    /// A result of 1 means the histograms are adjacent.
    pub fn l1_distance(&self, other: &Histogram) -> Result<u64> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch(
                "histograms live on different domains".into(),
            ));
        }
        Ok(self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a.abs_diff(*b))
            .sum())
    }

    pub fn is_adjacent(&self, other: &Histogram) -> Result<bool> {
        Ok(self.l1_distance(other)? == 1)
    }

    /// Componentwise sum (concatenation of the underlying databases).
    pub fn add(&self, other: &Histogram) -> Result<Histogram> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch(
                "histograms live on different domains".into(),
            ));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        Histogram::new(self.domain.clone(), counts)
    }
}

/// A k x |domain| matrix of linear queries with entries in [-1, 1].
///
/// The strategy matrix of the matrix mechanism is the same type in a
/// different role.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryWorkload {
    domain: DataDomain,
    matrix: WorkloadMatrix,
}

impl QueryWorkload {
    pub fn new(domain: DataDomain, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("workload", "at least one query row required"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != domain.size() {
                return Err(Error::invalid(
                    "workload",
                    format!(
                        "row {i} has {} entries, expected {}",
                        row.len(),
                        domain.size()
                    ),
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&v) || v.is_nan() {
                    return Err(Error::invalid(
                        "workload",
                        format!("entry ({i}, {j}) = {v} outside [-1, 1]"),
                    ));
                }
            }
        }
        let k = rows.len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let matrix = WorkloadMatrix::Dense(DMatrix::from_row_slice(k, domain.size(), &flat));
        Ok(QueryWorkload { domain, matrix })
    }

    /// The identity workload: one counting query per domain cell.
    ///
    /// Stored structurally, so it is cheap even for tens of thousands of
    /// cells.
    pub fn identity(domain: DataDomain) -> Self {
        let matrix = WorkloadMatrix::Identity(domain.size());
        QueryWorkload { domain, matrix }
    }

    /// Parse the plain-text matrix format: a `domain <size>` header line
    /// followed by whitespace-separated query rows.
    pub fn from_text(text: &str) -> Result<Self> {
        let (domain, rows) = parse_matrix_text(text)?;
        QueryWorkload::new(domain, rows)
    }

    pub fn domain(&self) -> &DataDomain {
        &self.domain
    }

    pub fn num_queries(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &WorkloadMatrix {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix.entry(row, col)
    }

    /// True when every entry is 0 or 1.
    pub fn is_counting(&self) -> bool {
        match &self.matrix {
            WorkloadMatrix::Identity(_) => true,
            WorkloadMatrix::Dense(m) => m.iter().all(|&v| v == 0.0 || v == 1.0),
        }
    }

    /// The exact answer Qx to the workload on a histogram.
    pub fn exact_answer(&self, histogram: &Histogram) -> Result<Vec<f64>> {
        if self.domain != *histogram.domain() {
            return Err(Error::DomainMismatch(
                "workload and histogram live on different domains".into(),
            ));
        }
        let x: Vec<f64> = histogram.counts().iter().map(|&c| c as f64).collect();
        Ok(self.matrix.mul_vec(&x))
    }

    /// The l1 workload sensitivity: the maximum column l1 norm, which
    /// equals the maximum l1 change in answers across adjacent histograms.
    pub fn sensitivity(&self) -> f64 {
        self.matrix.max_column_l1()
    }
}

/// Free-function spellings of the workload/histogram operations.
pub fn total_count(h: &Histogram) -> u64 {
    h.total_count()
}

pub fn l1_distance(a: &Histogram, b: &Histogram) -> Result<u64> {
    a.l1_distance(b)
}

pub fn exact_answer(q: &QueryWorkload, h: &Histogram) -> Result<Vec<f64>> {
    q.exact_answer(h)
}

pub fn workload_sensitivity(q: &QueryWorkload) -> f64 {
    q.sensitivity()
}

fn parse_matrix_text(text: &str) -> Result<(DataDomain, Vec<Vec<f64>>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::ParseError {
        line: 1,
        message: "empty input".into(),
    })?;
    let mut parts = header.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some("domain"), Some(size), None) => {
            let size: usize = size.parse().map_err(|_| Error::ParseError {
                line: 1,
                message: format!("invalid domain size {size:?}"),
            })?;
            let domain = DataDomain::new(size).map_err(|e| Error::ParseError {
                line: 1,
                message: e.to_string(),
            })?;
            let mut rows = Vec::new();
            for (idx, line) in lines {
                if line.trim().is_empty() {
                    continue;
                }
                let row: Vec<f64> = line
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>().map_err(|_| Error::ParseError {
                            line: idx + 1,
                            message: format!("invalid number {tok:?}"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if row.len() != size {
                    return Err(Error::ParseError {
                        line: idx + 1,
                        message: format!("expected {size} entries, got {}", row.len()),
                    });
                }
                rows.push(row);
            }
            if rows.is_empty() {
                return Err(Error::ParseError {
                    line: 2,
                    message: "no data rows".into(),
                });
            }
            Ok((domain, rows))
        }
        _ => Err(Error::ParseError {
            line: 1,
            message: "expected header `domain <size>`".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: &[u64]) -> Histogram {
        let d = DataDomain::new(counts.len()).unwrap();
        Histogram::new(d, counts.to_vec()).unwrap()
    }

    #[test]
    fn total_count_examples() {
        assert_eq!(hist(&[0, 0, 0]).total_count(), 0);
        assert_eq!(hist(&[1, 0, 1, 1]).total_count(), 3);
        assert_eq!(hist(&[5, 7]).total_count(), 12);
    }

    #[test]
    fn l1_distance_examples() {
        assert_eq!(hist(&[1, 2]).l1_distance(&hist(&[1, 2])).unwrap(), 0);
        assert_eq!(hist(&[1, 2]).l1_distance(&hist(&[1, 3])).unwrap(), 1);
        assert!(hist(&[1, 2]).is_adjacent(&hist(&[1, 3])).unwrap());
        assert_eq!(hist(&[3, 0, 1]).l1_distance(&hist(&[0, 3, 1])).unwrap(), 6);
    }

    #[test]
    fn l1_distance_rejects_mismatched_domains() {
        let err = hist(&[1, 2]).l1_distance(&hist(&[1, 2, 3])).unwrap_err();
        assert_eq!(err.name(), "DomainMismatch");
    }

    #[test]
    fn exact_answer_examples() {
        let d = DataDomain::new(2).unwrap();
        let x = Histogram::new(d.clone(), vec![3, 5]).unwrap();

        let identity = QueryWorkload::identity(d.clone());
        assert_eq!(identity.exact_answer(&x).unwrap(), vec![3.0, 5.0]);

        let total = QueryWorkload::new(d.clone(), vec![vec![1.0, 1.0]]).unwrap();
        assert_eq!(total.exact_answer(&x).unwrap(), vec![8.0]);

        let q = QueryWorkload::new(
            d,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        assert_eq!(q.exact_answer(&x).unwrap(), vec![3.0, 5.0, 8.0]);
    }

    #[test]
    fn sensitivity_examples() {
        let d = DataDomain::new(5).unwrap();
        assert_eq!(QueryWorkload::identity(d).sensitivity(), 1.0);

        let d = DataDomain::new(2).unwrap();
        let q = QueryWorkload::new(
            d.clone(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        assert_eq!(q.sensitivity(), 2.0);

        let diff = QueryWorkload::new(d, vec![vec![1.0, -1.0]]).unwrap();
        assert_eq!(diff.sensitivity(), 1.0);
    }

    #[test]
    fn workload_rejects_out_of_range_entries() {
        let d = DataDomain::new(2).unwrap();
        let err = QueryWorkload::new(d, vec![vec![1.5, 0.0]]).unwrap_err();
        assert_eq!(err.name(), "Invalid");
    }

    #[test]
    fn counting_workload_detection() {
        let d = DataDomain::new(2).unwrap();
        assert!(QueryWorkload::new(d.clone(), vec![vec![1.0, 0.0]])
            .unwrap()
            .is_counting());
        assert!(!QueryWorkload::new(d, vec![vec![0.5, 0.0]])
            .unwrap()
            .is_counting());
    }

    #[test]
    fn domain_labels_must_be_unique() {
        assert!(DataDomain::with_labels(vec!["a".into(), "a".into()]).is_err());
        let d = DataDomain::with_labels(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(d.size(), 2);
    }

    #[test]
    fn text_format_round() {
        let h = Histogram::from_text("domain 3\n1 0 2\n").unwrap();
        assert_eq!(h.counts(), &[1, 0, 2]);

        let q = QueryWorkload::from_text("domain 2\n1 0\n0 1\n1 1\n").unwrap();
        assert_eq!(q.num_queries(), 3);
        assert_eq!(q.sensitivity(), 2.0);

        assert!(Histogram::from_text("domain x\n1\n").is_err());
        assert!(Histogram::from_text("domain 2\n1 -3\n").is_err());
        assert!(QueryWorkload::from_text("domain 2\n1 0 1\n").is_err());
    }

    // Exhaustive oracle: sensitivity equals the max l1 answer change over
    // all adjacent pairs, with equality attained.
    #[test]
    fn sensitivity_matches_adjacent_pair_oracle() {
        fn histograms_with_total(cells: usize, total: u64) -> Vec<Vec<u64>> {
            if cells == 1 {
                return vec![vec![total]];
            }
            let mut out = Vec::new();
            for first in 0..=total {
                for mut rest in histograms_with_total(cells - 1, total - first) {
                    let mut h = vec![first];
                    h.append(&mut rest);
                    out.push(h);
                }
            }
            out
        }

        let fixtures: Vec<QueryWorkload> = vec![
            QueryWorkload::new(
                DataDomain::new(2).unwrap(),
                vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            )
            .unwrap(),
            QueryWorkload::new(DataDomain::new(2).unwrap(), vec![vec![1.0, -1.0]]).unwrap(),
            QueryWorkload::new(
                DataDomain::new(3).unwrap(),
                vec![vec![0.5, -0.25, 1.0], vec![0.0, 1.0, -1.0]],
            )
            .unwrap(),
            QueryWorkload::identity(DataDomain::new(4).unwrap()),
        ];

        for q in fixtures {
            let cells = q.domain().size().min(6);
            let delta = q.sensitivity();
            let mut max_seen: f64 = 0.0;
            for n in 0..6u64 {
                for base in histograms_with_total(cells, n) {
                    let x = Histogram::new(q.domain().clone(), base.clone()).unwrap();
                    for cell in 0..cells {
                        let mut bumped = base.clone();
                        bumped[cell] += 1;
                        let y = Histogram::new(q.domain().clone(), bumped).unwrap();
                        assert_eq!(x.l1_distance(&y).unwrap(), 1);
                        let ax = q.exact_answer(&x).unwrap();
                        let ay = q.exact_answer(&y).unwrap();
                        let diff: f64 =
                            ax.iter().zip(&ay).map(|(a, b)| (a - b).abs()).sum();
                        assert!(diff <= delta + 1e-12);
                        max_seen = max_seen.max(diff);
                    }
                }
            }
            assert!(
                (max_seen - delta).abs() < 1e-12,
                "sensitivity bound not attained: {max_seen} vs {delta}"
            );
        }
    }

    #[test]
    fn sensitivity_invariant_under_permutations() {
        let d = DataDomain::new(3).unwrap();
        let rows = vec![vec![0.5, -0.25, 1.0], vec![0.0, 1.0, -1.0]];
        let q = QueryWorkload::new(d.clone(), rows.clone()).unwrap();

        // Row permutation.
        let q_rows = QueryWorkload::new(d.clone(), vec![rows[1].clone(), rows[0].clone()]).unwrap();
        assert_eq!(q.sensitivity(), q_rows.sensitivity());

        // Column permutation with matching domain relabeling.
        let perm = [2usize, 0, 1];
        let permuted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| perm.iter().map(|&j| r[j]).collect())
            .collect();
        let q_cols = QueryWorkload::new(d, permuted).unwrap();
        assert_eq!(q.sensitivity(), q_cols.sensitivity());
    }

    #[test]
    fn exact_answer_is_linear() {
        let d = DataDomain::new(3).unwrap();
        let q = QueryWorkload::new(
            d.clone(),
            vec![vec![0.5, -0.25, 1.0], vec![0.0, 1.0, -1.0]],
        )
        .unwrap();
        let x = Histogram::new(d.clone(), vec![1, 4, 2]).unwrap();
        let y = Histogram::new(d, vec![3, 0, 5]).unwrap();
        let sum = x.add(&y).unwrap();
        let lhs = q.exact_answer(&sum).unwrap();
        let rhs: Vec<f64> = q
            .exact_answer(&x)
            .unwrap()
            .iter()
            .zip(q.exact_answer(&y).unwrap())
            .map(|(a, b)| a + b)
            .collect();
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
