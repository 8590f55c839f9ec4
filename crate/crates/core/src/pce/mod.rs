//! Polynomial chaos machinery: multi-index sets, regression-based
//! coefficient estimation, leave-one-out validation, and the standard /
//! sparse fitting front-ends.

mod lars;
mod regression;

pub use lars::fit_sparse_pce;
pub use regression::{fit_standard_pce, loocv_error, ols_fit, regression_matrix};

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::stochastic::InputSpace;

/// Per-dimension polynomial orders identifying one basis term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(orders: Vec<u32>) -> Self {
        Self(orders)
    }

    pub fn zero(n_dims: usize) -> Self {
        Self(vec![0; n_dims])
    }

    pub fn orders(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// Sum of the entries.
    pub fn total_order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Number of nonzero entries.
    pub fn interaction_order(&self) -> usize {
        self.0.iter().filter(|&&k| k > 0).count()
    }

    /// Forward neighbor: this index with entry `dim` raised by one.
    pub fn raised(&self, dim: usize) -> Self {
        let mut v = self.0.clone();
        v[dim] += 1;
        Self(v)
    }

    /// Backward neighbor along `dim`, or None when the entry is zero.
    pub fn lowered(&self, dim: usize) -> Option<Self> {
        if self.0[dim] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[dim] -= 1;
        Some(Self(v))
    }
}

/// Graded lexicographic order: total order first, then lexicographic.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total_order()
            .cmp(&other.total_order())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let joined: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "{}", joined.join("-"))
    }
}

/// Ordered, duplicate-free collection of multi-indices. Iteration follows
/// insertion order.
#[derive(Debug, Clone, Default)]
pub struct MultiIndexSet {
    list: Vec<MultiIndex>,
    members: HashSet<MultiIndex>,
}

impl MultiIndexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_indices(indices: impl IntoIterator<Item = MultiIndex>) -> Self {
        let mut set = Self::new();
        for idx in indices {
            set.insert(idx);
        }
        set
    }

    /// Inserts the index; returns false if it was already present.
    pub fn insert(&mut self, idx: MultiIndex) -> bool {
        if self.members.contains(&idx) {
            return false;
        }
        self.members.insert(idx.clone());
        self.list.push(idx);
        true
    }

    pub fn remove(&mut self, idx: &MultiIndex) -> bool {
        if !self.members.remove(idx) {
            return false;
        }
        self.list.retain(|m| m != idx);
        true
    }

    pub fn contains(&self, idx: &MultiIndex) -> bool {
        self.members.contains(idx)
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.list.iter()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.list
    }

    /// The set's indices in graded lexicographic order.
    pub fn sorted(&self) -> Vec<MultiIndex> {
        let mut v = self.list.clone();
        v.sort();
        v
    }

    /// New set holding the graded-lex sorted union of `self` and `other`.
    pub fn union_sorted(&self, other: &Self) -> Self {
        let mut v: Vec<MultiIndex> = self.list.iter().chain(other.list.iter()).cloned().collect();
        v.sort();
        v.dedup();
        Self::from_indices(v)
    }

    /// Every backward neighbor of every member is itself a member.
    pub fn is_downward_closed(&self) -> bool {
        self.list.iter().all(|idx| {
            (0..idx.dim()).all(|d| match idx.lowered(d) {
                Some(nb) => self.contains(&nb),
                None => true,
            })
        })
    }

    /// Largest total order over the members (0 for the empty set).
    pub fn max_total_order(&self) -> u32 {
        self.list.iter().map(|m| m.total_order()).max().unwrap_or(0)
    }

    /// Largest interaction order over the members (0 for the empty set).
    pub fn max_interaction_order(&self) -> usize {
        self.list
            .iter()
            .map(|m| m.interaction_order())
            .max()
            .unwrap_or(0)
    }
}

/// All multi-indices with total order ≤ `max_order`, graded-lex ordered.
pub fn total_order_set(n_dims: usize, max_order: u32) -> MultiIndexSet {
    assert!(n_dims >= 1, "need at least one dimension");
    let mut out = Vec::new();
    let mut current = vec![0u32; n_dims];
    for total in 0..=max_order {
        push_compositions(0, total, &mut current, &mut out);
    }
    MultiIndexSet::from_indices(out)
}

fn push_compositions(dim: usize, remaining: u32, current: &mut [u32], out: &mut Vec<MultiIndex>) {
    if dim + 1 == current.len() {
        current[dim] = remaining;
        out.push(MultiIndex::new(current.to_vec()));
        return;
    }
    for v in 0..=remaining {
        current[dim] = v;
        push_compositions(dim + 1, remaining - v, current, out);
    }
    current[dim] = 0;
}

/// Cardinality of the total-order set: C(n_dims + max_order, n_dims).
pub fn total_order_cardinality(n_dims: usize, max_order: u32) -> usize {
    let n = n_dims as u128;
    let o = max_order as u128;
    let mut num = 1u128;
    let mut den = 1u128;
    for k in 1..=n {
        num *= o + k;
        den *= k;
    }
    (num / den) as usize
}

/// A fitted polynomial chaos model: basis, one coefficient column per QoI,
/// and the leave-one-out error of the fit that produced it.
#[derive(Debug, Clone)]
pub struct PceModel {
    pub basis: MultiIndexSet,
    /// N_p × N_q coefficient matrix.
    pub coeffs: Array2<f64>,
    pub space: InputSpace,
    pub loocv_error: f64,
}

impl PceModel {
    pub fn n_terms(&self) -> usize {
        self.basis.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Evaluate the surrogate at one input point.
    pub fn predict(&self, xi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_outputs()];
        for (k, idx) in self.basis.iter().enumerate() {
            let psi = crate::stochastic::multivariate_basis_eval(idx.orders(), xi, &self.space);
            for (o, out_k) in out.iter_mut().enumerate() {
                *out_k += psi * self.coeffs[(k, o)];
            }
        }
        out
    }

    /// Evaluate the surrogate at many input points (rows of `xi`).
    pub fn predict_batch(&self, xi: &Array2<f64>) -> Array2<f64> {
        let psi = regression_matrix(&self.basis, xi, &self.space);
        psi.dot(&self.coeffs)
    }

    /// Persist as text: a header followed by one line per basis term holding
    /// the multi-index and its coefficients with 17 significant digits.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "# pce model")?;
        writeln!(f, "n_d {}", self.space.dim())?;
        writeln!(f, "n_q {}", self.n_outputs())?;
        writeln!(f, "space_hash {}", self.space.content_hash())?;
        writeln!(f, "loocv_error {:.16e}", self.loocv_error)?;
        for (k, idx) in self.basis.iter().enumerate() {
            let orders: Vec<String> = idx.orders().iter().map(|o| o.to_string()).collect();
            let coeffs: Vec<String> = (0..self.n_outputs())
                .map(|o| format!("{:.16e}", self.coeffs[(k, o)]))
                .collect();
            writeln!(f, "{} {}", orders.join(" "), coeffs.join(" "))?;
        }
        Ok(())
    }

    /// Read a model written by [`PceModel::write_text`]. The supplied space
    /// must hash to the recorded value.
    pub fn read_text(path: impl AsRef<Path>, space: &InputSpace) -> Result<Self> {
        let bad = |detail: String| Error::Format {
            what: "pce model file",
            detail,
        };
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let mut header = std::collections::HashMap::new();
        let first = lines
            .next()
            .transpose()?
            .ok_or_else(|| bad("empty file".into()))?;
        if !first.starts_with("# pce model") {
            return Err(bad("missing `# pce model` header".into()));
        }
        for _ in 0..4 {
            let line = lines
                .next()
                .transpose()?
                .ok_or_else(|| bad("truncated header".into()))?;
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| bad(format!("bad header line `{line}`")))?;
            header.insert(key.to_string(), value.trim().to_string());
        }
        let n_d: usize = header
            .get("n_d")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing n_d".into()))?;
        let n_q: usize = header
            .get("n_q")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing n_q".into()))?;
        let loocv_error: f64 = header
            .get("loocv_error")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing loocv_error".into()))?;
        let recorded_hash = header
            .get("space_hash")
            .ok_or_else(|| bad("missing space_hash".into()))?;
        if n_d != space.dim() {
            return Err(bad(format!(
                "model dimension {n_d} does not match space dimension {}",
                space.dim()
            )));
        }
        if recorded_hash != &space.content_hash() {
            return Err(bad(format!(
                "space hash mismatch: file has {recorded_hash}, supplied space hashes to {}",
                space.content_hash()
            )));
        }
        let mut basis = MultiIndexSet::new();
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != n_d + n_q {
                return Err(bad(format!(
                    "term line has {} fields, expected {}",
                    fields.len(),
                    n_d + n_q
                )));
            }
            let orders: Vec<u32> = fields[..n_d]
                .iter()
                .map(|s| s.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("bad multi-index: {e}")))?;
            let coeffs: Vec<f64> = fields[n_d..]
                .iter()
                .map(|s| s.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("bad coefficient: {e}")))?;
            if !basis.insert(MultiIndex::new(orders)) {
                return Err(bad("duplicate multi-index".into()));
            }
            rows.extend_from_slice(&coeffs);
        }
        let n_p = basis.len();
        let coeffs =
            Array2::from_shape_vec((n_p, n_q), rows).expect("row-major coefficient layout");
        Ok(Self {
            basis,
            coeffs,
            space: space.clone(),
            loocv_error,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RandomInputSpec;

    #[test]
    fn total_order_set_sizes_match_binomial_table() {
        // Basis counts for five dimensions, orders one through seven
        let expected = [6usize, 21, 56, 126, 252, 462, 792];
        for (order, &want) in (1u32..=7).zip(&expected) {
            assert_eq!(total_order_set(5, order).len(), want, "order {order}");
            assert_eq!(total_order_cardinality(5, order), want);
        }
    }

    #[test]
    fn total_order_zero_is_only_the_zero_index() {
        for n in 1..=6 {
            let set = total_order_set(n, 0);
            assert_eq!(set.len(), 1);
            assert!(set.contains(&MultiIndex::zero(n)));
        }
    }

    #[test]
    fn cardinality_formula_holds_for_all_small_cases() {
        for n_dims in 1..=8 {
            for order in 0..=8u32 {
                assert_eq!(
                    total_order_set(n_dims, order).len(),
                    total_order_cardinality(n_dims, order),
                    "n_dims={n_dims} order={order}"
                );
            }
        }
    }

    #[test]
    fn graded_lex_sequence_for_two_dims() {
        let set = total_order_set(2, 2);
        let got: Vec<Vec<u32>> = set.iter().map(|m| m.orders().to_vec()).collect();
        let want = vec![
            vec![0, 0],
            vec![0, 1],
            vec![1, 0],
            vec![0, 2],
            vec![1, 1],
            vec![2, 0],
        ];
        assert_eq!(got, want);
        // generation order is already graded-lex
        assert_eq!(set.sorted(), set.indices());
    }

    #[test]
    fn set_rejects_duplicates_and_keeps_insertion_order() {
        let mut set = MultiIndexSet::new();
        assert!(set.insert(MultiIndex::new(vec![1, 0])));
        assert!(set.insert(MultiIndex::new(vec![0, 1])));
        assert!(!set.insert(MultiIndex::new(vec![1, 0])));
        let order: Vec<Vec<u32>> = set.iter().map(|m| m.orders().to_vec()).collect();
        assert_eq!(order, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn downward_closure_detection() {
        let closed = MultiIndexSet::from_indices([
            MultiIndex::new(vec![0, 0]),
            MultiIndex::new(vec![1, 0]),
            MultiIndex::new(vec![2, 0]),
        ]);
        assert!(closed.is_downward_closed());
        let open = MultiIndexSet::from_indices([
            MultiIndex::new(vec![0, 0]),
            MultiIndex::new(vec![2, 0]),
        ]);
        assert!(!open.is_downward_closed());
    }

    #[test]
    fn interaction_and_total_orders() {
        let idx = MultiIndex::new(vec![3, 0, 1, 0, 2]);
        assert_eq!(idx.total_order(), 6);
        assert_eq!(idx.interaction_order(), 3);
        assert_eq!(idx.to_string(), "3-0-1-0-2");
    }

    #[test]
    fn model_text_round_trip() {
        let space = InputSpace::new(vec![
            RandomInputSpec::new("a", 3.0, 3.0, 0.0, 1.0, "m").unwrap(),
            RandomInputSpec::new("b", 3.0, 3.0, -1.0, 1.0, "m").unwrap(),
        ])
        .unwrap();
        let basis = total_order_set(2, 1);
        let coeffs = Array2::from_shape_vec(
            (3, 2),
            vec![1.25, -0.5, 3.0e-7, 2.0, 0.125, -9.0],
        )
        .unwrap();
        let model = PceModel {
            basis,
            coeffs: coeffs.clone(),
            space: space.clone(),
            loocv_error: 1.5e-4,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        model.write_text(&path).unwrap();
        let back = PceModel::read_text(&path, &space).unwrap();
        assert_eq!(back.coeffs, coeffs);
        assert_eq!(back.loocv_error, model.loocv_error);
        assert_eq!(back.basis.indices(), model.basis.indices());

        // wrong space is rejected
        let other = InputSpace::new(vec![
            RandomInputSpec::new("a", 3.0, 3.0, 0.0, 2.0, "m").unwrap(),
            RandomInputSpec::new("b", 3.0, 3.0, -1.0, 1.0, "m").unwrap(),
        ])
        .unwrap();
        assert!(PceModel::read_text(&path, &other).is_err());
    }
}
