use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sets::NestedCrossSets;
use crate::error::{Result, TtError};
use crate::index::{MultiIndex, Shape};
use crate::lu::PivotedLu;
use crate::oracle::Oracle;
use crate::tt::{Core, TensorTrain};

/// Why a greedy run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The sampled residual fell below the tolerance.
    Converged,
    /// No cross could be added because every bond rank is at its cap.
    RankCapReached,
    /// No cross was added although ranks could still grow.
    Stagnated,
    /// The sweep (or iteration) limit was hit.
    SweepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

/// One pivot search: a supercore visit, or one greedy global iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub sweep: usize,
    /// Separators that received the cross; empty when it was rejected.
    pub separators: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub direction: Option<Direction>,
    /// The pivot, serialized one-based.
    pub pivot: Option<MultiIndex>,
    /// Largest residual magnitude seen in the search.
    pub residual: f64,
    pub ranks: Vec<usize>,
    /// Distinct oracle entries evaluated so far.
    pub oracle_calls: u64,
}

/// The TT cross interpolation
/// `A~ = G_1 A_1^{-1} G_2 ... A_{d-1}^{-1} G_d` with
/// `G_k = A(I^{<=k-1}, i_k, I^{>k})` and `A_k = A(I^{<=k}, I^{>k})`.
#[derive(Debug, Clone)]
pub struct CrossFactorization {
    sets: NestedCrossSets,
    /// `blocks[c]` is `G_{c+1}`, an `r_c x n_{c+1} x r_{c+1}` array.
    blocks: Vec<Core>,
    /// `lus[k-1]` factors `A_k`; `None` when `r_k = 0`.
    lus: Vec<Option<PivotedLu>>,
    intersections: Vec<DMatrix<f64>>,
    pub(crate) stop: StopReason,
    pub(crate) sweeps: usize,
    pub(crate) trace: Vec<TraceEntry>,
}

impl CrossFactorization {
    /// Samples every block of the given sets.
    pub fn from_sets(oracle: &impl Oracle, sets: NestedCrossSets) -> Result<Self> {
        if oracle.shape() != sets.shape() {
            return Err(TtError::DimensionMismatch(format!(
                "oracle shape {} vs sets shape {}",
                oracle.shape(),
                sets.shape()
            )));
        }
        let d = sets.ndim();
        let mut blocks = Vec::with_capacity(d);
        for c in 0..d {
            blocks.push(sample_block(oracle, &sets, c)?);
        }
        let mut cf = Self {
            sets,
            blocks,
            lus: vec![None; d - 1],
            intersections: vec![DMatrix::zeros(0, 0); d - 1],
            stop: StopReason::Converged,
            sweeps: 0,
            trace: Vec::new(),
        };
        for k in 1..d {
            let a = sample_intersection(oracle, &cf.sets, k)?;
            cf.set_intersection(k, a)?;
        }
        Ok(cf)
    }

    /// All-empty sets: the approximation is identically zero.
    pub fn empty(oracle: &impl Oracle) -> Result<Self> {
        Self::from_sets(oracle, NestedCrossSets::empty(oracle.shape()))
    }

    fn set_intersection(&mut self, k: usize, a: DMatrix<f64>) -> Result<()> {
        self.lus[k - 1] = if a.nrows() == 0 {
            None
        } else {
            Some(PivotedLu::factor(&a).map_err(|_| TtError::SingularIntersection { separator: k })?)
        };
        self.intersections[k - 1] = a;
        Ok(())
    }

    pub fn shape(&self) -> &Shape {
        self.sets.shape()
    }

    pub fn ndim(&self) -> usize {
        self.sets.ndim()
    }

    pub fn sets(&self) -> &NestedCrossSets {
        &self.sets
    }

    /// Bond ranks `r_1..r_{d-1}`.
    pub fn ranks(&self) -> Vec<usize> {
        self.sets.ranks()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// `G_{c+1}` for `c = 0..d-1`.
    pub fn blocks(&self) -> &[Core] {
        &self.blocks
    }

    /// `A_k` for `k = 1..d-1`.
    pub fn intersection(&self, k: usize) -> &DMatrix<f64> {
        &self.intersections[k - 1]
    }

    pub fn intersection_lu(&self, k: usize) -> Option<&PivotedLu> {
        self.lus[k - 1].as_ref()
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop
    }

    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    fn is_zero(&self) -> bool {
        self.ranks().contains(&0)
    }

    /// Max-abs over all sampled block entries.
    pub fn block_max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.data().iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Full multi-index of block entry `(a, i, b)` of `G_{c+1}`.
    pub fn block_index(&self, c: usize, a: usize, i: usize, b: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.ndim());
        idx.extend_from_slice(&self.sets.left(c)[a]);
        idx.push(i);
        idx.extend_from_slice(&self.sets.right(c + 1)[b]);
        idx
    }

    /// Appends the cross `(left, right)` at separator `k` and refreshes the
    /// two affected blocks and `A_k`. Returns `false`, leaving everything
    /// unchanged, when the enlarged `A_k` is numerically singular.
    pub(crate) fn insert_cross(
        &mut self,
        oracle: &impl Oracle,
        k: usize,
        left: &[usize],
        right: &[usize],
    ) -> Result<bool> {
        let d = self.ndim();
        debug_assert!(k >= 1 && k < d && left.len() == k && right.len() == d - k);
        let old_left = self.blocks[k - 1].clone();
        let old_right = self.blocks[k].clone();
        self.sets.push(k, left.to_vec(), right.to_vec());

        // G_k gains a trailing right index: append one (a, i) slab.
        let g = &self.blocks[k - 1];
        let (rl, n) = (g.left(), g.mode());
        let mut data = g.data().to_vec();
        let mut idx = Vec::with_capacity(d);
        for i in 0..n {
            for a in 0..rl {
                idx.clear();
                idx.extend_from_slice(&self.sets.left(k - 1)[a]);
                idx.push(i);
                idx.extend_from_slice(right);
                data.push(oracle.eval(&idx)?);
            }
        }
        self.blocks[k - 1] = Core::from_vec(rl, n, g.right() + 1, data)?;

        // G_{k+1} gains a trailing left index.
        let g = &self.blocks[k];
        let (rl, n, rr) = (g.left(), g.mode(), g.right());
        let mut next = Core::zeros(rl + 1, n, rr);
        for b in 0..rr {
            for i in 0..n {
                for a in 0..rl {
                    next.set(a, i, b, g.get(a, i, b));
                }
                idx.clear();
                idx.extend_from_slice(left);
                idx.push(i);
                idx.extend_from_slice(&self.sets.right(k + 1)[b]);
                next.set(rl, i, b, oracle.eval(&idx)?);
            }
        }
        self.blocks[k] = next;

        let a = sample_intersection(oracle, &self.sets, k)?;
        let old_a = std::mem::replace(&mut self.intersections[k - 1], DMatrix::zeros(0, 0));
        let old_lu = self.lus[k - 1].take();
        if self.set_intersection(k, a).is_err() {
            self.sets.pop(k);
            self.blocks[k - 1] = old_left;
            self.blocks[k] = old_right;
            self.intersections[k - 1] = old_a;
            self.lus[k - 1] = old_lu;
            return Ok(false);
        }
        Ok(true)
    }

    /// `G_k A_k^{-1}` as an `(r_{k-1} n_k) x r_k` matrix, rows `a + r_{k-1} i`.
    pub(crate) fn left_interface(&self, k: usize) -> DMatrix<f64> {
        let g = self.blocks[k - 1].as_left_matrix();
        match &self.lus[k - 1] {
            Some(lu) => lu.right_divide(&g),
            None => g,
        }
    }
}

fn sample_block(oracle: &impl Oracle, sets: &NestedCrossSets, c: usize) -> Result<Core> {
    let left = sets.left(c);
    let right = sets.right(c + 1);
    let n = sets.shape().mode(c);
    let mut core = Core::zeros(left.len(), n, right.len());
    let mut idx = Vec::with_capacity(sets.ndim());
    for (b, r) in right.iter().enumerate() {
        for i in 0..n {
            for (a, l) in left.iter().enumerate() {
                idx.clear();
                idx.extend_from_slice(l);
                idx.push(i);
                idx.extend_from_slice(r);
                core.set(a, i, b, oracle.eval(&idx)?);
            }
        }
    }
    Ok(core)
}

fn sample_intersection(oracle: &impl Oracle, sets: &NestedCrossSets, k: usize) -> Result<DMatrix<f64>> {
    let left = sets.left(k);
    let right = sets.right(k);
    let mut a = DMatrix::zeros(left.len(), right.len());
    let mut idx = Vec::with_capacity(sets.ndim());
    for (s, l) in left.iter().enumerate() {
        for (t, r) in right.iter().enumerate() {
            idx.clear();
            idx.extend_from_slice(l);
            idx.extend_from_slice(r);
            a[(s, t)] = oracle.eval(&idx)?;
        }
    }
    Ok(a)
}

/// Evaluates the interpolation at one index by chaining block slices and
/// triangular solves, `O(d r^2)` work.
pub fn cross_evaluate(cf: &CrossFactorization, idx: &[usize]) -> Result<f64> {
    cf.shape().check(idx)?;
    Ok(evaluate_unchecked(cf, idx))
}

pub(crate) fn evaluate_unchecked(cf: &CrossFactorization, idx: &[usize]) -> f64 {
    if cf.is_zero() {
        return 0.0;
    }
    let mut v = vec![1.0];
    let mut w = Vec::new();
    for (c, block) in cf.blocks.iter().enumerate() {
        w.resize(block.right(), 0.0);
        block.apply_left(&v, idx[c], &mut w);
        if let Some(Some(lu)) = cf.lus.get(c) {
            lu.solve_transpose_in_place(&mut w);
        }
        std::mem::swap(&mut v, &mut w);
    }
    v[0]
}

/// The interpolation as a tensor train: core `k` is `G_k A_k^{-1}`, the last
/// core is `G_d`. Ranks equal the set sizes; an interpolation with an empty
/// set becomes the rank-one zero train.
pub fn cross_to_tt(cf: &CrossFactorization) -> Result<TensorTrain> {
    if cf.is_zero() {
        return Ok(TensorTrain::zeros(cf.shape()));
    }
    let d = cf.ndim();
    let mut cores = Vec::with_capacity(d);
    for c in 0..d {
        let block = &cf.blocks[c];
        if c + 1 < d {
            let m = cf.left_interface(c + 1);
            cores.push(Core::from_vec(
                block.left(),
                block.mode(),
                block.right(),
                m.as_slice().to_vec(),
            )?);
        } else {
            cores.push(block.clone());
        }
    }
    TensorTrain::new(cores)
}

/// Max over every entry of every block `G_k` of `|A - A~|`. With nested sets
/// the interpolation reproduces all of them.
pub fn interpolation_residual_on_blocks(cf: &CrossFactorization, oracle: &impl Oracle) -> Result<f64> {
    let mut worst = 0.0f64;
    for (c, block) in cf.blocks.iter().enumerate() {
        for b in 0..block.right() {
            for i in 0..block.mode() {
                for a in 0..block.left() {
                    let idx = cf.block_index(c, a, i, b);
                    let res = oracle.eval(&idx)? - evaluate_unchecked(cf, &idx);
                    worst = worst.max(res.abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Number of distinct tensor entries referenced by the blocks `G_k`.
pub fn distinct_entries(cf: &CrossFactorization) -> usize {
    let mut seen = HashSet::new();
    for (c, block) in cf.blocks.iter().enumerate() {
        for b in 0..block.right() {
            for i in 0..block.mode() {
                for a in 0..block.left() {
                    seen.insert(cf.block_index(c, a, i, b));
                }
            }
        }
    }
    seen.len()
}

/// `s = sum_k r_{k-1} n_k r_k - sum_k r_k^2`, the number of entries that
/// determine a nested cross interpolation with bond ranks `ranks`.
pub fn parameter_count(shape: &Shape, ranks: &[usize]) -> Result<usize> {
    let d = shape.ndim();
    if ranks.len() + 1 != d {
        return Err(TtError::InvalidRanks(format!(
            "expected {} bond ranks, got {}",
            d - 1,
            ranks.len()
        )));
    }
    let full: Vec<usize> = std::iter::once(1)
        .chain(ranks.iter().copied())
        .chain(std::iter::once(1))
        .collect();
    let blocks: usize = (0..d).map(|k| full[k] * shape.mode(k) * full[k + 1]).sum();
    let overlaps: usize = ranks.iter().map(|r| r * r).sum();
    Ok(blocks - overlaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross::sets::check_nestedness;
    use crate::oracle::{exact_tt, TensorOracle};

    #[test]
    fn parameter_count_examples() {
        let s = Shape::uniform(3, 2).unwrap();
        assert_eq!(parameter_count(&s, &[2, 2]).unwrap(), 8);
        assert_eq!(parameter_count(&Shape::new(vec![7]).unwrap(), &[]).unwrap(), 7);
        let m = Shape::new(vec![9, 5]).unwrap();
        assert_eq!(parameter_count(&m, &[3]).unwrap(), (9 + 5) * 3 - 9);
        assert!(parameter_count(&s, &[2]).is_err());
    }

    #[test]
    fn one_dimensional_is_the_fiber() {
        let o = TensorOracle::from_fn(Shape::new(vec![4]).unwrap(), |i| i[0] as f64 - 1.5);
        let cf = CrossFactorization::from_sets(&o, NestedCrossSets::empty(o.shape())).unwrap();
        for i in 0..4 {
            assert_eq!(cross_evaluate(&cf, &[i]).unwrap(), i as f64 - 1.5);
        }
    }

    #[test]
    fn matrix_case_is_the_skeleton() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let o = TensorOracle::from_fn(Shape::new(vec![2, 2]).unwrap(), move |i| a[(i[0], i[1])]);
        let sets = NestedCrossSets::from_full_index(o.shape(), &[0, 0]).unwrap();
        let cf = CrossFactorization::from_sets(&o, sets).unwrap();
        assert_eq!(cross_evaluate(&cf, &[1, 1]).unwrap(), 6.0);
        let tt = cross_to_tt(&cf).unwrap();
        assert_eq!(tt.ranks(), vec![1]);
        assert_eq!(tt.evaluate(&[1, 1]).unwrap(), 6.0);
    }

    fn nested_sets_for(shape: &Shape) -> NestedCrossSets {
        // two crosses through (1,1,1) and (2,2,2), one-based
        let left = vec![vec![vec![0], vec![1]], vec![vec![0, 0], vec![1, 1]]];
        let right = vec![vec![vec![0, 0], vec![1, 1]], vec![vec![0], vec![1]]];
        NestedCrossSets::from_lists(shape, left, right).unwrap()
    }

    #[test]
    fn exact_tt_recovered_from_nested_sets() {
        let shape = Shape::uniform(3, 2).unwrap();
        let tt = TensorTrain::random(&shape, &[2, 2], 4).unwrap();
        let o = exact_tt(tt.clone());
        let sets = nested_sets_for(&shape);
        assert!(check_nestedness(&sets).is_nested());
        let cf = CrossFactorization::from_sets(&o, sets).unwrap();
        let scale = tt.to_dense().unwrap().chebyshev_norm();
        for idx in shape.indices() {
            let got = cross_evaluate(&cf, &idx).unwrap();
            assert!((got - tt.evaluate(&idx).unwrap()).abs() <= 1e-12 * scale);
        }
        assert!(interpolation_residual_on_blocks(&cf, &o).unwrap() <= 1e-13 * scale);
        assert_eq!(distinct_entries(&cf), parameter_count(&shape, &[2, 2]).unwrap());
    }

    #[test]
    fn tt_form_matches_evaluation() {
        let shape = Shape::new(vec![3, 2, 4]).unwrap();
        let o = TensorOracle::from_fn(shape.clone(), |i| {
            1.0 / (1.0 + i[0] as f64 + 2.0 * i[1] as f64 + 0.5 * i[2] as f64)
        });
        let sets = nested_sets_for(&shape);
        let cf = CrossFactorization::from_sets(&o, sets).unwrap();
        let tt = cross_to_tt(&cf).unwrap();
        assert_eq!(tt.ranks(), cf.ranks());
        for idx in shape.indices() {
            assert!((tt.evaluate(&idx).unwrap() - cross_evaluate(&cf, &idx).unwrap()).abs() <= 1e-13);
        }
    }

    #[test]
    fn empty_factorization_is_zero() {
        let o = TensorOracle::from_fn(Shape::uniform(3, 2).unwrap(), |_| 1.0);
        let cf = CrossFactorization::empty(&o).unwrap();
        assert_eq!(cross_evaluate(&cf, &[1, 0, 1]).unwrap(), 0.0);
        assert_eq!(cross_to_tt(&cf).unwrap().to_dense().unwrap().chebyshev_norm(), 0.0);
    }

    #[test]
    fn singular_intersection_names_separator() {
        let o = TensorOracle::from_fn(Shape::uniform(3, 2).unwrap(), |_| 1.0);
        let sets = nested_sets_for(o.shape());
        let err = CrossFactorization::from_sets(&o, sets).unwrap_err();
        assert_eq!(err, TtError::SingularIntersection { separator: 1 });
    }

    #[test]
    fn insert_cross_matches_rebuild() {
        let shape = Shape::uniform(4, 3).unwrap();
        let o = TensorOracle::from_fn(shape.clone(), |i| {
            (1.0 + i.iter().map(|&x| x as f64).sum::<f64>()).sqrt().recip()
        });
        let sets = NestedCrossSets::from_full_index(&shape, &[0, 0, 0, 0]).unwrap();
        let mut cf = CrossFactorization::from_sets(&o, sets).unwrap();
        // a cross in the supercore of separator 2
        assert!(cf.insert_cross(&o, 2, &[0, 2], &[1, 0]).unwrap());
        let rebuilt = CrossFactorization::from_sets(&o, cf.sets().clone()).unwrap();
        for c in 0..4 {
            assert_eq!(cf.blocks()[c], rebuilt.blocks()[c]);
        }
        for idx in shape.indices() {
            assert_eq!(
                cross_evaluate(&cf, &idx).unwrap(),
                cross_evaluate(&rebuilt, &idx).unwrap()
            );
        }
    }

    #[test]
    fn singular_insert_rolls_back() {
        let shape = Shape::uniform(3, 3).unwrap();
        let o = TensorOracle::from_fn(shape.clone(), |i| (i[0] + 1) as f64 * (i[2] + 1) as f64);
        let sets = NestedCrossSets::from_full_index(&shape, &[0, 0, 0]).unwrap();
        let mut cf = CrossFactorization::from_sets(&o, sets).unwrap();
        let before = cf.blocks().to_vec();
        assert!(!cf.insert_cross(&o, 1, &[1], &[1, 1]).unwrap());
        assert_eq!(cf.ranks(), vec![1, 1]);
        assert_eq!(cf.blocks(), &before[..]);
    }
}
