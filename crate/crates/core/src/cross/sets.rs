use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TtError};
use crate::index::Shape;

/// Left sets `I^{<=k}` and right sets `I^{>k}` for the separators
/// `k = 1..d-1`, with the singleton border sets `I^{<=0} = I^{>d} = {()}`.
///
/// Set members are partial multi-indices, stored zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedCrossSets {
    shape: Shape,
    /// `left[k]` is `I^{<=k}` for `k = 0..d-1`.
    left: Vec<Vec<Vec<usize>>>,
    /// `right[k]` is `I^{>k}` for `k = 1..d`; `right[0]` is unused.
    right: Vec<Vec<Vec<usize>>>,
}

impl NestedCrossSets {
    /// Empty interior sets: every bond rank is zero.
    pub fn empty(shape: &Shape) -> Self {
        let d = shape.ndim();
        let mut left = vec![Vec::new(); d];
        left[0] = vec![Vec::new()];
        let mut right = vec![Vec::new(); d + 1];
        right[d] = vec![Vec::new()];
        Self {
            shape: shape.clone(),
            left,
            right,
        }
    }

    /// Singleton sets cut from one full index.
    pub fn from_full_index(shape: &Shape, idx: &[usize]) -> Result<Self> {
        shape.check(idx)?;
        let mut sets = Self::empty(shape);
        for k in 1..shape.ndim() {
            sets.left[k].push(idx[..k].to_vec());
            sets.right[k].push(idx[k..].to_vec());
        }
        Ok(sets)
    }

    /// Builds sets from explicit lists for `k = 1..d-1`. Sizes, bounds and
    /// distinctness are validated; nestedness is not (see
    /// [`check_nestedness`]).
    pub fn from_lists(shape: &Shape, left: Vec<Vec<Vec<usize>>>, right: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let d = shape.ndim();
        if left.len() + 1 != d || right.len() + 1 != d {
            return Err(TtError::InvalidRanks(format!(
                "expected {} left and right sets, got {} and {}",
                d - 1,
                left.len(),
                right.len()
            )));
        }
        let mut sets = Self::empty(shape);
        for (k0, (l, r)) in left.into_iter().zip(right).enumerate() {
            let k = k0 + 1;
            if l.len() != r.len() {
                return Err(TtError::InvalidRanks(format!(
                    "separator {k}: {} left vs {} right indices",
                    l.len(),
                    r.len()
                )));
            }
            for idx in &l {
                check_part(shape, idx, 0, k)?;
            }
            for idx in &r {
                check_part(shape, idx, k, d)?;
            }
            if has_duplicates(&l) || has_duplicates(&r) {
                return Err(TtError::InvalidRanks(format!("separator {k}: duplicate set member")));
            }
            sets.left[k] = l;
            sets.right[k] = r;
        }
        Ok(sets)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.ndim()
    }

    /// `I^{<=k}`, `0 <= k <= d-1`.
    pub fn left(&self, k: usize) -> &[Vec<usize>] {
        &self.left[k]
    }

    /// `I^{>k}`, `1 <= k <= d`.
    pub fn right(&self, k: usize) -> &[Vec<usize>] {
        &self.right[k]
    }

    /// `r_k = |I^{<=k}|` for `k = 1..d-1`.
    pub fn ranks(&self) -> Vec<usize> {
        (1..self.ndim()).map(|k| self.left[k].len()).collect()
    }

    /// `r_0..r_d` including the unit borders.
    pub fn full_ranks(&self) -> Vec<usize> {
        (0..=self.ndim())
            .map(|k| {
                if k == 0 || k == self.ndim() {
                    1
                } else {
                    self.left[k].len()
                }
            })
            .collect()
    }

    pub fn position_left(&self, k: usize, idx: &[usize]) -> Option<usize> {
        self.left[k].iter().position(|m| m == idx)
    }

    pub fn position_right(&self, k: usize, idx: &[usize]) -> Option<usize> {
        self.right[k].iter().position(|m| m == idx)
    }

    pub(crate) fn push(&mut self, k: usize, left: Vec<usize>, right: Vec<usize>) {
        self.left[k].push(left);
        self.right[k].push(right);
    }

    pub(crate) fn pop(&mut self, k: usize) {
        self.left[k].pop();
        self.right[k].pop();
    }

    /// Replaces one member of `I^{>k}`; meant for constructing broken sets
    /// in experiments.
    pub fn replace_right(&mut self, k: usize, position: usize, idx: Vec<usize>) -> Result<()> {
        check_part(&self.shape, &idx, k, self.ndim())?;
        let slot = self.right[k]
            .get_mut(position)
            .ok_or_else(|| TtError::InvalidRanks(format!("separator {k} has no member {position}")))?;
        *slot = idx;
        Ok(())
    }
}

fn check_part(shape: &Shape, idx: &[usize], from: usize, to: usize) -> Result<()> {
    if idx.len() != to - from {
        return Err(TtError::WrongArity {
            expected: to - from,
            got: idx.len(),
        });
    }
    for (off, &i) in idx.iter().enumerate() {
        let mode = from + off;
        if i >= shape.mode(mode) {
            return Err(TtError::IndexOutOfRange {
                mode,
                index: i,
                size: shape.mode(mode),
            });
        }
    }
    Ok(())
}

fn has_duplicates(list: &[Vec<usize>]) -> bool {
    let mut sorted: Vec<&Vec<usize>> = list.iter().collect();
    sorted.sort();
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Which containment chain a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// A member of `I^{<=k}` whose prefix is missing from `I^{<=k-1}`.
    Left,
    /// A member of `I^{>k}` whose tail is missing from `I^{>k+1}`.
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub separator: usize,
    pub side: Side,
    /// The offending partial index, zero-based.
    pub index: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one: Vec<String> = self.index.iter().map(|i| (i + 1).to_string()).collect();
        let side = match self.side {
            Side::Left => "left",
            Side::Right => "right",
        };
        write!(
            f,
            "separator {}: {side} member ({}) is not nested",
            self.separator,
            one.join(",")
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NestednessReport {
    pub violations: Vec<Violation>,
}

impl NestednessReport {
    pub fn is_nested(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks both containment chains and lists every violation.
pub fn check_nestedness(sets: &NestedCrossSets) -> NestednessReport {
    let d = sets.ndim();
    let mut violations = Vec::new();
    for k in 1..d {
        for idx in sets.left(k) {
            if k > 1 && sets.position_left(k - 1, &idx[..k - 1]).is_none() {
                violations.push(Violation {
                    separator: k,
                    side: Side::Left,
                    index: idx.clone(),
                });
            }
        }
        for idx in sets.right(k) {
            if k + 1 < d && sets.position_right(k + 1, &idx[1..]).is_none() {
                violations.push(Violation {
                    separator: k,
                    side: Side::Right,
                    index: idx.clone(),
                });
            }
        }
    }
    NestednessReport { violations }
}

/// One-based textual form used for serialization.
#[derive(Serialize, Deserialize)]
struct SetsRepr {
    shape: Vec<usize>,
    left: Vec<Vec<Vec<usize>>>,
    right: Vec<Vec<Vec<usize>>>,
}

fn one_based(list: &[Vec<usize>]) -> Vec<Vec<usize>> {
    list.iter().map(|idx| idx.iter().map(|i| i + 1).collect()).collect()
}

impl Serialize for NestedCrossSets {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.ndim();
        SetsRepr {
            shape: self.shape.dims().to_vec(),
            left: (1..d).map(|k| one_based(&self.left[k])).collect(),
            right: (1..d).map(|k| one_based(&self.right[k])).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NestedCrossSets {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = SetsRepr::deserialize(d)?;
        let zero = |lists: Vec<Vec<Vec<usize>>>| -> std::result::Result<Vec<Vec<Vec<usize>>>, D::Error> {
            lists
                .into_iter()
                .map(|l| {
                    l.into_iter()
                        .map(|idx| {
                            idx.into_iter()
                                .map(|i| {
                                    i.checked_sub(1)
                                        .ok_or_else(|| D::Error::custom("indices are one-based"))
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        };
        let shape = Shape::new(repr.shape).map_err(D::Error::custom)?;
        let left = zero(repr.left)?;
        let right = zero(repr.right)?;
        NestedCrossSets::from_lists(&shape, left, right).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape() -> Shape {
        Shape::uniform(4, 3).unwrap()
    }

    #[test]
    fn singletons_from_one_index_are_nested() {
        let sets = NestedCrossSets::from_full_index(&shape(), &[0, 0, 0, 0]).unwrap();
        assert_eq!(sets.ranks(), vec![1, 1, 1]);
        assert_eq!(sets.full_ranks(), vec![1, 1, 1, 1, 1]);
        assert!(check_nestedness(&sets).is_nested());
    }

    #[test]
    fn mismatched_tail_is_one_violation() {
        let mut sets = NestedCrossSets::from_full_index(&shape(), &[0, 1, 2, 0]).unwrap();
        sets.push(2, vec![0, 2], vec![1, 1]);
        sets.push(3, vec![0, 2, 1], vec![1]);
        assert!(check_nestedness(&sets).is_nested());
        // tail (3) is not in I^{>3} = {(1), (2)}
        sets.replace_right(2, 1, vec![1, 2]).unwrap();
        let report = check_nestedness(&sets);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].separator, 2);
        assert_eq!(report.violations[0].side, Side::Right);
        assert_eq!(
            report.violations[0].to_string(),
            "separator 2: right member (2,3) is not nested"
        );
    }

    #[test]
    fn left_violation_detected() {
        let mut sets = NestedCrossSets::from_full_index(&shape(), &[0, 0, 0, 0]).unwrap();
        sets.push(2, vec![1, 1], vec![1, 1]);
        let report = check_nestedness(&sets);
        assert_eq!(report.violations.len(), 2);
        assert!(report
            .violations
            .iter()
            .any(|v| v.side == Side::Left && v.separator == 2));
        assert!(report
            .violations
            .iter()
            .any(|v| v.side == Side::Right && v.separator == 2));
    }

    #[test]
    fn from_lists_validates() {
        let s = shape();
        assert!(NestedCrossSets::from_lists(&s, vec![vec![vec![0]]; 1], vec![vec![vec![0, 0, 0]]; 1]).is_err());
        let left = vec![vec![vec![0]], vec![vec![0, 0]], vec![vec![0, 0, 0]]];
        let right = vec![vec![vec![0, 0, 0]], vec![vec![0, 0]], vec![vec![0]]];
        assert!(NestedCrossSets::from_lists(&s, left.clone(), right.clone()).is_ok());
        let mut bad = left.clone();
        bad[0] = vec![vec![3]];
        assert!(NestedCrossSets::from_lists(&s, bad, right.clone()).is_err());
        let mut dup = left;
        dup[0] = vec![vec![0], vec![0]];
        let mut right2 = right;
        right2[0] = vec![vec![0, 0, 0], vec![1, 0, 0]];
        assert!(NestedCrossSets::from_lists(&s, dup, right2).is_err());
    }

    #[test]
    fn borders_are_singletons() {
        let sets = NestedCrossSets::empty(&shape());
        assert_eq!(sets.left(0), &[Vec::<usize>::new()]);
        assert_eq!(sets.right(4), &[Vec::<usize>::new()]);
        assert_eq!(sets.ranks(), vec![0, 0, 0]);
    }
}
