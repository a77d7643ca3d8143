//! Index sets `I_1..I_K` that drive an IBMI sweep.

use std::fmt;
use std::ops::Deref;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered list of zero-based positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexList(Vec<usize>);

impl IndexList {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn range(start: usize, end: usize) -> Self {
        Self((start..end).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    fn is_contiguous(&self) -> bool {
        self.0.windows(2).all(|w| w[1] == w[0] + 1)
    }
}

impl Deref for IndexList {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for IndexList {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl FromIterator<usize> for IndexList {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetOrdering {
    Contiguous,
    RedBlack,
    Custom,
}

impl fmt::Display for SetOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetOrdering::Contiguous => "contiguous",
            SetOrdering::RedBlack => "red-black",
            SetOrdering::Custom => "custom",
        })
    }
}

impl FromStr for SetOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "contiguous" => Ok(SetOrdering::Contiguous),
            "red-black" | "redblack" | "red_black" => Ok(SetOrdering::RedBlack),
            "custom" => Ok(SetOrdering::Custom),
            other => Err(Error::InvalidPartition(format!("unknown ordering {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    p: usize,
    sets: Vec<IndexList>,
    overlap_fraction: f64,
    overlap_depth: usize,
    ordering: SetOrdering,
}

#[derive(Deserialize, Serialize)]
struct PartitionFile {
    p: usize,
    sets: Vec<Vec<usize>>,
}

impl Partition {
    /// Base blocks of `m = floor(p/k)` indices, the last one taking the
    /// remainder. Each set reaches `h = round(f·m)` indices into every
    /// neighbouring block.
    pub fn contiguous(p: usize, k: usize, overlap_fraction: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&overlap_fraction) {
            return Err(Error::InvalidOverlap(overlap_fraction));
        }
        if k < 2 || p < 2 * k {
            return Err(Error::TooManyBlocks { p, k });
        }
        let m = p / k;
        let h = (overlap_fraction * m as f64).round() as usize;
        if h >= m {
            return Err(Error::TooManyBlocks { p, k });
        }
        let sets = (0..k)
            .map(|j| {
                let start = j * m;
                let end = if j + 1 == k { p } else { (j + 1) * m };
                let lo = if j == 0 { start } else { start - h };
                let hi = if j + 1 == k { end } else { end + h };
                IndexList::range(lo, hi)
            })
            .collect();
        Ok(Self {
            p,
            sets,
            overlap_fraction,
            overlap_depth: h,
            ordering: SetOrdering::Contiguous,
        })
    }

    /// Two interleaved sets: even positions first, then odd positions.
    pub fn red_black(p: usize) -> Result<Self> {
        if p < 4 {
            return Err(Error::TooManyBlocks { p, k: 2 });
        }
        Ok(Self {
            p,
            sets: vec![(0..p).step_by(2).collect(), (1..p).step_by(2).collect()],
            overlap_fraction: 0.0,
            overlap_depth: 0,
            ordering: SetOrdering::RedBlack,
        })
    }

    /// Arbitrary sets, validated.
    pub fn custom(p: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        let part = Self {
            p,
            sets: sets.into_iter().map(IndexList::from).collect(),
            overlap_fraction: 0.0,
            overlap_depth: 0,
            ordering: SetOrdering::Custom,
        };
        part.validate()?;
        Ok(part)
    }

    /// Two-set split at `split`: `{0..split}` and `{split..p}`.
    pub fn two_block(p: usize, split: usize) -> Result<Self> {
        if split == 0 || split >= p {
            return Err(Error::InvalidPartition(format!(
                "split {split} must lie strictly inside 0..{p}"
            )));
        }
        Ok(Self {
            p,
            sets: vec![IndexList::range(0, split), IndexList::range(split, p)],
            overlap_fraction: 0.0,
            overlap_depth: 0,
            ordering: SetOrdering::Contiguous,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: PartitionFile = serde_json::from_str(s)?;
        Self::custom(f.p, f.sets)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let f = PartitionFile {
            p: self.p,
            sets: self.sets.iter().map(|s| s.0.clone()).collect(),
        };
        serde_json::to_string(&f).expect("partition serializes")
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[IndexList] {
        &self.sets
    }

    pub fn set(&self, j: usize) -> &IndexList {
        &self.sets[j]
    }

    pub fn overlap_fraction(&self) -> f64 {
        self.overlap_fraction
    }

    /// Indices shared with each neighbour (`h`); zero for non-contiguous orderings.
    pub fn overlap_depth(&self) -> usize {
        self.overlap_depth
    }

    pub fn ordering(&self) -> SetOrdering {
        self.ordering
    }

    /// Ascending list of the indices not in set `j` (zero-based).
    pub fn complement(&self, j: usize) -> IndexList {
        let mut mark = vec![false; self.p];
        for &i in self.sets[j].iter() {
            if i < self.p {
                mark[i] = true;
            }
        }
        (0..self.p).filter(|&i| !mark[i]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sets.len() < 2 {
            return Err(Error::InvalidPartition(format!(
                "need at least 2 sets, found {}",
                self.sets.len()
            )));
        }
        let mut covered = vec![false; self.p];
        for (s, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidPartition(format!("set {s} is empty")));
            }
            let mut seen = vec![false; self.p];
            for &i in set.iter() {
                if i >= self.p {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        bound: self.p,
                    });
                }
                if seen[i] {
                    return Err(Error::DuplicateWithinSet { set: s, index: i });
                }
                seen[i] = true;
                covered[i] = true;
            }
            if self.ordering == SetOrdering::Contiguous && !set.is_contiguous() {
                return Err(Error::InvalidPartition(format!(
                    "set {s} is not a contiguous range"
                )));
            }
        }
        let missing: Vec<usize> = (0..self.p).filter(|&i| !covered[i]).collect();
        if !missing.is_empty() {
            return Err(Error::UncoveredIndices(missing));
        }
        Ok(())
    }
}

pub fn contiguous_partition(p: usize, k: usize, overlap_fraction: f64) -> Result<Partition> {
    Partition::contiguous(p, k, overlap_fraction)
}

pub fn red_black_partition(p: usize) -> Result<Partition> {
    Partition::red_black(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contiguous_examples() {
        let part = contiguous_partition(8, 2, 0.0).unwrap();
        assert_eq!(part.set(0).as_slice(), &[0, 1, 2, 3]);
        assert_eq!(part.set(1).as_slice(), &[4, 5, 6, 7]);

        let part = contiguous_partition(8, 2, 0.25).unwrap();
        assert_eq!(part.overlap_depth(), 1);
        assert_eq!(part.set(0).as_slice(), &[0, 1, 2, 3, 4]);
        assert_eq!(part.set(1).as_slice(), &[3, 4, 5, 6, 7]);

        let part = contiguous_partition(12, 4, 0.0).unwrap();
        assert!(part.sets().iter().all(|s| s.len() == 3));
    }

    #[test]
    fn remainder_goes_to_last_block() {
        let part = contiguous_partition(11, 3, 0.0).unwrap();
        let sizes: Vec<usize> = part.sets().iter().map(|s| s.len()).collect();
        assert_eq!(sizes, vec![3, 3, 5]);
        part.validate().unwrap();
    }

    #[test]
    fn contiguous_errors() {
        assert!(matches!(
            contiguous_partition(8, 2, 0.5),
            Err(Error::InvalidOverlap(_))
        ));
        assert!(matches!(
            contiguous_partition(8, 2, -0.1),
            Err(Error::InvalidOverlap(_))
        ));
        assert!(matches!(
            contiguous_partition(7, 4, 0.0),
            Err(Error::TooManyBlocks { .. })
        ));
        assert!(contiguous_partition(8, 1, 0.0).is_err());
    }

    #[test]
    fn complement_examples() {
        let part = contiguous_partition(8, 2, 0.0).unwrap();
        assert_eq!(part.complement(0), *part.set(1));
        let part = contiguous_partition(8, 2, 0.25).unwrap();
        assert_eq!(part.complement(0).as_slice(), &[5, 6, 7]);
        let all = Partition::custom(8, vec![(0..8).collect(), vec![0]]).unwrap();
        assert!(all.complement(0).is_empty());
    }

    #[test]
    fn red_black_examples() {
        let part = red_black_partition(4).unwrap();
        assert_eq!(part.set(0).as_slice(), &[0, 2]);
        assert_eq!(part.set(1).as_slice(), &[1, 3]);
        let part = red_black_partition(5).unwrap();
        assert_eq!((part.set(0).len(), part.set(1).len()), (3, 2));
        part.validate().unwrap();
        let part = red_black_partition(6).unwrap();
        assert_eq!(part.complement(0), *part.set(1));
        assert!(red_black_partition(3).is_err());
    }

    #[test]
    fn validate_examples() {
        contiguous_partition(64, 4, 0.2).unwrap().validate().unwrap();
        red_black_partition(10).unwrap().validate().unwrap();
        let err = Partition::custom(4, vec![vec![0, 1], vec![3]]).unwrap_err();
        assert!(matches!(err, Error::UncoveredIndices(ref v) if v == &[2]));
        let err = Partition::custom(4, vec![vec![0, 1, 1], vec![2, 3]]).unwrap_err();
        assert!(matches!(err, Error::DuplicateWithinSet { set: 0, index: 1 }));
        assert!(Partition::custom(4, vec![vec![0, 1, 2, 3]]).is_err());
        assert!(Partition::custom(4, vec![vec![0, 1, 2], vec![4]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let part = Partition::from_json(r#"{"p": 5, "sets": [[0, 1, 2], [2, 3, 4]]}"#).unwrap();
        assert_eq!(part.ordering(), SetOrdering::Custom);
        assert_eq!(part.k(), 2);
        let again = Partition::from_json(&part.to_json()).unwrap();
        assert_eq!(again, part);
        assert!(Partition::from_json(r#"{"p": 3, "sets": [[0], [1]]}"#).is_err());
    }

    #[test]
    fn ordering_parse() {
        assert_eq!("red-black".parse::<SetOrdering>().unwrap(), SetOrdering::RedBlack);
        assert!("zigzag".parse::<SetOrdering>().is_err());
    }
}
