use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default upper bound on the number of pseudo-bases an enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// A pair of equal-size index sets: the arms that may be nonzero and the
/// resource constraints that are forced to bind.
///
/// Indices are zero-based and strictly increasing. The canonical order is by
/// cardinality, then resource set, then arm set (both lexicographic), so the
/// empty basis sorts first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBasis", into = "RawBasis")]
pub struct PseudoBasis {
    arms: Vec<usize>,
    resources: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawBasis {
    arms: Vec<usize>,
    resources: Vec<usize>,
}

impl TryFrom<RawBasis> for PseudoBasis {
    type Error = Error;

    fn try_from(raw: RawBasis) -> Result<Self> {
        PseudoBasis::new(raw.arms, raw.resources)
    }
}

impl From<PseudoBasis> for RawBasis {
    fn from(b: PseudoBasis) -> Self {
        RawBasis {
            arms: b.arms,
            resources: b.resources,
        }
    }
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl PseudoBasis {
    pub fn new(arms: Vec<usize>, resources: Vec<usize>) -> Result<Self> {
        if arms.len() != resources.len() {
            return Err(Error::InvalidBasis(format!(
                "{} arms but {} resources",
                arms.len(),
                resources.len()
            )));
        }
        if !strictly_increasing(&arms) || !strictly_increasing(&resources) {
            return Err(Error::InvalidBasis(
                "indices must be strictly increasing".into(),
            ));
        }
        Ok(Self { arms, resources })
    }

    pub fn empty() -> Self {
        Self {
            arms: Vec::new(),
            resources: Vec::new(),
        }
    }

    pub fn arms(&self) -> &[usize] {
        &self.arms
    }

    pub fn resources(&self) -> &[usize] {
        &self.resources
    }

    /// Number of arms (equal to the number of binding resources).
    pub fn size(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn contains_arm(&self, arm: usize) -> bool {
        self.arms.binary_search(&arm).is_ok()
    }

    pub fn contains_resource(&self, resource: usize) -> bool {
        self.resources.binary_search(&resource).is_ok()
    }

    /// Checks the indices against problem dimensions.
    pub fn fits(&self, arms: usize, resources: usize) -> bool {
        self.arms.last().is_none_or(|&a| a < arms)
            && self.resources.last().is_none_or(|&r| r < resources)
    }
}

impl Ord for PseudoBasis {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.resources.cmp(&other.resources))
            .then_with(|| self.arms.cmp(&other.arms))
    }
}

impl PartialOrd for PseudoBasis {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Displays one-based indices, e.g. `({1,2},{1,2})`.
impl fmt::Display for PseudoBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn set(f: &mut fmt::Formatter<'_>, v: &[usize]) -> fmt::Result {
            f.write_str("{")?;
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", x + 1)?;
            }
            f.write_str("}")
        }
        f.write_str("(")?;
        set(f, &self.arms)?;
        f.write_str(",")?;
        set(f, &self.resources)?;
        f.write_str(")")
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of pseudo-bases for `arms` arms and `resources` resources.
pub fn pseudo_basis_count(arms: usize, resources: usize) -> u128 {
    (0..=arms.min(resources))
        .map(|d| binomial(arms, d).saturating_mul(binomial(resources, d)))
        .fold(0u128, u128::saturating_add)
}

/// All `d`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if d > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        out.push(idx.clone());
        // rightmost index that can still move
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - d + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Enumerates every pseudo-basis in canonical order, with the default cap.
pub fn enumerate_pseudo_bases(arms: usize, resources: usize) -> Result<Vec<PseudoBasis>> {
    enumerate_pseudo_bases_capped(arms, resources, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_pseudo_bases_capped(
    arms: usize,
    resources: usize,
    cap: usize,
) -> Result<Vec<PseudoBasis>> {
    if arms == 0 || resources == 0 {
        return Err(Error::Dimension(format!(
            "need at least one arm and one resource, got K={arms}, C={resources}"
        )));
    }
    let needed = pseudo_basis_count(arms, resources);
    if needed > cap as u128 {
        return Err(Error::EnumerationCap { needed, cap });
    }
    let mut out = Vec::with_capacity(needed as usize);
    for d in 0..=arms.min(resources) {
        let arm_sets = combinations(arms, d);
        for res in combinations(resources, d) {
            for a in &arm_sets {
                out.push(PseudoBasis {
                    arms: a.clone(),
                    resources: res.clone(),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn single_arm_single_resource() {
        let bases = enumerate_pseudo_bases(1, 1).unwrap();
        assert_eq!(bases.len(), 2);
        assert!(bases[0].is_empty());
        assert_eq!(bases[1].to_string(), "({1},{1})");
    }

    #[test]
    fn two_arms_one_resource() {
        let bases = enumerate_pseudo_bases(2, 1).unwrap();
        let shown: Vec<_> = bases.iter().map(|b| b.to_string()).collect();
        assert_eq!(shown, ["({},{})", "({1},{1})", "({2},{1})"]);
    }

    #[test]
    fn two_by_two_count_matches_subset_oracle() {
        // brute force: every (arm subset, resource subset) pair of equal size
        let mut count = 0;
        for am in 0u32..4 {
            for rm in 0u32..4 {
                if am.count_ones() == rm.count_ones() {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 6);
        assert_eq!(enumerate_pseudo_bases(2, 2).unwrap().len(), 6);
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let bases = enumerate_pseudo_bases(5, 3).unwrap();
        assert!(bases.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(bases.len() as u128, pseudo_basis_count(5, 3));
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_pseudo_bases_capped(20, 5, 1000).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { .. }));
    }

    #[test]
    fn rejects_malformed_sets() {
        assert!(PseudoBasis::new(vec![1, 0], vec![0, 1]).is_err());
        assert!(PseudoBasis::new(vec![0], vec![]).is_err());
    }
}
