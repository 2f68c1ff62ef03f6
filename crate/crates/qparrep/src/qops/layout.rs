use serde::{Deserialize, Serialize};

use crate::{Error, Result, DEFAULT_DIM_CAP};

/// Ordered list of named tensor factors making up a Hilbert space.
///
/// A layout with zero registers describes the scalar space (total dimension
/// 1). Labels are unique within a layout and dimensions are at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    regs: Vec<(String, usize)>,
}

impl RegisterLayout {
    /// Builds a layout, checking label uniqueness, positive dimensions, and
    /// the default dimension cap.
    pub fn new<S: Into<String>>(regs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        Self::with_cap(regs, DEFAULT_DIM_CAP)
    }

    /// Builds a layout with an explicit total-dimension cap.
    pub fn with_cap<S: Into<String>>(
        regs: impl IntoIterator<Item = (S, usize)>,
        cap: usize,
    ) -> Result<Self> {
        let regs: Vec<(String, usize)> = regs.into_iter().map(|(l, d)| (l.into(), d)).collect();
        let mut total: usize = 1;
        for (i, (label, dim)) in regs.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::InvalidParameter(format!(
                    "register {label:?} has dimension 0"
                )));
            }
            if regs[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::LabelCollision(label.clone()));
            }
            total = total
                .checked_mul(*dim)
                .ok_or(Error::DimensionCap(usize::MAX, cap))?;
        }
        if total > cap {
            return Err(Error::DimensionCap(total, cap));
        }
        Ok(Self { regs })
    }

    /// The scalar space: no registers, total dimension 1.
    pub fn scalar() -> Self {
        Self { regs: Vec::new() }
    }

    /// Single-register layout.
    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label.into(), dim)])
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.regs
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.regs.iter().map(|(l, _)| l.as_str())
    }

    pub fn len(&self) -> usize {
        self.regs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regs.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.regs.iter().map(|(_, d)| d).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.regs
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.regs[self.position(label)?].1)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.regs.iter().any(|(l, _)| l == label)
    }

    /// Concatenation `self ⊗ other`; fails on label collision or cap.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_with_cap(other, DEFAULT_DIM_CAP)
    }

    pub fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        Self::with_cap(
            self.regs.iter().chain(other.regs.iter()).cloned(),
            cap,
        )
    }

    /// The layout with the named registers removed, preserving order.
    pub fn without(&self, drop: &[&str]) -> Result<Self> {
        for d in drop {
            self.position(d)?;
        }
        Ok(Self {
            regs: self
                .regs
                .iter()
                .filter(|(l, _)| !drop.contains(&l.as_str()))
                .cloned()
                .collect(),
        })
    }

    /// The layout restricted to the named registers, in the *given* order.
    pub fn select(&self, keep: &[&str]) -> Result<Self> {
        let mut regs = Vec::with_capacity(keep.len());
        for k in keep {
            let pos = self.position(k)?;
            regs.push(self.regs[pos].clone());
        }
        Self::new(regs)
    }

    /// Strides of each register in the flat index (first register most
    /// significant).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.regs.len()];
        for i in (0..self.regs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.regs[i + 1].1;
        }
        strides
    }

    /// Decomposes a flat index into per-register indices.
    pub fn unravel(&self, index: usize) -> Vec<usize> {
        let strides = self.strides();
        self.regs
            .iter()
            .zip(&strides)
            .map(|((_, d), s)| (index / s) % d)
            .collect()
    }

    /// Checks that `other` has identical registers (labels and dims) in
    /// identical order.
    pub fn expect_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::LayoutMismatch(format!(
                "expected {:?}, got {:?}",
                self.describe(),
                other.describe()
            )));
        }
        Ok(())
    }

    /// Short human-readable form, e.g. `A:4⊗M0:2`.
    pub fn describe(&self) -> String {
        if self.regs.is_empty() {
            return "scalar".to_string();
        }
        self.regs
            .iter()
            .map(|(l, d)| format!("{l}:{d}"))
            .collect::<Vec<_>>()
            .join("⊗")
    }

    /// Index permutation sending this layout to `target` (same registers,
    /// possibly different order): returns `perm` with
    /// `target_index = perm[self_index]`.
    pub fn permutation_to(&self, target: &Self) -> Result<Vec<usize>> {
        if self.len() != target.len() || self.total_dim() != target.total_dim() {
            return Err(Error::LayoutMismatch(format!(
                "cannot permute {} into {}",
                self.describe(),
                target.describe()
            )));
        }
        let mut positions = Vec::with_capacity(target.len());
        for (l, d) in &target.regs {
            let p = self.position(l)?;
            if self.regs[p].1 != *d {
                return Err(Error::DimensionMismatch(format!(
                    "register {l} has dim {} here, {} in target",
                    self.regs[p].1, d
                )));
            }
            positions.push(p);
        }
        let src_strides = self.strides();
        let dst_strides = target.strides();
        let n = self.total_dim();
        let mut perm = vec![0usize; n];
        for idx in 0..n {
            let mut out = 0usize;
            for (t, &p) in positions.iter().enumerate() {
                let digit = (idx / src_strides[p]) % self.regs[p].1;
                out += digit * dst_strides[t];
            }
            perm[idx] = out;
        }
        Ok(perm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_layout_has_dim_one() {
        assert_eq!(RegisterLayout::scalar().total_dim(), 1);
    }

    #[test]
    fn rejects_duplicate_labels() {
        assert!(matches!(
            RegisterLayout::new([("a", 2), ("a", 3)]),
            Err(Error::LabelCollision(_))
        ));
    }

    #[test]
    fn total_dim_is_product() {
        let l = RegisterLayout::new([("a", 2), ("b", 3), ("c", 5)]).unwrap();
        assert_eq!(l.total_dim(), 30);
        assert_eq!(l.strides(), vec![15, 5, 1]);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            RegisterLayout::new([("a", 1 << 13)]),
            Err(Error::DimensionCap(..))
        ));
        assert!(RegisterLayout::with_cap([("a", 1 << 13)], 1 << 13).is_ok());
    }

    #[test]
    fn permutation_round_trips() {
        let l = RegisterLayout::new([("a", 2), ("b", 3)]).unwrap();
        let m = RegisterLayout::new([("b", 3), ("a", 2)]).unwrap();
        let perm = l.permutation_to(&m).unwrap();
        // index (a=1,b=2) = 1*3+2 = 5 maps to (b=2,a=1) = 2*2+1 = 5.
        assert_eq!(perm[5], 5);
        // index (a=1,b=0) = 3 maps to (b=0,a=1) = 1.
        assert_eq!(perm[3], 1);
        let back = m.permutation_to(&l).unwrap();
        for i in 0..6 {
            assert_eq!(back[perm[i]], i);
        }
    }
}
