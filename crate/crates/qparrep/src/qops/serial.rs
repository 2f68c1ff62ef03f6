//! Versioned JSON schema for states and operators: a register table plus
//! row-major `[re, im]` entry pairs.

use serde::{Deserialize, Serialize};

use super::{CMat, CVec, OperatorKind, OperatorMatrix, PureState, RegisterLayout};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutSchema {
    pub registers: Vec<(String, usize)>,
}

impl LayoutSchema {
    pub fn from_layout(l: &RegisterLayout) -> Self {
        Self {
            registers: l.registers().to_vec(),
        }
    }

    pub fn to_layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::with_cap(self.registers.iter().cloned(), usize::MAX)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSchema {
    pub schema_version: u32,
    pub layout: LayoutSchema,
    /// Row-major `[re, im]` pairs.
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateSchema {
    pub fn from_state(s: &PureState) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            layout: LayoutSchema::from_layout(&s.layout),
            amplitudes: s.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn to_state(&self) -> Result<PureState> {
        check_version(self.schema_version)?;
        let layout = self.layout.to_layout()?;
        let v = CVec::from_iterator(
            self.amplitudes.len(),
            self.amplitudes
                .iter()
                .map(|[re, im]| num_complex::Complex64::new(*re, *im)),
        );
        PureState::new(layout, v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorSchema {
    pub schema_version: u32,
    pub in_layout: LayoutSchema,
    pub out_layout: LayoutSchema,
    pub kind: OperatorKind,
    /// Row-major `[re, im]` pairs, `out_dim × in_dim`.
    pub entries: Vec<[f64; 2]>,
}

impl OperatorSchema {
    pub fn from_operator(op: &OperatorMatrix) -> Self {
        let mut entries = Vec::with_capacity(op.mat.len());
        for r in 0..op.mat.nrows() {
            for c in 0..op.mat.ncols() {
                let v = op.mat[(r, c)];
                entries.push([v.re, v.im]);
            }
        }
        Self {
            schema_version: SCHEMA_VERSION,
            in_layout: LayoutSchema::from_layout(&op.in_layout),
            out_layout: LayoutSchema::from_layout(&op.out_layout),
            kind: op.kind,
            entries,
        }
    }

    pub fn to_operator(&self) -> Result<OperatorMatrix> {
        check_version(self.schema_version)?;
        let in_layout = self.in_layout.to_layout()?;
        let out_layout = self.out_layout.to_layout()?;
        let (rows, cols) = (out_layout.total_dim(), in_layout.total_dim());
        if self.entries.len() != rows * cols {
            return Err(Error::Serialization(format!(
                "expected {} entries, got {}",
                rows * cols,
                self.entries.len()
            )));
        }
        let mat = CMat::from_fn(rows, cols, |r, c| {
            let [re, im] = self.entries[r * cols + c];
            num_complex::Complex64::new(re, im)
        });
        OperatorMatrix::new(in_layout, out_layout, mat, self.kind)
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported schema version {v} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}
