//! Brute-force references used to cross-check the structural algorithms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::module::{EncodedModule, Representation};

/// Default bound on the number of unknowns in [`oracle_hom`].
pub const DEFAULT_HOM_CAP: usize = 4096;

/// `dim Hom(M, N)`, solving `N_{ab} φ_a = φ_b M_{ab}` over every cover for
/// the entries of all components at once.
pub fn oracle_hom(m: &EncodedModule, n: &EncodedModule, cap: usize) -> Result<usize> {
    if m.poset() != n.poset() {
        return Err(Error::Mismatch("modules live on different posets".into()));
    }
    let f = m.field();
    let p = m.poset();
    // Component at q is dims_n[q] x dims_m[q], stored row-major from offset[q].
    let mut offset = Vec::with_capacity(p.len());
    let mut unknowns = 0;
    for q in 0..p.len() {
        offset.push(unknowns);
        unknowns += n.dims()[q] * m.dims()[q];
    }
    if unknowns > cap {
        return Err(Error::CapExceeded(format!("{unknowns} unknowns, cap {cap}")));
    }
    let mut rows: Vec<Vec<crate::Scalar>> = Vec::new();
    for (k, &(a, b)) in m.covers().iter().enumerate() {
        let ma = &m.cover_maps()[k];
        let na = n.map(a, b).expect("same poset");
        let (ra, ca) = (n.dims()[a], m.dims()[a]);
        let cb = m.dims()[b];
        // Entry (i, j) of N_ab φ_a - φ_b M_ab, an N_b x M_a matrix.
        for i in 0..n.dims()[b] {
            for j in 0..ca {
                let mut row = vec![f.zero(); unknowns];
                for r in 0..ra {
                    let v = f.add(&row[offset[a] + r * ca + j], na.get(i, r));
                    row[offset[a] + r * ca + j] = v;
                }
                for s in 0..cb {
                    let v = f.sub(&row[offset[b] + i * cb + s], ma.get(s, j));
                    row[offset[b] + i * cb + s] = v;
                }
                rows.push(row);
            }
        }
    }
    let system = Matrix::from_rows(f, rows, unknowns);
    Ok(unknowns - system.rank())
}

/// One property check on one seeded instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub property: String,
    pub seed: u64,
    pub pass: bool,
    pub witness: Option<String>,
}

impl OracleReport {
    pub fn pass(property: impl Into<String>, seed: u64) -> OracleReport {
        OracleReport {
            property: property.into(),
            seed,
            pass: true,
            witness: None,
        }
    }

    pub fn fail(property: impl Into<String>, seed: u64, witness: impl Into<String>) -> OracleReport {
        OracleReport {
            property: property.into(),
            seed,
            pass: false,
            witness: Some(witness.into()),
        }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "pass" } else { "FAIL" };
        write!(f, "{status} {} seed={}", self.property, self.seed)?;
        if let Some(w) = &self.witness {
            write!(f, " witness: {w}")?;
        }
        Ok(())
    }
}
