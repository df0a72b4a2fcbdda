//! Discrete phase-basis grids and the tensor-product index map.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

/// Grid for one degree of freedom.
///
/// Periodic: `count` points from -pi to pi - delta with delta = 2pi/count.
/// Open: `2n + 1` points from -n*delta to +n*delta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasisSpec {
    Periodic {
        count: usize,
    },
    Open {
        /// Grid half-count; the grid holds 2n+1 points.
        n: usize,
        /// Grid spacing, radians.
        delta: f64,
    },
}

impl BasisSpec {
    pub fn len(&self) -> usize {
        match *self {
            BasisSpec::Periodic { count } => count,
            BasisSpec::Open { n, .. } => 2 * n + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, BasisSpec::Periodic { .. })
    }

    pub fn delta(&self) -> f64 {
        match *self {
            BasisSpec::Periodic { count } => 2.0 * PI / count as f64,
            BasisSpec::Open { delta, .. } => delta,
        }
    }

    /// Grid value of point `i`.
    pub fn value(&self, i: usize) -> f64 {
        match *self {
            BasisSpec::Periodic { count } => -PI + 2.0 * PI * i as f64 / count as f64,
            BasisSpec::Open { n, delta } => (i as f64 - n as f64) * delta,
        }
    }

    /// Half-extent n*delta of an open grid; zero for the periodic grid.
    pub fn extent(&self) -> f64 {
        match *self {
            BasisSpec::Periodic { .. } => 0.0,
            BasisSpec::Open { n, delta } => n as f64 * delta,
        }
    }

    /// Number of grid points in a phase shift of `theta` radians, when the
    /// spacing divides it exactly. Used for phase-slip overlaps.
    pub fn points_in_shift(&self, theta: f64, dof_name: &str) -> Result<i64> {
        let steps = theta / self.delta();
        let rounded = steps.round();
        if (steps - rounded).abs() > 1e-9 {
            return Err(Error::IncommensurateGrid {
                dof: dof_name.into(),
                delta: self.delta(),
            });
        }
        Ok(rounded as i64)
    }
}

/// Names of the four dynamical phases, in basis order.
pub const DOF_NAMES: [&str; 4] = ["phi", "phi_f", "phi_sigma_k", "phi_delta_k"];

/// The phi degree of freedom (periodic).
pub const DOF_PHI: usize = 0;
/// The fluxonium phase.
pub const DOF_PHI_F: usize = 1;
/// The symmetric internal kite phase.
pub const DOF_SIGMA_K: usize = 2;
/// The antisymmetric internal kite phase.
pub const DOF_DELTA_K: usize = 3;

/// Tensor-product basis over the four dynamical phases, with a row-major
/// index codec (phi slowest, phi_delta_k fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBasis {
    pub specs: [BasisSpec; 4],
    dims: [usize; 4],
    strides: [usize; 4],
    dim: usize,
}

impl ProductBasis {
    pub fn new(specs: [BasisSpec; 4]) -> Result<Self> {
        if !specs[DOF_PHI].is_periodic() {
            return Err(Error::Domain("phi must be a periodic grid".into()));
        }
        for (d, s) in specs.iter().enumerate().skip(1) {
            if s.is_periodic() {
                return Err(Error::Domain(format!("{} must be an open grid", DOF_NAMES[d])));
            }
        }
        let dims = [specs[0].len(), specs[1].len(), specs[2].len(), specs[3].len()];
        let strides = [dims[1] * dims[2] * dims[3], dims[2] * dims[3], dims[3], 1];
        let dim = dims.iter().product();
        Ok(ProductBasis { specs, dims, strides, dim })
    }

    /// Default grids: phi with 31 points, phi_f at delta = pi/16 over
    /// [-4pi, 4pi], kite phases at delta = pi/12 over [-3pi, 3pi]. The
    /// spacings divide pi so phase-slip shifts land on grid points.
    pub fn default_spec() -> [BasisSpec; 4] {
        [
            BasisSpec::Periodic { count: 31 },
            BasisSpec::Open { n: 64, delta: PI / 16.0 },
            BasisSpec::Open { n: 36, delta: PI / 12.0 },
            BasisSpec::Open { n: 36, delta: PI / 12.0 },
        ]
    }

    pub fn default_basis() -> Self {
        Self::new(Self::default_spec()).expect("default spec is valid")
    }

    /// Scale all grid counts by `scale`, preserving open-grid extents and
    /// the divides-pi property of the spacings. Used for convergence studies.
    pub fn scaled_spec(specs: &[BasisSpec; 4], scale: f64) -> Result<[BasisSpec; 4]> {
        if !(scale > 0.0) {
            return Err(Error::Domain(format!("grid scale must be positive, got {scale}")));
        }
        let mut out = *specs;
        for s in &mut out {
            match s {
                BasisSpec::Periodic { count } => {
                    let mut c = ((*count as f64) * scale).round() as usize;
                    if c % 2 == 0 {
                        c += 1;
                    }
                    *count = c.max(5);
                }
                BasisSpec::Open { n, delta } => {
                    let extent = *n as f64 * *delta;
                    // keep delta = pi/m with integer m
                    let m0 = PI / *delta;
                    let m = (m0 * scale).round().max(1.0);
                    let new_delta = PI / m;
                    *delta = new_delta;
                    *n = (extent / new_delta).round() as usize;
                }
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn strides(&self) -> [usize; 4] {
        self.strides
    }

    pub fn periodic_flags(&self) -> [bool; 4] {
        [true, false, false, false]
    }

    /// Flat index of a 4-tuple of grid indices.
    pub fn flat_index(&self, idx: [usize; 4]) -> usize {
        idx.iter().zip(self.strides.iter()).map(|(i, s)| i * s).sum()
    }

    /// Grid indices of a flat index.
    pub fn grid_index(&self, flat: usize) -> [usize; 4] {
        let mut rem = flat;
        let mut out = [0usize; 4];
        for d in 0..4 {
            out[d] = rem / self.strides[d];
            rem %= self.strides[d];
        }
        out
    }

    /// Phase values at a flat index.
    pub fn phase_values(&self, flat: usize) -> [f64; 4] {
        let idx = self.grid_index(flat);
        [
            self.specs[0].value(idx[0]),
            self.specs[1].value(idx[1]),
            self.specs[2].value(idx[2]),
            self.specs[3].value(idx[3]),
        ]
    }

    /// Hash of the grid layout, recorded in spectra and eigenvector dumps.
    pub fn spec_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for s in &self.specs {
            match *s {
                BasisSpec::Periodic { count } => {
                    hasher.update(b"P");
                    hasher.update(count.to_le_bytes());
                }
                BasisSpec::Open { n, delta } => {
                    hasher.update(b"O");
                    hasher.update(n.to_le_bytes());
                    hasher.update(delta.to_le_bytes());
                }
            }
        }
        hex_string(&hasher.finalize()[..8])
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
