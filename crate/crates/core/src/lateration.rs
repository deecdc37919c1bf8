//! Linearized multilateration.
//!
//! Each anchor at planar position `(xi, yi)` with range `di` contributes the
//! circle equation `(x - xi)^2 + (y - yi)^2 = di^2`. Expanding and lifting
//! `s = x^2 + y^2` into the unknowns turns the system linear:
//!
//! ```text
//! [1  -2xi  -2yi] . [s  x  y]^T = di^2 - xi^2 - yi^2
//! ```
//!
//! The stacked system is solved in the least-squares sense through a thin
//! SVD, and the RMS of `A x - b` is reported as the solve's residual.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cluster::ReferenceNode;
use crate::error::{Error, Result};
use crate::geo::{self, GeoPoint, PlanarPoint};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A planar anchor position with its estimated range to the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub pos: PlanarPoint,
    pub distance: f64,
}

impl Anchor {
    pub const fn new(pos: PlanarPoint, distance: f64) -> Self {
        Self { pos, distance }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl LinearSystem {
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaterationSolution {
    /// Lifted unknown, nominally `x^2 + y^2`.
    pub s: f64,
    pub x: f64,
    pub y: f64,
    /// `||A x - b||_2 / sqrt(M)`, in square meters.
    pub residual_rms: f64,
    /// Ratio of largest to smallest singular value of `A`.
    pub condition: f64,
}

impl LaterationSolution {
    pub fn position(&self) -> PlanarPoint {
        PlanarPoint::new(self.x, self.y)
    }

    /// `s - (x^2 + y^2)`; zero for a consistent solve.
    pub fn lift_gap(&self) -> f64 {
        self.s - (self.x * self.x + self.y * self.y)
    }
}

/// Geographic estimate with its solve diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub geo: GeoPoint,
    pub solution: LaterationSolution,
}

pub fn build_system(anchors: &[Anchor]) -> Result<LinearSystem> {
    if anchors.len() < 3 {
        return Err(Error::InsufficientReferences { got: anchors.len() });
    }
    if let Some(bad) = anchors
        .iter()
        .find(|a| !a.pos.x.is_finite() || !a.pos.y.is_finite() || !(a.distance >= 0.0) || !a.distance.is_finite())
    {
        return Err(Error::Domain(format!("invalid anchor {bad:?}")));
    }
    let m = anchors.len();
    let a = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => 1.0,
        1 => -2.0 * anchors[i].pos.x,
        _ => -2.0 * anchors[i].pos.y,
    });
    let b = DVector::from_fn(m, |i, _| {
        let Anchor { pos, distance } = anchors[i];
        distance * distance - pos.x * pos.x - pos.y * pos.y
    });
    Ok(LinearSystem { a, b })
}

/// Least-squares solve through the singular value decomposition.
pub fn solve_svd(sys: &LinearSystem) -> Result<LaterationSolution> {
    let m = sys.rows();
    if m < 3 || sys.a.ncols() != 3 || sys.b.len() != m {
        return Err(Error::InsufficientReferences { got: m });
    }
    let svd = nalgebra::linalg::SVD::try_new(sys.a.clone(), true, true, f64::EPSILON, 0).ok_or(
        Error::DegenerateGeometry {
            condition: f64::INFINITY,
        },
    )?;
    let sv = &svd.singular_values;
    let s_max = sv.max();
    let s_min = sv.min();
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !(s_max > 0.0) || s_min <= RANK_TOLERANCE * s_max {
        return Err(Error::DegenerateGeometry { condition });
    }

    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let pinv_apply = |rhs: &DVector<f64>| {
        let mut coeffs = u.transpose() * rhs;
        for (c, &sigma) in coeffs.iter_mut().zip(sv.iter()) {
            *c = if sigma > RANK_TOLERANCE * s_max {
                *c / sigma
            } else {
                0.0
            };
        }
        v_t.transpose() * coeffs
    };
    let mut x = pinv_apply(&sys.b);
    // One round of iterative refinement recovers the digits lost to the
    // mixed scale of the constant and coordinate columns.
    x += pinv_apply(&(&sys.b - &sys.a * &x));

    let residual = &sys.a * &x - &sys.b;
    Ok(LaterationSolution {
        s: x[0],
        x: x[1],
        y: x[2],
        residual_rms: residual.norm() / (m as f64).sqrt(),
        condition,
    })
}

/// Builds, solves and maps the result back to WGS84 about `origin`.
pub fn estimate_position(refs: &[ReferenceNode], origin: GeoPoint) -> Result<PositionEstimate> {
    let anchors: Vec<Anchor> = refs.iter().map(ReferenceNode::anchor).collect();
    let solution = solve_svd(&build_system(&anchors)?)?;
    Ok(PositionEstimate {
        geo: geo::unproject(origin, solution.position()),
        solution,
    })
}
