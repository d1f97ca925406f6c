//! The admissible triangle `K` and projections onto it in a weighted norm.
//!
//! `K` has vertices `(-1, 0)`, `(1, 0)` and `(0, 1)` in the `(φ, ψ)` plane.
//! The metric is `𝔄 = [[a11, -a12], [-a12, a22]]`.

use crate::error::{Error, Result};

/// Symmetric 2×2 metric `[[a11, -a12], [-a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjMatrix {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl ProjMatrix {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Result<Self> {
        let m = ProjMatrix { a11, a12, a22 };
        m.check_spd()?;
        Ok(m)
    }

    pub fn is_spd(&self) -> bool {
        self.a11 > 0.0 && self.a22 > 0.0 && self.a12 * self.a12 < self.a11 * self.a22
    }

    fn check_spd(&self) -> Result<()> {
        if self.is_spd() {
            Ok(())
        } else {
            Err(Error::NonSPDMetric {
                a11: self.a11,
                a12: self.a12,
                a22: self.a22,
            })
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        ProjMatrix {
            a11: c * self.a11,
            a12: c * self.a12,
            a22: c * self.a22,
        }
    }

    /// `pᵀ 𝔄 q`
    pub fn inner(&self, p: (f64, f64), q: (f64, f64)) -> f64 {
        self.a11 * p.0 * q.0 - self.a12 * (p.0 * q.1 + p.1 * q.0) + self.a22 * p.1 * q.1
    }

    pub fn norm_sq(&self, p: (f64, f64)) -> f64 {
        self.inner(p, p)
    }

    /// `𝔄 v`
    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (
            self.a11 * v.0 - self.a12 * v.1,
            -self.a12 * v.0 + self.a22 * v.1,
        )
    }

    /// `𝔄⁻¹ b`
    pub fn solve(&self, b: (f64, f64)) -> (f64, f64) {
        if self.a12 == 0.0 {
            return (b.0 / self.a11, b.1 / self.a22);
        }
        let det = self.a11 * self.a22 - self.a12 * self.a12;
        (
            (self.a22 * b.0 + self.a12 * b.1) / det,
            (self.a12 * b.0 + self.a11 * b.1) / det,
        )
    }
}

/// A point of `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KPoint {
    pub phi: f64,
    pub psi: f64,
}

impl KPoint {
    pub fn as_tuple(&self) -> (f64, f64) {
        (self.phi, self.psi)
    }
}

/// Membership in `K` with every inequality relaxed by `tol`.
pub fn in_k(phi: f64, psi: f64, tol: f64) -> bool {
    phi >= -1.0 - tol
        && phi <= 1.0 + tol
        && phi + psi <= 1.0 + tol
        && psi - phi <= 1.0 + tol
        && psi >= -tol
}

/// Boundary segments of `K` as `(start, direction)`, parametrised over `[0, 1]`.
const EDGES: [((f64, f64), (f64, f64)); 3] = [
    ((-1.0, 0.0), (2.0, 0.0)),
    ((1.0, 0.0), (-1.0, 1.0)),
    ((-1.0, 0.0), (1.0, 1.0)),
];

fn edge_point(edge: usize, t: f64) -> (f64, f64) {
    match edge {
        0 => (-1.0 + 2.0 * t, 0.0),
        1 => (1.0 - t, t),
        _ => (t - 1.0, t),
    }
}

/// `𝔄`-orthogonal projection onto `K`.
///
/// Points outside `K` are projected onto each of the three edges (line
/// projection in the metric, parameter clamped to the segment) and the
/// closest candidate wins. Exact for any SPD metric.
pub fn project_k(metric: &ProjMatrix, x: (f64, f64)) -> Result<KPoint> {
    metric.check_spd()?;
    if in_k(x.0, x.1, 0.0) {
        return Ok(KPoint { phi: x.0, psi: x.1 });
    }
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for (e, &(start, dir)) in EDGES.iter().enumerate() {
        let rel = (x.0 - start.0, x.1 - start.1);
        let t = (metric.inner(rel, dir) / metric.norm_sq(dir)).clamp(0.0, 1.0);
        let y = edge_point(e, t);
        let d = metric.norm_sq((x.0 - y.0, x.1 - y.1));
        if d < best.0 {
            best = (d, y);
        }
    }
    let (phi, psi) = best.1;
    Ok(KPoint { phi, psi })
}

/// Branching projection: bottom edge if `x2 <= 0`, otherwise the slant edge
/// on the side of `x1`. Agrees with [`project_k`] for diagonal metrics and
/// is only used there.
pub fn project_k_fast(metric: &ProjMatrix, x: (f64, f64)) -> Result<KPoint> {
    metric.check_spd()?;
    let (x1, x2) = x;
    if in_k(x1, x2, 0.0) {
        return Ok(KPoint { phi: x1, psi: x2 });
    }
    if x2 <= 0.0 {
        let t = (x1 - metric.a12 / metric.a11 * x2).clamp(-1.0, 1.0);
        return Ok(KPoint { phi: t, psi: 0.0 });
    }
    let v = if x1 >= 0.0 { (1.0, -1.0) } else { (-1.0, -1.0) };
    let gamma = (metric.inner((x1, x2 - 1.0), v) / metric.norm_sq(v)).clamp(0.0, 1.0);
    Ok(KPoint {
        phi: gamma * v.0,
        psi: 1.0 + gamma * v.1,
    })
}
