//! Directional finite-difference meshes and running-sum steps in 2D.

use crate::boxspline2d::{direction, ScaleVector4};
use crate::error::{Error, Result};

const LATTICE_TOL: f64 = 1e-9;

/// One vertex of a finite-difference mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshVertex {
    pub position: [f64; 2],
    pub weight: f64,
    /// Bit `k` is set when direction `k` contributes to the position.
    pub subset: u32,
}

/// Composition of first-order directional differences
/// `f(x) -> (f(x) - f(x - a_k r_k)) / a_k`, expanded into `2^N` vertices, and
/// the shift that centres the factorized kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshStencil {
    vertices: Vec<MeshVertex>,
    shift: [f64; 2],
    scales: Vec<f64>,
}

impl MeshStencil {
    /// Vertices ordered by ascending subset bitmask.
    pub fn vertices(&self) -> &[MeshVertex] {
        &self.vertices
    }

    pub fn shift(&self) -> [f64; 2] {
        self.shift
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Common weight magnitude `1 / prod(a_k)`.
    pub fn alpha(&self) -> f64 {
        1.0 / self.scales.iter().product::<f64>()
    }

    pub fn weight_sum(&self) -> f64 {
        self.vertices.iter().map(|v| v.weight).sum()
    }
}

fn check_scales(a: &[f64]) -> Result<()> {
    if a.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 directions, got {}",
            a.len()
        )));
    }
    if a.len() > 16 {
        return Err(Error::Domain(format!(
            "a mesh with {} directions has too many vertices",
            a.len()
        )));
    }
    match a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(&value) => Err(Error::InvalidScale { value, min: 0.0 }),
        None => Ok(()),
    }
}

/// Expands the FD mesh for the scale vector `a`; the shift is taken against
/// the integration scales `b`.
pub fn fd_mesh(a: &[f64], b: &[f64]) -> Result<MeshStencil> {
    check_scales(a)?;
    let shift = shift_vector(a, b)?;
    let n = a.len();
    let alpha = 1.0 / a.iter().product::<f64>();
    let dirs: Vec<[f64; 2]> = (0..n).map(|k| direction(n, k)).collect();
    let vertices = (0u32..1 << n)
        .map(|subset| {
            let mut position = [0.0, 0.0];
            for (k, d) in dirs.iter().enumerate() {
                if subset & (1 << k) != 0 {
                    position[0] += a[k] * d[0];
                    position[1] += a[k] * d[1];
                }
            }
            let sign = if subset.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            MeshVertex {
                position,
                weight: sign * alpha,
                subset,
            }
        })
        .collect();
    Ok(MeshStencil {
        vertices,
        shift,
        scales: a.to_vec(),
    })
}

/// Four-direction mesh against the ZP integration scales.
pub fn fd_mesh4(a: &ScaleVector4) -> MeshStencil {
    fd_mesh(&a.components(), &ScaleVector4::ZP.components())
        .expect("validated scale vectors always form a mesh")
}

/// A running-sum step along a lattice direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsStep {
    step: (i64, i64),
    gain: f64,
}

impl RsStep {
    pub fn step(&self) -> (i64, i64) {
        self.step
    }

    /// Equal to the Euclidean length of the step.
    pub fn gain(&self) -> f64 {
        self.gain
    }
}

/// The lattice step `(b cos t, b sin t)` with gain `b`, when integral.
pub fn rs_step(b: f64, theta: f64) -> Result<RsStep> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Domain(format!("running-sum scale must be positive, got {b}")));
    }
    let (s, c) = theta.sin_cos();
    let (x, y) = (b * c, b * s);
    let (rx, ry) = (x.round(), y.round());
    if (x - rx).abs() > LATTICE_TOL || (y - ry).abs() > LATTICE_TOL || (rx == 0.0 && ry == 0.0) {
        return Err(Error::IncompatibleScale { scale: b, angle: theta });
    }
    let step = (rx as i64, ry as i64);
    Ok(RsStep {
        step,
        gain: (rx * rx + ry * ry).sqrt(),
    })
}

/// `0.5 * sum_k (a_k - b_k) r_k`.
pub fn shift_vector(a: &[f64], b: &[f64]) -> Result<[f64; 2]> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: (a.len(), 1),
            actual: (b.len(), 1),
        });
    }
    let n = a.len();
    let mut tau = [0.0, 0.0];
    for k in 0..n {
        let d = direction(n, k);
        let diff = a[k] - b[k];
        tau[0] += 0.5 * diff * d[0];
        tau[1] += 0.5 * diff * d[1];
    }
    Ok(tau)
}
