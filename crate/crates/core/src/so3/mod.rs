//! Real SO(3) representation machinery.
//!
//! Conventions used throughout:
//!
//! - Degree-1 vectors live in the Cartesian (x, y, z) basis, so the
//!   degree-1 Wigner-D matrix is the rotation matrix itself and
//!   `Y^(1)(u) = u` on unit vectors.
//! - Higher degrees are built recursively: the degree-L objects come from
//!   restricting the product of degree-(L-1) and degree-1 to the degree-L
//!   invariant subspace, with the change of basis given by the cached
//!   Clebsch-Gordan couplings.
//! - Spherical harmonics are normalized to unit L2 norm on unit inputs.
//! - Couplings have unit Frobenius norm and a deterministic sign
//!   (lexicographically first nonzero entry positive).

pub mod cg;
mod feature;
mod gate;
mod linear;
mod norm;
mod sph;
mod tp;
mod wigner;

pub use feature::{rotate_feature, IrrepsFeature, IrrepsLayout};
pub use gate::{gate_activation, gated_input_layout};
pub use linear::{so3_linear, So3LinearSpec, StagedSo3Linear};
pub use norm::equivariant_rms_norm;
pub use sph::{real_sph_harm, sph_norm_const, sph_stack, sph_stack_into, sph_stack_tape};
pub use tp::{allowed_paths, build_block_spec, depthwise_tensor_product};
pub use wigner::wigner_d;

use rand::Rng;

#[derive(Debug, thiserror::Error)]
pub enum So3Error {
    #[error("input must be a unit vector (|norm - 1| = {0:.3e} exceeds 1e-9)")]
    NotUnit(f64),
    #[error("matrix is not a rotation: {0}")]
    BadRotation(String),
    #[error("layout mismatch: {0}")]
    Layout(String),
    #[error("illegal tensor-product path ({l1},{l2})->{l3}: {reason}")]
    IllegalPath { l1: usize, l2: usize, l3: usize, reason: &'static str },
    #[error(transparent)]
    Num(#[from] crate::autodiff::NumError),
}

/// A proper rotation: 3x3 orthogonal matrix with determinant +1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    /// Validates orthogonality and determinant to 1e-12.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self, So3Error> {
        let r = Rotation { m };
        let rt_r = r.transpose().compose(&r);
        let eye = Rotation::identity();
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                dev = dev.max((rt_r.m[i][j] - eye.m[i][j]).abs());
            }
        }
        if dev > 1e-12 {
            return Err(So3Error::BadRotation(format!("R^T R deviates from I by {dev:.3e}")));
        }
        let det = r.det();
        if (det - 1.0).abs() > 1e-12 {
            return Err(So3Error::BadRotation(format!("det = {det}")));
        }
        Ok(r)
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Rotation {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        }
    }

    /// Uniform random rotation via a normalized quaternion.
    pub fn random(rng: &mut impl Rng) -> Self {
        use rand_distr::StandardNormal;
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        Rotation {
            m: [
                [
                    1.0 - 2.0 * (y * y + z * z),
                    2.0 * (x * y - w * z),
                    2.0 * (x * z + w * y),
                ],
                [
                    2.0 * (x * y + w * z),
                    1.0 - 2.0 * (x * x + z * z),
                    2.0 * (y * z - w * x),
                ],
                [
                    2.0 * (x * z - w * y),
                    2.0 * (y * z + w * x),
                    1.0 - 2.0 * (x * x + y * y),
                ],
            ],
        }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| self.m[i][0] * v[0] + self.m[i][1] * v[1] + self.m[i][2] * v[2])
    }

    pub fn transpose(&self) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for (j, row) in self.m.iter().enumerate() {
                m[i][j] = row[i];
            }
        }
        Rotation { m }
    }

    /// The inverse rotation (transpose, for orthogonal matrices).
    pub fn inverse(&self) -> Rotation {
        self.transpose()
    }

    /// self * other (apply `other` first).
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    m[i][j] += self.m[i][k] * other.m[k][j];
                }
            }
        }
        Rotation { m }
    }

    fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

#[cfg(test)]
mod tests;
