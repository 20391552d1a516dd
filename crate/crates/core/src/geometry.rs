//! 3-D vector and rotation algebra shared by every other module.
//!
//! Vectors and matrices are plain `nalgebra` types. The only additions are
//! the few maps the control laws are written in terms of: the skew map,
//! the orthogonal projector `I - y yᵀ`, checked normalisation, and
//! on-manifold rotation integration.

use libm::sqrt;
use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use crate::error::GeometryError;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type UnitVec3 = Unit<Vector3<f64>>;
pub type Rot3 = Rotation3<f64>;

/// Default floor under which a vector is treated as zero.
pub const DEGENERATE_FLOOR: f64 = 1e-9;

#[inline]
pub fn e1() -> Vec3 {
    Vec3::x()
}

#[inline]
pub fn e2() -> Vec3 {
    Vec3::y()
}

/// Unit vertical, pointing down.
#[inline]
pub fn e3() -> Vec3 {
    Vec3::z()
}

/// Matrix `S(v)` such that `S(v) x = v × x`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] applied to the antisymmetric part of `m`.
pub fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// `π_y = I - y yᵀ`, the projector onto the plane orthogonal to `y`.
pub fn orthogonal_projector(y: &UnitVec3) -> Mat3 {
    Mat3::identity() - y.as_ref() * y.transpose()
}

pub fn norm(v: &Vec3) -> f64 {
    sqrt(v.dot(v))
}

/// Normalises `v`, rejecting vectors shorter than [`DEGENERATE_FLOOR`].
pub fn normalize(v: &Vec3) -> Result<UnitVec3, GeometryError> {
    normalize_with_floor(v, DEGENERATE_FLOOR)
}

pub fn normalize_with_floor(v: &Vec3, floor: f64) -> Result<UnitVec3, GeometryError> {
    let n = norm(v);
    if !(n > floor) {
        return Err(GeometryError::DegenerateVector { norm: n });
    }
    Ok(Unit::new_unchecked(v / n))
}

/// Rodrigues exponential `exp(S(w))`.
pub fn exp_so3(w: &Vec3) -> Rot3 {
    Rotation3::from_scaled_axis(*w)
}

/// Advances `r` by a body-frame rate `omega` held for `dt`: `R exp(S(Ω dt))`.
pub fn rotate_integrate(r: &Rot3, omega: &Vec3, dt: f64) -> Rot3 {
    r * exp_so3(&(omega * dt))
}

/// Closest rotation to `m` in the Frobenius sense (polar factor).
///
/// Uses the Newton iteration `X ← ½ (X + X⁻ᵀ)`, which converges
/// quadratically for matrices already close to orthogonal.
pub fn polar_project(m: &Mat3) -> Rot3 {
    let mut x = *m;
    for _ in 0..8 {
        let Some(inv) = x.try_inverse() else {
            break;
        };
        let next = 0.5 * (x + inv.transpose());
        let delta = (next - x).abs().max();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    Rotation3::from_matrix_unchecked(x)
}

/// `‖RᵀR − I‖` (max-abs entry), used by the drift checks.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).abs().max()
}

/// Roll, pitch, yaw for the Z-Y-X convention, radians.
pub fn euler_zyx(r: &Rot3) -> [f64; 3] {
    let m = r.matrix();
    let roll = libm::atan2(m[(2, 1)], m[(2, 2)]);
    let pitch = -libm::asin(m[(2, 0)].clamp(-1.0, 1.0));
    let yaw = libm::atan2(m[(1, 0)], m[(0, 0)]);
    [roll, pitch, yaw]
}

/// Rotation from Z-Y-X Euler angles `[roll, pitch, yaw]`.
pub fn from_euler_zyx(rpy: [f64; 3]) -> Rot3 {
    rot_z(rpy[2]) * rot_y(rpy[1]) * rot_x(rpy[0])
}

pub fn rot_x(angle: f64) -> Rot3 {
    Rotation3::from_axis_angle(&Vec3::x_axis(), angle)
}

pub fn rot_y(angle: f64) -> Rot3 {
    Rotation3::from_axis_angle(&Vec3::y_axis(), angle)
}

pub fn rot_z(angle: f64) -> Rot3 {
    Rotation3::from_axis_angle(&Vec3::z_axis(), angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_2;
    use proptest::prelude::*;

    #[test]
    fn skew_basis_and_definition() {
        assert_relative_eq!(skew(&e1()) * e2(), e3());
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(skew(&v) * v, Vec3::zeros());
        let expected = Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(skew(&v), expected);
        assert_eq!(vee(&skew(&v)), v);
    }

    #[test]
    fn projector_examples() {
        let p = orthogonal_projector(&Vec3::z_axis());
        assert_eq!(p, Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0)));
        let y = normalize(&Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let p = orthogonal_projector(&y);
        assert_relative_eq!(p * p, p, epsilon = 1e-15);
        assert_relative_eq!(p * y.into_inner(), Vec3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&Vec3::new(0.0, 0.0, 2.0)).unwrap().into_inner(), e3());
        let u = normalize(&Vec3::new(3.0, 4.0, 0.0)).unwrap();
        assert_relative_eq!(u.into_inner(), Vec3::new(0.6, 0.8, 0.0), epsilon = 1e-15);
        assert!(matches!(
            normalize(&Vec3::zeros()),
            Err(GeometryError::DegenerateVector { .. })
        ));
        assert!(normalize(&Vec3::new(1e-10, 0.0, 0.0)).is_err());
    }

    #[test]
    fn rotate_integrate_examples() {
        let r = from_euler_zyx([0.1, -0.2, 0.3]);
        assert_eq!(rotate_integrate(&r, &Vec3::zeros(), 0.5), r);

        let r = rotate_integrate(&Rot3::identity(), &Vec3::new(0.0, 0.0, FRAC_PI_2), 1.0);
        assert_relative_eq!(r.matrix(), rot_z(FRAC_PI_2).matrix(), epsilon = 1e-15);
        assert_relative_eq!(r * e1(), e2(), epsilon = 1e-15);
    }

    #[test]
    fn rotate_integrate_long_run_drift() {
        let omega = Vec3::new(0.7, -1.3, 2.1);
        let mut r = Rot3::identity();
        for _ in 0..1_000_000 {
            r = rotate_integrate(&r, &omega, 1e-3);
        }
        assert!(orthonormality_error(r.matrix()) < 1e-9);
        assert!((r.matrix().determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn polar_projection_restores_orthonormality() {
        let r = from_euler_zyx([0.3, 0.2, -1.0]);
        let perturbed = r.matrix() + Mat3::new(1e-6, 2e-6, 0.0, 0.0, -1e-6, 3e-6, 1e-6, 0.0, 0.0);
        let fixed = polar_project(&perturbed);
        assert!(orthonormality_error(fixed.matrix()) < 1e-14);
        assert_relative_eq!(fixed.matrix(), r.matrix(), epsilon = 1e-5);
    }

    #[test]
    fn euler_round_trip() {
        let rpy = [0.2, -0.4, 2.5];
        let back = euler_zyx(&from_euler_zyx(rpy));
        for k in 0..3 {
            assert!((back[k] - rpy[k]).abs() < 1e-12);
        }
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn skew_is_antisymmetric_cross(v in vec3(), x in vec3()) {
            let s = skew(&v);
            prop_assert_eq!(s.transpose(), -s);
            prop_assert!((s * x - v.cross(&x)).norm() < 1e-12);
        }

        #[test]
        fn projector_output_orthogonal(y in vec3(), x in vec3()) {
            prop_assume!(y.norm() > 1e-3);
            let y = normalize(&y).unwrap();
            let px = orthogonal_projector(&y) * x;
            prop_assert!(y.dot(&px).abs() < 1e-12);
        }

        #[test]
        fn rotate_integrate_stays_on_manifold(w in vec3(), dt in 0.0..0.1f64) {
            let r = rotate_integrate(&from_euler_zyx([0.4, 0.1, -0.7]), &w, dt);
            prop_assert!(orthonormality_error(r.matrix()) < 1e-9);
            prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn substeps_converge_to_single_step(w in vec3(), n in 1usize..50) {
            // Constant rate: substeps compose exactly into the single step.
            let r0 = from_euler_zyx([0.1, 0.2, 0.3]);
            let dt = 0.05;
            let single = rotate_integrate(&r0, &w, dt);
            let mut r = r0;
            for _ in 0..n {
                r = rotate_integrate(&r, &w, dt / n as f64);
            }
            prop_assert!((r.matrix() - single.matrix()).abs().max() < 1e-12);
        }
    }
}
