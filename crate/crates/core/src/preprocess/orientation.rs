//! Orientation conversions to roll/pitch/yaw.
//!
//! Convention: intrinsic Z-Y-X, i.e. `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.
//! Roll and yaw lie in [-pi, pi], pitch in [-pi/2, pi/2]. At gimbal lock
//! (|pitch| = pi/2) roll is fixed to 0 and yaw carries the remaining rotation.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// Below this value of cos(pitch) the matrix is treated as gimbal-locked.
const GIMBAL_COS: f64 = 1e-12;
/// Orthonormality residual accepted without repair.
const ORTHO_TOL: f64 = 1e-6;
/// Largest correction the re-orthonormalization may apply.
const REPAIR_TOL: f64 = 1e-3;

/// Wraps an angle into [-pi, pi]. Values already in range are returned unchanged.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) || !a.is_finite() {
        return a;
    }
    let w = a - 2.0 * PI * (a / (2.0 * PI)).round();
    w.clamp(-PI, PI)
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn frobenius_distance(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    s.sqrt()
}

fn determinant(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inverse_transpose(m: &Mat3) -> Option<Mat3> {
    let det = determinant(m);
    if det.abs() < 1e-12 {
        return None;
    }
    // Cofactor matrix divided by the determinant is inv(m)^T.
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            out[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / det;
        }
    }
    Some(out)
}

fn orthonormality_residual(m: &Mat3) -> f64 {
    let mtm = mat_mul(&transpose(m), m);
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    frobenius_distance(&mtm, &identity)
}

/// Nearest orthogonal matrix via the Newton polar iteration.
fn polar_orthonormalize(m: &Mat3) -> Option<Mat3> {
    let mut x = *m;
    for _ in 0..50 {
        let it = inverse_transpose(&x)?;
        let mut next = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                next[i][j] = 0.5 * (x[i][j] + it[i][j]);
            }
        }
        let step = frobenius_distance(&next, &x);
        x = next;
        if step < 1e-15 {
            break;
        }
    }
    Some(x)
}

pub fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

pub fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Composes `Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn rpy_to_rotmat(rpy: [f64; 3]) -> Mat3 {
    let [roll, pitch, yaw] = rpy;
    mat_mul(&rot_z(yaw), &mat_mul(&rot_y(pitch), &rot_x(roll)))
}

/// Unit quaternion (w, x, y, z) of the same rotation as [`rpy_to_rotmat`].
pub fn rpy_to_quat(rpy: [f64; 3]) -> [f64; 4] {
    let [roll, pitch, yaw] = rpy;
    let (sr, cr) = (roll / 2.0).sin_cos();
    let (sp, cp) = (pitch / 2.0).sin_cos();
    let (sy, cy) = (yaw / 2.0).sin_cos();
    [
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ]
}

fn normalize_quat(q: [f64; 4]) -> Result<[f64; 4]> {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::ZeroQuaternion);
    }
    Ok(q.map(|v| v / n))
}

/// Rotation matrix of a quaternion (w, x, y, z); normalizes internally.
pub fn quat_to_rotmat(q: [f64; 4]) -> Result<Mat3> {
    let [w, x, y, z] = normalize_quat(q)?;
    Ok([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}

/// Roll, pitch, yaw of a row-major 3x3 rotation matrix.
///
/// Matrices with orthonormality residual above 1e-6 are projected onto the
/// nearest rotation first; if that projection moves the matrix by more than
/// 1e-3 (or the matrix is a reflection) the input is rejected.
pub fn rotmat_to_rpy(r: &[f64; 9]) -> Result<[f64; 3]> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotARotation { residual: f64::INFINITY });
    }
    let mut m = [[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]];
    let residual = orthonormality_residual(&m);
    if residual > ORTHO_TOL {
        let repaired = polar_orthonormalize(&m).ok_or(Error::NotARotation { residual })?;
        if frobenius_distance(&repaired, &m) > REPAIR_TOL || orthonormality_residual(&repaired) > ORTHO_TOL {
            return Err(Error::NotARotation { residual });
        }
        m = repaired;
    }
    if determinant(&m) <= 0.0 {
        return Err(Error::NotARotation { residual });
    }
    Ok(matrix_angles(&m))
}

fn matrix_angles(m: &Mat3) -> [f64; 3] {
    let cos_pitch = m[0][0].hypot(m[1][0]);
    let pitch = (-m[2][0]).atan2(cos_pitch);
    if cos_pitch < GIMBAL_COS {
        let yaw = (-m[0][1]).atan2(m[1][1]);
        return [0.0, pitch, yaw];
    }
    let yaw = m[1][0].atan2(m[0][0]);
    // Roll from the residual rotation once pitch and yaw are removed keeps
    // the three angles mutually consistent near gimbal lock.
    let residual = mat_mul(&transpose(&rot_y(pitch)), &mat_mul(&transpose(&rot_z(yaw)), m));
    let roll = residual[2][1].atan2(residual[1][1]);
    [roll, pitch, yaw]
}

/// Roll, pitch, yaw of a quaternion (w, x, y, z), computed directly from the
/// quaternion components.
pub fn quat_to_rpy(q: [f64; 4]) -> Result<[f64; 3]> {
    let [w, x, y, z] = normalize_quat(q)?;
    let r00 = 1.0 - 2.0 * (y * y + z * z);
    let r10 = 2.0 * (x * y + w * z);
    let cos_pitch = r00.hypot(r10);
    let sin_pitch = (2.0 * (w * y - x * z)).clamp(-1.0, 1.0);
    if cos_pitch < GIMBAL_COS {
        let yaw = (2.0 * (w * z - x * y)).atan2(1.0 - 2.0 * (x * x + z * z));
        return Ok([0.0, sin_pitch.atan2(cos_pitch), yaw]);
    }
    let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
    let pitch = sin_pitch.asin();
    let yaw = r10.atan2(r00);
    Ok([roll, pitch, yaw])
}

pub fn flatten(m: &Mat3) -> [f64; 9] {
    [
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    ]
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    use super::*;

    const IDENTITY: [f64; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

    fn assert_angles(got: [f64; 3], want: [f64; 3], tol: f64) {
        for (g, w) in got.iter().zip(want) {
            assert!(wrap_angle(g - w).abs() <= tol, "got {got:?}, want {want:?}");
        }
    }

    #[test]
    fn identity_is_zero() {
        assert_eq!(rotmat_to_rpy(&IDENTITY).unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(quat_to_rpy([1.0, 0.0, 0.0, 0.0]).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = flatten(&rot_z(FRAC_PI_2));
        let rpy = rotmat_to_rpy(&r).unwrap();
        assert_angles(rpy, [0.0, 0.0, FRAC_PI_2], 1e-12);
        // Oracle: composing the angles back reproduces the matrix.
        let back = rpy_to_rotmat(rpy);
        assert!(frobenius_distance(&back, &rot_z(FRAC_PI_2)) < 1e-12);
    }

    #[test]
    fn quarter_turn_about_x_from_quaternion() {
        let rpy = quat_to_rpy([FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0]).unwrap();
        assert_angles(rpy, [FRAC_PI_2, 0.0, 0.0], 1e-12);
        let via_matrix = rotmat_to_rpy(&flatten(&quat_to_rotmat([FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0]).unwrap())).unwrap();
        assert_angles(rpy, via_matrix, 1e-9);
    }

    #[test]
    fn gimbal_lock_sets_roll_to_zero() {
        for pitch in [FRAC_PI_2, -FRAC_PI_2] {
            let source = rpy_to_rotmat([0.3, pitch, 0.5]);
            let rpy = rotmat_to_rpy(&flatten(&source)).unwrap();
            assert_eq!(rpy[0], 0.0);
            assert!((rpy[1] - pitch).abs() < 1e-12);
            assert!(frobenius_distance(&rpy_to_rotmat(rpy), &source) < 1e-9);

            let q = rpy_to_quat([0.3, pitch, 0.5]);
            let from_q = quat_to_rpy(q).unwrap();
            assert_eq!(from_q[0], 0.0);
            assert!(frobenius_distance(&rpy_to_rotmat(from_q), &source) < 1e-9);
        }
        // pitch = +pi/2 folds roll into yaw as yaw - roll.
        let rpy = rotmat_to_rpy(&flatten(&rpy_to_rotmat([0.3, FRAC_PI_2, 0.5]))).unwrap();
        assert!((rpy[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_quaternion_rejected() {
        assert!(matches!(quat_to_rpy([0.0; 4]), Err(Error::ZeroQuaternion)));
        assert!(matches!(quat_to_rotmat([0.0; 4]), Err(Error::ZeroQuaternion)));
    }

    #[test]
    fn quaternion_is_normalized_internally() {
        let q = rpy_to_quat([0.2, -0.4, 1.1]).map(|v| v * 3.5);
        assert_angles(quat_to_rpy(q).unwrap(), [0.2, -0.4, 1.1], 1e-12);
    }

    #[test]
    fn slightly_skewed_matrix_is_repaired() {
        let mut r = flatten(&rpy_to_rotmat([0.1, 0.2, 0.3]));
        r[0] += 1e-5;
        let rpy = rotmat_to_rpy(&r).unwrap();
        assert_angles(rpy, [0.1, 0.2, 0.3], 1e-4);
    }

    #[test]
    fn non_rotations_rejected() {
        let scaled = IDENTITY.map(|v| v * 2.0);
        assert!(matches!(rotmat_to_rpy(&scaled), Err(Error::NotARotation { .. })));
        let reflection = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0];
        assert!(matches!(rotmat_to_rpy(&reflection), Err(Error::NotARotation { .. })));
        let mut nan = IDENTITY;
        nan[4] = f64::NAN;
        assert!(rotmat_to_rpy(&nan).is_err());
    }

    #[test]
    fn wrap_angle_keeps_in_range_values() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-0.25), -0.25);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_angle(-7.0) - (-7.0 + 2.0 * PI)).abs() < 1e-15);
    }
}
