//! Converts one wrist orientation between rotation matrix, quaternion and
//! roll/pitch/yaw, the way each robot's raw stream gets projected.
//!
//! Run with `cargo run --example orientation`.

use surgeme_kit::preprocess::orientation::{flatten, quat_to_rpy, rotmat_to_rpy, rpy_to_quat, rpy_to_rotmat};

fn main() -> surgeme_kit::Result<()> {
    let rpy = [0.3, -0.7, 2.9];
    let matrix = rpy_to_rotmat(rpy);
    let quat = rpy_to_quat(rpy);

    let from_matrix = rotmat_to_rpy(&flatten(&matrix))?;
    let from_quat = quat_to_rpy(quat)?;
    println!("rpy in          {rpy:?}");
    println!("quaternion      {quat:?}");
    println!("via matrix      {from_matrix:?}");
    println!("via quaternion  {from_quat:?}");

    // Near gimbal lock roll folds into yaw; the rotation itself is preserved.
    let locked = rotmat_to_rpy(&flatten(&rpy_to_rotmat([0.4, std::f64::consts::FRAC_PI_2, 0.1])))?;
    println!("gimbal lock     {locked:?}");
    Ok(())
}
