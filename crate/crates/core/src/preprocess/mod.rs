//! Projection of raw robot channels into the common 7-per-arm feature space,
//! orientation conversion and fixed-length resampling.

pub mod orientation;
mod resample;

pub use orientation::{quat_to_rpy, rotmat_to_rpy, rpy_to_quat, rpy_to_rotmat, wrap_angle};
pub use resample::{resample_segment, ResampledSegment, FRAMES};


use crate::error::{Error, Result};
use crate::ingest::RawFrame;
use crate::model::{ArmLayout, ArmState, KinFrame, OrientationEncoding, RobotProfile};

fn project_arm(block: &[f64], layout: &ArmLayout, profile: &RobotProfile) -> Result<ArmState> {
    let scale = profile.workspace_scale;
    let position = layout.position.map(|off| block[off] / scale);
    let orient: Vec<f64> = layout.orientation.iter().map(|&off| block[off]).collect();
    let orientation = match profile.orientation_encoding {
        OrientationEncoding::RotationMatrix9 => {
            let mut m = [0.0; 9];
            m.copy_from_slice(&orient);
            rotmat_to_rpy(&m)?
        }
        OrientationEncoding::Quaternion4 => quat_to_rpy([orient[0], orient[1], orient[2], orient[3]])?,
        OrientationEncoding::EulerRPY3 => [wrap_angle(orient[0]), orient[1], wrap_angle(orient[2])],
    };
    let [lo, hi] = profile.gripper_range;
    let raw = block[layout.gripper];
    let slack = 1e-9 * (hi - lo);
    if !(raw >= lo - slack && raw <= hi + slack) {
        return Err(Error::Range {
            what: "gripper",
            value: raw,
            min: lo,
            max: hi,
        });
    }
    let gripper = ((raw - lo) / (hi - lo)).clamp(0.0, 1.0);
    Ok(ArmState {
        position,
        orientation,
        gripper,
    })
}

/// Maps one raw row onto the common feature space: positions divided by the
/// profile's workspace scale, orientation converted to roll/pitch/yaw, the
/// gripper normalized to [0, 1]. Joint angles are kept when the profile
/// declares them.
pub fn project_common_features(raw: &RawFrame, profile: &RobotProfile) -> Result<KinFrame> {
    let width = profile.channels_per_arm;
    if raw.values.len() != 2 * width {
        return Err(Error::DimMismatch {
            expected: 2 * width,
            got: raw.values.len(),
        });
    }
    let layout = profile.arm_layout();
    let (left_block, right_block) = raw.values.split_at(width);
    let left = project_arm(left_block, &layout, profile)?;
    let right = project_arm(right_block, &layout, profile)?;
    let raw_joints = (profile.joint_count > 0).then(|| {
        layout
            .joints
            .iter()
            .map(|&o| left_block[o])
            .chain(layout.joints.iter().map(|&o| right_block[o]))
            .collect()
    });
    Ok(KinFrame {
        timestamp: raw.timestamp,
        left,
        right,
        raw_joints,
    })
}

/// Inverse of [`project_common_features`] for generated data: encodes a
/// common-space frame (positions already in robot units) into a raw row of
/// the given profile. Auxiliary channels are written as zero.
pub fn encode_raw_frame(frame: &KinFrame, profile: &RobotProfile) -> RawFrame {
    let width = profile.channels_per_arm;
    let layout = profile.arm_layout();
    let [lo, hi] = profile.gripper_range;
    let mut values = vec![0.0; 2 * width];
    let jpa = profile.joints_per_arm();
    for (arm_idx, arm) in [&frame.left, &frame.right].into_iter().enumerate() {
        let block = &mut values[arm_idx * width..(arm_idx + 1) * width];
        for (off, p) in layout.position.iter().zip(arm.position) {
            block[*off] = p;
        }
        let orient: Vec<f64> = match profile.orientation_encoding {
            OrientationEncoding::RotationMatrix9 => orientation::flatten(&rpy_to_rotmat(arm.orientation)).to_vec(),
            OrientationEncoding::Quaternion4 => rpy_to_quat(arm.orientation).to_vec(),
            OrientationEncoding::EulerRPY3 => arm.orientation.to_vec(),
        };
        for (off, v) in layout.orientation.iter().zip(orient) {
            block[*off] = v;
        }
        block[layout.gripper] = lo + arm.gripper * (hi - lo);
        if let Some(joints) = &frame.raw_joints {
            for (j, off) in layout.joints.iter().enumerate() {
                block[*off] = joints.get(arm_idx * jpa + j).copied().unwrap_or(0.0);
            }
        }
    }
    RawFrame {
        timestamp: frame.timestamp,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    fn identity_row(profile: &RobotProfile, left_pos: [f64; 3]) -> RawFrame {
        let frame = KinFrame {
            timestamp: 1.0,
            left: ArmState {
                position: left_pos,
                orientation: [0.0; 3],
                gripper: 1.0,
            },
            right: ArmState::default(),
            raw_joints: (profile.joint_count > 0).then(|| vec![0.25; profile.joint_count]),
        };
        encode_raw_frame(&frame, profile)
    }

    #[test]
    fn yumi_positions_are_divided_by_scale() {
        let p = RobotProfile::yumi();
        let f = project_common_features(&identity_row(&p, [0.2, 0.4, 0.1]), &p).unwrap();
        assert_eq!(f.left.position, [0.1, 0.2, 0.05]);
    }

    #[test]
    fn taurus_identity_wrist_is_zero_orientation() {
        let p = RobotProfile::taurus();
        let row = identity_row(&p, [0.0; 3]);
        assert_eq!(&row.values[3..12], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let f = project_common_features(&row, &p).unwrap();
        assert_eq!(f.left.orientation, [0.0; 3]);
        assert_eq!(f.raw_joints, None);
    }

    #[test]
    fn dvrk_aperture_at_max_is_fully_open() {
        let p = RobotProfile::dvrk();
        let row = identity_row(&p, [0.0; 3]);
        assert_eq!(row.values[7], 1.2);
        let f = project_common_features(&row, &p).unwrap();
        assert_eq!(f.left.gripper, 1.0);
        assert_eq!(f.raw_joints.as_ref().map(Vec::len), Some(12));
    }

    #[test]
    fn gripper_outside_range_is_rejected() {
        let p = RobotProfile::dvrk();
        let mut row = identity_row(&p, [0.0; 3]);
        row.values[7] = 1.5;
        assert!(matches!(project_common_features(&row, &p), Err(Error::Range { .. })));
    }

    #[test]
    fn wrong_channel_count_is_rejected() {
        let p = RobotProfile::taurus();
        let row = RawFrame {
            timestamp: 0.0,
            values: vec![0.0; 5],
        };
        assert!(matches!(project_common_features(&row, &p), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn workspace_scale_invariance() {
        let unit = RobotProfile {
            name: "unit".into(),
            workspace_scale: 1.0,
            domain_default: Domain::Real,
            ..RobotProfile::taurus()
        };
        for s in [0.5, 2.0, 4.0, 8.0] {
            let scaled = RobotProfile {
                workspace_scale: s,
                ..unit.clone()
            };
            let pos = [0.013, -0.271, 0.0899];
            let a = project_common_features(&identity_row(&unit, pos), &unit).unwrap();
            let b = project_common_features(&identity_row(&scaled, pos.map(|v| v * s)), &scaled).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn custom_layout_is_honored() {
        let mut p = RobotProfile::yumi();
        p.layout = Some(ArmLayout {
            position: [7, 8, 9],
            orientation: vec![0, 1, 2, 3],
            gripper: 4,
            joints: vec![],
        });
        p.validate().unwrap();
        let mut values = vec![0.0; 20];
        values[0] = 1.0;
        values[4] = 0.5;
        values[7] = 0.4;
        values[10] = 1.0;
        let f = project_common_features(&RawFrame { timestamp: 0.0, values }, &p).unwrap();
        assert_eq!(f.left.position, [0.2, 0.0, 0.0]);
        assert_eq!(f.left.gripper, 0.5);
    }
}
