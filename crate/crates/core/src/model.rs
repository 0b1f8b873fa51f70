//! Domain vocabulary: surgeme classes, kinematic frames, robot profiles,
//! labeled segments and datasets.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of surgeme classes in the peg-transfer grammar.
pub const NUM_CLASSES: usize = 7;

/// Common features per arm: position (3), roll/pitch/yaw (3), gripper (1).
pub const FEATURES_PER_ARM: usize = 7;

/// Common features per frame across both arms.
pub const COMMON_CHANNELS: usize = 2 * FEATURES_PER_ARM;

/// True for channels holding an orientation angle (roll, pitch or yaw).
pub fn is_angle_channel(channel: usize) -> bool {
    (3..6).contains(&(channel % FEATURES_PER_ARM))
}

/// The seven peg-transfer surgemes, in task order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SurgemeClass {
    ApproachPeg,
    AlignAndGrasp,
    LiftPeg,
    GetTogether,
    Exchange,
    ApproachPole,
    AlignAndPlace,
}

impl SurgemeClass {
    pub const ALL: [SurgemeClass; NUM_CLASSES] = [
        SurgemeClass::ApproachPeg,
        SurgemeClass::AlignAndGrasp,
        SurgemeClass::LiftPeg,
        SurgemeClass::GetTogether,
        SurgemeClass::Exchange,
        SurgemeClass::ApproachPole,
        SurgemeClass::AlignAndPlace,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    /// Canonical identifier, e.g. `AlignAndGrasp`.
    pub fn name(self) -> &'static str {
        match self {
            SurgemeClass::ApproachPeg => "ApproachPeg",
            SurgemeClass::AlignAndGrasp => "AlignAndGrasp",
            SurgemeClass::LiftPeg => "LiftPeg",
            SurgemeClass::GetTogether => "GetTogether",
            SurgemeClass::Exchange => "Exchange",
            SurgemeClass::ApproachPole => "ApproachPole",
            SurgemeClass::AlignAndPlace => "AlignAndPlace",
        }
    }

    /// Human-readable name as written in annotation files, e.g. `Align and grasp`.
    pub fn display_name(self) -> &'static str {
        match self {
            SurgemeClass::ApproachPeg => "Approach peg",
            SurgemeClass::AlignAndGrasp => "Align and grasp",
            SurgemeClass::LiftPeg => "Lift peg",
            SurgemeClass::GetTogether => "Get together",
            SurgemeClass::Exchange => "Exchange",
            SurgemeClass::ApproachPole => "Approach pole",
            SurgemeClass::AlignAndPlace => "Align and place",
        }
    }
}

impl fmt::Display for SurgemeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurgemeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        class_from_name(s)
    }
}

fn normalize_name(name: &str) -> String {
    name.trim()
        .to_lowercase()
        .replace('&', "and")
        .chars()
        .filter(|c| c.is_alphanumeric())
        .collect()
}

/// Resolves a surgeme name case-insensitively. Spacing, underscores and
/// hyphens are ignored, so `Align and Grasp`, `align_and_grasp` and
/// `AlignAndGrasp` all resolve to the same class.
pub fn class_from_name(name: &str) -> Result<SurgemeClass> {
    let key = normalize_name(name);
    SurgemeClass::ALL
        .into_iter()
        .find(|c| normalize_name(c.name()) == key)
        .ok_or_else(|| Error::UnknownClass(name.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Sim,
    Real,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Sim => "sim",
            Domain::Real => "real",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "sim" | "simulated" | "simulation" => Ok(Domain::Sim),
            "real" => Ok(Domain::Real),
            other => Err(Error::InvalidParams(format!("unknown domain `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "Pass",
            Outcome::Fail => "Fail",
        }
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "pass" | "p" | "success" => Ok(Outcome::Pass),
            "fail" | "f" | "failure" => Ok(Outcome::Fail),
            other => Err(Error::InvalidParams(format!("unknown outcome `{other}`"))),
        }
    }
}

/// Pose and gripper state of one arm in the common feature space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub position: [f64; 3],
    /// Roll, pitch, yaw in radians (intrinsic Z-Y-X).
    pub orientation: [f64; 3],
    /// 0 = fully closed, 1 = fully open.
    pub gripper: f64,
}

impl ArmState {
    pub fn channels(&self) -> [f64; FEATURES_PER_ARM] {
        let [x, y, z] = self.position;
        let [r, p, w] = self.orientation;
        [x, y, z, r, p, w, self.gripper]
    }

    pub fn from_channels(c: &[f64]) -> Self {
        ArmState {
            position: [c[0], c[1], c[2]],
            orientation: [c[3], c[4], c[5]],
            gripper: c[6],
        }
    }
}

/// One timestamped kinematic sample of both arms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinFrame {
    /// Seconds; Unix epoch for recorded data.
    pub timestamp: f64,
    pub left: ArmState,
    pub right: ArmState,
    /// Joint angles of both arms (left then right) when the profile records them.
    pub raw_joints: Option<Vec<f64>>,
}

impl KinFrame {
    /// The 14 common channels: left arm block, then right arm block.
    pub fn channels(&self) -> [f64; COMMON_CHANNELS] {
        let mut out = [0.0; COMMON_CHANNELS];
        out[..FEATURES_PER_ARM].copy_from_slice(&self.left.channels());
        out[FEATURES_PER_ARM..].copy_from_slice(&self.right.channels());
        out
    }

    pub fn from_channels(timestamp: f64, channels: &[f64], raw_joints: Option<Vec<f64>>) -> Self {
        KinFrame {
            timestamp,
            left: ArmState::from_channels(&channels[..FEATURES_PER_ARM]),
            right: ArmState::from_channels(&channels[FEATURES_PER_ARM..COMMON_CHANNELS]),
            raw_joints,
        }
    }
}

/// How a profile records wrist orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrientationEncoding {
    /// Row-major 3x3 rotation matrix.
    RotationMatrix9,
    /// Unit quaternion (w, x, y, z).
    Quaternion4,
    /// Roll, pitch, yaw in radians.
    EulerRPY3,
}

impl OrientationEncoding {
    pub fn width(self) -> usize {
        match self {
            OrientationEncoding::RotationMatrix9 => 9,
            OrientationEncoding::Quaternion4 => 4,
            OrientationEncoding::EulerRPY3 => 3,
        }
    }
}

/// Column offsets of each channel within one arm's block of a kinematics row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmLayout {
    pub position: [usize; 3],
    pub orientation: Vec<usize>,
    pub gripper: usize,
    #[serde(default)]
    pub joints: Vec<usize>,
}

impl ArmLayout {
    /// Position, orientation, gripper, joints, packed from offset 0.
    pub fn packed(encoding: OrientationEncoding, joints_per_arm: usize) -> Self {
        let w = encoding.width();
        ArmLayout {
            position: [0, 1, 2],
            orientation: (3..3 + w).collect(),
            gripper: 3 + w,
            joints: (4 + w..4 + w + joints_per_arm).collect(),
        }
    }

    fn offsets(&self) -> impl Iterator<Item = usize> + '_ {
        self.position
            .iter()
            .chain(&self.orientation)
            .chain(std::iter::once(&self.gripper))
            .chain(&self.joints)
            .copied()
    }
}

/// Raw channel layout of one robot and its mapping to the common feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotProfile {
    pub name: String,
    pub orientation_encoding: OrientationEncoding,
    pub channels_per_arm: usize,
    /// Joint channels across both arms (split evenly); 0 if unused.
    #[serde(default)]
    pub joint_count: usize,
    pub workspace_scale: f64,
    pub domain_default: Domain,
    /// Raw gripper values mapping to closed (first) and fully open (second).
    #[serde(default = "default_gripper_range")]
    pub gripper_range: [f64; 2],
    /// Custom column map; defaults to the packed layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<ArmLayout>,
}

fn default_gripper_range() -> [f64; 2] {
    [0.0, 1.0]
}

impl RobotProfile {
    pub fn joints_per_arm(&self) -> usize {
        self.joint_count / 2
    }

    pub fn arm_layout(&self) -> ArmLayout {
        self.layout
            .clone()
            .unwrap_or_else(|| ArmLayout::packed(self.orientation_encoding, self.joints_per_arm()))
    }

    /// Data columns per kinematics row, excluding the timestamp.
    pub fn data_columns(&self) -> usize {
        2 * self.channels_per_arm
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(format!("profile `{}`: {msg}", self.name)));
        if self.name.trim().is_empty() || self.name.contains(',') {
            return bad("name must be non-empty and contain no commas".into());
        }
        if !(self.workspace_scale.is_finite() && self.workspace_scale > 0.0) {
            return bad(format!("workspace_scale {} must be positive", self.workspace_scale));
        }
        if self.joint_count % 2 != 0 {
            return bad(format!("joint_count {} must split evenly across two arms", self.joint_count));
        }
        let [lo, hi] = self.gripper_range;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return bad(format!("gripper_range [{lo}, {hi}] must be increasing"));
        }
        let needed = 3 + self.orientation_encoding.width() + 1 + self.joints_per_arm();
        if self.channels_per_arm < needed {
            return bad(format!(
                "{} channels per arm cannot hold position, {:?} orientation, gripper and {} joints",
                self.channels_per_arm,
                self.orientation_encoding,
                self.joints_per_arm()
            ));
        }
        let layout = self.arm_layout();
        if layout.orientation.len() != self.orientation_encoding.width() {
            return bad("layout orientation width does not match encoding".into());
        }
        if layout.joints.len() != self.joints_per_arm() {
            return bad("layout joint count does not match joint_count".into());
        }
        let mut seen = vec![false; self.channels_per_arm];
        for off in layout.offsets() {
            if off >= self.channels_per_arm || std::mem::replace(&mut seen[off], true) {
                return bad(format!("layout offset {off} is out of range or repeated"));
            }
        }
        Ok(())
    }

    /// Header for the canonical kinematics table.
    pub fn column_names(&self) -> Vec<String> {
        let layout = self.arm_layout();
        let orient: Vec<&str> = match self.orientation_encoding {
            OrientationEncoding::RotationMatrix9 => {
                vec!["r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33"]
            }
            OrientationEncoding::Quaternion4 => vec!["qw", "qx", "qy", "qz"],
            OrientationEncoding::EulerRPY3 => vec!["roll", "pitch", "yaw"],
        };
        let mut names = vec!["timestamp".to_string()];
        for arm in ["left", "right"] {
            let mut block: Vec<String> = (0..self.channels_per_arm).map(|i| format!("{arm}_aux{i}")).collect();
            for (off, axis) in layout.position.iter().zip(["x", "y", "z"]) {
                block[*off] = format!("{arm}_{axis}");
            }
            for (off, n) in layout.orientation.iter().zip(&orient) {
                block[*off] = format!("{arm}_{n}");
            }
            block[layout.gripper] = format!("{arm}_gripper");
            for (j, off) in layout.joints.iter().enumerate() {
                block[*off] = format!("{arm}_joint{j}");
            }
            names.extend(block);
        }
        names
    }

    /// Taurus II: wrist rotation matrix, 13 channels per arm.
    pub fn taurus() -> Self {
        RobotProfile {
            name: "taurus".into(),
            orientation_encoding: OrientationEncoding::RotationMatrix9,
            channels_per_arm: 13,
            joint_count: 0,
            workspace_scale: 1.0,
            domain_default: Domain::Real,
            gripper_range: [0.0, 1.0],
            layout: None,
        }
    }

    /// Simulated Taurus II; same layout as the physical robot.
    pub fn taurus_sim() -> Self {
        RobotProfile {
            name: "taurus-sim".into(),
            domain_default: Domain::Sim,
            ..Self::taurus()
        }
    }

    /// YuMi: quaternion orientation, two auxiliary channels per arm
    /// (20 data columns), workspace scaled by two.
    pub fn yumi() -> Self {
        RobotProfile {
            name: "yumi".into(),
            orientation_encoding: OrientationEncoding::Quaternion4,
            channels_per_arm: 10,
            joint_count: 0,
            workspace_scale: 2.0,
            domain_default: Domain::Real,
            gripper_range: [0.0, 1.0],
            layout: None,
        }
    }

    /// dVRK: quaternion orientation, gripper aperture angle in radians and six
    /// joint angles per arm (14 channels per arm).
    pub fn dvrk() -> Self {
        RobotProfile {
            name: "dvrk".into(),
            orientation_encoding: OrientationEncoding::Quaternion4,
            channels_per_arm: 14,
            joint_count: 12,
            workspace_scale: 1.0,
            domain_default: Domain::Real,
            gripper_range: [0.0, 1.2],
            layout: None,
        }
    }
}

/// Built-in profiles keyed by name.
pub fn builtin_profiles() -> BTreeMap<String, RobotProfile> {
    [
        RobotProfile::taurus(),
        RobotProfile::taurus_sim(),
        RobotProfile::yumi(),
        RobotProfile::dvrk(),
    ]
    .into_iter()
    .map(|p| (p.name.clone(), p))
    .collect()
}

/// A labeled, contiguous run of frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgemeSegment {
    pub label: SurgemeClass,
    pub frames: Vec<KinFrame>,
    pub outcome: Outcome,
    pub domain: Domain,
    pub trial_id: String,
    pub robot: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub segments: Vec<SurgemeSegment>,
    pub profiles: BTreeMap<String, RobotProfile>,
}

impl Dataset {
    pub fn new(segments: Vec<SurgemeSegment>, profiles: BTreeMap<String, RobotProfile>) -> Self {
        Dataset { segments, profiles }
    }

    pub fn profile(&self, robot: &str) -> Result<&RobotProfile> {
        self.profiles
            .get(robot)
            .ok_or_else(|| Error::UnknownProfile(robot.to_string()))
    }

    /// Segment counts per class id.
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for s in &self.segments {
            counts[s.label.id()] += 1;
        }
        counts
    }

    /// Distinct trial ids, sorted.
    pub fn trial_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.segments.iter().map(|s| s.trial_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Keeps segments matching the predicate; the profile registry is untouched.
    pub fn filtered(&self, keep: impl Fn(&SurgemeSegment) -> bool) -> Dataset {
        Dataset {
            segments: self.segments.iter().filter(|s| keep(s)).cloned().collect(),
            profiles: self.profiles.clone(),
        }
    }
}

/// A broken dataset invariant. Returned as data by [`validate_dataset`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    UnknownProfile { segment: usize, robot: String },
    TooShort { segment: usize, frames: usize },
    NonMonotoneTimestamps { segment: usize, frame: usize },
    GripperOutOfRange { segment: usize, frame: usize, arm: &'static str, value: f64 },
    OrientationOutOfRange { segment: usize, frame: usize, arm: &'static str },
    NonFinite { segment: usize, frame: usize },
    JointCountMismatch { segment: usize, frame: usize, expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownProfile { segment, robot } => {
                write!(f, "segment {segment}: robot `{robot}` has no registered profile")
            }
            Violation::TooShort { segment, frames } => {
                write!(f, "segment {segment}: {frames} frames (minimum 2)")
            }
            Violation::NonMonotoneTimestamps { segment, frame } => {
                write!(f, "segment {segment}: timestamp at frame {frame} does not increase")
            }
            Violation::GripperOutOfRange { segment, frame, arm, value } => {
                write!(f, "segment {segment}: {arm} gripper {value} outside [0, 1] at frame {frame}")
            }
            Violation::OrientationOutOfRange { segment, frame, arm } => {
                write!(f, "segment {segment}: {arm} orientation out of range at frame {frame}")
            }
            Violation::NonFinite { segment, frame } => {
                write!(f, "segment {segment}: non-finite value at frame {frame}")
            }
            Violation::JointCountMismatch { segment, frame, expected, found } => write!(
                f,
                "segment {segment}: frame {frame} has {found} joints, profile declares {expected}"
            ),
        }
    }
}

fn arm_violations(segment: usize, frame: usize, arm: &'static str, state: &ArmState, out: &mut Vec<Violation>) {
    let all_finite = state.channels().iter().all(|v| v.is_finite());
    if !all_finite {
        out.push(Violation::NonFinite { segment, frame });
        return;
    }
    if !(0.0..=1.0).contains(&state.gripper) {
        out.push(Violation::GripperOutOfRange {
            segment,
            frame,
            arm,
            value: state.gripper,
        });
    }
    let [r, p, y] = state.orientation;
    if r.abs() > PI || y.abs() > PI || p.abs() > FRAC_PI_2 {
        out.push(Violation::OrientationOutOfRange { segment, frame, arm });
    }
}

/// Every invariant violation in the dataset; empty iff the dataset is well-formed.
pub fn validate_dataset(ds: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    for (si, seg) in ds.segments.iter().enumerate() {
        let profile = ds.profiles.get(&seg.robot);
        if profile.is_none() {
            out.push(Violation::UnknownProfile {
                segment: si,
                robot: seg.robot.clone(),
            });
        }
        if seg.frames.len() < 2 {
            out.push(Violation::TooShort {
                segment: si,
                frames: seg.frames.len(),
            });
        }
        for (fi, frame) in seg.frames.iter().enumerate() {
            if !frame.timestamp.is_finite() {
                out.push(Violation::NonFinite { segment: si, frame: fi });
            } else if fi > 0 && frame.timestamp <= seg.frames[fi - 1].timestamp {
                out.push(Violation::NonMonotoneTimestamps { segment: si, frame: fi });
            }
            arm_violations(si, fi, "left", &frame.left, &mut out);
            arm_violations(si, fi, "right", &frame.right, &mut out);
            if let (Some(joints), Some(p)) = (&frame.raw_joints, profile) {
                if joints.len() != p.joint_count {
                    out.push(Violation::JointCountMismatch {
                        segment: si,
                        frame: fi,
                        expected: p.joint_count,
                        found: joints.len(),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64) -> KinFrame {
        KinFrame {
            timestamp: t,
            left: ArmState {
                position: [0.1, 0.0, 0.02],
                orientation: [0.0, 0.1, -0.3],
                gripper: 1.0,
            },
            right: ArmState::default(),
            raw_joints: None,
        }
    }

    fn segment(ts: &[f64], robot: &str) -> SurgemeSegment {
        SurgemeSegment {
            label: SurgemeClass::LiftPeg,
            frames: ts.iter().map(|&t| frame(t)).collect(),
            outcome: Outcome::Pass,
            domain: Domain::Real,
            trial_id: "t0".into(),
            robot: robot.into(),
        }
    }

    fn dataset(segments: Vec<SurgemeSegment>) -> Dataset {
        Dataset::new(segments, builtin_profiles())
    }

    #[test]
    fn class_names_resolve() {
        assert_eq!(class_from_name("Lift peg").unwrap().id(), 2);
        assert_eq!(class_from_name("approach peg").unwrap().id(), 0);
        assert_eq!(class_from_name("Align and Grasp").unwrap(), SurgemeClass::AlignAndGrasp);
        assert_eq!(class_from_name("Get Together").unwrap(), SurgemeClass::GetTogether);
        assert_eq!(class_from_name("Approach Pole").unwrap(), SurgemeClass::ApproachPole);
        assert!(matches!(class_from_name("Needle pass"), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn class_ids_are_a_bijection() {
        for (i, c) in SurgemeClass::ALL.into_iter().enumerate() {
            assert_eq!(c.id(), i);
            assert_eq!(SurgemeClass::from_id(i), Some(c));
            assert_eq!(class_from_name(c.name()).unwrap(), c);
            assert_eq!(class_from_name(c.display_name()).unwrap(), c);
        }
        assert_eq!(SurgemeClass::from_id(7), None);
    }

    #[test]
    fn builtin_profiles_validate() {
        for p in builtin_profiles().values() {
            p.validate().unwrap();
            assert_eq!(p.column_names().len(), 1 + p.data_columns());
        }
        assert_eq!(RobotProfile::taurus().data_columns() + 1, 1 + 2 * (3 + 9 + 1));
        assert_eq!(RobotProfile::yumi().data_columns(), 20);
        assert_eq!(RobotProfile::dvrk().channels_per_arm, 14);
    }

    #[test]
    fn profile_rejects_bad_scale_and_layout() {
        let mut p = RobotProfile::taurus();
        p.workspace_scale = 0.0;
        assert!(p.validate().is_err());
        let mut p = RobotProfile::taurus();
        p.channels_per_arm = 11;
        assert!(p.validate().is_err());
        let mut p = RobotProfile::yumi();
        p.layout = Some(ArmLayout {
            position: [0, 1, 1],
            orientation: vec![3, 4, 5, 6],
            gripper: 7,
            joints: vec![],
        });
        assert!(p.validate().is_err());
    }

    #[test]
    fn well_formed_dataset_has_no_violations() {
        let ds = dataset(vec![segment(&[0.0, 0.1, 0.2], "taurus"), segment(&[1.0, 1.5], "yumi")]);
        assert!(validate_dataset(&ds).is_empty());
    }

    #[test]
    fn non_monotone_timestamps_reported_once() {
        let ds = dataset(vec![segment(&[2.0, 1.0], "taurus")]);
        let v = validate_dataset(&ds);
        assert_eq!(v, vec![Violation::NonMonotoneTimestamps { segment: 0, frame: 1 }]);
    }

    #[test]
    fn unknown_profile_reported_once() {
        let ds = dataset(vec![segment(&[0.0, 1.0], "foo")]);
        let v = validate_dataset(&ds);
        assert_eq!(
            v,
            vec![Violation::UnknownProfile {
                segment: 0,
                robot: "foo".into()
            }]
        );
    }

    #[test]
    fn single_field_mutations_yield_one_matching_violation() {
        let base = || dataset(vec![segment(&[0.0, 0.1, 0.2, 0.3], "taurus")]);

        let mut ds = base();
        ds.segments[0].frames[2].left.gripper = 1.5;
        assert!(matches!(validate_dataset(&ds)[..], [Violation::GripperOutOfRange { frame: 2, .. }]));

        let mut ds = base();
        ds.segments[0].frames[1].right.orientation[1] = 2.0;
        assert!(matches!(validate_dataset(&ds)[..], [Violation::OrientationOutOfRange { frame: 1, .. }]));

        let mut ds = base();
        ds.segments[0].frames[3].right.position[0] = f64::NAN;
        assert!(matches!(validate_dataset(&ds)[..], [Violation::NonFinite { frame: 3, .. }]));

        let mut ds = base();
        ds.segments[0].frames.truncate(1);
        assert!(matches!(validate_dataset(&ds)[..], [Violation::TooShort { frames: 1, .. }]));

        let mut ds = base();
        ds.segments[0].robot = "dvrk".into();
        ds.segments[0].frames[0].raw_joints = Some(vec![0.0; 5]);
        assert!(matches!(
            validate_dataset(&ds)[..],
            [Violation::JointCountMismatch { expected: 12, found: 5, .. }]
        ));
    }
}
