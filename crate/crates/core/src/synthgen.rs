//! Synthetic peg-transfer trials for configurable robot embodiments.
//!
//! A trial transfers `objects` pegs across a pegboard whose pose is drawn
//! from the trial seed. Each transfer runs the seven surgemes in task order.
//! Arm motion is piecewise minimum-jerk between waypoints expressed in the
//! board frame, time-warped per segment, scaled by the workspace scale and
//! finally perturbed by Gaussian sensor noise.
//!
//! Generated benchmarks go through the same raw encoding and segmentation as
//! recorded data, so a benchmark written to disk and ingested again yields
//! the same [`Dataset`] as [`generate_benchmark`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{self, AnnotationRecord, RawFrame, TrialManifestEntry};
use crate::model::{builtin_profiles, ArmState, Dataset, Domain, KinFrame, Outcome, RobotProfile, SurgemeClass};
use crate::preprocess::encode_raw_frame;
use crate::seed;

/// Pegboard pose in the robot base frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoardPose {
    pub x: f64,
    pub y: f64,
    /// Rotation about the vertical axis, radians.
    pub heading: f64,
}

impl Default for BoardPose {
    fn default() -> Self {
        BoardPose {
            x: 0.0,
            y: 0.3,
            heading: 0.0,
        }
    }
}

/// Which board side the pegs start on; the arm on that side grasps them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Drawn from the trial seed.
    #[default]
    Random,
    LeftToRight,
    RightToLeft,
}

/// How a robot embodiment moves and senses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbodimentParams {
    /// Multiplies every position.
    pub workspace_scale: f64,
    /// Position noise in robot units; orientation and gripper noise follow from it.
    pub sensor_noise_sd: f64,
    /// 0 keeps the wrist at a fixed convenient orientation, 1 rotates it fully.
    pub orientation_richness: f64,
    /// Relative spread of segment durations and of the per-segment time warp.
    pub speed_jitter: f64,
    /// Delay between a gripper command and the jaw starting to move, seconds.
    pub gripper_lag: f64,
    /// Nominal board pose; each trial perturbs it.
    pub board_pose: BoardPose,
    /// Per-trial board offset (robot units) and heading spread (radians) scale.
    pub board_jitter: f64,
    pub sample_rate_hz: f64,
    /// Pegs transferred per trial, at most six.
    pub objects: usize,
    /// Joint angles emitted per arm; zero for robots without joint channels.
    pub joints_per_arm: usize,
    /// Probability that a grasp, exchange or place segment is annotated as failed.
    pub fail_rate: f64,
    pub direction: Direction,
}

impl Default for EmbodimentParams {
    fn default() -> Self {
        EmbodimentParams {
            workspace_scale: 1.0,
            sensor_noise_sd: 0.0005,
            orientation_richness: 1.0,
            speed_jitter: 0.15,
            gripper_lag: 0.1,
            board_pose: BoardPose::default(),
            board_jitter: 1.0,
            sample_rate_hz: 10.0,
            objects: 6,
            joints_per_arm: 0,
            fail_rate: 0.0,
            direction: Direction::Random,
        }
    }
}

impl EmbodimentParams {
    /// Same motion without sensor noise.
    pub fn noise_free(&self) -> Self {
        EmbodimentParams {
            sensor_noise_sd: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |what: &'static str, value: f64, min: f64, max: f64| {
            if value.is_finite() && (min..=max).contains(&value) {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{what} = {value} outside [{min}, {max}]")))
            }
        };
        check("workspace_scale", self.workspace_scale, 1e-6, 1e6)?;
        if self.workspace_scale <= 0.0 {
            return Err(Error::InvalidParams("workspace_scale must be positive".into()));
        }
        check("sensor_noise_sd", self.sensor_noise_sd, 0.0, 1.0)?;
        check("orientation_richness", self.orientation_richness, 0.0, 1.0)?;
        check("speed_jitter", self.speed_jitter, 0.0, 0.9)?;
        check("gripper_lag", self.gripper_lag, 0.0, 2.0)?;
        check("board_jitter", self.board_jitter, 0.0, 10.0)?;
        check("sample_rate_hz", self.sample_rate_hz, 1.0, 1000.0)?;
        check("fail_rate", self.fail_rate, 0.0, 1.0)?;
        check("board_pose.x", self.board_pose.x, -1e3, 1e3)?;
        check("board_pose.y", self.board_pose.y, -1e3, 1e3)?;
        check("board_pose.heading", self.board_pose.heading, -PI, PI)?;
        if !(1..=6).contains(&self.objects) {
            return Err(Error::InvalidParams(format!("objects = {} outside [1, 6]", self.objects)));
        }
        if self.joints_per_arm > 64 {
            return Err(Error::InvalidParams("joints_per_arm above 64".into()));
        }
        Ok(())
    }
}

/// One arm's part of a surgeme: waypoints after the current pose and an
/// optional gripper command.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmMotion {
    /// Board-frame poses (position, roll/pitch/yaw offsets) visited in order.
    pub waypoints: Vec<Pose>,
    /// Target aperture and the fraction of the segment at which it is commanded.
    pub gripper: Option<(f64, f64)>,
}

/// Board-frame position and wrist orientation offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: [f64; 3],
    pub rpy: [f64; 3],
}

/// A surgeme's waypoint template instantiated for one transfer.
#[derive(Clone, Debug, PartialEq)]
pub struct SurgemePrimitive {
    pub class: SurgemeClass,
    /// Nominal duration, seconds.
    pub duration: f64,
    pub grasp_arm: ArmMotion,
    pub receive_arm: ArmMotion,
}

const HOVER: f64 = 0.045;
const GRASP: f64 = 0.012;
const LIFT: f64 = 0.075;
const OPEN: f64 = 1.0;
const CLOSED: f64 = 0.05;
const REST: f64 = 0.3;
const GRIPPER_TRAVEL: f64 = 0.3;

/// Peg slots on one side of the board, board frame.
fn slot(side: f64, k: usize) -> [f64; 2] {
    let col = if k % 2 == 0 { -0.015 } else { 0.015 };
    let row = [-0.03, 0.0, 0.03][k / 2 % 3];
    [side * 0.06 + col, row]
}

fn home(side: f64) -> [f64; 3] {
    [side * 0.09, -0.05, 0.09]
}

/// Geometry of one transfer: grasp arm on the `side` of the board (-1 left,
/// +1 right), source slot, target slot and the mid-air exchange point.
struct Transfer {
    side: f64,
    source: [f64; 2],
    target: [f64; 2],
    exchange: [f64; 3],
    /// Per-transfer wrist offsets drawn once so both visits of a pose agree.
    align_yaw: f64,
    place_yaw: f64,
}

fn pose(position: [f64; 3], rpy: [f64; 3]) -> Pose {
    Pose { position, rpy }
}

/// The seven waypoint templates for one transfer. Orientation offsets are in
/// radians before scaling by orientation richness.
fn primitives(t: &Transfer, durations: &[f64; 7]) -> Vec<SurgemePrimitive> {
    let s = t.side;
    let [sx, sy] = t.source;
    let [tx, ty] = t.target;
    let [ex, ey, ez] = t.exchange;
    let g_home = home(s);
    let r_home = home(-s);
    let g_meet = [ex + s * 0.012, ey, ez];
    let r_meet = [ex - s * 0.012, ey, ez];
    let neutral = [0.0; 3];
    let align = [0.0, 0.35, t.align_yaw];
    let lifted = [0.0, 0.1, 0.5 * t.align_yaw];
    let g_face = [s * 0.6, 0.0, -s * 0.3];
    let r_face = [-s * 0.6, 0.0, s * 0.3];
    let place = [0.0, 0.35, t.place_yaw];
    let hold = |p: [f64; 3], rpy: [f64; 3]| ArmMotion {
        waypoints: vec![pose(p, rpy)],
        gripper: None,
    };
    let (class, d) = (SurgemeClass::ALL, durations);
    vec![
        SurgemePrimitive {
            class: class[0],
            duration: d[0],
            grasp_arm: ArmMotion {
                waypoints: vec![
                    pose([(g_home[0] + sx) / 2.0, (g_home[1] + sy) / 2.0, 0.085], [0.0, 0.15, 0.0]),
                    pose([sx, sy, HOVER], [0.0, 0.2, 0.5 * t.align_yaw]),
                ],
                gripper: Some((OPEN, 0.3)),
            },
            receive_arm: ArmMotion {
                waypoints: vec![pose(r_home, neutral)],
                gripper: Some((REST, 0.5)),
            },
        },
        SurgemePrimitive {
            class: class[1],
            duration: d[1],
            grasp_arm: ArmMotion {
                waypoints: vec![pose([sx, sy, GRASP], align)],
                gripper: Some((CLOSED, 0.45)),
            },
            receive_arm: hold(r_home, neutral),
        },
        SurgemePrimitive {
            class: class[2],
            duration: d[2],
            grasp_arm: hold([sx, sy, LIFT], lifted),
            receive_arm: hold(r_home, neutral),
        },
        SurgemePrimitive {
            class: class[3],
            duration: d[3],
            grasp_arm: ArmMotion {
                waypoints: vec![
                    pose([(sx + g_meet[0]) / 2.0, (sy + g_meet[1]) / 2.0 + 0.01, 0.09], [s * 0.3, 0.05, 0.0]),
                    pose(g_meet, g_face),
                ],
                gripper: None,
            },
            receive_arm: ArmMotion {
                waypoints: vec![pose(r_meet, r_face)],
                gripper: Some((OPEN, 0.3)),
            },
        },
        SurgemePrimitive {
            class: class[4],
            duration: d[4],
            grasp_arm: ArmMotion {
                waypoints: vec![
                    pose(g_meet, [g_face[0] + s * 0.15, g_face[1], g_face[2]]),
                    pose([g_meet[0] + s * 0.015, g_meet[1], g_meet[2] + 0.004], g_face),
                ],
                gripper: Some((OPEN, 0.6)),
            },
            receive_arm: ArmMotion {
                waypoints: vec![
                    pose(r_meet, [r_face[0] - s * 0.15, r_face[1], r_face[2]]),
                    pose([r_meet[0] - s * 0.008, r_meet[1], r_meet[2]], r_face),
                ],
                gripper: Some((CLOSED, 0.15)),
            },
        },
        SurgemePrimitive {
            class: class[5],
            duration: d[5],
            grasp_arm: ArmMotion {
                waypoints: vec![pose(g_home, neutral)],
                gripper: Some((REST, 0.5)),
            },
            receive_arm: ArmMotion {
                waypoints: vec![
                    pose([(r_meet[0] + tx) / 2.0, (r_meet[1] + ty) / 2.0, 0.095], [0.0, 0.1, 0.0]),
                    pose([tx, ty, HOVER], [0.0, 0.2, 0.5 * t.place_yaw]),
                ],
                gripper: None,
            },
        },
        SurgemePrimitive {
            class: class[6],
            duration: d[6],
            grasp_arm: hold(g_home, neutral),
            receive_arm: ArmMotion {
                waypoints: vec![pose([tx, ty, GRASP + 0.006], place)],
                gripper: Some((OPEN, 0.6)),
            },
        },
    ]
}

/// Nominal surgeme durations in seconds, in class order.
pub const NOMINAL_DURATIONS: [f64; 7] = [2.2, 1.6, 1.2, 2.0, 1.4, 2.2, 1.6];

fn min_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Monotone reparameterization of [0, 1]; `a` in (-1, 1).
fn warp(tau: f64, a: f64) -> f64 {
    tau + a * (2.0 * PI * tau).sin() / (2.0 * PI)
}

/// Board-frame state of one arm while a trial is generated.
#[derive(Clone, Copy)]
struct ArmTrack {
    pose: Pose,
    gripper: f64,
}

/// A generated trial: robot-frame frames (positions in robot units) plus
/// annotations whose bounds are frame timestamps. Frames between transfers
/// are left unannotated.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthTrial {
    pub frames: Vec<KinFrame>,
    pub annotations: Vec<AnnotationRecord>,
    /// Inclusive frame index range of each annotation.
    pub spans: Vec<(usize, usize)>,
}

impl SynthTrial {
    /// Annotated segments, in order.
    pub fn segments(&self, robot: &str, domain: Domain, trial_id: &str) -> Vec<crate::model::SurgemeSegment> {
        self.annotations
            .iter()
            .zip(&self.spans)
            .map(|(a, &(b, e))| crate::model::SurgemeSegment {
                label: crate::model::class_from_name(&a.surgeme_name).expect("generated names resolve"),
                frames: self.frames[b..=e].to_vec(),
                outcome: a.outcome,
                domain,
                trial_id: trial_id.to_string(),
                robot: robot.to_string(),
            })
            .collect()
    }

    pub fn labels(&self) -> Vec<SurgemeClass> {
        self.annotations
            .iter()
            .map(|a| crate::model::class_from_name(&a.surgeme_name).expect("generated names resolve"))
            .collect()
    }

    pub fn raw_frames(&self, profile: &RobotProfile) -> Vec<RawFrame> {
        self.frames.iter().map(|f| encode_raw_frame(f, profile)).collect()
    }
}

struct Generator<'a> {
    params: &'a EmbodimentParams,
    rng: ChaCha8Rng,
    board: BoardPose,
    /// Convenient wrist orientation chosen by the operator for each arm.
    base_rpy: [[f64; 3]; 2],
    frames: Vec<KinFrame>,
    t0: f64,
}

impl Generator<'_> {
    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn uniform(&mut self, half_width: f64) -> f64 {
        self.rng.random_range(-1.0..1.0) * half_width
    }

    fn to_robot(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.board.heading.sin_cos();
        let scale = self.params.workspace_scale;
        [
            (self.board.x + c * p[0] - s * p[1]) * scale,
            (self.board.y + s * p[0] + c * p[1]) * scale,
            p[2] * scale,
        ]
    }

    fn wrist(&self, arm: usize, offset: [f64; 3]) -> [f64; 3] {
        let r = self.params.orientation_richness;
        let b = self.base_rpy[arm];
        [
            b[0] + r * offset[0],
            b[1] + r * offset[1],
            crate::preprocess::wrap_angle(b[2] + self.board.heading + r * offset[2]),
        ]
    }

    fn next_timestamp(&self) -> f64 {
        self.t0 + self.frames.len() as f64 / self.params.sample_rate_hz
    }

    /// Appends one noisy frame for board-frame arm states.
    fn emit(&mut self, arms: [(Pose, f64); 2]) {
        let sd = self.params.sensor_noise_sd;
        let mut states = [ArmState::default(); 2];
        for (i, (p, g)) in arms.into_iter().enumerate() {
            let pos = self.to_robot(p.position);
            let rpy = self.wrist(i, p.rpy);
            let mut position = [0.0; 3];
            for (d, v) in pos.iter().enumerate() {
                position[d] = v + sd * self.normal();
            }
            let mut orientation = [0.0; 3];
            for (d, v) in rpy.iter().enumerate() {
                orientation[d] = v + 4.0 * sd * self.normal();
            }
            orientation[2] = crate::preprocess::wrap_angle(orientation[2]);
            let gripper = (g + 2.0 * sd * self.normal()).clamp(0.0, 1.0);
            states[i] = ArmState {
                position,
                orientation,
                gripper,
            };
        }
        let raw_joints = (self.params.joints_per_arm > 0).then(|| {
            states
                .iter()
                .flat_map(|s| joint_angles(s, self.params.joints_per_arm))
                .collect()
        });
        let timestamp = self.next_timestamp();
        self.frames.push(KinFrame {
            timestamp,
            left: states[0],
            right: states[1],
            raw_joints,
        });
    }

    /// Generates one surgeme; returns the inclusive frame span.
    fn run(&mut self, prim: &SurgemePrimitive, grasp_arm: usize, arms: &mut [ArmTrack; 2]) -> (usize, usize) {
        let jitter = self.params.speed_jitter;
        let duration = prim.duration * (1.0 + self.uniform(jitter));
        let n = ((duration * self.params.sample_rate_hz).round() as usize).max(4);
        let warps = [self.uniform(jitter), self.uniform(jitter)];
        let lag = self.params.gripper_lag;
        let motions = [&prim.grasp_arm, &prim.receive_arm];
        let starts = *arms;
        // Gripper schedule per arm: (from, to, start time, travel time), seconds from segment start.
        let mut schedule = [None; 2];
        for (k, motion) in motions.iter().enumerate() {
            let arm = if k == 0 { grasp_arm } else { 1 - grasp_arm };
            if let Some((target, frac)) = motion.gripper {
                let travel = GRIPPER_TRAVEL.min(0.4 * duration);
                let begin = (frac * duration + lag).min(duration - travel - 0.5 / self.params.sample_rate_hz);
                schedule[arm] = Some((starts[arm].gripper, target, begin.max(0.0), travel));
            }
        }
        let first = self.frames.len();
        for j in 0..n {
            let tau = (j + 1) as f64 / n as f64;
            let t = tau * duration;
            let mut out = [(Pose { position: [0.0; 3], rpy: [0.0; 3] }, 0.0); 2];
            for (k, motion) in motions.iter().enumerate() {
                let arm = if k == 0 { grasp_arm } else { 1 - grasp_arm };
                let w = warp(tau, warps[arm] * 0.9);
                let legs = motion.waypoints.len();
                let pos_in = w * legs as f64;
                let leg = (pos_in.floor() as usize).min(legs - 1);
                let frac = min_jerk(pos_in - leg as f64);
                let from = if leg == 0 { starts[arm].pose } else { motion.waypoints[leg - 1] };
                let to = motion.waypoints[leg];
                let mut p = Pose {
                    position: [0.0; 3],
                    rpy: [0.0; 3],
                };
                for d in 0..3 {
                    p.position[d] = from.position[d] + (to.position[d] - from.position[d]) * frac;
                    p.rpy[d] = from.rpy[d] + (to.rpy[d] - from.rpy[d]) * frac;
                }
                let g = match schedule[arm] {
                    Some((a, b, begin, travel)) => a + (b - a) * min_jerk((t - begin) / travel),
                    None => starts[arm].gripper,
                };
                out[arm] = (p, g);
            }
            self.emit(out);
        }
        for (k, motion) in motions.iter().enumerate() {
            let arm = if k == 0 { grasp_arm } else { 1 - grasp_arm };
            arms[arm].pose = *motion.waypoints.last().unwrap();
            if let Some((target, _)) = motion.gripper {
                arms[arm].gripper = target;
            }
        }
        (first, self.frames.len() - 1)
    }

    fn idle(&mut self, arms: &[ArmTrack; 2], seconds: f64) {
        let n = (seconds * self.params.sample_rate_hz).round() as usize;
        for _ in 0..n {
            self.emit([(arms[0].pose, arms[0].gripper), (arms[1].pose, arms[1].gripper)]);
        }
    }
}

/// Smooth stand-in joint angles derived from an arm's pose.
fn joint_angles(s: &ArmState, count: usize) -> Vec<f64> {
    let [x, y, z] = s.position;
    let base = [
        y.atan2(x),
        z.atan2(x.hypot(y)),
        (x * x + y * y + z * z).sqrt(),
        s.orientation[0],
        s.orientation[1],
        s.orientation[2],
    ];
    (0..count).map(|j| base[j % base.len()] * (1.0 + (j / base.len()) as f64 * 0.5)).collect()
}

/// Generates one trial. The seed fixes the board pose, the transfer
/// direction, the peg order, all timing and all noise.
pub fn generate_trial(params: &EmbodimentParams, seed: u64) -> Result<SynthTrial> {
    params.validate()?;
    let mut rng = seed::rng(seed);
    let j = params.board_jitter;
    let board = BoardPose {
        x: params.board_pose.x + rng.random_range(-1.0..1.0) * 0.02 * j,
        y: params.board_pose.y + rng.random_range(-1.0..1.0) * 0.02 * j,
        heading: params.board_pose.heading + rng.random_range(-1.0..1.0) * 0.35 * j,
    };
    let base_rpy = [
        [rng.random_range(-0.1..0.1), 0.3 + rng.random_range(-0.1..0.1), 0.4],
        [rng.random_range(-0.1..0.1), 0.3 + rng.random_range(-0.1..0.1), -0.4],
    ];
    let coin = rng.random_bool(0.5);
    let side: f64 = match params.direction {
        Direction::LeftToRight => -1.0,
        Direction::RightToLeft => 1.0,
        Direction::Random if coin => -1.0,
        Direction::Random => 1.0,
    };
    let mut sources: Vec<usize> = (0..6).collect();
    let mut targets: Vec<usize> = (0..6).collect();
    sources.shuffle(&mut rng);
    targets.shuffle(&mut rng);
    let t0 = 1.6e9 + (seed % 100_000_000) as f64;
    let mut gen = Generator {
        params,
        rng,
        board,
        base_rpy,
        frames: Vec::new(),
        t0,
    };
    let grasp_arm = if side < 0.0 { 0 } else { 1 };
    let mut arms = [
        ArmTrack {
            pose: pose(home(-1.0), [0.0; 3]),
            gripper: REST,
        },
        ArmTrack {
            pose: pose(home(1.0), [0.0; 3]),
            gripper: REST,
        },
    ];
    let mut annotations = Vec::new();
    let mut spans = Vec::new();
    gen.idle(&arms, 0.5);
    for k in 0..params.objects {
        let transfer = Transfer {
            side,
            source: slot(side, sources[k]),
            target: slot(-side, targets[k]),
            exchange: [gen.uniform(0.01), gen.uniform(0.01), 0.08 + gen.uniform(0.01)],
            align_yaw: gen.uniform(0.5),
            place_yaw: gen.uniform(0.5),
        };
        for prim in primitives(&transfer, &NOMINAL_DURATIONS) {
            let (b, e) = gen.run(&prim, grasp_arm, &mut arms);
            let risky = matches!(
                prim.class,
                SurgemeClass::AlignAndGrasp | SurgemeClass::Exchange | SurgemeClass::AlignAndPlace
            );
            let failed = risky && params.fail_rate > 0.0 && gen.rng.random_bool(params.fail_rate);
            annotations.push(AnnotationRecord {
                surgeme_name: prim.class.name().to_string(),
                start_ts: gen.frames[b].timestamp,
                end_ts: gen.frames[e].timestamp,
                outcome: if failed { Outcome::Fail } else { Outcome::Pass },
            });
            spans.push((b, e));
        }
        gen.idle(&arms, 0.5);
    }
    Ok(SynthTrial {
        frames: gen.frames,
        annotations,
        spans,
    })
}

/// One embodiment of a benchmark: which robot profile encodes its data, its
/// domain tag and how it moves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkProfile {
    pub robot: String,
    pub domain: Domain,
    #[serde(default)]
    pub params: EmbodimentParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub name: String,
    pub profiles: Vec<BenchmarkProfile>,
    pub trials_per_profile: usize,
    pub seed: u64,
    /// Alternate the transfer direction across each profile's trials instead
    /// of drawing it per trial.
    #[serde(default)]
    pub balance_directions: bool,
}

pub const DEFAULT_BENCHMARK: &str = "desk-synth-v1";

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self::desk_synth_v1()
    }
}

impl BenchmarkSpec {
    /// Four embodiments mirroring the simulated Taurus, Taurus, YuMi and dVRK.
    /// The sim/real gap comes from noise, timing and wrist-usage settings
    /// chosen for this benchmark; they are not measurements of any robot.
    pub fn desk_synth_v1() -> Self {
        let sim = EmbodimentParams {
            sensor_noise_sd: 0.0003,
            orientation_richness: 1.0,
            speed_jitter: 0.1,
            gripper_lag: 0.05,
            ..Default::default()
        };
        let taurus = EmbodimentParams {
            sensor_noise_sd: 0.0008,
            orientation_richness: 0.85,
            speed_jitter: 0.2,
            gripper_lag: 0.12,
            sample_rate_hz: 12.0,
            fail_rate: 0.02,
            ..Default::default()
        };
        let yumi = EmbodimentParams {
            workspace_scale: 2.0,
            sensor_noise_sd: 0.001,
            orientation_richness: 0.1,
            speed_jitter: 0.2,
            gripper_lag: 0.2,
            board_pose: BoardPose {
                x: 0.0,
                y: 0.25,
                heading: 0.0,
            },
            sample_rate_hz: 8.0,
            fail_rate: 0.04,
            ..Default::default()
        };
        let dvrk = EmbodimentParams {
            sensor_noise_sd: 0.001,
            orientation_richness: 0.75,
            speed_jitter: 0.2,
            gripper_lag: 0.1,
            sample_rate_hz: 15.0,
            joints_per_arm: 6,
            fail_rate: 0.03,
            ..Default::default()
        };
        let entry = |robot: &str, domain, params| BenchmarkProfile {
            robot: robot.into(),
            domain,
            params,
        };
        BenchmarkSpec {
            name: DEFAULT_BENCHMARK.into(),
            profiles: vec![
                entry("taurus-sim", Domain::Sim, sim),
                entry("taurus", Domain::Real, taurus),
                entry("yumi", Domain::Real, yumi),
                entry("dvrk", Domain::Real, dvrk),
            ],
            trials_per_profile: 8,
            seed: 2021,
            balance_directions: true,
        }
    }

    pub fn validate(&self, profiles: &BTreeMap<String, RobotProfile>) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::InvalidParams("benchmark needs at least one profile".into()));
        }
        if self.trials_per_profile == 0 {
            return Err(Error::InvalidParams("trials_per_profile must be at least 1".into()));
        }
        for p in &self.profiles {
            let profile = profiles.get(&p.robot).ok_or_else(|| Error::UnknownProfile(p.robot.clone()))?;
            p.params.validate()?;
            if p.params.joints_per_arm != profile.joints_per_arm() {
                return Err(Error::InvalidParams(format!(
                    "profile {} has {} joints per arm, params emit {}",
                    p.robot,
                    profile.joints_per_arm(),
                    p.params.joints_per_arm
                )));
            }
        }
        Ok(())
    }
}

/// A generated trial encoded for its robot profile.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedTrial {
    pub entry: TrialManifestEntry,
    pub frames: Vec<RawFrame>,
    pub annotations: Vec<AnnotationRecord>,
}

/// Generates and encodes every trial of a benchmark, in profile-then-trial order.
pub fn generate_encoded_trials(
    spec: &BenchmarkSpec,
    profiles: &BTreeMap<String, RobotProfile>,
) -> Result<Vec<EncodedTrial>> {
    spec.validate(profiles)?;
    let jobs: Vec<(usize, usize)> = (0..spec.profiles.len())
        .flat_map(|p| (0..spec.trials_per_profile).map(move |t| (p, t)))
        .collect();
    jobs.par_iter()
        .map(|&(p, t)| {
            let bp = &spec.profiles[p];
            let profile = &profiles[&bp.robot];
            let index = (p * spec.trials_per_profile + t) as u64;
            let mut params = bp.params.clone();
            if spec.balance_directions {
                params.direction = if t % 2 == 0 {
                    Direction::LeftToRight
                } else {
                    Direction::RightToLeft
                };
            }
            let trial = generate_trial(&params, seed::derive(spec.seed, index))?;
            let trial_id = format!("{}-{:03}", bp.robot, t);
            Ok(EncodedTrial {
                entry: TrialManifestEntry {
                    trial_id: trial_id.clone(),
                    robot: bp.robot.clone(),
                    domain: bp.domain,
                    kinematics_path: PathBuf::from(format!("kinematics/{trial_id}.csv")),
                    annotations_path: PathBuf::from(format!("annotations/{trial_id}.csv")),
                },
                frames: trial.raw_frames(profile),
                annotations: trial.annotations,
            })
        })
        .collect()
}

/// Generates a benchmark with the built-in robot profiles.
pub fn generate_benchmark(spec: &BenchmarkSpec) -> Result<Dataset> {
    generate_benchmark_with(spec, &builtin_profiles())
}

pub fn generate_benchmark_with(spec: &BenchmarkSpec, profiles: &BTreeMap<String, RobotProfile>) -> Result<Dataset> {
    let trials = generate_encoded_trials(spec, profiles)?;
    let mut segments = Vec::new();
    for t in &trials {
        let profile = &profiles[&t.entry.robot];
        let seg = ingest::segment_trial(&t.frames, &t.annotations, profile, t.entry.domain, &t.entry.trial_id)?;
        segments.extend(seg.segments);
    }
    let used = spec
        .profiles
        .iter()
        .map(|p| (p.robot.clone(), profiles[&p.robot].clone()))
        .collect();
    Ok(Dataset::new(segments, used))
}

/// Writes a benchmark in the canonical ingest layout under `dir` and returns
/// the manifest path.
pub fn write_benchmark(spec: &BenchmarkSpec, profiles: &BTreeMap<String, RobotProfile>, dir: &Path) -> Result<PathBuf> {
    let trials = generate_encoded_trials(spec, profiles)?;
    for sub in ["kinematics", "annotations"] {
        std::fs::create_dir_all(dir.join(sub)).map_err(|e| Error::io(dir.join(sub), e))?;
    }
    trials.par_iter().try_for_each(|t| {
        let profile = &profiles[&t.entry.robot];
        ingest::write_kinematics(&dir.join(&t.entry.kinematics_path), &t.frames, profile)?;
        ingest::write_annotations(&dir.join(&t.entry.annotations_path), &t.annotations)
    })?;
    let manifest = dir.join("manifest.csv");
    let entries: Vec<_> = trials.into_iter().map(|t| t.entry).collect();
    ingest::write_manifest(&manifest, &entries)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EmbodimentParams {
        EmbodimentParams {
            objects: 2,
            ..Default::default()
        }
    }

    #[test]
    fn labels_follow_the_grammar() {
        for seed in 0..5 {
            let trial = generate_trial(&small(), seed).unwrap();
            let labels = trial.labels();
            assert_eq!(labels.len(), 14);
            for (i, l) in labels.iter().enumerate() {
                assert_eq!(*l, SurgemeClass::ALL[i % 7]);
            }
        }
    }

    #[test]
    fn same_seed_same_trial() {
        let a = generate_trial(&small(), 9).unwrap();
        let b = generate_trial(&small(), 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_trial(&small(), 10).unwrap());
    }

    #[test]
    fn doubling_the_scale_doubles_positions() {
        let one = small().noise_free();
        let two = EmbodimentParams {
            workspace_scale: 2.0,
            ..one.clone()
        };
        let a = generate_trial(&one, 4).unwrap();
        let b = generate_trial(&two, 4).unwrap();
        assert_eq!(a.frames.len(), b.frames.len());
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (pa, pb) in [(fa.left, fb.left), (fa.right, fb.right)] {
                assert_eq!(pa.position.map(|v| 2.0 * v), pb.position);
                assert_eq!(pa.orientation, pb.orientation);
                assert_eq!(pa.gripper, pb.gripper);
            }
        }
    }

    #[test]
    fn carrying_arm_keeps_the_peg() {
        let params = EmbodimentParams {
            gripper_lag: 0.3,
            speed_jitter: 0.5,
            ..Default::default()
        };
        for seed in 0..10 {
            let trial = generate_trial(&params, seed).unwrap();
            let segs = trial.segments("x", Domain::Sim, "t");
            let mut carrier = None;
            for seg in &segs {
                if seg.label == SurgemeClass::AlignAndGrasp {
                    let last = seg.frames.last().unwrap();
                    carrier = Some(if last.left.gripper < last.right.gripper { 0 } else { 1 });
                }
                if matches!(seg.label, SurgemeClass::LiftPeg | SurgemeClass::GetTogether) {
                    let arm = carrier.unwrap();
                    for f in &seg.frames {
                        let g = if arm == 0 { f.left.gripper } else { f.right.gripper };
                        assert!(g < 0.5, "seed {seed}: {:?} gripper {g}", seg.label);
                    }
                }
            }
        }
    }

    #[test]
    fn annotations_cover_their_spans() {
        let trial = generate_trial(&small(), 3).unwrap();
        for (a, &(b, e)) in trial.annotations.iter().zip(&trial.spans) {
            assert_eq!(a.start_ts, trial.frames[b].timestamp);
            assert_eq!(a.end_ts, trial.frames[e].timestamp);
            assert!(e > b);
        }
        assert!(trial.spans.windows(2).all(|w| w[0].1 < w[1].0));
    }

    #[test]
    fn invalid_params_rejected() {
        for p in [
            EmbodimentParams {
                workspace_scale: 0.0,
                ..Default::default()
            },
            EmbodimentParams {
                orientation_richness: 1.5,
                ..Default::default()
            },
            EmbodimentParams {
                objects: 0,
                ..Default::default()
            },
            EmbodimentParams {
                sample_rate_hz: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(matches!(generate_trial(&p, 0), Err(Error::InvalidParams(_))));
        }
        let spec = BenchmarkSpec {
            trials_per_profile: 0,
            ..Default::default()
        };
        assert!(matches!(generate_benchmark(&spec), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn benchmark_counts() {
        let spec = BenchmarkSpec {
            profiles: BenchmarkSpec::desk_synth_v1().profiles[..2].to_vec(),
            trials_per_profile: 10,
            ..Default::default()
        };
        let ds = generate_benchmark(&spec).unwrap();
        assert_eq!(ds.trial_ids().len(), 20);
        assert!(ds.segments.len() >= 20 * 7);
        assert!(crate::model::validate_dataset(&ds).is_empty());
    }
}
