use serde::{Deserialize, Serialize};

use super::orientation::wrap_angle;
use crate::error::{Error, Result};
use crate::model::{is_angle_channel, Domain, KinFrame, Outcome, SurgemeClass, SurgemeSegment, COMMON_CHANNELS};

/// Grid length used throughout the pipeline.
pub const FRAMES: usize = 40;

/// A segment linearly resampled onto a uniform time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResampledSegment {
    pub label: SurgemeClass,
    pub outcome: Outcome,
    pub domain: Domain,
    pub trial_id: String,
    pub robot: String,
    pub frames: Vec<KinFrame>,
}

impl ResampledSegment {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Piecewise-linear evaluation of `values` (sampled at increasing `times`)
/// at increasing `grid` points inside `[times[0], times[last]]`.
pub(crate) fn interpolate(times: &[f64], values: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut j = 0;
    for &t in grid {
        while j + 2 < times.len() && times[j + 1] <= t {
            j += 1;
        }
        let (t0, t1) = (times[j], times[j + 1]);
        let frac = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        out.push(values[j] + (values[j + 1] - values[j]) * frac);
    }
    out
}

/// Replaces each step with its shortest-arc equivalent so the series has no
/// artificial 2*pi jumps.
pub(crate) fn unwrap_angles(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if i == 0 {
            out.push(v);
        } else {
            let prev = out[i - 1];
            out.push(prev + wrap_angle(v - values[i - 1]));
        }
    }
    out
}

/// Resamples every channel (and joint angles, when all frames carry them)
/// onto `frames` uniformly spaced instants spanning the segment. Angle
/// channels are interpolated along the shortest arc. First and last grid
/// frames are exact copies of the source endpoints.
pub fn resample_segment(seg: &SurgemeSegment, frames: usize) -> Result<ResampledSegment> {
    let n = seg.frames.len();
    if n < 2 {
        return Err(Error::TooShort(n));
    }
    if frames < 2 {
        return Err(Error::InvalidParams(format!("cannot resample to {frames} frames")));
    }
    let t0 = seg.frames[0].timestamp;
    let times: Vec<f64> = seg.frames.iter().map(|f| f.timestamp - t0).collect();
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams(format!(
            "segment of trial `{}` has non-increasing timestamps",
            seg.trial_id
        )));
    }
    let span = times[n - 1];
    let grid: Vec<f64> = (0..frames)
        .map(|i| if i == frames - 1 { span } else { span * i as f64 / (frames - 1) as f64 })
        .collect();

    let rows: Vec<[f64; COMMON_CHANNELS]> = seg.frames.iter().map(KinFrame::channels).collect();
    let mut resampled = vec![[0.0; COMMON_CHANNELS]; frames];
    for c in 0..COMMON_CHANNELS {
        let series: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        let values = if is_angle_channel(c) {
            let unwrapped = unwrap_angles(&series);
            interpolate(&times, &unwrapped, &grid)
                .into_iter()
                .map(wrap_angle)
                .collect()
        } else {
            interpolate(&times, &series, &grid)
        };
        for (row, v) in resampled.iter_mut().zip(values) {
            row[c] = v;
        }
    }

    let joint_len = seg.frames[0].raw_joints.as_ref().map(Vec::len);
    let joints_present = joint_len.is_some()
        && seg
            .frames
            .iter()
            .all(|f| f.raw_joints.as_ref().map(Vec::len) == joint_len);
    let joint_grid: Option<Vec<Vec<f64>>> = joints_present.then(|| {
        let width = joint_len.unwrap_or(0);
        let mut out = vec![vec![0.0; width]; frames];
        for j in 0..width {
            let series: Vec<f64> = seg
                .frames
                .iter()
                .map(|f| f.raw_joints.as_ref().map_or(0.0, |v| v[j]))
                .collect();
            for (row, v) in out.iter_mut().zip(interpolate(&times, &series, &grid)) {
                row[j] = v;
            }
        }
        out
    });

    let mut out_frames: Vec<KinFrame> = resampled
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let joints = joint_grid.as_ref().map(|g| g[i].clone());
            KinFrame::from_channels(t0 + grid[i], row, joints)
        })
        .collect();
    out_frames[0] = seg.frames[0].clone();
    out_frames[frames - 1] = seg.frames[n - 1].clone();
    if !joints_present {
        out_frames[0].raw_joints = None;
        out_frames[frames - 1].raw_joints = None;
    }

    Ok(ResampledSegment {
        label: seg.label,
        outcome: seg.outcome,
        domain: seg.domain,
        trial_id: seg.trial_id.clone(),
        robot: seg.robot.clone(),
        frames: out_frames,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::model::ArmState;

    fn segment_from(times: &[f64], channel: usize, values: &[f64]) -> SurgemeSegment {
        let frames = times
            .iter()
            .zip(values)
            .map(|(&t, &v)| {
                let mut c = [0.0; COMMON_CHANNELS];
                c[channel] = v;
                KinFrame::from_channels(t, &c, None)
            })
            .collect();
        SurgemeSegment {
            label: SurgemeClass::Exchange,
            frames,
            outcome: Outcome::Pass,
            domain: Domain::Sim,
            trial_id: "t".into(),
            robot: "taurus".into(),
        }
    }

    fn channel(rs: &ResampledSegment, c: usize) -> Vec<f64> {
        rs.frames.iter().map(|f| f.channels()[c]).collect()
    }

    #[test]
    fn constant_channel_stays_exact() {
        let seg = segment_from(&[0.0, 0.3, 1.7, 2.0], 2, &[5.0; 4]);
        let rs = resample_segment(&seg, FRAMES).unwrap();
        assert_eq!(rs.len(), 40);
        assert!(channel(&rs, 2).iter().all(|&v| v == 5.0));
    }

    #[test]
    fn two_frame_ramp() {
        let seg = segment_from(&[0.0, 1.0], 0, &[0.0, 1.0]);
        let rs = resample_segment(&seg, FRAMES).unwrap();
        for (i, v) in channel(&rs, 0).iter().enumerate() {
            assert!((v - i as f64 / 39.0).abs() < 1e-15);
        }
    }

    #[test]
    fn three_frame_piecewise_linear() {
        let seg = segment_from(&[0.0, 1.0, 2.0], 6, &[0.0, 2.0, 1.0]);
        let rs = resample_segment(&seg, FRAMES).unwrap();
        for (i, v) in channel(&rs, 6).iter().enumerate() {
            let t = 2.0 * i as f64 / 39.0;
            let want = if t <= 1.0 { 2.0 * t } else { 2.0 - (t - 1.0) };
            assert!((v - want).abs() < 1e-12, "i={i}: {v} vs {want}");
        }
    }

    #[test]
    fn too_short_rejected() {
        let seg = segment_from(&[0.0], 0, &[1.0]);
        assert!(matches!(resample_segment(&seg, FRAMES), Err(Error::TooShort(1))));
    }

    #[test]
    fn angles_cross_the_seam_along_the_short_arc() {
        let seg = segment_from(&[0.0, 1.0], 5, &[PI - 0.1, -PI + 0.1]);
        let rs = resample_segment(&seg, FRAMES).unwrap();
        let yaw = channel(&rs, 5);
        for w in yaw.windows(2) {
            assert!(wrap_angle(w[1] - w[0]).abs() < 0.01);
            assert!(w[0].abs() >= PI - 0.1 - 1e-12);
        }
        assert_eq!(yaw[39], -PI + 0.1);
    }

    #[test]
    fn joints_are_resampled_when_present() {
        let mut seg = segment_from(&[0.0, 1.0], 0, &[0.0, 1.0]);
        seg.frames[0].raw_joints = Some(vec![0.0, 10.0]);
        seg.frames[1].raw_joints = Some(vec![1.0, 12.0]);
        let rs = resample_segment(&seg, 5).unwrap();
        assert_eq!(rs.frames[2].raw_joints.as_deref(), Some(&[0.5, 11.0][..]));
    }

    proptest! {
        #[test]
        fn endpoints_exact_and_monotone_preserved(
            steps in prop::collection::vec((0.01f64..1.0, 0.0f64..2.0), 1..30),
            start in -5.0f64..5.0,
        ) {
            let mut t = vec![0.0];
            let mut v = vec![start];
            for (dt, dv) in &steps {
                t.push(t.last().unwrap() + dt);
                v.push(v.last().unwrap() + dv);
            }
            let seg = segment_from(&t, 1, &v);
            let rs = resample_segment(&seg, FRAMES).unwrap();
            let out = channel(&rs, 1);
            prop_assert_eq!(out[0], v[0]);
            prop_assert_eq!(out[FRAMES - 1], *v.last().unwrap());
            prop_assert!(out.windows(2).all(|w| w[1] >= w[0]));
        }

        #[test]
        fn resampling_a_uniform_grid_is_idempotent(values in prop::collection::vec(-3.0f64..3.0, FRAMES)) {
            let times: Vec<f64> = (0..FRAMES).map(|i| i as f64 / (FRAMES - 1) as f64).collect();
            let seg = segment_from(&times, 0, &values);
            let out = channel(&resample_segment(&seg, FRAMES).unwrap(), 0);
            for (a, b) in out.iter().zip(&values) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn arm_state_round_trips_through_channels() {
        let a = ArmState {
            position: [1.0, 2.0, 3.0],
            orientation: [0.1, 0.2, 0.3],
            gripper: 0.5,
        };
        assert_eq!(ArmState::from_channels(&a.channels()), a);
    }
}
