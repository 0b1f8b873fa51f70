//! Frame-wise and sequence-wise feature vectors.
//!
//! The sequence vector of a resampled segment is channel-major: for each of
//! the 14 common channels (left x, y, z, roll, pitch, yaw, gripper, then the
//! right arm likewise) it holds that channel's `FRAMES` consecutive samples.
//!
//! The spectral vector replaces every channel block with the magnitudes of
//! its real DFT at positive frequencies `1..=FRAMES/2`, dropping the DC bin,
//! then scales each block to unit L2 norm. Dropping DC makes the block blind
//! to constant offsets and the per-block normalization makes it blind to
//! positive rescaling.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Domain, RobotProfile, SurgemeClass, SurgemeSegment, COMMON_CHANNELS};
use crate::preprocess::ResampledSegment;

/// Blocks whose magnitude norm falls below this are left at zero.
const NORM_FLOOR: f64 = 1e-15;

/// Provenance carried alongside every feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub label: SurgemeClass,
    pub domain: Domain,
    pub trial_id: String,
    pub robot: String,
}

impl FeatureMeta {
    fn of_segment(seg: &SurgemeSegment) -> Self {
        FeatureMeta {
            label: seg.label,
            domain: seg.domain,
            trial_id: seg.trial_id.clone(),
            robot: seg.robot.clone(),
        }
    }

    fn of_resampled(rs: &ResampledSegment) -> Self {
        FeatureMeta {
            label: rs.label,
            domain: rs.domain,
            trial_id: rs.trial_id.clone(),
            robot: rs.robot.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceVector {
    pub values: Vec<f64>,
    /// Samples per channel block.
    pub frames: usize,
    pub meta: FeatureMeta,
}

impl SequenceVector {
    pub fn block(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.frames..(channel + 1) * self.frames]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralVector {
    pub values: Vec<f64>,
    /// Bins per channel block.
    pub bins: usize,
    pub meta: FeatureMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameVector {
    pub values: Vec<f64>,
    pub timestamp: f64,
    pub meta: FeatureMeta,
}

/// Flat index of sample `t` of `channel` in a sequence vector.
pub fn sequence_index(channel: usize, t: usize, frames: usize) -> usize {
    channel * frames + t
}

/// Inverse of [`sequence_index`].
pub fn sequence_position(index: usize, frames: usize) -> (usize, usize) {
    (index / frames, index % frames)
}

/// Concatenates the 14 channels of a resampled segment, channel-major.
pub fn build_sequence_vector(rs: &ResampledSegment) -> SequenceVector {
    let frames = rs.frames.len();
    let mut values = vec![0.0; frames * COMMON_CHANNELS];
    for (t, f) in rs.frames.iter().enumerate() {
        for (c, v) in f.channels().into_iter().enumerate() {
            values[sequence_index(c, t, frames)] = v;
        }
    }
    SequenceVector {
        values,
        frames,
        meta: FeatureMeta::of_resampled(rs),
    }
}

/// Reusable spectral transform for one block length.
pub struct SpectralTransform {
    frames: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SpectralTransform {
    pub fn new(frames: usize) -> Self {
        assert!(frames >= 2 && frames % 2 == 0, "block length must be even");
        SpectralTransform {
            frames,
            fft: FftPlanner::new().plan_fft_forward(frames),
        }
    }

    pub fn bins(&self) -> usize {
        self.frames / 2
    }

    /// Unnormalized magnitudes |X_k| for k = 1..=frames/2 of one block.
    pub fn magnitudes(&self, block: &[f64]) -> Vec<f64> {
        // Subtracting the first sample only moves the DC bin, and is exact
        // whenever the offset addition was, so offsets cancel bit for bit.
        let origin = block[0];
        let mut buf: Vec<Complex<f64>> = block.iter().map(|&x| Complex::new(x - origin, 0.0)).collect();
        self.fft.process(&mut buf);
        buf[1..=self.bins()].iter().map(|c| c.norm()).collect()
    }

    /// Normalized spectral block.
    pub fn block_features(&self, block: &[f64]) -> Vec<f64> {
        let mut mags = self.magnitudes(block);
        let norm = mags.iter().map(|m| m * m).sum::<f64>().sqrt();
        if norm >= NORM_FLOOR {
            for m in &mut mags {
                *m /= norm;
            }
        } else {
            mags.iter_mut().for_each(|m| *m = 0.0);
        }
        mags
    }

    pub fn apply(&self, sv: &SequenceVector) -> SpectralVector {
        assert_eq!(sv.frames, self.frames, "sequence block length differs from transform");
        let channels = sv.values.len() / sv.frames;
        let values = (0..channels).flat_map(|c| self.block_features(sv.block(c))).collect();
        SpectralVector {
            values,
            bins: self.bins(),
            meta: sv.meta.clone(),
        }
    }
}

/// Spectral features of a sequence vector (see the module docs).
pub fn spectral_features(sv: &SequenceVector) -> SpectralVector {
    SpectralTransform::new(sv.frames).apply(sv)
}

/// One vector per original frame: the 14 common channels, followed by the
/// joint angles when `include_joints` is set.
pub fn build_frame_vectors(seg: &SurgemeSegment, profile: &RobotProfile, include_joints: bool) -> Result<Vec<FrameVector>> {
    if include_joints && profile.joint_count == 0 {
        return Err(Error::JointsUnavailable(profile.name.clone()));
    }
    let meta = FeatureMeta::of_segment(seg);
    seg.frames
        .iter()
        .map(|f| {
            let mut values = f.channels().to_vec();
            if include_joints {
                let joints = f.raw_joints.as_ref().ok_or_else(|| Error::JointsUnavailable(profile.name.clone()))?;
                if joints.len() != profile.joint_count {
                    return Err(Error::DimMismatch {
                        expected: profile.joint_count,
                        got: joints.len(),
                    });
                }
                values.extend_from_slice(joints);
            }
            Ok(FrameVector {
                values,
                timestamp: f.timestamp,
                meta: meta.clone(),
            })
        })
        .collect()
}

/// Delimited-text export: one vector per row, class id in the first column.
pub fn features_to_csv<'a>(rows: impl IntoIterator<Item = (SurgemeClass, &'a [f64])>) -> String {
    let mut out = String::new();
    for (label, values) in rows {
        write!(out, "{}", label.id()).unwrap();
        for v in values {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_feature_csv<'a>(path: &Path, rows: impl IntoIterator<Item = (SurgemeClass, &'a [f64])>) -> Result<()> {
    fs::write(path, features_to_csv(rows)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::model::{KinFrame, Outcome};
    use crate::preprocess::FRAMES;

    fn resampled(fill: impl Fn(usize, usize) -> f64) -> ResampledSegment {
        ResampledSegment {
            label: SurgemeClass::GetTogether,
            outcome: Outcome::Pass,
            domain: Domain::Sim,
            trial_id: "t".into(),
            robot: "taurus".into(),
            frames: (0..FRAMES)
                .map(|t| {
                    let c: Vec<f64> = (0..COMMON_CHANNELS).map(|c| fill(c, t)).collect();
                    KinFrame::from_channels(t as f64, &c, None)
                })
                .collect(),
        }
    }

    fn naive_dft_magnitudes(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * t) as f64 / n as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                re.hypot(im)
            })
            .collect()
    }

    #[test]
    fn zero_segment_gives_zero_vectors() {
        let sv = build_sequence_vector(&resampled(|_, _| 0.0));
        assert_eq!(sv.values.len(), 560);
        assert!(sv.values.iter().all(|&v| v == 0.0));
        let spec = spectral_features(&sv);
        assert_eq!(spec.values.len(), 280);
        assert!(spec.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn left_gripper_block_layout() {
        let sv = build_sequence_vector(&resampled(|c, _| if c == 6 { 1.0 } else { 0.0 }));
        // Left gripper is channel 6 (0-based), so its block is [240, 280).
        for (i, v) in sv.values.iter().enumerate() {
            let want = if (6 * 40..7 * 40).contains(&i) { 1.0 } else { 0.0 };
            assert_eq!(*v, want, "index {i}");
        }
    }

    #[test]
    fn layout_is_a_bijection() {
        let mut seen = vec![false; FRAMES * COMMON_CHANNELS];
        for c in 0..COMMON_CHANNELS {
            for t in 0..FRAMES {
                let i = sequence_index(c, t, FRAMES);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(sequence_position(i, FRAMES), (c, t));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn constant_channel_has_no_spectrum() {
        let spec = spectral_features(&build_sequence_vector(&resampled(|c, _| c as f64 * 0.7 + 0.3)));
        assert!(spec.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn offset_channel_matches_original() {
        let wave = |_: usize, t: usize| (t as f64 * 0.37).sin() + 0.01 * t as f64;
        let a = spectral_features(&build_sequence_vector(&resampled(wave)));
        let b = spectral_features(&build_sequence_vector(&resampled(|c, t| wave(c, t) + 3.7)));
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_cosine_lands_in_one_bin() {
        let sv = build_sequence_vector(&resampled(|c, t| {
            if c == 0 {
                (2.0 * PI * 3.0 * t as f64 / 40.0).cos()
            } else {
                0.0
            }
        }));
        let oracle = naive_dft_magnitudes(sv.block(0));
        assert!((oracle[3] - 20.0).abs() < 1e-9);
        let spec = spectral_features(&sv);
        for (k, v) in spec.values[..20].iter().enumerate() {
            let want = if k + 1 == 3 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "bin {}: {v}", k + 1);
        }
    }

    #[test]
    fn normalized_blocks_have_unit_norm() {
        let spec = spectral_features(&build_sequence_vector(&resampled(|c, t| ((c * 7 + t * 3) % 11) as f64)));
        for block in spec.values.chunks(20) {
            let n = block.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(n == 0.0 || (n - 1.0).abs() < 1e-12);
            assert!(block.iter().all(|&v| v >= 0.0));
        }
    }

    fn small_segment(robot: &str, joints: Option<usize>) -> SurgemeSegment {
        SurgemeSegment {
            label: SurgemeClass::LiftPeg,
            frames: (0..11)
                .map(|i| {
                    let mut f = KinFrame::from_channels(i as f64, &[0.5; COMMON_CHANNELS], None);
                    f.raw_joints = joints.map(|n| vec![0.1; n]);
                    f
                })
                .collect(),
            outcome: Outcome::Fail,
            domain: Domain::Real,
            trial_id: "t".into(),
            robot: robot.into(),
        }
    }

    #[test]
    fn one_frame_vector_per_frame() {
        let v = build_frame_vectors(&small_segment("taurus", None), &RobotProfile::taurus(), false).unwrap();
        assert_eq!(v.len(), 11);
        assert!(v.iter().all(|f| f.values.len() == 14));
    }

    #[test]
    fn dvrk_joints_extend_frame_vectors() {
        let p = RobotProfile::dvrk();
        let v = build_frame_vectors(&small_segment("dvrk", Some(12)), &p, true).unwrap();
        assert!(v.iter().all(|f| f.values.len() == 14 + p.joint_count));
    }

    #[test]
    fn joints_unavailable_without_declared_joints() {
        let err = build_frame_vectors(&small_segment("yumi", None), &RobotProfile::yumi(), true);
        assert!(matches!(err, Err(Error::JointsUnavailable(_))));
    }

    #[test]
    fn csv_export_puts_label_first() {
        let a = [1.5, 2.0];
        let csv = features_to_csv([(SurgemeClass::Exchange, &a[..])]);
        assert_eq!(csv, "4,1.5,2\n");
    }
}
