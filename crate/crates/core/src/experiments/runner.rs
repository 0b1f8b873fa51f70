use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::folds::grouped_folds;
use super::mixing::mix_training_data;
use super::report::{CellResult, ExperimentReport, Series};
use super::{ExperimentConfig, FeatureKind, Mode, Scenario};
use crate::error::{Error, Result};
use crate::features::{build_frame_vectors, build_sequence_vector, SpectralTransform};
use crate::learners::{LabeledMatrix, Learner};
use crate::model::{Dataset, Domain, SurgemeClass, NUM_CLASSES};
use crate::preprocess::{resample_segment, FRAMES};
use crate::seed;

/// Feature vectors of each listed segment: one vector for sequence-wise
/// mode, one per frame for frame-wise mode.
pub fn segment_instances(
    ds: &Dataset,
    indices: &[usize],
    mode: Mode,
    kind: FeatureKind,
    include_joints: bool,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let spectral = SpectralTransform::new(FRAMES);
    indices
        .par_iter()
        .map(|&i| {
            let seg = &ds.segments[i];
            match mode {
                Mode::SequenceWise => {
                    let sv = build_sequence_vector(&resample_segment(seg, FRAMES)?);
                    Ok(vec![match kind {
                        FeatureKind::Raw => sv.values,
                        FeatureKind::Spectral => spectral.apply(&sv).values,
                    }])
                }
                Mode::FrameWise => {
                    let profile = ds.profile(&seg.robot)?;
                    Ok(build_frame_vectors(seg, profile, include_joints)?
                        .into_iter()
                        .map(|f| f.values)
                        .collect())
                }
            }
        })
        .collect()
}

/// Instances of a subset of segments, addressed by dataset index.
struct Features {
    index: Vec<Option<usize>>,
    rows: Vec<Vec<Vec<f64>>>,
}

impl Features {
    fn build(ds: &Dataset, subset: &[usize], cfg: &ExperimentConfig, joints: bool) -> Result<Self> {
        let rows = segment_instances(ds, subset, cfg.mode, cfg.feature_kind, joints)?;
        let mut index = vec![None; ds.segments.len()];
        for (k, &i) in subset.iter().enumerate() {
            index[i] = Some(k);
        }
        Ok(Features { index, rows })
    }

    fn of(&self, segment: usize) -> &[Vec<f64>] {
        &self.rows[self.index[segment].expect("segment featurized")]
    }
}

struct Task {
    robot: String,
    series: Series,
    ratio: Option<f64>,
    fold: Option<usize>,
    seed: u64,
    learner_seed: u64,
    train_sim: usize,
    shortfall: bool,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn run_task(ds: &Dataset, feats: &Features, task: &Task, learner: &dyn Learner) -> Result<CellResult> {
    let dim = feats.of(task.train[0])[0].len();
    let mut train = LabeledMatrix::new(dim);
    for &i in &task.train {
        let label = ds.segments[i].label.id();
        for row in feats.of(i) {
            train.push(row, label)?;
        }
    }
    let model = learner.fit(&train, task.learner_seed)?;
    let mut confusion = [[0usize; NUM_CLASSES]; NUM_CLASSES];
    for &i in &task.test {
        let truth = ds.segments[i].label.id();
        for row in feats.of(i) {
            confusion[truth][model.predict(row)?] += 1;
        }
    }
    let total: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
    Ok(CellResult {
        robot: task.robot.clone(),
        series: task.series,
        ratio: task.ratio,
        fold: task.fold,
        seed: task.seed,
        accuracy: if total > 0 { correct as f64 / total as f64 } else { 0.0 },
        correct,
        total,
        train_sim: task.train_sim,
        train_real: task.train.len() - task.train_sim,
        shortfall: task.shortfall,
        confusion,
    })
}

fn execute(ds: &Dataset, feats: &Features, tasks: &[Task], learner: &dyn Learner) -> Result<Vec<CellResult>> {
    let mut cells = tasks
        .par_iter()
        .map(|t| run_task(ds, feats, t, learner))
        .collect::<Result<Vec<_>>>()?;
    cells.sort_by(CellResult::key_cmp);
    Ok(cells)
}

/// Robots to evaluate among those present in `candidates`.
fn target_robots(ds: &Dataset, cfg: &ExperimentConfig, candidates: &[usize]) -> Result<Vec<String>> {
    let present: BTreeSet<&str> = candidates.iter().map(|&i| ds.segments[i].robot.as_str()).collect();
    if cfg.robots.is_empty() {
        return Ok(present.into_iter().map(String::from).collect());
    }
    cfg.robots
        .iter()
        .map(|r| {
            if present.contains(r.as_str()) {
                Ok(r.clone())
            } else {
                Err(Error::UnknownProfile(r.clone()))
            }
        })
        .collect()
}

fn labels_of(ds: &Dataset, idx: &[usize]) -> Vec<SurgemeClass> {
    idx.iter().map(|&i| ds.segments[i].label).collect()
}

pub fn run_no_transfer(ds: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_no_transfer_with(ds, cfg, &cfg.learner)
}

/// k-fold cross-validation within each robot, repeated for every seed.
pub fn run_no_transfer_with(ds: &Dataset, cfg: &ExperimentConfig, learner: &dyn Learner) -> Result<ExperimentReport> {
    cfg.validate()?;
    let all: Vec<usize> = (0..ds.segments.len()).collect();
    if all.is_empty() {
        return Err(Error::EmptyData);
    }
    let robots = target_robots(ds, cfg, &all)?;
    let mut tasks = Vec::new();
    let mut joints_for = Vec::new();
    for robot in &robots {
        let idx: Vec<usize> = all.iter().copied().filter(|&i| &ds.segments[i].robot == robot).collect();
        let joints = cfg.include_joints && cfg.mode == Mode::FrameWise && ds.profile(robot)?.joint_count > 0;
        joints_for.push((idx.clone(), joints));
        let labels = labels_of(ds, &idx);
        let groups: Vec<&str> = idx.iter().map(|&i| ds.segments[i].trial_id.as_str()).collect();
        for &s in &cfg.seeds {
            let folds = grouped_folds(&labels, &groups, cfg.folds, seed::derive_named(s, "folds"))?;
            for (f, fold) in folds.into_iter().enumerate() {
                tasks.push(Task {
                    robot: robot.clone(),
                    series: Series::Main,
                    ratio: None,
                    fold: Some(f),
                    seed: s,
                    learner_seed: seed::derive(seed::derive_named(s, "learner"), f as u64),
                    train_sim: 0,
                    shortfall: false,
                    train: fold.train.iter().map(|&k| idx[k]).collect(),
                    test: fold.test.iter().map(|&k| idx[k]).collect(),
                });
            }
        }
    }
    let feats = build_features(ds, cfg, &joints_for)?;
    let cells = execute(ds, &feats, &tasks, learner)?;
    Ok(ExperimentReport::new(cfg.clone(), learner.name(), cells))
}

fn build_features(ds: &Dataset, cfg: &ExperimentConfig, groups: &[(Vec<usize>, bool)]) -> Result<Features> {
    let mut feats = Features {
        index: vec![None; ds.segments.len()],
        rows: Vec::new(),
    };
    for (idx, joints) in groups {
        let todo: Vec<usize> = idx.iter().copied().filter(|&i| feats.index[i].is_none()).collect();
        let part = Features::build(ds, &todo, cfg, *joints)?;
        for (k, &i) in todo.iter().enumerate() {
            feats.index[i] = Some(feats.rows.len() + k);
        }
        feats.rows.extend(part.rows);
    }
    Ok(feats)
}

pub fn run_domain_transfer(ds: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_domain_transfer_with(ds, cfg, &cfg.learner)
}

/// Trains on every simulated segment plus a ratio-controlled share of one
/// real robot's held-in trials and tests on that robot's held-out trials.
/// A real-only model trained on the whole held-in pool is the baseline.
pub fn run_domain_transfer_with(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    learner: &dyn Learner,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (tasks, joints_for) = domain_transfer_tasks(ds, cfg)?;
    let feats = build_features(ds, cfg, &joints_for)?;
    let cells = execute(ds, &feats, &tasks, learner)?;
    Ok(ExperimentReport::new(cfg.clone(), learner.name(), cells))
}

type FeatureGroups = Vec<(Vec<usize>, bool)>;

fn domain_transfer_tasks(ds: &Dataset, cfg: &ExperimentConfig) -> Result<(Vec<Task>, FeatureGroups)> {
    let sim: Vec<usize> = (0..ds.segments.len())
        .filter(|&i| ds.segments[i].domain == Domain::Sim)
        .collect();
    let real: Vec<usize> = (0..ds.segments.len())
        .filter(|&i| ds.segments[i].domain == Domain::Real)
        .collect();
    if sim.is_empty() {
        return Err(Error::MissingDomain("sim"));
    }
    if real.is_empty() {
        return Err(Error::MissingDomain("real"));
    }
    let robots = target_robots(ds, cfg, &real)?;
    let sim_labels = labels_of(ds, &sim);
    let mut tasks = Vec::new();
    let mut joints_for = Vec::new();
    for robot in &robots {
        let idx: Vec<usize> = real.iter().copied().filter(|&i| &ds.segments[i].robot == robot).collect();
        let mut involved: BTreeSet<&str> = sim.iter().map(|&i| ds.segments[i].robot.as_str()).collect();
        involved.insert(robot);
        let joints = cfg.include_joints
            && cfg.mode == Mode::FrameWise
            && involved
                .iter()
                .map(|r| ds.profile(r).map(|p| p.joint_count > 0))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .all(|j| j);
        if cfg.include_joints && !joints && cfg.mode == Mode::FrameWise {
            log::info!("joint angles left out for {robot}: not every robot in the training mix records them");
        }
        joints_for.push((sim.iter().copied().chain(idx.iter().copied()).collect::<Vec<_>>(), joints));
        let trials: Vec<&str> = idx
            .iter()
            .map(|&i| ds.segments[i].trial_id.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if trials.len() < 2 {
            return Err(Error::TooFewGroups {
                groups: trials.len(),
                folds: 2,
            });
        }
        for &s in &cfg.seeds {
            let mut order = trials.clone();
            order.shuffle(&mut seed::rng(seed::derive_named(s, &format!("holdout/{robot}"))));
            let n_hold = ((cfg.holdout_fraction * trials.len() as f64).round() as usize).clamp(1, trials.len() - 1);
            let held_out: BTreeSet<&str> = order[..n_hold].iter().copied().collect();
            let (test, pool): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .copied()
                .partition(|&i| held_out.contains(ds.segments[i].trial_id.as_str()));
            let pool_labels = labels_of(ds, &pool);
            let learner_base = seed::derive_named(s, "learner");
            for (r, &ratio) in cfg.ratio_grid.iter().enumerate() {
                let mix = mix_training_data(&sim_labels, &pool_labels, ratio, seed::derive(seed::derive_named(s, "mix"), r as u64))?;
                let train: Vec<usize> = sim.iter().copied().chain(mix.real.iter().map(|&k| pool[k])).collect();
                tasks.push(Task {
                    robot: robot.clone(),
                    series: Series::Transfer,
                    ratio: Some(ratio),
                    fold: None,
                    seed: s,
                    learner_seed: seed::derive(learner_base, r as u64),
                    train_sim: sim.len(),
                    shortfall: mix.shortfall,
                    train,
                    test: test.clone(),
                });
            }
            tasks.push(Task {
                robot: robot.clone(),
                series: Series::Baseline,
                ratio: None,
                fold: None,
                seed: s,
                learner_seed: seed::derive_named(learner_base, "baseline"),
                train_sim: 0,
                shortfall: false,
                train: pool.clone(),
                test,
            });
        }
    }
    Ok((tasks, joints_for))
}

pub fn run_experiment(ds: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(ds, cfg, &cfg.learner)
}

pub fn run_experiment_with(ds: &Dataset, cfg: &ExperimentConfig, learner: &dyn Learner) -> Result<ExperimentReport> {
    match cfg.scenario {
        Scenario::NoTransfer => run_no_transfer_with(ds, cfg, learner),
        Scenario::DomainTransfer => run_domain_transfer_with(ds, cfg, learner),
    }
}

/// Training and test segments for a single model, plus the trained model's
/// test accuracy once fitted. No-transfer uses fold 0 of the first seed over
/// the selected robots; domain transfer uses the first seed's real holdout of
/// the single selected real robot and mixes real segments at `ratio`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub include_joints: bool,
}

pub fn train_partition(ds: &Dataset, cfg: &ExperimentConfig, ratio: f64) -> Result<Partition> {
    cfg.validate()?;
    let s = cfg.seeds[0];
    match cfg.scenario {
        Scenario::NoTransfer => {
            let all: Vec<usize> = (0..ds.segments.len()).collect();
            let robots = target_robots(ds, cfg, &all)?;
            let idx: Vec<usize> = all.into_iter().filter(|&i| robots.contains(&ds.segments[i].robot)).collect();
            if idx.is_empty() {
                return Err(Error::EmptyData);
            }
            let labels = labels_of(ds, &idx);
            let groups: Vec<&str> = idx.iter().map(|&i| ds.segments[i].trial_id.as_str()).collect();
            let folds = grouped_folds(&labels, &groups, cfg.folds, seed::derive_named(s, "folds"))?;
            let include_joints = cfg.include_joints
                && cfg.mode == Mode::FrameWise
                && robots
                    .iter()
                    .map(|r| ds.profile(r).map(|p| p.joint_count > 0))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .all(|j| j);
            Ok(Partition {
                train: folds[0].train.iter().map(|&k| idx[k]).collect(),
                test: folds[0].test.iter().map(|&k| idx[k]).collect(),
                include_joints,
            })
        }
        Scenario::DomainTransfer => {
            let single = ExperimentConfig {
                seeds: vec![s],
                ratio_grid: vec![ratio],
                ..cfg.clone()
            };
            let real: Vec<usize> = (0..ds.segments.len())
                .filter(|&i| ds.segments[i].domain == Domain::Real)
                .collect();
            let robots = target_robots(ds, &single, &real)?;
            if robots.len() != 1 {
                return Err(Error::Config(format!(
                    "training a transfer model needs exactly one real robot; select one of {robots:?} with `robots`"
                )));
            }
            let (tasks, joints_for) = domain_transfer_tasks(ds, &single)?;
            let first = tasks.into_iter().find(|t| t.series == Series::Transfer).ok_or(Error::EmptyData)?;
            Ok(Partition {
                train: first.train,
                test: first.test,
                include_joints: joints_for[0].1,
            })
        }
    }
}

/// Fits `learner` on a partition and returns the model with its test accuracy.
pub fn fit_partition(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    part: &Partition,
    learner_seed: u64,
) -> Result<(crate::learners::ClassifierModel, f64)> {
    let idx: Vec<usize> = part.train.iter().chain(&part.test).copied().collect();
    let feats = Features::build(ds, &idx, cfg, part.include_joints)?;
    let dim = feats.of(part.train[0])[0].len();
    let mut train = LabeledMatrix::new(dim);
    for &i in &part.train {
        for row in feats.of(i) {
            train.push(row, ds.segments[i].label.id())?;
        }
    }
    let model = cfg.learner.train(&train, learner_seed)?;
    let (mut correct, mut total) = (0usize, 0usize);
    for &i in &part.test {
        for row in feats.of(i) {
            total += 1;
            if crate::learners::Classifier::predict(&model, row)? == ds.segments[i].label.id() {
                correct += 1;
            }
        }
    }
    Ok((model, if total > 0 { correct as f64 / total as f64 } else { 0.0 }))
}
