//! Binary model files.
//!
//! Layout: magic `SGKM`, format version (u32), model kind (u8), a
//! hyperparameter block (u32 length + JSON), a weight block (u64 length +
//! little-endian binary64/u32 data) and a trailing FNV-1a checksum (u64) over
//! everything before it. All integers are little-endian.

use std::path::{Path, PathBuf};

use super::forest::{Node, Tree};
use super::mlp::Network;
use super::scaler::Scaler;
use super::svm::Machine;
use super::{ClassifierModel, ForestParams, MlpModel, MlpParams, RandomForest, SvmModel, SvmParams};
use crate::error::{Error, Result};
use crate::model::NUM_CLASSES;

pub const MAGIC: &[u8; 4] = b"SGKM";
pub const FORMAT_VERSION: u32 = 1;

const KIND_RF: u8 = 1;
const KIND_SVM: u8 = 2;
const KIND_MLP: u8 = 3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ *b as u64).wrapping_mul(0x100_0000_01b3))
}

#[derive(Default)]
struct Out(Vec<u8>);

impl Out {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&u32::try_from(v).expect("count fits in u32").to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        vs.iter().for_each(|v| self.f64(*v));
    }
    fn scaler(&mut self, s: &Option<Scaler>) {
        match s {
            None => self.u8(0),
            Some(s) => {
                self.u8(1);
                self.f64s(&s.mean);
                self.f64s(&s.scale);
            }
        }
    }
}

struct In<'a> {
    bytes: &'a [u8],
    pos: usize,
}

type Decode<T> = std::result::Result<T, String>;

impl<'a> In<'a> {
    fn take(&mut self, n: usize) -> Decode<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| "unexpected end of data".to_string())?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Decode<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Decode<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> Decode<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Decode<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Decode<Vec<f64>> {
        if n > self.bytes.len() / 8 {
            return Err("length exceeds data".into());
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn scaler(&mut self, dim: usize) -> Decode<Option<Scaler>> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(Scaler {
                mean: self.f64s(dim)?,
                scale: self.f64s(dim)?,
            })),
            t => Err(format!("bad scaler tag {t}")),
        }
    }
    fn done(&self) -> Decode<()> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err("trailing bytes in block".into())
        }
    }
}

fn encode_weights(model: &ClassifierModel) -> Vec<u8> {
    let mut o = Out::default();
    match model {
        ClassifierModel::RandomForest(m) => {
            o.u32(m.dim);
            o.u32(m.trees.len());
            for tree in &m.trees {
                o.u32(tree.nodes.len());
                for node in &tree.nodes {
                    match node {
                        Node::Leaf(p) => {
                            o.u8(0);
                            o.f64s(p);
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            o.u8(1);
                            o.u32(*feature);
                            o.f64(*threshold);
                            o.u32(*left);
                            o.u32(*right);
                        }
                    }
                }
            }
        }
        ClassifierModel::Svm(m) => {
            o.u32(m.dim);
            o.f64(m.gamma);
            o.scaler(&m.scaler);
            o.u32(m.machines.len());
            for mc in &m.machines {
                o.u32(mc.class);
                o.f64(mc.rho);
                o.u32(mc.coef.len());
                o.f64s(&mc.coef);
                o.f64s(&mc.support);
            }
        }
        ClassifierModel::Mlp(m) => {
            o.u32(m.dim);
            o.scaler(&m.scaler);
            let net = &m.network;
            o.u32(net.sizes().len());
            net.sizes().iter().for_each(|s| o.u32(*s));
            net.mask().iter().for_each(|b| o.u8(*b as u8));
            o.u32(net.params().len());
            o.f64s(net.params());
            o.u32(m.loss_history.len());
            o.f64s(&m.loss_history);
        }
    }
    o.0
}

fn decode_forest(params: ForestParams, r: &mut In) -> Decode<RandomForest> {
    let dim = r.u32()?;
    let n_trees = r.u32()?;
    let mut trees = Vec::new();
    for _ in 0..n_trees {
        let n = r.u32()?;
        let mut nodes = Vec::new();
        for _ in 0..n {
            nodes.push(match r.u8()? {
                0 => {
                    let p = r.f64s(NUM_CLASSES)?;
                    Node::Leaf(p.try_into().unwrap())
                }
                1 => {
                    let (feature, threshold, left, right) = (r.u32()?, r.f64()?, r.u32()?, r.u32()?);
                    if feature >= dim || left >= n || right >= n {
                        return Err("split references out of range".into());
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    }
                }
                t => return Err(format!("bad node tag {t}")),
            });
        }
        if nodes.is_empty() {
            return Err("empty tree".into());
        }
        trees.push(Tree { nodes });
    }
    Ok(RandomForest { params, dim, trees })
}

fn decode_svm(params: SvmParams, r: &mut In) -> Decode<SvmModel> {
    let dim = r.u32()?;
    let gamma = r.f64()?;
    let scaler = r.scaler(dim)?;
    let n = r.u32()?;
    let mut machines = Vec::new();
    for _ in 0..n {
        let class = r.u32()?;
        if class >= NUM_CLASSES {
            return Err(format!("class {class} out of range"));
        }
        let rho = r.f64()?;
        let nsv = r.u32()?;
        let coef = r.f64s(nsv)?;
        let support = r.f64s(nsv.checked_mul(dim).ok_or("overflow")?)?;
        machines.push(Machine {
            class,
            rho,
            coef,
            support,
        });
    }
    Ok(SvmModel {
        params,
        dim,
        gamma,
        scaler,
        machines,
    })
}

fn decode_mlp(params: MlpParams, r: &mut In) -> Decode<MlpModel> {
    let dim = r.u32()?;
    let scaler = r.scaler(dim)?;
    let layers = r.u32()?;
    if layers > 1024 {
        return Err("too many layers".into());
    }
    let sizes: Vec<usize> = (0..layers).map(|_| r.u32()).collect::<Decode<_>>()?;
    if sizes.first() != Some(&dim) || sizes.last() != Some(&NUM_CLASSES) {
        return Err("layer sizes do not match model".into());
    }
    let mask: Vec<bool> = (0..NUM_CLASSES).map(|_| r.u8().map(|b| b != 0)).collect::<Decode<_>>()?;
    let n = r.u32()?;
    let weights = r.f64s(n)?;
    let history_len = r.u32()?;
    let loss_history = r.f64s(history_len)?;
    let mut network = Network::new(&sizes, 0).map_err(|e| e.to_string())?;
    network.set_params(&weights).map_err(|e| e.to_string())?;
    network.set_mask(&mask).map_err(|e| e.to_string())?;
    Ok(MlpModel {
        params,
        dim,
        scaler,
        network,
        loss_history,
    })
}

/// Serializes a model to bytes.
pub fn write_model(model: &ClassifierModel) -> Vec<u8> {
    let (kind, hyper) = match model {
        ClassifierModel::RandomForest(m) => (KIND_RF, serde_json::to_vec(&m.params)),
        ClassifierModel::Svm(m) => (KIND_SVM, serde_json::to_vec(&m.params)),
        ClassifierModel::Mlp(m) => (KIND_MLP, serde_json::to_vec(&m.params)),
    };
    let hyper = hyper.expect("hyperparameters serialize");
    let weights = encode_weights(model);
    let mut out = Out::default();
    out.0.extend_from_slice(MAGIC);
    out.0.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.u8(kind);
    out.u32(hyper.len());
    out.0.extend_from_slice(&hyper);
    out.0.extend_from_slice(&(weights.len() as u64).to_le_bytes());
    out.0.extend_from_slice(&weights);
    let sum = fnv1a(&out.0);
    out.0.extend_from_slice(&sum.to_le_bytes());
    out.0
}

fn decode(bytes: &[u8]) -> Result<ClassifierModel, DecodeError> {
    let mut r = In { bytes, pos: 0 };
    if r.take(4).map_err(DecodeError::Invalid)? != MAGIC {
        return Err(DecodeError::Invalid("not a model file".into()));
    }
    let version = r.u32().map_err(DecodeError::Invalid)? as u32;
    if version != FORMAT_VERSION {
        return Err(DecodeError::Version(version));
    }
    if bytes.len() < 8 {
        return Err(DecodeError::Invalid("truncated".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    if fnv1a(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
        return Err(DecodeError::Invalid("checksum mismatch".into()));
    }
    let mut r = In { bytes: body, pos: 8 };
    let mut inner = || -> Decode<ClassifierModel> {
        let kind = r.u8()?;
        let hlen = r.u32()?;
        let hyper = r.take(hlen)?;
        let wlen = usize::try_from(r.u64()?).map_err(|_| "weight block too large")?;
        let mut w = In {
            bytes: r.take(wlen)?,
            pos: 0,
        };
        r.done()?;
        let model = match kind {
            KIND_RF => {
                let p = serde_json::from_slice(hyper).map_err(|e| e.to_string())?;
                ClassifierModel::RandomForest(decode_forest(p, &mut w)?)
            }
            KIND_SVM => {
                let p = serde_json::from_slice(hyper).map_err(|e| e.to_string())?;
                ClassifierModel::Svm(decode_svm(p, &mut w)?)
            }
            KIND_MLP => {
                let p = serde_json::from_slice(hyper).map_err(|e| e.to_string())?;
                ClassifierModel::Mlp(decode_mlp(p, &mut w)?)
            }
            k => return Err(format!("unknown model kind {k}")),
        };
        w.done()?;
        Ok(model)
    };
    inner().map_err(DecodeError::Invalid)
}

enum DecodeError {
    Version(u32),
    Invalid(String),
}

fn read_at(bytes: &[u8], path: PathBuf) -> Result<ClassifierModel> {
    decode(bytes).map_err(|e| match e {
        DecodeError::Version(found) => Error::VersionMismatch {
            found,
            supported: FORMAT_VERSION,
        },
        DecodeError::Invalid(msg) => Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, msg)),
    })
}

/// Parses a model from bytes produced by [`write_model`].
pub fn read_model(bytes: &[u8]) -> Result<ClassifierModel> {
    read_at(bytes, PathBuf::from("<memory>"))
}

pub fn save_model(path: &Path, model: &ClassifierModel) -> Result<()> {
    std::fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ClassifierModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_at(&bytes, path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Classifier, LabeledMatrix, LearnerSpec};
    use rand::Rng;

    fn data() -> LabeledMatrix {
        let mut rng = crate::seed::rng(1);
        let mut m = LabeledMatrix::new(3);
        for i in 0..60 {
            let c = i % 3;
            let x: Vec<f64> = (0..3).map(|d| (d == c) as u8 as f64 + rng.random_range(-0.3..0.3)).collect();
            m.push(&x, c * 2).unwrap();
        }
        m
    }

    fn specs() -> Vec<LearnerSpec> {
        vec![
            LearnerSpec::RandomForest(ForestParams {
                trees: 10,
                ..Default::default()
            }),
            LearnerSpec::Svm(SvmParams::default()),
            LearnerSpec::Mlp(MlpParams {
                epochs: 5,
                ..Default::default()
            }),
        ]
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let d = data();
        let mut rng = crate::seed::rng(2);
        for spec in specs() {
            let model = spec.train(&d, 4).unwrap();
            let back = read_model(&write_model(&model)).unwrap();
            assert_eq!(back, model);
            for _ in 0..100 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                assert_eq!(back.predict_proba(&x).unwrap(), model.predict_proba(&x).unwrap());
            }
        }
    }

    #[test]
    fn corruption_is_detected() {
        let d = data();
        for spec in specs() {
            let bytes = write_model(&spec.train(&d, 0).unwrap());
            for pos in [0, 9, 20, bytes.len() / 2, bytes.len() - 1] {
                let mut bad = bytes.clone();
                bad[pos] ^= 0x5a;
                assert!(matches!(read_model(&bad), Err(Error::Io { .. })), "byte {pos}");
            }
            assert!(read_model(&bytes[..bytes.len() - 3]).is_err());
        }
    }

    #[test]
    fn newer_version_rejected() {
        let d = data();
        let mut bytes = write_model(&specs()[0].train(&d, 0).unwrap());
        bytes[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
        assert!(matches!(
            read_model(&bytes),
            Err(Error::VersionMismatch { found: 2, supported: 1 })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sgkm");
        let model = specs()[0].train(&data(), 3).unwrap();
        save_model(&path, &model).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
        assert!(matches!(load_model(&dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
