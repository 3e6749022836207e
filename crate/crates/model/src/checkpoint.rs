//! `PVM1` checkpoints: magic, little-endian u32 header length, a JSON
//! header, then every tensor as little-endian f32 in header order.

use std::path::Path;

use pressure_core::{make_binning, PressureBinning};
use serde::{Deserialize, Serialize};

use crate::conv::Conv;
use crate::error::{ModelError, Result};
use crate::net::{ModelConfig, PressureNet};

pub const MAGIC: &[u8; 4] = b"PVM1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BinningHeader {
    p_min: f64,
    p_max: f64,
    n_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    config: ModelConfig,
    binning: BinningHeader,
    iteration: u64,
    tensors: Vec<TensorHeader>,
}

/// A trained network with the binning its labels refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: PressureNet<f32>,
    pub binning: PressureBinning,
    pub iteration: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut tensors = Vec::new();
        for (layer, name) in self.net.layers().iter().zip(self.net.layer_names()) {
            tensors.push(TensorHeader {
                name: format!("{name}.weight"),
                shape: vec![layer.out_c, layer.in_c, layer.k, layer.k],
            });
            tensors.push(TensorHeader {
                name: format!("{name}.bias"),
                shape: vec![layer.out_c],
            });
        }
        let header = Header {
            format: "PVM1".into(),
            version: VERSION,
            config: self.net.config().clone(),
            binning: BinningHeader {
                p_min: self.binning.p_min(),
                p_max: self.binning.p_max(),
                n_bins: self.binning.n_bins(),
            },
            iteration: self.iteration,
            tensors,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(8 + json.len() + 4 * self.net.param_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for layer in self.net.layers() {
            for v in layer.weight.iter().chain(&layer.bias) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Decodes a checkpoint; errors are plain messages without a path.
    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err("not a PVM1 checkpoint".into());
        }
        let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let json = bytes.get(8..8 + len).ok_or("truncated header")?;
        let header: Header = serde_json::from_slice(json).map_err(|e| format!("bad header: {e}"))?;
        if header.format != "PVM1" || header.version != VERSION {
            return Err(format!("unsupported format {} v{}", header.format, header.version));
        }
        let binning = make_binning(header.binning.p_min, header.binning.p_max, header.binning.n_bins)
            .map_err(|e| e.to_string())?;
        if binning.n_bins() != header.config.n_bins {
            return Err("binning disagrees with the model's bin count".into());
        }
        let mut net = PressureNet::<f32>::new(header.config.clone(), 0).map_err(|e| e.to_string())?;
        let expected: Vec<(String, Vec<usize>)> = net
            .layers()
            .iter()
            .zip(net.layer_names())
            .flat_map(|(l, n)| {
                [
                    (format!("{n}.weight"), vec![l.out_c, l.in_c, l.k, l.k]),
                    (format!("{n}.bias"), vec![l.out_c]),
                ]
            })
            .collect();
        let listed: Vec<(String, Vec<usize>)> =
            header.tensors.iter().map(|t| (t.name.clone(), t.shape.clone())).collect();
        if listed != expected {
            return Err("tensor list does not match the configured architecture".into());
        }
        let mut data = &bytes[8 + len..];
        if data.len() != 4 * net.param_count() {
            return Err(format!(
                "expected {} bytes of weights, found {}",
                4 * net.param_count(),
                data.len()
            ));
        }
        let fill = |dst: &mut [f32], data: &mut &[u8]| {
            for (d, chunk) in dst.iter_mut().zip(data.chunks_exact(4)) {
                *d = f32::from_le_bytes(chunk.try_into().unwrap());
            }
            *data = &data[4 * dst.len()..];
        };
        for layer in net.layers_mut() {
            let Conv { weight, bias, .. } = layer;
            fill(weight, &mut data);
            fill(bias, &mut data);
        }
        if net
            .layers()
            .iter()
            .any(|l| l.weight.iter().chain(&l.bias).any(|v| !v.is_finite()))
        {
            return Err("non-finite weight".into());
        }
        Ok(Self {
            net,
            binning,
            iteration: header.iteration,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| ModelError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| ModelError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|m| ModelError::format(path, m))
    }
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    net: &PressureNet<f32>,
    binning: &PressureBinning,
    iteration: u64,
) -> Result<()> {
    Checkpoint {
        net: net.clone(),
        binning: binning.clone(),
        iteration,
    }
    .save(path)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ckpt() -> Checkpoint {
        let cfg = ModelConfig {
            widths: [2, 3, 3, 4, 4],
            decoder_width: 3,
            ..ModelConfig::tiny().with_input(32, 32)
        };
        Checkpoint {
            net: PressureNet::new(cfg, 7).unwrap(),
            binning: PressureBinning::default(),
            iteration: 42,
        }
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let c = ckpt();
        let bytes = c.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn damaged_bytes_are_rejected() {
        let bytes = ckpt().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..6]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[10] = b'#';
        assert!(Checkpoint::from_bytes(&bad).is_err());
    }
}
