//! Versioned little-endian binary format for a [`Network`]:
//! magic `SVNP`, format version, neuron mode, then every parameter tensor
//! as its rank, dimensions and `f32` values.

use std::io::{Read, Write};

use crate::error::{NeuralError, Result};
use crate::lif::{LifParams, ResetMode};
use crate::network::{Network, NeuronMode, ParamSet, PARAM_SHAPES};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"SVNP";
const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> NeuralError {
    NeuralError::Checkpoint(msg.into())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

impl<T: Scalar> Network<T> {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        match &self.mode {
            NeuronMode::Relu => w.write_all(&[0])?,
            NeuronMode::Lif(p) => {
                w.write_all(&[1])?;
                for x in [p.tau, p.v_rest, p.v_threshold, p.surrogate_width] {
                    w.write_all(&x.to_le_bytes())?;
                }
                let reset = match p.reset_mode {
                    ResetMode::SoftSubtract => 0u8,
                    ResetMode::HardToRest => 1,
                };
                w.write_all(&[reset])?;
                w.write_all(&(p.timesteps as u32).to_le_bytes())?;
            }
        }
        w.write_all(&(PARAM_SHAPES.len() as u32).to_le_bytes())?;
        for (i, shape) in PARAM_SHAPES.iter().enumerate() {
            w.write_all(&(shape.len() as u32).to_le_bytes())?;
            for &d in shape.iter() {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            for x in self.params.tensor(i) {
                w.write_all(&(x.f64() as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a network checkpoint"));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let mut tag = [0; 1];
        r.read_exact(&mut tag)?;
        let mode = match tag[0] {
            0 => NeuronMode::Relu,
            1 => {
                let (tau, v_rest, v_threshold, surrogate_width) =
                    (read_f64(r)?, read_f64(r)?, read_f64(r)?, read_f64(r)?);
                r.read_exact(&mut tag)?;
                let reset_mode = match tag[0] {
                    0 => ResetMode::SoftSubtract,
                    1 => ResetMode::HardToRest,
                    t => return Err(bad(format!("unknown reset mode {t}"))),
                };
                let timesteps = read_u32(r)? as usize;
                let p = LifParams { tau, v_rest, v_threshold, reset_mode, timesteps, surrogate_width };
                p.validate()?;
                NeuronMode::Lif(p)
            }
            t => return Err(bad(format!("unknown neuron mode {t}"))),
        };
        let count = read_u32(r)? as usize;
        if count != PARAM_SHAPES.len() {
            return Err(bad(format!("checkpoint has {count} tensors, network has {}", PARAM_SHAPES.len())));
        }
        let mut params = ParamSet::zeros();
        for (i, shape) in PARAM_SHAPES.iter().enumerate() {
            let rank = read_u32(r)? as usize;
            let mut dims = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                dims.push(read_u32(r)? as usize);
            }
            if dims != *shape {
                return Err(bad(format!("tensor {i} has shape {dims:?}, expected {shape:?}")));
            }
            for x in params.tensor_mut(i) {
                let mut b = [0; 4];
                r.read_exact(&mut b)?;
                *x = T::of(f32::from_le_bytes(b) as f64);
            }
        }
        Ok(Network { mode, params })
    }
}
