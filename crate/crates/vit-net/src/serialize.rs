//! Bit-exact model file format.
//!
//! ```text
//! magic    "TGRV" (4 bytes)
//! body     version: u32 LE (currently 1)
//!          config:  image_size, patch_size, in_channels, embed_dim,
//!                   num_heads, depth (all u32 LE), mlp_ratio (f64 LE),
//!                   num_classes (u32 LE), use_class_token (u8)
//!          count:   number of parameter records (u32 LE)
//!          records: name_len u32 LE | name bytes (UTF-8) | rank u32 LE |
//!                   dims u64 LE x rank | payload f64 LE, row-major
//! trailer  CRC32 (IEEE) of the body bytes, u32 LE
//! ```
//!
//! Records appear in canonical parameter order (see `ViTParams::for_each`).
//! Loading verifies the magic, version, checksum, and that every parameter
//! matches the shape implied by the config, so a round trip is bit-exact.

use std::fs;
use std::path::Path;

use tensor_core::Tensor;

use crate::config::ViTConfig;
use crate::error::{NetError, Result};
use crate::model::{ViTModel, ViTParams};

pub const MODEL_MAGIC: &[u8; 4] = b"TGRV";
pub const MODEL_VERSION: u32 = 1;

/// Serialize a model to bytes.
pub fn model_to_bytes(model: &ViTModel) -> Vec<u8> {
    let mut body = Vec::new();
    push_u32(&mut body, MODEL_VERSION);
    let cfg = &model.config;
    push_u32(&mut body, cfg.image_size as u32);
    push_u32(&mut body, cfg.patch_size as u32);
    push_u32(&mut body, cfg.in_channels as u32);
    push_u32(&mut body, cfg.embed_dim as u32);
    push_u32(&mut body, cfg.num_heads as u32);
    push_u32(&mut body, cfg.depth as u32);
    body.extend_from_slice(&cfg.mlp_ratio.to_le_bytes());
    push_u32(&mut body, cfg.num_classes as u32);
    body.push(u8::from(cfg.use_class_token));

    let mut count = 0u32;
    model.params.for_each(|_, _| count += 1);
    push_u32(&mut body, count);
    model.params.for_each(|name, tensor| {
        push_u32(&mut body, name.len() as u32);
        body.extend_from_slice(name.as_bytes());
        push_u32(&mut body, tensor.rank() as u32);
        for &dim in tensor.shape() {
            body.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for &v in tensor.data() {
            body.extend_from_slice(&v.to_le_bytes());
        }
    });

    let mut out = Vec::with_capacity(4 + body.len() + 4);
    out.extend_from_slice(MODEL_MAGIC);
    let crc = crc32fast::hash(&body);
    out.extend_from_slice(&body);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn save_model(model: &ViTModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model))?;
    Ok(())
}

/// Parse a model from bytes, verifying magic, version, checksum, and shapes.
pub fn model_from_bytes(bytes: &[u8]) -> Result<ViTModel> {
    if bytes.len() < 8 {
        return Err(NetError::Format(format!(
            "file truncated at byte {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != MODEL_MAGIC {
        return Err(NetError::Format("bad magic, expected TGRV".into()));
    }
    let body = &bytes[4..bytes.len() - 4];
    let stored_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let actual_crc = crc32fast::hash(body);
    if stored_crc != actual_crc {
        return Err(NetError::Format(format!(
            "checksum mismatch: stored {stored_crc:08x}, computed {actual_crc:08x}"
        )));
    }

    let mut r = Reader::new(body, 4);
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(NetError::Format(format!(
            "unsupported version {version}, expected {MODEL_VERSION}"
        )));
    }
    let config = ViTConfig {
        image_size: r.u32()? as usize,
        patch_size: r.u32()? as usize,
        in_channels: r.u32()? as usize,
        embed_dim: r.u32()? as usize,
        num_heads: r.u32()? as usize,
        depth: r.u32()? as usize,
        mlp_ratio: r.f64()?,
        num_classes: r.u32()? as usize,
        use_class_token: r.u8()? != 0,
    };
    config.validate()?;

    let count = r.u32()? as usize;
    let mut params = ViTParams::zeros(&config);
    let mut expected = Vec::with_capacity(count);
    params.for_each(|name, t| expected.push((name, t.shape().to_vec())));
    if expected.len() != count {
        return Err(NetError::Format(format!(
            "parameter count {} does not match config (expected {})",
            count,
            expected.len()
        )));
    }
    let mut loaded: Vec<Tensor> = Vec::with_capacity(count);
    for (name, shape) in &expected {
        let name_len = r.u32()? as usize;
        let got_name = r.str(name_len)?;
        if got_name != *name {
            return Err(NetError::Format(format!(
                "parameter order mismatch: expected {name}, found {got_name}"
            )));
        }
        let rank = r.u32()? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u64()? as usize);
        }
        if dims != *shape {
            return Err(NetError::Format(format!(
                "parameter {name} has shape {dims:?}, expected {shape:?}"
            )));
        }
        let len: usize = dims.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(r.f64()?);
        }
        loaded.push(Tensor::new(dims, data)?);
    }
    if !r.at_end() {
        return Err(NetError::Format(format!(
            "trailing bytes after parameters at byte {}",
            r.offset()
        )));
    }
    for (slot, value) in params.tensors_mut().into_iter().zip(loaded) {
        *slot = value;
    }
    ViTModel::new(config, params)
}

pub fn load_model(path: &Path) -> Result<ViTModel> {
    let bytes = fs::read(path)?;
    model_from_bytes(&bytes).map_err(|e| match e {
        NetError::Format(msg) => NetError::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], base: usize) -> Self {
        Self { buf, pos: 0, base }
    }

    fn offset(&self) -> usize {
        self.base + self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(NetError::Format(format!(
                "file truncated at byte {}",
                self.offset()
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self, len: usize) -> Result<String> {
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| NetError::Format(format!("invalid UTF-8 name at byte {}", self.offset())))
    }

    fn at_end(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}
