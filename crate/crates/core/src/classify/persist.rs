//! Versioned model container.
//!
//! ```text
//! "DVMD"  magic
//! u16     format version (little-endian)
//! u16     classifier kind code
//! u32     predictor count
//! u64     payload length
//! ...     payload (JSON parameter tree)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ClassifierKind, TrainedModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DVMD";
const VERSION: u16 = 1;

impl TrainedModel {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let payload = serde_json::to_vec(self).map_err(|e| Error::ModelFormat(e.to_string()))?;
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&self.kind.code().to_le_bytes())?;
        out.write_all(&(self.n_features as u32).to_le_bytes())?;
        out.write_all(&(payload.len() as u64).to_le_bytes())?;
        out.write_all(&payload)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::ModelFormat("not a model file".into()));
        }
        let mut b2 = [0u8; 2];
        input.read_exact(&mut b2)?;
        let version = u16::from_le_bytes(b2);
        if version != VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        input.read_exact(&mut b2)?;
        let kind = ClassifierKind::from_code(u16::from_le_bytes(b2))
            .ok_or_else(|| Error::ModelFormat("unknown classifier kind".into()))?;
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b4)?;
        let p = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        let mut payload = Vec::new();
        input.take(len as u64).read_to_end(&mut payload)?;
        if payload.len() != len {
            return Err(Error::ModelFormat("truncated payload".into()));
        }
        let model: TrainedModel =
            serde_json::from_slice(&payload).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if model.kind != kind || model.n_features != p {
            return Err(Error::ModelFormat("header does not match payload".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => e.into(),
        })?;
        Self::read_from(BufReader::new(file))
    }
}
