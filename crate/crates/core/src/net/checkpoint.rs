//! HFW1 parameter checkpoints: magic `HFW1`, `u32` version, `u32` layer count,
//! `(u64 rows, u64 cols)` per layer, then every layer's weights followed by its
//! biases as little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::MlpParams;
use crate::error::{bail, Error, Result};

const MAGIC: &[u8; 4] = b"HFW1";
const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(params: &MlpParams, out: &mut W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(params.layers() as u32).to_le_bytes())?;
    for l in 0..params.layers() {
        let (rows, cols) = params.layer_shape(l);
        out.write_all(&(rows as u64).to_le_bytes())?;
        out.write_all(&(cols as u64).to_le_bytes())?;
    }
    let mut payload = Vec::with_capacity(params.len() * 8);
    for v in params.as_slice() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&payload)?;
    Ok(())
}

fn take<R: Read, const N: usize>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated checkpoint".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(input: &mut R) -> Result<MlpParams> {
    if &take::<_, 4>(input)? != MAGIC {
        bail!(Format, "not an HFW1 checkpoint");
    }
    let version = u32::from_le_bytes(take(input)?);
    if version != VERSION {
        bail!(Format, "unsupported checkpoint version {version}");
    }
    let layers = u32::from_le_bytes(take(input)?) as usize;
    if layers == 0 || layers > 64 {
        bail!(Format, "implausible layer count {layers}");
    }
    let mut dims = Vec::with_capacity(layers + 1);
    for l in 0..layers {
        let rows = u64::from_le_bytes(take(input)?) as usize;
        let cols = u64::from_le_bytes(take(input)?) as usize;
        if l == 0 {
            dims.push(cols);
        } else if dims[l] != cols {
            bail!(Format, "layer {l} expects {cols} inputs but the previous layer emits {}", dims[l]);
        }
        dims.push(rows);
    }
    let mut params = MlpParams::zeros(&dims).map_err(|e| Error::Format(e.to_string()))?;
    for v in params.as_mut_slice() {
        *v = f64::from_le_bytes(take(input)?);
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        bail!(Format, "trailing bytes after checkpoint payload");
    }
    if !params.is_finite() {
        bail!(Format, "checkpoint holds non-finite parameters");
    }
    Ok(params)
}

pub fn save_checkpoint(params: &MlpParams, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_checkpoint(params, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpParams> {
    read_checkpoint(&mut BufReader::new(File::open(path)?))
}
