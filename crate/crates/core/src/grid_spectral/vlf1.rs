//! Binary field format: magic `VLF1`, little-endian `u32 n`, `u32 components`,
//! `f64 length`, `f64 origin[3]`, `f64 time`, then component-major samples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::field::{GridField, GridSpec};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VLF1";

pub fn write_field<W: Write>(out: &mut W, field: &GridField) -> Result<()> {
    let spec = field.spec();
    out.write_all(MAGIC)?;
    out.write_all(&(spec.n as u32).to_le_bytes())?;
    out.write_all(&(field.components() as u32).to_le_bytes())?;
    out.write_all(&spec.length.to_le_bytes())?;
    for o in spec.origin {
        out.write_all(&o.to_le_bytes())?;
    }
    out.write_all(&field.time().to_le_bytes())?;
    for v in field.data() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: Read>(input: &mut R) -> Result<GridField> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("missing VLF1 magic".into()));
    }
    let n = read_u32(input)? as usize;
    let components = read_u32(input)? as usize;
    let length = read_f64(input)?;
    let origin = [read_f64(input)?, read_f64(input)?, read_f64(input)?];
    let time = read_f64(input)?;
    let spec = GridSpec::with_origin(n, length, origin)?;
    let count = components
        .checked_mul(spec.points())
        .ok_or_else(|| Error::Format("field size overflows".into()))?;
    let mut bytes = vec![0u8; count * 8];
    input.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    Ok(GridField::new(spec, components, data)?.with_time(time))
}

pub fn save(path: &Path, field: &GridField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<GridField> {
    read_field(&mut BufReader::new(File::open(path)?))
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let spec = GridSpec::with_origin(4, 2.0, [0.5, -1.0, 0.0]).unwrap();
        let f = GridField::vector_from_fn(spec, |x| [x[0], x[1] * x[2], 1.0 / 3.0]).with_time(0.125);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 4 + 8 + 8 * 5 + 8 * 3 * 64);
        assert_eq!(&buf[..4], b"VLF1");
        let g = read_field(&mut buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn rejects_bad_magic() {
        let bytes = b"VLF2\0\0\0\0";
        assert!(matches!(read_field(&mut bytes.as_slice()), Err(Error::Format(_))));
    }
}
