//! Binary model file: magic `C2V1`; little-endian u32 variant code, d, |X|,
//! |P|, |Y|, k_max; the vocab file as a u32 byte length plus UTF-8 text; then
//! every matrix in declaration order, row-major, as little-endian f32.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AttentionVariant, ModelDims, ModelError, ModelParams, Real};
use crate::corpus::Vocabs;

pub const MAGIC: &[u8; 4] = b"C2V1";

pub fn write_model<T: Real, W: Write>(
    mut out: W,
    params: &ModelParams<T>,
    vocabs: &Vocabs,
) -> Result<(), ModelError> {
    let dims = &params.dims;
    if vocabs.values.len() != dims.values
        || vocabs.paths.len() != dims.paths
        || vocabs.tags.len() != dims.tags
    {
        return Err(ModelError::Mismatch(
            "vocabulary sizes differ from parameter shapes".into(),
        ));
    }
    out.write_all(MAGIC)?;
    out.write_all(&params.variant.code().to_le_bytes())?;
    for v in [dims.d, dims.values, dims.paths, dims.tags, dims.k_max] {
        let v = u32::try_from(v).map_err(|_| ModelError::Format("dimension exceeds u32".into()))?;
        out.write_all(&v.to_le_bytes())?;
    }
    let text = vocabs.to_text();
    let len = u32::try_from(text.len()).map_err(|_| ModelError::Format("vocab too large".into()))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(text.as_bytes())?;
    for m in params.matrices() {
        for v in m.as_slice() {
            let v = v.to_f32().expect("finite parameter");
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32, ModelError> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_model<R: Read>(mut input: R) -> Result<(ModelParams<f32>, Vocabs), ModelError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Format("bad magic".into()));
    }
    let code = read_u32(&mut input)?;
    let variant = AttentionVariant::from_code(code)
        .ok_or_else(|| ModelError::Format(format!("unknown variant code {code}")))?;
    let mut fields = [0usize; 5];
    for f in fields.iter_mut() {
        *f = read_u32(&mut input)? as usize;
    }
    let [d, values, paths, tags, k_max] = fields;
    let dims = ModelDims {
        d,
        values,
        paths,
        tags,
        k_max,
    };
    let len = read_u32(&mut input)? as usize;
    let mut text = vec![0u8; len];
    input.read_exact(&mut text)?;
    let text = String::from_utf8(text).map_err(|_| ModelError::Format("vocab is not UTF-8".into()))?;
    let vocabs = Vocabs::from_text(&text).map_err(|e| ModelError::Format(e.to_string()))?;
    if vocabs.values.len() != values || vocabs.paths.len() != paths || vocabs.tags.len() != tags {
        return Err(ModelError::Format(
            "embedded vocabulary does not match header sizes".into(),
        ));
    }
    let mut params = ModelParams::<f32>::zeros(dims, variant)?;
    for m in params.matrices_mut() {
        for v in m.as_mut_slice() {
            let mut buf = [0u8; 4];
            input.read_exact(&mut buf)?;
            *v = f32::from_le_bytes(buf);
        }
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(ModelError::Format("trailing bytes after matrices".into()));
    }
    Ok((params, vocabs))
}

pub fn save_model<T: Real>(path: &Path, params: &ModelParams<T>, vocabs: &Vocabs) -> Result<(), ModelError> {
    write_model(BufWriter::new(File::create(path)?), params, vocabs)
}

pub fn load_model(path: &Path) -> Result<(ModelParams<f32>, Vocabs), ModelError> {
    read_model(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RawExample, VocabCutoffs};
    use crate::paths::PathContext;

    fn sample() -> (ModelParams<f32>, Vocabs) {
        let raw = RawExample {
            label: "get".into(),
            contexts: vec![PathContext {
                source: "x".into(),
                path: "A^B_C".parse().unwrap(),
                target: "y".into(),
            }],
        };
        let vocabs = Vocabs::build([&raw], &VocabCutoffs::default()).unwrap();
        let dims = ModelDims::from_vocabs(&vocabs, 3, 5);
        (ModelParams::init(dims, AttentionVariant::ElementWise, 9).unwrap(), vocabs)
    }

    #[test]
    fn header_layout() {
        let (params, vocabs) = sample();
        let mut buf = Vec::new();
        write_model(&mut buf, &params, &vocabs).unwrap();
        assert_eq!(&buf[..4], b"C2V1");
        let words: Vec<u32> = buf[4..28]
            .chunks(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(words, [4, 3, 4, 3, 3, 5]);
        let text_len = u32::from_le_bytes(buf[28..32].try_into().unwrap()) as usize;
        let floats: usize = params.matrices().iter().map(|m| m.as_slice().len()).sum();
        assert_eq!(buf.len(), 32 + text_len + 4 * floats);
    }

    #[test]
    fn round_trip_is_exact() {
        let (params, vocabs) = sample();
        let mut buf = Vec::new();
        write_model(&mut buf, &params, &vocabs).unwrap();
        let (back, back_vocabs) = read_model(buf.as_slice()).unwrap();
        assert_eq!(back, params);
        assert_eq!(back_vocabs, vocabs);
    }

    #[test]
    fn rejects_corruption() {
        let (params, vocabs) = sample();
        let mut buf = Vec::new();
        write_model(&mut buf, &params, &vocabs).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_model(bad.as_slice()), Err(ModelError::Format(_))));
        assert!(read_model(&buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_model(long.as_slice()).is_err());
    }
}
