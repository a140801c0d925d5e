//! Binary parameter files.
//!
//! ```text
//! offset  size  content
//! 0       8     magic "S2SPARAM"
//! 8       4     header length H, u32 little-endian
//! 12      H     UTF-8 JSON header
//! 12+H    8·N   N parameter values, f64 little-endian
//! ```
//!
//! The header holds the format version, the model configuration, the
//! vocabulary, the value count `N` and a table of named tensors (offset into
//! the value array, row and column counts) so other tools can slice the
//! array without reimplementing the layout.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use instrlearn_core::seq2seq::{Affine, Layout, ModelConfig, ModelParams, Vocab};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"S2SPARAM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub count: usize,
    pub tensors: Vec<TensorEntry>,
}

fn tensors(layout: &Layout) -> Vec<TensorEntry> {
    let mut out = Vec::new();
    let mut push = |name: String, a: Affine| {
        out.push(TensorEntry {
            name: format!("{name}.weight"),
            offset: a.w,
            rows: a.rows,
            cols: a.cols,
        });
        if let Some(b) = a.b {
            out.push(TensorEntry {
                name: format!("{name}.bias"),
                offset: b,
                rows: a.rows,
                cols: 1,
            });
        }
    };
    push("encoder.embedding".into(), layout.enc_embed);
    for (l, a) in layout.enc_lstm.iter().enumerate() {
        push(format!("encoder.lstm{l}"), *a);
    }
    push("decoder.embedding".into(), layout.dec_embed);
    for (l, a) in layout.dec_lstm.iter().enumerate() {
        push(format!("decoder.lstm{l}"), *a);
    }
    if let Some(wc) = layout.attention {
        push("attention.combine".into(), wc);
    }
    push("output".into(), layout.out);
    out
}

pub fn write_params<W: Write>(mut w: W, params: &ModelParams) -> std::io::Result<()> {
    let header = Header {
        format_version: FORMAT_VERSION,
        config: params.config.clone(),
        vocab: params.vocab.clone(),
        count: params.values.len(),
        tensors: tensors(&params.layout()),
    };
    let json = serde_json::to_vec(&header).expect("serializable header");
    let len = u32::try_from(json.len()).map_err(|_| std::io::Error::other("header too large"))?;
    let mut buf = Vec::with_capacity(12 + json.len() + 8 * params.values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&len.to_le_bytes());
    buf.extend_from_slice(&json);
    for v in &params.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_params<R: Read>(mut r: R) -> Result<ModelParams> {
    let bad = |m: &str| Error::Format(format!("parameter file: {m}"));
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("<parameter stream>", e))?;
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic bytes"));
    }
    let len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(12..12 + len).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {}", header.format_version)));
    }
    let data = &bytes[12 + len..];
    if data.len() != 8 * header.count {
        return Err(bad(&format!("expected {} values, found {} bytes", header.count, data.len())));
    }
    let values = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let params = ModelParams {
        config: header.config,
        vocab: header.vocab,
        values,
    };
    params.validate()?;
    Ok(params)
}

pub fn save(path: &Path, params: &ModelParams) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_params(std::io::BufWriter::new(f), params).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<ModelParams> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_params(f)
}
