//! Dataset files (`CTEQDS1`) and waveform debug dumps (`CTEQWF1`).
//!
//! Both share one layout: a magic line, `key value` header lines with decimal
//! text values, a `data` line, then little-endian f64 arrays stored as
//! interleaved (re, im) pairs.

use std::fs;
use std::io::{BufRead, Cursor, Read};
use std::path::Path;

use num_complex::Complex64;

use super::dataset::Dataset;
use super::modulation::ModulationFormat;
use super::waveform::DualPolWaveform;
use crate::error::{Error, Result};

pub const DATASET_MAGIC: &str = "CTEQDS1";
pub const WAVEFORM_MAGIC: &str = "CTEQWF1";

fn put_complex(out: &mut Vec<u8>, values: &[Complex64]) {
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
}

fn take_complex(input: &mut impl Read, n: usize, kind: &'static str) -> Result<Vec<Complex64>> {
    let mut buf = vec![0u8; n * 16];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::format(kind, "truncated sample data"))?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

struct Header {
    fields: Vec<(String, String)>,
}

impl Header {
    fn read(input: &mut Cursor<&[u8]>, magic: &str, kind: &'static str) -> Result<Self> {
        let mut line = String::new();
        input
            .read_line(&mut line)
            .map_err(|e| Error::format(kind, e.to_string()))?;
        if line.trim_end() != magic {
            return Err(Error::format(kind, format!("bad magic {:?}", line.trim_end())));
        }
        let mut fields = Vec::new();
        loop {
            line.clear();
            let n = input
                .read_line(&mut line)
                .map_err(|e| Error::format(kind, e.to_string()))?;
            if n == 0 {
                return Err(Error::format(kind, "header not terminated by 'data'"));
            }
            let l = line.trim_end();
            if l == "data" {
                break;
            }
            let (k, v) = l
                .split_once(' ')
                .ok_or_else(|| Error::format(kind, format!("bad header line {l:?}")))?;
            fields.push((k.to_string(), v.to_string()));
        }
        Ok(Self { fields })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, kind: &'static str) -> Result<T> {
        let raw = self
            .fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::format(kind, format!("missing header field '{key}'")))?;
        raw.parse()
            .map_err(|_| Error::format(kind, format!("bad value {raw:?} for '{key}'")))
    }
}

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let mut out = format!(
        "{DATASET_MAGIC}\nformat {}\nsymbols {}\nlaunch_power_dbm {}\nseed {}\nnormalization_scale {}\ndata\n",
        ds.format.name(),
        ds.len(),
        ds.launch_power_dbm,
        ds.seed,
        ds.normalization_scale
    )
    .into_bytes();
    out.reserve(ds.len() * 64);
    for arr in [&ds.rx_x, &ds.rx_y, &ds.tx_x, &ds.tx_y] {
        put_complex(&mut out, arr);
    }
    out
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    const KIND: &str = "dataset";
    let mut cur = Cursor::new(bytes);
    let header = Header::read(&mut cur, DATASET_MAGIC, KIND)?;
    let format: String = header.get("format", KIND)?;
    let format: ModulationFormat = format.parse().map_err(|_| Error::format(KIND, "unknown format"))?;
    let n: usize = header.get("symbols", KIND)?;
    let rx_x = take_complex(&mut cur, n, KIND)?;
    let rx_y = take_complex(&mut cur, n, KIND)?;
    let tx_x = take_complex(&mut cur, n, KIND)?;
    let tx_y = take_complex(&mut cur, n, KIND)?;
    if (cur.position() as usize) != bytes.len() {
        return Err(Error::format(KIND, "trailing bytes after sample data"));
    }
    Ok(Dataset {
        rx_x,
        rx_y,
        tx_x,
        tx_y,
        format,
        launch_power_dbm: header.get("launch_power_dbm", KIND)?,
        seed: header.get("seed", KIND)?,
        normalization_scale: header.get("normalization_scale", KIND)?,
    })
}

pub fn write_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_dataset(ds)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes)
}

pub fn encode_waveform(w: &DualPolWaveform) -> Vec<u8> {
    let mut out = format!(
        "{WAVEFORM_MAGIC}\nsamples {}\nsample_rate_hz {}\ncenter_power_w {}\ndata\n",
        w.len(),
        w.sample_rate_hz,
        w.center_power_w
    )
    .into_bytes();
    put_complex(&mut out, &w.x_pol);
    put_complex(&mut out, &w.y_pol);
    out
}

pub fn decode_waveform(bytes: &[u8]) -> Result<DualPolWaveform> {
    const KIND: &str = "waveform";
    let mut cur = Cursor::new(bytes);
    let header = Header::read(&mut cur, WAVEFORM_MAGIC, KIND)?;
    let n: usize = header.get("samples", KIND)?;
    let x = take_complex(&mut cur, n, KIND)?;
    let y = take_complex(&mut cur, n, KIND)?;
    DualPolWaveform::new(
        x,
        y,
        header.get("sample_rate_hz", KIND)?,
        header.get("center_power_w", KIND)?,
    )
}

pub fn write_waveform(path: impl AsRef<Path>, w: &DualPolWaveform) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_waveform(w)).map_err(|e| Error::io(path, e))
}

pub fn read_waveform(path: impl AsRef<Path>) -> Result<DualPolWaveform> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_waveform(&bytes)
}
