//! Files in the layout of the public action-segmentation releases.
//!
//! - features: NPY arrays (`<f4` or `<f8`, C order), one per video;
//! - ground truth and predictions: one class name per line per frame;
//! - class mapping: `index name` lines;
//! - boundaries: one frame index per line;
//! - reports: `key=value` lines.
//!
//! Every write goes through a temporary file in the target directory and a
//! rename, so a reader never sees a half-written file.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::EvalResult;
use crate::sequence::{BoundarySet, FeatureSequence, LabelSequence};

const NPY_MAGIC: &[u8; 6] = b"\x93NUMPY";
/// Feature widths that identify a `D x T` file.
const KNOWN_WIDTHS: [usize; 2] = [2048, 1024];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    DByT,
    TByD,
    /// `D x T` when the first axis is a known feature width and the second
    /// is not, `T x D` otherwise.
    Auto,
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d-by-t" | "dxt" | "dt" => Ok(Orientation::DByT),
            "t-by-d" | "txd" | "td" => Ok(Orientation::TByD),
            "auto" => Ok(Orientation::Auto),
            _ => Err(Error::InvalidValue(format!("unknown orientation `{s}`"))),
        }
    }
}

impl Orientation {
    fn resolve(self, rows: usize, cols: usize) -> Orientation {
        match self {
            Orientation::Auto if KNOWN_WIDTHS.contains(&rows) && !KNOWN_WIDTHS.contains(&cols) => {
                Orientation::DByT
            }
            Orientation::Auto => Orientation::TByD,
            fixed => fixed,
        }
    }
}

/// Shape and values of an NPY array, values in C order.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

pub fn parse_npy(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 {
        return Err(format_err(
            bytes.len(),
            "file too short for an NPY preamble",
        ));
    }
    if &bytes[..6] != NPY_MAGIC {
        return Err(format_err(0, "bad magic, not an NPY file"));
    }
    let (header_len, header_start) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(format_err(
                    bytes.len(),
                    "file too short for an NPY preamble",
                ));
            }
            (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12,
            )
        }
        v => {
            return Err(format_err(
                6,
                format!("unsupported NPY version {v}.{}", bytes[7]),
            ))
        }
    };
    let data_start = header_start + header_len;
    if bytes.len() < data_start {
        return Err(format_err(
            bytes.len(),
            "header runs past the end of the file",
        ));
    }
    let header = std::str::from_utf8(&bytes[header_start..data_start])
        .map_err(|e| format_err(header_start + e.valid_up_to(), "header is not text"))?;
    let dict = HeaderDict::parse(header, header_start)?;

    let width = match dict.descr.as_str() {
        "<f8" => 8,
        "<f4" => 4,
        other => {
            return Err(format_err(
                dict.descr_offset,
                format!("unsupported dtype `{other}`, expected `<f4` or `<f8`"),
            ))
        }
    };
    if dict.fortran_order {
        return Err(format_err(
            dict.fortran_offset,
            "Fortran-order arrays are not supported; save with C order",
        ));
    }
    let count: usize = dict.shape.iter().product();
    let expected = count * width;
    let data = &bytes[data_start..];
    if data.len() < expected {
        return Err(format_err(
            bytes.len(),
            format!(
                "truncated data: expected {expected} bytes, found {}",
                data.len()
            ),
        ));
    }
    if data.len() > expected {
        return Err(format_err(
            data_start + expected,
            "trailing bytes after array data",
        ));
    }
    let values = if width == 8 {
        data.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    } else {
        data.chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect()
    };
    Ok(NpyArray {
        shape: dict.shape,
        values,
    })
}

/// Version 1.0 `<f8` C-order encoding, header padded to 64 bytes.
pub fn encode_npy(shape: &[usize], values: &[f64]) -> Vec<u8> {
    debug_assert_eq!(shape.iter().product::<usize>(), values.len());
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    let shape_txt = match dims.len() {
        1 => format!("({},)", dims[0]),
        _ => format!("({})", dims.join(", ")),
    };
    let mut header = format!("{{'descr': '<f8', 'fortran_order': False, 'shape': {shape_txt}, }}");
    let unpadded = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');
    let mut out = Vec::with_capacity(10 + header.len() + values.len() * 8);
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct HeaderDict {
    descr: String,
    descr_offset: usize,
    fortran_order: bool,
    fortran_offset: usize,
    shape: Vec<usize>,
}

/// Cursor over the Python-literal header; offsets are absolute file offsets.
struct Lexer<'a> {
    text: &'a [u8],
    pos: usize,
    base: usize,
}

impl Lexer<'_> {
    fn offset(&self) -> usize {
        self.base + self.pos
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() != Some(c) {
            return Err(format_err(
                self.offset(),
                format!("expected `{}` in header", c as char),
            ));
        }
        self.pos += 1;
        Ok(())
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => {
                return Err(format_err(
                    self.offset(),
                    "expected a quoted string in header",
                ))
            }
        };
        let start = self.pos + 1;
        let len = self.text[start..]
            .iter()
            .position(|&c| c == quote)
            .ok_or_else(|| format_err(self.base + start, "unterminated string in header"))?;
        self.pos = start + len + 1;
        Ok(String::from_utf8_lossy(&self.text[start..start + len]).into_owned())
    }

    fn word(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.text[start..self.pos]).unwrap_or("")
    }
}

impl HeaderDict {
    fn parse(header: &str, base: usize) -> Result<Self> {
        let mut lx = Lexer {
            text: header.as_bytes(),
            pos: 0,
            base,
        };
        let mut descr = None;
        let mut fortran = None;
        let mut shape = None;
        lx.expect(b'{')?;
        loop {
            if lx.peek() == Some(b'}') {
                lx.pos += 1;
                break;
            }
            let key_at = lx.offset();
            let key = lx.string()?;
            lx.expect(b':')?;
            let value_at = {
                lx.skip_ws();
                lx.offset()
            };
            match key.as_str() {
                "descr" => descr = Some((lx.string()?, value_at)),
                "fortran_order" => {
                    let v = match lx.word() {
                        "True" => true,
                        "False" => false,
                        _ => {
                            return Err(format_err(value_at, "fortran_order must be True or False"))
                        }
                    };
                    fortran = Some((v, value_at));
                }
                "shape" => shape = Some(Self::shape(&mut lx)?),
                _ => return Err(format_err(key_at, format!("unexpected header key `{key}`"))),
            }
            match lx.peek() {
                Some(b',') => lx.pos += 1,
                Some(b'}') => {}
                _ => return Err(format_err(lx.offset(), "expected `,` or `}` in header")),
            }
        }
        let end = lx.offset();
        let missing = |k: &str| format_err(end, format!("header has no `{k}` entry"));
        let (descr, descr_offset) = descr.ok_or_else(|| missing("descr"))?;
        let (fortran_order, fortran_offset) = fortran.ok_or_else(|| missing("fortran_order"))?;
        Ok(Self {
            descr,
            descr_offset,
            fortran_order,
            fortran_offset,
            shape: shape.ok_or_else(|| missing("shape"))?,
        })
    }

    fn shape(lx: &mut Lexer<'_>) -> Result<Vec<usize>> {
        lx.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            if lx.peek() == Some(b')') {
                lx.pos += 1;
                return Ok(dims);
            }
            let at = lx.offset();
            let dim = lx
                .word()
                .trim_end_matches('L')
                .parse()
                .map_err(|_| format_err(at, "shape entries must be non-negative integers"))?;
            dims.push(dim);
            match lx.peek() {
                Some(b',') => lx.pos += 1,
                Some(b')') => {}
                _ => return Err(format_err(lx.offset(), "expected `,` or `)` in shape")),
            }
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Replaces `path` with `bytes` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_features(bytes: &[u8], orientation: Orientation) -> Result<FeatureSequence> {
    let arr = parse_npy(bytes)?;
    let &[rows, cols] = arr.shape.as_slice() else {
        return Err(format_err(
            0,
            format!("expected a 2-D array, found shape {:?}", arr.shape),
        ));
    };
    let resolved = orientation.resolve(rows, cols);
    if orientation == Orientation::Auto {
        log::debug!("{rows}x{cols} array read as {resolved:?}");
    }
    match resolved {
        Orientation::DByT => Ok(FeatureSequence::new(
            cols,
            rows,
            transpose(&arr.values, rows, cols),
        )?),
        _ => FeatureSequence::new(rows, cols, arr.values),
    }
}

fn transpose(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = values[r * cols + c];
        }
    }
    out
}

pub fn load_features(path: &Path, orientation: Orientation) -> Result<FeatureSequence> {
    read_features(&read_file(path)?, orientation)
}

/// Writes `T x D`.
pub fn save_features(path: &Path, feat: &FeatureSequence) -> Result<()> {
    write_atomic(
        path,
        &encode_npy(&[feat.frames(), feat.dim()], feat.as_slice()),
    )
}

/// Bijection between class names and ids `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMapping {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl ClassMapping {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.chars().any(char::is_whitespace) {
                return Err(Error::InvalidValue(format!("bad class name `{n}`")));
            }
            if ids.insert(n.clone(), i).is_some() {
                return Err(Error::InvalidValue(format!("class `{n}` listed twice")));
            }
        }
        Ok(Self { names, ids })
    }

    /// Names are the decimal ids themselves.
    pub fn identity(n: usize) -> Self {
        Self::new((0..n).map(|i| i.to_string()).collect()).expect("distinct numerals")
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let (Some(idx), Some(name)) = (parts.next(), parts.next()) else {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(err(i + 1, format!("expected `index name`, got `{line}`")));
            };
            if parts.next().is_some() {
                return Err(err(i + 1, format!("expected `index name`, got `{line}`")));
            }
            let idx: usize = idx
                .parse()
                .map_err(|_| err(i + 1, format!("bad class index `{idx}`")))?;
            pairs.push((idx, name.to_string(), i + 1));
        }
        if pairs.is_empty() {
            return Err(err(1, "empty class mapping".into()));
        }
        pairs.sort_by_key(|p| p.0);
        for (want, (idx, _, line)) in pairs.iter().enumerate() {
            if *idx != want {
                return Err(err(
                    *line,
                    format!("class ids must be 0..{} without gaps", pairs.len()),
                ));
            }
        }
        Self::new(pairs.into_iter().map(|p| p.1).collect()).map_err(|e| err(0, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, path)
    }

    pub fn to_text(&self) -> String {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| format!("{i} {n}\n"))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Blank lines after the last name are ignored; anywhere else they are errors.
pub fn parse_labels(text: &str, mapping: &ClassMapping, path: &Path) -> Result<LabelSequence> {
    let lines: Vec<&str> = text.lines().collect();
    let used = lines
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .map_or(0, |i| i + 1);
    if used == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "empty label file".into(),
        });
    }
    let labels = lines[..used]
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let name = l.trim();
            mapping.id(name).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("unknown class `{name}`"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LabelSequence::new(labels, mapping.len())
}

pub fn load_labels(path: &Path, mapping: &ClassMapping) -> Result<LabelSequence> {
    parse_labels(&read_text(path)?, mapping, path)
}

pub fn format_labels(labels: &LabelSequence, mapping: &ClassMapping) -> Result<String> {
    let mut out = String::with_capacity(labels.len() * 8);
    for &l in labels.as_slice() {
        let name = mapping
            .name(l)
            .ok_or_else(|| Error::InvalidValue(format!("class {l} missing from the mapping")))?;
        out.push_str(name);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_labels(path: &Path, labels: &LabelSequence, mapping: &ClassMapping) -> Result<()> {
    write_atomic(path, format_labels(labels, mapping)?.as_bytes())
}

pub fn format_boundaries(bounds: &BoundarySet) -> String {
    bounds.iter().map(|b| format!("{b}\n")).collect()
}

pub fn parse_boundaries(text: &str, path: &Path) -> Result<BoundarySet> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let b = line.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("bad boundary `{line}`"),
        })?;
        out.push(b);
    }
    BoundarySet::new(out)
}

pub fn save_boundaries(path: &Path, bounds: &BoundarySet) -> Result<()> {
    write_atomic(path, format_boundaries(bounds).as_bytes())
}

pub fn load_boundaries(path: &Path) -> Result<BoundarySet> {
    parse_boundaries(&read_text(path)?, path)
}

pub fn save_report(path: &Path, result: &EvalResult) -> Result<()> {
    write_atomic(path, result.to_key_values().as_bytes())
}

/// Reads the six metric fields back from `key=value` lines; other keys are skipped.
pub fn parse_report(text: &str, path: &Path) -> Result<EvalResult> {
    let kv = parse_key_values(text, path)?;
    let get = |k: &str| -> Result<f64> {
        let (line, raw) = kv.get(k).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("report has no `{k}`"),
        })?;
        raw.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: *line,
            message: format!("`{k}` is not a number"),
        })
    };
    Ok(EvalResult {
        acc: get("acc")?,
        edit: get("edit")?,
        f1_10: get("f1_10")?,
        f1_25: get("f1_25")?,
        f1_50: get("f1_50")?,
        boundary_f1: get("boundary_f1")?,
    })
}

pub fn load_report(path: &Path) -> Result<EvalResult> {
    parse_report(&read_text(path)?, path)
}

/// `key=value` lines; `#` starts a comment line. Values keep their line number.
pub fn parse_key_values(text: &str, path: &Path) -> Result<HashMap<String, (usize, String)>> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("expected `key=value`, got `{line}`"),
        })?;
        out.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    Ok(out)
}

/// Video ids listed in a split bundle, one per line, `.txt` suffix dropped.
pub fn load_bundle(path: &Path) -> Result<Vec<String>> {
    let ids: Vec<String> = read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.strip_suffix(".txt").unwrap_or(l).to_string())
        .collect();
    if ids.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "split bundle lists no videos".into(),
        });
    }
    Ok(ids)
}

/// Where one dataset's files live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetLayout {
    pub features: PathBuf,
    pub ground_truth: PathBuf,
    pub mapping: PathBuf,
    pub splits: Vec<PathBuf>,
    pub predictions: Option<PathBuf>,
}

impl DatasetLayout {
    /// `features/`, `groundTruth/`, `mapping.txt`, `splits/*.bundle`
    /// (sorted) and, when present, `predictions/` under `root`.
    pub fn standard(root: &Path) -> Result<Self> {
        let split_dir = root.join("splits");
        let mut splits = Vec::new();
        if split_dir.is_dir() {
            for entry in fs::read_dir(&split_dir).map_err(|e| Error::io(&split_dir, e))? {
                let p = entry.map_err(|e| Error::io(&split_dir, e))?.path();
                if p.extension().is_some_and(|e| e == "bundle") {
                    splits.push(p);
                }
            }
        }
        splits.sort();
        Ok(Self {
            features: root.join("features"),
            ground_truth: root.join("groundTruth"),
            mapping: root.join("mapping.txt"),
            splits,
            predictions: Some(root.join("predictions")).filter(|p| p.is_dir()),
        })
    }

    /// Keys `features`, `groundtruth`, `mapping`, `splits` (comma-separated)
    /// and optionally `predictions`; relative paths are taken from the
    /// manifest's directory.
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let kv = parse_key_values(&read_text(path)?, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |v: &str| base.join(v);
        let need = |k: &str| {
            kv.get(k)
                .map(|(_, v)| resolve(v))
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    message: format!("manifest has no `{k}`"),
                })
        };
        let layout = Self {
            features: need("features")?,
            ground_truth: need("groundtruth")?,
            mapping: need("mapping")?,
            splits: kv
                .get("splits")
                .map(|(_, v)| {
                    v.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(resolve)
                        .collect()
                })
                .unwrap_or_default(),
            predictions: kv.get("predictions").map(|(_, v)| resolve(v)),
        };
        layout.check()?;
        Ok(layout)
    }

    /// Every referenced path exists.
    pub fn check(&self) -> Result<()> {
        let all = [&self.features, &self.ground_truth, &self.mapping]
            .into_iter()
            .chain(&self.splits)
            .chain(self.predictions.as_ref());
        for p in all {
            if !p.exists() {
                return Err(Error::io(
                    p,
                    std::io::Error::from(std::io::ErrorKind::NotFound),
                ));
            }
        }
        Ok(())
    }

    pub fn features_of(&self, video: &str) -> PathBuf {
        self.features.join(format!("{video}.npy"))
    }

    pub fn ground_truth_of(&self, video: &str) -> PathBuf {
        self.ground_truth.join(format!("{video}.txt"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn npy_f4(shape: &str, values: &[f32]) -> Vec<u8> {
        let mut header = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {shape}, }}");
        while (10 + header.len() + 1) % 16 != 0 {
            header.push(' ');
        }
        header.push('\n');
        let mut out = NPY_MAGIC.to_vec();
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        values
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        out
    }

    #[test]
    fn npy_round_trip() {
        let bytes = encode_npy(&[3, 2], &[1.0, 2.0, 3.0, 4.0, 5.0, -6.5]);
        assert_eq!(bytes.len() % 8, 0);
        assert_eq!(
            (10 + u16::from_le_bytes([bytes[8], bytes[9]]) as usize) % 64,
            0
        );
        let arr = parse_npy(&bytes).unwrap();
        assert_eq!(arr.shape, vec![3, 2]);
        assert_eq!(arr.values, vec![1.0, 2.0, 3.0, 4.0, 5.0, -6.5]);
    }

    #[test]
    fn reads_f4_and_orients() {
        let bytes = npy_f4("(2, 3)", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let td = read_features(&bytes, Orientation::TByD).unwrap();
        assert_eq!((td.frames(), td.dim()), (2, 3));
        let dt = read_features(&bytes, Orientation::DByT).unwrap();
        assert_eq!((dt.frames(), dt.dim()), (3, 2));
        assert_eq!(dt.row(0), &[1.0, 4.0]);
        assert_eq!(dt, td.transposed());
    }

    #[test]
    fn auto_orientation() {
        let wide = encode_npy(&[2048, 5], &vec![0.5; 2048 * 5]);
        let f = read_features(&wide, Orientation::Auto).unwrap();
        assert_eq!((f.frames(), f.dim()), (5, 2048));
        let tall = encode_npy(&[7, 64], &vec![0.0; 7 * 64]);
        assert_eq!(read_features(&tall, Orientation::Auto).unwrap().dim(), 64);
        let both = encode_npy(&[1024, 2048], &vec![0.0; 1024 * 2048]);
        assert_eq!(read_features(&both, Orientation::Auto).unwrap().dim(), 2048);
    }

    #[test]
    fn npy_format_errors() {
        let good = encode_npy(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let mut bad_magic = good.clone();
        bad_magic[1] = b'X';
        assert!(matches!(
            parse_npy(&bad_magic),
            Err(Error::Format { offset: 0, .. })
        ));

        let truncated = &good[..good.len() - 3];
        assert!(matches!(
            parse_npy(truncated),
            Err(Error::Format { offset, .. }) if offset == truncated.len()
        ));

        let mut extra = good.clone();
        extra.push(0);
        assert!(
            matches!(parse_npy(&extra), Err(Error::Format { offset, .. }) if offset == good.len())
        );

        let int = npy_f4("(1,)", &[0.0]);
        let int = String::from_utf8_lossy(&int)
            .replace("<f4", "<i4")
            .into_bytes();
        assert!(matches!(parse_npy(&int), Err(Error::Format { .. })));

        let one_d = encode_npy(&[4], &[1.0, 2.0, 3.0, 4.0]);
        assert!(read_features(&one_d, Orientation::TByD).is_err());
    }

    #[test]
    fn fortran_order_rejected() {
        let mut bytes = npy_f4("(1, 1)", &[1.0]);
        let at = bytes.windows(5).position(|w| w == b"False").unwrap();
        bytes[at..at + 5].copy_from_slice(b"True ");
        match parse_npy(&bytes) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, at);
                assert!(message.contains("Fortran"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let bytes = encode_npy(&[2, 2], &[1.0, 2.0, f64::NAN, 4.0]);
        assert!(matches!(
            read_features(&bytes, Orientation::TByD),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn mapping_parse() {
        let p = Path::new("mapping.txt");
        let m = ClassMapping::parse("1 take\n0 cut_tomato\n\n2 pour\n", p).unwrap();
        assert_eq!(m.id("cut_tomato"), Some(0));
        assert_eq!(m.name(2), Some("pour"));
        assert_eq!(ClassMapping::parse(&m.to_text(), p).unwrap(), m);
        assert!(ClassMapping::parse("0 a\n2 b\n", p).is_err());
        assert!(ClassMapping::parse("0 a\n1 a\n", p).is_err());
        assert!(ClassMapping::parse("", p).is_err());
        assert!(matches!(
            ClassMapping::parse("0 a\nzero b\n", p),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn labels_parse() {
        let p = Path::new("v.txt");
        let m = ClassMapping::parse("0 cut_tomato\n1 pour\n", p).unwrap();
        let l = parse_labels("cut_tomato\ncut_tomato\ncut_tomato\n", &m, p).unwrap();
        assert_eq!(l.as_slice(), &[0, 0, 0]);
        assert_eq!(
            parse_labels("pour\ncut_tomato\n\n\n", &m, p).unwrap().len(),
            2
        );
        assert!(parse_labels("", &m, p).is_err());
        assert!(parse_labels("\n\n", &m, p).is_err());
        assert!(matches!(
            parse_labels("pour\nstir\n", &m, p),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_labels("pour\n\npour\n", &m, p),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn boundaries_format() {
        let b = BoundarySet::new(vec![2, 7]).unwrap();
        assert_eq!(format_boundaries(&b), "2\n7\n");
        assert_eq!(parse_boundaries("2\n7\n", Path::new("b")).unwrap(), b);
        assert_eq!(format_boundaries(&BoundarySet::empty()), "");
        assert!(parse_boundaries("7\n2\n", Path::new("b")).is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = ClassMapping::identity(3);
        let l = LabelSequence::new(vec![0, 2, 2, 1], 3).unwrap();
        let lp = dir.path().join("l.txt");
        save_labels(&lp, &l, &m).unwrap();
        assert_eq!(load_labels(&lp, &m).unwrap(), l);

        let r = EvalResult {
            acc: 91.25,
            edit: 80.0,
            f1_10: 70.5,
            f1_25: 60.0,
            f1_50: 50.125,
            boundary_f1: 40.0,
        };
        let rp = dir.path().join("r.txt");
        save_report(&rp, &r).unwrap();
        assert_eq!(load_report(&rp).unwrap(), r);

        let f = FeatureSequence::new(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let fp = dir.path().join("f.npy");
        save_features(&fp, &f).unwrap();
        assert_eq!(load_features(&fp, Orientation::TByD).unwrap(), f);

        let missing = dir.path().join("nope").join("x.txt");
        assert!(matches!(
            save_boundaries(&missing, &BoundarySet::empty()),
            Err(Error::Io { .. })
        ));
        assert!(matches!(load_boundaries(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn manifest_and_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        for d in ["features", "groundTruth", "splits"] {
            fs::create_dir(root.join(d)).unwrap();
        }
        fs::write(root.join("mapping.txt"), "0 a\n").unwrap();
        fs::write(root.join("splits/test.split1.bundle"), "v1.txt\nv2.txt\n\n").unwrap();
        fs::write(
            root.join("data.manifest"),
            "# gtea\nfeatures=features\ngroundtruth=groundTruth\nmapping=mapping.txt\nsplits=splits/test.split1.bundle\n",
        )
        .unwrap();
        let layout = DatasetLayout::from_manifest(&root.join("data.manifest")).unwrap();
        assert_eq!(layout, DatasetLayout::standard(root).unwrap());
        assert_eq!(load_bundle(&layout.splits[0]).unwrap(), vec!["v1", "v2"]);
        assert_eq!(layout.features_of("v1"), root.join("features/v1.npy"));

        fs::write(
            root.join("bad.manifest"),
            "features=nowhere\ngroundtruth=groundTruth\nmapping=mapping.txt\n",
        )
        .unwrap();
        assert!(DatasetLayout::from_manifest(&root.join("bad.manifest")).is_err());
    }
}
