//! Image file I/O, bicubic rescaling, and deterministic synthetic corpus
//! generation for desk-scale experiments.
//!
//! The mandatory image format is binary PGM/PPM (P5 grayscale, P6 RGB,
//! maxval 255): it is implementable without third-party decoders and is
//! bit-exact. P5 files load as three replicated channels so every tensor in
//! the pipeline is 3-channel. File writes are atomic (temp file + rename).

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{reflect, Tensor};

// ── Corpus ────────────────────────────────────────────────────────────────

/// Where a corpus came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Files,
    Synthetic { seed: u64, n: usize, size: usize },
}

/// A named list of images. Ids are unique; every image is 3-channel with
/// values in `[0, 255]`.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub name: String,
    pub images: Vec<(String, Tensor)>,
    pub provenance: Provenance,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Tensor> {
        self.images.iter().find(|(i, _)| i == id).map(|(_, t)| t)
    }
}

/// Manifest written next to a materialized corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub name: String,
    pub provenance: Provenance,
    pub images: Vec<CorpusImageEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusImageEntry {
    pub id: String,
    pub path: String,
}

// ── PGM / PPM I/O ─────────────────────────────────────────────────────────

struct ByteParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteParser<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        ByteParser { bytes, pos: 0 }
    }

    fn err(&self, msg: &str) -> Error {
        Error::parse(format!("{msg} at byte offset {}", self.pos))
    }

    fn next_byte(&mut self) -> Option<u8> {
        let b = self.bytes.get(self.pos).copied();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    /// Skip whitespace and `#` comment lines.
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read_uint(&mut self) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        let mut v: usize = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_digit() {
                v = v
                    .checked_mul(10)
                    .and_then(|v| v.checked_add((b - b'0') as usize))
                    .ok_or_else(|| self.err("integer overflow in header"))?;
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.err("expected integer in header"));
        }
        Ok(v)
    }
}

/// Load a binary PGM (P5) or PPM (P6) file as a 3-channel tensor on the
/// 0–255 scale. Grayscale files replicate their single channel.
pub fn load_image(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path)
        .map_err(|e| Error::parse(format!("cannot read {}: {e}", path.display())))?;
    parse_image(&bytes).map_err(|e| Error::parse(format!("{}: {e}", path.display())))
}

/// Parse PGM/PPM bytes; errors carry the byte offset of the failure.
pub fn parse_image(bytes: &[u8]) -> Result<Tensor> {
    let mut p = ByteParser::new(bytes);
    let m0 = p.next_byte().ok_or_else(|| p.err("missing magic"))?;
    let m1 = p.next_byte().ok_or_else(|| p.err("missing magic"))?;
    let channels = match (m0, m1) {
        (b'P', b'5') => 1usize,
        (b'P', b'6') => 3usize,
        _ => return Err(Error::parse("unsupported magic (want P5 or P6) at byte offset 0")),
    };
    let width = p.read_uint()?;
    let height = p.read_uint()?;
    let maxval = p.read_uint()?;
    if width == 0 || height == 0 {
        return Err(p.err("zero image dimension"));
    }
    if maxval != 255 {
        return Err(p.err("unsupported maxval (want 255)"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match p.next_byte() {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => return Err(p.err("missing whitespace after maxval")),
    }
    let need = width * height * channels;
    let have = bytes.len() - p.pos;
    if have < need {
        return Err(p.err(&format!("truncated payload: need {need} bytes, have {have}")));
    }
    let payload = &bytes[p.pos..p.pos + need];
    let mut data = Vec::with_capacity(width * height * 3);
    match channels {
        1 => {
            for &v in payload {
                let f = v as f64;
                data.extend_from_slice(&[f, f, f]);
            }
        }
        _ => {
            for &v in payload {
                data.push(v as f64);
            }
        }
    }
    Tensor::new(height, width, 3, data)
}

/// Round and clamp a real intensity to the 8-bit grid.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp: PathBuf = dir.join(format!(
        ".{}.tmp.{}.{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out"),
        std::process::id(),
        n
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Save a 3-channel image tensor. Values are rounded and clamped to
/// `[0, 255]`. Writes P5 when all three channels are identical everywhere,
/// P6 otherwise; both load back to the identical tensor.
pub fn save_image(t: &Tensor, path: &Path) -> Result<()> {
    if t.channels() != 3 {
        return Err(Error::structural(format!(
            "save_image expects 3 channels, got {}",
            t.channels()
        )));
    }
    let (h, w, _) = t.shape();
    let gray = (0..h).all(|y| {
        (0..w).all(|x| {
            let r = to_u8(t.get(y, x, 0));
            r == to_u8(t.get(y, x, 1)) && r == to_u8(t.get(y, x, 2))
        })
    });
    let mut bytes = Vec::with_capacity(h * w * 3 + 32);
    if gray {
        bytes.extend_from_slice(format!("P5\n{w} {h}\n255\n").as_bytes());
        for y in 0..h {
            for x in 0..w {
                bytes.push(to_u8(t.get(y, x, 0)));
            }
        }
    } else {
        bytes.extend_from_slice(format!("P6\n{w} {h}\n255\n").as_bytes());
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    bytes.push(to_u8(t.get(y, x, c)));
                }
            }
        }
    }
    atomic_write(path, &bytes)
}

// ── Bicubic resampling ────────────────────────────────────────────────────

/// Catmull-Rom–style bicubic kernel with `a = -0.5`.
#[inline]
fn cubic_weight(t: f64) -> f64 {
    let a = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a
    } else {
        0.0
    }
}

/// Resample one axis. `ratio = len_in / len_out`; source coordinate for
/// output index `j` is `(j + 0.5) * ratio - 0.5` (center-aligned), taps at
/// `floor(x) - 1 .. floor(x) + 2` with reflect boundary handling.
fn resample_axis(input: &[f64], len_in: usize, stride: usize, out: &mut [f64], len_out: usize) {
    let ratio = len_in as f64 / len_out as f64;
    for j in 0..len_out {
        let x = (j as f64 + 0.5) * ratio - 0.5;
        let base = x.floor();
        let frac = x - base;
        let base = base as isize;
        let mut acc = 0.0;
        for k in -1..=2isize {
            let w = cubic_weight(frac - k as f64);
            if w == 0.0 {
                continue;
            }
            let src = reflect(base + k, len_in);
            acc += w * input[src * stride];
        }
        out[j * stride] = acc;
    }
}

/// Bicubic resize by a real factor (Catmull-Rom, `a = -0.5`, reflect
/// boundary, horizontal pass then vertical pass). The output size on each
/// axis is `round(len * factor)`; downscaling by `1/3` then upscaling by 3
/// returns the original spatial shape.
pub fn bicubic_resize(t: &Tensor, factor: f64) -> Result<Tensor> {
    if !(factor > 0.0) {
        return Err(Error::structural(format!("bicubic factor must be positive, got {factor}")));
    }
    let (h, w, c) = t.shape();
    let oh = (h as f64 * factor).round() as usize;
    let ow = (w as f64 * factor).round() as usize;
    if oh == 0 || ow == 0 {
        return Err(Error::structural(format!(
            "bicubic result {oh}x{ow} is smaller than one pixel"
        )));
    }
    // Horizontal pass: h×w×c → h×ow×c.
    let mut mid = Tensor::zeros(h, ow, c);
    {
        let src = t.data();
        let dst = mid.data_mut();
        for y in 0..h {
            for ch in 0..c {
                let in_off = y * w * c + ch;
                let out_off = y * ow * c + ch;
                resample_axis(&src[in_off..], w, c, &mut dst[out_off..], ow);
            }
        }
    }
    // Vertical pass: h×ow×c → oh×ow×c.
    let mut out = Tensor::zeros(oh, ow, c);
    {
        let src = mid.data();
        let dst = out.data_mut();
        for x in 0..ow {
            for ch in 0..c {
                let in_off = x * c + ch;
                let out_off = x * c + ch;
                resample_axis(&src[in_off..], h, ow * c, &mut dst[out_off..], oh);
            }
        }
    }
    Ok(out)
}

/// Bicubic-downscale an HR image to the LR grid and snap it to integer
/// 8-bit intensities, matching what an on-disk LR set would contain.
pub fn to_lr(hr: &Tensor, scale: usize) -> Result<Tensor> {
    let lr = bicubic_resize(hr, 1.0 / scale as f64)?;
    Ok(lr.map(|v| f64::from(to_u8(v))))
}

// ── Synthetic corpus ──────────────────────────────────────────────────────

/// Generate a deterministic synthetic corpus of `n` images of `size×size`
/// pixels mixing smooth gradients, checkerboards, text-like strokes, and
/// band-limited noise. The mix is chosen so that trained no-clip SR models
/// produce both low- and high-outlier candidates. Images are achromatic
/// (all three channels equal) with integer values in `[0, 255]` spanning
/// most of the intensity range.
pub fn synth_corpus(seed: u64, n: usize, size: usize) -> Result<Corpus> {
    if n == 0 {
        return Err(Error::EmptyInput("synth_corpus needs n >= 1".into()));
    }
    if size < 8 {
        return Err(Error::structural("synth_corpus size must be at least 8"));
    }
    let mut images = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = SplitMix64::derive(seed, i as u64);
        let img = match i % 4 {
            0 => gen_gradient(&mut rng, size),
            1 => gen_checkerboard(&mut rng, size),
            2 => gen_strokes(&mut rng, size),
            _ => gen_band_noise(&mut rng, size),
        };
        images.push((format!("synth_{i:03}"), img));
    }
    Ok(Corpus {
        name: format!("synth-{seed}-{n}-{size}"),
        images,
        provenance: Provenance::Synthetic { seed, n, size },
    })
}

fn gray_image(size: usize, f: impl Fn(usize, usize) -> f64) -> Tensor {
    let mut t = Tensor::zeros(size, size, 3);
    for y in 0..size {
        for x in 0..size {
            let v = f(y, x).clamp(0.0, 255.0).round();
            for c in 0..3 {
                t.set(y, x, c, v);
            }
        }
    }
    t
}

/// Smooth linear or radial gradient spanning nearly the full range.
fn gen_gradient(rng: &mut SplitMix64, size: usize) -> Tensor {
    let lo = rng.range_f64(0.0, 10.0);
    let hi = rng.range_f64(245.0, 255.0);
    let radial = rng.below(3) == 0;
    if radial {
        let cy = rng.range_f64(0.2, 0.8) * size as f64;
        let cx = rng.range_f64(0.2, 0.8) * size as f64;
        let rmax = size as f64 * 0.75;
        gray_image(size, |y, x| {
            let d = ((y as f64 - cy).powi(2) + (x as f64 - cx).powi(2)).sqrt() / rmax;
            lo + (hi - lo) * d.min(1.0)
        })
    } else {
        let theta = rng.range_f64(0.0, std::f64::consts::PI);
        let (s, c) = theta.sin_cos();
        let span = size as f64 * (s.abs() + c.abs());
        gray_image(size, |y, x| {
            let p = (y as f64 * s + x as f64 * c + span) / (2.0 * span);
            lo + (hi - lo) * p
        })
    }
}

/// High-contrast checkerboard with small cells: strong Nyquist-band energy
/// that trained no-clip models tend to overshoot.
fn gen_checkerboard(rng: &mut SplitMix64, size: usize) -> Tensor {
    let cell = 2 + rng.below(5);
    let v0 = rng.range_f64(0.0, 12.0);
    let v1 = rng.range_f64(243.0, 255.0);
    let jitter = rng.below(2) == 0;
    let ncells = size / cell + 1;
    let mut jrng = SplitMix64::derive(rng.next_u64(), 1);
    let jgrid: Vec<f64> = (0..ncells * ncells)
        .map(|_| if jitter { jrng.range_f64(-5.0, 5.0) } else { 0.0 })
        .collect();
    gray_image(size, |y, x| {
        let (cy, cx) = (y / cell, x / cell);
        let base = if (cy + cx) % 2 == 0 { v0 } else { v1 };
        base + jgrid[cy * ncells + cx]
    })
}

/// Text-like strokes: thin high-contrast lines and small rectangles on a
/// near-extreme background.
fn gen_strokes(rng: &mut SplitMix64, size: usize) -> Tensor {
    let dark_on_light = rng.below(2) == 0;
    let bg = if dark_on_light { rng.range_f64(235.0, 255.0) } else { rng.range_f64(0.0, 20.0) };
    let fg = if dark_on_light { rng.range_f64(0.0, 20.0) } else { rng.range_f64(235.0, 255.0) };
    let mut t = gray_image(size, |_, _| bg);
    let strokes = 8 + rng.below(8);
    for _ in 0..strokes {
        if rng.below(3) == 0 {
            // Small filled rectangle.
            let rh = 2 + rng.below(size / 6);
            let rw = 2 + rng.below(size / 6);
            let y0 = rng.below(size - rh);
            let x0 = rng.below(size - rw);
            for y in y0..y0 + rh {
                for x in x0..x0 + rw {
                    for c in 0..3 {
                        t.set(y, x, c, fg.round());
                    }
                }
            }
        } else {
            // Random-walk stroke of thickness 1–2.
            let mut y = rng.below(size) as isize;
            let mut x = rng.below(size) as isize;
            let len = size / 2 + rng.below(size);
            let thick = 1 + rng.below(2) as isize;
            for _ in 0..len {
                for dy in 0..thick {
                    for dx in 0..thick {
                        let (py, px) = (y + dy, x + dx);
                        if py >= 0 && px >= 0 && (py as usize) < size && (px as usize) < size {
                            for c in 0..3 {
                                t.set(py as usize, px as usize, c, fg.round());
                            }
                        }
                    }
                }
                match rng.below(4) {
                    0 => y += 1,
                    1 => y -= 1,
                    2 => x += 1,
                    _ => x -= 1,
                }
                y = y.clamp(0, size as isize - 1);
                x = x.clamp(0, size as isize - 1);
            }
        }
    }
    t
}

/// Band-limited noise: a sum of low-frequency cosines rescaled to span
/// most of the intensity range.
fn gen_band_noise(rng: &mut SplitMix64, size: usize) -> Tensor {
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.range_f64(0.01, 0.16),              // fy (cycles/px)
                rng.range_f64(0.01, 0.16),              // fx
                rng.range_f64(0.0, std::f64::consts::TAU), // phase
                rng.range_f64(0.4, 1.0),                // amplitude
            )
        })
        .collect();
    let mut raw = vec![0.0f64; size * size];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in 0..size {
        for x in 0..size {
            let mut v = 0.0;
            for &(fy, fx, ph, a) in &waves {
                v += a * (std::f64::consts::TAU * (fy * y as f64 + fx * x as f64) + ph).cos();
            }
            raw[y * size + x] = v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = (hi - lo).max(1e-9);
    gray_image(size, |y, x| 5.0 + 245.0 * (raw[y * size + x] - lo) / span)
}

// ── Corpus materialization and loading ────────────────────────────────────

/// Write a corpus to `dir` as PGM files plus a `manifest.json`.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(corpus.len());
    for (id, img) in &corpus.images {
        let file = format!("{id}.pgm");
        save_image(img, &dir.join(&file))?;
        entries.push(CorpusImageEntry { id: id.clone(), path: file });
    }
    let manifest = CorpusManifest {
        schema_version: 1,
        name: corpus.name.clone(),
        provenance: corpus.provenance.clone(),
        images: entries,
    };
    atomic_write(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())
}

/// Load a corpus from a directory. Reads `manifest.json` when present,
/// otherwise collects `*.pgm`/`*.ppm` files in name order.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        let manifest: CorpusManifest = serde_json::from_slice(&fs::read(&manifest_path)?)?;
        let mut ids = HashSet::new();
        let mut images = Vec::with_capacity(manifest.images.len());
        for entry in &manifest.images {
            if !ids.insert(entry.id.clone()) {
                return Err(Error::parse(format!("duplicate corpus id `{}`", entry.id)));
            }
            images.push((entry.id.clone(), load_image(&dir.join(&entry.path))?));
        }
        if images.is_empty() {
            return Err(Error::EmptyInput(format!("corpus at {} has no images", dir.display())));
        }
        return Ok(Corpus { name: manifest.name, images, provenance: manifest.provenance });
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm") | Some("ppm")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyInput(format!("no PGM/PPM images found in {}", dir.display())));
    }
    let mut images = Vec::with_capacity(paths.len());
    for p in paths {
        let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string();
        images.push((id, load_image(&p)?));
    }
    Ok(Corpus {
        name: dir.file_name().and_then(|s| s.to_str()).unwrap_or("corpus").to_string(),
        images,
        provenance: Provenance::Files,
    })
}
