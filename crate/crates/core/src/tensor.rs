//! Deterministic CPU reference engine for the tensor operations the SR
//! model zoo needs, in FP32-model form.
//!
//! Layout is fixed: a [`Tensor`] stores `height × width × channels` values
//! row-major as `(h, w, c)`, i.e. `index = (y * width + x) * channels + c`.
//! Images carry pixel intensities on the 0–255 scale; activations are
//! unbounded reals. Values are kept as `f64` in memory so that oracle
//! comparisons (finite differences, loop references) are not limited by
//! single-precision noise; weights are constrained to the f32 grid by their
//! producers so the 32-bit weight-blob file format round-trips bitwise.
//!
//! All operations are pure functions over immutable inputs: same inputs
//! produce bitwise-identical outputs, and nothing here holds shared state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense rank-3 array of real values, the universal carrier of images and
/// activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor {
    /// Build a tensor from raw row-major `(h, w, c)` data.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::structural(format!(
                "tensor dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::structural(format!(
                "tensor data length {} does not match {}x{}x{} = {}",
                data.len(),
                height,
                width,
                channels,
                height * width * channels
            )));
        }
        Ok(Tensor { height, width, channels, data })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Tensor { height, width, channels, data: vec![0.0; height * width * channels] }
    }

    /// Constant-valued tensor.
    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Tensor { height, width, channels, data: vec![value; height * width * channels] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        debug_assert!(y < self.height && x < self.width && c < self.channels);
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        let i = self.index(y, x, c);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Minimum value (tensors are never empty).
    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum value.
    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Elementwise map into a new tensor.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// True when every value is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Crop a `ch × cw` window with top-left corner `(y0, x0)`.
    pub fn crop(&self, y0: usize, x0: usize, ch: usize, cw: usize) -> Result<Tensor> {
        if y0 + ch > self.height || x0 + cw > self.width {
            return Err(Error::structural(format!(
                "crop {ch}x{cw}@({y0},{x0}) exceeds tensor {}x{}",
                self.height, self.width
            )));
        }
        let mut out = Tensor::zeros(ch, cw, self.channels);
        for y in 0..ch {
            for x in 0..cw {
                for c in 0..self.channels {
                    let v = self.get(y0 + y, x0 + x, c);
                    out.set(y, x, c, v);
                }
            }
        }
        Ok(out)
    }
}

/// Convolution parameters: weights indexed `(kh, kw, in, out)` row-major,
/// `index = ((kh * kernel_w + kw) * in_channels + ic) * out_channels + oc`,
/// plus one bias per output channel.
///
/// Values are `f64` in memory but constructors in this crate (He
/// initialization, the trainer, the model loader) always place them on the
/// f32 grid, so serializing to the little-endian f32 weight blob is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvWeights {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvWeights {
    pub fn new(
        kernel_h: usize,
        kernel_w: usize,
        in_channels: usize,
        out_channels: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let expect = kernel_h * kernel_w * in_channels * out_channels;
        if weights.len() != expect {
            return Err(Error::structural(format!(
                "weights length {} does not match {}x{}x{}x{} = {}",
                weights.len(),
                kernel_h,
                kernel_w,
                in_channels,
                out_channels,
                expect
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::structural(format!(
                "bias length {} does not match out_channels {}",
                bias.len(),
                out_channels
            )));
        }
        Ok(ConvWeights { kernel_h, kernel_w, in_channels, out_channels, weights, bias })
    }

    pub fn zeros(kernel_h: usize, kernel_w: usize, in_channels: usize, out_channels: usize) -> Self {
        ConvWeights {
            kernel_h,
            kernel_w,
            in_channels,
            out_channels,
            weights: vec![0.0; kernel_h * kernel_w * in_channels * out_channels],
            bias: vec![0.0; out_channels],
        }
    }

    #[inline]
    pub fn windex(&self, kh: usize, kw: usize, ic: usize, oc: usize) -> usize {
        ((kh * self.kernel_w + kw) * self.in_channels + ic) * self.out_channels + oc
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// SAME-padding mode for [`conv2d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Padding {
    /// Out-of-bounds taps read zero. Default for all model convolutions.
    Zero,
    /// Out-of-bounds taps read the symmetric reflection (edge pixel
    /// duplicated: `cba|abc…`). Used by the blur augmentations.
    Reflect,
}

/// Reflect an out-of-bounds coordinate into `[0, n)` with edge duplication.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// 2-D convolution (cross-correlation) with SAME spatial padding.
///
/// Output has the input's spatial size and `w.out_channels` channels; the
/// value at each site is the dot product of the receptive field with the
/// weights plus the bias. Kernel dimensions must be odd. Accumulation is in
/// `f64` for deterministic, platform-stable sums.
pub fn conv2d(input: &Tensor, w: &ConvWeights, padding: Padding) -> Result<Tensor> {
    if input.channels() != w.in_channels {
        return Err(Error::structural(format!(
            "conv2d channel mismatch: input has {}, weights expect {}",
            input.channels(),
            w.in_channels
        )));
    }
    if w.kernel_h % 2 == 0 || w.kernel_w % 2 == 0 {
        return Err(Error::structural(format!(
            "conv2d kernels must be odd, got {}x{}",
            w.kernel_h, w.kernel_w
        )));
    }
    let (h, wd, cin) = input.shape();
    let cout = w.out_channels;
    let ph = (w.kernel_h / 2) as isize;
    let pw = (w.kernel_w / 2) as isize;
    let mut out = Tensor::zeros(h, wd, cout);
    let idata = input.data();
    let odata = out.data_mut();
    // Per-site accumulator over output channels; the inner oc loop walks
    // contiguous weight memory.
    let mut acc = vec![0.0f64; cout];
    for y in 0..h {
        for x in 0..wd {
            acc.copy_from_slice(&w.bias);
            for kh in 0..w.kernel_h {
                let sy = y as isize + kh as isize - ph;
                for kw in 0..w.kernel_w {
                    let sx = x as isize + kw as isize - pw;
                    let (ry, rx, inside) = match padding {
                        Padding::Zero => {
                            let inside =
                                sy >= 0 && sy < h as isize && sx >= 0 && sx < wd as isize;
                            (sy.max(0) as usize, sx.max(0) as usize, inside)
                        }
                        Padding::Reflect => (reflect(sy, h), reflect(sx, wd), true),
                    };
                    if !inside {
                        continue;
                    }
                    let ibase = (ry * wd + rx) * cin;
                    let wbase = (kh * w.kernel_w + kw) * cin * cout;
                    for ic in 0..cin {
                        let v = idata[ibase + ic];
                        if v == 0.0 {
                            continue;
                        }
                        let wrow = wbase + ic * cout;
                        for (oc, a) in acc.iter_mut().enumerate() {
                            *a += v * w.weights[wrow + oc];
                        }
                    }
                }
            }
            let obase = (y * wd + x) * cout;
            odata[obase..obase + cout].copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// Elementwise `max(0, x)`.
pub fn relu(t: &Tensor) -> Tensor {
    t.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Elementwise `clamp(x, lo, hi)`. Requires `lo < hi`.
pub fn clipped_relu(t: &Tensor, lo: f64, hi: f64) -> Result<Tensor> {
    if !(lo < hi) {
        return Err(Error::structural(format!("clipped_relu requires lo < hi, got {lo} >= {hi}")));
    }
    Ok(t.map(|v| v.clamp(lo, hi)))
}

/// Rearrange channel blocks into spatial resolution (pixel shuffle).
///
/// For block size `B` and output channel count `C_out = C_in / B²`, the
/// index mapping is, bit-exactly:
///
/// ```text
/// out[y*B + by, x*B + bx, c] = in[y, x, (by*B + bx) * C_out + c]
/// ```
///
/// so a `1×1×9` tensor holding `0..9` with block 3 becomes the `3×3×1`
/// tensor whose row-major values are `0..9`.
pub fn depth_to_space(t: &Tensor, block: usize) -> Result<Tensor> {
    if block == 0 {
        return Err(Error::structural("depth_to_space block must be positive"));
    }
    let (h, w, c) = t.shape();
    if c % (block * block) != 0 {
        return Err(Error::structural(format!(
            "depth_to_space: channels {c} not divisible by block^2 = {}",
            block * block
        )));
    }
    let cout = c / (block * block);
    let mut out = Tensor::zeros(h * block, w * block, cout);
    for y in 0..h {
        for x in 0..w {
            for by in 0..block {
                for bx in 0..block {
                    for oc in 0..cout {
                        let v = t.get(y, x, (by * block + bx) * cout + oc);
                        out.set(y * block + by, x * block + bx, oc, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`depth_to_space`]; used by backprop.
pub fn space_to_depth(t: &Tensor, block: usize) -> Result<Tensor> {
    if block == 0 {
        return Err(Error::structural("space_to_depth block must be positive"));
    }
    let (h, w, c) = t.shape();
    if h % block != 0 || w % block != 0 {
        return Err(Error::structural(format!(
            "space_to_depth: spatial {h}x{w} not divisible by block {block}"
        )));
    }
    let mut out = Tensor::zeros(h / block, w / block, c * block * block);
    for y in 0..h / block {
        for x in 0..w / block {
            for by in 0..block {
                for bx in 0..block {
                    for ic in 0..c {
                        let v = t.get(y * block + by, x * block + bx, ic);
                        out.set(y, x, (by * block + bx) * c + ic, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Elementwise sum; shapes must match.
pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape() != b.shape() {
        return Err(Error::structural(format!(
            "add shape mismatch: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Tensor::new(a.height(), a.width(), a.channels(), data)
}

/// Replicate every pixel's channels `factor²` times, producing the anchor
/// tensor for residual SR models: applying [`depth_to_space`] with the same
/// factor to the result yields the nearest-neighbor upsampled input.
///
/// ```text
/// out[y, x, g*C + c] = in[y, x, c]   for g in 0..factor²
/// ```
pub fn nearest_upsample_replicate(t: &Tensor, factor: usize) -> Tensor {
    assert!(factor > 0, "factor must be positive");
    let (h, w, c) = t.shape();
    let groups = factor * factor;
    let mut out = Tensor::zeros(h, w, c * groups);
    for y in 0..h {
        for x in 0..w {
            for g in 0..groups {
                for ch in 0..c {
                    let v = t.get(y, x, ch);
                    out.set(y, x, g * c + ch, v);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn random_tensor(rng: &mut SplitMix64, h: usize, w: usize, c: usize, lo: f64, hi: f64) -> Tensor {
        let data = (0..h * w * c).map(|_| rng.range_f64(lo, hi)).collect();
        Tensor::new(h, w, c, data).unwrap()
    }

    fn random_weights(
        rng: &mut SplitMix64,
        kh: usize,
        kw: usize,
        cin: usize,
        cout: usize,
    ) -> ConvWeights {
        let weights = (0..kh * kw * cin * cout).map(|_| rng.range_f64(-1.0, 1.0)).collect();
        let bias = (0..cout).map(|_| rng.range_f64(-0.5, 0.5)).collect();
        ConvWeights::new(kh, kw, cin, cout, weights, bias).unwrap()
    }

    /// Naive six-nested-loop convolution reference, written before the
    /// engine implementation and kept independent of it.
    fn conv2d_oracle(input: &Tensor, w: &ConvWeights, padding: Padding) -> Tensor {
        let (h, wd, cin) = input.shape();
        let ph = (w.kernel_h / 2) as isize;
        let pw = (w.kernel_w / 2) as isize;
        let mut out = Tensor::zeros(h, wd, w.out_channels);
        for y in 0..h {
            for x in 0..wd {
                for oc in 0..w.out_channels {
                    let mut acc = w.bias[oc];
                    for kh in 0..w.kernel_h {
                        for kw in 0..w.kernel_w {
                            for ic in 0..cin {
                                let sy = y as isize + kh as isize - ph;
                                let sx = x as isize + kw as isize - pw;
                                let v = match padding {
                                    Padding::Zero => {
                                        if sy < 0 || sy >= h as isize || sx < 0 || sx >= wd as isize
                                        {
                                            0.0
                                        } else {
                                            input.get(sy as usize, sx as usize, ic)
                                        }
                                    }
                                    Padding::Reflect => {
                                        input.get(reflect(sy, h), reflect(sx, wd), ic)
                                    }
                                };
                                acc += v * w.weights[w.windex(kh, kw, ic, oc)];
                            }
                        }
                    }
                    out.set(y, x, oc, acc);
                }
            }
        }
        out
    }

    fn assert_close(a: &Tensor, b: &Tensor, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn tensor_rejects_bad_lengths() {
        assert!(Tensor::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Tensor::new(0, 2, 1, vec![]).is_err());
        assert!(Tensor::new(2, 2, 1, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn conv_identity_kernel() {
        let mut rng = SplitMix64::new(1);
        let t = random_tensor(&mut rng, 5, 4, 1, -10.0, 10.0);
        let w = ConvWeights::new(1, 1, 1, 1, vec![1.0], vec![0.0]).unwrap();
        let out = conv2d(&t, &w, Padding::Zero).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn conv_all_ones_on_constant_interior() {
        // 3x3 all-ones kernel on a constant image of 2: interior = 9 * 2.
        let t = Tensor::filled(5, 5, 1, 2.0);
        let w = ConvWeights::new(3, 3, 1, 1, vec![1.0; 9], vec![0.0]).unwrap();
        let out = conv2d(&t, &w, Padding::Zero).unwrap();
        assert_eq!(out.get(2, 2, 0), 18.0);
        // Corner only sees a 2x2 window under zero padding.
        assert_eq!(out.get(0, 0, 0), 8.0);
    }

    #[test]
    fn conv_matches_loop_oracle_on_random_cases() {
        let mut rng = SplitMix64::new(77);
        for case in 0..120 {
            let h = 1 + rng.below(7);
            let w = 1 + rng.below(7);
            let cin = 1 + rng.below(3);
            let cout = 1 + rng.below(4);
            let k = [1, 3, 5][rng.below(3)];
            let t = random_tensor(&mut rng, h, w, cin, -5.0, 5.0);
            let cw = random_weights(&mut rng, k, k, cin, cout);
            let pad = if case % 2 == 0 { Padding::Zero } else { Padding::Reflect };
            let got = conv2d(&t, &cw, pad).unwrap();
            let want = conv2d_oracle(&t, &cw, pad);
            assert_close(&got, &want, 1e-5);
        }
    }

    #[test]
    fn conv_rejects_channel_mismatch_and_even_kernel() {
        let t = Tensor::filled(3, 3, 2, 1.0);
        let w = ConvWeights::zeros(3, 3, 1, 1);
        assert!(matches!(conv2d(&t, &w, Padding::Zero), Err(Error::Structural(_))));
        let w2 = ConvWeights::zeros(2, 2, 2, 1);
        assert!(matches!(conv2d(&t, &w2, Padding::Zero), Err(Error::Structural(_))));
    }

    #[test]
    fn relu_basics() {
        let t = Tensor::new(1, 3, 1, vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&t).data(), &[0.0, 0.0, 2.0]);
        let nonneg = Tensor::new(1, 3, 1, vec![0.0, 1.5, 9.0]).unwrap();
        assert_eq!(relu(&nonneg), nonneg);
    }

    #[test]
    fn relu_matches_scalar_loop() {
        let mut rng = SplitMix64::new(3);
        let t = random_tensor(&mut rng, 6, 5, 3, -300.0, 300.0);
        let out = relu(&t);
        for (o, i) in out.data().iter().zip(t.data()) {
            assert_eq!(*o, if *i > 0.0 { *i } else { 0.0 });
        }
    }

    #[test]
    fn clipped_relu_basics() {
        let t = Tensor::new(1, 3, 1, vec![-3.0, 100.0, 300.0]).unwrap();
        let out = clipped_relu(&t, 0.0, 255.0).unwrap();
        assert_eq!(out.data(), &[0.0, 100.0, 255.0]);
        let inside = Tensor::new(1, 3, 1, vec![0.0, 128.0, 255.0]).unwrap();
        assert_eq!(clipped_relu(&inside, 0.0, 255.0).unwrap(), inside);
        assert!(clipped_relu(&t, 5.0, 5.0).is_err());
        assert!(clipped_relu(&t, 9.0, 1.0).is_err());
    }

    #[test]
    fn clipped_relu_matches_clamp_loop() {
        let mut rng = SplitMix64::new(4);
        let t = random_tensor(&mut rng, 4, 4, 2, -500.0, 700.0);
        let out = clipped_relu(&t, 0.0, 255.0).unwrap();
        for (o, i) in out.data().iter().zip(t.data()) {
            assert_eq!(*o, i.clamp(0.0, 255.0));
        }
    }

    #[test]
    fn depth_to_space_single_site() {
        let t = Tensor::new(1, 1, 9, (0..9).map(|v| v as f64).collect()).unwrap();
        let out = depth_to_space(&t, 3).unwrap();
        assert_eq!(out.shape(), (3, 3, 1));
        assert_eq!(out.data(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn depth_to_space_block_one_is_identity() {
        let mut rng = SplitMix64::new(5);
        let t = random_tensor(&mut rng, 3, 4, 5, -2.0, 2.0);
        assert_eq!(depth_to_space(&t, 1).unwrap(), t);
    }

    #[test]
    fn depth_to_space_matches_index_formula() {
        let mut rng = SplitMix64::new(6);
        let t = random_tensor(&mut rng, 2, 2, 9, -9.0, 9.0);
        let out = depth_to_space(&t, 3).unwrap();
        // Per-element index oracle.
        for y in 0..2 {
            for x in 0..2 {
                for by in 0..3 {
                    for bx in 0..3 {
                        assert_eq!(out.get(y * 3 + by, x * 3 + bx, 0), t.get(y, x, by * 3 + bx));
                    }
                }
            }
        }
    }

    #[test]
    fn depth_to_space_rejects_indivisible_channels() {
        let t = Tensor::filled(2, 2, 8, 1.0);
        assert!(matches!(depth_to_space(&t, 3), Err(Error::Structural(_))));
    }

    #[test]
    fn space_to_depth_inverts() {
        let mut rng = SplitMix64::new(61);
        let t = random_tensor(&mut rng, 2, 3, 18, -4.0, 4.0);
        let up = depth_to_space(&t, 3).unwrap();
        let back = space_to_depth(&up, 3).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn add_basics() {
        let mut rng = SplitMix64::new(7);
        let a = random_tensor(&mut rng, 3, 3, 2, -5.0, 5.0);
        let zero = Tensor::zeros(3, 3, 2);
        assert_eq!(add(&a, &zero).unwrap(), a);
        let neg = a.map(|v| -v);
        assert_eq!(add(&a, &neg).unwrap(), zero);
        let b = Tensor::zeros(3, 4, 2);
        assert!(add(&a, &b).is_err());
    }

    #[test]
    fn add_matches_loop() {
        let mut rng = SplitMix64::new(8);
        let a = random_tensor(&mut rng, 4, 2, 3, -9.0, 9.0);
        let b = random_tensor(&mut rng, 4, 2, 3, -9.0, 9.0);
        let s = add(&a, &b).unwrap();
        for i in 0..a.len() {
            assert_eq!(s.data()[i], a.data()[i] + b.data()[i]);
        }
    }

    #[test]
    fn replicate_factor_one_is_identity() {
        let mut rng = SplitMix64::new(9);
        let t = random_tensor(&mut rng, 3, 3, 3, 0.0, 255.0);
        assert_eq!(nearest_upsample_replicate(&t, 1), t);
    }

    #[test]
    fn replicate_single_pixel() {
        let t = Tensor::new(1, 1, 1, vec![5.0]).unwrap();
        let out = nearest_upsample_replicate(&t, 3);
        assert_eq!(out.shape(), (1, 1, 9));
        assert!(out.data().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn replicate_matches_replication_oracle() {
        let mut rng = SplitMix64::new(10);
        let t = random_tensor(&mut rng, 2, 3, 3, 0.0, 255.0);
        let out = nearest_upsample_replicate(&t, 2);
        for y in 0..2 {
            for x in 0..3 {
                for g in 0..4 {
                    for c in 0..3 {
                        assert_eq!(out.get(y, x, g * 3 + c), t.get(y, x, c));
                    }
                }
            }
        }
        // Composing with depth_to_space gives nearest-neighbor upsampling.
        let up = depth_to_space(&out, 2).unwrap();
        for y in 0..4 {
            for x in 0..6 {
                for c in 0..3 {
                    assert_eq!(up.get(y, x, c), t.get(y / 2, x / 2, c));
                }
            }
        }
    }

    #[test]
    fn ops_are_pure_and_repeatable() {
        let mut rng = SplitMix64::new(11);
        let t = random_tensor(&mut rng, 5, 5, 2, -20.0, 280.0);
        let w = random_weights(&mut rng, 3, 3, 2, 3);
        let a = conv2d(&t, &w, Padding::Zero).unwrap();
        let b = conv2d(&t, &w, Padding::Zero).unwrap();
        assert_eq!(a, b);
        assert_eq!(relu(&t), relu(&t));
        assert_eq!(clipped_relu(&t, 0.0, 255.0).unwrap(), clipped_relu(&t, 0.0, 255.0).unwrap());
    }

    proptest! {
        #[test]
        fn depth_to_space_preserves_value_multiset(
            seed in 0u64..1000,
            h in 1usize..4,
            w in 1usize..4,
            block in 1usize..4,
            cout in 1usize..3,
        ) {
            let mut rng = SplitMix64::new(seed);
            let c = block * block * cout;
            let t = random_tensor(&mut rng, h, w, c, -100.0, 100.0);
            let out = depth_to_space(&t, block).unwrap();
            prop_assert_eq!(out.len(), t.len());
            let mut a: Vec<u64> = t.data().iter().map(|v| v.to_bits()).collect();
            let mut b: Vec<u64> = out.data().iter().map(|v| v.to_bits()).collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn clip_is_identity_in_range(seed in 0u64..1000) {
            let mut rng = SplitMix64::new(seed);
            let t = random_tensor(&mut rng, 3, 3, 2, 0.0, 255.0);
            prop_assert_eq!(clipped_relu(&t, 0.0, 255.0).unwrap(), t);
        }

        #[test]
        fn conv_oracle_agreement(seed in 0u64..300) {
            let mut rng = SplitMix64::new(seed);
            let h = 1 + rng.below(5);
            let w = 1 + rng.below(5);
            let cin = 1 + rng.below(3);
            let cout = 1 + rng.below(3);
            let t = random_tensor(&mut rng, h, w, cin, -3.0, 3.0);
            let cw = random_weights(&mut rng, 3, 3, cin, cout);
            let got = conv2d(&t, &cw, Padding::Zero).unwrap();
            let want = conv2d_oracle(&t, &cw, Padding::Zero);
            for (a, b) in got.data().iter().zip(want.data()) {
                prop_assert!((a - b).abs() <= 1e-5);
            }
        }
    }
}
