//! A self-contained laboratory for INT8 static post-training quantization
//! (PTQ) of small super-resolution CNNs.
//!
//! The crate provides everything needed to study how the choice of the
//! representative image (RI) used for calibration affects quantized model
//! quality, and to remove the trailing clipped-ReLU layer that mobile SR
//! models usually carry as a PTQ safety net:
//!
//! - [`tensor`]: a deterministic CPU reference engine (conv2d, ReLU,
//!   clipped ReLU, depth-to-space, residual add, nearest replication).
//! - [`model`]: a zoo of five tiny scale-3 SR architectures with a
//!   clip/no-clip switch and a manifest + weight-blob file format.
//! - [`train`]: a seeded FP32 training loop (Adam, warmup LR schedule,
//!   random LR patch sampling) with analytic backprop for every layer kind.
//! - [`quant`]: min/max calibration, affine quantization parameters, and a
//!   simulated-INT8 (fake-quant) forward pass.
//! - [`ri`]: representative-image classification from FP32 output-outlier
//!   statistics and the GB/LIBB/LIPB blur augmentations, composed as the
//!   clip-free quantization pipeline (`cfqp`).
//! - [`metrics`]: Y-channel PSNR, SSIM, and model-vs-testset evaluation.
//! - [`data`]: PGM image I/O, bicubic resampling, and deterministic
//!   synthetic corpus generation.
//!
//! All operations are pure functions over immutable inputs and are seeded
//! where randomness is involved, so every experiment in the crate is
//! reproducible bit for bit.

pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod quant;
pub mod ri;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{ConvWeights, Padding, Tensor};
