//! Maritime video processing primitives.
//!
//! The crate is `no_std` (it needs `alloc`) and free of IO. It covers the
//! four core stages of a maritime video pipeline plus the tooling used to
//! check them:
//!
//! * [`imgcore`]: frames, grayscale, Sobel gradients, edge maps and color
//!   distributions.
//! * [`horizon`]: Hough line candidates scored by the statistical distance
//!   between the regions above and below each candidate, reported as `(Y, α)`.
//! * [`registration`]: horizon alignment (roll and pitch), landmark similarity
//!   fits and horizon strip cross-correlation (yaw as a horizontal shift).
//! * [`background`]: single Gaussian and adaptive mixture background models.
//! * [`foreground`]: connected components, greedy centroid tracking and
//!   static/dynamic classification.
//! * [`evalbench`]: error percentiles, dataset statistics and detection metrics.
//! * [`synth`]: deterministic synthetic maritime scenes with exact ground truth.
//!
//! Every float operation that feeds a pixel or a decision goes through
//! `libm`, so outputs are bit-identical on every platform.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` is used deliberately so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod math;

pub mod background;
pub mod evalbench;
pub mod foreground;
pub mod horizon;
pub mod imgcore;
pub mod registration;
pub mod rng;
pub mod synth;

pub use background::{BackgroundError, BackgroundMethod, BackgroundSubtractor, ForegroundMask};
pub use foreground::{Blob, BoundingBox, MotionLabel, Track, Tracker};
pub use horizon::{HorizonConfig, HorizonError, HorizonEstimate, HorizonLine, LineCandidate};
pub use imgcore::{Channels, EdgeMap, Frame, ImageError};
pub use registration::{FrameTransform, Interpolation, RegistrationError};
