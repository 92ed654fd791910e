//! EDOKS: a full-reference perceptual image similarity metric.
//!
//! The metric combines two dissimilarity terms:
//!
//! * a **texture term** — the Earth Mover's Distance between variable-size
//!   texture signatures built from Gabor filter-bank energies of image
//!   patches, clustered with the Meng-Hee Heng algorithm;
//! * a **color term** — the mean per-pixel Euclidean distance between the two
//!   images in the Oklab perceptual color space.
//!
//! The weighted combination `EDOK = alpha * EMD + (1 - alpha) * OK` is a
//! dissimilarity; its reciprocal `EDOKS = 1 / (EDOK + c)` is the similarity
//! score. Both terms also produce per-pixel difference maps that explain
//! where the score comes from.
//!
//! ```no_run
//! use edoks::metric::{edoks, MetricConfig};
//!
//! let x = image::open("a.png").unwrap().into_rgb8();
//! let y = image::open("b.png").unwrap().into_rgb8();
//! let report = edoks(&x, &y, &MetricConfig::default()).unwrap();
//! println!("edoks = {}", report.edoks);
//! ```

pub mod color;
pub mod emd;
pub mod error;
pub mod eval;
pub mod gabor;
pub mod metric;
pub mod raster;
pub mod render;
pub mod signature;

pub use error::{Error, Result};
pub use metric::{edoks, MetricConfig, MetricReport};
