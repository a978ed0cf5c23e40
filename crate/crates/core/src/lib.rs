//! Exploratory landscape analysis for mixed-variable black-box problems.
//!
//! Categorical variables are encoded three ways (one-hot, target encoding and
//! per-row SHAP attributions), 38 landscape features are computed from the
//! encoded initial design, and the features drive random-forest algorithm
//! selectors evaluated by relative expected running time. The two encodings'
//! selectors can be combined by a meta model or by prediction confidence.

pub mod design;
pub mod ela;
pub mod encoding;
pub mod error;
pub mod forest;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod portfolio;
pub mod problem;
pub mod seed;
pub mod selector;

pub use error::{Error, Result};
