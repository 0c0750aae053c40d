//! Shared numerical engines.

pub mod line;
pub mod osc;
pub mod prefix;
pub mod quad;
pub mod roots;
pub mod triangle;

pub use osc::osc_segment_integral;
pub use prefix::{prefix_transform, OscTransform};
pub use roots::{root_polish, winding_count, SearchBox};
pub use triangle::{triangle_double_integral, triangle_prefix};
