pub mod averaging;
pub mod density;
pub mod error;
pub mod exact;
pub mod folner;
pub mod gallery;
pub mod group;
pub mod measures;
pub mod orbit;
pub mod relations;
pub mod space;
pub mod template;
pub mod transport;

pub use error::{Error, Result};
