pub mod config;
pub mod error;
pub mod formats;
pub mod io;
pub mod manifest;
pub mod overlay;
pub mod pipeline;
