pub use skw_core as core;
