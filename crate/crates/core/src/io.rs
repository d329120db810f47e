//! Shared output helpers.

/// Version tag written into every JSON and CSV metadata record.
pub const SCHEMA_VERSION: u32 = 1;
