pub mod eval_cmd;
pub mod generate;
pub mod misc;
pub mod train_cmd;

use std::path::Path;

/// FNV-1a of the config file bytes, recorded in manifests so reruns can be
/// checked for config drift.
pub fn config_hash(path: Option<&Path>) -> anyhow::Result<String> {
    let Some(path) = path else {
        return Ok("default".into());
    };
    let bytes = std::fs::read(path)?;
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    Ok(format!("{h:016x}"))
}

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
