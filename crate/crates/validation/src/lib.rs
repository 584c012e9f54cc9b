//! Support code for the acceptance suite in `tests/acceptance.rs`.

use std::path::PathBuf;

pub mod pauli;

/// Path of the `hopfsim` executable built alongside this test binary.
///
/// Test executables live in `<target>/<profile>/deps/`; the CLI binary sits
/// one level up. A workspace test run always builds it, since the CLI crate
/// has integration tests of its own.
pub fn cli_binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let path = profile_dir.join(format!("hopfsim{}", std::env::consts::EXE_SUFFIX));
    path.is_file().then_some(path)
}
