//! Regenerates the CLI test fixtures.
//!
//! ```text
//! cargo run -p sit2stand-cli --example make_fixtures [DIR]
//! ```

#[path = "../tests/support/mod.rs"]
mod support;

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| support::fixture_dir().to_path_buf());
    for (name, bytes) in support::all() {
        let path = dir.join(name);
        std::fs::create_dir_all(path.parent().expect("fixture paths have a parent"))?;
        std::fs::write(&path, bytes)?;
        println!("{}", path.display());
    }
    Ok(())
}
