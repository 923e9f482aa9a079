//! Regenerates the bundled FCIDUMP fixtures:
//! `cargo run -p sbci-core --example make_fixtures -- crates/core/tests/data`

use std::path::PathBuf;

use sbci_core::fci::{synthetic_fci_problem, write_fcidump_file};

fn main() -> sbci_core::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "tests/data".into());
    std::fs::create_dir_all(&dir).map_err(|e| sbci_core::Error::InvalidArgument(e.to_string()))?;
    write_fcidump_file(&synthetic_fci_problem(4, 2, 11), dir.join("h4_2e.fcidump"))?;
    write_fcidump_file(&synthetic_fci_problem(6, 4, 23), dir.join("h6_4e.fcidump"))?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
