//! Batch replay of a fixture directory, the library side of `arshop replay`.
//! Pass a fixture directory to override the default aisle set.

use arshopping::harness;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let fixtures = std::env::args().nth(1).unwrap_or_else(|| format!("{root}/aisle"));
    let catalog = format!("{root}/catalog.json");

    let report = harness::validate(&fixtures, &catalog);
    println!("validate: {report}");

    let out = tempfile::tempdir()?;
    let summary = harness::run_replay(&fixtures, &catalog, out.path(), None)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    for entry in std::fs::read_dir(out.path().join("frames"))? {
        println!("wrote {}", entry?.path().display());
    }
    Ok(())
}
