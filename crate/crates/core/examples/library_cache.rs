//! Saves a walk library to a cache directory and loads it back, keyed by the
//! graph's content hash and the depth.
//!
//! cargo run --release --example library_cache

use std::time::Instant;

use rabbit_patrol::graph::{all_pairs_shortest_paths, PatrolGraph};
use rabbit_patrol::walks::WalkLibrary;

fn main() -> rabbit_patrol::Result<()> {
    let cache = tempfile::tempdir().map_err(|e| rabbit_patrol::Error::io("tempdir", e))?;
    let grid = PatrolGraph::grid(5, 5, 50.0, &[0, 4, 12, 20, 24], 10.0)?;
    let paths = all_pairs_shortest_paths(&grid);
    let file = WalkLibrary::cache_path(cache.path(), &grid, 5);
    println!("cache file {}", file.display());

    let started = Instant::now();
    let built = WalkLibrary::load_or_build(cache.path(), &grid, &paths, 5, None)?;
    println!("built  {} walks in {:?}", built.total_walks(), started.elapsed());

    let started = Instant::now();
    let loaded = WalkLibrary::load_or_build(cache.path(), &grid, &paths, 5, None)?;
    println!("loaded {} walks in {:?}", loaded.total_walks(), started.elapsed());
    assert_eq!(built, loaded);

    let moved = grid.with_priority(&[0, 24])?;
    println!(
        "other priority set -> other file: {}",
        WalkLibrary::cache_path(cache.path(), &moved, 5) != file
    );

    let capped = rabbit_patrol::walks::build_walk_library(&grid, &paths, 5, Some(10_000));
    if let Err(e) = capped {
        println!("with a 10 kB cap: {e}");
    }
    Ok(())
}
