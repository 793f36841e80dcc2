//! Frozen reference outputs. If one of these fails after an intended change,
//! regenerate with `cargo run --release --example regenerate_fixtures` and
//! review the diff.

use std::fs;
use std::path::{Path, PathBuf};

use solnav::commands::{encode_observation, episode_prompt};
use solnav::dataset::{build_samples, read_samples};
use solnav::episode::Episode;
use solnav::metrics::{read_metrics, summarize_records};
use solnav::GridConfig;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn golden(name: &str) -> String {
    fs::read_to_string(fixtures().join("golden").join(name)).unwrap()
}

const FRAMES: [&str; 3] = ["frame_seed7_start", "frame_seed7_rooms_start", "frame_seed7_cluttered_start"];

#[test]
fn frames_encode_to_their_goldens_every_time() {
    for name in FRAMES {
        let dir = fixtures().join(name);
        for n in [6, 4, 2] {
            let want = golden(&format!("{name}.n{n}.txt"));
            for _ in 0..2 {
                assert_eq!(encode_observation(&dir, n, 0, true).unwrap(), want, "{name} at {n}x{n}");
            }
        }
        let plain = encode_observation(&dir, 6, 0, false).unwrap();
        assert_eq!(plain, golden(&format!("{name}.n6.nodepth.txt")));
        assert!(!plain.contains("depth="));
    }
}

#[test]
fn depth_free_golden_is_the_full_one_minus_depth() {
    for name in FRAMES {
        let full = golden(&format!("{name}.n6.txt"));
        let plain = golden(&format!("{name}.n6.nodepth.txt"));
        assert_eq!(full.lines().count(), plain.lines().count());
        for (a, b) in full.lines().zip(plain.lines()) {
            let cut = a.find(" depth=").unwrap();
            let rest = &a[cut + 1..];
            let after = rest.find(' ').map_or("", |i| &rest[i..]);
            assert_eq!(format!("{}{after}", &a[..cut]), b);
        }
    }
}

#[test]
fn episode_prompts_match_goldens() {
    let dir = fixtures().join("episode_seed7_corridor");
    let grid = GridConfig::default();
    assert_eq!(episode_prompt(&dir, 0, &grid, 4).unwrap(), golden("prompt_seed7_step0.txt"));
    let ep = Episode::load_dir(&dir).unwrap();
    let last = ep.actions.len() - 1;
    assert_eq!(episode_prompt(&dir, last, &grid, 4).unwrap(), golden(&format!("prompt_seed7_step{last}.txt")));
}

#[test]
fn samples_match_golden() {
    let ep = Episode::load_dir(&fixtures().join("episode_seed7_corridor")).unwrap();
    let built = build_samples(&ep, &GridConfig::default(), 4).unwrap();
    let frozen = read_samples(&fixtures().join("golden").join("samples_seed7.jsonl")).unwrap();
    assert_eq!(built, frozen);
    assert_eq!(built.len(), ep.actions.len().div_ceil(4));
    assert_eq!(built[0].prompt.matches("Observation t-").count(), 1);
}

#[test]
fn metrics_fixture_validates() {
    let file = read_metrics(&fixtures().join("metrics_oracle_corridor.jsonl")).unwrap();
    assert_eq!(file.records.len(), 4);
    assert_eq!(summarize_records(&file.records).unwrap(), file.summary);
    assert_eq!(file.summary.sr, 1.0);
}
