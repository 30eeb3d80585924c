use std::collections::HashMap;

use proptest::prelude::*;
use rand_core::{RngCore, SeedableRng};

use tldr_core::split::rng::{permutation, Xoshiro256StarStar};
use tldr_core::split::{output_paths, split_dataset, split_file, SplitSpec};

#[test]
fn generator_matches_rand_xoshiro() {
    for seed in [0u64, 1, 42, 0xDEAD_BEEF, u64::MAX] {
        let mut ours = Xoshiro256StarStar::seed_from_u64(seed);
        let mut theirs = rand_xoshiro::Xoshiro256StarStar::seed_from_u64(seed);
        for _ in 0..1000 {
            assert_eq!(ours.next_u64(), theirs.next_u64(), "seed {seed}");
        }
    }
}

/// Lemire's nearly-divisionless bounded draw, written out separately.
fn lemire(rng: &mut rand_xoshiro::Xoshiro256StarStar, s: u64) -> u64 {
    let mut m = (rng.next_u64() as u128) * (s as u128);
    if (m as u64) < s {
        let t = s.wrapping_neg() % s;
        while (m as u64) < t {
            m = (rng.next_u64() as u128) * (s as u128);
        }
    }
    (m >> 64) as u64
}

#[test]
fn permutation_matches_an_independent_fisher_yates() {
    for (n, seed) in [(1usize, 0u64), (2, 1), (10, 7), (100, 12345), (1000, 0)] {
        let mut rng = rand_xoshiro::Xoshiro256StarStar::seed_from_u64(seed);
        let mut expected: Vec<usize> = (0..n).collect();
        let mut i = n;
        while i > 1 {
            i -= 1;
            let j = lemire(&mut rng, i as u64 + 1) as usize;
            expected.swap(i, j);
        }
        assert_eq!(permutation(n, seed), expected, "n={n} seed={seed}");
    }
}

#[test]
fn different_seeds_give_different_permutations() {
    assert_ne!(permutation(100, 1), permutation(100, 2));
    assert_eq!(permutation(100, 1), permutation(100, 1));
}

#[test]
fn file_split_is_reproducible_and_partitions_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pairs.jsonl");
    let lines: Vec<String> = (0..1000).map(|i| format!(r#"{{"post_id":"p{i}","k":{}}}"#, i % 37)).collect();
    std::fs::write(&input, lines.join("\n") + "\n").unwrap();

    let run = |name: &str, seed: u64| {
        let prefix = dir.path().join(name);
        let m = split_file(&input, &prefix, &SplitSpec::with_seed(seed)).unwrap();
        let (paths, _) = output_paths(&prefix);
        let bytes: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        (m, bytes)
    };
    let (m1, a) = run("a", 9);
    let (_, b) = run("b", 9);
    let (_, c) = run("c", 10);
    assert_eq!((m1.train.size, m1.val.size, m1.test.size), (600, 200, 200));
    assert_eq!(a, b);
    assert_ne!(a, c);

    let count = |lines: &mut dyn Iterator<Item = &str>| {
        let mut m: HashMap<String, usize> = HashMap::new();
        for l in lines {
            *m.entry(l.to_string()).or_default() += 1;
        }
        m
    };
    let seen = count(&mut a.iter().flat_map(|part| std::str::from_utf8(part).unwrap().lines()));
    let want = count(&mut lines.iter().map(String::as_str));
    assert_eq!(seen, want);
}

proptest! {
    #[test]
    fn sizes_always_cover_the_input(n in 0usize..5000, a in 1u32..98, b in 1u32..98) {
        prop_assume!(a + b < 100);
        let ratios = [a as f64 / 100.0, b as f64 / 100.0, (100 - a - b) as f64 / 100.0];
        let spec = SplitSpec { ratios, seed: 0 };
        prop_assume!(spec.validate().is_ok());
        let (tr, va, te) = spec.sizes(n).unwrap();
        prop_assert_eq!(tr + va + te, n);
        prop_assert_eq!(tr, n * a as usize / 100);
        prop_assert_eq!(va, n * b as usize / 100);
    }

    #[test]
    fn in_memory_split_is_a_partition(n in 0usize..400, seed in any::<u64>()) {
        let s = split_dataset((0..n).collect::<Vec<_>>(), &SplitSpec::with_seed(seed)).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(s.train.windows(2).all(|w| w[0] < w[1]));
    }
}
