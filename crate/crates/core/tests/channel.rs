use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relaylab::{load_channel, RelayChannel};

const BSC_PAIR: &str = r#"{
  "alphabets": {"x": 2, "x1": 2, "y": 2, "y1": 2},
  "kernel": [
    {"x": 0, "x1": 0, "rows": [[0.72, 0.18], [0.08, 0.02]]},
    {"x": 0, "x1": 1, "rows": [[0.72, 0.18], [0.08, 0.02]]},
    {"x": 1, "x1": 0, "rows": [[0.02, 0.08], [0.18, 0.72]]},
    {"x": 1, "x1": 1, "rows": [[0.02, 0.08], [0.18, 0.72]]}
  ]
}"#;

#[test]
fn channel_document_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = RelayChannel::random([2, 3, 2, 3], &mut rng);
    let back = load_channel(&ch.to_json()).unwrap();
    assert_eq!(back.sizes(), ch.sizes());
    assert_eq!(back.kernel().probs(), ch.kernel().probs());
}

#[test]
fn sampling_matches_kernel() {
    let ch = RelayChannel::from_fn([2, 2, 2, 3], |x, x1, y, y1| {
        let py = if y == (x ^ x1) { 0.8 } else { 0.2 };
        py * [0.5, 0.3, 0.2][y1]
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws = 40_000;
    let mut counts = [[0usize; 3]; 2];
    for _ in 0..draws {
        let (y, y1) = ch.sample_output(1, 0, &mut rng).unwrap();
        counts[y][y1] += 1;
    }
    for y in 0..2 {
        for y1 in 0..3 {
            let p = ch.prob(1, 0, y, y1);
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            let f = counts[y][y1] as f64 / draws as f64;
            assert!((f - p).abs() < 3.0 * sd, "cell ({y},{y1}): {f} vs {p}");
        }
    }
    assert!(ch.sample_output(2, 0, &mut rng).is_err());
}


#[test]
fn independent_flips_load_as_a_product() {
    let ch = load_channel(BSC_PAIR).unwrap();
    let flip = |a: usize, b: usize, e: f64| if a == b { 1.0 - e } else { e };
    for x in 0..2 {
        for x1 in 0..2 {
            for y in 0..2 {
                for y1 in 0..2 {
                    let want = flip(x, y, 0.1) * flip(x, y1, 0.2);
                    assert!((ch.prob(x, x1, y, y1) - want).abs() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn bsc_flip_frequency() {
    let ch = load_channel(BSC_PAIR).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 100_000;
    let flips = (0..draws)
        .filter(|_| ch.sample_output(0, 1, &mut rng).unwrap().0 == 1)
        .count();
    let f = flips as f64 / draws as f64;
    assert!((f - 0.1).abs() <= 0.01, "{f}");
}

#[test]
fn sampling_is_deterministic_per_state() {
    let ch = load_channel(BSC_PAIR).unwrap();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        (0..64).map(|i| ch.sample_output(i % 2, 0, &mut rng).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn loading_policy() {
    let ident = r#"{"alphabets":{"x":2,"x1":1,"y":2,"y1":2},"kernel":[
        {"x":0,"x1":0,"rows":[[1,0],[0,0]]},{"x":1,"x1":0,"rows":[[0,0],[0,1]]}]}"#;
    let ch = load_channel(ident).unwrap();
    assert_eq!(ch.prob(1, 0, 1, 1), 1.0);
    let short = ident.replace("[[0,0],[0,1]]", "[[0,0],[0,0.9]]");
    assert!(matches!(load_channel(&short), Err(relaylab::Error::Validation(_))));
    let noisy = ident.replace("[[0,0],[0,1]]", "[[0,0],[0,0.9999999999]]");
    let ch = load_channel(&noisy).unwrap();
    assert_eq!(ch.prob(1, 0, 1, 1), 1.0);
    let negative = ident.replace("[[0,0],[0,1]]", "[[-0.5,0],[0,1.5]]");
    assert!(matches!(load_channel(&negative), Err(relaylab::Error::Validation(_))));
    assert!(matches!(load_channel("{"), Err(relaylab::Error::Parse(_))));
    let missing = ident.replace(r#",{"x":1,"x1":0,"rows":[[0,0],[0,1]]}"#, "");
    assert!(load_channel(&missing).is_err());
}
