use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relaylab::process::{block_var, STATE_STEMS};
use relaylab::{BlockProcess, NewSchemeParams, RelayChannel};

fn block(l: usize) -> Vec<String> {
    STATE_STEMS.iter().map(|s| block_var(s, l)).collect()
}

fn random_instance(seed: u64) -> (RelayChannel, NewSchemeParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = RelayChannel::random([2, 2, 2, 2], &mut rng);
    let p = NewSchemeParams::random(&ch, 2, &mut rng);
    (ch, p)
}

#[test]
fn memoryless_two_block_law_is_a_product() {
    let ch = RelayChannel::from_fn([2, 2, 2, 2], |x, x1, y, y1| {
        let fy = if y == (x ^ x1) { 0.9 } else { 0.1 };
        let fy1 = if y1 == x { 0.85 } else { 0.15 };
        fy * fy1
    })
    .unwrap();
    let p = NewSchemeParams::from_rows(
        &[vec![0.3, 0.7], vec![0.3, 0.7]],
        &[vec![0.6, 0.4], vec![0.6, 0.4]],
        &[vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![vec![0.4, 0.6], vec![0.7, 0.3]]],
    )
    .unwrap();
    assert!(p.is_memoryless());
    let bp = BlockProcess::new(&ch, &p).unwrap();
    let two = bp.k_block_joint(2).unwrap();
    let pi = bp.stationary.probs();
    let s = pi.len();
    for a in 0..s {
        for b in 0..s {
            assert!((two.probs()[a * s + b] - pi[a] * pi[b]).abs() < 1e-15);
        }
    }
    // p(x) is the common input row.
    let px = bp.stationary.marginalize(&["x"]).unwrap();
    assert!((px.probs()[0] - 0.3).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transition_rows_are_distributions(seed in any::<u64>()) {
        let (ch, p) = random_instance(seed);
        let bp = BlockProcess::new(&ch, &p).unwrap();
        for row in bp.transition.rows() {
            let s: f64 = row.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
        prop_assert!(bp.residual <= 1e-12);
    }

    #[test]
    fn three_block_joint_is_stationary_and_markov(seed in any::<u64>()) {
        let (ch, p) = random_instance(seed);
        let bp = BlockProcess::new(&ch, &p).unwrap();
        let three = bp.k_block_joint(3).unwrap();
        for l in 1..=3 {
            let m = three.marginalize(&block(l)).unwrap();
            let diff = m
                .probs()
                .iter()
                .zip(bp.stationary.probs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            prop_assert!(diff < 1e-9, "block {} marginal off by {}", l, diff);
        }
        let cmi = three
            .conditional_mutual_information(&block(1), &block(3), &block(2))
            .unwrap();
        prop_assert!(cmi.abs() < 1e-12, "I(block1; block3 | block2) = {}", cmi);
    }

    #[test]
    fn compressor_law_is_respected(seed in any::<u64>()) {
        let (ch, p) = random_instance(seed);
        let bp = BlockProcess::new(&ch, &p).unwrap();
        let j = bp.stationary.marginalize(&["y1", "x1", "yh"]).unwrap();
        for y1 in 0..2 {
            for x1 in 0..2 {
                let mass = j.prob(&[y1, x1, 0]) + j.prob(&[y1, x1, 1]);
                if mass > 1e-9 {
                    let got = j.prob(&[y1, x1, 0]) / mass;
                    let want = p.compressor.row(y1 * 2 + x1)[0];
                    prop_assert!((got - want).abs() < 1e-9);
                }
            }
        }
    }
}
