use proptest::prelude::*;
use relaylab::prob::entropy_of;
use relaylab::{Alphabet, ConditionalKernel, JointDistribution, Var};

fn var(name: &str, k: usize) -> Var {
    Var::new(name, Alphabet::new(name.to_uppercase(), k))
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Joint over `a`, `b`, `c` with sizes in 1..=3 and some exact zeros.
fn joint3() -> impl Strategy<Value = JointDistribution> {
    (1usize..=3, 1usize..=3, 1usize..=3)
        .prop_flat_map(|(na, nb, nc)| {
            let len = na * nb * nc;
            (
                Just((na, nb, nc)),
                prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], len),
            )
        })
        .prop_filter("some mass", |(_, w)| w.iter().sum::<f64>() > 0.0)
        .prop_map(|((na, nb, nc), w)| {
            JointDistribution::new(vec![var("a", na), var("b", nb), var("c", nc)], normalized(w))
                .unwrap()
        })
}

/// Plain-loop marginal used as an oracle.
fn marginal_oracle(j: &JointDistribution, keep: &[usize]) -> Vec<f64> {
    let shape = j.shape();
    let out_len: usize = keep.iter().map(|&k| shape[k]).product();
    let mut out = vec![0.0; out_len];
    let mut idx = vec![0usize; shape.len()];
    for &p in j.probs() {
        let mut o = 0;
        for &k in keep {
            o = o * shape[k] + idx[k];
        }
        out[o] += p;
        for d in (0..shape.len()).rev() {
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

fn h(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn information_is_nonnegative(j in joint3()) {
        prop_assert!(j.entropy(&["a", "b", "c"]).unwrap() >= 0.0);
        prop_assert!(j.mutual_information(&["a"], &["b"]).unwrap() >= 0.0);
        prop_assert!(j.conditional_mutual_information(&["a"], &["b"], &["c"]).unwrap() >= 0.0);
        prop_assert!(j.conditional_mutual_information(&["a", "c"], &["b"], &[] as &[&str]).unwrap() >= 0.0);
    }

    #[test]
    fn entropies_match_direct_sums(j in joint3()) {
        let hab = j.entropy(&["a", "b"]).unwrap();
        prop_assert!((hab - h(&marginal_oracle(&j, &[0, 1]))).abs() < 1e-12);
        prop_assert!((entropy_of(j.probs()) - h(j.probs())).abs() < 1e-12);
    }

    #[test]
    fn chain_rule(j in joint3()) {
        // I(A; B, C) = I(A; C) + I(A; B | C)
        let whole = j.mutual_information(&["a"], &["b", "c"]).unwrap();
        let split = j.mutual_information(&["a"], &["c"]).unwrap()
            + j.conditional_mutual_information(&["a"], &["b"], &["c"]).unwrap();
        prop_assert!((whole - split).abs() < 1e-12);

        // I(A; B | C) = H(A, C) + H(B, C) − H(A, B, C) − H(C)
        let hs = |k: &[usize]| h(&marginal_oracle(&j, k));
        let oracle = hs(&[0, 2]) + hs(&[1, 2]) - hs(&[0, 1, 2]) - hs(&[2]);
        let got = j.conditional_mutual_information(&["a"], &["b"], &["c"]).unwrap();
        prop_assert!((got - oracle.max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn marginalization_commutes(j in joint3()) {
        let two_step = j.marginalize(&["c", "a"]).unwrap().marginalize(&["a"]).unwrap();
        let direct = j.marginalize(&["a"]).unwrap();
        prop_assert!(two_step.max_abs_diff(&direct).unwrap() < 1e-15);
        let reordered = j.marginalize(&["c", "a"]).unwrap();
        let oracle = marginal_oracle(&j, &[2, 0]);
        for (x, y) in reordered.probs().iter().zip(&oracle) {
            prop_assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn compose_then_marginalize_recovers_root(
        root in prop::collection::vec(0.01f64..1.0, 3),
        kernel in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 3),
    ) {
        prop_assume!(kernel.iter().all(|r| r.iter().sum::<f64>() > 0.0));
        let roots = JointDistribution::new(vec![var("a", 3)], normalized(root)).unwrap();
        let rows: Vec<Vec<f64>> = kernel.into_iter().map(normalized).collect();
        let k = ConditionalKernel::from_rows(vec![var("a", 3)], vec![var("b", 2)], &rows).unwrap();
        let j = JointDistribution::compose(&roots, &[k]).unwrap();
        let total: f64 = j.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(j.marginalize(&["a"]).unwrap().max_abs_diff(&roots).unwrap() < 1e-15);
        for a in 0..3 {
            for b in 0..2 {
                let want = roots.probs()[a] * rows[a][b];
                prop_assert!((j.prob(&[a, b]) - want).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(JointDistribution::new(vec![var("a", 2)], vec![0.5, 0.6]).is_err());
    assert!(JointDistribution::new(vec![var("a", 2)], vec![1.5, -0.5]).is_err());
    assert!(JointDistribution::new(vec![var("a", 2), var("a", 2)], vec![0.25; 4]).is_err());
    let j = JointDistribution::uniform(vec![var("a", 2), var("b", 2)]).unwrap();
    assert!(j.marginalize(&["z"]).is_err());
    assert!(j.conditional_mutual_information(&["a"], &["a"], &[] as &[&str]).is_err());
    // Out-of-order chain: b's factor needs c first.
    let k = ConditionalKernel::from_rows(vec![var("c", 2)], vec![var("d", 2)], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!(JointDistribution::compose(&j, &[k]).is_err());
}

#[test]
fn known_values() {
    let j = JointDistribution::uniform(vec![var("a", 2), var("b", 2)]).unwrap();
    assert!((j.entropy(&["a"]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(j.mutual_information(&["a"], &["b"]).unwrap(), 0.0);
    let same = JointDistribution::new(vec![var("a", 2), var("b", 2)], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
    assert!((same.mutual_information(&["a"], &["b"]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
}
