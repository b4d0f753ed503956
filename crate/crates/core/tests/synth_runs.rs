//! Short constructions across a small parameter grid.

use dioph_lab::lattice;
use dioph_lab::pattern::{KValue, Letter};
use dioph_lab::synth::{self, SynthConfig, SynthResult};

fn run(lambda: f64, k: u32) -> SynthResult {
    synth::run(&SynthConfig { lambda, k, steps: 16, ..SynthConfig::default() })
        .unwrap_or_else(|e| panic!("({lambda}, {k}): {e}"))
}

fn check(lambda: f64, k: u32) {
    let res = run(lambda, k);
    assert!(res.conditions.exact_hold(), "({lambda}, {k}) exact conditions");
    let word = res.realized_word.as_ref().expect("word");
    let unit = format!("{}B", "A".repeat(k as usize));
    assert!(
        (0..word.len() / 2).any(|s| word.eventual_period(s).as_deref() == Some(unit.as_str())),
        "({lambda}, {k}) word {word}"
    );
    assert_eq!(res.k_estimate.as_ref().map(|e| e.k_value), Some(KValue::Finite(k as usize)));
    // consecutive independent triples with different spans give four independent vectors
    for (letter, &(nu, j)) in word.letters.iter().zip(&word.witnesses) {
        if *letter == Letter::B {
            let mut vs: Vec<_> = res.vectors[nu - 1..=nu + 1].to_vec();
            vs.extend(res.vectors[j - 1..=j + 1].iter().cloned());
            assert_eq!(lattice::rank(&vs).unwrap(), 4, "({lambda}, {k}) at {nu}");
        }
    }
}

#[test]
fn small_lambda_words() {
    for k in 1..=3 {
        check(0.4, k);
    }
}

#[test]
fn half_words() {
    for k in 1..=3 {
        check(0.5, k);
    }
}

#[test]
fn large_lambda_words() {
    for k in 1..=3 {
        check(0.6, k);
    }
}

#[test]
fn same_config_same_vectors() {
    assert_eq!(run(0.45, 2).vectors, run(0.45, 2).vectors);
}
