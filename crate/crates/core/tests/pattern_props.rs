use proptest::prelude::*;
use rug::Integer;

use dioph_lab::lattice::{self, IntVec};
use dioph_lab::pattern::{k_estimate, KValue, PatternWord};

fn vec4() -> impl Strategy<Value = IntVec> {
    prop::array::uniform4(-5i64..=5).prop_map(IntVec::from_i64)
}

fn triple() -> impl Strategy<Value = Vec<IntVec>> {
    prop::collection::vec(vec4(), 3).prop_filter("independent", |v| lattice::rank(v).unwrap() == 3)
}

fn same_span(t1: &[IntVec], t2: &[IntVec]) -> bool {
    let n = lattice::normal(&t1[0], &t1[1], &t1[2]).unwrap();
    t2.iter().all(|v| lattice::in_hyperplane(&n, v))
}

fn shuffle(t: &[IntVec], ops: &[(usize, usize, i64)]) -> Vec<IntVec> {
    let mut out = t.to_vec();
    for &(i, j, c) in ops {
        if i != j {
            out[i] = out[i].add_mul(&Integer::from(c), &out[j]);
        }
    }
    out
}

fn ops() -> impl Strategy<Value = Vec<(usize, usize, i64)>> {
    prop::collection::vec((0usize..3, 0usize..3, -3i64..=3), 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn letter_ignores_the_basis_of_each_triple(t1 in triple(), t2 in triple(), o1 in ops(), o2 in ops()) {
        let expect = same_span(&t1, &t2);
        prop_assert_eq!(same_span(&shuffle(&t1, &o1), &shuffle(&t2, &o2)), expect);
        // a triple always shares its span with any change of basis of itself
        prop_assert!(same_span(&t1, &shuffle(&t1, &o1)));
    }

    #[test]
    fn periodic_words_give_their_run_length(k in 0usize..5, reps in 4usize..10, prefix in "[AB]{0,3}") {
        let unit = format!("{}B", "A".repeat(k));
        let word = PatternWord::from_letters(&format!("{prefix}{}", unit.repeat(reps))).unwrap();
        prop_assert_eq!(word.eventual_period(prefix.len()), Some(unit));
        if prefix.chars().filter(|&c| c == 'A').count() <= k {
            prop_assert_eq!(k_estimate(&word).unwrap().k_value, KValue::Finite(k));
        }
    }
}

#[test]
fn long_open_run_means_infinite() {
    let word = PatternWord::from_letters(&format!("ABABAB{}", "A".repeat(30))).unwrap();
    assert_eq!(k_estimate(&word).unwrap().k_value, KValue::Infinite);
}
