use proptest::prelude::*;
use rug::{Integer, Rational};

use dioph_lab::lattice::{self, IntVec};

fn vec4() -> impl Strategy<Value = IntVec> {
    prop::array::uniform4(-6i64..=6).prop_map(IntVec::from_i64)
}

fn independent(n: usize) -> impl Strategy<Value = Vec<IntVec>> {
    prop::collection::vec(vec4(), n).prop_filter("independent", |v| lattice::rank(v).unwrap() == v.len())
}

/// Apply a unimodular change of basis built from elementary operations.
fn unimodular(vs: &[IntVec], ops: &[(usize, usize, i64)]) -> Vec<IntVec> {
    let mut out = vs.to_vec();
    for &(i, j, c) in ops {
        let (i, j) = (i % out.len(), j % out.len());
        if i != j {
            out[i] = out[i].add_mul(&Integer::from(c), &out[j]);
        }
    }
    out
}

fn unit(i: usize) -> IntVec {
    let mut c = [0i64; 4];
    c[i] = 1;
    IntVec::from_i64(c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn primitive_iff_covolume_unchanged_by_saturation(n in 1usize..=3, seed in independent(3)) {
        let vs = &seed[..n];
        let sat = lattice::saturate(vs).unwrap();
        let same = lattice::gram_det_sq(vs).unwrap() == lattice::gram_det_sq(&sat.vectors).unwrap();
        prop_assert_eq!(lattice::is_primitive(vs).unwrap(), same);
    }

    #[test]
    fn height_is_a_property_of_the_span(vs in independent(3), ops in prop::collection::vec((0usize..3, 0usize..3, -3i64..=3), 0..8)) {
        let moved = unimodular(&vs, &ops);
        prop_assert_eq!(lattice::span_height_sq(&vs).unwrap(), lattice::span_height_sq(&moved).unwrap());
        prop_assert_eq!(lattice::is_primitive(&vs).unwrap(), lattice::is_primitive(&moved).unwrap());
        let sat = lattice::saturate(&vs).unwrap();
        prop_assert_eq!(lattice::span_height_sq(&vs).unwrap(), lattice::height_sq(&sat).unwrap());
    }

    #[test]
    fn angle_window_is_symmetric_and_scale_free(
        u in prop::array::uniform3(-20i64..=20),
        v in prop::array::uniform3(-20i64..=20),
        s in 1i64..50,
        t in 1i64..50,
    ) {
        prop_assume!(u != [0; 3] && v != [0; 3]);
        let r = |x: [i64; 3], c: i64| x.map(|a| Rational::from(a * c));
        let w = lattice::angle_window(&r(u, 1), &r(v, 1)).unwrap();
        prop_assert_eq!(w, lattice::angle_window(&r(v, 1), &r(u, 1)).unwrap());
        prop_assert_eq!(w, lattice::angle_window(&r(u, s), &r(v, t)).unwrap());
        let ui = u.map(Integer::from);
        let vi = v.map(Integer::from);
        prop_assert_eq!(w, lattice::angle_window_int(&ui, &vi).unwrap());
    }
}

#[test]
fn coordinate_subspaces_have_unit_height() {
    for i in 0..4 {
        assert_eq!(lattice::span_height_sq(&[unit(i)]).unwrap(), 1);
        for j in i + 1..4 {
            let sat = lattice::saturate(&[unit(i), unit(j)]).unwrap();
            assert_eq!(lattice::height_sq(&sat).unwrap(), 1);
        }
    }
    assert_eq!(lattice::span_height_sq(&[unit(0), unit(1), unit(3)]).unwrap(), 1);
}

#[test]
fn dependent_triples_are_rejected() {
    let a = IntVec::from_i64([1, 2, 3, 4]);
    let b = IntVec::from_i64([0, 1, 0, 1]);
    let c = a.add_mul(&Integer::from(2), &b);
    assert!(lattice::is_primitive(&[a.clone(), b.clone(), c.clone()]).is_err());
    assert!(lattice::normal(&a, &b, &c).is_err());
}
