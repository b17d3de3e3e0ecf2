use bundletc::tensor::{permutation_tensor, AxisTag, Permutation, SpaceId, TypedTensor, Variance};
use proptest::prelude::*;

/// Each abstract space has a fixed dimension so tags stay consistent.
fn tag(space: usize, covariant: bool) -> AxisTag {
    let s = SpaceId::abstract_space(["V", "W", "U"][space]);
    let dim = [2, 3, 1][space];
    if covariant {
        AxisTag::covector(s, dim)
    } else {
        AxisTag::vector(s, dim)
    }
}

fn arb_tags(max_rank: usize) -> impl Strategy<Value = Vec<AxisTag>> {
    prop::collection::vec((0usize..3, any::<bool>()), 0..=max_rank)
        .prop_map(|v| v.into_iter().map(|(s, c)| tag(s, c)).collect())
}

fn arb_tensor(max_rank: usize) -> impl Strategy<Value = TypedTensor<f64>> {
    arb_tags(max_rank).prop_flat_map(|tags| {
        let size: usize = tags.iter().map(|t| t.dim).product();
        prop::collection::vec(-2.0f64..2.0, size).prop_map(move |data| TypedTensor::new(tags.clone(), data).unwrap())
    })
}

fn arb_permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>()).prop_shuffle().prop_map(|v| Permutation::from_images(v).unwrap())
}

fn tensor_and_two_permutations() -> impl Strategy<Value = (TypedTensor<f64>, Permutation, Permutation)> {
    arb_tensor(4).prop_flat_map(|t| {
        let n = t.rank();
        (Just(t), arb_permutation(n), arb_permutation(n))
    })
}

/// A tensor followed by one whose leading `n` factors pair with its last `n`.
fn contractible() -> impl Strategy<Value = (TypedTensor<f64>, TypedTensor<f64>, usize)> {
    (arb_tensor(3), arb_tags(2)).prop_flat_map(|(a, extra)| {
        let n_max = a.rank();
        (Just(a), Just(extra), 0..=n_max).prop_flat_map(|(a, extra, n)| {
            let keep = a.rank() - n;
            let mut tags: Vec<AxisTag> = a.tags()[keep..].iter().map(AxisTag::dual).collect();
            tags.extend(extra);
            let size: usize = tags.iter().map(|t| t.dim).product();
            (Just(a), prop::collection::vec(-2.0f64..2.0, size), Just(tags), Just(n))
                .prop_map(|(a, data, tags, n)| (a, TypedTensor::new(tags, data).unwrap(), n))
        })
    })
}

proptest! {
    #[test]
    fn permutations_compose((t, s, u) in tensor_and_two_permutations()) {
        let twice = t.permute(&s).unwrap().permute(&u).unwrap();
        let once = t.permute(&s.then(&u)).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn inverse_permutation_undoes((t, s, _) in tensor_and_two_permutations()) {
        prop_assert_eq!(t.permute(&s).unwrap().permute(&s.inverse()).unwrap(), t);
    }

    #[test]
    fn cycle_notation_round_trips(s in (0usize..6).prop_flat_map(arb_permutation)) {
        prop_assert_eq!(Permutation::from_cycles(s.len(), &s.cycles()).unwrap(), s);
    }

    #[test]
    fn permutation_is_contraction_with_permutation_tensor((t, s, _) in tensor_and_two_permutations()) {
        let p = permutation_tensor::<f64>(t.tags(), &s).unwrap();
        let by_tensor = t.contract(&p, t.rank()).unwrap();
        let direct = t.permute(&s).unwrap();
        prop_assert_eq!(by_tensor.tags(), direct.tags());
        prop_assert!(by_tensor.max_abs_diff(&direct).unwrap() < 1e-14);
    }

    #[test]
    fn contraction_respects_outer_products((b, c, n) in contractible(), a in arb_tensor(2)) {
        // (A ⊗ B) ·ⁿ C = A ⊗ (B ·ⁿ C)
        let lhs = a.outer(&b).contract(&c, n).unwrap();
        let rhs = a.outer(&b.contract(&c, n).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn contraction_is_bilinear((b, c, n) in contractible(), k in -3.0f64..3.0) {
        let lhs = b.scale(k).contract(&c, n).unwrap();
        let rhs = b.contract(&c.scale(k), n).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        let sum = b.contract(&c.add(&c).unwrap(), n).unwrap();
        prop_assert!(sum.max_abs_diff(&b.contract(&c, n).unwrap().scale(2.0)).unwrap() < 1e-12);
    }

    #[test]
    fn mismatched_contractions_are_rejected(t in arb_tensor(3).prop_filter("rank", |t| t.rank() > 0)) {
        // a tensor never pairs with itself on a factor (same variance)
        let last = t.tags()[t.rank() - 1].clone();
        let size = last.dim;
        let same = TypedTensor::new(vec![last], vec![1.0; size]).unwrap();
        prop_assert!(t.contract(&same, 1).is_err());
    }

    #[test]
    fn parallel_product_is_a_permuted_outer_product(
        a in prop::collection::vec(-1.0f64..1.0, 4),
        b in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        let a = TypedTensor::new(vec![tag(0, false), tag(0, true)], a).unwrap();
        let b = TypedTensor::new(vec![tag(1, false), tag(1, true)], b).unwrap();
        let swap = Permutation::from_cycles(4, &[vec![2, 3]]).unwrap();
        prop_assert_eq!(a.parallel_product(&b).unwrap(), a.outer(&b).permute(&swap).unwrap());
    }

    #[test]
    fn adjoint_is_an_involution(data in prop::collection::vec(-1.0f64..1.0, 6)) {
        let a = TypedTensor::new(vec![tag(0, false), tag(1, true)], data).unwrap();
        prop_assert_eq!(a.adjoint().unwrap().adjoint().unwrap(), a);
    }

    #[test]
    fn trace_of_vector_covector_is_their_pairing(
        v in prop::collection::vec(-1.0f64..1.0, 3),
        w in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let vt = TypedTensor::new(vec![tag(1, false)], v).unwrap();
        let wt = TypedTensor::new(vec![tag(1, true)], w).unwrap();
        let tr = vt.outer(&wt).trace().unwrap();
        let pairing = wt.contract(&vt, 1).unwrap().value().unwrap();
        prop_assert!((tr - pairing).abs() < 1e-14);
    }
}

#[test]
fn variance_flip_is_an_involution() {
    for v in [Variance::Vector, Variance::Covector] {
        assert_eq!(v.flip().flip(), v);
        assert_ne!(v.flip(), v);
    }
}
