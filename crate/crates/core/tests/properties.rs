use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thickflat_core::pipeline::Flat;
use thickflat_core::{AffineMap, Anf, BitVec, TruthTable};

fn anf_strategy(max_n: usize) -> impl Strategy<Value = Anf> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(any::<u64>(), 0..40).prop_map(move |raw| {
            Anf::from_monomials(n, raw.into_iter().map(|m| BitVec::from_u64(n, m & ((1 << n) - 1))))
        })
    })
}

proptest! {
    #[test]
    fn format_then_parse_is_identity(f in anf_strategy(12)) {
        let text = f.to_string();
        prop_assert_eq!(Anf::parse(&text, f.num_vars()).unwrap(), f);
    }

    #[test]
    fn moebius_round_trip(bits in prop::collection::vec(any::<bool>(), 1..=8usize).prop_flat_map(|v| {
        let n = v.len();
        prop::collection::vec(any::<bool>(), 1 << n)
    })) {
        let tt = TruthTable::from_bools(&bits).unwrap();
        let back = tt.to_anf().unwrap().to_truth_table().unwrap();
        prop_assert_eq!(back, tt);
    }

    #[test]
    fn composing_with_a_map_and_its_inverse_is_identity(f in anf_strategy(8), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = AffineMap::random(f.num_vars(), &mut rng);
        let g = f.compose_affine(&a).unwrap();
        prop_assert_eq!(g.compose_affine(&a.inverse()).unwrap(), f.clone());
        for x in 0..1u64 << f.num_vars() {
            let p = BitVec::from_u64(f.num_vars(), x);
            prop_assert_eq!(g.evaluate(&p).unwrap(), f.evaluate(&a.apply(&p).unwrap()).unwrap());
        }
    }

    #[test]
    fn flat_text_round_trip(seed in any::<u64>(), n in 1..20usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = (seed as usize) % (n + 1);
        let flat = thickflat_core::experiments::sample_flat(n, k, &mut rng);
        let parsed = Flat::parse_text(&flat.to_text()).unwrap();
        prop_assert_eq!(parsed.to_text(), flat.to_text());
        prop_assert_eq!(parsed.dimension(), k);
    }
}
