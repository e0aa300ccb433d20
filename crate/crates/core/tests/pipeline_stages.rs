//! The embedding built by the pipeline, checked after each stage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thickflat_core::anf::DEFAULT_BLOWUP_LIMIT;
use thickflat_core::generators::{random_degree3_half, random_degree3_sparse, Degree3SamplerConfig};
use thickflat_core::pipeline::{find_constant_flat, AffineEmbedding};
use thickflat_core::quadratic::{canonical_anf, dickson_decompose};
use thickflat_core::restriction::{greedy_restrict, StopRule};
use thickflat_core::{AffineMap, Anf, BitVec, FunctionInput};

fn pull_back(f: &Anf, e: &AffineEmbedding) -> Anf {
    f.compose_embedding(e.matrix(), e.offset(), DEFAULT_BLOWUP_LIMIT).unwrap()
}

fn check_stages(f: &Anf) {
    let n = f.num_vars();
    let state = greedy_restrict(f, StopRule::UntilNoCrucial);
    let alive = state.alive_indices();
    let residual = state.current().project(&alive).unwrap();

    let mut dead: Vec<usize> = state.trace().vars().collect();
    dead.sort_unstable_by(|a, b| b.cmp(a));
    let mut e = AffineEmbedding::identity(n);
    for v in dead {
        e = e.kill(v).unwrap();
    }
    assert_eq!(e.domain_dim(), alive.len());
    assert_eq!(pull_back(f, &e), residual, "after 0-restrictions");

    let d = dickson_decompose(&residual).unwrap();
    let e = e.precompose(&d.map.inverse()).unwrap();
    assert_eq!(pull_back(f, &e), canonical_anf(&d, alive.len()).unwrap(), "after Dickson change of variables");
}

#[test]
fn stages_on_random_cubics() {
    for seed in 0..40 {
        check_stages(&random_degree3_half(10, seed));
        let cfg = Degree3SamplerConfig::new(24, 2.3, seed).unwrap();
        check_stages(&random_degree3_sparse(&cfg).unwrap());
    }
}

#[test]
fn stages_on_mixed_degree_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let n = rng.gen_range(3..=9);
        let terms: Vec<BitVec> =
            (0..rng.gen_range(0..25)).map(|_| BitVec::from_u64(n, rng.gen_range(0..1u64 << n))).collect();
        check_stages(&Anf::from_monomials(n, terms));
    }
}

#[test]
fn bijection_inputs_give_flats_for_f() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..30 {
        let g = random_degree3_half(8, seed);
        let a = AffineMap::random(8, &mut rng);
        let input = FunctionInput::new(g.clone(), Some(a.clone())).unwrap();
        let report = find_constant_flat(&input, None).unwrap();
        let f = g.compose_affine(&a.inverse()).unwrap();
        for p in report.flat.points() {
            assert_eq!(f.evaluate(&p).unwrap(), report.constant);
        }
        let plain = find_constant_flat(&FunctionInput::plain(g.clone()), None).unwrap();
        assert_eq!(report.dimension(), plain.dimension());
    }
}
