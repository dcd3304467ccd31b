mod common;

use common::{random_pmf, random_state};
use cqmac_core::classical::SourceModel;
use cqmac_core::cq::{example1_channel, Cq4Channel, ProductInputPmf};
use cqmac_core::regions::{
    channel_region, polytope_vertices, rate_polytope, regions_intersect, source_bounds, source_region, RateTriple,
    SamplingConfig, TestChannel, VERTEX_TOL,
};
use cqmac_core::simplex::shannon_entropy;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn polytope_vertices_satisfy_their_constraints(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = (0..16).map(|_| random_state(2, 2, &mut rng)).collect();
        let n4 = Cq4Channel::new(2, 2, 2, states).unwrap();
        let p = ProductInputPmf::new(
            random_pmf(2, &mut rng),
            random_pmf(2, &mut rng),
            random_pmf(2, &mut rng),
            random_pmf(2, &mut rng),
        )
        .unwrap();
        let h = rate_polytope(&n4, &p, 2).unwrap();
        for v in polytope_vertices(&h) {
            prop_assert!(h.contains(&v.as_array(), VERTEX_TOL), "{v:?}");
        }
    }

    #[test]
    fn trivial_descriptions_collapse_source_region(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = SourceModel::example1();
        let pmf = cqmac_core::classical::JointPmf::new(vec![2, 2], random_pmf(4, &mut rng)).unwrap();
        let source = SourceModel::new(pmf, base.function().to_vec(), base.embedding().cloned()).unwrap();
        let t = TestChannel::simple(vec![vec![1.0]; 2], vec![vec![1.0]; 2]);
        let b = source_bounds(&source, &t).unwrap();
        let h_s = shannon_entropy(cqmac_core::classical::sum_variable_pmf(&source).unwrap().mass());
        prop_assert!((b[0] - h_s).abs() < 1e-12);
        prop_assert_eq!(&b[1..], &[0.0, 0.0, 0.0]);
    }
}

fn small(samples: usize, seed: u64) -> SamplingConfig {
    SamplingConfig { samples, seed, ..SamplingConfig::default() }
}

#[test]
fn source_region_grows_with_budget() {
    let source = SourceModel::example1();
    for seed in 0..3 {
        let a = source_region(&source, 2, &small(50, seed)).unwrap();
        let b = source_region(&source, 2, &small(200, seed)).unwrap();
        for p in a.points() {
            assert!(b.contains(p), "{p:?} lost when the budget grew");
        }
    }
}

#[test]
fn channel_region_grows_with_budget_and_keeps_overlap() {
    let n2 = example1_channel(0.15).unwrap();
    let source = source_region(&SourceModel::example1(), 2, &small(100, 0)).unwrap();
    let a = channel_region(&n2, 2, &SamplingConfig { structured: false, ..small(40, 1) }).unwrap();
    let b = channel_region(&n2, 2, &SamplingConfig { structured: false, ..small(120, 1) }).unwrap();
    for p in a.extreme_points() {
        assert!(b.contains(p), "{p:?} lost when the budget grew");
    }
    if !a.is_empty() && regions_intersect(&source, &a).unwrap().intersects {
        assert!(regions_intersect(&source, &b).unwrap().intersects);
    }
}

#[test]
fn origin_is_in_every_nonempty_channel_region() {
    let r = channel_region(&example1_channel(0.3).unwrap(), 2, &small(10, 0)).unwrap();
    assert!(r.contains(&RateTriple::new(0.0, 0.0, 0.0).unwrap()));
}
