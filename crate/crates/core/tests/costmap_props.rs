//! WayObject costmap encoding, rescaling and decoding properties.

use std::collections::BTreeMap;

use objnav_core::costmap::{
    assemble, decode_segments, encode, read_dump, rescale, write_dump, CostmapConfig, SegmentCost,
};
use objnav_core::mask::Mask;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(dim: usize) -> CostmapConfig {
    CostmapConfig {
        dim,
        ..CostmapConfig::default()
    }
}

#[test]
fn level_zero_is_alternating_zero_one() {
    assert_eq!(encode(0, &cfg(8)), vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
}

#[test]
fn level_hundred_in_two_dims() {
    // only the first frequency, Z^0 = 1
    let e = encode(100, &cfg(2));
    assert!((e[0] - -0.50637).abs() < 1e-5 && (e[1] - 0.86232).abs() < 1e-5, "{e:?}");
    assert_eq!(e, vec![100f64.sin(), 100f64.cos()]);
}

#[test]
fn encoding_matches_the_sinusoid_table() {
    let c = cfg(8);
    for l in 0..=100u32 {
        let e = encode(l, &c);
        for k in 0..4 {
            let freq = 10000f64.powf(2.0 * k as f64 / 8.0);
            let (s, co) = (e[2 * k], e[2 * k + 1]);
            assert!((s - (l as f64 / freq).sin()).abs() < 1e-12);
            assert!((co - (l as f64 / freq).cos()).abs() < 1e-12);
            assert!((s * s + co * co - 1.0).abs() < 1e-12, "l {l} pair {k}");
        }
    }
}

#[test]
fn rescale_boundaries() {
    let c = CostmapConfig::default();
    assert_eq!(rescale(&[Some(2.0), Some(6.0)], &c).unwrap(), vec![100, 1]);
    assert_eq!(rescale(&[Some(3.0), None, Some(3.0)], &c).unwrap(), vec![100, 0, 100]);
}

fn raw_costs() -> impl Strategy<Value = Vec<Option<f64>>> {
    proptest::collection::vec(prop_oneof![1 => Just(None), 6 => (0.0f64..50.0).prop_map(Some)], 1..16)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rescale_is_affine_invariant(raw in raw_costs(), a in 0.01f64..100.0, b in 0.0f64..100.0) {
        let c = CostmapConfig::default();
        let moved: Vec<Option<f64>> = raw.iter().map(|d| d.map(|x| a * x + b)).collect();
        prop_assert_eq!(rescale(&raw, &c).unwrap(), rescale(&moved, &c).unwrap());
    }

    #[test]
    fn rescale_stays_in_range(raw in raw_costs()) {
        let c = CostmapConfig::default();
        let l = rescale(&raw, &c).unwrap();
        for (d, l) in raw.iter().zip(&l) {
            match d {
                None => prop_assert_eq!(*l, 0),
                Some(_) => prop_assert!((1..=100).contains(l)),
            }
        }
        // the cheapest finite cost always gets the top level
        if let Some((i, _)) = raw.iter().enumerate().filter_map(|(i, d)| d.map(|x| (i, x))).min_by(|x, y| x.1.total_cmp(&y.1)) {
            prop_assert_eq!(l[i], 100);
        }
    }
}

/// A random label image of disjoint segments with random levels, and the
/// (mask, level) groups it should decode to.
fn disjoint_instance(rng: &mut impl Rng) -> (Vec<SegmentCost>, usize, usize, Vec<(Mask, u32)>) {
    let (h, w) = (rng.random_range(1..12), rng.random_range(1..12));
    let k = rng.random_range(1..6u32);
    let labels: Vec<u32> = (0..h * w).map(|_| rng.random_range(0..=k)).collect();
    let levels: Vec<u32> = (0..=k).map(|_| rng.random_range(0..=100)).collect();
    let mut segs = Vec::new();
    let mut expect: BTreeMap<u32, Mask> = BTreeMap::new();
    for id in 1..=k {
        let mask = Mask::from_fn(h, w, |r, c| labels[r * w + c] == id);
        if mask.is_empty() {
            continue;
        }
        let l = levels[id as usize];
        let raw = (l > 0).then(|| 100.0 - l as f64);
        expect.entry(l).or_insert_with(|| Mask::new(h, w)).union_with(&mask);
        segs.push(SegmentCost::new(id, mask, raw, l));
    }
    (segs, h, w, expect.into_iter().map(|(l, m)| (m, l)).collect())
}

#[test]
fn decode_inverts_assemble_on_100_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (segs, h, w, expect) = disjoint_instance(&mut rng);
        let map = assemble(&segs, &CostmapConfig::default(), h, w).unwrap();
        let mut got = decode_segments(&map).unwrap();
        got.sort_by_key(|g| g.1);
        assert_eq!(got, expect);

        // the float32 dump decodes to the same groups
        let mut bytes = Vec::new();
        write_dump(&map, &mut bytes).unwrap();
        let back = read_dump(bytes.as_slice()).unwrap();
        let mut got = decode_segments(&back).unwrap();
        got.sort_by_key(|g| g.1);
        assert_eq!(got, expect);
    }
}

#[test]
fn dump_header_layout() {
    let map = assemble(
        &[SegmentCost::new(1, Mask::full(2, 3), Some(1.0), 100)],
        &CostmapConfig::default(),
        2,
        3,
    )
    .unwrap();
    let mut bytes = Vec::new();
    write_dump(&map, &mut bytes).unwrap();
    let u32_at = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    assert_eq!([u32_at(0), u32_at(1), u32_at(2), u32_at(3)], [2, 3, 8, 100]);
    assert_eq!(f32::from_le_bytes(bytes[16..20].try_into().unwrap()), 10000.0);
    assert_eq!(bytes.len(), 20 + 2 * 3 * 8 * 4);
    let first = f32::from_le_bytes(bytes[20..24].try_into().unwrap());
    assert_eq!(first, 100f32.sin());
}
