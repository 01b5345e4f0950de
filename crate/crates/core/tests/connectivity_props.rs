mod common;

use proptest::prelude::*;

use randjulia::connectivity::component_labels;
use randjulia::pgm::Graymap;
use randjulia::{
    bbr_disconnected_scan, components, critical_profile, grid_escape_field, property_kk,
    sufficient_condition_report, Complex, Constants, GridBox, GridField, ParamSequence, Region,
    Verdict,
};

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn r0_of(r: f64) -> f64 {
    (1.0 + (1.0 + r).sqrt()).max((2.0 * r).sqrt()).max(r + 1.0)
}

fn g_cap_of(r: f64) -> f64 {
    let r0 = r0_of(r);
    ((r0 + r0 * r0 - r) / 2.0).ln() + 1.0
}

#[test]
fn degree_bounds_hold_beyond_the_unit_disk() {
    let w = c(-0.41, 0.17);
    for (region, seed) in [
        (Region::Disk { radius: 2.0 }, 31u64),
        (Region::MainCardioid, 32),
        (Region::DiskAt { center: c(2.0, 0.0), radius: 0.1 }, 33),
    ] {
        let consts = Constants::derive(region.bounding_radius()).unwrap();
        for s in 0..15u64 {
            let seq = ParamSequence::random(region.clone(), seed, s);
            let profile = critical_profile(&seq, 4, &consts, 1000, 1e-10);
            for k in 1..=4u32 {
                let params: Vec<Complex> = (0..u64::from(k)).map(|i| seq.at(i)).collect();
                let exact = common::exact_component_degree(&params, w, consts.tilde_r0, 768);
                assert_eq!(exact.roots, 1 << k);
                assert!(
                    exact.max_degree as u64 <= profile.degree_bound_at(k),
                    "{region} stream {s} k {k}: degree {} > 2^{}",
                    exact.max_degree,
                    profile.l[k as usize]
                );
            }
        }
    }
}

#[test]
fn roots_of_composed_maps_agree() {
    let params = [c(0.3, -0.2), c(-0.7, 0.1), c(0.05, 0.6), c(-1.1, 0.0)];
    let w = c(0.2, 0.9);
    let mut poly = common::composed_poly(&params);
    poly[0] -= w;
    let roots = common::aberth_roots(&poly);
    let backward = common::backward_roots(&params, w);
    assert_eq!(roots.len(), 16);
    for b in &backward {
        assert!((common::iterate_plain(&params, *b) - w).norm() < 1e-9);
        assert!(roots.iter().any(|r| (r - b).norm() < 1e-8));
    }
}

#[test]
fn constant_five_profile_stabilizes() {
    let r = 5.0;
    let seq = ParamSequence::Constant(c(5.0, 0.0));
    let consts = Constants::derive(r).unwrap();
    // g(0) from plain iteration: 0 -> 5 -> 30 -> 905 -> ...
    let mut w = c(0.0, 0.0);
    let mut scale = 1.0;
    while w.norm() < 1e150 {
        w = w * w + c(5.0, 0.0);
        scale *= 0.5;
    }
    let g0 = scale * w.norm().ln();
    let cap = g_cap_of(r);
    let l_star = (1..64).filter(|&m| g0 < cap * 0.5f64.powi(m)).count() as u32;
    assert_eq!(l_star, 2);
    let profile = critical_profile(&seq, 40, &consts, 1000, 1e-12);
    for k in 0..=40u32 {
        assert_eq!(profile.l[k as usize], k.min(l_star), "level {k}");
        assert_eq!(profile.degree_bound_at(k), 1 << k.min(l_star));
    }
    assert!(!property_kk(&profile, l_star, 40));
    assert_eq!(
        sufficient_condition_report(&profile, l_star).verdict,
        Verdict::EvidenceTotallyDisconnected
    );
}

#[test]
fn zero_sequence_profile_is_maximal() {
    let seq = ParamSequence::Constant(c(0.0, 0.0));
    let consts = Constants::derive(1.0).unwrap();
    let profile = critical_profile(&seq, 12, &consts, 500, 1e-10);
    assert!(profile.horizon_limited);
    assert!((0..=12).all(|k| profile.l[k as usize] == k));
    assert!(property_kk(&profile, 2, 5));
    for big_k in 0..12 {
        let report = sufficient_condition_report(&profile, big_k);
        assert_eq!(report.verdict, Verdict::Inconclusive);
        assert!(!report.caveat.is_empty());
    }
}

#[test]
fn three_tenths_has_a_stable_cap() {
    let seq = ParamSequence::Constant(c(0.3, 0.0));
    let consts = Constants::derive(0.5).unwrap();
    let profile = critical_profile(&seq, 40, &consts, 1000, 1e-10);
    let stabilized = profile.l[20..].iter().copied().max().unwrap();
    assert!(profile.l[20..].iter().all(|&l| l == stabilized));
    assert_eq!(
        sufficient_condition_report(&profile, stabilized).verdict,
        Verdict::EvidenceTotallyDisconnected
    );
}

#[test]
fn scan_examples() {
    let one = Constants::derive(1.0).unwrap();
    assert!(bbr_disconnected_scan(&ParamSequence::Constant(c(0.0, 0.0)), 50, &one, 1000).is_empty());
    let witness = ParamSequence::Explicit {
        items: vec![c(-2.0, 0.0)],
        tail: c(0.0, 0.0),
    };
    let two = Constants::derive(2.0).unwrap();
    assert_eq!(bbr_disconnected_scan(&witness, 10, &two, 1000), vec![0]);
    let half = Constants::derive(0.5).unwrap();
    let all: Vec<u32> = (0..=50).collect();
    assert_eq!(bbr_disconnected_scan(&ParamSequence::Constant(c(0.3, 0.0)), 50, &half, 1000), all);
}

#[test]
fn escaping_witness_splits_the_grid() {
    let witness = ParamSequence::Explicit {
        items: vec![c(-2.0, 0.0)],
        tail: c(0.0, 0.0),
    };
    let consts = Constants::derive(2.0).unwrap();
    let field = grid_escape_field(&witness, &consts, GridBox::centered(consts.r0), 512, 200);
    assert!(components(&field).component_count >= 2);
}

#[test]
fn closed_unit_disk_for_the_zero_map() {
    let seq = ParamSequence::Constant(c(0.0, 0.0));
    let consts = Constants::derive(1.0).unwrap();
    let field = grid_escape_field(&seq, &consts, GridBox::centered(2.5), 512, 100);
    let cell = field.cell_size();
    for row in 0..512 {
        for col in 0..512 {
            let m = field.cell_center(row, col).norm();
            if m < 1.0 - cell {
                assert!(field.is_bounded(row, col));
            }
            if m > 1.0 + cell {
                assert!(!field.is_bounded(row, col));
            }
        }
    }
    let report = components(&field);
    assert_eq!(report.component_count, 1);
    assert!((report.max_diameter - 2.0 * 2f64.sqrt()).abs() < 4.0 * cell);
}

#[test]
fn bounded_area_shrinks_outside_the_mandelbrot_set() {
    let seq = ParamSequence::Constant(c(0.3, 0.0));
    let consts = Constants::derive(0.5).unwrap();
    let grid = GridBox::centered(consts.r0);
    let counts: Vec<usize> = [20, 40, 80]
        .iter()
        .map(|&n| grid_escape_field(&seq, &consts, grid, 512, n).bounded_count())
        .collect();
    assert!(counts[0] > counts[1] && counts[1] > counts[2], "{counts:?}");
}

#[test]
fn finer_horizons_refine_components() {
    let consts = Constants::derive(1.0).unwrap();
    let grid = GridBox::centered(consts.r0);
    for seq in [
        ParamSequence::random(Region::Disk { radius: 1.0 }, 5, 0),
        ParamSequence::Constant(c(-0.12, 0.75)),
        ParamSequence::Constant(c(0.3, 0.0)),
    ] {
        for n in [10u32, 20, 40] {
            let coarse = grid_escape_field(&seq, &consts, grid, 256, n);
            let fine = grid_escape_field(&seq, &consts, grid, 256, 2 * n);
            let coarse_labels = component_labels(&coarse);
            let fine_labels = component_labels(&fine);
            let mut parent: Vec<Option<usize>> = vec![None; fine_labels.iter().flatten().count()];
            for (f, co) in fine_labels.iter().zip(&coarse_labels) {
                if let Some(f) = f {
                    let co = co.expect("bounded at 2N implies bounded at N");
                    match parent[*f] {
                        None => parent[*f] = Some(co),
                        Some(p) => assert_eq!(p, co, "fine component straddles coarse ones"),
                    }
                }
            }
        }
    }
}

#[test]
fn constant_one_grid_regression() {
    let seq = ParamSequence::Constant(c(1.0, 0.0));
    let consts = Constants::derive(1.0).unwrap();
    let grid = GridBox::centered(consts.r0);
    let oracle_grid = common::Grid { n: 1024, h: consts.r0 };

    // every cell center escapes by step 12 at this resolution
    let field = grid_escape_field(&seq, &consts, grid, 1024, 30);
    let mask = common::bounded_mask_constant(c(1.0, 0.0), consts.r0, &oracle_grid, 30);
    assert_eq!(field.bounded_count(), 0);
    assert!(!mask.iter().any(|&b| b));
    assert_eq!(components(&field).component_count, 0);

    let field = grid_escape_field(&seq, &consts, grid, 1024, 8);
    let mask = common::bounded_mask_constant(c(1.0, 0.0), consts.r0, &oracle_grid, 8);
    let (_, oracle_count) = common::flood_labels(&mask, 1024);
    let report = components(&field);
    assert_eq!(field.bounded_count(), mask.iter().filter(|&&b| b).count());
    assert_eq!(report.component_count, oracle_count);
    assert_eq!(report.component_count, 76);
    assert_eq!(field.bounded_count(), 408);
    assert!(report.max_diameter < 0.5);
}

#[test]
fn graymap_of_a_field_round_trips() {
    let seq = ParamSequence::Constant(c(-1.0, 0.0));
    let consts = Constants::derive(1.0).unwrap();
    let field = grid_escape_field(&seq, &consts, GridBox::centered(2.0), 64, 300);
    let image = field.to_graymap(vec!["seq = \"constant:-1\"".into()]);
    let decoded = Graymap::decode(&image.encode()).unwrap();
    assert_eq!(decoded, image);
    for (cell, px) in field.cells.iter().zip(&decoded.pixels) {
        match cell {
            None => assert_eq!(*px, 255),
            Some(k) => assert_eq!(u32::from(*px), (*k).min(254)),
        }
    }
}

fn field_strategy() -> impl Strategy<Value = GridField> {
    (2usize..24).prop_flat_map(|n| {
        proptest::collection::vec(prop_oneof![Just(None), (0u32..5).prop_map(Some)], n * n).prop_map(
            move |cells| GridField {
                grid: GridBox::centered(1.0),
                resolution: n,
                n_max: 5,
                cells,
            },
        )
    })
}

proptest! {
    #[test]
    fn union_find_matches_flood_fill(field in field_strategy()) {
        let n = field.resolution;
        let mask: Vec<bool> = field.cells.iter().map(Option::is_none).collect();
        let (oracle, count) = common::flood_labels(&mask, n);
        let labels = component_labels(&field);
        prop_assert_eq!(&labels, &oracle);
        let report = components(&field);
        prop_assert_eq!(report.component_count, count);
        prop_assert_eq!(report.sizes.iter().sum::<usize>(), field.bounded_count());
        prop_assert!(report.sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(report.max_diameter <= 2.0 * 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn property_is_monotone_in_the_cap(seed in any::<u64>(), stream in 0u64..1000, big_k in 0u32..12, k in 1u32..12) {
        let consts = Constants::derive(1.0).unwrap();
        let seq = ParamSequence::random(Region::Disk { radius: 1.0 }, seed, stream);
        let profile = critical_profile(&seq, 12, &consts, 500, 1e-10);
        for kk in 0..=12u32 {
            prop_assert!(profile.l[kk as usize] <= kk);
        }
        if !property_kk(&profile, big_k, k) {
            for larger in big_k..20 {
                prop_assert!(!property_kk(&profile, larger, k));
            }
        }
        if big_k >= k {
            prop_assert!(!property_kk(&profile, big_k, k));
        }
    }
}
