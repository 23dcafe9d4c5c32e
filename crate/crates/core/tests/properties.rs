// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;

use meshchroma::amr::{child_color, RefinedMesh};
use meshchroma::io::{parse_native, to_native_string};
use meshchroma::race::{payload, sweep_buffered, sweep_colored, sweep_sequential, SweepOptions};
use meshchroma::reorder::{apply_plan, build_plan_with_fallback};
use meshchroma::{
    color, verify_coloring, ColorSet, ColoringConfig, Family, GeneratorSpec, Mesh, MeshDocument,
    Periodic, SurfaceColoring,
};

fn small_mesh() -> impl Strategy<Value = Mesh> {
    let fam = prop_oneof![
        Just(Family::TriRect),
        Just(Family::QuadRect),
        Just(Family::TetPrism),
        Just(Family::TriClosed),
        Just(Family::HybridRect),
    ];
    (
        fam,
        1usize..7,
        1usize..7,
        1usize..4,
        any::<bool>(),
        prop::option::of(any::<u64>()),
    )
        .prop_filter_map(
            "generator rejects",
            |(family, nx, ny, nz, periodic, shuffle)| {
                // only even periodic quad grids are 4-colorable
                let periodic = periodic
                    && match family {
                        Family::TriRect => nx >= 3 && ny >= 3,
                        Family::QuadRect => nx >= 4 && ny >= 4 && nx % 2 == 0 && ny % 2 == 0,
                        _ => false,
                    };
                GeneratorSpec {
                    family,
                    nx,
                    ny,
                    nz,
                    periodic: if periodic {
                        Periodic::BOTH
                    } else {
                        Periodic::NONE
                    },
                    shuffle,
                }
                .generate()
                .ok()
            },
        )
}

fn colored() -> impl Strategy<Value = (Mesh, SurfaceColoring)> {
    (small_mesh(), any::<u64>()).prop_map(|(m, seed)| {
        let (c, _) = color(&m, &ColoringConfig::with_seed(seed)).unwrap();
        (m, c)
    })
}

fn is_bijection(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter()
        .all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coloring_is_complete_valid_and_minimal((m, c) in colored()) {
        prop_assert!(verify_coloring(&m, &c).is_empty());
        prop_assert_eq!(c.colors_used(), ColorSet::for_mesh(&m).size() as usize);
    }

    #[test]
    fn plan_is_a_bijection_and_keeps_validity((m, c) in colored()) {
        let (plan, _) = build_plan_with_fallback(&m, &c).unwrap();
        prop_assert!(is_bijection(plan.element_perm()));
        prop_assert!(is_bijection(plan.surface_perm()));
        let (rm, rc) = apply_plan(&m, &c, &plan).unwrap();
        prop_assert!(verify_coloring(&rm, &rc).is_empty());
        prop_assert_eq!(rc.class_sizes(), c.class_sizes());
        // colors occupy contiguous blocks in order
        let b = plan.group_bounds();
        for (g, w) in b.windows(2).enumerate() {
            for s in w[0]..w[1] {
                prop_assert_eq!(rc.get(s), Some(g as u8 + 1));
            }
        }
        let (back, back_c) = apply_plan(&rm, &rc, &plan.inverse()).unwrap();
        prop_assert_eq!(back_c, c);
        prop_assert_eq!(back.raw_elements(), m.raw_elements());
    }

    #[test]
    fn native_round_trip((m, c) in colored(), with_plan in any::<bool>()) {
        let plan = with_plan.then(|| build_plan_with_fallback(&m, &c).unwrap().0);
        let doc = MeshDocument { plan, ..MeshDocument::colored(m, c) };
        let text = to_native_string(&doc).unwrap();
        let back = parse_native(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(to_native_string(&back).unwrap(), text);
    }

    #[test]
    fn sweeps_agree((m, c) in colored(), seed in any::<u64>(), workers in 1usize..5) {
        let f = payload(&m, seed);
        let seq = sweep_sequential(&m, &f).unwrap();
        let opts = SweepOptions { workers, detect_conflicts: true };
        prop_assert_eq!(&sweep_colored(&m, &c, &f, opts).unwrap(), &seq);
        prop_assert_eq!(&sweep_buffered(&m, &f, workers).unwrap(), &seq);
    }
}

fn tri_base(n: usize, seed: u64) -> (Mesh, SurfaceColoring) {
    let m = GeneratorSpec::uniform(Family::TriRect, n)
        .generate()
        .unwrap();
    let (c, _) = color(&m, &ColoringConfig::with_seed(seed)).unwrap();
    (m, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refine_coarsen_round_trip(
        seed in any::<u64>(),
        pick in prop::collection::vec(any::<bool>(), 50),
        second in prop::collection::vec(any::<bool>(), 8),
    ) {
        let (m, c) = tri_base(5, seed);
        let base = RefinedMesh::from_base(&m, &c).unwrap();
        let first: Vec<usize> = (0..m.element_count()).filter(|&e| pick[e]).collect();
        let r1 = base.refine(&first).unwrap();
        let (am, ac) = (r1.active_mesh(), r1.coloring());
        prop_assert!(verify_coloring(am, ac).is_empty());
        prop_assert!(ac.max_color().unwrap_or(0) <= 6);
        prop_assert!(r1.max_refined_neighbors() <= 3 * 2);

        // every split edge follows the child mapping
        for &cell in &first {
            let v = r1.cell(cell).vertices();
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let parent = r1.edge_color(a, b).unwrap();
                let kids = r1.cell(cell).children().unwrap();
                let mid = r1.cell(kids[3]).vertices()[k];
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert_eq!(r1.edge_color(lo, mid), Some(child_color(parent, 1)));
                prop_assert_eq!(r1.edge_color(mid, hi), Some(child_color(parent, 2)));
            }
        }

        // a second level where the one-level rule allows it
        if let Some(&cell) = first.first() {
            let kids = r1.cell(cell).children().unwrap();
            let chosen: Vec<usize> =
                kids.iter().zip(&second).filter(|p| *p.1).map(|p| *p.0).collect();
            if let Ok(r2) = r1.refine(&chosen) {
                prop_assert!(verify_coloring(r2.active_mesh(), r2.coloring()).is_empty());
                let r1b = r2.coarsen(&chosen).unwrap();
                prop_assert_eq!(r1b.coloring(), r1.coloring());
            }
        }

        let back = r1.coarsen(&first).unwrap();
        let (bm, bc) = back.to_base().unwrap();
        prop_assert_eq!(&bc, &c);
        prop_assert_eq!(bm.raw_elements(), m.raw_elements());

        let doc = MeshDocument::from_refined(r1);
        prop_assert_eq!(parse_native(&to_native_string(&doc).unwrap()).unwrap(), doc);
    }
}
