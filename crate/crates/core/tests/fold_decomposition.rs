//! Plane fold `(x, y) ↦ (|x|, y)` run through the whole pipeline.

use carnot_core::algebra::abelian;
use carnot_core::cubes::{CubeTree, TreeParams};
use carnot_core::decompose::{certify, decompose, DecomposeParams, Decomposition, Piece};
use carnot_core::group::CarnotGroup;
use carnot_core::lattice::{GradedLattice, DEFAULT_BUDGET};
use carnot_core::maps::{LipschitzMap, MapSample};
use carnot_core::norm::Metric;
use num_rational::BigRational;

#[test]
fn fold_splits_along_the_locus() {
    let plane = Metric::unit(&CarnotGroup::new(abelian::<BigRational>(2).unwrap()));
    let f = LipschitzMap::fold(&plane, 0).unwrap();
    let lat = GradedLattice::build(&plane, &[0.0, 0.0], 1.0, 0.01, DEFAULT_BUDGET).unwrap();
    let vals = MapSample::new(&f, &lat, 5000, 1).unwrap();
    let p = TreeParams::auto(&lat, 8.0);
    let tree = CubeTree::build(lat, p).unwrap();
    let params = DecomposeParams::default();
    let dec = decompose(&f, &vals, &tree, &params).unwrap();
    let lat = tree.lattice();
    let x0 = |i: u32| lat.point(i as usize)[0];

    // bad cubes of the second kind sit on the fold line
    let b2 = &dec.runs[0].families.b2;
    let meets = b2
        .iter()
        .filter(|&&q| {
            let pts = &tree.cubes()[q].points;
            let lo = pts.iter().map(|&i| x0(i)).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|&i| x0(i)).fold(f64::NEG_INFINITY, f64::max);
            lo <= lat.resolution() && hi >= -lat.resolution()
        })
        .count();
    assert!(!b2.is_empty());
    assert!(meets as f64 >= 0.8 * b2.len() as f64, "{meets} of {}", b2.len());

    assert!(dec.check_partition(lat.len()));
    assert!(dec.runs[0].violations.is_empty());
    assert!(dec.pieces.len() >= 2);
    assert!((dec.pieces.len() as f64) <= dec.piece_bound());
    for piece in &dec.pieces {
        let neg = piece.points.iter().filter(|&&i| x0(i) < 0.0).count();
        let pos = piece.points.iter().filter(|&&i| x0(i) > 0.0).count();
        assert!(neg.min(pos) as f64 <= 0.05 * piece.points.len() as f64, "{:?}", piece.word);
    }

    let cert = certify(&f, &vals, &tree, &dec, &params).unwrap();
    assert!(cert.all_pass);
    assert!(cert.pieces.iter().all(|c| c.exhaustive));

    // gluing a left piece to its mirror image on the right breaks it
    let merged = merge_mirror(&dec, lat);
    let bad = certify(&f, &vals, &tree, &merged, &params).unwrap();
    assert!(!bad.all_pass);
    let (x, y, r) = bad.pieces.iter().flat_map(|c| c.failures.iter()).next().copied().unwrap();
    assert!(r < params.delta);
    assert!(x0(x) * x0(y) < 0.0);
}

/// A decomposition whose only piece is a left piece merged with a right
/// piece holding the mirror image of one of its points.
fn merge_mirror(dec: &Decomposition, lat: &GradedLattice) -> Decomposition {
    for a in dec.pieces.iter().filter(|p| lat.point(p.points[0] as usize)[0] < 0.0) {
        for &i in &a.points {
            let mut m = lat.point(i as usize).to_vec();
            m[0] = -m[0];
            let hit = lat.within(&m, 1e-9).into_iter().find_map(|j| dec.assignment[j]);
            if let Some(b) = hit {
                let mut pts = a.points.clone();
                pts.extend_from_slice(&dec.pieces[b].points);
                let mut out = dec.clone();
                out.pieces = vec![Piece { root: a.root, word: a.word.clone(), points: pts }];
                return out;
            }
        }
    }
    panic!("no mirrored pair of pieces");
}
