use fixedbitset::FixedBitSet;

use posetmod::filtration::{natural_encoding, persistent_homology, FilteredSimplex, MultiFiltration};
use posetmod::fringe::{fringe_presentation, fringe_presentation_box, verify_fringe};
use posetmod::homalg::{flange_presentation, verify_flange};
use posetmod::lattice::{Face, IndecInjLabel};
use posetmod::module::{box_poset, verify_isomorphism, Morphism};
use posetmod::{Field, Matrix};

/// b enters at the origin, a and c one step out along each axis; both edges
/// enter at (1,1).
fn worked() -> MultiFiltration {
    let s = |v: &[&str], e: &[i64]| FilteredSimplex {
        vertices: v.iter().map(|x| x.to_string()).collect(),
        entries: vec![e.to_vec()],
    };
    MultiFiltration {
        n: 2,
        simplices: vec![
            s(&["a"], &[1, 0]),
            s(&["b"], &[0, 0]),
            s(&["c"], &[0, 1]),
            s(&["a", "b"], &[1, 1]),
            s(&["b", "c"], &[1, 1]),
        ],
    }
}

#[test]
fn h0_dimensions() {
    let h0 = persistent_homology(&worked(), 0, Field::Rational).unwrap().module;
    let table = [([-1, -1], 0), ([0, 0], 1), ([1, 0], 2), ([0, 1], 2), ([1, 1], 1), ([7, 7], 1), ([9, 0], 2)];
    for (q, d) in table {
        assert_eq!(h0.dim_at(&q), d, "at {q:?}");
    }
    let h1 = persistent_homology(&worked(), 1, Field::Rational).unwrap().module;
    assert_eq!(h1.dims().iter().sum::<usize>(), 0);
}

#[test]
fn fringe_matrix_matches_hand_computation() {
    let h0 = persistent_homology(&worked(), 0, Field::Rational).unwrap().module;
    let pres = fringe_presentation_box(&h0).unwrap();
    verify_fringe(&pres.matrix, pres.embedding.source(), &pres.embedding).unwrap();
    let bx = h0.grid().clone();
    let (p, _) = box_poset(&bx).unwrap();
    let rows: Vec<&FixedBitSet> = pres.matrix.rows.iter().map(|r| r.members()).collect();
    let a = p.principal_upset(bx.index(&[1, 0]));
    let b = p.principal_upset(bx.index(&[0, 0]));
    let c = p.principal_upset(bx.index(&[0, 1]));
    assert_eq!(rows, vec![a, c, b]);
    let order = [0, 2, 1];
    let scalars = pres.matrix.entries.select_rows(&order);
    let expected = Matrix::from_i64(Field::Rational, &[vec![1, 0, 1], vec![-1, 1, 1], vec![0, -1, 1]]);
    assert_eq!(scalars, expected);
    let ncols = pres.matrix.cols.len();
    assert_eq!(ncols, 3);
    assert_eq!(pres.matrix.cols[2].len(), bx.len());
    for c in bx.cells() {
        let q = bx.coords(c);
        assert_eq!(pres.matrix.cols[0].contains(c), q[1] <= 0);
        assert_eq!(pres.matrix.cols[1].contains(c), q[0] <= 0);
    }
}

#[test]
fn flange_labels() {
    let h0 = persistent_homology(&worked(), 0, Field::Rational).unwrap().module;
    let fl = flange_presentation(&h0).unwrap();
    verify_flange(&fl, &h0).unwrap();
    let origin = fl.grid().lo().iter().map(|_| 0).collect::<Vec<i64>>();
    assert_eq!(fl.matrix.cols.len(), 3);
    assert_eq!(fl.matrix.cols[2], IndecInjLabel::new(origin.clone(), Face::full(2)));
    assert_eq!(fl.matrix.cols[0].tau, Face::single(0));
    assert_eq!(fl.matrix.cols[1].tau, Face::single(1));
    let births: Vec<Vec<i64>> = fl.matrix.rows.iter().map(|r| r.b.clone()).collect();
    assert_eq!(births, vec![vec![1, 0], vec![0, 1], vec![0, 0]]);
}

#[test]
fn natural_encoding_round_trip() {
    let f = worked();
    let enc = natural_encoding(&f, 0, Field::Rational).unwrap();
    let h0 = persistent_homology(&f, 0, Field::Rational).unwrap().module;
    let pulled = enc.h.pullback_to_box(h0.grid(), enc.pi.images()).unwrap();
    let comps = h0.dims().iter().map(|&d| Matrix::identity(Field::Rational, d)).collect();
    assert!(verify_isomorphism(&Morphism::new(h0, pulled, comps).unwrap()));
}

#[test]
fn fringe_through_trivial_encoding() {
    let h0 = persistent_homology(&worked(), 0, Field::Rational).unwrap().module;
    let m = h0.to_encoded().unwrap();
    let enc = posetmod::fringe::trivial_encoding(&m).unwrap();
    let pres = fringe_presentation(&enc).unwrap();
    verify_fringe(&pres.matrix, &m, &pres.embedding).unwrap();
}
