//! Worked examples checked against oracles computed in this file: a
//! union-find over arrow endpoints, explicit group orders and hand-built
//! factorizations.

use gpd_factor::base::{Backend, Elem, Morphism, Object};
use gpd_factor::factor::{
    comprehensive_factor, is_covering, is_final, is_in_e, is_trivial_covering,
};
use gpd_factor::gpd::{
    discrete_of, group_as_groupoid, indiscrete_of, is_discrete_fibration, profile,
    validate_groupoid, GFunctor,
};
use gpd_factor::harness::{
    counterexample_cube, factorizations_isomorphic, gen_shaped, oracle_comprehensive,
    oracle_pi0_components, parse_group_spec, GenConfig, PullbackClass, Shape,
};
use gpd_factor::reflection::{pi0, pi1};
use gpd_factor::text::{cube_document, parse};

const REGRESSION: &str = include_str!("../../../fixtures/regression_finset.gpd");
const COUNTEREXAMPLE: &str = include_str!("../../../fixtures/counterexample_z2.gpd");

/// Number of classes of the equivalence generated by `d a ~ c a`.
fn union_find_components(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    let mut classes = n;
    for (a, b) in edges {
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            classes -= 1;
        }
    }
    classes
}

fn set(n: usize) -> Object {
    Object::set_of_size(n).unwrap()
}

fn point_into(g: &gpd_factor::gpd::Groupoid, object: usize) -> GFunctor {
    let pt = discrete_of(&set(1)).unwrap();
    let loop_arrow = g.e().apply(object);
    GFunctor::new(
        &pt,
        g,
        Morphism::new(pt.objects(), g.objects(), vec![object]).unwrap(),
        Morphism::new(pt.arrows(), g.arrows(), vec![loop_arrow]).unwrap(),
    )
    .unwrap()
}

#[test]
fn regression_fixture_has_two_components() {
    let doc = parse(REGRESSION).unwrap();
    let g = doc.groupoid("G").unwrap();
    assert!(validate_groupoid(g).is_valid());
    assert_eq!(g.objects().len(), 5);
    assert_eq!(g.arrows().len(), 13);
    let expected = union_find_components(
        g.objects().len(),
        (0..g.arrows().len()).map(|a| (g.d().apply(a), g.c().apply(a))),
    );
    assert_eq!(expected, 2);
    assert_eq!(pi0(g).unwrap().components.len(), expected);
    assert_eq!(oracle_pi0_components(g).unwrap().len(), expected);
}

#[test]
fn regression_fixture_is_reproduced_by_its_seed() {
    let doc = parse(REGRESSION).unwrap();
    let cfg = GenConfig::new(Backend::FinSet, 167);
    let (g, shape) = gen_shaped(&mut cfg.rng(), &cfg).unwrap();
    assert_eq!(&g, doc.groupoid("G").unwrap());
    assert!(matches!(shape, Shape::Components(ref c) if c == &[(3, 1), (2, 1)]));
}

#[test]
fn complex_of_doubling_into_z4() {
    // Seed 32 draws the complex Z/2 -> Z/4 sending the generator to 2.
    let cfg = GenConfig::new(Backend::FinAb, 32);
    let (g, shape) = gen_shaped(&mut cfg.rng(), &cfg).unwrap();
    let Shape::Complex(boundary) = shape else {
        panic!("expected a complex");
    };
    assert_eq!(boundary.dom().len(), 2);
    assert_eq!(boundary.cod().len(), 4);
    let one = boundary.dom().index_of(&Elem::int(1)).unwrap();
    assert_eq!(boundary.cod().elem(boundary.apply(one)), &Elem::int(2));
    // Cokernel of order 4 / 2, kernel trivial.
    let components = pi0(&g).unwrap().components;
    assert_eq!(components.len(), 2);
    assert_eq!(pi1(&g).unwrap().len(), 1);
}

#[test]
fn counterexample_fixture_round_trips() {
    let doc = parse(COUNTEREXAMPLE).unwrap();
    assert_eq!(doc.print(), COUNTEREXAMPLE);
    let cube = counterexample_cube(&parse_group_spec("Z/2").unwrap()).unwrap();
    assert_eq!(cube_document(&cube), COUNTEREXAMPLE);
}

#[test]
fn counterexample_faces() {
    for spec in ["Z/2", "Z/3"] {
        let cube = counterexample_cube(&parse_group_spec(spec).unwrap()).unwrap();
        assert!(cube.is_pullback().unwrap());
        assert!(is_final(&cube.front).unwrap().is_final);
        assert!(is_in_e(&cube.front).unwrap());
        assert!(!is_in_e(&cube.back).unwrap());
        assert!(!PullbackClass::RegularEpi.admits(&cube.right));
        // The back face is a discrete fibration that misses objects.
        let back = profile(&cube.back).unwrap();
        assert!(is_discrete_fibration(&cube.back));
        assert!(!back.essentially_surjective);
        assert!(!is_covering(&cube.front).unwrap().covering);
        assert!(!is_trivial_covering(&cube.front).unwrap());
    }
}

#[test]
fn comprehensive_of_a_point_into_indiscrete() {
    let ind = indiscrete_of(&set(2)).unwrap();
    let f = point_into(&ind, 0);
    let fac = comprehensive_factor(&f).unwrap();
    let oracle = oracle_comprehensive(&f).unwrap();
    assert!(factorizations_isomorphic(&fac, &oracle).unwrap());
    // The comma over each object of Ind(2) is connected: the middle is Ind(2).
    assert_eq!(fac.middle.objects().len(), 2);
    assert!(fac.m_part.is_levelwise_iso());
}

#[test]
fn comprehensive_of_identity_on_objects() {
    let d = discrete_of(&set(2)).unwrap();
    let ind = indiscrete_of(&set(2)).unwrap();
    // Arrows of Ind(2) are pairs in lexicographic order; (0,0) and (1,1) are
    // the identities.
    let f = GFunctor::new(
        &d,
        &ind,
        Morphism::identity(d.objects()),
        Morphism::new(d.arrows(), ind.arrows(), vec![0, 3]).unwrap(),
    )
    .unwrap();
    let fac = comprehensive_factor(&f).unwrap();
    let oracle = oracle_comprehensive(&f).unwrap();
    assert!(factorizations_isomorphic(&fac, &oracle).unwrap());
    assert_eq!(fac.middle.objects().len(), 4);
    assert_eq!(union_find_components(4, (0..fac.middle.arrows().len()).map(|a| {
        (fac.middle.d().apply(a), fac.middle.c().apply(a))
    })), 2);
}

#[test]
fn comprehensive_of_a_final_functor_has_iso_m_part() {
    let cube = counterexample_cube(&parse_group_spec("Z/2").unwrap()).unwrap();
    let fac = comprehensive_factor(&cube.front).unwrap();
    assert!(fac.m_part.is_levelwise_iso());
    assert!(fac.e_part == cube.front || is_final(&fac.e_part).unwrap().is_final);
}

#[test]
fn vertex_group_quotient_is_a_regular_epi() {
    let z4 = Object::cyclic(4).unwrap();
    let z2 = Object::cyclic(2).unwrap();
    let g4 = group_as_groupoid(&z4, Backend::FinAb).unwrap();
    let g2 = group_as_groupoid(&z2, Backend::FinAb).unwrap();
    let reduce = Morphism::new(&z4, &z2, (0..4).map(|k| k % 2).collect()).unwrap();
    let f = GFunctor::new(
        &g4,
        &g2,
        Morphism::identity(g4.objects()),
        Morphism::new(g4.arrows(), g2.arrows(), reduce.table().to_vec()).unwrap(),
    )
    .unwrap();
    assert!(PullbackClass::RegularEpi.admits(&f));
    assert!(f.is_levelwise_regular_epi());
    // Kernel of order 2 means the functor is not faithful.
    assert!(!profile(&f).unwrap().faithful);
    assert!(profile(&f).unwrap().full);
}
