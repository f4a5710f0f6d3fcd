//! Connected components and their relatives: the reflector `π₀` with unit
//! `η`, the support `Supp` with unit `σ`, the quotient `Q` of an
//! equivalence relation, the décalage `Dec` with counit `ε`, and `π₁` for
//! groups.

use crate::base::{
    classify, coequalizer, compose, kernel_pair, pullback, Backend, ForkData, Morphism, Object,
    PullbackCone,
};
use crate::error::{Error, Result};
use crate::gpd::{
    discrete_of, is_equivalence_relation, relation_groupoid, validate_functor, GFunctor,
    GpdPullback, Groupoid,
};

#[derive(Debug, Clone)]
pub struct Pi0Result {
    pub components: Object,
    /// Coequalizer of `(d, c)`.
    pub q: Morphism,
    /// `G -> D(components)` with `f0 = q`, `f1 = q . d`.
    pub eta: GFunctor,
    pub fork: ForkData,
}

pub fn pi0(g: &Groupoid) -> Result<Pi0Result> {
    let fork = coequalizer(g.d(), g.c())?;
    let components = fork.quotient().clone();
    let q = fork.q().clone();
    let target = discrete_of(&components)?;
    let eta = GFunctor::new(g, &target, q.clone(), compose(&q, g.d())?)?;
    Ok(Pi0Result {
        components,
        q,
        eta,
        fork,
    })
}

/// `π₀(F)`: the unique `u` with `u . q_X = q_Y . f0`.
pub fn pi0_functor(f: &GFunctor) -> Result<Morphism> {
    let src = coequalizer(f.dom().d(), f.dom().c())?;
    let tgt = coequalizer(f.cod().d(), f.cod().c())?;
    src.factor(&compose(tgt.q(), f.f0())?)
}

/// `D(u)` for a base morphism `u`.
pub fn discrete_functor_of(u: &Morphism) -> Result<GFunctor> {
    let src = discrete_of(u.dom())?;
    let tgt = discrete_of(u.cod())?;
    GFunctor::new(&src, &tgt, u.clone(), u.clone())
}

#[derive(Debug, Clone)]
pub struct SuppResult {
    /// Kernel pair of the components quotient, as a groupoid with
    /// `d = r1`, `c = r2`, `e = s0`.
    pub support: Groupoid,
    pub relation: PullbackCone,
    /// `G -> support` with `f0 = id`, `f1 = (d, c)`.
    pub sigma: GFunctor,
}

pub fn supp(g: &Groupoid) -> Result<SuppResult> {
    let fork = coequalizer(g.d(), g.c())?;
    let relation = kernel_pair(fork.q())?;
    let support = relation_groupoid(&relation)?;
    let f1 = relation.factor(g.d(), g.c())?;
    let sigma = GFunctor::new(g, &support, Morphism::identity(g.objects()), f1)?;
    Ok(SuppResult {
        support,
        relation,
        sigma,
    })
}

pub fn supp_functor(f: &GFunctor) -> Result<GFunctor> {
    let src = supp(f.dom())?;
    let tgt = supp(f.cod())?;
    let f1 = tgt.relation.factor(
        &compose(f.f0(), src.relation.proj1())?,
        &compose(f.f0(), src.relation.proj2())?,
    )?;
    GFunctor::new(&src.support, &tgt.support, f.f0().clone(), f1)
}

/// Quotient of an equivalence relation: the coequalizer of `(r1, r2)`.
pub fn q_relation(r: &Groupoid) -> Result<ForkData> {
    if !is_equivalence_relation(r) {
        return Err(Error::NotARelation);
    }
    coequalizer(r.d(), r.c())
}

/// `Q` on a functor between equivalence relations.
pub fn q_functor(f: &GFunctor) -> Result<Morphism> {
    if !is_equivalence_relation(f.dom()) || !is_equivalence_relation(f.cod()) {
        return Err(Error::NotARelation);
    }
    pi0_functor(f)
}

#[derive(Debug, Clone)]
pub struct DecResult {
    /// Objects `X1`; arrows the kernel pair of `c`, an arrow `(x, y)`
    /// going from `x` to `y`.
    pub dec: Groupoid,
    pub relation: PullbackCone,
    /// `Dec(G) -> G` with `f0 = d` and `f1 (x, y) = i(y) . x`.
    pub epsilon: GFunctor,
}

pub fn decalage(g: &Groupoid) -> Result<DecResult> {
    let relation = kernel_pair(g.c())?;
    let dec = relation_groupoid(&relation)?;
    let (r1, r2) = (relation.proj1(), relation.proj2());
    let f1 = Morphism::from_fn(dec.arrows(), g.arrows(), |k| {
        let (x, y) = (r1.apply(k), r2.apply(k));
        g.compose(g.inv().apply(y), x)
            .expect("arrows with a common codomain compose after inverting one")
    });
    let epsilon = GFunctor::new(&dec, g, g.d().clone(), f1)?;
    Ok(DecResult {
        dec,
        relation,
        epsilon,
    })
}

/// `Dec(F)`: `f1` on objects and `f1 x f1` on arrows.
pub fn dec_functor(f: &GFunctor) -> Result<GFunctor> {
    let src = decalage(f.dom())?;
    let tgt = decalage(f.cod())?;
    let f1 = tgt.relation.factor(
        &compose(f.f1(), src.relation.proj1())?,
        &compose(f.f1(), src.relation.proj2())?,
    )?;
    GFunctor::new(&src.dec, &tgt.dec, f.f1().clone(), f1)
}

/// The composable-pairs presentation of `Dec(G)`'s arrows: the map
/// `X2 -> X1 x_{c} X1`, `(a, b) -> (m(a, b), a)`. It is an isomorphism.
pub fn dec_pairs_comparison(g: &Groupoid, dec: &DecResult) -> Result<Morphism> {
    let n2 = g.nerve2();
    dec.relation.factor(g.comp(), n2.proj1())
}

fn require_finab(g: &Groupoid, op: &'static str) -> Result<()> {
    if g.backend() != Backend::FinAb {
        return Err(Error::BackendUnsupported {
            op,
            backend: g.backend(),
        });
    }
    Ok(())
}

/// Inclusion of `π₁(G) = ker (d, c)` into `X1`.
pub fn pi1_inclusion(g: &Groupoid) -> Result<Morphism> {
    require_finab(g, "pi1")?;
    let z = g.objects().zero();
    let members: Vec<usize> = (0..g.arrows().len())
        .filter(|&a| g.endpoints(a) == (z, z))
        .collect();
    g.arrows().subobject(&members)
}

pub fn pi1(g: &Groupoid) -> Result<Object> {
    Ok(pi1_inclusion(g)?.dom().clone())
}

/// Restriction of `f1` to the fundamental groups.
pub fn pi1_functor(f: &GFunctor) -> Result<Morphism> {
    let src = pi1_inclusion(f.dom())?;
    let tgt = pi1_inclusion(f.cod())?;
    let pos: std::collections::HashMap<usize, usize> =
        tgt.table().iter().enumerate().map(|(k, &a)| (a, k)).collect();
    let map = (0..src.dom().len())
        .map(|k| {
            pos.get(&f.f1().apply(src.apply(k))).copied().ok_or_else(|| {
                Error::InvalidFunctor("f1 does not preserve the zero endpoints".into())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Morphism::new(src.dom(), tgt.dom(), map)
}

/// A pullback of `F: X -> Y` along a split epi `G: Z -> Y`, with the
/// section of `G` and the induced section of the projection `W -> X`.
#[derive(Debug, Clone)]
pub struct SplitEpiSquare {
    pub pullback: GpdPullback,
    pub section_right: GFunctor,
    pub section_left: GFunctor,
}

impl SplitEpiSquare {
    /// Builds the square and its left section from `F`, `G` and a section
    /// of `G`.
    pub fn new(f: &GFunctor, g: &GFunctor, section_right: &GFunctor) -> Result<SplitEpiSquare> {
        let back = GFunctor::compose(g, section_right)
            .map_err(|_| Error::NotASplitEpiSquare("right section has the wrong type".into()))?;
        if back != GFunctor::identity(g.cod()) {
            return Err(Error::NotASplitEpiSquare("right section is not a section".into()));
        }
        let pullback = crate::gpd::gpd_pullback(f, g)?;
        let id = GFunctor::identity(f.dom());
        let lift = GFunctor::compose(section_right, f)?;
        let section_left = pullback
            .pair(&id, &lift)
            .map_err(|e| Error::NotASplitEpiSquare(format!("left section: {e}")))?;
        let square = SplitEpiSquare {
            pullback,
            section_right: section_right.clone(),
            section_left,
        };
        square.check()?;
        Ok(square)
    }

    pub fn check(&self) -> Result<()> {
        let pb = &self.pullback;
        for (name, sec, epi) in [
            ("right", &self.section_right, &pb.right),
            ("left", &self.section_left, &pb.proj1),
        ] {
            if !validate_functor(sec)?.is_valid() {
                return Err(Error::NotASplitEpiSquare(format!("{name} section is not a functor")));
            }
            let back = GFunctor::compose(epi, sec)
                .map_err(|_| Error::NotASplitEpiSquare(format!("{name} section has the wrong type")))?;
            if back != GFunctor::identity(epi.cod()) {
                return Err(Error::NotASplitEpiSquare(format!("{name} section is not a section")));
            }
        }
        Ok(())
    }
}

/// The comparison `u: π₀(W) -> π₀(X) x_{π₀(Y)} π₀(Z)`.
pub fn pi0_pullback_comparison(square: &SplitEpiSquare) -> Result<Morphism> {
    square.check()?;
    let pb = &square.pullback;
    let cone = pullback(&pi0_functor(&pb.left)?, &pi0_functor(&pb.right)?)?;
    cone.factor(&pi0_functor(&pb.proj1)?, &pi0_functor(&pb.proj2)?)
}

/// Whether `π₀` inverts `F`.
pub fn inverts(f: &GFunctor) -> Result<bool> {
    Ok(classify(&pi0_functor(f)?).iso)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpd::{
        full_subgroupoid, group_as_groupoid, groupoid_of_complex, indiscrete_of,
        relation_of_quotient, validate_groupoid,
    };

    fn set(n: usize) -> Object {
        Object::set_of_size(n).unwrap()
    }

    fn z(n: usize) -> Object {
        Object::cyclic(n).unwrap()
    }

    fn doubling_complex() -> Groupoid {
        groupoid_of_complex(&Morphism::new(&z(2), &z(4), vec![0, 2]).unwrap()).unwrap()
    }

    #[test]
    fn pi0_examples() {
        let p = pi0(&discrete_of(&set(3)).unwrap()).unwrap();
        assert_eq!(p.components.len(), 3);
        assert!(p.q.is_bijective());
        assert!(validate_functor(&p.eta).unwrap().is_valid());

        let p = pi0(&indiscrete_of(&set(2)).unwrap()).unwrap();
        assert_eq!(p.components.len(), 1);

        let p = pi0(&doubling_complex()).unwrap();
        assert_eq!(p.components.len(), 2);
        assert!(p.components.is_group());
        // Cosets of {0, 2} in Z/4.
        assert_eq!(p.q.table(), &[0, 1, 0, 1]);
    }

    #[test]
    fn pi0_functor_of_identity_is_identity() {
        let g = doubling_complex();
        assert!(pi0_functor(&GFunctor::identity(&g)).unwrap().is_identity());
    }

    #[test]
    fn supp_examples() {
        let q = Morphism::new(&set(3), &set(2), vec![0, 0, 1]).unwrap();
        let r = relation_of_quotient(&q).unwrap();
        let s = supp(&r).unwrap();
        assert!(s.sigma.is_levelwise_iso());

        let one = group_as_groupoid(&z(2), Backend::FinSet).unwrap();
        let s = supp(&one).unwrap();
        assert_eq!(s.support.objects().len(), 1);
        assert_eq!(s.support.arrows().len(), 1);
        assert!(validate_functor(&s.sigma).unwrap().is_valid());

        let d = discrete_of(&set(3)).unwrap();
        let s = supp(&d).unwrap();
        assert_eq!(s.support.arrows().len(), 3);
        assert!(s.support.d().is_bijective());
    }

    #[test]
    fn sigma_components_recover_d_and_c() {
        let g = group_as_groupoid(&z(3), Backend::FinSet).unwrap();
        let s = supp(&g).unwrap();
        assert_eq!(compose(s.support.d(), s.sigma.f1()).unwrap(), *g.d());
        assert_eq!(compose(s.support.c(), s.sigma.f1()).unwrap(), *g.c());
    }

    #[test]
    fn q_relation_examples() {
        let d = discrete_of(&set(2)).unwrap();
        assert!(q_relation(&d).unwrap().q().is_bijective());

        let q = Morphism::new(&set(3), &set(2), vec![0, 0, 1]).unwrap();
        let r = relation_of_quotient(&q).unwrap();
        assert_eq!(q_relation(&r).unwrap().quotient().len(), 2);

        let red = Morphism::new(&z(4), &z(2), vec![0, 1, 0, 1]).unwrap();
        let r = relation_of_quotient(&red).unwrap();
        let fork = q_relation(&r).unwrap();
        assert_eq!(fork.quotient().len(), 2);
        assert!(fork.quotient().is_group());

        let one = group_as_groupoid(&z(2), Backend::FinSet).unwrap();
        assert_eq!(q_relation(&one).unwrap_err(), Error::NotARelation);
    }

    #[test]
    fn decalage_examples() {
        let d = decalage(&discrete_of(&set(2)).unwrap()).unwrap();
        assert!(d.epsilon.is_levelwise_iso());

        let ind = indiscrete_of(&set(2)).unwrap();
        let d = decalage(&ind).unwrap();
        assert_eq!(d.dec.objects().len(), 4);
        assert!(validate_groupoid(&d.dec).is_valid());
        assert!(validate_functor(&d.epsilon).unwrap().is_valid());
        assert_eq!(pi0(&d.dec).unwrap().components.len(), 2);

        let one = group_as_groupoid(&z(2), Backend::FinSet).unwrap();
        let d = decalage(&one).unwrap();
        assert_eq!(d.dec.objects().len(), 2);
        assert_eq!(d.dec.arrows().len(), 4);
        assert!(classify(d.epsilon.f0()).split_epi);
        assert!(classify(d.epsilon.f1()).split_epi);
    }

    #[test]
    fn dec_is_a_relation_and_pairs_presentation_is_iso() {
        for g in [doubling_complex(), indiscrete_of(&set(3)).unwrap()] {
            let d = decalage(&g).unwrap();
            assert!(is_equivalence_relation(&d.dec));
            assert!(dec_pairs_comparison(&g, &d).unwrap().is_bijective());
        }
    }

    #[test]
    fn pi1_examples() {
        let zero = Morphism::zero(&z(2), &z(2)).unwrap();
        let g = groupoid_of_complex(&zero).unwrap();
        assert_eq!(pi1(&g).unwrap().len(), 2);
        assert_eq!(pi1(&doubling_complex()).unwrap().len(), 1);
        assert!(matches!(
            pi1(&discrete_of(&set(2)).unwrap()),
            Err(Error::BackendUnsupported { .. })
        ));
    }

    #[test]
    fn split_epi_comparison_examples() {
        let g = doubling_complex();
        let id = GFunctor::identity(&g);
        let square = SplitEpiSquare::new(&id, &id, &id).unwrap();
        assert!(pi0_pullback_comparison(&square).unwrap().is_bijective());

        let k = z(2);
        let cone = crate::base::product(&k, &k).unwrap();
        let p1 = discrete_functor_of(cone.proj1()).unwrap();
        let p2 = discrete_functor_of(cone.proj2()).unwrap();
        let s = discrete_functor_of(&cone.factor(&Morphism::identity(&k), &Morphism::zero(&k, &k).unwrap()).unwrap())
            .unwrap();
        let square = SplitEpiSquare::new(&p2, &p1, &s).unwrap();
        assert!(pi0_pullback_comparison(&square).unwrap().is_bijective());
    }

    #[test]
    fn broken_section_is_rejected() {
        let k = z(2);
        let cone = crate::base::product(&k, &k).unwrap();
        let p1 = discrete_functor_of(cone.proj1()).unwrap();
        let zero = discrete_functor_of(&Morphism::zero(&k, cone.apex()).unwrap()).unwrap();
        assert!(matches!(
            SplitEpiSquare::new(&p1, &p1, &zero),
            Err(Error::NotASplitEpiSquare(_))
        ));
    }

    #[test]
    fn inclusion_of_a_component_is_a_discrete_fibration() {
        let two = crate::gpd::gpd_product(
            &indiscrete_of(&set(2)).unwrap(),
            &discrete_of(&set(2)).unwrap(),
        )
        .unwrap()
        .apex;
        // Objects are (v, k); component k = 0 is objects 0 and 2.
        let inc = full_subgroupoid(&two, &[0, 2]).unwrap();
        let p = crate::gpd::profile(&inc).unwrap();
        assert!(p.discrete_fibration);
        assert!(!p.essentially_surjective);
    }
}
