//! Invariants over generated groupoids and functors, driven by proptest
//! seeds fed to the deterministic generators.

use proptest::prelude::*;

use gpd_factor::base::Backend;
use gpd_factor::error::{Error, Result};
use gpd_factor::factor::{
    comprehensive_factor, em_factor, is_covering, is_in_e, stability_search, StabilityBudget,
};
use gpd_factor::gpd::{
    is_discrete_fibration, is_equivalence_relation, validate_functor, validate_groupoid,
    GFunctor, Groupoid,
};
use gpd_factor::harness::{
    gen_functor, gen_groupoid, run_properties, GenConfig, PullbackClass,
};
use gpd_factor::reflection::{decalage, pi0, supp};
use gpd_factor::text::{parse, witness_document};

fn backend() -> impl Strategy<Value = Backend> {
    prop_oneof![Just(Backend::FinSet), Just(Backend::FinAb)]
}

fn cfg(backend: Backend, seed: u64) -> GenConfig {
    GenConfig {
        max_object_size: 8,
        ..GenConfig::new(backend, seed)
    }
}

fn groupoid(backend: Backend, seed: u64) -> Groupoid {
    let c = cfg(backend, seed);
    gen_groupoid(&mut c.rng(), &c).expect("generator stays under the cap")
}

fn functor(backend: Backend, seed: u64) -> GFunctor {
    let c = cfg(backend, seed);
    gen_functor(&mut c.rng(), &c).expect("generator stays under the cap")
}

/// `None` when the computation outgrew the size cap; such cases are
/// rejected rather than counted.
fn capped<T>(r: Result<T>) -> Option<T> {
    match r {
        Err(Error::CapExceeded { .. }) => None,
        other => Some(other.unwrap()),
    }
}

/// Connected components by repeated relaxation of component labels.
fn label_components(g: &Groupoid) -> usize {
    let mut label: Vec<usize> = (0..g.objects().len()).collect();
    loop {
        let mut changed = false;
        for a in 0..g.arrows().len() {
            let (s, t) = (g.d().apply(a), g.c().apply(a));
            let m = label[s].min(label[t]);
            if label[s] != m || label[t] != m {
                label[s] = m;
                label[t] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut roots = label;
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_entities_are_valid(b in backend(), seed in any::<u64>()) {
        prop_assert!(validate_groupoid(&groupoid(b, seed)).is_valid());
        prop_assert!(validate_functor(&functor(b, seed)).unwrap().is_valid());
    }

    #[test]
    fn printing_a_parsed_witness_is_idempotent(b in backend(), seed in any::<u64>()) {
        let f = functor(b, seed);
        let text = witness_document(&[("f", &f)]);
        let doc = parse(&text).unwrap();
        prop_assert_eq!(doc.functor("f"), Some(&f));
        prop_assert_eq!(doc.print(), text);
    }

    #[test]
    fn pi0_counts_connected_components(seed in any::<u64>()) {
        let g = groupoid(Backend::FinSet, seed);
        prop_assert_eq!(pi0(&g).unwrap().components.len(), label_components(&g));
    }

    #[test]
    fn factorizations_reassemble(b in backend(), seed in any::<u64>()) {
        let f = functor(b, seed);
        let em = capped(em_factor(&f));
        let comp = capped(comprehensive_factor(&f));
        prop_assume!(em.is_some() && comp.is_some());
        for fac in [em.unwrap(), comp.unwrap()] {
            prop_assert!(fac.reassembles());
            let problems = capped(fac.recheck());
            prop_assume!(problems.is_some());
            prop_assert!(problems.unwrap().is_empty());
        }
    }

    #[test]
    fn unit_is_in_e(b in backend(), seed in any::<u64>()) {
        let g = groupoid(b, seed);
        prop_assert!(is_in_e(&pi0(&g).unwrap().eta).unwrap());
    }

    #[test]
    fn dec_and_supp_are_equivalence_relations(b in backend(), seed in any::<u64>()) {
        let g = groupoid(b, seed);
        let dec = capped(decalage(&g));
        prop_assume!(dec.is_some());
        prop_assert!(is_equivalence_relation(&dec.unwrap().dec));
        prop_assert!(is_equivalence_relation(&supp(&g).unwrap().support));
    }

    #[test]
    fn coverings_are_discrete_fibrations(b in backend(), seed in any::<u64>()) {
        let f = functor(b, seed);
        let verdict = capped(is_covering(&f));
        prop_assume!(verdict.is_some());
        prop_assert_eq!(verdict.unwrap().covering, is_discrete_fibration(&f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn suite_runs_are_deterministic(b in backend(), seed in any::<u64>()) {
        let c = GenConfig { trials: 3, ..GenConfig::new(b, seed) };
        let ids = ["em-factorization", "trivial-covering-routes", "dec-relation"];
        let first = run_properties(&c, Some(&ids)).unwrap();
        let second = run_properties(&c, Some(&ids)).unwrap();
        prop_assert_eq!(first.stream(), second.stream());
    }

    #[test]
    fn stability_search_is_deterministic(b in backend(), seed in any::<u64>()) {
        let f = functor(b, seed);
        let budget = StabilityBudget { trials: 5, max_size: 8, seed };
        let one = stability_search(&f, PullbackClass::All, &budget, &[]).unwrap();
        let two = stability_search(&f, PullbackClass::All, &budget, &[]).unwrap();
        prop_assert_eq!(one.probed, two.probed);
        prop_assert_eq!(one.skipped, two.skipped);
        prop_assert_eq!(
            one.counterexample().map(|w| (w.probe, w.along.clone())),
            two.counterexample().map(|w| (w.probe, w.along.clone()))
        );
    }
}
