//! Random instances, brute-force oracles, the stability counterexample and
//! the property-suite runner.
//!
//! Generation is compositional: codomains are generated first and functors
//! are produced by operations that preserve validity (inclusions, inverse
//! images, products, décalage, units, quotients, pullbacks, composites).
//! Set groupoids are disjoint unions of `Ind(V) x Z/k`; group groupoids are
//! the groupoids of two-term complexes `∂: N -> C`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::base::{
    classify, coequalizer, cyclic_sum_unit, extend_hom, generators, kernel, pullback,
    random_morphism, square_is_pullback, Backend, Elem, Morphism, Object,
};
use crate::error::{Error, Result};
use crate::factor::{
    comprehensive_factor, em_factor, finality_criteria, is_covering, is_final, is_in_e,
    is_trivial_covering, orthogonal_fill_in, stability_search, trivial_covering_routes,
    Factorization, FactorizationKind, FillInMethod, StabilityBudget, EXHAUSTIVE_FILL_IN_ARROWS,
};
use crate::gpd::{
    discrete_functor, discrete_of, ensure_valid_functor, ensure_valid_groupoid, full_subgroupoid,
    functor_of_chain_map, gpd_product, gpd_pullback, groupoid_of_complex, indiscrete_of,
    inverse_image, is_discrete_fibration, is_equivalence_relation, profile, validate_functor,
    validate_groupoid, GFunctor, Groupoid,
};
use crate::reflection::{
    dec_functor, dec_pairs_comparison, decalage, pi0, pi0_functor, pi0_pullback_comparison, pi1,
    q_functor, supp, supp_functor, SplitEpiSquare,
};

/// Classes of functors a functor may be pulled back along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PullbackClass {
    All,
    /// Levelwise regular epimorphisms.
    RegularEpi,
}

impl PullbackClass {
    pub fn admits(self, g: &GFunctor) -> bool {
        match self {
            PullbackClass::All => true,
            PullbackClass::RegularEpi => g.is_levelwise_regular_epi(),
        }
    }
}

impl fmt::Display for PullbackClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PullbackClass::All => "all",
            PullbackClass::RegularEpi => "regular-epi",
        })
    }
}

impl FromStr for PullbackClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(PullbackClass::All),
            "regular-epi" | "regular_epi" => Ok(PullbackClass::RegularEpi),
            other => Err(Error::InvalidInput(format!("unknown pullback class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub backend: Backend,
    pub seed: u64,
    /// Cap on the arrows of a generated groupoid.
    pub max_object_size: usize,
    pub max_components: usize,
    pub max_vertex_group_order: usize,
    pub trials: usize,
}

impl GenConfig {
    pub fn new(backend: Backend, seed: u64) -> GenConfig {
        GenConfig {
            backend,
            seed,
            max_object_size: 16,
            max_components: 3,
            max_vertex_group_order: 4,
            trials: 200,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.max_object_size == 0 || self.max_components == 0 || self.max_vertex_group_order == 0 {
            return Err(Error::InvalidInput("generator caps must be positive".into()));
        }
        Ok(())
    }

    /// The instance stream of this configuration.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

const RETRIES: usize = 64;

/// How a generated groupoid was built.
#[derive(Debug, Clone)]
pub enum Shape {
    /// `(vertices, vertex group order)` per component.
    Components(Vec<(usize, usize)>),
    Complex(Morphism),
}

/// Disjoint union of `Ind(V_j) x Z/k_j` over sets. Objects are numbered
/// consecutively; arrows are `(s, t, g)`.
pub fn component_groupoid(components: &[(usize, usize)]) -> Result<Groupoid> {
    let mut owner = Vec::new();
    for (j, &(v, k)) in components.iter().enumerate() {
        if v == 0 || k == 0 {
            return Err(Error::InvalidInput("components need a vertex and a group".into()));
        }
        owner.extend(std::iter::repeat_n(j, v));
    }
    let mut rows = Vec::new();
    let mut index = HashMap::new();
    for s in 0..owner.len() {
        for t in 0..owner.len() {
            if owner[s] != owner[t] {
                continue;
            }
            for g in 0..components[owner[s]].1 {
                index.insert((s, t, g), rows.len());
                rows.push((s, t, g));
            }
        }
    }
    crate::base::check_cap(rows.len())?;
    let x0 = Object::set_of_size(owner.len())?;
    let x1 = Object::finset(
        rows.iter()
            .map(|&(s, t, g)| Elem::tuple(vec![Elem::int(s), Elem::int(t), Elem::int(g)]))
            .collect(),
    )?;
    let order = |s: usize| components[owner[s]].1;
    let d = Morphism::from_fn(&x1, &x0, |a| rows[a].0);
    let c = Morphism::from_fn(&x1, &x0, |a| rows[a].1);
    let e = Morphism::from_fn(&x0, &x1, |s| index[&(s, s, 0)]);
    let inv = Morphism::from_fn(&x1, &x1, |a| {
        let (s, t, g) = rows[a];
        index[&(t, s, (order(s) - g) % order(s))]
    });
    Groupoid::from_parts(&x0, &x1, d, c, e, inv, |u, v| {
        let (t, w, g2) = rows[u];
        let (s, t2, g1) = rows[v];
        debug_assert_eq!(t, t2);
        Ok(index[&(s, w, (g1 + g2) % order(s))])
    })
}

fn random_orders<R: Rng>(rng: &mut R, max_total: usize, max_order: usize) -> Vec<usize> {
    let mut orders = Vec::new();
    let mut total = 1;
    let parts = rng.gen_range(0..=2);
    for _ in 0..parts {
        let n = rng.gen_range(1..=max_order.max(1));
        if n > 1 && total * n <= max_total {
            orders.push(n);
            total *= n;
        }
    }
    orders
}

fn random_group<R: Rng>(rng: &mut R, max_total: usize, max_order: usize) -> Result<Object> {
    let orders = random_orders(rng, max_total, max_order);
    if orders.is_empty() {
        return Ok(Object::terminal(Backend::FinAb));
    }
    Object::cyclic_sum(&orders)
}

pub fn gen_shaped<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Result<(Groupoid, Shape)> {
    cfg.check()?;
    for _ in 0..RETRIES {
        match cfg.backend {
            Backend::FinSet => {
                let count = rng.gen_range(1..=cfg.max_components);
                let mut comps = Vec::with_capacity(count);
                let mut arrows = 0;
                for _ in 0..count {
                    let v = rng.gen_range(1..=3);
                    let k = rng.gen_range(1..=cfg.max_vertex_group_order);
                    if arrows + v * v * k <= cfg.max_object_size {
                        arrows += v * v * k;
                        comps.push((v, k));
                    }
                }
                if comps.is_empty() {
                    continue;
                }
                let g = component_groupoid(&comps)?;
                return Ok((g, Shape::Components(comps)));
            }
            Backend::FinAb => {
                let cap = cfg.max_object_size;
                let c = random_group(rng, cap, cfg.max_vertex_group_order.max(2))?;
                let n = random_group(rng, cap / c.len(), cfg.max_vertex_group_order.max(2))?;
                if n.len() * c.len() > cap {
                    continue;
                }
                let del = random_morphism(rng, &n, &c, &|_, _| true)
                    .ok_or_else(|| Error::GenerationFailed("no boundary map".into()))?;
                let g = groupoid_of_complex(&del)?;
                return Ok((g, Shape::Complex(del)));
            }
        }
    }
    Err(Error::GenerationFailed("no groupoid within the caps".into()))
}

pub fn gen_groupoid<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Result<Groupoid> {
    Ok(gen_shaped(rng, cfg)?.0)
}

/// A small object of the backend: a set of 1..=3 points or a group of
/// order at most 4.
fn small_object<R: Rng>(rng: &mut R, backend: Backend) -> Result<Object> {
    match backend {
        Backend::FinSet => Object::set_of_size(rng.gen_range(1..=3)),
        Backend::FinAb => random_group(rng, 4, 4),
    }
}

/// A small groupoid of the backend with at most `cap` arrows.
fn small_groupoid<R: Rng>(rng: &mut R, backend: Backend, cap: usize) -> Result<Groupoid> {
    let cfg = GenConfig {
        backend,
        seed: 0,
        max_object_size: cap.max(1),
        max_components: 2,
        max_vertex_group_order: 2,
        trials: 0,
    };
    gen_groupoid(rng, &cfg)
}

/// A surjection onto `target`: for sets, a shuffled cover plus extra
/// points; for groups, `⊕ Z/(o_k t_k) -> target` on a generating set.
fn surjection_onto<R: Rng>(rng: &mut R, target: &Object) -> Result<Morphism> {
    match target.backend() {
        Backend::FinSet => {
            let extra = rng.gen_range(0..=1);
            let mut table: Vec<usize> = (0..target.len()).collect();
            for _ in 0..extra {
                table.push(rng.gen_range(0..target.len().max(1)));
            }
            table.shuffle(rng);
            Morphism::new(&Object::set_of_size(table.len())?, target, table)
        }
        Backend::FinAb => {
            let gens = generators(target);
            if gens.is_empty() {
                let t = rng.gen_range(1..=2);
                return Morphism::zero(&Object::cyclic(t)?, target);
            }
            let orders: Vec<usize> = gens
                .iter()
                .map(|&g| target.order(g) * rng.gen_range(1..=2))
                .collect();
            let src = Object::cyclic_sum(&orders)?;
            let units: Vec<usize> = (0..orders.len()).map(|k| cyclic_sum_unit(&orders, k)).collect();
            extend_hom(&src, target, &units, &gens)
                .ok_or_else(|| Error::GenerationFailed("generator images do not extend".into()))
        }
    }
}

/// A random map `S -> target` from a small object.
fn map_into<R: Rng>(rng: &mut R, target: &Object) -> Result<Morphism> {
    let src = small_object(rng, target.backend())?;
    random_morphism(rng, &src, target, &|_, _| true)
        .ok_or_else(|| Error::GenerationFailed("no map into the object".into()))
}

/// Random nonempty subgroup or subset of objects.
fn object_subset<R: Rng>(rng: &mut R, x0: &Object) -> Vec<usize> {
    match x0.backend() {
        Backend::FinSet => {
            let mut keep: Vec<usize> = (0..x0.len()).filter(|_| rng.gen_bool(0.5)).collect();
            if keep.is_empty() {
                keep.push(rng.gen_range(0..x0.len()));
            }
            keep
        }
        Backend::FinAb => {
            let g = rng.gen_range(0..x0.len());
            let mut span = vec![x0.zero()];
            let mut x = g;
            while x != x0.zero() {
                span.push(x);
                x = x0.add(x, g);
            }
            span.sort_unstable();
            span
        }
    }
}

/// The constant functor at the object `k0` (zero for groups).
fn constant_functor(x: &Groupoid, y: &Groupoid, k0: usize) -> Result<GFunctor> {
    let e = y.e().apply(k0);
    GFunctor::new(
        x,
        y,
        Morphism::from_fn(x.objects(), y.objects(), |_| k0),
        Morphism::from_fn(x.arrows(), y.arrows(), |_| e),
    )
}

fn product_projection<R: Rng>(rng: &mut R, y: &Groupoid, max_size: usize) -> Result<GFunctor> {
    let budget = (max_size / y.arrows().len().max(1)).max(1);
    let k = small_groupoid(rng, y.backend(), budget.min(4))?;
    Ok(gpd_product(y, &k)?.proj1)
}

/// A random functor of the class into `y` whose domain has at most
/// `max_size` arrows.
pub fn functor_into<R: Rng>(
    rng: &mut R,
    y: &Groupoid,
    class: PullbackClass,
    max_size: usize,
) -> Result<GFunctor> {
    for _ in 0..RETRIES {
        let cand = match functor_into_once(rng, y, class, max_size, 2) {
            Ok(g) => g,
            Err(Error::CapExceeded { .. }) | Err(Error::GenerationFailed(_)) => continue,
            Err(e) => return Err(e),
        };
        if cand.dom().arrows().len() <= max_size && class.admits(&cand) {
            return Ok(cand);
        }
    }
    Err(Error::GenerationFailed(format!("no {class} functor within size {max_size}")))
}

fn functor_into_once<R: Rng>(
    rng: &mut R,
    y: &Groupoid,
    class: PullbackClass,
    max_size: usize,
    depth: usize,
) -> Result<GFunctor> {
    let families = match class {
        PullbackClass::All => 10,
        PullbackClass::RegularEpi => 5,
    };
    let pick = rng.gen_range(0..families);
    functor_family(rng, y, class, max_size, depth, pick)
}

fn functor_family<R: Rng>(
    rng: &mut R,
    y: &Groupoid,
    class: PullbackClass,
    max_size: usize,
    depth: usize,
    pick: usize,
) -> Result<GFunctor> {
    match (class, pick) {
        (_, 0) => Ok(GFunctor::identity(y)),
        (_, 1) => Ok(decalage(y)?.epsilon),
        (_, 2) => product_projection(rng, y, max_size),
        (PullbackClass::RegularEpi, 3) => inverse_image(y, &surjection_onto(rng, y.objects())?),
        (PullbackClass::RegularEpi, _) | (PullbackClass::All, 9) => {
            if depth == 0 {
                return Ok(GFunctor::identity(y));
            }
            let first = functor_into_once(rng, y, class, max_size, depth - 1)?;
            if rng.gen_bool(0.5) {
                let second = functor_into_once(rng, first.dom(), class, max_size, depth - 1)?;
                GFunctor::compose(&first, &second)
            } else {
                // Pull one probe back along another and compose down.
                let other = functor_into_once(rng, y, class, max_size, depth - 1)?;
                let pb = gpd_pullback(&first, &other)?;
                GFunctor::compose(&other, &pb.proj2)
            }
        }
        (_, 3) => inverse_image(y, &map_into(rng, y.objects())?),
        (_, 4) => discrete_functor(y, &map_into(rng, y.objects())?),
        (_, 5) => full_subgroupoid(y, &object_subset(rng, y.objects())),
        (_, 6) => {
            let inner = functor_into_once(rng, y, class, max_size, depth.saturating_sub(1))?;
            GFunctor::compose(&decalage(y)?.epsilon, &dec_functor(&inner)?)
        }
        (_, 7) if y.backend() == Backend::FinAb => chain_map_into(rng, y),
        (_, 7) => {
            // A point of a vertex group, seen as a functor from Z/k.
            let o = rng.gen_range(0..y.objects().len());
            let loops: Vec<usize> = (0..y.arrows().len()).filter(|&a| y.endpoints(a) == (o, o)).collect();
            let a = *loops.choose(rng).expect("identities are loops");
            loop_functor(y, o, a)
        }
        _ => {
            let k = small_groupoid(rng, y.backend(), 4)?;
            let k0 = rng.gen_range(0..y.objects().len());
            let k0 = if y.backend() == Backend::FinAb { y.objects().zero() } else { k0 };
            constant_functor(&k, y, k0)
        }
    }
}

/// The functor from the cyclic group generated by the loop `a` at `o`,
/// as a one-object groupoid over sets.
fn loop_functor(y: &Groupoid, o: usize, a: usize) -> Result<GFunctor> {
    let mut powers = vec![y.e().apply(o)];
    let mut cur = a;
    while cur != powers[0] {
        powers.push(cur);
        cur = y.compose(a, cur).expect("loops compose");
    }
    let n = powers.len();
    let g = crate::gpd::group_as_groupoid(&Object::cyclic(n)?, Backend::FinSet)?;
    GFunctor::new(
        &g,
        y,
        Morphism::new(g.objects(), y.objects(), vec![o])?,
        Morphism::new(g.arrows(), y.arrows(), powers)?,
    )
}

/// A random chain map from a small complex into `y`, presented through
/// `ker d -> X0`: `(n, x) -> f_n(n) + e(f_c(x))`.
fn chain_map_into<R: Rng>(rng: &mut R, y: &Groupoid) -> Result<GFunctor> {
    let ker_d = kernel(y.d())?;
    let n_y = ker_d.dom().clone();
    let src_c = small_object(rng, Backend::FinAb)?;
    let src_n = small_object(rng, Backend::FinAb)?;
    let del = random_morphism(rng, &src_n, &src_c, &|_, _| true)
        .ok_or_else(|| Error::GenerationFailed("no boundary".into()))?;
    let f_c = random_morphism(rng, &src_c, y.objects(), &|_, _| true)
        .ok_or_else(|| Error::GenerationFailed("no object map".into()))?;
    let allowed = |n: usize, k: usize| y.c().apply(ker_d.apply(k)) == f_c.apply(del.apply(n));
    let f_n = random_morphism(rng, &src_n, &n_y, &allowed)
        .ok_or_else(|| Error::GenerationFailed("no compatible arrow map".into()))?;
    let x = groupoid_of_complex(&del)?;
    let cone = crate::base::product(&src_n, &src_c)?;
    let f1 = Morphism::from_fn(x.arrows(), y.arrows(), |t| {
        let (n, c) = (cone.proj1().apply(t), cone.proj2().apply(t));
        y.arrows().add(ker_d.apply(f_n.apply(n)), y.e().apply(f_c.apply(c)))
    });
    GFunctor::new(&x, y, f_c, f1)
}

/// Quotient functors out of a generated groupoid: vertex groups
/// `Z/k -> Z/(k/p)` over sets, `N -> N/K` with `K ≤ ker ∂` over groups.
fn quotient_functor<R: Rng>(rng: &mut R, y: &Groupoid, shape: &Shape) -> Result<GFunctor> {
    match shape {
        Shape::Components(comps) => {
            let reduced: Vec<(usize, usize)> = comps
                .iter()
                .map(|&(v, k)| {
                    let divisors: Vec<usize> = (1..=k).filter(|p| k % p == 0).collect();
                    (v, *divisors.choose(rng).expect("1 divides k"))
                })
                .collect();
            let tgt = component_groupoid(&reduced)?;
            let f1 = Morphism::from_fn(y.arrows(), tgt.arrows(), |a| {
                let parts = y.arrows().elem(a).as_tuple().expect("arrow triple").to_vec();
                let (s, t) = y.endpoints(a);
                let g = match &parts[2] {
                    Elem::Atom(label) => label.parse::<usize>().expect("numeric"),
                    _ => unreachable!("vertex group labels are numbers"),
                };
                let k = reduced[owner_of(comps, s)].1;
                let label = Elem::tuple(vec![Elem::int(s), Elem::int(t), Elem::int(g % k)]);
                tgt.arrows().index_of(&label).expect("reduced arrow exists")
            });
            GFunctor::new(y, &tgt, Morphism::identity(y.objects()), f1)
        }
        Shape::Complex(del) => {
            let ker = kernel(del)?;
            let sub: Vec<usize> = {
                let pick = ker.apply(rng.gen_range(0..ker.dom().len()));
                let n = del.dom();
                let mut span = vec![n.zero()];
                let mut x = pick;
                while x != n.zero() {
                    span.push(x);
                    x = n.add(x, pick);
                }
                span
            };
            let n = del.dom();
            let inc = n.subobject(&{
                let mut s = sub.clone();
                s.sort_unstable();
                s
            })?;
            let zero = Morphism::zero(inc.dom(), n)?;
            let fork = coequalizer(&inc, &zero)?;
            let del_q = fork.factor(del)?;
            functor_of_chain_map(del, &del_q, fork.q(), &Morphism::identity(del.cod()))
                .and_then(|f| {
                    // Rebuild against the generated codomain object.
                    GFunctor::new(y, f.cod(), f.f0().clone(), f.f1().clone())
                })
        }
    }
}

fn owner_of(comps: &[(usize, usize)], s: usize) -> usize {
    let mut acc = 0;
    for (j, &(v, _)) in comps.iter().enumerate() {
        acc += v;
        if s < acc {
            return j;
        }
    }
    unreachable!("object index within the components")
}

/// A random functor built from a generated groupoid by one of the closed
/// operations.
pub fn gen_functor<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Result<GFunctor> {
    for _ in 0..RETRIES {
        let (y, shape) = gen_shaped(rng, cfg)?;
        let cand = match rng.gen_range(0..7) {
            0 => pi0(&y).map(|p| p.eta),
            1 => supp(&y).map(|s| s.sigma),
            2 => decalage(&y).map(|d| d.epsilon),
            3 => quotient_functor(rng, &y, &shape),
            4 => functor_into(rng, &y, PullbackClass::All, cfg.max_object_size).and_then(|f| {
                let eta = pi0(&y)?.eta;
                GFunctor::compose(&eta, &f)
            }),
            _ => functor_into(rng, &y, PullbackClass::All, cfg.max_object_size),
        };
        match cand {
            Ok(f) => return Ok(f),
            Err(Error::CapExceeded { .. }) | Err(Error::GenerationFailed(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed("no functor within the caps".into()))
}

pub fn gen_regular_epi_functor<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Result<GFunctor> {
    for _ in 0..RETRIES {
        let (y, shape) = gen_shaped(rng, cfg)?;
        let cand = match rng.gen_range(0..6) {
            0 => pi0(&y).map(|p| p.eta),
            1 => supp(&y).map(|s| s.sigma),
            2 => quotient_functor(rng, &y, &shape),
            3 => quotient_functor(rng, &y, &shape).and_then(|q| {
                let into = functor_into(rng, &y, PullbackClass::RegularEpi, cfg.max_object_size)?;
                GFunctor::compose(&q, &into)
            }),
            _ => functor_into(rng, &y, PullbackClass::RegularEpi, cfg.max_object_size),
        };
        match cand {
            Ok(f) if f.is_levelwise_regular_epi() => return Ok(f),
            Ok(_) => return Err(Error::GenerationFailed("regular-epi family produced a non-epi".into())),
            Err(Error::CapExceeded { .. }) | Err(Error::GenerationFailed(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed("no regular epi functor within the caps".into()))
}

/// A pullback of a random `F: X -> Y` along a split epi `G: Z -> Y`: a
/// product projection `Y x K -> Y`, or for complexes a twisted extension
/// `∂_Z(n, m) = (∂n, ∂_K m + t ∂n)`.
pub fn gen_split_epi_square<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Result<SplitEpiSquare> {
    if cfg.max_object_size <= 1 {
        let y = discrete_of(&Object::terminal(cfg.backend))?;
        let id = GFunctor::identity(&y);
        return SplitEpiSquare::new(&id, &id, &id);
    }
    for _ in 0..RETRIES {
        let (y, shape) = gen_shaped(rng, cfg)?;
        let split = match (&shape, rng.gen_bool(0.5)) {
            (Shape::Complex(del), true) => twisted_split_epi(rng, &y, del),
            _ => product_split_epi(rng, &y),
        };
        let (g, s) = match split {
            Ok(pair) => pair,
            Err(Error::CapExceeded { .. }) | Err(Error::GenerationFailed(_)) => continue,
            Err(e) => return Err(e),
        };
        let f = match functor_into(rng, &y, PullbackClass::All, cfg.max_object_size) {
            Ok(f) => f,
            Err(Error::GenerationFailed(_)) => continue,
            Err(e) => return Err(e),
        };
        match SplitEpiSquare::new(&f, &g, &s) {
            Ok(sq) => return Ok(sq),
            Err(Error::CapExceeded { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed("no split epi square within the caps".into()))
}

fn product_split_epi<R: Rng>(rng: &mut R, y: &Groupoid) -> Result<(GFunctor, GFunctor)> {
    let k = small_groupoid(rng, y.backend(), 4)?;
    let pb = gpd_product(y, &k)?;
    let k0 = match y.backend() {
        Backend::FinAb => k.objects().zero(),
        Backend::FinSet => rng.gen_range(0..k.objects().len()),
    };
    let constant = constant_functor(y, &k, k0)?;
    let section = pb.pair(&GFunctor::identity(y), &constant)?;
    Ok((pb.proj1, section))
}

fn twisted_split_epi<R: Rng>(rng: &mut R, y: &Groupoid, del: &Morphism) -> Result<(GFunctor, GFunctor)> {
    let (n, c) = (del.dom(), del.cod());
    let m = small_object(rng, Backend::FinAb)?;
    let dk = small_object(rng, Backend::FinAb)?;
    let del_k = random_morphism(rng, &m, &dk, &|_, _| true)
        .ok_or_else(|| Error::GenerationFailed("no boundary".into()))?;
    let t = random_morphism(rng, c, &dk, &|_, _| true)
        .ok_or_else(|| Error::GenerationFailed("no twist".into()))?;
    let nm = crate::base::product(n, &m)?;
    let cd = crate::base::product(c, &dk)?;
    let del_z = Morphism::from_fn(nm.apex(), cd.apex(), |k| {
        let (a, b) = (nm.proj1().apply(k), nm.proj2().apply(k));
        let x = del.apply(a);
        cd.pair_index(x, dk.add(del_k.apply(b), t.apply(x))).expect("product is total")
    });
    let g = functor_of_chain_map(&del_z, del, nm.proj1(), cd.proj1())?;
    let s_n = nm.factor(&Morphism::identity(n), &Morphism::zero(n, &m)?)?;
    let s_c = cd.factor(&Morphism::identity(c), &t)?;
    let s = functor_of_chain_map(del, &del_z, &s_n, &s_c)?;
    // Rebase onto the generated groupoid (structurally equal).
    let g = GFunctor::new(g.dom(), y, g.f0().clone(), g.f1().clone())?;
    let s = GFunctor::new(y, g.dom(), s.f0().clone(), s.f1().clone())?;
    Ok((g, s))
}

/// Connected components by breadth-first search, labelled by their least
/// object.
pub fn oracle_pi0_components(g: &Groupoid) -> Result<Object> {
    if g.backend() != Backend::FinSet {
        return Err(Error::BackendUnsupported {
            op: "oracle_pi0_components",
            backend: g.backend(),
        });
    }
    let labels = bfs_components(g.objects().len(), (0..g.arrows().len()).map(|a| g.endpoints(a)));
    let mut reps: Vec<usize> = Vec::new();
    for (x, &l) in labels.iter().enumerate() {
        if l == reps.len() {
            reps.push(x);
        }
    }
    Object::finset(reps.iter().map(|&x| g.objects().elem(x).clone()).collect())
}

/// Component index per vertex, numbered in order of least vertex.
fn bfs_components(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for (s, t) in edges {
        adj[s].push(t);
        adj[t].push(s);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = next;
                    queue.push_back(w);
                }
            }
        }
        next += 1;
    }
    label
}

/// Comprehensive factorization through comma components: the fibre of the
/// middle groupoid over `y` is the set of components of `(F, y)`, whose
/// objects are pairs `(x, g: F x -> y)`.
pub fn oracle_comprehensive(f: &GFunctor) -> Result<Factorization> {
    let (x, y) = (f.dom(), f.cod());
    if x.backend() != Backend::FinSet {
        return Err(Error::BackendUnsupported {
            op: "oracle_comprehensive",
            backend: x.backend(),
        });
    }
    // Comma objects over each y.
    let mut comma: Vec<(usize, usize)> = Vec::new();
    let mut comma_index: HashMap<(usize, usize), usize> = HashMap::new();
    for o in 0..x.objects().len() {
        for g in 0..y.arrows().len() {
            if y.d().apply(g) == f.f0().apply(o) {
                comma_index.insert((o, g), comma.len());
                comma.push((o, g));
            }
        }
    }
    // (x, g) ~ (x', g') when some a: x -> x' has g' . f1(a) = g.
    let mut edges = Vec::new();
    for a in 0..x.arrows().len() {
        let (s, t) = x.endpoints(a);
        let fa = f.f1().apply(a);
        for g2 in 0..y.arrows().len() {
            if y.d().apply(g2) != f.f0().apply(t) {
                continue;
            }
            let g1 = y.compose(g2, fa).expect("composable");
            edges.push((comma_index[&(s, g1)], comma_index[&(t, g2)]));
        }
    }
    let comp = bfs_components(comma.len(), edges.into_iter());
    let count = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (p, &k) in comp.iter().enumerate() {
        members[k].push(p);
    }
    let over = |k: usize| {
        let (_, g) = comma[members[k][0]];
        y.c().apply(g)
    };
    let w0 = Object::finset(
        (0..count)
            .map(|k| {
                let (o, g) = comma[members[k][0]];
                Elem::pair(x.objects().elem(o).clone(), y.arrows().elem(g).clone())
            })
            .collect(),
    )?;
    let mut rows: Vec<(usize, usize)> = Vec::new();
    let mut row_index: HashMap<(usize, usize), usize> = HashMap::new();
    for k in 0..count {
        for h in 0..y.arrows().len() {
            if y.d().apply(h) == over(k) {
                row_index.insert((k, h), rows.len());
                rows.push((k, h));
            }
        }
    }
    let act = |k: usize, h: usize| {
        let (o, g) = comma[members[k][0]];
        comp[comma_index[&(o, y.compose(h, g).expect("composable"))]]
    };
    let w1 = Object::finset(
        rows.iter()
            .map(|&(k, h)| Elem::pair(w0.elem(k).clone(), y.arrows().elem(h).clone()))
            .collect(),
    )?;
    let d = Morphism::from_fn(&w1, &w0, |r| rows[r].0);
    let c = Morphism::from_fn(&w1, &w0, |r| act(rows[r].0, rows[r].1));
    let e = Morphism::from_fn(&w0, &w1, |k| row_index[&(k, y.e().apply(over(k)))]);
    let inv = Morphism::from_fn(&w1, &w1, |r| {
        let (k, h) = rows[r];
        row_index[&(act(k, h), y.inv().apply(h))]
    });
    let middle = Groupoid::from_parts(&w0, &w1, d, c, e, inv, |u, v| {
        let (_, h2) = rows[u];
        let (k1, h1) = rows[v];
        Ok(row_index[&(k1, y.compose(h2, h1).expect("composable"))])
    })?;
    let m_part = GFunctor::new(
        &middle,
        y,
        Morphism::from_fn(&w0, y.objects(), over),
        Morphism::from_fn(&w1, y.arrows(), |r| rows[r].1),
    )?;
    let e0: Vec<usize> = (0..x.objects().len())
        .map(|o| comp[comma_index[&(o, y.e().apply(f.f0().apply(o)))]])
        .collect();
    let e1 = Morphism::from_fn(x.arrows(), &w1, |a| row_index[&(e0[x.d().apply(a)], f.f1().apply(a))]);
    let e_part = GFunctor::new(x, &middle, Morphism::from_table(x.objects(), &w0, e0), e1)?;
    Ok(Factorization {
        kind: FactorizationKind::Comprehensive,
        original: f.clone(),
        e_part,
        middle,
        m_part,
        certificates: Vec::new(),
    })
}

/// Whether two factorizations of the same functor are isomorphic: an
/// invertible `θ` between the middles with `θ . e = e'` and `m' . θ = m`.
/// `θ` is found by matching objects along `e` and lifting through `m'`.
pub fn factorizations_isomorphic(a: &Factorization, b: &Factorization) -> Result<bool> {
    if a.original != b.original {
        return Ok(false);
    }
    let (wa, wb) = (&a.middle, &b.middle);
    if wa.objects().len() != wb.objects().len() || wa.arrows().len() != wb.arrows().len() {
        return Ok(false);
    }
    let mut lift: HashMap<(usize, usize), usize> = HashMap::new();
    for t in 0..wb.arrows().len() {
        lift.insert((wb.d().apply(t), b.m_part.f1().apply(t)), t);
    }
    let mut theta0: Vec<Option<usize>> = vec![None; wa.objects().len()];
    let mut queue = Vec::new();
    for o in 0..a.original.dom().objects().len() {
        let (s, t) = (a.e_part.f0().apply(o), b.e_part.f0().apply(o));
        match theta0[s] {
            Some(prev) if prev != t => return Ok(false),
            Some(_) => {}
            None => {
                theta0[s] = Some(t);
                queue.push(s);
            }
        }
    }
    while let Some(s) = queue.pop() {
        for arrow in 0..wa.arrows().len() {
            if wa.d().apply(arrow) != s {
                continue;
            }
            let Some(&t) = lift.get(&(theta0[s].expect("assigned"), a.m_part.f1().apply(arrow))) else {
                return Ok(false);
            };
            let target = wa.c().apply(arrow);
            if theta0[target].is_none() {
                theta0[target] = Some(wb.c().apply(t));
                queue.push(target);
            }
        }
    }
    let Some(theta0) = theta0.into_iter().collect::<Option<Vec<_>>>() else {
        return Ok(false);
    };
    let mut theta1 = Vec::with_capacity(wa.arrows().len());
    for arrow in 0..wa.arrows().len() {
        match lift.get(&(theta0[wa.d().apply(arrow)], a.m_part.f1().apply(arrow))) {
            Some(&t) => theta1.push(t),
            None => return Ok(false),
        }
    }
    let theta = GFunctor::new(
        wa,
        wb,
        Morphism::from_table(wa.objects(), wb.objects(), theta0),
        Morphism::from_table(wa.arrows(), wb.arrows(), theta1),
    )?;
    Ok(theta.is_levelwise_iso()
        && validate_functor(&theta)?.is_valid()
        && GFunctor::compose(&theta, &a.e_part)? == b.e_part
        && GFunctor::compose(&b.m_part, &theta)? == a.m_part)
}

/// Parses `Z/n` summands joined by `x`, e.g. `Z/2xZ/4`.
pub fn parse_group_spec(spec: &str) -> Result<Object> {
    let mut orders = Vec::new();
    for part in spec.split(['x', '+']) {
        let part = part.trim();
        let n = part
            .strip_prefix("Z/")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidInput(format!("bad group summand `{part}`, expected Z/n")))?;
        if n > 1 {
            orders.push(n);
        }
    }
    if orders.is_empty() {
        return Err(Error::InvalidInput("the group must be non-trivial".into()));
    }
    Object::cyclic_sum(&orders)
}

/// The cube over groups showing that final functors are not stably
/// inverted by `π₀`. With `D(A)` the discrete groupoid on `A`:
///
/// * front: `D(A) -> D(A) x Ind(A)`, `a -> (a, 0)`;
/// * right: `D(A) -> D(A) x Ind(A)`, `a -> (0, a)`;
/// * back and left: the maps out of `D(0)`.
///
/// The back face is the pullback of the front face along the right face.
#[derive(Debug, Clone)]
pub struct CounterexampleCube {
    pub group: Object,
    pub front_left: Groupoid,
    pub front_right: Groupoid,
    pub back_left: Groupoid,
    pub back_right: Groupoid,
    pub front: GFunctor,
    pub right: GFunctor,
    pub back: GFunctor,
    pub left: GFunctor,
}

pub fn counterexample_cube(a: &Object) -> Result<CounterexampleCube> {
    if a.backend() != Backend::FinAb || a.len() < 2 {
        return Err(Error::InvalidInput("the cube needs a non-trivial group".into()));
    }
    let da = discrete_of(a)?;
    let prod = gpd_product(&da, &indiscrete_of(a)?)?;
    let fr = prod.apex.clone();
    let ind_pairs = crate::base::product(a, a)?;
    let z = a.zero();
    let obj = |p: usize, q: usize| prod.objects_cone().pair_index(p, q).expect("product object");
    let arr = |p: usize, s: usize, t: usize| {
        let pair = ind_pairs.pair_index(s, t).expect("indiscrete arrow");
        prod.arrows_cone().pair_index(p, pair).expect("product arrow")
    };
    let n = a.len();
    let front = GFunctor::new(
        &da,
        &fr,
        Morphism::new(da.objects(), fr.objects(), (0..n).map(|x| obj(x, z)).collect())?,
        Morphism::new(da.arrows(), fr.arrows(), (0..n).map(|x| arr(x, z, z)).collect())?,
    )?;
    let right = GFunctor::new(
        &da,
        &fr,
        Morphism::new(da.objects(), fr.objects(), (0..n).map(|x| obj(z, x)).collect())?,
        Morphism::new(da.arrows(), fr.arrows(), (0..n).map(|x| arr(z, x, x)).collect())?,
    )?;
    let zero = discrete_of(&Object::terminal(Backend::FinAb))?;
    let from_zero = || {
        GFunctor::new(
            &zero,
            &da,
            Morphism::zero(zero.objects(), a)?,
            Morphism::zero(zero.arrows(), a)?,
        )
    };
    Ok(CounterexampleCube {
        group: a.clone(),
        front_left: da.clone(),
        front_right: fr,
        back_left: zero.clone(),
        back_right: da.clone(),
        front,
        right,
        back: from_zero()?,
        left: from_zero()?,
    })
}

impl CounterexampleCube {
    /// Whether the back face and left face form the pullback of the front
    /// face along the right face: the induced comparison is an iso.
    pub fn is_pullback(&self) -> Result<bool> {
        let pb = gpd_pullback(&self.front, &self.right)?;
        let u = pb.pair(&self.left, &self.back)?;
        Ok(u.is_levelwise_iso())
    }
}

/// Outcome of one property on one trial.
#[derive(Debug, Clone)]
enum Outcome {
    Pass { checks: usize },
    Skip(String),
    Fail { message: String, witness: String },
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub trial: usize,
    pub seed: u64,
    pub message: String,
    /// Serialized entities reproducing the failure.
    pub witness: String,
}

#[derive(Debug, Clone)]
pub struct PropertyRecord {
    pub id: &'static str,
    pub statement: &'static str,
    pub trials: usize,
    /// Trials that ran to completion (pass or fail).
    pub executed: usize,
    /// Sub-instances verified across all passing trials.
    pub checks: usize,
    pub failures: Vec<Failure>,
    /// Set when the property does not apply to the backend.
    pub skip_reason: Option<String>,
    /// Per-trial skips, e.g. size cap exceeded.
    pub trial_skips: Vec<(usize, String)>,
    pub outcomes: Vec<(usize, u64, bool)>,
    pub runtime: Duration,
}

impl PropertyRecord {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub title: String,
    pub backend: Option<Backend>,
    pub seed: u64,
    pub records: Vec<PropertyRecord>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.records.iter().all(PropertyRecord::passed)
    }

    pub fn record(&self, id: &str) -> Option<&PropertyRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Machine-readable stream: one `PROP` line per outcome, with failure
    /// witnesses indented below their line.
    pub fn stream(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            if let Some(reason) = &r.skip_reason {
                out.push_str(&format!("SKIP {} reason={}\n", r.id, reason.replace(' ', "_")));
                continue;
            }
            for &(trial, seed, pass) in &r.outcomes {
                let verdict = if pass { "pass" } else { "fail" };
                out.push_str(&format!("PROP {} {verdict} trial={trial} seed={seed}\n", r.id));
                if !pass {
                    if let Some(f) = r.failures.iter().find(|f| f.trial == trial) {
                        out.push_str(&format!("    # {}\n", f.message));
                        for line in f.witness.lines() {
                            out.push_str(&format!("    {line}\n"));
                        }
                    }
                }
            }
        }
        out
    }

    /// Human-readable summary; runtimes are the only nondeterministic part.
    pub fn summary(&self) -> String {
        let mut out = format!("{}\n", self.title);
        if let Some(b) = self.backend {
            out.push_str(&format!("backend {b}, seed {}\n", self.seed));
            out.push_str(GENERATOR_NOTE);
            out.push('\n');
        }
        for r in &self.records {
            let status = match (&r.skip_reason, r.passed()) {
                (Some(_), _) => "skip",
                (None, true) => "pass",
                (None, false) => "FAIL",
            };
            out.push_str(&format!(
                "{status:4} {:32} executed {:4}/{:<4} checks {:5} failures {:3}  {:.2?}\n",
                r.id,
                r.executed,
                r.trials,
                r.checks,
                r.failures.len(),
                r.runtime
            ));
            out.push_str(&format!("     {}\n", r.statement));
            if let Some(reason) = &r.skip_reason {
                out.push_str(&format!("     skipped: {reason}\n"));
            }
            if !r.trial_skips.is_empty() {
                out.push_str(&format!("     {} trials skipped ({})\n", r.trial_skips.len(), r.trial_skips[0].1));
            }
            for f in &r.failures {
                out.push_str(&format!("     trial {} seed {}: {}\n", f.trial, f.seed, f.message));
            }
        }
        out.push_str(if self.passed() { "status: pass\n" } else { "status: FAIL\n" });
        out
    }
}

const GENERATOR_NOTE: &str = "instances: set groupoids are unions of Ind(V) x Z/k; group groupoids come from two-term complexes; functors are built compositionally";

/// Seed of trial `t` of a suite seeded with `seed`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    let mut z = seed ^ (t as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type Check = fn(&mut ChaCha8Rng, &GenConfig, u64) -> Result<Outcome>;

struct Property {
    id: &'static str,
    statement: &'static str,
    only: Option<Backend>,
    skip_reason: &'static str,
    check: Check,
}

const MALTSEV_ONLY: &str = "needs a Mal'tsev base; the set backend is exact but not Mal'tsev";

fn properties() -> Vec<Property> {
    let both = |id, statement, check| Property {
        id,
        statement,
        only: None,
        skip_reason: "",
        check,
    };
    let maltsev = |id, statement, check| Property {
        id,
        statement,
        only: Some(Backend::FinAb),
        skip_reason: MALTSEV_ONLY,
        check,
    };
    vec![
        both("generator-soundness", "generated groupoids and functors pass validation", prop_generator_soundness),
        Property {
            id: "pi0-oracle",
            statement: "pi0 equals breadth-first connected components",
            only: Some(Backend::FinSet),
            skip_reason: "the search oracle works on sets",
            check: prop_pi0_oracle,
        },
        Property {
            id: "complex-homotopy",
            statement: "pi0 of a complex groupoid is coker d, pi1 is ker d",
            only: Some(Backend::FinAb),
            skip_reason: "complex groupoids live over groups",
            check: prop_complex_homotopy,
        },
        both("pi0-triangle", "pi0 of a discrete groupoid is its object of objects", prop_pi0_triangle),
        both("unit-in-e", "pi0 inverts the unit of the reflection", prop_unit_in_e),
        both("dec-relation", "Dec is an equivalence relation and the counit is levelwise split epi", prop_dec_relation),
        both("trivial-covering-routes", "unit-square test agrees with F and Supp F discrete fibrations", prop_trivial_covering_routes),
        both("covering-splitting", "coverings are the discrete fibrations and split along the counit", prop_covering_splitting),
        both("em-factorization", "(E,M) factorization reassembles with verified classes", prop_em_factorization),
        both("semi-left-exact", "pi0 preserves pullbacks of trivial coverings", prop_semi_left_exact),
        both("comprehensive-factorization", "comprehensive factorization reassembles; sets agree with comma oracle", prop_comprehensive),
        both("fibration-pullback-stable", "discrete fibrations are stable under pullback", prop_fibration_stable),
        both("full-pullback-stable", "full functors are pullback stable and have fully faithful support", prop_full_stable),
        both("supp-preserves-full-pullbacks", "Supp preserves pullbacks of full functors", prop_supp_full_pullbacks),
        maltsev("goursat-forks", "Q maps exact forks of equivalence relations to exact forks", prop_goursat),
        maltsev("split-epi-comparison", "pi0 comparison of a split epi pullback is regular epi", prop_split_epi_comparison),
        maltsev("finality-criteria", "pi0/pi1 finality agrees with full + essentially surjective", prop_finality_criteria),
        maltsev("regular-epi-coverings", "regular epi coverings and trivial coverings by discrete fibrations", prop_regular_epi_coverings),
        maltsev("relative-monotone-light", "final parts of regular epis are stable along regular epis", prop_relative_monotone_light),
        maltsev("stabilising-dec", "(E,M) factorizations over Dec(Y) are stable along regular epis", prop_stabilising_dec),
        both("fill-in-uniqueness", "orthogonal fill-ins exist uniquely on tiny squares", prop_fill_in),
    ]
}

/// Every property identifier, in run order.
pub fn property_ids() -> Vec<&'static str> {
    properties().into_iter().map(|p| p.id).collect()
}

/// Runs every property over `cfg.trials` instances. Trials run in
/// parallel and are merged by trial index.
pub fn run_suite(cfg: &GenConfig) -> Result<SuiteReport> {
    run_properties(cfg, None)
}

/// Like [`run_suite`], restricted to the named properties.
pub fn run_properties(cfg: &GenConfig, only: Option<&[&str]>) -> Result<SuiteReport> {
    cfg.check()?;
    let mut records = Vec::new();
    for (index, prop) in properties().into_iter().enumerate() {
        if only.is_some_and(|ids| !ids.contains(&prop.id)) {
            continue;
        }
        records.push(run_property(cfg, index, &prop));
    }
    Ok(SuiteReport {
        title: "property suite".into(),
        backend: Some(cfg.backend),
        seed: cfg.seed,
        records,
    })
}

fn run_property(cfg: &GenConfig, index: usize, prop: &Property) -> PropertyRecord {
    let start = Instant::now();
    let mut record = PropertyRecord {
        id: prop.id,
        statement: prop.statement,
        trials: cfg.trials,
        executed: 0,
        checks: 0,
        failures: Vec::new(),
        skip_reason: None,
        trial_skips: Vec::new(),
        outcomes: Vec::new(),
        runtime: Duration::ZERO,
    };
    if prop.only.is_some_and(|b| b != cfg.backend) {
        record.skip_reason = Some(prop.skip_reason.to_string());
        return record;
    }
    let results: Vec<(usize, u64, Outcome)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(cfg.seed, t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let outcome = match (prop.check)(&mut rng, cfg, seed) {
                Ok(o) => o,
                Err(Error::CapExceeded { size, cap }) => {
                    Outcome::Skip(format!("size {size} over cap {cap}"))
                }
                Err(Error::GenerationFailed(m)) => Outcome::Skip(format!("generation failed: {m}")),
                Err(e) => Outcome::Fail {
                    message: e.to_string(),
                    witness: String::new(),
                },
            };
            (t, seed, outcome)
        })
        .collect();
    for (trial, seed, outcome) in results {
        match outcome {
            Outcome::Pass { checks } => {
                record.executed += 1;
                record.checks += checks;
                record.outcomes.push((trial, seed, true));
            }
            Outcome::Skip(reason) => record.trial_skips.push((trial, reason)),
            Outcome::Fail { message, witness } => {
                record.executed += 1;
                record.outcomes.push((trial, seed, false));
                record.failures.push(Failure {
                    trial,
                    seed,
                    message,
                    witness,
                });
            }
        }
    }
    record.runtime = start.elapsed();
    record
}

fn pass(checks: usize) -> Result<Outcome> {
    Ok(Outcome::Pass { checks })
}

fn fail_with(message: impl Into<String>, functors: &[(&str, &GFunctor)]) -> Result<Outcome> {
    Ok(Outcome::Fail {
        message: message.into(),
        witness: crate::text::witness_document(functors),
    })
}

fn prop_generator_soundness(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let g = gen_groupoid(rng, cfg)?;
    let report = validate_groupoid(&g);
    if !report.is_valid() {
        let id = GFunctor::identity(&g);
        return fail_with(format!("invalid groupoid: {report}"), &[("G", &id)]);
    }
    let mut checks = 1;
    for f in [gen_functor(rng, cfg)?, gen_regular_epi_functor(rng, cfg)?] {
        if let Err(e) = ensure_valid_functor(&f) {
            return fail_with(e.to_string(), &[("F", &f)]);
        }
        checks += 1;
    }
    let sq = gen_split_epi_square(rng, cfg)?;
    for f in [&sq.pullback.proj1, &sq.pullback.proj2, &sq.section_left, &sq.section_right] {
        if let Err(e) = ensure_valid_functor(f) {
            return fail_with(e.to_string(), &[("F", f)]);
        }
        checks += 1;
    }
    pass(checks)
}

fn prop_pi0_oracle(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_functor(rng, cfg)?;
    let mut checks = 0;
    for g in [f.dom(), f.cod()] {
        let oracle = oracle_pi0_components(g)?;
        let p = pi0(g)?;
        if oracle != p.components {
            let id = GFunctor::identity(g);
            return fail_with("pi0 differs from the search oracle", &[("G", &id)]);
        }
        checks += 1;
    }
    pass(checks)
}

fn prop_complex_homotopy(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let (g, shape) = gen_shaped(rng, cfg)?;
    let Shape::Complex(del) = shape else {
        return Err(Error::GenerationFailed("expected a complex".into()));
    };
    let zero = Morphism::zero(del.dom(), del.cod())?;
    let coker = coequalizer(&del, &zero)?;
    let p = pi0(&g)?;
    let ker = kernel(&del)?;
    let p1 = pi1(&g)?;
    // Same quotient map, and kernels of the same size embedded as
    // `(n, 0)`.
    if p.q.table() != coker.q().table() || p1.len() != ker.dom().len() {
        let id = GFunctor::identity(&g);
        return fail_with("complex groupoid homotopy differs from (coker, ker)", &[("G", &id)]);
    }
    pass(1)
}

fn prop_pi0_triangle(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let g = gen_groupoid(rng, cfg)?;
    let x0 = g.objects();
    let p = pi0(&discrete_of(x0)?)?;
    if p.components != *x0 || !p.q.is_identity() {
        let id = GFunctor::identity(&g);
        return fail_with("pi0 of a discrete groupoid is not its objects", &[("G", &id)]);
    }
    pass(1)
}

fn prop_unit_in_e(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let g = gen_groupoid(rng, cfg)?;
    let eta = pi0(&g)?.eta;
    if !is_in_e(&eta)? {
        return fail_with("pi0 does not invert its unit", &[("eta", &eta)]);
    }
    pass(1)
}

fn prop_dec_relation(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let g = gen_groupoid(rng, cfg)?;
    let d = decalage(&g)?;
    let ok = is_equivalence_relation(&d.dec)
        && validate_groupoid(&d.dec).is_valid()
        && validate_functor(&d.epsilon)?.is_valid()
        && classify(d.epsilon.f0()).split_epi
        && classify(d.epsilon.f1()).split_epi
        && dec_pairs_comparison(&g, &d)?.is_bijective();
    if !ok {
        return fail_with("Dec(G) is not a relation with split epi counit", &[("eps", &d.epsilon)]);
    }
    pass(1)
}

fn prop_trivial_covering_routes(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_functor(rng, cfg)?;
    let mut checks = 0;
    let fac = em_factor(&f)?;
    for g in [&f, &fac.m_part, &fac.e_part] {
        let r = trivial_covering_routes(g)?;
        if r.unit_square != r.fibrations {
            return fail_with(
                format!("unit square {} but fibrations {}", r.unit_square, r.fibrations),
                &[("F", g)],
            );
        }
        checks += 1;
    }
    pass(checks)
}

fn prop_covering_splitting(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_functor(rng, cfg)?;
    let fac = comprehensive_factor(&f)?;
    let mut checks = 0;
    for g in [&f, &fac.m_part] {
        let v = is_covering(g)?;
        if v.covering != profile(g)?.discrete_fibration {
            return fail_with("covering flag differs from discrete fibration", &[("F", g)]);
        }
        if let Some(w) = &v.witness {
            if !is_trivial_covering(&w.proj2)? {
                return fail_with("covering does not split along the counit", &[("F", g)]);
            }
            // Dec(F) is the same pullback up to the canonical comparison.
            let df = dec_functor(g)?;
            let cmp = w.pair(&decalage(g.dom())?.epsilon, &df)?;
            if !cmp.is_levelwise_iso() {
                return fail_with("Dec(F) is not the pullback along the counit", &[("F", g)]);
            }
        }
        checks += 1;
    }
    pass(checks)
}

fn prop_em_factorization(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_functor(rng, cfg)?;
    let fac = em_factor(&f)?;
    if !fac.reassembles() || fac.certificates.len() != 3 {
        return fail_with("(E,M) factorization does not reassemble", &[("F", &f)]);
    }
    ensure_valid_groupoid(&fac.middle)?;
    pass(1)
}

fn prop_semi_left_exact(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_functor(rng, cfg)?;
    let m = em_factor(&f)?.m_part;
    let g = functor_into(rng, m.cod(), PullbackClass::All, cfg.max_object_size)?;
    let pb = gpd_pullback(&m, &g)?;
    let ok = square_is_pullback(
        &pi0_functor(&pb.proj1)?,
        &pi0_functor(&pb.proj2)?,
        &pi0_functor(&m)?,
        &pi0_functor(&g)?,
    );
    if !ok {
        return fail_with("pi0 does not preserve the pullback", &[("M", &m), ("G", &g)]);
    }
    pass(1)
}

fn prop_comprehensive(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_functor(rng, cfg)?;
    let fac = comprehensive_factor(&f)?;
    if !fac.reassembles() || fac.certificates.len() != 4 {
        return fail_with("comprehensive factorization does not reassemble", &[("F", &f)]);
    }
    if cfg.backend == Backend::FinSet {
        let oracle = oracle_comprehensive(&f)?;
        if !factorizations_isomorphic(&fac, &oracle)? {
            return fail_with("comprehensive factorization differs from the comma oracle", &[("F", &f)]);
        }
        return pass(2);
    }
    pass(1)
}

fn prop_fibration_stable(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_functor(rng, cfg)?;
    let m = comprehensive_factor(&f)?.m_part;
    let g = functor_into(rng, m.cod(), PullbackClass::All, cfg.max_object_size)?;
    let pb = gpd_pullback(&m, &g)?;
    if !is_discrete_fibration(&pb.proj2) {
        return fail_with("pullback of a discrete fibration is not one", &[("M", &m), ("G", &g)]);
    }
    pass(1)
}

/// A full functor into a generated groupoid: an inverse image along a
/// random object map, or a generated functor when it happens to be full.
fn gen_full_functor<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Result<GFunctor> {
    let f = gen_functor(rng, cfg)?;
    if profile(&f)?.full {
        return Ok(f);
    }
    let y = f.cod();
    inverse_image(y, &map_into(rng, y.objects())?)
}

fn prop_full_stable(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_full_functor(rng, cfg)?;
    let g = functor_into(rng, f.cod(), PullbackClass::All, cfg.max_object_size)?;
    let pb = gpd_pullback(&f, &g)?;
    if !profile(&pb.proj2)?.full {
        return fail_with("pullback of a full functor is not full", &[("F", &f), ("G", &g)]);
    }
    if !profile(&supp_functor(&f)?)?.fully_faithful {
        return fail_with("Supp of a full functor is not fully faithful", &[("F", &f)]);
    }
    pass(2)
}

fn prop_supp_full_pullbacks(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_full_functor(rng, cfg)?;
    let g = functor_into(rng, f.cod(), PullbackClass::All, cfg.max_object_size)?;
    let pb = gpd_pullback(&f, &g)?;
    let (sp1, sp2) = (supp_functor(&pb.proj1)?, supp_functor(&pb.proj2)?);
    let (sf, sg) = (supp_functor(&f)?, supp_functor(&g)?);
    let ok = square_is_pullback(sp1.f0(), sp2.f0(), sf.f0(), sg.f0())
        && square_is_pullback(sp1.f1(), sp2.f1(), sf.f1(), sg.f1());
    if !ok {
        return fail_with("Supp does not preserve the pullback", &[("F", &f), ("G", &g)]);
    }
    pass(1)
}

fn prop_goursat(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let p = gen_regular_epi_functor(rng, cfg)?;
    let sp = supp_functor(&p)?;
    let k = gpd_pullback(&sp, &sp)?;
    let qp = q_functor(&sp)?;
    let (q1, q2) = (q_functor(&k.proj1)?, q_functor(&k.proj2)?);
    let kp = pullback(&qp, &qp)?;
    let u = kp.factor(&q1, &q2)?;
    if !sp.is_levelwise_regular_epi() || !classify(&qp).regular_epi || !u.is_bijective() {
        return fail_with("Q does not map the kernel-pair fork to an exact fork", &[("P", &p)]);
    }
    pass(1)
}

fn prop_split_epi_comparison(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let sq = gen_split_epi_square(rng, cfg)?;
    let u = pi0_pullback_comparison(&sq)?;
    if !classify(&u).regular_epi {
        return fail_with(
            "pi0 comparison is not regular epi",
            &[("F", &sq.pullback.left), ("G", &sq.pullback.right), ("S", &sq.section_right)],
        );
    }
    pass(1)
}

fn prop_finality_criteria(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_functor(rng, cfg)?;
    let fac = comprehensive_factor(&f)?;
    let mut checks = 0;
    for g in [&f, &fac.e_part] {
        let c = finality_criteria(g)?;
        if c.homotopy != c.full_and_surjective || c.homotopy != c.comma {
            return fail_with(format!("finality criteria disagree: {c:?}"), &[("F", g)]);
        }
        checks += 1;
    }
    pass(checks)
}

fn prop_regular_epi_coverings(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let f = gen_regular_epi_functor(rng, cfg)?;
    let df = is_discrete_fibration(&f);
    if is_covering(&f)?.covering != df {
        return fail_with("regular epi covering differs from discrete fibration", &[("F", &f)]);
    }
    let both = df && is_discrete_fibration(&supp_functor(&f)?);
    if is_trivial_covering(&f)? != both {
        return fail_with("regular epi trivial covering differs from the fibration test", &[("F", &f)]);
    }
    pass(1)
}

/// Random probes per stability search in the suites.
pub const STABILITY_PROBES: usize = 50;

/// Probe domains may be larger than generated groupoids: codomains such
/// as `Dec(Y)` exceed the generator caps.
const PROBE_SIZE_FACTOR: usize = 4;

fn stability_budget(cfg: &GenConfig, seed: u64) -> StabilityBudget {
    StabilityBudget {
        trials: STABILITY_PROBES,
        max_size: cfg.max_object_size * PROBE_SIZE_FACTOR,
        seed,
    }
}

fn prop_relative_monotone_light(rng: &mut ChaCha8Rng, cfg: &GenConfig, seed: u64) -> Result<Outcome> {
    let f = gen_regular_epi_functor(rng, cfg)?;
    let fac = comprehensive_factor(&f)?;
    let v = stability_search(&fac.e_part, PullbackClass::RegularEpi, &stability_budget(cfg, seed), &[])?;
    if let Some(w) = v.counterexample() {
        return fail_with(
            "final part pulled back along a regular epi is not inverted by pi0",
            &[("E", &fac.e_part), ("P", &w.along)],
        );
    }
    if v.probed < STABILITY_PROBES {
        return fail_with(format!("only {} pullbacks probed", v.probed), &[("E", &fac.e_part)]);
    }
    if !is_covering(&fac.m_part)?.covering {
        return fail_with("discrete-fibration part is not a covering", &[("M", &fac.m_part)]);
    }
    pass(v.probed)
}

fn prop_stabilising_dec(rng: &mut ChaCha8Rng, cfg: &GenConfig, seed: u64) -> Result<Outcome> {
    let y = gen_groupoid(rng, cfg)?;
    let dec = decalage(&y)?.dec;
    let f = functor_into(rng, &dec, PullbackClass::All, cfg.max_object_size)?;
    let fac = em_factor(&f)?;
    let v = stability_search(&fac.e_part, PullbackClass::RegularEpi, &stability_budget(cfg, seed), &[])?;
    if let Some(w) = v.counterexample() {
        return fail_with(
            "E part over Dec(Y) pulled back along a regular epi is not inverted by pi0",
            &[("E", &fac.e_part), ("P", &w.along)],
        );
    }
    if v.probed < STABILITY_PROBES {
        return fail_with(format!("only {} pullbacks probed", v.probed), &[("E", &fac.e_part)]);
    }
    pass(v.probed)
}

/// Tiny configuration for exhaustive fill-in search.
fn tiny(cfg: &GenConfig) -> GenConfig {
    GenConfig {
        max_object_size: cfg.max_object_size.min(EXHAUSTIVE_FILL_IN_ARROWS),
        max_components: cfg.max_components.min(2),
        max_vertex_group_order: cfg.max_vertex_group_order.min(2),
        ..cfg.clone()
    }
}

fn prop_fill_in(rng: &mut ChaCha8Rng, cfg: &GenConfig, _: u64) -> Result<Outcome> {
    let small = tiny(cfg);
    let f = gen_functor(rng, &small)?;
    let mut checks = 0;
    for fac in [em_factor(&f)?, comprehensive_factor(&f)?] {
        if !fac.reassembles() {
            return fail_with("factorization does not reassemble", &[("F", &f)]);
        }
        let (e, m) = (&fac.e_part, &fac.m_part);
        let mut squares = vec![(e.clone(), e.clone(), m.clone(), m.clone())];
        // Identity on the left: the fill-in is the top edge.
        let h = functor_into(rng, e.dom(), PullbackClass::All, EXHAUSTIVE_FILL_IN_ARROWS)?;
        let top = GFunctor::compose(e, &h)?;
        let bottom = GFunctor::compose(m, &top)?;
        squares.push((top, GFunctor::identity(h.dom()), m.clone(), bottom));
        for (top, left, right, bottom) in squares {
            if left.cod().arrows().len() > EXHAUSTIVE_FILL_IN_ARROWS {
                continue;
            }
            let expect = if left.is_levelwise_iso() && left.cod() == top.dom() {
                top.clone()
            } else {
                GFunctor::identity(&fac.middle)
            };
            match orthogonal_fill_in(&top, &left, &right, &bottom) {
                Ok(fill) if matches!(fill.method, FillInMethod::Exhaustive { .. }) && fill.diagonal == expect => {
                    checks += 1;
                }
                Ok(_) => return fail_with("fill-in differs from the expected diagonal", &[("F", &f)]),
                Err(e) => return fail_with(e.to_string(), &[("F", &f), ("L", &left), ("R", &right)]),
            }
        }
    }
    pass(checks)
}

/// The stability counterexample as a report: the cube is a pullback, the
/// `π₁` square vanishes, the `π₀` square is `0 -> A`, `A -> A` (zero),
/// `1_A`; the front face is final, the back face is not inverted by `π₀`,
/// and the right face is not levelwise regular epi.
pub fn scenario_counterexample(group_spec: &str) -> Result<SuiteReport> {
    let a = parse_group_spec(group_spec)?;
    let cube = counterexample_cube(&a)?;
    let start = Instant::now();
    let mut records = Vec::new();
    let mut add = |id: &'static str, statement: &'static str, result: Result<bool>| {
        let (ok, message) = match result {
            Ok(true) => (true, String::new()),
            Ok(false) => (false, "assertion is false".to_string()),
            Err(e) => (false, e.to_string()),
        };
        records.push(PropertyRecord {
            id,
            statement,
            trials: 1,
            executed: 1,
            checks: usize::from(ok),
            failures: if ok {
                Vec::new()
            } else {
                vec![Failure {
                    trial: 0,
                    seed: 0,
                    message,
                    witness: crate::text::cube_document(&cube),
                }]
            },
            skip_reason: None,
            trial_skips: Vec::new(),
            outcomes: vec![(0, 0, ok)],
            runtime: start.elapsed(),
        });
    };
    add("cube-is-pullback", "the back and left faces are the pullback of front along right", cube.is_pullback());
    add("pi1-square-zero", "pi1 vanishes on all four groupoids", (|| {
        for g in [&cube.front_left, &cube.front_right, &cube.back_left, &cube.back_right] {
            if pi1(g)?.len() != 1 {
                return Ok(false);
            }
        }
        Ok(true)
    })());
    add("pi0-square", "pi0 square is 0 -> A over 1_A with the right face zero", (|| {
        let front = pi0_functor(&cube.front)?;
        let right = pi0_functor(&cube.right)?;
        let back = pi0_functor(&cube.back)?;
        let left = pi0_functor(&cube.left)?;
        let n = a.len();
        Ok(front.is_bijective()
            && front.dom().len() == n
            && right.dom().len() == n
            && right.table().iter().all(|&v| v == right.cod().zero())
            && back.dom().len() == 1
            && back.cod().len() == n
            && left.dom().len() == 1
            && left.cod().len() == n)
    })());
    add("front-final", "the front face is final", is_final(&cube.front).map(|v| v.is_final));
    add("back-not-in-e", "pi0 does not invert the back face", is_in_e(&cube.back).map(|b| !b));
    add("right-not-regular-epi", "the right face is not levelwise regular epi", Ok(!cube.right.is_levelwise_regular_epi()));
    Ok(SuiteReport {
        title: format!("stability counterexample with A = {group_spec}"),
        backend: None,
        seed: 0,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_caps_give_a_point() {
        let cfg = GenConfig {
            max_object_size: 1,
            max_components: 1,
            max_vertex_group_order: 1,
            ..GenConfig::new(Backend::FinSet, 3)
        };
        let g = gen_groupoid(&mut cfg.rng(), &cfg).unwrap();
        assert_eq!(g.objects().len(), 1);
        assert_eq!(g.arrows().len(), 1);
    }

    #[test]
    fn component_groupoid_is_valid() {
        let g = component_groupoid(&[(2, 2), (1, 3)]).unwrap();
        assert_eq!(g.objects().len(), 3);
        assert_eq!(g.arrows().len(), 8 + 3);
        assert!(validate_groupoid(&g).is_valid());
        assert_eq!(oracle_pi0_components(&g).unwrap().len(), 2);
    }

    #[test]
    fn oracle_examples() {
        let d = discrete_of(&Object::set_of_size(3).unwrap()).unwrap();
        assert_eq!(oracle_pi0_components(&d).unwrap().len(), 3);
        let ind = indiscrete_of(&Object::set_of_size(4).unwrap()).unwrap();
        assert_eq!(oracle_pi0_components(&ind).unwrap().len(), 1);
        let z = groupoid_of_complex(&Morphism::identity(&Object::cyclic(2).unwrap())).unwrap();
        assert!(oracle_pi0_components(&z).is_err());
    }

    #[test]
    fn epsilon_is_in_the_regular_epi_stream() {
        let cfg = GenConfig::new(Backend::FinSet, 11);
        let g = gen_groupoid(&mut cfg.rng(), &cfg).unwrap();
        let eps = decalage(&g).unwrap().epsilon;
        assert!(PullbackClass::RegularEpi.admits(&eps));
    }

    #[test]
    fn vertex_group_quotient_is_regular_epi() {
        let comps = vec![(1, 4)];
        let g = component_groupoid(&comps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..8 {
            let q = quotient_functor(&mut rng, &g, &Shape::Components(comps.clone())).unwrap();
            assert!(q.is_levelwise_regular_epi());
            assert!(validate_functor(&q).unwrap().is_valid());
        }
    }

    #[test]
    fn degenerate_split_square_is_identities() {
        let cfg = GenConfig {
            max_object_size: 1,
            ..GenConfig::new(Backend::FinAb, 0)
        };
        let sq = gen_split_epi_square(&mut cfg.rng(), &cfg).unwrap();
        assert!(sq.pullback.left.is_levelwise_iso());
        assert!(sq.section_right.is_levelwise_iso());
    }

    #[test]
    fn group_specs() {
        assert_eq!(parse_group_spec("Z/2").unwrap().len(), 2);
        assert_eq!(parse_group_spec("Z/2xZ/4").unwrap().len(), 8);
        assert!(parse_group_spec("Z/1").is_err());
        assert!(parse_group_spec("Q8").is_err());
    }

    #[test]
    fn trivial_suite_passes() {
        let cfg = GenConfig {
            trials: 0,
            ..GenConfig::new(Backend::FinAb, 1)
        };
        let report = run_suite(&cfg).unwrap();
        assert!(report.passed());
        assert!(report.records.iter().all(|r| r.executed == 0));
    }
}
