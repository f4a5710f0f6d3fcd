//! Internal groupoids and internal functors over a finite backend.
//!
//! Composition convention: `X2 = {(a, b) : d(a) = c(b)}` and `m(a, b)` is
//! "a after b", so `d(m(a, b)) = d(b)` and `c(m(a, b)) = c(a)`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::base::{
    classify, compose, pullback, product, tabulate, Backend, Elem, Morphism, Object, PullbackCone,
};
use crate::error::{Error, Result};
use crate::reflection;

struct GroupoidData {
    objects: Object,
    arrows: Object,
    d: Morphism,
    c: Morphism,
    e: Morphism,
    inv: Morphism,
    comp: Morphism,
    nerve2: PullbackCone,
}

/// Internal groupoid `(X0, X1, d, c, e, i, m)` with its object of
/// composable pairs. Cheap to clone.
#[derive(Clone)]
pub struct Groupoid(Arc<GroupoidData>);

impl PartialEq for Groupoid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.objects == other.0.objects
                && self.0.arrows == other.0.arrows
                && self.0.d == other.0.d
                && self.0.c == other.0.c
                && self.0.e == other.0.e
                && self.0.inv == other.0.inv
                && self.0.comp == other.0.comp)
    }
}

impl fmt::Debug for Groupoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Groupoid")
            .field("objects", &self.0.objects)
            .field("arrows", &self.0.arrows)
            .finish()
    }
}

fn expect_typed(m: &Morphism, dom: &Object, cod: &Object, name: &str) -> Result<()> {
    if m.dom() != dom || m.cod() != cod {
        return Err(Error::DomainMismatch(format!("`{name}` has the wrong domain or codomain")));
    }
    Ok(())
}

impl Groupoid {
    /// Assembles a groupoid from its structure maps. Only typing is checked
    /// here; the axioms are checked by [`validate_groupoid`].
    pub fn new(
        objects: &Object,
        arrows: &Object,
        d: Morphism,
        c: Morphism,
        e: Morphism,
        inv: Morphism,
        comp: Morphism,
    ) -> Result<Groupoid> {
        if objects.backend() != arrows.backend() {
            return Err(Error::BackendMismatch(objects.backend(), arrows.backend()));
        }
        expect_typed(&d, arrows, objects, "d")?;
        expect_typed(&c, arrows, objects, "c")?;
        expect_typed(&e, objects, arrows, "e")?;
        expect_typed(&inv, arrows, arrows, "i")?;
        let nerve2 = pullback(&d, &c)?;
        expect_typed(&comp, nerve2.apex(), arrows, "m")?;
        Ok(Groupoid(Arc::new(GroupoidData {
            objects: objects.clone(),
            arrows: arrows.clone(),
            d,
            c,
            e,
            inv,
            comp,
            nerve2,
        })))
    }

    /// Like [`Groupoid::new`], with composition given as a function of the
    /// two arrow indices.
    pub(crate) fn from_parts(
        objects: &Object,
        arrows: &Object,
        d: Morphism,
        c: Morphism,
        e: Morphism,
        inv: Morphism,
        compose_fn: impl Fn(usize, usize) -> Result<usize>,
    ) -> Result<Groupoid> {
        let nerve2 = pullback(&d, &c)?;
        let (p1, p2) = (nerve2.proj1(), nerve2.proj2());
        let table = (0..nerve2.apex().len())
            .map(|k| compose_fn(p1.apply(k), p2.apply(k)))
            .collect::<Result<Vec<_>>>()?;
        if table.iter().any(|&t| t >= arrows.len()) {
            return Err(Error::InvalidGroupoid("composite outside the arrows".into()));
        }
        let comp = Morphism::from_table(nerve2.apex(), arrows, table);
        Groupoid::new(objects, arrows, d, c, e, inv, comp)
    }

    pub fn backend(&self) -> Backend {
        self.0.objects.backend()
    }

    pub fn objects(&self) -> &Object {
        &self.0.objects
    }

    pub fn arrows(&self) -> &Object {
        &self.0.arrows
    }

    pub fn d(&self) -> &Morphism {
        &self.0.d
    }

    pub fn c(&self) -> &Morphism {
        &self.0.c
    }

    pub fn e(&self) -> &Morphism {
        &self.0.e
    }

    pub fn inv(&self) -> &Morphism {
        &self.0.inv
    }

    pub fn comp(&self) -> &Morphism {
        &self.0.comp
    }

    /// `X2` as the pullback of `(d, c)`.
    pub fn nerve2(&self) -> &PullbackCone {
        &self.0.nerve2
    }

    /// `X3 = X2 x_{(p2, p1)} X2`, built on demand.
    pub fn nerve3(&self) -> Result<PullbackCone> {
        pullback(self.0.nerve2.proj2(), self.0.nerve2.proj1())
    }

    /// `a . b`, defined when `d(a) = c(b)`.
    pub fn compose(&self, a: usize, b: usize) -> Option<usize> {
        self.0.nerve2.pair_index(a, b).map(|k| self.0.comp.apply(k))
    }

    /// Arrows as `(domain, codomain)` index pairs.
    pub fn endpoints(&self, a: usize) -> (usize, usize) {
        (self.0.d.apply(a), self.0.c.apply(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub section: String,
    pub entry: String,
}

/// Every violated law; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

const MAX_PER_SECTION: usize = 8;

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, section: &str, entry: String) {
        let seen = self.violations.iter().filter(|v| v.section == section).count();
        if seen < MAX_PER_SECTION {
            self.violations.push(Violation {
                section: section.to_string(),
                entry,
            });
        }
    }

    fn extend_prefixed(&mut self, prefix: &str, other: ValidationReport) {
        for v in other.violations {
            self.violations.push(Violation {
                section: format!("{prefix}.{}", v.section),
                entry: v.entry,
            });
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{}: {}", v.section, v.entry)?;
        }
        Ok(())
    }
}

pub fn validate_groupoid(g: &Groupoid) -> ValidationReport {
    let mut report = ValidationReport::default();
    let x0 = g.objects();
    let x1 = g.arrows();
    let (d, c, e, inv) = (g.d(), g.c(), g.e(), g.inv());
    let arrow = |a: usize| x1.elem(a).clone();

    for (name, obj) in [("objects", x0), ("arrows", x1)] {
        for v in obj.axiom_violations() {
            report.push(name, v);
        }
    }
    for (name, m) in [("d", d), ("c", c), ("e", e), ("i", inv), ("m", g.comp())] {
        if let Some(v) = m.hom_violation() {
            report.push(name, v);
        }
    }
    match pullback(d, c) {
        Ok(rebuilt) if &rebuilt == g.nerve2() => {}
        Ok(_) => report.push("nerve2", "stored X2 differs from the pullback of (d, c)".into()),
        Err(err) => report.push("nerve2", err.to_string()),
    }

    for x in 0..x0.len() {
        if d.apply(e.apply(x)) != x {
            report.push("e", format!("d(e({})) != {}", x0.elem(x), x0.elem(x)));
        }
        if c.apply(e.apply(x)) != x {
            report.push("e", format!("c(e({})) != {}", x0.elem(x), x0.elem(x)));
        }
    }

    let cone = g.nerve2();
    for k in 0..cone.apex().len() {
        let (a, b) = (cone.proj1().apply(k), cone.proj2().apply(k));
        let ab = g.comp().apply(k);
        if d.apply(ab) != d.apply(b) {
            report.push("m", format!("d(m({}, {})) != d({})", arrow(a), arrow(b), arrow(b)));
        }
        if c.apply(ab) != c.apply(a) {
            report.push("m", format!("c(m({}, {})) != c({})", arrow(a), arrow(b), arrow(a)));
        }
    }

    for a in 0..x1.len() {
        let (da, ca) = g.endpoints(a);
        if g.compose(e.apply(ca), a) != Some(a) {
            report.push("unit", format!("m(e(c({0})), {0}) != {0}", arrow(a)));
        }
        if g.compose(a, e.apply(da)) != Some(a) {
            report.push("unit", format!("m({0}, e(d({0}))) != {0}", arrow(a)));
        }
        let ia = inv.apply(a);
        if d.apply(ia) != ca || c.apply(ia) != da {
            report.push("i", format!("i({}) has the wrong endpoints", arrow(a)));
            continue;
        }
        if g.compose(a, ia) != Some(e.apply(ca)) {
            report.push("inverse", format!("m({0}, i({0})) != e(c({0}))", arrow(a)));
        }
        if g.compose(ia, a) != Some(e.apply(da)) {
            report.push("inverse", format!("m(i({0}), {0}) != e(d({0}))", arrow(a)));
        }
    }

    // Associativity over X3, enumerated without materializing it.
    let mut by_codomain: Vec<Vec<usize>> = vec![Vec::new(); x0.len()];
    for a in 0..x1.len() {
        by_codomain[c.apply(a)].push(a);
    }
    for k in 0..cone.apex().len() {
        let (a, b) = (cone.proj1().apply(k), cone.proj2().apply(k));
        let ab = g.comp().apply(k);
        for &t in &by_codomain[d.apply(b)] {
            let left = g.compose(ab, t);
            let right = g.compose(b, t).and_then(|bt| g.compose(a, bt));
            if left.is_none() || left != right {
                report.push(
                    "associativity",
                    format!("m(m({}, {}), {}) != m({}, m({}, {}))", arrow(a), arrow(b), arrow(t), arrow(a), arrow(b), arrow(t)),
                );
            }
        }
    }
    report
}

/// Internal functor `(f0, f1)`.
#[derive(Clone, PartialEq)]
pub struct GFunctor {
    dom: Groupoid,
    cod: Groupoid,
    f0: Morphism,
    f1: Morphism,
}

impl fmt::Debug for GFunctor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GFunctor")
            .field("f0", &self.f0)
            .field("f1", &self.f1)
            .finish()
    }
}

impl GFunctor {
    /// Typing is checked; the functor laws are checked by [`validate_functor`].
    pub fn new(dom: &Groupoid, cod: &Groupoid, f0: Morphism, f1: Morphism) -> Result<GFunctor> {
        if dom.backend() != cod.backend() {
            return Err(Error::BackendMismatch(dom.backend(), cod.backend()));
        }
        expect_typed(&f0, dom.objects(), cod.objects(), "f0")?;
        expect_typed(&f1, dom.arrows(), cod.arrows(), "f1")?;
        Ok(GFunctor {
            dom: dom.clone(),
            cod: cod.clone(),
            f0,
            f1,
        })
    }

    pub fn identity(g: &Groupoid) -> GFunctor {
        GFunctor {
            dom: g.clone(),
            cod: g.clone(),
            f0: Morphism::identity(g.objects()),
            f1: Morphism::identity(g.arrows()),
        }
    }

    /// `g . f`.
    pub fn compose(g: &GFunctor, f: &GFunctor) -> Result<GFunctor> {
        if f.cod != g.dom {
            return Err(Error::DomainMismatch("functors are not composable".into()));
        }
        Ok(GFunctor {
            dom: f.dom.clone(),
            cod: g.cod.clone(),
            f0: compose(&g.f0, &f.f0)?,
            f1: compose(&g.f1, &f.f1)?,
        })
    }

    pub fn dom(&self) -> &Groupoid {
        &self.dom
    }

    pub fn cod(&self) -> &Groupoid {
        &self.cod
    }

    pub fn f0(&self) -> &Morphism {
        &self.f0
    }

    pub fn f1(&self) -> &Morphism {
        &self.f1
    }

    pub fn is_levelwise_regular_epi(&self) -> bool {
        self.f0.is_surjective() && self.f1.is_surjective()
    }

    pub fn is_levelwise_iso(&self) -> bool {
        self.f0.is_bijective() && self.f1.is_bijective()
    }
}

pub fn validate_functor(f: &GFunctor) -> Result<ValidationReport> {
    let (x, y) = (f.dom(), f.cod());
    if x.backend() != y.backend() {
        return Err(Error::BackendMismatch(x.backend(), y.backend()));
    }
    let mut report = ValidationReport::default();
    for (name, m) in [("f0", f.f0()), ("f1", f.f1())] {
        if let Some(v) = m.hom_violation() {
            report.push(name, v);
        }
    }
    let arrow = |a: usize| x.arrows().elem(a).clone();
    for a in 0..x.arrows().len() {
        let fa = f.f1().apply(a);
        if y.d().apply(fa) != f.f0().apply(x.d().apply(a)) {
            report.push("f1", format!("d(f1({0})) != f0(d({0}))", arrow(a)));
        }
        if y.c().apply(fa) != f.f0().apply(x.c().apply(a)) {
            report.push("f1", format!("c(f1({0})) != f0(c({0}))", arrow(a)));
        }
    }
    for o in 0..x.objects().len() {
        if f.f1().apply(x.e().apply(o)) != y.e().apply(f.f0().apply(o)) {
            report.push("f1", format!("f1(e({0})) != e(f0({0}))", x.objects().elem(o)));
        }
    }
    let cone = x.nerve2();
    for k in 0..cone.apex().len() {
        let (a, b) = (cone.proj1().apply(k), cone.proj2().apply(k));
        let lhs = f.f1().apply(x.comp().apply(k));
        let rhs = y.compose(f.f1().apply(a), f.f1().apply(b));
        if rhs != Some(lhs) {
            report.push("f1", format!("f1(m({}, {})) != m(f1({}), f1({}))", arrow(a), arrow(b), arrow(a), arrow(b)));
        }
    }
    Ok(report)
}

/// Levelwise pullback of a cospan of functors.
#[derive(Clone, Debug)]
pub struct GpdPullback {
    pub apex: Groupoid,
    /// Projection to the domain of `left`.
    pub proj1: GFunctor,
    /// Projection to the domain of `right`.
    pub proj2: GFunctor,
    pub left: GFunctor,
    pub right: GFunctor,
    objects_cone: PullbackCone,
    arrows_cone: PullbackCone,
}

impl GpdPullback {
    pub fn objects_cone(&self) -> &PullbackCone {
        &self.objects_cone
    }

    pub fn arrows_cone(&self) -> &PullbackCone {
        &self.arrows_cone
    }

    /// The functor into the apex induced by a commuting cone.
    pub fn pair(&self, h1: &GFunctor, h2: &GFunctor) -> Result<GFunctor> {
        if h1.dom() != h2.dom() {
            return Err(Error::DomainMismatch("cone legs start at different groupoids".into()));
        }
        let f0 = self.objects_cone.factor(h1.f0(), h2.f0())?;
        let f1 = self.arrows_cone.factor(h1.f1(), h2.f1())?;
        GFunctor::new(h1.dom(), &self.apex, f0, f1)
    }
}

pub fn gpd_pullback(f: &GFunctor, g: &GFunctor) -> Result<GpdPullback> {
    if f.cod() != g.cod() {
        return Err(Error::DomainMismatch("functors have different codomains".into()));
    }
    let (x, z) = (f.dom(), g.dom());
    let objects_cone = pullback(f.f0(), g.f0())?;
    let arrows_cone = pullback(f.f1(), g.f1())?;
    let p0 = objects_cone.apex().clone();
    let p1 = arrows_cone.apex().clone();
    let (l1, r1) = (arrows_cone.proj1().clone(), arrows_cone.proj2().clone());
    let (o1, o2) = (objects_cone.proj1(), objects_cone.proj2());
    // The map induced on the pullback by `mx` and `mz` along the legs `pi`.
    let induced = |mx: &Morphism, mz: &Morphism, pi: (&Morphism, &Morphism), cone: &PullbackCone| {
        cone.factor(&compose(mx, pi.0)?, &compose(mz, pi.1)?)
    };
    let d = induced(x.d(), z.d(), (&l1, &r1), &objects_cone)?;
    let c = induced(x.c(), z.c(), (&l1, &r1), &objects_cone)?;
    let e = induced(x.e(), z.e(), (o1, o2), &arrows_cone)?;
    let inv = induced(x.inv(), z.inv(), (&l1, &r1), &arrows_cone)?;
    let apex = Groupoid::from_parts(&p0, &p1, d, c, e, inv, |u, v| {
        let (a, b) = (l1.apply(u), r1.apply(u));
        let (a2, b2) = (l1.apply(v), r1.apply(v));
        let ma = x.compose(a, a2);
        let mb = z.compose(b, b2);
        ma.zip(mb)
            .and_then(|(ma, mb)| arrows_cone.pair_index(ma, mb))
            .ok_or_else(|| Error::InvalidGroupoid("levelwise composite leaves the pullback".into()))
    })?;
    let proj1 = GFunctor::new(&apex, x, objects_cone.proj1().clone(), l1.clone())?;
    let proj2 = GFunctor::new(&apex, z, objects_cone.proj2().clone(), r1.clone())?;
    Ok(GpdPullback {
        apex,
        proj1,
        proj2,
        left: f.clone(),
        right: g.clone(),
        objects_cone,
        arrows_cone,
    })
}

/// Product of groupoids, as the pullback over the terminal groupoid.
pub fn gpd_product(x: &Groupoid, z: &Groupoid) -> Result<GpdPullback> {
    if x.backend() != z.backend() {
        return Err(Error::BackendMismatch(x.backend(), z.backend()));
    }
    let one = discrete_of(&Object::terminal(x.backend()))?;
    gpd_pullback(&to_terminal(x, &one), &to_terminal(z, &one))
}

fn to_terminal(x: &Groupoid, one: &Groupoid) -> GFunctor {
    GFunctor {
        dom: x.clone(),
        cod: one.clone(),
        f0: Morphism::from_fn(x.objects(), one.objects(), |_| 0),
        f1: Morphism::from_fn(x.arrows(), one.arrows(), |_| 0),
    }
}

/// The comparison arrow `X1 -> (X0 x X0) x_{Y0 x Y0} Y1`,
/// `a -> ((d a, c a), f1 a)`.
pub fn comparison_phi(f: &GFunctor) -> Result<Morphism> {
    let (x, y) = (f.dom(), f.cod());
    let x0 = x.objects();
    let y1 = y.arrows();
    let mut hom: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for b in 0..y1.len() {
        hom.entry(y.endpoints(b)).or_default().push(b);
    }
    let mut rows = Vec::new();
    for s in 0..x0.len() {
        for t in 0..x0.len() {
            if let Some(bs) = hom.get(&(f.f0().apply(s), f.f0().apply(t))) {
                for &b in bs {
                    rows.push(vec![s, t, b]);
                }
            }
        }
    }
    let (apex, index) = tabulate(x0.backend(), &[x0, x0, y1], &rows, |r| {
        Elem::pair(
            Elem::pair(x0.elem(r[0]).clone(), x0.elem(r[1]).clone()),
            y1.elem(r[2]).clone(),
        )
    })?;
    let mut map = Vec::with_capacity(x.arrows().len());
    for a in 0..x.arrows().len() {
        let (s, t) = x.endpoints(a);
        map.push(index.get(&[s, t, f.f1().apply(a)]).ok_or_else(|| {
            Error::InvalidFunctor("f1 does not commute with (d, c)".into())
        })?);
    }
    Ok(Morphism::from_table(x.arrows(), &apex, map))
}

/// Fullness and faithfulness of `f`, decided on the comparison arrow by
/// counting, without materializing its codomain.
fn phi_flags(f: &GFunctor) -> (bool, bool) {
    let (x, y) = (f.dom(), f.cod());
    let mut hom_count: HashMap<(usize, usize), usize> = HashMap::new();
    for b in 0..y.arrows().len() {
        *hom_count.entry(y.endpoints(b)).or_default() += 1;
    }
    let n0 = x.objects().len();
    let mut apex_size = 0usize;
    for s in 0..n0 {
        for t in 0..n0 {
            apex_size += hom_count
                .get(&(f.f0().apply(s), f.f0().apply(t)))
                .copied()
                .unwrap_or(0);
        }
    }
    let mut hit = HashSet::new();
    let mut faithful = true;
    for a in 0..x.arrows().len() {
        let (s, t) = x.endpoints(a);
        if !hit.insert((s, t, f.f1().apply(a))) {
            faithful = false;
        }
    }
    (hit.len() == apex_size, faithful)
}

/// Iso-check of the canonical comparison `X1 -> X0 x_{Y0} Y1`,
/// `a -> (c a, f1 a)`: every arrow of the codomain lifts uniquely once
/// its codomain is lifted.
pub fn is_discrete_fibration(f: &GFunctor) -> bool {
    let (x, y) = (f.dom(), f.cod());
    let mut into: Vec<usize> = vec![0; y.objects().len()];
    for b in 0..y.arrows().len() {
        into[y.c().apply(b)] += 1;
    }
    let apex_size: usize = (0..x.objects().len())
        .map(|o| into[f.f0().apply(o)])
        .sum();
    if apex_size != x.arrows().len() {
        return false;
    }
    let mut seen = HashSet::with_capacity(apex_size);
    (0..x.arrows().len()).all(|a| seen.insert((x.c().apply(a), f.f1().apply(a))))
}

/// The comparison `X1 -> X0 x_{Y0} Y1` as a morphism into the base pullback.
pub fn discrete_fibration_comparison(f: &GFunctor) -> Result<Morphism> {
    let cone = pullback(f.f0(), f.cod().c())?;
    cone.factor(f.dom().c(), f.f1())
}

#[derive(Debug, Clone)]
pub struct FunctorProfile {
    pub discrete_fibration: bool,
    pub full: bool,
    pub faithful: bool,
    pub fully_faithful: bool,
    pub essentially_surjective: bool,
    pub levelwise_regular_epi: bool,
    pub equivalence_relation_dom: bool,
    /// Absent when its codomain would exceed the size cap.
    pub phi: Option<Morphism>,
}

pub fn profile(f: &GFunctor) -> Result<FunctorProfile> {
    let (full, faithful) = phi_flags(f);
    let phi = match comparison_phi(f) {
        Ok(phi) => Some(phi),
        Err(Error::CapExceeded { .. }) => None,
        Err(err) => return Err(err),
    };
    let pi0f = reflection::pi0_functor(f)?;
    Ok(FunctorProfile {
        discrete_fibration: is_discrete_fibration(f),
        full,
        faithful,
        fully_faithful: full && faithful,
        essentially_surjective: classify(&pi0f).regular_epi,
        levelwise_regular_epi: f.is_levelwise_regular_epi(),
        equivalence_relation_dom: is_equivalence_relation(f.dom()),
        phi,
    })
}

/// Whether `(d, c): X1 -> X0 x X0` is a monomorphism.
pub fn is_equivalence_relation(g: &Groupoid) -> bool {
    let mut seen = HashSet::with_capacity(g.arrows().len());
    (0..g.arrows().len()).all(|a| seen.insert(g.endpoints(a)))
}

/// Discrete groupoid: only identity arrows.
pub fn discrete_of(x: &Object) -> Result<Groupoid> {
    let id = Morphism::identity(x);
    let nerve2 = pullback(&id, &id)?;
    let comp = nerve2.proj1().clone();
    Groupoid::new(x, x, id.clone(), id.clone(), id.clone(), id, comp)
}

/// Groupoid of an equivalence relation presented as a cone `R ⇉ X`;
/// an arrow `(a, b)` goes from `a` to `b`.
pub(crate) fn relation_groupoid(cone: &PullbackCone) -> Result<Groupoid> {
    let x = cone.proj1().cod().clone();
    let r = cone.apex().clone();
    let (r1, r2) = (cone.proj1().clone(), cone.proj2().clone());
    let missing = || Error::InvalidGroupoid("relation is not an equivalence relation".into());
    let e = (0..x.len())
        .map(|a| cone.pair_index(a, a).ok_or_else(missing))
        .collect::<Result<Vec<_>>>()?;
    let inv = (0..r.len())
        .map(|k| cone.pair_index(r2.apply(k), r1.apply(k)).ok_or_else(missing))
        .collect::<Result<Vec<_>>>()?;
    let e = Morphism::from_table(&x, &r, e);
    let inv = Morphism::from_table(&r, &r, inv);
    Groupoid::from_parts(&x, &r, r1.clone(), r2.clone(), e, inv, |u, v| {
        cone.pair_index(r1.apply(v), r2.apply(u)).ok_or_else(missing)
    })
}

/// The indiscrete groupoid: exactly one arrow between any two objects.
pub fn indiscrete_of(x: &Object) -> Result<Groupoid> {
    relation_groupoid(&product(x, x)?)
}

/// The equivalence relation given by the kernel pair of `q`.
pub fn relation_of_quotient(q: &Morphism) -> Result<Groupoid> {
    relation_groupoid(&crate::base::kernel_pair(q)?)
}

/// One-object groupoid whose arrows are the elements of `group`, composed
/// by addition. The result lives over `backend`.
pub fn group_as_groupoid(group: &Object, backend: Backend) -> Result<Groupoid> {
    if !group.is_group() {
        return Err(Error::InvalidObject("group_as_groupoid needs a group table".into()));
    }
    let arrows = match backend {
        Backend::FinAb => group.clone(),
        Backend::FinSet => Object::finset(group.carrier().to_vec())?,
    };
    let point = Object::terminal(backend);
    let bang = Morphism::from_fn(&arrows, &point, |_| 0);
    let e = Morphism::from_fn(&point, &arrows, |_| group.zero());
    let inv = Morphism::from_fn(&arrows, &arrows, |a| group.neg(a));
    Groupoid::from_parts(&point, &arrows, bang.clone(), bang, e, inv, |a, b| Ok(group.add(a, b)))
}

/// Groupoid of a two-term complex `∂: N -> C`: objects `C`, arrows
/// `N ⊕ C` with `d(n, x) = x` and `c(n, x) = ∂n + x`.
pub fn groupoid_of_complex(boundary: &Morphism) -> Result<Groupoid> {
    let (n, c0) = (boundary.dom(), boundary.cod());
    if n.backend() != Backend::FinAb {
        return Err(Error::BackendUnsupported {
            op: "groupoid_of_complex",
            backend: n.backend(),
        });
    }
    let cone = product(n, c0)?;
    let x1 = cone.apex().clone();
    let (pn, px) = (cone.proj1().clone(), cone.proj2().clone());
    let at = |a: usize, x: usize| cone.pair_index(a, x).expect("product is total");
    let d = px.clone();
    let c = Morphism::from_fn(&x1, c0, |k| c0.add(boundary.apply(pn.apply(k)), px.apply(k)));
    let e = Morphism::from_fn(c0, &x1, |x| at(n.zero(), x));
    let inv = Morphism::from_fn(&x1, &x1, |k| {
        let (a, x) = (pn.apply(k), px.apply(k));
        at(n.neg(a), c0.add(boundary.apply(a), x))
    });
    Groupoid::from_parts(c0, &x1, d, c, e, inv, |u, v| {
        Ok(at(n.add(pn.apply(u), pn.apply(v)), px.apply(v)))
    })
}

/// Functor between complex groupoids induced by a chain map
/// `(f_n, f_c)` with `∂' f_n = f_c ∂`.
pub fn functor_of_chain_map(
    boundary: &Morphism,
    target_boundary: &Morphism,
    f_n: &Morphism,
    f_c: &Morphism,
) -> Result<GFunctor> {
    if compose(target_boundary, f_n)? != compose(f_c, boundary)? {
        return Err(Error::InvalidFunctor("not a chain map".into()));
    }
    let x = groupoid_of_complex(boundary)?;
    let y = groupoid_of_complex(target_boundary)?;
    let f1 = crate::base::product_map(f_n, f_c)?;
    GFunctor::new(&x, &y, f_c.clone(), f1)
}

/// Full subgroupoid on the given objects, with its inclusion.
pub fn full_subgroupoid(g: &Groupoid, objects: &[usize]) -> Result<GFunctor> {
    let keep: HashSet<usize> = objects.iter().copied().collect();
    let arrows: Vec<usize> = (0..g.arrows().len())
        .filter(|&a| {
            let (s, t) = g.endpoints(a);
            keep.contains(&s) && keep.contains(&t)
        })
        .collect();
    let inc0 = g.objects().subobject(objects)?;
    let inc1 = g.arrows().subobject(&arrows)?;
    let (s0, s1) = (inc0.dom().clone(), inc1.dom().clone());
    let pos0: HashMap<usize, usize> = inc0.table().iter().enumerate().map(|(k, &o)| (o, k)).collect();
    let pos1: HashMap<usize, usize> = inc1.table().iter().enumerate().map(|(k, &a)| (a, k)).collect();
    let restrict = |m: &Morphism, dom: &Morphism, cod: &HashMap<usize, usize>, cod_obj: &Object| {
        Morphism::from_fn(dom.dom(), cod_obj, |k| cod[&m.apply(dom.apply(k))])
    };
    let d = restrict(g.d(), &inc1, &pos0, &s0);
    let c = restrict(g.c(), &inc1, &pos0, &s0);
    let e = restrict(g.e(), &inc0, &pos1, &s1);
    let inv = restrict(g.inv(), &inc1, &pos1, &s1);
    let sub = Groupoid::from_parts(&s0, &s1, d, c, e, inv, |u, v| {
        g.compose(inc1.apply(u), inc1.apply(v))
            .map(|w| pos1[&w])
            .ok_or_else(|| Error::InvalidGroupoid("composite leaves the subgroupoid".into()))
    })?;
    GFunctor::new(&sub, g, inc0, inc1)
}

/// Full inverse image of `g` along an object map `q: S -> X0`: objects
/// `S`, arrows `s -> s'` the arrows `q s -> q s'` of `g`.
pub fn inverse_image(g: &Groupoid, q: &Morphism) -> Result<GFunctor> {
    if q.cod() != g.objects() {
        return Err(Error::DomainMismatch("object map does not land in X0".into()));
    }
    let s = q.dom().clone();
    let mut hom: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for b in 0..g.arrows().len() {
        hom.entry(g.endpoints(b)).or_default().push(b);
    }
    let mut rows = Vec::new();
    for a in 0..s.len() {
        for t in 0..s.len() {
            if let Some(bs) = hom.get(&(q.apply(a), q.apply(t))) {
                for &b in bs {
                    rows.push(vec![a, t, b]);
                }
            }
        }
    }
    let y1 = g.arrows();
    let (arrows, index) = tabulate(s.backend(), &[&s, &s, y1], &rows, |r| {
        Elem::pair(Elem::pair(s.elem(r[0]).clone(), s.elem(r[1]).clone()), y1.elem(r[2]).clone())
    })?;
    let d = Morphism::from_table(&arrows, &s, rows.iter().map(|r| r[0]).collect());
    let c = Morphism::from_table(&arrows, &s, rows.iter().map(|r| r[1]).collect());
    let e = Morphism::from_fn(&s, &arrows, |a| {
        index.get(&[a, a, g.e().apply(q.apply(a))]).expect("identity arrow")
    });
    let inv = Morphism::from_fn(&arrows, &arrows, |k| {
        let r = &rows[k];
        index.get(&[r[1], r[0], g.inv().apply(r[2])]).expect("inverse arrow")
    });
    let f1 = Morphism::from_table(&arrows, y1, rows.iter().map(|r| r[2]).collect());
    let inv_img = Groupoid::from_parts(&s, &arrows, d, c, e, inv, |u, v| {
        let (ru, rv) = (&rows[u], &rows[v]);
        g.compose(ru[2], rv[2])
            .and_then(|w| index.get(&[rv[0], ru[1], w]))
            .ok_or_else(|| Error::InvalidGroupoid("composite leaves the inverse image".into()))
    })?;
    GFunctor::new(&inv_img, g, q.clone(), f1)
}

/// Functor from the discrete groupoid on `s` that acts on objects by `q`.
pub fn discrete_functor(g: &Groupoid, q: &Morphism) -> Result<GFunctor> {
    if q.cod() != g.objects() {
        return Err(Error::DomainMismatch("object map does not land in X0".into()));
    }
    let ds = discrete_of(q.dom())?;
    let f1 = compose(g.e(), q)?;
    GFunctor::new(&ds, g, q.clone(), f1)
}

/// Restricts a validation report to a `Result`.
pub fn ensure_valid_groupoid(g: &Groupoid) -> Result<()> {
    let report = validate_groupoid(g);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidGroupoid(report.to_string()))
    }
}

pub fn ensure_valid_functor(f: &GFunctor) -> Result<()> {
    let mut report = ValidationReport::default();
    report.extend_prefixed("dom", validate_groupoid(f.dom()));
    report.extend_prefixed("cod", validate_groupoid(f.cod()));
    let own = validate_functor(f)?;
    report.violations.extend(own.violations);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidFunctor(report.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize) -> Object {
        Object::set_of_size(n).unwrap()
    }

    #[test]
    fn discrete_groupoid_is_valid() {
        let g = discrete_of(&set(2)).unwrap();
        assert!(validate_groupoid(&g).is_valid());
        assert_eq!(g.arrows(), g.objects());
        assert!(g.d().is_identity() && g.c().is_identity() && g.inv().is_identity());
    }

    #[test]
    fn indiscrete_groupoid_is_valid() {
        let g = indiscrete_of(&set(2)).unwrap();
        assert_eq!(g.arrows().len(), 4);
        assert_eq!(g.nerve2().apex().len(), 8);
        assert!(validate_groupoid(&g).is_valid());
    }

    #[test]
    fn identity_inverse_breaks_the_inverse_law() {
        let g = indiscrete_of(&set(2)).unwrap();
        let broken = Groupoid::new(
            g.objects(),
            g.arrows(),
            g.d().clone(),
            g.c().clone(),
            g.e().clone(),
            Morphism::identity(g.arrows()),
            g.comp().clone(),
        )
        .unwrap();
        let report = validate_groupoid(&broken);
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| v.section == "i" && v.entry.contains("(0,1)")));
    }

    #[test]
    fn functor_validation_examples() {
        let ind = indiscrete_of(&set(2)).unwrap();
        assert!(validate_functor(&GFunctor::identity(&ind)).unwrap().is_valid());

        let pt = discrete_of(&set(1)).unwrap();
        let bang = GFunctor::new(
            &ind,
            &pt,
            Morphism::new(ind.objects(), pt.objects(), vec![0, 0]).unwrap(),
            Morphism::new(ind.arrows(), pt.arrows(), vec![0; 4]).unwrap(),
        )
        .unwrap();
        assert!(validate_functor(&bang).unwrap().is_valid());

        // Send the arrow (0,1) to the identity on 0: its codomain no longer matches.
        let id = GFunctor::identity(&ind);
        let mut table = id.f1().table().to_vec();
        table[1] = 0;
        let bad = GFunctor::new(
            &ind,
            &ind,
            id.f0().clone(),
            Morphism::new(ind.arrows(), ind.arrows(), table).unwrap(),
        )
        .unwrap();
        let report = validate_functor(&bad).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.entry.starts_with("c(f1((0,1)))")));
    }

    #[test]
    fn functor_validation_rejects_backend_mismatch() {
        let a = discrete_of(&set(1)).unwrap();
        let b = discrete_of(&Object::cyclic(1).unwrap()).unwrap();
        assert!(GFunctor::new(
            &a,
            &b,
            Morphism::from_table(a.objects(), b.objects(), vec![0]),
            Morphism::from_table(a.arrows(), b.arrows(), vec![0])
        )
        .is_err());
    }

    #[test]
    fn equivalence_relation_examples() {
        assert!(is_equivalence_relation(&discrete_of(&set(3)).unwrap()));
        let z2 = Object::cyclic(2).unwrap();
        let g = group_as_groupoid(&z2, Backend::FinSet).unwrap();
        assert!(validate_groupoid(&g).is_valid());
        assert!(!is_equivalence_relation(&g));
    }

    #[test]
    fn relation_of_quotient_has_five_arrows() {
        let q = Morphism::new(&set(3), &set(2), vec![0, 0, 1]).unwrap();
        let r = relation_of_quotient(&q).unwrap();
        assert_eq!(r.arrows().len(), 5);
        assert!(validate_groupoid(&r).is_valid());
        assert!(is_equivalence_relation(&r));
    }

    #[test]
    fn complex_groupoid_of_doubling() {
        let z2 = Object::cyclic(2).unwrap();
        let z4 = Object::cyclic(4).unwrap();
        let del = Morphism::new(&z2, &z4, vec![0, 2]).unwrap();
        let g = groupoid_of_complex(&del).unwrap();
        assert_eq!(g.objects(), &z4);
        assert_eq!(g.arrows().len(), 8);
        assert!(validate_groupoid(&g).is_valid());
        assert!(matches!(
            groupoid_of_complex(&Morphism::identity(&set(2))),
            Err(Error::BackendUnsupported { .. })
        ));
    }

    #[test]
    fn comparison_phi_examples() {
        let d2 = discrete_of(&set(2)).unwrap();
        let phi = comparison_phi(&GFunctor::identity(&d2)).unwrap();
        assert_eq!(phi.cod().len(), 2);
        assert!(phi.is_bijective());

        let pt = discrete_of(&set(1)).unwrap();
        let bang = GFunctor::new(
            &d2,
            &pt,
            Morphism::new(d2.objects(), pt.objects(), vec![0, 0]).unwrap(),
            Morphism::new(d2.arrows(), pt.arrows(), vec![0, 0]).unwrap(),
        )
        .unwrap();
        let phi = comparison_phi(&bang).unwrap();
        assert_eq!(phi.cod().len(), 4);
        let c = classify(&phi);
        assert!(c.mono && !c.regular_epi);
        let p = profile(&bang).unwrap();
        assert!(p.faithful && !p.full);
    }

    #[test]
    fn discrete_fibration_count_matches_comparison() {
        let ind = indiscrete_of(&set(2)).unwrap();
        let pt = discrete_of(&set(1)).unwrap();
        let bang = GFunctor::new(
            &ind,
            &pt,
            Morphism::new(ind.objects(), pt.objects(), vec![0, 0]).unwrap(),
            Morphism::new(ind.arrows(), pt.arrows(), vec![0; 4]).unwrap(),
        )
        .unwrap();
        assert!(!is_discrete_fibration(&bang));
        assert!(!discrete_fibration_comparison(&bang).unwrap().is_bijective());
        let id = GFunctor::identity(&ind);
        assert!(is_discrete_fibration(&id));
        assert!(discrete_fibration_comparison(&id).unwrap().is_bijective());
    }
}
