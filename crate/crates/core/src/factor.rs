//! The two factorization systems on internal groupoids and their class
//! predicates.
//!
//! `(E, M)`: `E` is the class of functors inverted by `π₀`, `M` the
//! trivial coverings. Comprehensive: final functors and discrete
//! fibrations.

use std::collections::HashMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::base::{
    classify, compose, enumerate_morphisms, pullback, square_is_pullback, Backend, Morphism, Object,
};
use crate::error::{Error, Result};
use crate::gpd::{
    discrete_functor, discrete_of, ensure_valid_groupoid, gpd_pullback, is_discrete_fibration,
    profile, validate_functor, GFunctor, GpdPullback, Groupoid,
};
use crate::harness::{functor_into, PullbackClass};
use crate::reflection::{
    decalage, discrete_functor_of, pi0, pi0_functor, pi1_functor, supp_functor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorizationKind {
    Em,
    Comprehensive,
}

impl fmt::Display for FactorizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorizationKind::Em => "em",
            FactorizationKind::Comprehensive => "comprehensive",
        })
    }
}

impl std::str::FromStr for FactorizationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "em" => Ok(FactorizationKind::Em),
            "comprehensive" => Ok(FactorizationKind::Comprehensive),
            other => Err(Error::InvalidInput(format!("unknown factorization system `{other}`"))),
        }
    }
}

/// A verified class membership of one part of a factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub part: String,
    pub class: String,
}

/// `F = m_part . e_part` through `middle`, with the classes of both parts
/// verified at construction.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub kind: FactorizationKind,
    pub original: GFunctor,
    pub e_part: GFunctor,
    pub middle: Groupoid,
    pub m_part: GFunctor,
    pub certificates: Vec<Certificate>,
}

impl Factorization {
    fn certify(&mut self, part: &str, class: &str, holds: bool) -> Result<()> {
        if !holds {
            return Err(Error::CertificateFailed(format!(
                "{} factorization: {part} is not {class}",
                self.kind
            )));
        }
        self.certificates.push(Certificate {
            part: part.to_string(),
            class: class.to_string(),
        });
        Ok(())
    }

    fn certify_composite(&mut self) -> Result<()> {
        let composite = GFunctor::compose(&self.m_part, &self.e_part)?;
        let holds = composite == self.original;
        self.certify("composite", "equal-to-original", holds)
    }

    /// Whether `m_part . e_part` reproduces the original functor exactly.
    pub fn reassembles(&self) -> bool {
        GFunctor::compose(&self.m_part, &self.e_part)
            .map(|c| c == self.original)
            .unwrap_or(false)
    }

    /// Re-derives every claim of a factorization read from outside: the
    /// parts are valid functors, they reassemble, and each part lies in the
    /// class of its system. Returns the failed claims.
    pub fn recheck(&self) -> Result<Vec<String>> {
        let mut problems = Vec::new();
        for (part, f) in [("e_part", &self.e_part), ("m_part", &self.m_part)] {
            let report = validate_functor(f)?;
            if !report.is_valid() {
                problems.push(format!("{part} is not a functor: {report}"));
            }
        }
        if !problems.is_empty() {
            return Ok(problems);
        }
        if !self.reassembles() {
            problems.push("m_part . e_part differs from the original functor".into());
        }
        let (e_class, e_ok, m_class, m_ok) = match self.kind {
            FactorizationKind::Em => (
                "inverted-by-pi0",
                is_in_e(&self.e_part)?,
                "trivial-covering",
                is_trivial_covering(&self.m_part)?,
            ),
            FactorizationKind::Comprehensive => (
                "final",
                is_final(&self.e_part)?.is_final,
                "discrete-fibration",
                is_discrete_fibration(&self.m_part),
            ),
        };
        if !e_ok {
            problems.push(format!("e_part is not {e_class}"));
        }
        if !m_ok {
            problems.push(format!("m_part is not {m_class}"));
        }
        Ok(problems)
    }
}

/// `Y x_{D π₀ Y} D π₀ X` with `e` induced by `(F, η_X)`.
pub fn em_factor(f: &GFunctor) -> Result<Factorization> {
    let eta_x = pi0(f.dom())?.eta;
    let eta_y = pi0(f.cod())?.eta;
    let pi0f = pi0_functor(f)?;
    let dpi0f = discrete_functor_of(&pi0f)?;
    // The discrete groupoids of the components must match the units'.
    let dpi0f = GFunctor::new(eta_x.cod(), eta_y.cod(), dpi0f.f0().clone(), dpi0f.f1().clone())?;
    let pb = gpd_pullback(&eta_y, &dpi0f)?;
    let e_part = pb.pair(f, &eta_x)?;
    let mut out = Factorization {
        kind: FactorizationKind::Em,
        original: f.clone(),
        e_part,
        middle: pb.apex.clone(),
        m_part: pb.proj1.clone(),
        certificates: Vec::new(),
    };
    out.certify_composite()?;
    let e_in = is_in_e(&out.e_part)?;
    out.certify("e_part", "inverted-by-pi0", e_in)?;
    let m_in = is_trivial_covering(&out.m_part)?;
    out.certify("m_part", "trivial-covering", m_in)?;
    Ok(out)
}

/// Verdicts of the two trivial-covering tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrivialCoveringRoutes {
    /// The square `η_Y . F = D π₀ F . η_X` is a pullback.
    pub unit_square: bool,
    /// Both `F` and `Supp F` are discrete fibrations.
    pub fibrations: bool,
}

pub fn trivial_covering_routes(f: &GFunctor) -> Result<TrivialCoveringRoutes> {
    let px = pi0(f.dom())?;
    let py = pi0(f.cod())?;
    let pi0f = pi0_functor(f)?;
    let unit_square = square_is_pullback(f.f0(), &px.q, &py.q, &pi0f)
        && square_is_pullback(f.f1(), px.eta.f1(), py.eta.f1(), &pi0f);
    let fibrations = is_discrete_fibration(f) && is_discrete_fibration(&supp_functor(f)?);
    Ok(TrivialCoveringRoutes {
        unit_square,
        fibrations,
    })
}

pub fn is_trivial_covering(f: &GFunctor) -> Result<bool> {
    let routes = trivial_covering_routes(f)?;
    if routes.unit_square != routes.fibrations {
        return Err(Error::InternalDisagreement(format!(
            "trivial covering: unit-square test says {}, fibration test says {}",
            routes.unit_square, routes.fibrations
        )));
    }
    Ok(routes.unit_square)
}

#[derive(Debug, Clone)]
pub struct CoveringVerdict {
    pub covering: bool,
    /// For a covering: its pullback along `ε(cod F)`, whose projection to
    /// `Dec(cod F)` is a verified trivial covering.
    pub witness: Option<GpdPullback>,
}

pub fn is_covering(f: &GFunctor) -> Result<CoveringVerdict> {
    if !is_discrete_fibration(f) {
        return Ok(CoveringVerdict {
            covering: false,
            witness: None,
        });
    }
    let eps = decalage(f.cod())?.epsilon;
    let pb = gpd_pullback(f, &eps)?;
    if !is_trivial_covering(&pb.proj2)? {
        return Err(Error::InternalDisagreement(
            "a discrete fibration does not split along its codomain's décalage".into(),
        ));
    }
    Ok(CoveringVerdict {
        covering: true,
        witness: Some(pb),
    })
}

pub fn is_in_e(f: &GFunctor) -> Result<bool> {
    Ok(classify(&pi0_functor(f)?).iso)
}

/// The first half of the comprehensive construction: `P = F x_Y Dec Y`,
/// its components, and the map `w: π₀ P -> Y0` sending the component of
/// `(x, g)` to `c(g)`.
struct CommaData {
    pb: GpdPullback,
    pi0p: crate::reflection::Pi0Result,
    w: Morphism,
}

fn comma_data(f: &GFunctor) -> Result<CommaData> {
    let y = f.cod();
    let eps = decalage(y)?.epsilon;
    let pb = gpd_pullback(f, &eps)?;
    let pi0p = pi0(&pb.apex)?;
    let to_y0 = compose(y.c(), pb.proj2.f0())?;
    let w = pi0p.fork.factor(&to_y0).map_err(|e| {
        Error::ActionNotWellDefined(format!("codomain is not constant on components: {e}"))
    })?;
    Ok(CommaData { pb, pi0p, w })
}

pub fn comprehensive_factor(f: &GFunctor) -> Result<Factorization> {
    let y = f.cod();
    let CommaData { pb, pi0p, w } = comma_data(f)?;
    let objects_cone = pb.objects_cone();
    let w0 = pi0p.components.clone();
    let cone = pullback(&w, y.d())?;
    let w1 = cone.apex().clone();
    let (k_of, h_of) = (cone.proj1().clone(), cone.proj2().clone());
    let qp = &pi0p.q;

    // Action of an arrow h out of w(k) on the component k, computed on
    // every member of the class.
    let mut action = Vec::with_capacity(w1.len());
    for t in 0..w1.len() {
        let (k, h) = (k_of.apply(t), h_of.apply(t));
        let mut image = None;
        for &p in &pi0p.fork.classes()[k] {
            let (x, g) = (objects_cone.proj1().apply(p), objects_cone.proj2().apply(p));
            let hg = y.compose(h, g).ok_or_else(|| {
                Error::ActionNotWellDefined("arrow does not start at the component's codomain".into())
            })?;
            let moved = objects_cone.pair_index(x, hg).ok_or_else(|| {
                Error::ActionNotWellDefined("moved point leaves the comma object".into())
            })?;
            let cls = qp.apply(moved);
            match image {
                None => image = Some(cls),
                Some(prev) if prev != cls => {
                    return Err(Error::ActionNotWellDefined(format!(
                        "arrow `{}` sends component `{}` to two components",
                        y.arrows().elem(h),
                        w0.elem(k)
                    )))
                }
                Some(_) => {}
            }
        }
        action.push(image.expect("components are nonempty"));
    }
    let at = |k: usize, h: usize| cone.pair_index(k, h).expect("(k, h) lies over d(h)");
    let d_w = k_of.clone();
    let c_w = Morphism::from_table(&w1, &w0, action.clone());
    let e_w = Morphism::from_fn(&w0, &w1, |k| at(k, y.e().apply(w.apply(k))));
    let i_w = Morphism::from_fn(&w1, &w1, |t| at(action[t], y.inv().apply(h_of.apply(t))));
    let middle = Groupoid::from_parts(&w0, &w1, d_w, c_w, e_w, i_w, |u, v| {
        let h = y
            .compose(h_of.apply(u), h_of.apply(v))
            .ok_or_else(|| Error::ActionNotWellDefined("arrows of the middle do not compose".into()))?;
        Ok(at(k_of.apply(v), h))
    })?;
    ensure_valid_groupoid(&middle).map_err(|e| Error::ActionNotWellDefined(e.to_string()))?;
    let m_part = GFunctor::new(&middle, y, w.clone(), h_of.clone())?;

    let x = f.dom();
    let e0: Vec<usize> = (0..x.objects().len())
        .map(|o| {
            let fo = f.f0().apply(o);
            objects_cone
                .pair_index(o, y.e().apply(fo))
                .map(|p| qp.apply(p))
                .expect("(x, e(f0 x)) lies in the comma object")
        })
        .collect();
    let e1 = Morphism::from_fn(x.arrows(), &w1, |a| at(e0[x.d().apply(a)], f.f1().apply(a)));
    let e_part = GFunctor::new(x, &middle, Morphism::from_table(x.objects(), &w0, e0), e1)?;

    let mut out = Factorization {
        kind: FactorizationKind::Comprehensive,
        original: f.clone(),
        e_part,
        middle,
        m_part,
        certificates: Vec::new(),
    };
    let e_valid = validate_functor(&out.e_part)?.is_valid();
    out.certify("e_part", "functor", e_valid)?;
    out.certify_composite()?;
    let m_df = is_discrete_fibration(&out.m_part);
    out.certify("m_part", "discrete-fibration", m_df)?;
    let e_final = is_final(&out.e_part)?.is_final;
    out.certify("e_part", "final", e_final)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalityStrategy {
    /// Every comma groupoid `(F, y)` is nonempty and connected.
    CommaComponents,
    /// `π₀(F)` iso and `π₁(F)` surjective, cross-checked against full and
    /// essentially surjective with `π₀(F)` iso.
    Homotopy,
}

impl fmt::Display for FinalityStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FinalityStrategy::CommaComponents => "comma-components",
            FinalityStrategy::Homotopy => "pi0-iso-and-pi1-epi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FinalityVerdict {
    pub is_final: bool,
    pub strategy: FinalityStrategy,
}

/// The homotopy criterion and the full/essentially-surjective criterion,
/// for a group backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FinalityCriteria {
    pub homotopy: bool,
    pub full_and_surjective: bool,
    pub comma: bool,
}

pub fn finality_criteria(f: &GFunctor) -> Result<FinalityCriteria> {
    let pi0_iso = classify(&pi0_functor(f)?).iso;
    let pi1_epi = classify(&pi1_functor(f)?).regular_epi;
    let p = profile(f)?;
    Ok(FinalityCriteria {
        homotopy: pi0_iso && pi1_epi,
        full_and_surjective: p.full && p.essentially_surjective && pi0_iso,
        comma: comma_is_final(f)?,
    })
}

fn comma_is_final(f: &GFunctor) -> Result<bool> {
    Ok(comma_data(f)?.w.is_bijective())
}

pub fn is_final(f: &GFunctor) -> Result<FinalityVerdict> {
    match f.dom().backend() {
        Backend::FinSet => Ok(FinalityVerdict {
            is_final: comma_is_final(f)?,
            strategy: FinalityStrategy::CommaComponents,
        }),
        Backend::FinAb => {
            let c = finality_criteria(f)?;
            if c.homotopy != c.full_and_surjective || c.homotopy != c.comma {
                return Err(Error::InternalDisagreement(format!(
                    "finality: pi0/pi1 criterion {}, full and surjective {}, comma components {}",
                    c.homotopy, c.full_and_surjective, c.comma
                )));
            }
            Ok(FinalityVerdict {
                is_final: c.homotopy,
                strategy: FinalityStrategy::Homotopy,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityBudget {
    /// Random pullbacks to verify after the deterministic batch. Skipped
    /// draws are replaced, up to `ATTEMPTS_PER_TRIAL` draws per trial.
    pub trials: usize,
    /// Size cap for generated probe domains.
    pub max_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct StabilityWitness {
    /// Index of the probe in search order; deterministic probes come first.
    pub probe: usize,
    pub deterministic: bool,
    pub along: GFunctor,
    pub square: GpdPullback,
    /// The pulled-back functor, which `π₀` does not invert.
    pub pulled: GFunctor,
}

#[derive(Debug, Clone)]
pub enum StabilityOutcome {
    Counterexample(Box<StabilityWitness>),
    Exhausted,
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub outcome: StabilityOutcome,
    pub along: PullbackClass,
    pub budget: StabilityBudget,
    /// Pullbacks actually tested.
    pub probed: usize,
    /// Probes skipped because the pullback exceeded the size cap.
    pub skipped: usize,
}

impl StabilityVerdict {
    pub fn counterexample(&self) -> Option<&StabilityWitness> {
        match &self.outcome {
            StabilityOutcome::Counterexample(w) => Some(w),
            StabilityOutcome::Exhausted => None,
        }
    }
}

/// Object probes `D(C) -> Y` picking out a single object: for groups, the
/// cyclic subgroup generated by the object; for sets, a point.
fn point_probes(y: &Groupoid) -> Result<Vec<GFunctor>> {
    let y0 = y.objects();
    let mut out = Vec::with_capacity(y0.len());
    for o in 0..y0.len() {
        let q = match y0.backend() {
            Backend::FinSet => {
                let pt = Object::terminal(Backend::FinSet);
                Morphism::new(&pt, y0, vec![o])?
            }
            Backend::FinAb => {
                let n = y0.order(o);
                let c = Object::cyclic(n)?;
                Morphism::new(&c, y0, (0..n).map(|k| y0.multiple(k, o)).collect())?
            }
        };
        out.push(discrete_functor(y, &q)?);
    }
    Ok(out)
}

const BATCH: usize = 16;

/// Draws allowed per requested random pullback.
pub const ATTEMPTS_PER_TRIAL: usize = 4;

enum Probe {
    Pass,
    Skipped,
    Fail(Box<StabilityWitness>),
}

fn probe(f: &GFunctor, g: &GFunctor, index: usize, deterministic: bool) -> Result<Probe> {
    let square = match gpd_pullback(f, g) {
        Ok(sq) => sq,
        Err(Error::CapExceeded { .. }) => return Ok(Probe::Skipped),
        Err(e) => return Err(e),
    };
    if is_in_e(&square.proj2)? {
        return Ok(Probe::Pass);
    }
    Ok(Probe::Fail(Box::new(StabilityWitness {
        probe: index,
        deterministic,
        along: g.clone(),
        pulled: square.proj2.clone(),
        square,
    })))
}

/// Bounded refutation of "every pullback of `F` along the class is in
/// `E`". Probes `ε(Y)`, the identity, `extra`, and (for the unrestricted
/// class) every object probe first, then `budget.trials` random functors
/// into `Y`. Results are merged in probe order, so the verdict does not
/// depend on scheduling.
pub fn stability_search(
    f: &GFunctor,
    along: PullbackClass,
    budget: &StabilityBudget,
    extra: &[GFunctor],
) -> Result<StabilityVerdict> {
    let y = f.cod();
    let mut fixed = vec![decalage(y)?.epsilon, GFunctor::identity(y)];
    fixed.extend(extra.iter().cloned());
    if along == PullbackClass::All {
        fixed.extend(point_probes(y)?);
    }
    fixed.retain(|g| g.cod() == y && along.admits(g));

    let mut probed = 0;
    let mut skipped = 0;
    let finish = |outcome, probed, skipped| StabilityVerdict {
        outcome,
        along,
        budget: budget.clone(),
        probed,
        skipped,
    };
    for (k, g) in fixed.iter().enumerate() {
        match probe(f, g, k, true)? {
            Probe::Pass => probed += 1,
            Probe::Skipped => skipped += 1,
            Probe::Fail(w) => {
                return Ok(finish(StabilityOutcome::Counterexample(w), probed + 1, skipped))
            }
        }
    }
    let offset = fixed.len();
    let deterministic_probed = probed;
    let max_draws = budget.trials * ATTEMPTS_PER_TRIAL;
    let mut start = 0;
    while probed - deterministic_probed < budget.trials && start < max_draws {
        let missing = budget.trials - (probed - deterministic_probed);
        let end = (start + missing.min(BATCH)).min(max_draws);
        let results: Vec<Result<Probe>> = (start..end)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
                rng.set_stream(t as u64 + 1);
                match functor_into(&mut rng, y, along, budget.max_size) {
                    Ok(g) => probe(f, &g, offset + t, false),
                    Err(Error::CapExceeded { .. }) | Err(Error::GenerationFailed(_)) => {
                        Ok(Probe::Skipped)
                    }
                    Err(e) => Err(e),
                }
            })
            .collect();
        for r in results {
            match r? {
                Probe::Pass => probed += 1,
                Probe::Skipped => skipped += 1,
                Probe::Fail(w) => {
                    return Ok(finish(StabilityOutcome::Counterexample(w), probed + 1, skipped))
                }
            }
        }
        start = end;
    }
    Ok(finish(StabilityOutcome::Exhausted, probed, skipped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillInMethod {
    /// Every candidate functor was enumerated; exactly one solved the square.
    Exhaustive { candidates: usize },
    /// Built by lifting through the right-hand discrete fibration.
    Lifted,
}

#[derive(Debug, Clone)]
pub struct FillIn {
    pub diagonal: GFunctor,
    pub method: FillInMethod,
}

/// Arrow count up to which fill-ins are found by exhaustive search.
pub const EXHAUSTIVE_FILL_IN_ARROWS: usize = 8;

/// The unique `d: B -> C` with `d . left = top` and `right . d = bottom`
/// for a commuting square `right . top = bottom . left`. `left` must be
/// in `E` with `right` a trivial covering, or `left` final with `right` a
/// discrete fibration.
pub fn orthogonal_fill_in(
    top: &GFunctor,
    left: &GFunctor,
    right: &GFunctor,
    bottom: &GFunctor,
) -> Result<FillIn> {
    if left.dom() != top.dom() || left.cod() != bottom.dom() || top.cod() != right.dom() || right.cod() != bottom.cod() {
        return Err(Error::DomainMismatch("square edges do not line up".into()));
    }
    if GFunctor::compose(right, top)? != GFunctor::compose(bottom, left)? {
        return Err(Error::NotOrthogonal("square does not commute".into()));
    }
    let em = is_in_e(left)? && is_trivial_covering(right)?;
    let comprehensive = !em && is_discrete_fibration(right) && is_final(left)?.is_final;
    if !em && !comprehensive {
        return Err(Error::NotOrthogonal(
            "left edge is not in the left class of a system whose right class contains the right edge".into(),
        ));
    }
    if left.cod().arrows().len() <= EXHAUSTIVE_FILL_IN_ARROWS {
        exhaustive_fill_in(top, left, right, bottom)
    } else {
        lifted_fill_in(top, left, right, bottom)
    }
}

fn exhaustive_fill_in(
    top: &GFunctor,
    left: &GFunctor,
    right: &GFunctor,
    bottom: &GFunctor,
) -> Result<FillIn> {
    let (b, c) = (left.cod(), top.cod());
    // Values forced on the image of `left`.
    let mut forced0: HashMap<usize, usize> = HashMap::new();
    let mut forced1: HashMap<usize, usize> = HashMap::new();
    let mut clash = false;
    for a in 0..left.dom().objects().len() {
        let prev = forced0.insert(left.f0().apply(a), top.f0().apply(a));
        clash |= prev.is_some_and(|p| p != top.f0().apply(a));
    }
    for a in 0..left.dom().arrows().len() {
        let prev = forced1.insert(left.f1().apply(a), top.f1().apply(a));
        clash |= prev.is_some_and(|p| p != top.f1().apply(a));
    }
    if clash {
        return Err(Error::NotOrthogonal("no fill-in: left identifies what top separates".into()));
    }
    let allowed0 = |s: usize, t: usize| {
        right.f0().apply(t) == bottom.f0().apply(s) && forced0.get(&s).is_none_or(|&v| v == t)
    };
    let d0s = enumerate_morphisms(b.objects(), c.objects(), &allowed0, usize::MAX);
    let mut solutions = Vec::new();
    let mut candidates = 0;
    for d0 in d0s {
        let allowed1 = |s: usize, t: usize| {
            right.f1().apply(t) == bottom.f1().apply(s)
                && c.d().apply(t) == d0.apply(b.d().apply(s))
                && c.c().apply(t) == d0.apply(b.c().apply(s))
                && forced1.get(&s).is_none_or(|&v| v == t)
        };
        for d1 in enumerate_morphisms(b.arrows(), c.arrows(), &allowed1, usize::MAX) {
            candidates += 1;
            let d = GFunctor::new(b, c, d0.clone(), d1)?;
            if validate_functor(&d)?.is_valid()
                && GFunctor::compose(&d, left)? == *top
                && GFunctor::compose(right, &d)? == *bottom
            {
                solutions.push(d);
            }
        }
    }
    match solutions.len() {
        1 => Ok(FillIn {
            diagonal: solutions.pop().expect("one solution"),
            method: FillInMethod::Exhaustive { candidates },
        }),
        0 => Err(Error::NotOrthogonal("no fill-in exists".into())),
        n => Err(Error::NotOrthogonal(format!("{n} distinct fill-ins exist"))),
    }
}

fn lifted_fill_in(
    top: &GFunctor,
    left: &GFunctor,
    right: &GFunctor,
    bottom: &GFunctor,
) -> Result<FillIn> {
    let (b, c) = (left.cod(), top.cod());
    // Unique lift of an arrow of D from a given domain in C.
    let mut lift: HashMap<(usize, usize), usize> = HashMap::new();
    for t in 0..c.arrows().len() {
        lift.insert((c.d().apply(t), right.f1().apply(t)), t);
    }
    let mut d0: Vec<Option<usize>> = vec![None; b.objects().len()];
    let mut queue = Vec::new();
    for a in 0..left.dom().objects().len() {
        let s = left.f0().apply(a);
        if d0[s].is_none() {
            d0[s] = Some(top.f0().apply(a));
            queue.push(s);
        }
    }
    let mut out_arrows: Vec<Vec<usize>> = vec![Vec::new(); b.objects().len()];
    for s in 0..b.arrows().len() {
        out_arrows[b.d().apply(s)].push(s);
    }
    while let Some(s) = queue.pop() {
        for &beta in &out_arrows[s] {
            let from = d0[s].expect("queued objects are assigned");
            let t = *lift.get(&(from, bottom.f1().apply(beta))).ok_or_else(|| {
                Error::NotOrthogonal("right edge does not lift an arrow".into())
            })?;
            let target = b.c().apply(beta);
            if d0[target].is_none() {
                d0[target] = Some(c.c().apply(t));
                queue.push(target);
            }
        }
    }
    let d0 = d0
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::NotOrthogonal("a component is missed by the left edge".into()))?;
    let d1 = (0..b.arrows().len())
        .map(|s| {
            lift.get(&(d0[b.d().apply(s)], bottom.f1().apply(s)))
                .copied()
                .ok_or_else(|| Error::NotOrthogonal("right edge does not lift an arrow".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let d = GFunctor::new(
        b,
        c,
        Morphism::from_table(b.objects(), c.objects(), d0),
        Morphism::from_table(b.arrows(), c.arrows(), d1),
    )?;
    if !validate_functor(&d)?.is_valid()
        || GFunctor::compose(&d, left)? != *top
        || GFunctor::compose(right, &d)? != *bottom
    {
        return Err(Error::NotOrthogonal("no fill-in exists".into()));
    }
    Ok(FillIn {
        diagonal: d,
        method: FillInMethod::Lifted,
    })
}

/// Discrete groupoid on a point, for tests and probes.
pub fn point_groupoid(backend: Backend) -> Result<Groupoid> {
    discrete_of(&Object::terminal(backend))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpd::{full_subgroupoid, gpd_product, indiscrete_of};

    fn set(n: usize) -> Object {
        Object::set_of_size(n).unwrap()
    }

    fn bang(x: &Groupoid, y: &Groupoid) -> GFunctor {
        GFunctor::new(
            x,
            y,
            Morphism::new(x.objects(), y.objects(), vec![0; x.objects().len()]).unwrap(),
            Morphism::new(x.arrows(), y.arrows(), vec![0; x.arrows().len()]).unwrap(),
        )
        .unwrap()
    }

    fn two_components() -> Groupoid {
        gpd_product(&indiscrete_of(&set(2)).unwrap(), &discrete_of(&set(2)).unwrap())
            .unwrap()
            .apex
    }

    #[test]
    fn em_factor_of_a_unit() {
        let g = two_components();
        let eta = pi0(&g).unwrap().eta;
        let fac = em_factor(&eta).unwrap();
        assert!(fac.reassembles());
        assert!(is_in_e(&fac.e_part).unwrap());
        assert!(fac.m_part.is_levelwise_iso());
    }

    #[test]
    fn em_factor_of_a_functor_already_in_e() {
        let ind = indiscrete_of(&set(2)).unwrap();
        let pt = discrete_of(&set(1)).unwrap();
        let f = bang(&ind, &pt);
        let fac = em_factor(&f).unwrap();
        assert_eq!(fac.middle.objects().len(), 1);
        assert_eq!(fac.middle.arrows().len(), 1);
        assert!(fac.m_part.is_levelwise_iso());
        assert_eq!(fac.certificates.len(), 3);
    }

    #[test]
    fn em_factor_of_a_trivial_covering() {
        let inc = full_subgroupoid(&two_components(), &[0, 2]).unwrap();
        let fac = em_factor(&inc).unwrap();
        assert!(fac.e_part.is_levelwise_iso());
        assert!(is_trivial_covering(&inc).unwrap());
    }

    #[test]
    fn trivial_covering_examples() {
        let g = two_components();
        assert!(is_trivial_covering(&GFunctor::identity(&g)).unwrap());
        let ind = indiscrete_of(&set(2)).unwrap();
        let pt = discrete_of(&set(1)).unwrap();
        let routes = trivial_covering_routes(&bang(&ind, &pt)).unwrap();
        assert!(!routes.unit_square && !routes.fibrations);
    }

    #[test]
    fn covering_examples() {
        let g = two_components();
        let v = is_covering(&GFunctor::identity(&g)).unwrap();
        assert!(v.covering && v.witness.is_some());
        let inc = full_subgroupoid(&g, &[1, 3]).unwrap();
        assert!(is_covering(&inc).unwrap().covering);
        let ind = indiscrete_of(&set(2)).unwrap();
        let pt = discrete_of(&set(1)).unwrap();
        assert!(!is_covering(&bang(&ind, &pt)).unwrap().covering);
    }

    #[test]
    fn comprehensive_of_a_point_into_indiscrete() {
        let ind = indiscrete_of(&set(2)).unwrap();
        let pt = discrete_of(&set(1)).unwrap();
        let f = GFunctor::new(
            &pt,
            &ind,
            Morphism::new(pt.objects(), ind.objects(), vec![0]).unwrap(),
            Morphism::new(pt.arrows(), ind.arrows(), vec![0]).unwrap(),
        )
        .unwrap();
        assert!(is_final(&f).unwrap().is_final);
        let fac = comprehensive_factor(&f).unwrap();
        assert!(fac.m_part.is_levelwise_iso());
    }

    #[test]
    fn comprehensive_of_identity_on_objects() {
        let d = discrete_of(&set(2)).unwrap();
        let ind = indiscrete_of(&set(2)).unwrap();
        let f = GFunctor::new(
            &d,
            &ind,
            Morphism::identity(d.objects()),
            Morphism::new(d.arrows(), ind.arrows(), vec![0, 3]).unwrap(),
        )
        .unwrap();
        assert!(!is_final(&f).unwrap().is_final);
        let fac = comprehensive_factor(&f).unwrap();
        // Two sheets over the indiscrete groupoid, one per object of the domain.
        assert_eq!(fac.middle.objects().len(), 4);
        assert!(is_discrete_fibration(&fac.m_part));
        assert!(is_final(&fac.e_part).unwrap().is_final);
    }

    #[test]
    fn comprehensive_of_a_discrete_fibration() {
        let inc = full_subgroupoid(&two_components(), &[0, 2]).unwrap();
        let fac = comprehensive_factor(&inc).unwrap();
        assert!(fac.e_part.is_levelwise_iso());
    }

    #[test]
    fn final_examples() {
        let g = two_components();
        assert!(is_final(&GFunctor::identity(&g)).unwrap().is_final);
        let pt = discrete_of(&set(1)).unwrap();
        let d2 = discrete_of(&set(2)).unwrap();
        let f = GFunctor::new(
            &pt,
            &d2,
            Morphism::new(pt.objects(), d2.objects(), vec![0]).unwrap(),
            Morphism::new(pt.arrows(), d2.arrows(), vec![0]).unwrap(),
        )
        .unwrap();
        assert!(!is_final(&f).unwrap().is_final);
    }

    #[test]
    fn fill_in_against_identity_is_top() {
        let g = two_components();
        let inc = full_subgroupoid(&g, &[0, 2]).unwrap();
        let id = GFunctor::identity(inc.dom());
        let fill = orthogonal_fill_in(&inc, &id, &GFunctor::identity(&g), &inc).unwrap();
        assert_eq!(fill.diagonal, inc);
    }

    #[test]
    fn fill_in_of_a_factorization_against_itself_is_identity() {
        let ind = indiscrete_of(&set(2)).unwrap();
        let f = full_subgroupoid(&ind, &[0]).unwrap();
        for fac in [em_factor(&f).unwrap(), comprehensive_factor(&f).unwrap()] {
            let fill = orthogonal_fill_in(&fac.e_part, &fac.e_part, &fac.m_part, &fac.m_part).unwrap();
            assert_eq!(fill.diagonal, GFunctor::identity(&fac.middle));
            assert!(matches!(fill.method, FillInMethod::Exhaustive { .. }));
        }
    }

    #[test]
    fn identity_is_stable() {
        let g = two_components();
        let budget = StabilityBudget {
            trials: 20,
            max_size: 16,
            seed: 7,
        };
        for along in [PullbackClass::All, PullbackClass::RegularEpi] {
            let v = stability_search(&GFunctor::identity(&g), along, &budget, &[]).unwrap();
            assert!(v.counterexample().is_none());
        }
    }
}
