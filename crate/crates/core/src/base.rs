//! Finite exact base categories.
//!
//! Two backends share one tabular representation: finite sets and finite
//! abelian groups. An object is an ordered carrier of [`Elem`] labels, plus
//! an addition table for groups. Every construction is enumerative and its
//! output ordering is fixed: pullback apexes list pairs lexicographically
//! by carrier index, and quotients use the least-index element of each class
//! as representative.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

pub const DEFAULT_SIZE_CAP: usize = 256;

static SIZE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_SIZE_CAP);

/// Largest carrier any construction may produce.
pub fn size_cap() -> usize {
    SIZE_CAP.load(Ordering::Relaxed)
}

pub fn set_size_cap(cap: usize) {
    SIZE_CAP.store(cap.max(1), Ordering::Relaxed);
}

pub(crate) fn check_cap(size: usize) -> Result<()> {
    let cap = size_cap();
    if size > cap {
        Err(Error::CapExceeded { size, cap })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backend {
    FinSet,
    FinAb,
}

impl Backend {
    /// Whether the backend is a Mal'tsev category.
    pub fn is_maltsev(self) -> bool {
        matches!(self, Backend::FinAb)
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::FinSet => f.write_str("finset"),
            Backend::FinAb => f.write_str("finab"),
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finset" => Ok(Backend::FinSet),
            "finab" => Ok(Backend::FinAb),
            other => Err(Error::InvalidInput(format!("unknown backend `{other}`"))),
        }
    }
}

/// Element label. Constructions build tuples out of the labels of their
/// inputs, so a pullback element prints as `(a,b)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    Atom(Arc<str>),
    Tuple(Arc<[Elem]>),
}

impl Elem {
    pub fn atom(s: &str) -> Elem {
        Elem::Atom(Arc::from(s))
    }

    pub fn int(n: usize) -> Elem {
        Elem::atom(&n.to_string())
    }

    pub fn pair(a: Elem, b: Elem) -> Elem {
        Elem::Tuple(Arc::from(vec![a, b]))
    }

    pub fn tuple(items: Vec<Elem>) -> Elem {
        Elem::Tuple(Arc::from(items))
    }

    pub fn as_tuple(&self) -> Option<&[Elem]> {
        match self {
            Elem::Tuple(items) => Some(items),
            Elem::Atom(_) => None,
        }
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elem::Atom(s) => f.write_str(s),
            Elem::Tuple(items) => {
                f.write_str("(")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq)]
struct GroupTable {
    add: Vec<usize>,
    zero: usize,
    neg: Vec<usize>,
}

struct ObjectData {
    backend: Backend,
    carrier: Vec<Elem>,
    index: HashMap<Elem, usize>,
    group: Option<GroupTable>,
}

/// Object of a finite base category. Cheap to clone; equality is
/// structural (backend, carrier and addition table).
#[derive(Clone)]
pub struct Object(Arc<ObjectData>);

impl PartialEq for Object {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.backend == other.0.backend
                && self.0.carrier == other.0.carrier
                && self.0.group == other.0.group)
    }
}

impl Eq for Object {}

impl fmt::Debug for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{", self.backend())?;
        for (k, e) in self.carrier().iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

impl Object {
    fn build(backend: Backend, carrier: Vec<Elem>, group: Option<GroupTable>) -> Result<Object> {
        check_cap(carrier.len())?;
        let mut index = HashMap::with_capacity(carrier.len());
        for (k, e) in carrier.iter().enumerate() {
            if index.insert(e.clone(), k).is_some() {
                return Err(Error::InvalidObject(format!("duplicate element `{e}`")));
            }
        }
        Ok(Object(Arc::new(ObjectData {
            backend,
            carrier,
            index,
            group,
        })))
    }

    pub fn finset(carrier: Vec<Elem>) -> Result<Object> {
        Object::build(Backend::FinSet, carrier, None)
    }

    /// Finite abelian group from its carrier and addition rows
    /// (`rows[a][b]` is the index of `a + b`). The axioms are checked.
    pub fn finab(carrier: Vec<Elem>, rows: Vec<Vec<usize>>) -> Result<Object> {
        let n = carrier.len();
        if n == 0 {
            return Err(Error::InvalidObject("an abelian group needs a zero element".into()));
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidObject(format!(
                "addition table must be {n}x{n}"
            )));
        }
        if rows.iter().flatten().any(|&v| v >= n) {
            return Err(Error::InvalidObject("addition table entry out of range".into()));
        }
        let add: Vec<usize> = rows.into_iter().flatten().collect();
        let zero = (0..n)
            .find(|&z| (0..n).all(|x| add[z * n + x] == x))
            .ok_or_else(|| Error::InvalidObject("no identity element".into()))?;
        let mut neg = Vec::with_capacity(n);
        for x in 0..n {
            let inv = (0..n)
                .find(|&y| add[x * n + y] == zero)
                .ok_or_else(|| Error::InvalidObject(format!("`{}` has no inverse", carrier[x])))?;
            neg.push(inv);
        }
        let obj = Object::build(Backend::FinAb, carrier, Some(GroupTable { add, zero, neg }))?;
        let problems = obj.axiom_violations();
        if let Some(first) = problems.first() {
            return Err(Error::InvalidObject(first.clone()));
        }
        Ok(obj)
    }

    pub(crate) fn finab_unchecked(
        carrier: Vec<Elem>,
        add: Vec<usize>,
        zero: usize,
        neg: Vec<usize>,
    ) -> Result<Object> {
        Object::build(Backend::FinAb, carrier, Some(GroupTable { add, zero, neg }))
    }

    /// The cyclic group Z/n with elements labelled `0..n-1`.
    pub fn cyclic(n: usize) -> Result<Object> {
        if n == 0 {
            return Err(Error::InvalidObject("Z/0 is not finite".into()));
        }
        let carrier = (0..n).map(Elem::int).collect();
        let add = (0..n * n).map(|k| (k / n + k % n) % n).collect();
        let neg = (0..n).map(|x| (n - x) % n).collect();
        Object::finab_unchecked(carrier, add, 0, neg)
    }

    /// Direct sum of cyclic groups, built by iterated products, so
    /// `[2, 4]` has elements `(a,b)`. The empty list gives the zero group.
    pub fn cyclic_sum(orders: &[usize]) -> Result<Object> {
        match orders {
            [] => Ok(Object::terminal(Backend::FinAb)),
            [n] => Object::cyclic(*n),
            [first, rest @ ..] => {
                let mut acc = Object::cyclic(*first)?;
                for &n in rest {
                    acc = product(&acc, &Object::cyclic(n)?)?.apex().clone();
                }
                Ok(acc)
            }
        }
    }

    /// Finite set `{0, .., n-1}`.
    pub fn set_of_size(n: usize) -> Result<Object> {
        Object::finset((0..n).map(Elem::int).collect())
    }

    /// Terminal object: `{*}` for sets, the zero group for groups.
    pub fn terminal(backend: Backend) -> Object {
        match backend {
            Backend::FinSet => Object::finset(vec![Elem::atom("*")]).expect("singleton"),
            Backend::FinAb => Object::finab_unchecked(vec![Elem::int(0)], vec![0], 0, vec![0])
                .expect("zero group"),
        }
    }

    pub fn backend(&self) -> Backend {
        self.0.backend
    }

    pub fn len(&self) -> usize {
        self.0.carrier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.carrier.is_empty()
    }

    pub fn carrier(&self) -> &[Elem] {
        &self.0.carrier
    }

    pub fn elem(&self, i: usize) -> &Elem {
        &self.0.carrier[i]
    }

    pub fn index_of(&self, e: &Elem) -> Option<usize> {
        self.0.index.get(e).copied()
    }

    pub fn is_group(&self) -> bool {
        self.0.group.is_some()
    }

    fn table(&self) -> &GroupTable {
        self.0
            .group
            .as_ref()
            .expect("group operation on a finset object")
    }

    /// Panics for finset objects.
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.table().add[a * self.len() + b]
    }

    pub fn zero(&self) -> usize {
        self.table().zero
    }

    pub fn neg(&self, a: usize) -> usize {
        self.table().neg[a]
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    pub fn multiple(&self, k: usize, a: usize) -> usize {
        (0..k).fold(self.zero(), |acc, _| self.add(acc, a))
    }

    pub fn order(&self, a: usize) -> usize {
        let mut k = 1;
        let mut x = a;
        while x != self.zero() {
            x = self.add(x, a);
            k += 1;
        }
        k
    }

    /// Addition rows, as accepted by [`Object::finab`].
    pub fn addition_rows(&self) -> Option<Vec<Vec<usize>>> {
        let n = self.len();
        self.0
            .group
            .as_ref()
            .map(|t| t.add.chunks(n.max(1)).map(|r| r.to_vec()).collect())
    }

    /// Every violated abelian-group axiom, by full enumeration.
    pub fn axiom_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let Some(t) = self.0.group.as_ref() else {
            return out;
        };
        let n = self.len();
        let e = |i: usize| self.elem(i);
        for a in 0..n {
            if t.add[t.zero * n + a] != a {
                out.push(format!("0 + {} != {}", e(a), e(a)));
            }
            if t.add[a * n + t.neg[a]] != t.zero {
                out.push(format!("{} + (-{}) != 0", e(a), e(a)));
            }
            for b in 0..n {
                let ab = t.add[a * n + b];
                if ab != t.add[b * n + a] {
                    out.push(format!("{} + {} is not commutative", e(a), e(b)));
                }
                for c in 0..n {
                    if t.add[ab * n + c] != t.add[a * n + t.add[b * n + c]] {
                        out.push(format!("({} + {}) + {} is not associative", e(a), e(b), e(c)));
                        if out.len() > 16 {
                            return out;
                        }
                    }
                }
            }
        }
        out
    }

    /// Sub-object on the given carrier indices (same labels), with its
    /// inclusion. For groups the indices must form a subgroup.
    pub fn subobject(&self, members: &[usize]) -> Result<Morphism> {
        let mut members = members.to_vec();
        members.sort_unstable();
        members.dedup();
        let carrier: Vec<Elem> = members.iter().map(|&m| self.elem(m).clone()).collect();
        let sub = match self.backend() {
            Backend::FinSet => Object::finset(carrier)?,
            Backend::FinAb => {
                let pos: HashMap<usize, usize> =
                    members.iter().enumerate().map(|(k, &m)| (m, k)).collect();
                let n = members.len();
                let mut add = Vec::with_capacity(n * n);
                for &a in &members {
                    for &b in &members {
                        let s = pos.get(&self.add(a, b)).ok_or_else(|| {
                            Error::InvalidObject("subset is not closed under addition".into())
                        })?;
                        add.push(*s);
                    }
                }
                let zero = *pos
                    .get(&self.zero())
                    .ok_or_else(|| Error::InvalidObject("subset misses zero".into()))?;
                let neg = members
                    .iter()
                    .map(|&a| {
                        pos.get(&self.neg(a)).copied().ok_or_else(|| {
                            Error::InvalidObject("subset is not closed under negation".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Object::finab_unchecked(carrier, add, zero, neg)?
            }
        };
        Ok(Morphism::from_table(&sub, self, members))
    }
}

/// Lookup from index rows to carrier positions of a tabulated object.
#[derive(Debug, Clone)]
pub(crate) struct RowIndex {
    radices: Vec<u64>,
    map: HashMap<u64, usize>,
}

impl RowIndex {
    fn key(&self, row: &[usize]) -> u64 {
        row.iter()
            .zip(&self.radices)
            .fold(0u64, |acc, (&r, &w)| acc * w + r as u64)
    }

    pub(crate) fn get(&self, row: &[usize]) -> Option<usize> {
        self.map.get(&self.key(row)).copied()
    }
}

/// Builds an object whose elements are rows of indices into `factors`,
/// with componentwise addition for groups. Rows must be distinct and, for
/// groups, closed under the componentwise operations.
pub(crate) fn tabulate(
    backend: Backend,
    factors: &[&Object],
    rows: &[Vec<usize>],
    label: impl Fn(&[usize]) -> Elem,
) -> Result<(Object, RowIndex)> {
    check_cap(rows.len())?;
    let mut index = RowIndex {
        radices: factors.iter().map(|f| f.len().max(1) as u64).collect(),
        map: HashMap::with_capacity(rows.len()),
    };
    for (k, r) in rows.iter().enumerate() {
        let key = index.key(r);
        index.map.insert(key, k);
    }
    let carrier: Vec<Elem> = rows.iter().map(|r| label(r)).collect();
    let obj = match backend {
        Backend::FinSet => Object::finset(carrier)?,
        Backend::FinAb => {
            let n = rows.len();
            let mut add = Vec::with_capacity(n * n);
            let mut scratch = vec![0usize; factors.len()];
            for a in rows {
                for b in rows {
                    for (k, f) in factors.iter().enumerate() {
                        scratch[k] = f.add(a[k], b[k]);
                    }
                    add.push(index.get(&scratch).ok_or_else(|| {
                        Error::InvalidObject("tabulated rows not closed under addition".into())
                    })?);
                }
            }
            let zero_row: Vec<usize> = factors.iter().map(|f| f.zero()).collect();
            let zero = index
                .get(&zero_row)
                .ok_or_else(|| Error::InvalidObject("tabulated rows miss zero".into()))?;
            let neg = rows
                .iter()
                .map(|r| {
                    let nr: Vec<usize> = r.iter().zip(factors).map(|(&x, f)| f.neg(x)).collect();
                    index.get(&nr).ok_or_else(|| {
                        Error::InvalidObject("tabulated rows not closed under negation".into())
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Object::finab_unchecked(carrier, add, zero, neg)?
        }
    };
    Ok((obj, index))
}

/// Morphism of a finite base category, stored as an index table.
#[derive(Clone, PartialEq, Eq)]
pub struct Morphism {
    dom: Object,
    cod: Object,
    map: Arc<[usize]>,
}

impl fmt::Debug for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (a, &b) in self.map.iter().enumerate() {
            if a > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}->{}", self.dom.elem(a), self.cod.elem(b))?;
        }
        f.write_str("}")
    }
}

impl Morphism {
    /// Checked constructor: totality, and the homomorphism law for groups.
    pub fn new(dom: &Object, cod: &Object, map: Vec<usize>) -> Result<Morphism> {
        if dom.backend() != cod.backend() {
            return Err(Error::BackendMismatch(dom.backend(), cod.backend()));
        }
        if map.len() != dom.len() {
            return Err(Error::InvalidMorphism(format!(
                "table has {} entries for a domain of {} elements",
                map.len(),
                dom.len()
            )));
        }
        if let Some(a) = map.iter().position(|&b| b >= cod.len()) {
            return Err(Error::InvalidMorphism(format!(
                "image of `{}` is outside the codomain",
                dom.elem(a)
            )));
        }
        let m = Morphism::from_table(dom, cod, map);
        if let Some(v) = m.hom_violation() {
            return Err(Error::NotAHomomorphism(v));
        }
        Ok(m)
    }

    pub(crate) fn from_table(dom: &Object, cod: &Object, map: Vec<usize>) -> Morphism {
        debug_assert_eq!(map.len(), dom.len());
        debug_assert!(map.iter().all(|&b| b < cod.len()));
        Morphism {
            dom: dom.clone(),
            cod: cod.clone(),
            map: Arc::from(map),
        }
    }

    pub(crate) fn from_fn(dom: &Object, cod: &Object, f: impl Fn(usize) -> usize) -> Morphism {
        Morphism::from_table(dom, cod, (0..dom.len()).map(f).collect())
    }

    /// Morphism given by element labels; every domain element must appear once.
    pub fn from_pairs(dom: &Object, cod: &Object, pairs: &[(Elem, Elem)]) -> Result<Morphism> {
        let mut map = vec![usize::MAX; dom.len()];
        for (a, b) in pairs {
            let ai = dom
                .index_of(a)
                .ok_or_else(|| Error::InvalidMorphism(format!("`{a}` is not in the domain")))?;
            let bi = cod
                .index_of(b)
                .ok_or_else(|| Error::InvalidMorphism(format!("`{b}` is not in the codomain")))?;
            if map[ai] != usize::MAX {
                return Err(Error::InvalidMorphism(format!("`{a}` mapped twice")));
            }
            map[ai] = bi;
        }
        if let Some(a) = map.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidMorphism(format!(
                "no image given for `{}`",
                dom.elem(a)
            )));
        }
        Morphism::new(dom, cod, map)
    }

    pub fn identity(obj: &Object) -> Morphism {
        Morphism::from_fn(obj, obj, |a| a)
    }

    pub fn to_terminal(obj: &Object) -> Morphism {
        let t = Object::terminal(obj.backend());
        Morphism::from_fn(obj, &t, |_| 0)
    }

    /// Zero homomorphism between groups.
    pub fn zero(dom: &Object, cod: &Object) -> Result<Morphism> {
        if dom.backend() != Backend::FinAb || cod.backend() != Backend::FinAb {
            return Err(Error::BackendUnsupported {
                op: "zero morphism",
                backend: Backend::FinSet,
            });
        }
        Ok(Morphism::from_fn(dom, cod, |_| cod.zero()))
    }

    pub fn dom(&self) -> &Object {
        &self.dom
    }

    pub fn cod(&self) -> &Object {
        &self.cod
    }

    pub fn table(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, a: usize) -> usize {
        self.map[a]
    }

    pub fn is_identity(&self) -> bool {
        self.dom == self.cod && self.map.iter().enumerate().all(|(a, &b)| a == b)
    }

    /// First violation of the homomorphism law, for group backends.
    pub fn hom_violation(&self) -> Option<String> {
        if !self.dom.is_group() || !self.cod.is_group() {
            return None;
        }
        if self.map[self.dom.zero()] != self.cod.zero() {
            return Some("zero is not preserved".into());
        }
        let n = self.dom.len();
        for a in 0..n {
            for b in a..n {
                if self.map[self.dom.add(a, b)] != self.cod.add(self.map[a], self.map[b]) {
                    return Some(format!(
                        "f({} + {}) != f({}) + f({})",
                        self.dom.elem(a),
                        self.dom.elem(b),
                        self.dom.elem(a),
                        self.dom.elem(b)
                    ));
                }
            }
        }
        None
    }

    pub fn is_homomorphism(&self) -> bool {
        self.hom_violation().is_none()
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        self.map.iter().all(|&b| !std::mem::replace(&mut seen[b], true))
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        for &b in self.map.iter() {
            seen[b] = true;
        }
        seen.into_iter().all(|s| s)
    }

    pub fn is_bijective(&self) -> bool {
        self.dom.len() == self.cod.len() && self.is_injective()
    }
}

pub fn compose(g: &Morphism, f: &Morphism) -> Result<Morphism> {
    if f.cod != g.dom {
        return Err(Error::DomainMismatch(
            "codomain of the first morphism differs from the domain of the second".into(),
        ));
    }
    Ok(Morphism::from_fn(&f.dom, &g.cod, |a| g.apply(f.apply(a))))
}

/// Inverse of a bijective morphism.
pub fn inverse(f: &Morphism) -> Option<Morphism> {
    if !f.is_bijective() {
        return None;
    }
    let mut inv = vec![0; f.cod.len()];
    for (a, &b) in f.map.iter().enumerate() {
        inv[b] = a;
    }
    Some(Morphism::from_table(&f.cod, &f.dom, inv))
}

/// Pullback cone over a cospan `(left, right)`.
#[derive(Clone)]
pub struct PullbackCone {
    apex: Object,
    proj1: Morphism,
    proj2: Morphism,
    left: Morphism,
    right: Morphism,
    index: Arc<RowIndex>,
}

impl PartialEq for PullbackCone {
    fn eq(&self, other: &Self) -> bool {
        self.apex == other.apex
            && self.proj1 == other.proj1
            && self.proj2 == other.proj2
            && self.left == other.left
            && self.right == other.right
    }
}

impl fmt::Debug for PullbackCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PullbackCone").field("apex", &self.apex).finish()
    }
}

impl PullbackCone {
    pub fn apex(&self) -> &Object {
        &self.apex
    }

    pub fn proj1(&self) -> &Morphism {
        &self.proj1
    }

    pub fn proj2(&self) -> &Morphism {
        &self.proj2
    }

    pub fn legs(&self) -> (&Morphism, &Morphism) {
        (&self.left, &self.right)
    }

    /// Apex index of the pair `(a, b)`, if it lies in the pullback.
    pub fn pair_index(&self, a: usize, b: usize) -> Option<usize> {
        self.index.get(&[a, b])
    }

    /// The unique map into the apex induced by a competing cone.
    pub fn factor(&self, h1: &Morphism, h2: &Morphism) -> Result<Morphism> {
        if h1.dom != h2.dom || h1.cod != self.proj1.cod || h2.cod != self.proj2.cod {
            return Err(Error::DomainMismatch("cone legs do not match the cospan".into()));
        }
        let mut map = Vec::with_capacity(h1.dom.len());
        for t in 0..h1.dom.len() {
            let (a, b) = (h1.apply(t), h2.apply(t));
            let k = self.pair_index(a, b).ok_or_else(|| {
                Error::DomainMismatch(format!(
                    "competing cone does not commute at `{}`",
                    h1.dom.elem(t)
                ))
            })?;
            map.push(k);
        }
        Ok(Morphism::from_table(&h1.dom, &self.apex, map))
    }
}

pub fn pullback(f: &Morphism, g: &Morphism) -> Result<PullbackCone> {
    if f.cod != g.cod {
        return Err(Error::DomainMismatch("pullback legs have different codomains".into()));
    }
    let (a, b) = (&f.dom, &g.dom);
    let mut by_image: Vec<Vec<usize>> = vec![Vec::new(); f.cod.len()];
    for j in 0..b.len() {
        by_image[g.apply(j)].push(j);
    }
    let size: usize = (0..a.len()).map(|i| by_image[f.apply(i)].len()).sum();
    check_cap(size)?;
    let mut rows = Vec::with_capacity(size);
    for i in 0..a.len() {
        for &j in &by_image[f.apply(i)] {
            rows.push(vec![i, j]);
        }
    }
    cone_from_rows(f.clone(), g.clone(), rows)
}

fn cone_from_rows(left: Morphism, right: Morphism, rows: Vec<Vec<usize>>) -> Result<PullbackCone> {
    let (a, b) = (left.dom.clone(), right.dom.clone());
    let (apex, index) = tabulate(a.backend(), &[&a, &b], &rows, |r| {
        Elem::pair(a.elem(r[0]).clone(), b.elem(r[1]).clone())
    })?;
    let proj1 = Morphism::from_table(&apex, &a, rows.iter().map(|r| r[0]).collect());
    let proj2 = Morphism::from_table(&apex, &b, rows.iter().map(|r| r[1]).collect());
    Ok(PullbackCone {
        apex,
        proj1,
        proj2,
        left,
        right,
        index: Arc::new(index),
    })
}

/// Binary product, as the pullback over the terminal object.
pub fn product(a: &Object, b: &Object) -> Result<PullbackCone> {
    if a.backend() != b.backend() {
        return Err(Error::BackendMismatch(a.backend(), b.backend()));
    }
    pullback(&Morphism::to_terminal(a), &Morphism::to_terminal(b))
}

/// `f x g : A x B -> A' x B'`.
pub fn product_map(f: &Morphism, g: &Morphism) -> Result<Morphism> {
    let src = product(&f.dom, &g.dom)?;
    let tgt = product(&f.cod, &g.cod)?;
    tgt.factor(
        &compose(f, &src.proj1)?,
        &compose(g, &src.proj2)?,
    )
}

pub fn kernel_pair(q: &Morphism) -> Result<PullbackCone> {
    pullback(q, q)
}

/// Coequalizer of a parallel pair with its quotient classes.
#[derive(Clone)]
pub struct ForkData {
    pair: (Morphism, Morphism),
    quotient: Object,
    q: Morphism,
    classes: Vec<Vec<usize>>,
}

impl fmt::Debug for ForkData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForkData")
            .field("quotient", &self.quotient)
            .field("q", &self.q)
            .finish()
    }
}

impl ForkData {
    pub fn pair(&self) -> (&Morphism, &Morphism) {
        (&self.pair.0, &self.pair.1)
    }

    pub fn quotient(&self) -> &Object {
        &self.quotient
    }

    pub fn q(&self) -> &Morphism {
        &self.q
    }

    /// Members of each class, in quotient order; the first member is the
    /// representative.
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Factors `h` through the quotient map; `h` must be constant on classes.
    pub fn factor(&self, h: &Morphism) -> Result<Morphism> {
        if h.dom != self.q.dom {
            return Err(Error::DomainMismatch("map does not start at the coequalized object".into()));
        }
        let mut map = Vec::with_capacity(self.classes.len());
        for class in &self.classes {
            let v = h.apply(class[0]);
            if let Some(&bad) = class.iter().find(|&&x| h.apply(x) != v) {
                return Err(Error::DomainMismatch(format!(
                    "map separates `{}` and `{}` which are identified",
                    h.dom.elem(class[0]),
                    h.dom.elem(bad)
                )));
            }
            map.push(v);
        }
        Ok(Morphism::from_table(&self.quotient, &h.cod, map))
    }
}

pub fn coequalizer(f: &Morphism, g: &Morphism) -> Result<ForkData> {
    if f.dom != g.dom || f.cod != g.cod {
        return Err(Error::DomainMismatch("coequalizer of a non-parallel pair".into()));
    }
    let b = &f.cod;
    let n = b.len();
    let class_of: Vec<usize>;
    let mut classes: Vec<Vec<usize>> = Vec::new();
    match b.backend() {
        Backend::FinSet => {
            let mut uf = UnionFind::new(n);
            for a in 0..f.dom.len() {
                uf.union(f.apply(a), g.apply(a));
            }
            let mut slot: HashMap<usize, usize> = HashMap::new();
            let mut cls = vec![0; n];
            for (x, c) in cls.iter_mut().enumerate() {
                let root = uf.find(x);
                let k = *slot.entry(root).or_insert_with(|| {
                    classes.push(Vec::new());
                    classes.len() - 1
                });
                classes[k].push(x);
                *c = k;
            }
            class_of = cls;
        }
        Backend::FinAb => {
            let mut in_image = vec![false; n];
            for a in 0..f.dom.len() {
                in_image[b.sub(f.apply(a), g.apply(a))] = true;
            }
            let image: Vec<usize> = (0..n).filter(|&x| in_image[x]).collect();
            let mut cls = vec![usize::MAX; n];
            for x in 0..n {
                if cls[x] != usize::MAX {
                    continue;
                }
                let k = classes.len();
                let mut members: Vec<usize> = image.iter().map(|&s| b.add(x, s)).collect();
                members.sort_unstable();
                members.dedup();
                for &m in &members {
                    cls[m] = k;
                }
                classes.push(members);
            }
            class_of = cls;
        }
    }
    let carrier: Vec<Elem> = classes.iter().map(|c| b.elem(c[0]).clone()).collect();
    let quotient = match b.backend() {
        Backend::FinSet => Object::finset(carrier)?,
        Backend::FinAb => {
            let k = classes.len();
            let mut add = Vec::with_capacity(k * k);
            for x in &classes {
                for y in &classes {
                    add.push(class_of[b.add(x[0], y[0])]);
                }
            }
            let neg = classes.iter().map(|x| class_of[b.neg(x[0])]).collect();
            Object::finab_unchecked(carrier, add, class_of[b.zero()], neg)?
        }
    };
    let q = Morphism::from_table(b, &quotient, class_of);
    Ok(ForkData {
        pair: (f.clone(), g.clone()),
        quotient,
        q,
        classes,
    })
}

/// Kernel of a group homomorphism, as the inclusion of `{a : f(a) = 0}`.
pub fn kernel(f: &Morphism) -> Result<Morphism> {
    if f.dom.backend() != Backend::FinAb {
        return Err(Error::BackendUnsupported {
            op: "kernel",
            backend: f.dom.backend(),
        });
    }
    let zero = f.cod.zero();
    let members: Vec<usize> = (0..f.dom.len()).filter(|&a| f.apply(a) == zero).collect();
    f.dom.subobject(&members)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub mono: bool,
    pub regular_epi: bool,
    pub iso: bool,
    pub split_epi: bool,
}

pub fn classify(f: &Morphism) -> Classification {
    let mono = f.is_injective();
    let regular_epi = f.is_surjective();
    Classification {
        mono,
        regular_epi,
        iso: mono && regular_epi,
        split_epi: regular_epi && find_section(f).is_some(),
    }
}

/// A morphism `s` with `f . s = id`, if one exists.
pub fn find_section(f: &Morphism) -> Option<Morphism> {
    if !f.is_surjective() {
        return None;
    }
    match f.cod.backend() {
        Backend::FinSet => {
            let mut sec = vec![usize::MAX; f.cod.len()];
            for (a, &b) in f.map.iter().enumerate() {
                if sec[b] == usize::MAX {
                    sec[b] = a;
                }
            }
            Some(Morphism::from_table(&f.cod, &f.dom, sec))
        }
        Backend::FinAb => {
            let allowed = |y: usize, x: usize| f.apply(x) == y;
            enumerate_morphisms(&f.cod, &f.dom, &allowed, 1).pop()
        }
    }
}

/// Greedy generating set of a group, in carrier order. For sets, every
/// element.
pub fn generators(obj: &Object) -> Vec<usize> {
    if !obj.is_group() {
        return (0..obj.len()).collect();
    }
    let n = obj.len();
    let mut in_span = vec![false; n];
    in_span[obj.zero()] = true;
    let mut gens = Vec::new();
    for x in 0..n {
        if in_span[x] {
            continue;
        }
        gens.push(x);
        let mut work: Vec<usize> = (0..n).filter(|&y| in_span[y]).collect();
        while let Some(y) = work.pop() {
            for &g in &gens {
                let z = obj.add(y, g);
                if !in_span[z] {
                    in_span[z] = true;
                    work.push(z);
                }
            }
        }
    }
    gens
}

/// Enumerates morphisms `dom -> cod` whose every assignment `a -> b`
/// satisfies `allowed(a, b)`, stopping after `limit` results.
pub fn enumerate_morphisms(
    dom: &Object,
    cod: &Object,
    allowed: &dyn Fn(usize, usize) -> bool,
    limit: usize,
) -> Vec<Morphism> {
    let mut out = Vec::new();
    search_morphisms(dom, cod, allowed, None::<&mut rand_chacha::ChaCha8Rng>, &mut |m| {
        out.push(m);
        out.len() < limit
    });
    out
}

/// A uniformly-ordered random search: candidate images are shuffled at
/// every step and the first complete morphism is returned.
pub fn random_morphism<R: Rng>(
    rng: &mut R,
    dom: &Object,
    cod: &Object,
    allowed: &dyn Fn(usize, usize) -> bool,
) -> Option<Morphism> {
    let mut out = None;
    search_morphisms(dom, cod, allowed, Some(rng), &mut |m| {
        out = Some(m);
        false
    });
    out
}

fn search_morphisms<R: Rng>(
    dom: &Object,
    cod: &Object,
    allowed: &dyn Fn(usize, usize) -> bool,
    mut rng: Option<&mut R>,
    visit: &mut dyn FnMut(Morphism) -> bool,
) {
    if dom.backend() != cod.backend() {
        return;
    }
    match dom.backend() {
        Backend::FinSet => {
            let mut cands: Vec<Vec<usize>> = (0..dom.len())
                .map(|a| (0..cod.len()).filter(|&b| allowed(a, b)).collect())
                .collect();
            if let Some(r) = rng.as_deref_mut() {
                for c in &mut cands {
                    c.shuffle(r);
                }
            }
            let mut table = vec![0; dom.len()];
            set_dfs(dom, cod, &cands, 0, &mut table, visit);
        }
        Backend::FinAb => {
            let gens = generators(dom);
            let mut img = vec![None; dom.len()];
            img[dom.zero()] = Some(cod.zero());
            if !allowed(dom.zero(), cod.zero()) {
                return;
            }
            group_dfs(dom, cod, &gens, 0, img, allowed, &mut rng, visit);
        }
    }
}

fn set_dfs(
    dom: &Object,
    cod: &Object,
    cands: &[Vec<usize>],
    k: usize,
    table: &mut Vec<usize>,
    visit: &mut dyn FnMut(Morphism) -> bool,
) -> bool {
    if k == cands.len() {
        return visit(Morphism::from_table(dom, cod, table.clone()));
    }
    for &b in &cands[k] {
        table[k] = b;
        if !set_dfs(dom, cod, cands, k + 1, table, visit) {
            return false;
        }
    }
    true
}

#[allow(clippy::too_many_arguments)]
fn group_dfs<R: Rng>(
    dom: &Object,
    cod: &Object,
    gens: &[usize],
    k: usize,
    img: Vec<Option<usize>>,
    allowed: &dyn Fn(usize, usize) -> bool,
    rng: &mut Option<&mut R>,
    visit: &mut dyn FnMut(Morphism) -> bool,
) -> bool {
    if k == gens.len() {
        let table: Vec<usize> = img.iter().map(|v| v.expect("generators span")).collect();
        if table.iter().enumerate().all(|(a, &b)| allowed(a, b)) {
            return visit(Morphism::from_table(dom, cod, table));
        }
        return true;
    }
    let g = gens[k];
    let mut cands: Vec<usize> = (0..cod.len()).filter(|&b| allowed(g, b)).collect();
    if let Some(r) = rng.as_deref_mut() {
        cands.shuffle(r);
    }
    for b in cands {
        let mut next = img.clone();
        next[g] = Some(b);
        if close_partial_hom(dom, cod, &gens[..=k], &mut next)
            && !group_dfs(dom, cod, gens, k + 1, next, allowed, rng, visit)
        {
            return false;
        }
    }
    true
}

/// The homomorphism sending each generator `gens[k]` of `dom` to
/// `images[k]`, if one exists.
pub fn extend_hom(dom: &Object, cod: &Object, gens: &[usize], images: &[usize]) -> Option<Morphism> {
    if !dom.is_group() || !cod.is_group() || gens.len() != images.len() {
        return None;
    }
    let mut img = vec![None; dom.len()];
    img[dom.zero()] = Some(cod.zero());
    for (&g, &v) in gens.iter().zip(images) {
        match img[g] {
            Some(w) if w != v => return None,
            _ => img[g] = Some(v),
        }
    }
    if !close_partial_hom(dom, cod, gens, &mut img) {
        return None;
    }
    let table = img.into_iter().collect::<Option<Vec<_>>>()?;
    let m = Morphism::from_table(dom, cod, table);
    m.is_homomorphism().then_some(m)
}

/// Index of the `k`-th unit vector of [`Object::cyclic_sum`]`(orders)`.
pub fn cyclic_sum_unit(orders: &[usize], k: usize) -> usize {
    orders[k + 1..].iter().product()
}

/// Propagates a partial assignment along `x -> x + g` edges; fails on the
/// first inconsistency.
fn close_partial_hom(dom: &Object, cod: &Object, gens: &[usize], img: &mut [Option<usize>]) -> bool {
    let mut work: Vec<usize> = (0..dom.len()).filter(|&x| img[x].is_some()).collect();
    while let Some(x) = work.pop() {
        let ix = img[x].expect("assigned");
        for &g in gens {
            let y = dom.add(x, g);
            let want = cod.add(ix, img[g].expect("generator assigned"));
            match img[y] {
                None => {
                    img[y] = Some(want);
                    work.push(y);
                }
                Some(v) if v != want => return false,
                Some(_) => {}
            }
        }
    }
    true
}

/// Whether the commuting square `f . p1 = g . p2` (with `p1: P -> A`,
/// `p2: P -> B`) is a pullback: the comparison `P -> A x_C B` is bijective.
/// Decided by counting, without building the pullback.
pub fn square_is_pullback(p1: &Morphism, p2: &Morphism, f: &Morphism, g: &Morphism) -> bool {
    if p1.dom != p2.dom || p1.cod != f.dom || p2.cod != g.dom || f.cod != g.cod {
        return false;
    }
    let mut fibre = vec![0usize; f.cod.len()];
    for &y in g.map.iter() {
        fibre[y] += 1;
    }
    let size: usize = f.map.iter().map(|&y| fibre[y]).sum();
    if size != p1.dom.len() {
        return false;
    }
    let mut seen = std::collections::HashSet::with_capacity(size);
    (0..p1.dom.len()).all(|t| {
        let (a, b) = (p1.apply(t), p2.apply(t));
        f.apply(a) == g.apply(b) && seen.insert((a, b))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize) -> Object {
        Object::set_of_size(n).unwrap()
    }

    fn z(n: usize) -> Object {
        Object::cyclic(n).unwrap()
    }

    fn mor(dom: &Object, cod: &Object, map: &[usize]) -> Morphism {
        Morphism::new(dom, cod, map.to_vec()).unwrap()
    }

    #[test]
    fn compose_identity_then_constant() {
        let f = Morphism::identity(&set(2));
        let g = mor(&set(2), &set(1), &[0, 0]);
        assert_eq!(compose(&g, &f).unwrap(), g);
    }

    #[test]
    fn compose_doubling_then_reduction_is_zero() {
        let f = mor(&z(2), &z(4), &[0, 2]);
        let g = mor(&z(4), &z(2), &[0, 1, 0, 1]);
        let gf = compose(&g, &f).unwrap();
        assert_eq!(gf, Morphism::zero(&z(2), &z(2)).unwrap());
    }

    #[test]
    fn compose_table_lookup() {
        let f = mor(&set(1), &set(2), &[1]);
        let g = mor(&set(2), &set(3), &[2, 0]);
        assert_eq!(compose(&g, &f).unwrap().table(), &[0]);
    }

    #[test]
    fn compose_rejects_mismatch() {
        let f = Morphism::identity(&set(2));
        let g = Morphism::identity(&set(3));
        assert!(matches!(compose(&g, &f), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn pullback_of_identities_is_diagonal() {
        let id = Morphism::identity(&set(2));
        let cone = pullback(&id, &id).unwrap();
        let labels: Vec<String> = cone.apex().carrier().iter().map(|e| e.to_string()).collect();
        assert_eq!(labels, ["(0,0)", "(1,1)"]);
    }

    #[test]
    fn pullback_over_a_point_has_four_elements() {
        let f = mor(&set(2), &set(1), &[0, 0]);
        let cone = pullback(&f, &f).unwrap();
        assert_eq!(cone.apex().len(), 4);
        let labels: Vec<String> = cone.apex().carrier().iter().map(|e| e.to_string()).collect();
        assert_eq!(labels, ["(0,0)", "(0,1)", "(1,0)", "(1,1)"]);
    }

    #[test]
    fn pullback_of_reductions_is_subgroup_of_order_eight() {
        let r = mor(&z(4), &z(2), &[0, 1, 0, 1]);
        let cone = pullback(&r, &r).unwrap();
        assert_eq!(cone.apex().len(), 8);
        assert!(cone.apex().axiom_violations().is_empty());
        assert!(cone.proj1().is_homomorphism() && cone.proj2().is_homomorphism());
    }

    #[test]
    fn pullback_respects_cap() {
        let big = set(17);
        let t = Morphism::to_terminal(&big);
        assert!(matches!(pullback(&t, &t), Err(Error::CapExceeded { size: 289, .. })));
    }

    #[test]
    fn coequalizer_of_equal_pair_is_the_codomain() {
        let f = mor(&set(2), &set(3), &[0, 2]);
        let fork = coequalizer(&f, &f).unwrap();
        assert_eq!(fork.quotient(), &set(3));
        assert!(fork.q().is_identity());
    }

    #[test]
    fn coequalizer_of_two_points() {
        let f = mor(&set(1), &set(3), &[0]);
        let g = mor(&set(1), &set(3), &[1]);
        let fork = coequalizer(&f, &g).unwrap();
        assert_eq!(fork.classes(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn coequalizer_in_groups_is_the_cokernel() {
        let f = Morphism::zero(&z(2), &z(4)).unwrap();
        let g = mor(&z(2), &z(4), &[0, 2]);
        let fork = coequalizer(&f, &g).unwrap();
        assert_eq!(fork.classes(), &[vec![0, 2], vec![1, 3]]);
        assert_eq!(fork.quotient().len(), 2);
        assert!(fork.q().is_homomorphism());
    }

    #[test]
    fn kernel_pair_examples() {
        let m = mor(&set(2), &set(3), &[2, 0]);
        let kp = kernel_pair(&m).unwrap();
        assert_eq!(kp.apex().len(), 2);
        assert_eq!(kp.proj1(), kp.proj2());

        let q = mor(&set(3), &set(2), &[0, 0, 1]);
        let kp = kernel_pair(&q).unwrap();
        let labels: Vec<String> = kp.apex().carrier().iter().map(|e| e.to_string()).collect();
        assert_eq!(labels, ["(0,0)", "(0,1)", "(1,0)", "(1,1)", "(2,2)"]);

        let r = mor(&z(4), &z(2), &[0, 1, 0, 1]);
        assert_eq!(kernel_pair(&r).unwrap().apex().len(), 8);
    }

    #[test]
    fn classify_examples() {
        let id = Morphism::identity(&z(4));
        let c = classify(&id);
        assert!(c.mono && c.regular_epi && c.iso && c.split_epi);

        let f = mor(&z(2), &z(4), &[0, 2]);
        let c = classify(&f);
        assert!(c.mono && !c.regular_epi && !c.iso);

        let r = mor(&z(4), &z(2), &[0, 1, 0, 1]);
        let c = classify(&r);
        assert!(c.regular_epi && !c.split_epi && !c.mono);
        assert_eq!(enumerate_morphisms(&z(2), &z(4), &|_, _| true, 10).len(), 2);

        let r = mor(&set(4), &set(2), &[0, 1, 0, 1]);
        assert!(classify(&r).split_epi);
    }

    #[test]
    fn product_examples() {
        let p = product(&set(1), &set(3)).unwrap();
        assert_eq!(p.apex().len(), 3);
        assert!(p.proj2().is_bijective());

        let p = product(&set(2), &set(3)).unwrap();
        let labels: Vec<String> = p.apex().carrier().iter().map(|e| e.to_string()).collect();
        assert_eq!(labels, ["(0,0)", "(0,1)", "(0,2)", "(1,0)", "(1,1)", "(1,2)"]);

        let klein = product(&z(2), &z(2)).unwrap();
        let k = klein.apex();
        assert!(k.axiom_violations().is_empty());
        for a in 0..4 {
            assert_eq!(k.add(a, a), k.zero());
        }
        assert_eq!(k.add(1, 2), 3);
    }

    #[test]
    fn kernel_examples() {
        let id = Morphism::identity(&z(4));
        assert_eq!(kernel(&id).unwrap().dom().len(), 1);

        let r = mor(&z(4), &z(2), &[0, 1, 0, 1]);
        let k = kernel(&r).unwrap();
        let labels: Vec<String> = k.dom().carrier().iter().map(|e| e.to_string()).collect();
        assert_eq!(labels, ["0", "2"]);
        assert!(classify(&k).mono);

        let zero = Morphism::zero(&z(2), &z(2)).unwrap();
        assert_eq!(kernel(&zero).unwrap().dom().len(), 2);

        assert!(matches!(
            kernel(&Morphism::identity(&set(2))),
            Err(Error::BackendUnsupported { .. })
        ));
    }

    #[test]
    fn finab_constructor_rejects_non_groups() {
        let carrier = vec![Elem::int(0), Elem::int(1)];
        let err = Object::finab(carrier, vec![vec![0, 1], vec![1, 1]]).unwrap_err();
        assert!(matches!(err, Error::InvalidObject(_)));
    }

    #[test]
    fn morphism_constructor_rejects_non_homomorphisms() {
        let err = Morphism::new(&z(2), &z(4), vec![0, 1]).unwrap_err();
        assert!(matches!(err, Error::NotAHomomorphism(_)));
    }

    #[test]
    fn cyclic_sum_builds_nested_pairs() {
        let g = Object::cyclic_sum(&[2, 2, 3]).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.elem(1).to_string(), "((0,0),1)");
        assert!(g.axiom_violations().is_empty());
    }
}
