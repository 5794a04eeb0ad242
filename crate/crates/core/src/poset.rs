//! Finite posets, order-preserving maps, upsets/downsets and the Hom spaces
//! between indicator modules.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite partial order. Element ids are sorted once at construction and
/// every set-valued output follows that order.
#[derive(Clone, PartialEq, Eq)]
pub struct FinitePoset {
    elements: Vec<String>,
    index: HashMap<String, usize>,
    /// `up[p]` holds every `q` with `p <= q`.
    up: Vec<FixedBitSet>,
    /// `down[q]` holds every `p` with `p <= q`.
    down: Vec<FixedBitSet>,
    upper_covers: Vec<Vec<usize>>,
    lower_covers: Vec<Vec<usize>>,
}

impl fmt::Debug for FinitePoset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinitePoset({:?}, covers: {:?})", self.elements, self.covers_named())
    }
}

/// Transitive closure of an acyclic relation on named elements.
///
/// `edges` lists pairs `(a, b)` meaning `a <= b`; the result is the smallest
/// reflexive transitive superset. A directed cycle is reported with a witness.
pub fn transitive_closure(elements: &[String], edges: &[(String, String)]) -> Result<FinitePoset> {
    FinitePoset::from_relation(elements.to_vec(), edges)
}

impl FinitePoset {
    pub fn from_relation(mut elements: Vec<String>, edges: &[(String, String)]) -> Result<FinitePoset> {
        elements.sort();
        if let Some(w) = elements.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Invalid(format!("duplicate element id {:?}", w[0])));
        }
        let index: HashMap<String, usize> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let mut pairs = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let ia = *index
                .get(a)
                .ok_or_else(|| Error::Invalid(format!("unknown element {a:?} in relation")))?;
            let ib = *index
                .get(b)
                .ok_or_else(|| Error::Invalid(format!("unknown element {b:?} in relation")))?;
            pairs.push((ia, ib));
        }
        Self::from_index_relation(elements, index, &pairs)
    }

    /// Builds a poset on already-sorted ids from index pairs `(a, b)`, `a <= b`.
    fn from_index_relation(
        elements: Vec<String>,
        index: HashMap<String, usize>,
        pairs: &[(usize, usize)],
    ) -> Result<FinitePoset> {
        let n = elements.len();
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in pairs {
            if a != b {
                succ[a].push(b);
            }
        }
        for s in succ.iter_mut() {
            s.sort_unstable();
            s.dedup();
        }
        let order = match topological_order(&succ) {
            Ok(o) => o,
            Err(cycle) => {
                return Err(Error::Cycle(cycle.into_iter().map(|i| elements[i].clone()).collect()));
            }
        };
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        for &v in order.iter().rev() {
            let mut set = FixedBitSet::with_capacity(n);
            set.insert(v);
            for &w in &succ[v] {
                set.union_with(&up[w]);
            }
            up[v] = set;
        }
        Ok(Self::from_up_sets(elements, index, up))
    }

    fn from_up_sets(elements: Vec<String>, index: HashMap<String, usize>, up: Vec<FixedBitSet>) -> FinitePoset {
        let n = elements.len();
        let mut down = vec![FixedBitSet::with_capacity(n); n];
        for (p, set) in up.iter().enumerate() {
            for q in set.ones() {
                down[q].insert(p);
            }
        }
        let mut upper_covers = vec![Vec::new(); n];
        let mut lower_covers = vec![Vec::new(); n];
        for p in 0..n {
            for q in up[p].ones() {
                if q == p {
                    continue;
                }
                // p < q is a cover iff nothing lies strictly between.
                let mut between = up[p].clone();
                between.intersect_with(&down[q]);
                if between.count_ones(..) == 2 {
                    upper_covers[p].push(q);
                    lower_covers[q].push(p);
                }
            }
        }
        FinitePoset {
            elements,
            index,
            up,
            down,
            upper_covers,
            lower_covers,
        }
    }

    /// Poset on ids `names` (any order) with `leq(i, j)` a partial order on
    /// the given positions. Returns the poset and the position -> element map.
    pub fn from_leq_fn(names: Vec<String>, leq: impl Fn(usize, usize) -> bool) -> Result<(FinitePoset, Vec<usize>)> {
        let n = names.len();
        let mut sorted: Vec<(String, usize)> = names.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
        sorted.sort();
        let mut pos_to_elem = vec![0; n];
        for (e, (_, pos)) in sorted.iter().enumerate() {
            pos_to_elem[*pos] = e;
        }
        let elements: Vec<String> = sorted.iter().map(|(s, _)| s.clone()).collect();
        if let Some(w) = elements.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Invalid(format!("duplicate element id {:?}", w[0])));
        }
        let index = elements.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        for (a, (_, pa)) in sorted.iter().enumerate() {
            for (b, (_, pb)) in sorted.iter().enumerate() {
                if leq(*pa, *pb) {
                    up[a].insert(b);
                }
            }
        }
        for a in 0..n {
            if !up[a].contains(a) {
                return Err(Error::violation("relation is not reflexive", elements[a].clone()));
            }
            for b in up[a].ones() {
                if b != a && up[b].contains(a) {
                    return Err(Error::violation(
                        "relation is not antisymmetric",
                        format!("{} and {}", elements[a], elements[b]),
                    ));
                }
                if !up[b].is_subset(&up[a]) {
                    return Err(Error::violation("relation is not transitive", elements[a].clone()));
                }
            }
        }
        Ok((Self::from_up_sets(elements, index, up), pos_to_elem))
    }

    pub fn antichain(elements: Vec<String>) -> Result<FinitePoset> {
        FinitePoset::from_relation(elements, &[])
    }

    /// Chain `0 < 1 < ... < len-1` with zero-padded ids.
    pub fn chain(len: usize) -> FinitePoset {
        let width = len.saturating_sub(1).to_string().len();
        let names: Vec<String> = (0..len).map(|i| format!("{i:0width$}")).collect();
        let edges: Vec<(String, String)> = names.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        FinitePoset::from_relation(names, &edges).expect("chains are acyclic")
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn name(&self, p: usize) -> &str {
        &self.elements[p]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn leq(&self, p: usize, q: usize) -> bool {
        self.up[p].contains(q)
    }

    pub fn lt(&self, p: usize, q: usize) -> bool {
        p != q && self.leq(p, q)
    }

    pub fn comparable(&self, p: usize, q: usize) -> bool {
        self.leq(p, q) || self.leq(q, p)
    }

    pub fn principal_upset(&self, p: usize) -> &FixedBitSet {
        &self.up[p]
    }

    pub fn principal_downset(&self, p: usize) -> &FixedBitSet {
        &self.down[p]
    }

    pub fn upper_covers(&self, p: usize) -> &[usize] {
        &self.upper_covers[p]
    }

    pub fn lower_covers(&self, p: usize) -> &[usize] {
        &self.lower_covers[p]
    }

    /// The transitive reduction as `(lower, upper)` index pairs, sorted.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.len() {
            for &q in &self.upper_covers[p] {
                out.push((p, q));
            }
        }
        out
    }

    pub fn covers_named(&self) -> Vec<(String, String)> {
        self.covers()
            .into_iter()
            .map(|(a, b)| (self.elements[a].clone(), self.elements[b].clone()))
            .collect()
    }

    /// A linear extension (elements sorted by number of predecessors, ties by id).
    pub fn linear_extension(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.len()).collect();
        v.sort_by_key(|&p| (self.down[p].count_ones(..), p));
        v
    }

    pub fn empty_set(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.len())
    }

    pub fn full_set(&self) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.len());
        s.insert_range(..);
        s
    }

    pub fn is_upset(&self, s: &FixedBitSet) -> bool {
        s.ones().all(|p| self.up[p].is_subset(s))
    }

    pub fn is_downset(&self, s: &FixedBitSet) -> bool {
        s.ones().all(|p| self.down[p].is_subset(s))
    }

    /// Convex: contains everything between two of its members.
    pub fn is_interval(&self, s: &FixedBitSet) -> bool {
        let up = self.up_closure(s);
        let mut hull = self.down_closure(s);
        hull.intersect_with(&up);
        hull == *s
    }

    pub fn up_closure(&self, s: &FixedBitSet) -> FixedBitSet {
        let mut out = self.empty_set();
        for p in s.ones() {
            out.union_with(&self.up[p]);
        }
        out
    }

    pub fn down_closure(&self, s: &FixedBitSet) -> FixedBitSet {
        let mut out = self.empty_set();
        for p in s.ones() {
            out.union_with(&self.down[p]);
        }
        out
    }

    pub fn set_from_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<FixedBitSet> {
        let mut s = self.empty_set();
        for id in ids {
            let id = id.as_ref();
            let p = self
                .index_of(id)
                .ok_or_else(|| Error::Invalid(format!("unknown element {id:?}")))?;
            s.insert(p);
        }
        Ok(s)
    }

    pub fn ids_of(&self, s: &FixedBitSet) -> Vec<String> {
        s.ones().map(|p| self.elements[p].clone()).collect()
    }

    /// Checks the stored relation: reflexive, antisymmetric, transitive, and
    /// regenerated by the covers.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.len();
        for p in 0..n {
            if !self.up[p].contains(p) {
                return Err(Error::violation("not reflexive", self.elements[p].clone()));
            }
            for q in self.up[p].ones() {
                if q != p && self.up[q].contains(p) {
                    return Err(Error::violation(
                        "not antisymmetric",
                        format!("{} {}", self.elements[p], self.elements[q]),
                    ));
                }
                if !self.up[q].is_subset(&self.up[p]) {
                    return Err(Error::violation("not transitive", self.elements[p].clone()));
                }
            }
        }
        let regenerated = FinitePoset::from_index_relation(self.elements.clone(), self.index.clone(), &self.covers())?;
        if regenerated.up != self.up {
            return Err(Error::violation("covers do not regenerate the order", String::new()));
        }
        Ok(())
    }
}

/// Kahn's algorithm; on failure returns a directed cycle.
fn topological_order(succ: &[Vec<usize>]) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &w in s {
            indeg[w] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = stack.pop() {
        order.push(v);
        for &w in succ[v].iter().rev() {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                stack.push(w);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every leftover vertex has a leftover predecessor; walk successors
    // inside the leftover set until a vertex repeats.
    let leftover: Vec<bool> = (0..n).map(|v| indeg[v] > 0).collect();
    let start = (0..n).find(|&v| leftover[v]).expect("a cycle exists");
    let mut seen = vec![usize::MAX; n];
    let mut path = Vec::new();
    let mut v = start;
    loop {
        if seen[v] != usize::MAX {
            let mut cycle = path[seen[v]..].to_vec();
            cycle.push(v);
            return Err(cycle);
        }
        seen[v] = path.len();
        path.push(v);
        v = *succ[v].iter().find(|&&w| leftover[w]).expect("leftover vertex has leftover successor");
    }
}

/// An order-preserving map between finite posets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetMorphism {
    source: Arc<FinitePoset>,
    target: Arc<FinitePoset>,
    map: Vec<usize>,
}

impl PosetMorphism {
    pub fn new(source: Arc<FinitePoset>, target: Arc<FinitePoset>, map: Vec<usize>) -> Result<PosetMorphism> {
        if map.len() != source.len() {
            return Err(Error::Invalid(format!(
                "morphism has {} images for {} elements",
                map.len(),
                source.len()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&t| t >= target.len()) {
            return Err(Error::Invalid(format!("image index {bad} out of range")));
        }
        for p in 0..source.len() {
            for q in source.principal_upset(p).ones() {
                if !target.leq(map[p], map[q]) {
                    return Err(Error::violation(
                        "map is not order-preserving",
                        format!(
                            "{} <= {} but {} !<= {}",
                            source.name(p),
                            source.name(q),
                            target.name(map[p]),
                            target.name(map[q])
                        ),
                    ));
                }
            }
        }
        Ok(PosetMorphism { source, target, map })
    }

    pub fn identity(p: Arc<FinitePoset>) -> PosetMorphism {
        let map = (0..p.len()).collect();
        PosetMorphism {
            source: p.clone(),
            target: p,
            map,
        }
    }

    pub fn source(&self) -> &Arc<FinitePoset> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FinitePoset> {
        &self.target
    }

    pub fn apply(&self, p: usize) -> usize {
        self.map[p]
    }

    pub fn images(&self) -> &[usize] {
        &self.map
    }

    /// Preimage of a subset of the target.
    pub fn preimage(&self, s: &FixedBitSet) -> FixedBitSet {
        let mut out = self.source.empty_set();
        for (p, &t) in self.map.iter().enumerate() {
            if s.contains(t) {
                out.insert(p);
            }
        }
        out
    }

    /// Fibers over each target element, in target order.
    pub fn fibers(&self) -> Vec<FixedBitSet> {
        let mut out = vec![self.source.empty_set(); self.target.len()];
        for (p, &t) in self.map.iter().enumerate() {
            out[t].insert(p);
        }
        out
    }

    pub fn compose(&self, then: &PosetMorphism) -> Result<PosetMorphism> {
        if !Arc::ptr_eq(&self.target, &then.source) && *self.target != *then.source {
            return Err(Error::Mismatch("composition of morphisms".into()));
        }
        Ok(PosetMorphism {
            source: self.source.clone(),
            target: then.target.clone(),
            map: self.map.iter().map(|&t| then.map[t]).collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Upset,
    Downset,
    Interval,
}

/// A subset of a finite poset closed in the sense of its kind.
#[derive(Clone, PartialEq, Eq)]
pub struct PosetRegion {
    poset: Arc<FinitePoset>,
    members: FixedBitSet,
    kind: RegionKind,
}

impl fmt::Debug for PosetRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.kind, self.poset.ids_of(&self.members))
    }
}

impl PosetRegion {
    pub fn new(poset: Arc<FinitePoset>, members: FixedBitSet, kind: RegionKind) -> Result<PosetRegion> {
        let ok = match kind {
            RegionKind::Upset => poset.is_upset(&members),
            RegionKind::Downset => poset.is_downset(&members),
            RegionKind::Interval => poset.is_interval(&members),
        };
        if !ok {
            return Err(Error::violation(
                format!("members do not form an {kind:?}").to_lowercase(),
                format!("{:?}", poset.ids_of(&members)),
            ));
        }
        Ok(PosetRegion { poset, members, kind })
    }

    pub fn from_ids<S: AsRef<str>>(poset: Arc<FinitePoset>, ids: &[S], kind: RegionKind) -> Result<PosetRegion> {
        let members = poset.set_from_ids(ids)?;
        PosetRegion::new(poset, members, kind)
    }

    pub fn poset(&self) -> &Arc<FinitePoset> {
        &self.poset
    }

    pub fn members(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn contains(&self, p: usize) -> bool {
        self.members.contains(p)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_clear()
    }

    pub fn len(&self) -> usize {
        self.members.count_ones(..)
    }

    pub fn ids(&self) -> Vec<String> {
        self.poset.ids_of(&self.members)
    }

    /// The complement: a downset for an upset and vice versa.
    pub fn complement(&self) -> Result<PosetRegion> {
        let kind = match self.kind {
            RegionKind::Upset => RegionKind::Downset,
            RegionKind::Downset => RegionKind::Upset,
            RegionKind::Interval => {
                return Err(Error::Invalid("complement of an interval is not a region".into()));
            }
        };
        let mut m = self.poset.full_set();
        m.difference_with(&self.members);
        Ok(PosetRegion {
            poset: self.poset.clone(),
            members: m,
            kind,
        })
    }

    pub fn same_carrier(&self, other: &PosetRegion) -> bool {
        Arc::ptr_eq(&self.poset, &other.poset) || *self.poset == *other.poset
    }

    /// Intersection of an upset and a downset (or two intervals) as an interval.
    pub fn intersect(&self, other: &PosetRegion) -> Result<PosetRegion> {
        if !self.same_carrier(other) {
            return Err(Error::Mismatch("regions live on different posets".into()));
        }
        let mut m = self.members.clone();
        m.intersect_with(&other.members);
        let kind = if self.kind == other.kind {
            self.kind
        } else {
            RegionKind::Interval
        };
        PosetRegion::new(self.poset.clone(), m, kind)
    }
}

/// Smallest upset containing `s`.
pub fn upset_generated(poset: &Arc<FinitePoset>, s: &FixedBitSet) -> PosetRegion {
    PosetRegion {
        poset: poset.clone(),
        members: poset.up_closure(s),
        kind: RegionKind::Upset,
    }
}

/// Smallest downset containing `s`.
pub fn downset_cogenerated(poset: &Arc<FinitePoset>, s: &FixedBitSet) -> PosetRegion {
    PosetRegion {
        poset: poset.clone(),
        members: poset.down_closure(s),
        kind: RegionKind::Downset,
    }
}

/// Connected components of a subset under zig-zag comparability inside it,
/// ordered by least element.
pub fn components(poset: &FinitePoset, s: &FixedBitSet) -> Vec<FixedBitSet> {
    let n = poset.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for p in s.ones() {
        for &q in poset.upper_covers(p) {
            if s.contains(q) {
                let (a, b) = (find(&mut parent, p), find(&mut parent, q));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    // Covers alone miss p < q when the chain between them leaves s.
    for p in s.ones() {
        for q in poset.principal_upset(p).ones() {
            if q != p && s.contains(q) {
                let (a, b) = (find(&mut parent, p), find(&mut parent, q));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut comps: Vec<(usize, FixedBitSet)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for p in s.ones() {
        let r = find(&mut parent, p);
        let i = *slot.entry(r).or_insert_with(|| {
            comps.push((p, FixedBitSet::with_capacity(n)));
            comps.len() - 1
        });
        comps[i].1.insert(p);
    }
    comps.sort_by_key(|(least, _)| *least);
    comps.into_iter().map(|(_, c)| c).collect()
}

/// `pi_0` of a region; each component keeps the region's kind.
pub fn pi0(region: &PosetRegion) -> Vec<PosetRegion> {
    components(&region.poset, &region.members)
        .into_iter()
        .map(|members| PosetRegion {
            poset: region.poset.clone(),
            members,
            kind: region.kind,
        })
        .collect()
}

/// A basis element of a Hom space between indicator modules: the map that
/// is the identity on `support` and zero elsewhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorHom {
    pub support: FixedBitSet,
}

/// Basis of `Hom(k[U], k[D])`: one map per component of `U ∩ D`.
pub fn hom_indicator(u: &PosetRegion, d: &PosetRegion) -> Result<Vec<IndicatorHom>> {
    if u.kind != RegionKind::Upset || d.kind != RegionKind::Downset {
        return Err(Error::Invalid("hom_indicator expects an upset and a downset".into()));
    }
    if !u.same_carrier(d) {
        return Err(Error::Mismatch("upset and downset live on different posets".into()));
    }
    let mut inter = u.members.clone();
    inter.intersect_with(&d.members);
    Ok(components(&u.poset, &inter)
        .into_iter()
        .map(|support| IndicatorHom { support })
        .collect())
}

/// Basis of `Hom(k[U'], k[U])`: components of `U'` contained in `U`.
pub fn hom_upset_upset(source: &PosetRegion, target: &PosetRegion) -> Result<Vec<IndicatorHom>> {
    if source.kind != RegionKind::Upset || target.kind != RegionKind::Upset {
        return Err(Error::Invalid("hom_upset_upset expects two upsets".into()));
    }
    if !source.same_carrier(target) {
        return Err(Error::Mismatch("upsets live on different posets".into()));
    }
    Ok(components(&source.poset, &source.members)
        .into_iter()
        .filter(|c| c.is_subset(&target.members))
        .map(|support| IndicatorHom { support })
        .collect())
}

/// Basis of `Hom(k[D], k[D'])`: components of `D'` contained in `D`.
pub fn hom_downset_downset(source: &PosetRegion, target: &PosetRegion) -> Result<Vec<IndicatorHom>> {
    if source.kind != RegionKind::Downset || target.kind != RegionKind::Downset {
        return Err(Error::Invalid("hom_downset_downset expects two downsets".into()));
    }
    if !source.same_carrier(target) {
        return Err(Error::Mismatch("downsets live on different posets".into()));
    }
    Ok(components(&target.poset, &target.members)
        .into_iter()
        .filter(|c| c.is_subset(&source.members))
        .map(|support| IndicatorHom { support })
        .collect())
}

/// An order embedding `P -> Z^n` with nonnegative coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridEmbedding {
    pub dim: usize,
    pub coords: Vec<Vec<i64>>,
}

impl GridEmbedding {
    pub fn is_order_embedding(&self, poset: &FinitePoset) -> bool {
        let n = poset.len();
        (0..n).all(|p| {
            (0..n).all(|q| poset.leq(p, q) == self.coords[p].iter().zip(&self.coords[q]).all(|(a, b)| a <= b))
        })
    }

    /// Largest coordinate value along each axis.
    pub fn extent(&self) -> Vec<i64> {
        (0..self.dim)
            .map(|i| self.coords.iter().map(|c| c[i]).max().unwrap_or(0))
            .collect()
    }
}

/// Embeds `P` into `Z^n` by `x(q)_p = [p <= q]`, greedily deletes
/// coordinates (in element order) whose removal keeps the embedding, then
/// merges coordinates whose upsets are nested by summing them. Both passes
/// are heuristics; the dimension is not minimized.
pub fn embed_into_grid(poset: &FinitePoset) -> GridEmbedding {
    let n = poset.len();
    let value = |coord: usize, q: usize| -> bool { poset.leq(coord, q) };
    let mut kept: Vec<usize> = (0..n).collect();
    // violations[a][b] = number of kept coordinates c with x(a)_c > x(b)_c.
    let mut violations = vec![vec![0u32; n]; n];
    for a in 0..n {
        for b in 0..n {
            violations[a][b] = (0..n).filter(|&c| value(c, a) && !value(c, b)).count() as u32;
        }
    }
    let mut c = 0;
    while c < kept.len() {
        let coord = kept[c];
        let removable = (0..n).all(|a| {
            (0..n).all(|b| {
                if poset.leq(a, b) {
                    return true;
                }
                let own = u32::from(value(coord, a) && !value(coord, b));
                violations[a][b] - own > 0
            })
        });
        if removable {
            for a in 0..n {
                for b in 0..n {
                    if value(coord, a) && !value(coord, b) {
                        violations[a][b] -= 1;
                    }
                }
            }
            kept.remove(c);
        } else {
            c += 1;
        }
    }
    // Summing indicator coordinates of a chain of upsets U1 ⊇ U2 ⊇ ... is
    // exact: a strict drop in one indicator forces a strict drop in the sum.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &c in &kept {
        let up_c = poset.principal_upset(c);
        let slot = groups.iter().position(|g| {
            g.iter().all(|&d| {
                let up_d = poset.principal_upset(d);
                up_c.is_subset(up_d) || up_d.is_subset(up_c)
            })
        });
        match slot {
            Some(i) => groups[i].push(c),
            None => groups.push(vec![c]),
        }
    }
    let coords = (0..n)
        .map(|q| {
            groups
                .iter()
                .map(|g| g.iter().filter(|&&c| value(c, q)).count() as i64)
                .collect()
        })
        .collect();
    GridEmbedding {
        dim: groups.len(),
        coords,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn edges(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn closure_adds_transitive_pairs() {
        let p = transitive_closure(&names(&["a", "b", "c"]), &edges(&[("a", "b"), ("b", "c")])).unwrap();
        assert!(p.leq(0, 2));
        assert_eq!(p.covers(), vec![(0, 1), (1, 2)]);
        p.check_invariants().unwrap();
    }

    #[test]
    fn empty_relation_is_antichain() {
        let p = transitive_closure(&names(&["x", "y", "z"]), &[]).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(p.leq(a, b), a == b);
            }
        }
    }

    #[test]
    fn cycle_is_reported_with_witness() {
        let err = transitive_closure(&names(&["a", "b", "c"]), &edges(&[("a", "b"), ("b", "c"), ("c", "a")]))
            .unwrap_err();
        match err {
            Error::Cycle(w) => {
                assert_eq!(w.first(), w.last());
                assert_eq!(w.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ids_are_sorted() {
        let p = transitive_closure(&names(&["b", "a"]), &edges(&[("b", "a")])).unwrap();
        assert_eq!(p.elements(), &["a".to_string(), "b".to_string()]);
        assert!(p.leq(1, 0));
    }

    #[test]
    fn generated_upsets() {
        let p = Arc::new(FinitePoset::chain(4));
        let mut s = p.empty_set();
        s.insert(3);
        assert_eq!(upset_generated(&p, &s).len(), 1);
        let mut s = p.empty_set();
        s.insert(0);
        assert_eq!(upset_generated(&p, &s).len(), 4);
        assert!(upset_generated(&p, &p.empty_set()).is_empty());
    }

    #[test]
    fn complement_swaps_kind() {
        let p = Arc::new(FinitePoset::chain(3));
        let u = PosetRegion::from_ids(p.clone(), &["1", "2"], RegionKind::Upset).unwrap();
        let d = u.complement().unwrap();
        assert_eq!(d.kind(), RegionKind::Downset);
        assert_eq!(d.ids(), vec!["0".to_string()]);
        assert!(PosetRegion::from_ids(p, &["0"], RegionKind::Upset).is_err());
    }

    #[test]
    fn embeddings_of_small_posets() {
        let chain = FinitePoset::chain(3);
        let e = embed_into_grid(&chain);
        assert_eq!(e.dim, 1);
        assert_eq!(e.coords, vec![vec![0], vec![1], vec![2]]);
        assert!(e.is_order_embedding(&chain));
        let anti = FinitePoset::antichain(names(&["a", "b"])).unwrap();
        let e = embed_into_grid(&anti);
        assert_eq!(e.dim, 2);
        assert_eq!(e.coords, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn morphism_must_preserve_order() {
        let c = Arc::new(FinitePoset::chain(2));
        assert!(PosetMorphism::new(c.clone(), c.clone(), vec![1, 0]).is_err());
        assert!(PosetMorphism::new(c.clone(), c.clone(), vec![1, 1]).is_ok());
    }
}
