//! Constant subdivisions, uptight regions and posets, and the finite
//! encodings they produce.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::module::{verify_isomorphism, EncodedModule, ModuleMorphism, Morphism, Representation};
use crate::poset::{components, FinitePoset, PosetMorphism};

/// A partition of the carrier certified constant for a module: each element
/// carries an isomorphism ("gauge") to its region's space, under which every
/// comparable pair between two regions induces the same transition.
#[derive(Clone, Debug)]
pub struct ConstantSubdivision {
    module: EncodedModule,
    regions: Vec<FixedBitSet>,
    region_of: Vec<usize>,
    gauges: Vec<Matrix>,
    transitions: HashMap<(usize, usize), Matrix>,
}

impl ConstantSubdivision {
    pub fn module(&self) -> &EncodedModule {
        &self.module
    }

    pub fn regions(&self) -> &[FixedBitSet] {
        &self.regions
    }

    pub fn region_of(&self, p: usize) -> usize {
        self.region_of[p]
    }

    pub fn region_dim(&self, r: usize) -> usize {
        let p = self.regions[r].ones().next().expect("regions are nonempty");
        self.module.dims()[p]
    }

    /// The isomorphism `M_p -> M_I` for the region `I` of `p`.
    pub fn gauge(&self, p: usize) -> &Matrix {
        &self.gauges[p]
    }

    /// The transition `M_I -> M_J` for comparable regions.
    pub fn transition(&self, from: usize, to: usize) -> Option<&Matrix> {
        self.transitions.get(&(from, to))
    }
}

fn check_partition(poset: &FinitePoset, regions: &[FixedBitSet]) -> Result<Vec<usize>> {
    let mut region_of = vec![usize::MAX; poset.len()];
    for (r, set) in regions.iter().enumerate() {
        if set.is_clear() {
            return Err(Error::Invalid(format!("region {r} is empty")));
        }
        for p in set.ones() {
            if p >= poset.len() {
                return Err(Error::Invalid(format!("region {r} has an out-of-range element")));
            }
            if region_of[p] != usize::MAX {
                return Err(Error::Invalid(format!("element {} lies in two regions", poset.name(p))));
            }
            region_of[p] = r;
        }
    }
    if let Some(p) = region_of.iter().position(|&r| r == usize::MAX) {
        return Err(Error::Invalid(format!("element {} lies in no region", poset.name(p))));
    }
    Ok(region_of)
}

/// Certifies a partition as a constant subdivision or returns a witness.
///
/// Gauges are propagated through comparable pairs inside each connected
/// piece of a region, then between pieces of a disconnected region through
/// invertible transitions to an already gauged neighbor. Pieces that no
/// such link reaches keep an identity gauge at their least element, so a
/// subdivision that is constant only under some other gauge choice can be
/// rejected.
pub fn verify_constant_subdivision(m: &EncodedModule, regions: &[FixedBitSet]) -> Result<ConstantSubdivision> {
    let poset = m.poset().clone();
    let f = m.field();
    let region_of = check_partition(&poset, regions)?;
    for (r, set) in regions.iter().enumerate() {
        let mut it = set.ones();
        let first = it.next().expect("nonempty");
        if let Some(p) = it.find(|&p| m.dims()[p] != m.dims()[first]) {
            return Err(Error::violation(
                format!("region {r} has fibers of different dimension"),
                format!("{} has {}, {} has {}", poset.name(first), m.dims()[first], poset.name(p), m.dims()[p]),
            ));
        }
    }
    let pieces: Vec<Vec<FixedBitSet>> = regions.iter().map(|s| components(&poset, s)).collect();
    let mut gauges: Vec<Option<Matrix>> = vec![None; poset.len()];
    let mut inverses: Vec<Option<Matrix>> = vec![None; poset.len()];

    let spread = |start: usize,
                  g: Matrix,
                  piece: &FixedBitSet,
                  gauges: &mut Vec<Option<Matrix>>,
                  inverses: &mut Vec<Option<Matrix>>|
     -> Result<()> {
        let inv = g
            .inverse()
            .ok_or_else(|| Error::violation("gauge is not invertible", poset.name(start).to_string()))?;
        gauges[start] = Some(g);
        inverses[start] = Some(inv);
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for b in piece.ones() {
                if gauges[b].is_some() || !poset.comparable(a, b) {
                    continue;
                }
                let ga = gauges[a].clone().expect("gauged");
                // φ_b M_ab = φ_a for a <= b, and φ_a M_ba = φ_b for b <= a.
                let (gb, gb_inv) = if poset.leq(a, b) {
                    let mab = m.map(a, b).expect("comparable");
                    let inv = mab.inverse().ok_or_else(|| {
                        Error::violation(
                            "structure map inside a region is not an isomorphism",
                            format!("{} -> {}", poset.name(a), poset.name(b)),
                        )
                    })?;
                    (ga.mul(&inv), mab.mul(inverses[a].as_ref().expect("gauged")))
                } else {
                    let mba = m.map(b, a).expect("comparable");
                    if !mba.is_invertible() {
                        return Err(Error::violation(
                            "structure map inside a region is not an isomorphism",
                            format!("{} -> {}", poset.name(b), poset.name(a)),
                        ));
                    }
                    let gb = ga.mul(mba);
                    let inv = gb.inverse().expect("product of isomorphisms");
                    (gb, inv)
                };
                gauges[b] = Some(gb);
                inverses[b] = Some(gb_inv);
                queue.push_back(b);
            }
        }
        Ok(())
    };

    // First pieces of each region start from the identity.
    for piece_list in &pieces {
        let piece = &piece_list[0];
        let root = piece.ones().next().expect("nonempty");
        spread(root, Matrix::identity(f, m.dims()[root]), piece, &mut gauges, &mut inverses)?;
    }
    // Link remaining pieces through invertible transitions.
    let mut progress = true;
    while progress {
        progress = false;
        for (r, piece_list) in pieces.iter().enumerate() {
            for piece in piece_list.iter().skip(1) {
                let x_any = piece.ones().next().expect("nonempty");
                if gauges[x_any].is_some() {
                    continue;
                }
                if let Some((x, g)) = link_gauge(m, r, piece, &region_of, &gauges, &inverses) {
                    spread(x, g, piece, &mut gauges, &mut inverses)?;
                    progress = true;
                }
            }
        }
    }
    for piece_list in &pieces {
        for piece in piece_list.iter().skip(1) {
            let root = piece.ones().next().expect("nonempty");
            if gauges[root].is_none() {
                spread(root, Matrix::identity(f, m.dims()[root]), piece, &mut gauges, &mut inverses)?;
            }
        }
    }
    let gauges: Vec<Matrix> = gauges.into_iter().map(|g| g.expect("every element gauged")).collect();
    let inverses: Vec<Matrix> = inverses.into_iter().map(|g| g.expect("every element gauged")).collect();

    let mut transitions: HashMap<(usize, usize), Matrix> = HashMap::new();
    let mut witnesses: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for a in 0..poset.len() {
        for b in poset.principal_upset(a).ones() {
            let (i, j) = (region_of[a], region_of[b]);
            let t = gauges[b].mul(&m.map(a, b).expect("comparable").mul(&inverses[a]));
            if i == j && t != Matrix::identity(f, t.rows()) {
                return Err(Error::violation(
                    "monodromy inside a region",
                    format!("{} -> {}", poset.name(a), poset.name(b)),
                ));
            }
            match transitions.get(&(i, j)) {
                None => {
                    transitions.insert((i, j), t);
                    witnesses.insert((i, j), (a, b));
                }
                Some(t0) if *t0 != t => {
                    let (a0, b0) = witnesses[&(i, j)];
                    return Err(Error::violation(
                        format!("monodromy between regions {i} and {j}"),
                        format!(
                            "{} -> {} and {} -> {} induce different maps",
                            poset.name(a0),
                            poset.name(b0),
                            poset.name(a),
                            poset.name(b)
                        ),
                    ));
                }
                Some(_) => {}
            }
        }
    }
    Ok(ConstantSubdivision {
        module: m.clone(),
        regions: regions.to_vec(),
        region_of,
        gauges,
        transitions,
    })
}

/// A gauge for some element of an ungauged piece of region `r`, forced by a
/// gauged pair `(x0, y0)` of the same regions whose transition is invertible.
fn link_gauge(
    m: &EncodedModule,
    r: usize,
    piece: &FixedBitSet,
    region_of: &[usize],
    gauges: &[Option<Matrix>],
    inverses: &[Option<Matrix>],
) -> Option<(usize, Matrix)> {
    let poset = m.poset();
    for x in piece.ones() {
        for y in 0..poset.len() {
            let j = region_of[y];
            if j == r || gauges[y].is_none() || !poset.comparable(x, y) {
                continue;
            }
            let upward = poset.leq(x, y);
            for x0 in 0..poset.len() {
                if region_of[x0] != r || gauges[x0].is_none() {
                    continue;
                }
                for y0 in 0..poset.len() {
                    if region_of[y0] != j || gauges[y0].is_none() {
                        continue;
                    }
                    if upward && poset.leq(x0, y0) {
                        // φ_y M_xy φ_x^{-1} = T, so φ_x = T^{-1} φ_y M_xy.
                        let t = gauges[y0].as_ref()?.mul(&m.map(x0, y0)?.mul(inverses[x0].as_ref()?));
                        let t_inv = t.inverse()?;
                        let g = t_inv.mul(&gauges[y].as_ref()?.mul(m.map(x, y)?));
                        if g.is_invertible() {
                            return Some((x, g));
                        }
                    }
                    if !upward && poset.leq(y0, x0) {
                        // φ_x M_yx φ_y^{-1} = T, so φ_x = T φ_y M_yx^{-1}.
                        let t = gauges[x0].as_ref()?.mul(&m.map(y0, x0)?.mul(inverses[y0].as_ref()?));
                        let myx_inv = m.map(y, x)?.inverse()?;
                        let g = t.mul(&gauges[y].as_ref()?.mul(&myx_inv));
                        if g.is_invertible() {
                            return Some((x, g));
                        }
                    }
                }
            }
        }
    }
    None
}

/// The distinguished upsets of a subdivision: for each region `I`, the
/// upset it generates and the complement of the downset it cogenerates.
pub fn constant_upsets(s: &ConstantSubdivision) -> Vec<FixedBitSet> {
    let poset = s.module.poset();
    let mut out = Vec::with_capacity(2 * s.regions.len());
    for r in &s.regions {
        out.push(poset.up_closure(r));
        let mut co = poset.full_set();
        co.difference_with(&poset.down_closure(r));
        out.push(co);
    }
    out
}

/// Fibers of `a ↦ {U ∈ Υ : a ∈ U}`, numbered by least element.
pub fn uptight_regions(poset: &FinitePoset, upsets: &[FixedBitSet]) -> Vec<FixedBitSet> {
    let mut by_signature: HashMap<FixedBitSet, usize> = HashMap::new();
    let mut blocks: Vec<FixedBitSet> = Vec::new();
    for a in 0..poset.len() {
        let mut sig = FixedBitSet::with_capacity(upsets.len());
        for (k, u) in upsets.iter().enumerate() {
            if u.contains(a) {
                sig.insert(k);
            }
        }
        let id = *by_signature.entry(sig).or_insert_with(|| {
            blocks.push(FixedBitSet::with_capacity(poset.len()));
            blocks.len() - 1
        });
        blocks[id].insert(a);
    }
    blocks
}

/// Blocks of a partition ordered by the transitive closure of
/// `A ⪯ B iff some a ∈ A lies below some b ∈ B`.
#[derive(Clone, Debug)]
pub struct UptightPoset {
    pub poset: Arc<FinitePoset>,
    pub blocks: Vec<FixedBitSet>,
    /// Element of the block poset for each block (ids sort like block order).
    pub block_element: Vec<usize>,
    /// Pairs `(A, B)`, `A != B`, related before closing up.
    pub witness_relation: Vec<(usize, usize)>,
    /// Block of each carrier element.
    pub block_of: Vec<usize>,
}

impl UptightPoset {
    /// Whether block `a` lies below block `b` after closure.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.poset.leq(self.block_element[a], self.block_element[b])
    }

    pub fn witnessed(&self, a: usize, b: usize) -> bool {
        self.witness_relation.contains(&(a, b))
    }
}

pub fn block_name(i: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len();
    format!("R{i:0width$}")
}

pub fn uptight_poset(carrier: &FinitePoset, blocks: &[FixedBitSet]) -> Result<UptightPoset> {
    let block_of = check_partition(carrier, blocks)?;
    let k = blocks.len();
    let mut rel = FixedBitSet::with_capacity(k * k);
    for a in 0..carrier.len() {
        for b in carrier.principal_upset(a).ones() {
            let (x, y) = (block_of[a], block_of[b]);
            if x != y {
                rel.insert(x * k + y);
            }
        }
    }
    let witness_relation: Vec<(usize, usize)> = rel.ones().map(|e| (e / k, e % k)).collect();
    let names: Vec<String> = (0..k).map(|i| block_name(i, k)).collect();
    let edges: Vec<(String, String)> = witness_relation
        .iter()
        .map(|&(a, b)| (names[a].clone(), names[b].clone()))
        .collect();
    let poset = FinitePoset::from_relation(names.clone(), &edges).map_err(|e| match e {
        Error::Cycle(w) => Error::Internal(format!("uptight relation has a cycle: {}", w.join(" -> "))),
        other => other,
    })?;
    let block_element = names.iter().map(|n| poset.index_of(n).expect("named")).collect();
    Ok(UptightPoset {
        poset: Arc::new(poset),
        blocks: blocks.to_vec(),
        block_element,
        witness_relation,
        block_of,
    })
}

/// A finite encoding `π: Q -> P` with `H` on `P`, and the isomorphism
/// `M -> π*H` that certifies it.
#[derive(Clone, Debug)]
pub struct Encoding {
    /// Present when the encoding came from the uptight construction.
    pub uptight: Option<UptightPoset>,
    pub pi: PosetMorphism,
    pub h: EncodedModule,
    pub witness: ModuleMorphism,
}

impl Encoding {
    /// Checks that `comps` is an isomorphism `M -> π*H`.
    pub fn new(m: &EncodedModule, pi: PosetMorphism, h: EncodedModule, comps: Vec<Matrix>) -> Result<Encoding> {
        if pi.source() != m.poset() || pi.target() != h.poset() {
            return Err(Error::Mismatch("encoding map does not run between the module carriers".into()));
        }
        let witness = Morphism::new(m.clone(), h.pullback(&pi)?, comps)?;
        if let Some(p) = witness.comps().iter().position(|c| !c.is_invertible()) {
            return Err(Error::violation("encoding witness is not invertible", m.poset().name(p).to_string()));
        }
        Ok(Encoding {
            uptight: None,
            pi,
            h,
            witness,
        })
    }

    pub fn module(&self) -> &EncodedModule {
        self.witness.source()
    }
}

/// The uptight encoding of a certified subdivision. On each uptight block
/// `A` the space is that of the region `I` of the block's least element;
/// `M_a` is identified with it through `M_{i -> a}` for the least `i ∈ I`
/// below `a`.
pub fn uptight_encoding(s: &ConstantSubdivision) -> Result<Encoding> {
    let m = &s.module;
    let carrier = m.poset().clone();
    let f = m.field();
    let upsets = constant_upsets(s);
    let blocks = uptight_regions(&carrier, &upsets);
    let up = uptight_poset(&carrier, &blocks)?;
    // psi[a]: M_a -> H_{block of a}.
    let mut psi: Vec<Option<Matrix>> = vec![None; carrier.len()];
    for block in &blocks {
        let rep = block.ones().next().expect("nonempty");
        let region = s.region_of[rep];
        for a in block.ones() {
            let i = s.regions[region]
                .ones()
                .find(|&i| carrier.leq(i, a))
                .ok_or_else(|| {
                    Error::Internal(format!("{} is not above the region of its block", carrier.name(a)))
                })?;
            let from_region = m.map(i, a).expect("comparable").mul(&s.gauges[i].inverse().expect("gauge"));
            let back = from_region.inverse().ok_or_else(|| {
                Error::Internal(format!("block space does not match {}", carrier.name(a)))
            })?;
            psi[a] = Some(back);
        }
    }
    let psi: Vec<Matrix> = psi.into_iter().map(|x| x.expect("every element covered")).collect();
    let p = up.poset.clone();
    let mut dims = vec![0; p.len()];
    let mut reps = vec![0; p.len()];
    for (b, block) in blocks.iter().enumerate() {
        let rep = block.ones().next().expect("nonempty");
        dims[up.block_element[b]] = m.dims()[rep];
        reps[up.block_element[b]] = b;
    }
    let mut cover_maps = Vec::new();
    for &(x, y) in &p.covers() {
        let (bx, by) = (reps[x], reps[y]);
        let (a, b) = witness_pair(&carrier, &blocks[bx], &blocks[by])
            .ok_or_else(|| Error::Internal("cover of the block poset has no witness pair".into()))?;
        let inv_a = psi[a].inverse().expect("invertible");
        cover_maps.push(psi[b].mul(&m.map(a, b).expect("comparable").mul(&inv_a)));
    }
    let h = EncodedModule::new(p.clone(), f, dims, cover_maps)?;
    let map: Vec<usize> = up.block_of.iter().map(|&b| up.block_element[b]).collect();
    let pi = PosetMorphism::new(carrier.clone(), p, map)?;
    let pulled = h.pullback(&pi)?;
    let witness = Morphism::new(m.clone(), pulled, psi)?;
    if !verify_isomorphism(&witness) {
        return Err(Error::Internal("encoding witness is not an isomorphism".into()));
    }
    Ok(Encoding {
        uptight: Some(up),
        pi,
        h,
        witness,
    })
}

fn witness_pair(poset: &FinitePoset, a: &FixedBitSet, b: &FixedBitSet) -> Option<(usize, usize)> {
    for x in a.ones() {
        for y in b.ones() {
            if poset.leq(x, y) {
                return Some((x, y));
            }
        }
    }
    None
}

/// Partition into singletons.
pub fn singleton_partition(poset: &FinitePoset) -> Vec<FixedBitSet> {
    (0..poset.len())
        .map(|p| {
            let mut s = poset.empty_set();
            s.insert(p);
            s
        })
        .collect()
}

/// Partition by the isomorphism type of the fiber (its dimension).
pub fn isotypic_partition(m: &EncodedModule) -> Vec<FixedBitSet> {
    let poset = m.poset();
    let mut by_dim: Vec<(usize, FixedBitSet)> = Vec::new();
    for p in 0..poset.len() {
        let d = m.dims()[p];
        match by_dim.iter_mut().find(|(k, _)| *k == d) {
            Some((_, s)) => s.insert(p),
            None => {
                let mut s = poset.empty_set();
                s.insert(p);
                by_dim.push((d, s));
            }
        }
    }
    by_dim.into_iter().map(|(_, s)| s).collect()
}

/// Fibers of a poset morphism, dropping empty ones.
pub fn fibers_partition(pi: &PosetMorphism) -> Vec<FixedBitSet> {
    pi.fibers().into_iter().filter(|s| !s.is_clear()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

    fn q() -> Field {
        Field::Rational
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Minima L, R below maxima T, B, every space k, with L -> T scaled by 1,
    /// R -> T by 2 and both maps to B by 1.
    fn crown() -> EncodedModule {
        let e = |a: &str, b: &str| (a.to_string(), b.to_string());
        let p = Arc::new(
            FinitePoset::from_relation(
                names(&["B", "L", "R", "T"]),
                &[e("L", "T"), e("R", "T"), e("L", "B"), e("R", "B")],
            )
            .unwrap(),
        );
        let idx = |s: &str| p.index_of(s).unwrap();
        let mut maps = HashMap::new();
        let scalar = |x: i64| Matrix::from_i64(q(), &[vec![x]]);
        maps.insert((idx("L"), idx("T")), scalar(1));
        maps.insert((idx("R"), idx("T")), scalar(2));
        maps.insert((idx("L"), idx("B")), scalar(1));
        maps.insert((idx("R"), idx("B")), scalar(1));
        EncodedModule::from_cover_map(p, q(), vec![1; 4], maps).unwrap()
    }

    #[test]
    fn singletons_are_always_constant() {
        let m = crown();
        let s = verify_constant_subdivision(&m, &singleton_partition(m.poset())).unwrap();
        let enc = uptight_encoding(&s).unwrap();
        assert!(verify_isomorphism(&enc.witness));
    }

    #[test]
    fn isotypic_partition_of_crown_has_monodromy() {
        let m = crown();
        let err = verify_constant_subdivision(&m, &isotypic_partition(&m)).unwrap_err();
        assert!(matches!(err, Error::Violation { .. }), "{err:?}");
    }

    #[test]
    fn one_region_gives_trivial_upsets() {
        let p = Arc::new(FinitePoset::chain(3));
        let all = p.full_set();
        let m = EncodedModule::indicator(p.clone(), q(), &all).unwrap();
        let s = verify_constant_subdivision(&m, std::slice::from_ref(&all)).unwrap();
        let ups = constant_upsets(&s);
        assert_eq!(ups, vec![all, p.empty_set()]);
        let enc = uptight_encoding(&s).unwrap();
        assert_eq!(enc.h.poset().len(), 1);
    }

    #[test]
    fn no_upsets_gives_one_block() {
        let p = FinitePoset::chain(4);
        assert_eq!(uptight_regions(&p, &[]).len(), 1);
    }
}
