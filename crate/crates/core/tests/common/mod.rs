//! Seeded generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use posetmod::filtration::{FilteredSimplex, MultiFiltration};
use posetmod::lattice::{down_closure, up_closure, Degree, GridBox};
use posetmod::module::{
    box_poset, image, indicator_sum_encoded, indicator_sum_findet, materialize_scalar_map, EncodedModule,
    FinDetModule, Morphism, Representation,
};
use posetmod::poset::{FinitePoset, PosetMorphism};
use posetmod::{Field, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i:02}")).collect()
}

/// Closure of a relation on `0..n` given by pairs `i < j`.
pub fn poset_from_pairs(n: usize, pairs: &[(usize, usize)]) -> FinitePoset {
    let nm = names(n);
    let edges: Vec<(String, String)> = pairs.iter().map(|&(a, b)| (nm[a].clone(), nm[b].clone())).collect();
    FinitePoset::from_relation(nm, &edges).expect("acyclic by construction")
}

/// Every naturally labelled poset on `0..n` (so every poset up to isomorphism,
/// usually several times), deduplicated by relation.
pub fn naturally_labelled_posets(n: usize) -> Vec<FinitePoset> {
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1 << slots.len()) {
        let pairs: Vec<(usize, usize)> = slots
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        let p = poset_from_pairs(n, &pairs);
        let key: Vec<bool> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| p.leq(a, b)).collect();
        if seen.insert(key) {
            out.push(p);
        }
    }
    out
}

pub fn random_poset(r: &mut ChaCha8Rng, n: usize, density: f64) -> FinitePoset {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(density) {
                pairs.push((i, j));
            }
        }
    }
    poset_from_pairs(n, &pairs)
}

pub fn all_subsets(n: usize) -> Vec<FixedBitSet> {
    (0u32..(1 << n))
        .map(|mask| {
            let mut s = FixedBitSet::with_capacity(n);
            for i in 0..n {
                if mask >> i & 1 == 1 {
                    s.insert(i);
                }
            }
            s
        })
        .collect()
}

pub fn random_subset(r: &mut ChaCha8Rng, n: usize, p: f64) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(n);
    for i in 0..n {
        if r.gen_bool(p) {
            s.insert(i);
        }
    }
    s
}

pub fn random_upset(r: &mut ChaCha8Rng, p: &FinitePoset) -> FixedBitSet {
    let k = r.gen_range(0..=2usize);
    let mut s = p.empty_set();
    for _ in 0..k {
        s.insert(r.gen_range(0..p.len()));
    }
    p.up_closure(&s)
}

pub fn random_downset(r: &mut ChaCha8Rng, p: &FinitePoset) -> FixedBitSet {
    let k = r.gen_range(0..=2usize);
    let mut s = p.empty_set();
    for _ in 0..k {
        s.insert(r.gen_range(0..p.len()));
    }
    p.down_closure(&s)
}

pub fn scalar(r: &mut ChaCha8Rng, f: Field) -> posetmod::Scalar {
    f.from_i64(r.gen_range(-3..=3))
}

pub fn nonzero_scalar(r: &mut ChaCha8Rng, f: Field) -> posetmod::Scalar {
    loop {
        let s = scalar(r, f);
        if !s.is_zero() {
            return s;
        }
    }
}

/// A random invertible `d x d` matrix: a permuted product of unit triangular ones
/// with nonzero diagonal.
pub fn invertible(r: &mut ChaCha8Rng, f: Field, d: usize) -> Matrix {
    let mut lower = Matrix::identity(f, d);
    let mut upper = Matrix::identity(f, d);
    for i in 0..d {
        upper.set(i, i, nonzero_scalar(r, f));
        for j in 0..i {
            lower.set(i, j, scalar(r, f));
            upper.set(j, i, scalar(r, f));
        }
    }
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(r);
    lower.mul(&upper).select_rows(&perm)
}

/// Scalars for a map between indicator sums, zero wherever labels are disjoint.
fn supported_entries(r: &mut ChaCha8Rng, f: Field, ups: &[FixedBitSet], downs: &[FixedBitSet]) -> Matrix {
    let mut e = Matrix::zeros(f, ups.len(), downs.len());
    for (p, u) in ups.iter().enumerate() {
        for (q, d) in downs.iter().enumerate() {
            if !u.is_disjoint(d) && r.gen_bool(0.7) {
                e.set(p, q, nonzero_scalar(r, f));
            }
        }
    }
    e
}

/// Image of a random scalar map `⊕ k[U_p] -> ⊕ k[D_q]` on a finite poset.
pub fn random_encoded_module(r: &mut ChaCha8Rng, poset: &Arc<FinitePoset>, f: Field, max_gens: usize) -> EncodedModule {
    let ups: Vec<FixedBitSet> = (0..r.gen_range(1..=max_gens)).map(|_| random_upset(r, poset)).collect();
    let downs: Vec<FixedBitSet> = (0..r.gen_range(1..=max_gens)).map(|_| random_downset(r, poset)).collect();
    let entries = supported_entries(r, f, &ups, &downs);
    let src = indicator_sum_encoded(poset, f, &ups).unwrap();
    let tgt = indicator_sum_encoded(poset, f, &downs).unwrap();
    let comps = materialize_scalar_map(f, poset.len(), &ups, &downs, &entries);
    let phi = Morphism::new(src, tgt, comps).expect("supported scalar maps are natural");
    image(&phi).unwrap().0
}

pub fn random_box(r: &mut ChaCha8Rng, n: usize, max_width: i64) -> GridBox {
    let lo: Vec<i64> = (0..n).map(|_| r.gen_range(-1..=0)).collect();
    let hi: Vec<i64> = lo.iter().map(|&l| l + r.gen_range(1..max_width)).collect();
    GridBox::new(lo, hi).unwrap()
}

pub fn random_cell_set(r: &mut ChaCha8Rng, bx: &GridBox, k: usize) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(bx.len());
    for _ in 0..k {
        s.insert(r.gen_range(0..bx.len()));
    }
    s
}

/// The regions and scalars of a random supported map between indicator sums
/// on a box.
pub struct BoxMapData {
    pub ups: Vec<FixedBitSet>,
    pub downs: Vec<FixedBitSet>,
    pub entries: Matrix,
}

pub fn random_box_map_data(r: &mut ChaCha8Rng, bx: &GridBox, f: Field, max_gens: usize) -> BoxMapData {
    let ups: Vec<FixedBitSet> = (0..r.gen_range(1..=max_gens))
        .map(|_| {
            let k = r.gen_range(1..=2);
            up_closure(bx, &random_cell_set(r, bx, k))
        })
        .collect();
    let downs: Vec<FixedBitSet> = (0..r.gen_range(1..=max_gens))
        .map(|_| {
            let k = r.gen_range(1..=2);
            down_closure(bx, &random_cell_set(r, bx, k))
        })
        .collect();
    let entries = supported_entries(r, f, &ups, &downs);
    BoxMapData { ups, downs, entries }
}

/// The map of `data` restricted to the upsets in `rows`.
pub fn box_map(bx: &GridBox, f: Field, data: &BoxMapData, rows: &[usize]) -> Morphism<FinDetModule> {
    let ups: Vec<FixedBitSet> = rows.iter().map(|&p| data.ups[p].clone()).collect();
    let entries = data.entries.select_rows(rows);
    let src = indicator_sum_findet(bx, f, &ups).unwrap();
    let tgt = indicator_sum_findet(bx, f, &data.downs).unwrap();
    let comps = materialize_scalar_map(f, bx.len(), &ups, &data.downs, &entries);
    Morphism::new(src, tgt, comps).expect("supported scalar maps are natural")
}

/// A finitely determined module: the image of a random supported map.
pub fn random_box_module(r: &mut ChaCha8Rng, bx: &GridBox, f: Field, max_gens: usize) -> FinDetModule {
    let data = random_box_map_data(r, bx, f, max_gens);
    let all: Vec<usize> = (0..data.ups.len()).collect();
    image(&box_map(bx, f, &data, &all)).unwrap().0
}

/// The FinDet corpus: `count` modules with `n <= 3` and at most `6^n` cells.
pub fn findet_corpus(seed: u64, count: usize) -> Vec<(u64, FinDetModule)> {
    (0..count as u64)
        .map(|k| {
            let s = seed + k;
            let mut r = rng(s);
            let n = 1 + (k % 3) as usize;
            let bx = random_box(&mut r, n, 6);
            let f = if k % 5 == 4 { Field::Prime(3) } else { Field::Rational };
            (s, random_box_module(&mut r, &bx, f, 3))
        })
        .collect()
}

/// Rebuilds `m` with per-element gauges: `M'_{a->b} = g_b M_{a->b} g_a^{-1}`.
pub fn regauge(m: &EncodedModule, gauges: &[Matrix]) -> EncodedModule {
    let maps = m
        .covers()
        .iter()
        .zip(m.cover_maps())
        .map(|(&(a, b), map)| gauges[b].mul(map).mul(&gauges[a].inverse().unwrap()))
        .collect();
    EncodedModule::new(m.poset().clone(), m.field(), m.dims().to_vec(), maps).unwrap()
}

/// A module on `q` pulled back along `pi`, then regauged elementwise. Fibers
/// that are disconnected get one gauge per fiber, which keeps them inside
/// what subdivision certification can link.
pub fn gauged_pullback(
    r: &mut ChaCha8Rng,
    pi: &PosetMorphism,
    h: &EncodedModule,
    fibers: &[FixedBitSet],
) -> EncodedModule {
    let q = pi.source();
    let f = h.field();
    let m = h.pullback(pi).unwrap();
    let mut gauges: Vec<Option<Matrix>> = vec![None; q.len()];
    for fib in fibers {
        let connected = posetmod::poset::components(q, fib).len() == 1;
        let shared = invertible(r, f, m.dims()[fib.ones().next().unwrap()]);
        for a in fib.ones() {
            gauges[a] = Some(if connected { invertible(r, f, m.dims()[a]) } else { shared.clone() });
        }
    }
    let gauges: Vec<Matrix> = gauges.into_iter().map(Option::unwrap).collect();
    regauge(&m, &gauges)
}

/// `π(q) = {i : q ∈ U_i}` into the Boolean lattice on `k` atoms.
pub fn signature_map(q: &Arc<FinitePoset>, upsets: &[FixedBitSet]) -> PosetMorphism {
    let k = upsets.len();
    let cube = Arc::new(boolean_lattice(k));
    let map: Vec<usize> = (0..q.len())
        .map(|a| {
            let mask: usize = (0..k).filter(|&i| upsets[i].contains(a)).map(|i| 1 << i).sum();
            cube.index_of(&cube_name(mask, k)).unwrap()
        })
        .collect();
    PosetMorphism::new(q.clone(), cube, map).unwrap()
}

fn cube_name(mask: usize, k: usize) -> String {
    (0..k).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn boolean_lattice(k: usize) -> FinitePoset {
    let names: Vec<String> = (0..1usize << k).map(|m| cube_name(m, k)).collect();
    let mut edges = Vec::new();
    for m in 0..1usize << k {
        for i in 0..k {
            if m >> i & 1 == 0 {
                edges.push((cube_name(m, k), cube_name(m | 1 << i, k)));
            }
        }
    }
    FinitePoset::from_relation(names, &edges).unwrap()
}

/// Coarsening of a box onto a smaller box: each axis is cut at random
/// thresholds and a cell maps to the vector of its bucket indices.
pub fn bucket_map(r: &mut ChaCha8Rng, bx: &GridBox) -> (PosetMorphism, GridBox) {
    let n = bx.n();
    let mut cuts: Vec<Vec<i64>> = Vec::new();
    for i in 0..n {
        let mut c: BTreeSet<i64> = BTreeSet::new();
        for _ in 0..r.gen_range(0..=2) {
            c.insert(r.gen_range(bx.lo()[i] + 1..=bx.hi()[i]));
        }
        cuts.push(c.into_iter().collect());
    }
    let coarse = GridBox::new(vec![0; n], cuts.iter().map(|c| c.len() as i64).collect()).unwrap();
    let (fine_p, _) = box_poset(bx).unwrap();
    let (coarse_p, _) = box_poset(&coarse).unwrap();
    let map: Vec<usize> = bx
        .cells()
        .map(|c| {
            let b: Degree = (0..n)
                .map(|i| cuts[i].iter().filter(|&&t| t <= bx.coord(c, i)).count() as i64)
                .collect();
            coarse.index(&b)
        })
        .collect();
    (PosetMorphism::new(fine_p, coarse_p, map).unwrap(), coarse)
}

/// A random monotone filtration on `n = 2` with at most `max_simplices`
/// simplices and occasional multi-critical entries.
pub fn random_filtration(r: &mut ChaCha8Rng, max_simplices: usize) -> MultiFiltration {
    let nv = r.gen_range(1..=7usize);
    let mut simplices: Vec<FilteredSimplex> = Vec::new();
    let mut entry_of: std::collections::HashMap<Vec<usize>, Vec<Degree>> = Default::default();
    let deg = |r: &mut ChaCha8Rng| -> Degree { vec![r.gen_range(0..=4), r.gen_range(0..=4)] };
    for v in 0..nv {
        let mut e = vec![deg(r)];
        if r.gen_bool(0.2) {
            e.push(deg(r));
        }
        entry_of.insert(vec![v], e.clone());
        simplices.push(simplex(&[v], e));
    }
    let mut edges: Vec<Vec<usize>> = Vec::new();
    for a in 0..nv {
        for b in a + 1..nv {
            if simplices.len() < max_simplices && r.gen_bool(0.5) {
                let e = entries_above(r, &[vec![a], vec![b]], &entry_of);
                entry_of.insert(vec![a, b], e.clone());
                simplices.push(simplex(&[a, b], e));
                edges.push(vec![a, b]);
            }
        }
    }
    for a in 0..nv {
        for b in a + 1..nv {
            for c in b + 1..nv {
                let faces = [vec![a, b], vec![a, c], vec![b, c]];
                if simplices.len() < max_simplices && faces.iter().all(|f| entry_of.contains_key(f)) && r.gen_bool(0.5) {
                    let e = entries_above(r, &faces, &entry_of);
                    entry_of.insert(vec![a, b, c], e.clone());
                    simplices.push(simplex(&[a, b, c], e));
                }
            }
        }
    }
    simplices.shuffle(r);
    MultiFiltration { n: 2, simplices }
}

fn simplex(vs: &[usize], entries: Vec<Degree>) -> FilteredSimplex {
    FilteredSimplex {
        vertices: vs.iter().map(|v| format!("v{v}")).collect(),
        entries,
    }
}

/// Entries that each dominate some entry of every face, so the entry upset
/// lies inside every face's.
fn entries_above(
    r: &mut ChaCha8Rng,
    faces: &[Vec<usize>],
    entry_of: &std::collections::HashMap<Vec<usize>, Vec<Degree>>,
) -> Vec<Degree> {
    let count = if r.gen_bool(0.2) { 2 } else { 1 };
    (0..count)
        .map(|_| {
            let mut e = vec![0i64; 2];
            for f in faces {
                let opts = &entry_of[f];
                let pick = &opts[r.gen_range(0..opts.len())];
                for i in 0..2 {
                    e[i] = e[i].max(pick[i]);
                }
            }
            for x in e.iter_mut() {
                *x += r.gen_range(0..=1);
            }
            e
        })
        .collect()
}

/// Rank over `Q` by fraction-exact elimination.
pub fn rank_q(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(rank, p);
        let pivot = m[rank][c].clone();
        for i in 0..m.len() {
            if i != rank && !m[i][c].is_zero() {
                let factor = &m[i][c] / &pivot;
                for j in c..cols {
                    let delta = &factor * &m[rank][j];
                    m[i][j] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank over `F_p`.
pub fn rank_p(rows: &[Vec<i64>], p: i64) -> usize {
    let mut m: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|&x| x.rem_euclid(p)).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let inv = |a: i64| -> i64 {
        let (mut t, mut nt, mut r0, mut r1) = (0i64, 1i64, p, a);
        while r1 != 0 {
            let q = r0 / r1;
            (t, nt) = (nt, t - q * nt);
            (r0, r1) = (r1, r0 - q * r1);
        }
        t.rem_euclid(p)
    };
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(rank, piv);
        let s = inv(m[rank][c]);
        for j in c..cols {
            m[rank][j] = m[rank][j] * s % p;
        }
        for i in 0..m.len() {
            if i != rank && m[i][c] != 0 {
                let factor = m[i][c];
                for j in c..cols {
                    m[i][j] = (m[i][j] - factor * m[rank][j]).rem_euclid(p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `dim H_i(K_q)` from boundary ranks, with `K_q` the simplices having an
/// entry below `q`. Signs follow sorted vertex order, `(-1)^j` for the `j`-th
/// deleted vertex.
pub fn oracle_betti(f: &MultiFiltration, q: &[i64], degree: usize, field: Field) -> usize {
    let present: Vec<Vec<String>> = f
        .simplices
        .iter()
        .filter(|s| s.entries.iter().any(|e| e.iter().zip(q).all(|(a, b)| a <= b)))
        .map(|s| {
            let mut v = s.vertices.clone();
            v.sort();
            v
        })
        .collect();
    let of_dim = |d: usize| -> Vec<&Vec<String>> { present.iter().filter(|s| s.len() == d + 1).collect() };
    let rank_of = |rows: &[Vec<i64>]| -> usize {
        match field {
            Field::Rational => rank_q(rows),
            Field::Prime(p) => rank_p(rows, p as i64),
        }
    };
    let boundary_rank = |d: usize| -> usize {
        // ∂_d: C_d -> C_{d-1}, one row per d-simplex.
        if d == 0 {
            return 0;
        }
        let hi = of_dim(d);
        let lo = of_dim(d - 1);
        let rows: Vec<Vec<i64>> = hi
            .iter()
            .map(|s| {
                let mut row = vec![0i64; lo.len()];
                for j in 0..s.len() {
                    let mut face = (*s).clone();
                    face.remove(j);
                    let k = lo.iter().position(|t| **t == face).expect("faces present");
                    row[k] = if j % 2 == 0 { 1 } else { -1 };
                }
                row
            })
            .collect();
        rank_of(&rows)
    };
    of_dim(degree).len() - boundary_rank(degree) - boundary_rank(degree + 1)
}
