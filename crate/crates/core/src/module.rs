//! Modules over finite posets and finitely determined `Z^n`-modules, their
//! morphisms, and the abelian-category operations on them.

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::lattice::{Degree, Face, FinDetRegion, GridBox};
use crate::matrix::{Matrix, Subspace};
use crate::poset::{FinitePoset, GridEmbedding, PosetMorphism};

/// Common view of both module types as representations of a quiver whose
/// arrows generate the order.
pub trait Representation: Clone {
    fn field(&self) -> Field;
    fn vertex_count(&self) -> usize;
    fn dim(&self, v: usize) -> usize;
    /// Generating arrows `(source, target)` in a fixed order.
    fn arrows(&self) -> Vec<(usize, usize)>;
    fn arrow_map(&self, k: usize) -> &Matrix;
    /// Same carrier, new spaces and arrow maps (aligned with `arrows`).
    fn rebuild(&self, dims: Vec<usize>, maps: Vec<Matrix>) -> Result<Self>;
    fn vertex_name(&self, v: usize) -> String;

    fn total_dim(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.dim(v)).sum()
    }

    fn is_zero_module(&self) -> bool {
        (0..self.vertex_count()).all(|v| self.dim(v) == 0)
    }
}

/// A morphism between two representations on the same carrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism<M: Representation> {
    source: M,
    target: M,
    comps: Vec<Matrix>,
}

pub type ModuleMorphism = Morphism<EncodedModule>;
pub type FinDetMorphism = Morphism<FinDetModule>;

impl<M: Representation> Morphism<M> {
    /// Checks shapes and that every arrow square commutes.
    pub fn new(source: M, target: M, comps: Vec<Matrix>) -> Result<Morphism<M>> {
        if source.vertex_count() != target.vertex_count() || source.arrows() != target.arrows() {
            return Err(Error::Mismatch("morphism between modules on different carriers".into()));
        }
        if comps.len() != source.vertex_count() {
            return Err(Error::Invalid(format!(
                "morphism has {} components for {} elements",
                comps.len(),
                source.vertex_count()
            )));
        }
        for (v, c) in comps.iter().enumerate() {
            if c.rows() != target.dim(v) || c.cols() != source.dim(v) {
                return Err(Error::Invalid(format!(
                    "component at {} is {}x{}, expected {}x{}",
                    source.vertex_name(v),
                    c.rows(),
                    c.cols(),
                    target.dim(v),
                    source.dim(v)
                )));
            }
        }
        for (k, &(a, b)) in source.arrows().iter().enumerate() {
            let lhs = target.arrow_map(k).mul(&comps[a]);
            let rhs = comps[b].mul(source.arrow_map(k));
            if lhs != rhs {
                return Err(Error::violation(
                    "morphism does not commute with structure maps",
                    format!("{} -> {}", source.vertex_name(a), source.vertex_name(b)),
                ));
            }
        }
        Ok(Morphism { source, target, comps })
    }

    pub(crate) fn new_unchecked(source: M, target: M, comps: Vec<Matrix>) -> Morphism<M> {
        Morphism { source, target, comps }
    }

    pub fn identity(m: &M) -> Morphism<M> {
        let comps = (0..m.vertex_count())
            .map(|v| Matrix::identity(m.field(), m.dim(v)))
            .collect();
        Morphism::new_unchecked(m.clone(), m.clone(), comps)
    }

    pub fn zero(source: &M, target: &M) -> Morphism<M> {
        let comps = (0..source.vertex_count())
            .map(|v| Matrix::zeros(source.field(), target.dim(v), source.dim(v)))
            .collect();
        Morphism::new_unchecked(source.clone(), target.clone(), comps)
    }

    pub fn source(&self) -> &M {
        &self.source
    }

    pub fn target(&self) -> &M {
        &self.target
    }

    pub fn comp(&self, v: usize) -> &Matrix {
        &self.comps[v]
    }

    pub fn comps(&self) -> &[Matrix] {
        &self.comps
    }

    pub fn compose(&self, then: &Morphism<M>) -> Result<Morphism<M>> {
        if self.target.vertex_count() != then.source.vertex_count() {
            return Err(Error::Mismatch("composition of morphisms".into()));
        }
        let comps = self
            .comps
            .iter()
            .zip(&then.comps)
            .map(|(a, b)| b.mul(a))
            .collect();
        Ok(Morphism::new_unchecked(self.source.clone(), then.target.clone(), comps))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    pub fn is_injective(&self) -> bool {
        self.comps.iter().all(|c| c.is_injective())
    }

    pub fn is_surjective(&self) -> bool {
        self.comps.iter().all(|c| c.is_surjective())
    }

    /// First element where the component fails to be injective.
    pub fn injectivity_witness(&self) -> Option<usize> {
        self.comps.iter().position(|c| !c.is_injective())
    }

    pub fn sub(&self, other: &Morphism<M>) -> Morphism<M> {
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect();
        Morphism::new_unchecked(self.source.clone(), self.target.clone(), comps)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.comps.iter().map(|c| c.rank()).collect()
    }
}

/// True iff every component is invertible.
pub fn verify_isomorphism<M: Representation>(phi: &Morphism<M>) -> bool {
    phi.comps.iter().all(|c| c.is_invertible())
}

/// The kernel with its inclusion into the source.
pub fn kernel<M: Representation>(phi: &Morphism<M>) -> Result<(M, Morphism<M>)> {
    let src = &phi.source;
    let incl: Vec<Matrix> = phi.comps.iter().map(|c| c.kernel()).collect();
    let mut maps = Vec::new();
    for (k, &(a, b)) in src.arrows().iter().enumerate() {
        let image = src.arrow_map(k).mul(&incl[a]);
        let coords = incl[b]
            .solve(&image)
            .ok_or_else(|| Error::Internal("kernel not preserved by structure map".into()))?;
        maps.push(coords);
    }
    let dims = incl.iter().map(|m| m.cols()).collect();
    let ker = src.rebuild(dims, maps)?;
    let inclusion = Morphism::new_unchecked(ker.clone(), src.clone(), incl);
    Ok((ker, inclusion))
}

/// The cokernel with its projection from the target. Quotients use the
/// non-pivot coordinates of the image.
pub fn cokernel<M: Representation>(phi: &Morphism<M>) -> Result<(M, Morphism<M>)> {
    let tgt = &phi.target;
    let f = tgt.field();
    let images: Vec<Subspace> = phi.comps.iter().map(Subspace::from_columns).collect();
    let proj: Vec<Matrix> = images.iter().map(|s| s.quotient_projection()).collect();
    let sections: Vec<Matrix> = images
        .iter()
        .map(|s| {
            let keep = s.complement_indices();
            Matrix::identity(f, s.ambient()).select_cols(&keep)
        })
        .collect();
    let maps = tgt
        .arrows()
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| proj[b].mul(&tgt.arrow_map(k).mul(&sections[a])))
        .collect();
    let dims = proj.iter().map(|m| m.rows()).collect();
    let coker = tgt.rebuild(dims, maps)?;
    let projection = Morphism::new_unchecked(tgt.clone(), coker.clone(), proj);
    Ok((coker, projection))
}

/// The image, with the corestriction from the source and inclusion into the target.
pub fn image<M: Representation>(phi: &Morphism<M>) -> Result<(M, Morphism<M>, Morphism<M>)> {
    let tgt = &phi.target;
    let incl: Vec<Matrix> = phi.comps.iter().map(|c| c.column_space()).collect();
    let mut maps = Vec::new();
    for (k, &(a, b)) in tgt.arrows().iter().enumerate() {
        let moved = tgt.arrow_map(k).mul(&incl[a]);
        maps.push(
            incl[b]
                .solve(&moved)
                .ok_or_else(|| Error::Internal("image not preserved by structure map".into()))?,
        );
    }
    let dims = incl.iter().map(|m| m.cols()).collect();
    let im = tgt.rebuild(dims, maps)?;
    let mut onto = Vec::new();
    for (v, c) in phi.comps.iter().enumerate() {
        onto.push(
            incl[v]
                .solve(c)
                .ok_or_else(|| Error::Internal("map does not land in its image".into()))?,
        );
    }
    let corestriction = Morphism::new_unchecked(phi.source.clone(), im.clone(), onto);
    let inclusion = Morphism::new_unchecked(im.clone(), tgt.clone(), incl);
    Ok((im, corestriction, inclusion))
}

/// Direct sum of a list of modules on one carrier, with injections and projections.
pub fn direct_sum<M: Representation>(
    parts: &[M],
) -> Result<(M, Vec<Morphism<M>>, Vec<Morphism<M>>)> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Invalid("direct sum of no modules needs a carrier".into()))?;
    let f = first.field();
    let nv = first.vertex_count();
    let arrows = first.arrows();
    for p in parts {
        if p.vertex_count() != nv || p.arrows() != arrows {
            return Err(Error::Mismatch("direct sum of modules on different carriers".into()));
        }
    }
    let dims: Vec<usize> = (0..nv).map(|v| parts.iter().map(|p| p.dim(v)).sum()).collect();
    let maps = (0..arrows.len())
        .map(|k| {
            let blocks: Vec<&Matrix> = parts.iter().map(|p| p.arrow_map(k)).collect();
            Matrix::block_diag(f, &blocks)
        })
        .collect();
    let sum = first.rebuild(dims.clone(), maps)?;
    let mut injections = Vec::new();
    let mut projections = Vec::new();
    let mut offsets = vec![0usize; nv];
    for p in parts {
        let mut inj = Vec::new();
        let mut proj = Vec::new();
        for v in 0..nv {
            let mut i = Matrix::zeros(f, dims[v], p.dim(v));
            for r in 0..p.dim(v) {
                i.set(offsets[v] + r, r, f.one());
            }
            proj.push(i.transpose());
            inj.push(i);
            offsets[v] += p.dim(v);
        }
        injections.push(Morphism::new_unchecked(p.clone(), sum.clone(), inj));
        projections.push(Morphism::new_unchecked(sum.clone(), p.clone(), proj));
    }
    Ok((sum, injections, projections))
}

/// The morphism `⊕ source_j -> target` assembled from maps out of each summand.
pub fn hstack_morphisms<M: Representation>(sum: &M, maps: &[Morphism<M>]) -> Result<Morphism<M>> {
    let target = maps
        .first()
        .map(|m| m.target.clone())
        .ok_or_else(|| Error::Invalid("no maps to assemble".into()))?;
    let f = sum.field();
    let comps = (0..sum.vertex_count())
        .map(|v| {
            let mut acc = Matrix::zeros(f, target.dim(v), 0);
            for m in maps {
                acc = acc.hstack(&m.comps[v]);
            }
            acc
        })
        .collect();
    Morphism::new(sum.clone(), target, comps)
}

/// The morphism `source -> ⊕ target_j` assembled from maps into each summand.
pub fn vstack_morphisms<M: Representation>(sum: &M, maps: &[Morphism<M>]) -> Result<Morphism<M>> {
    let source = maps
        .first()
        .map(|m| m.source.clone())
        .ok_or_else(|| Error::Invalid("no maps to assemble".into()))?;
    let f = sum.field();
    let comps = (0..sum.vertex_count())
        .map(|v| {
            let mut acc = Matrix::zeros(f, 0, source.dim(v));
            for m in maps {
                acc = acc.vstack(&m.comps[v]);
            }
            acc
        })
        .collect();
    Morphism::new(source, sum.clone(), comps)
}

/// A module over a finite poset: a space per element and a map per cover,
/// with every composite along cover paths cached after validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedModule {
    poset: Arc<FinitePoset>,
    field: Field,
    dims: Vec<usize>,
    covers: Vec<(usize, usize)>,
    cover_maps: Vec<Matrix>,
    /// `paths[(p, q)]` for every `p <= q`.
    paths: HashMap<(usize, usize), Matrix>,
}

impl EncodedModule {
    /// `cover_maps` is aligned with `poset.covers()`.
    pub fn new(poset: Arc<FinitePoset>, field: Field, dims: Vec<usize>, cover_maps: Vec<Matrix>) -> Result<EncodedModule> {
        let covers = poset.covers();
        if dims.len() != poset.len() {
            return Err(Error::Invalid(format!(
                "module has {} dimensions for {} elements",
                dims.len(),
                poset.len()
            )));
        }
        if cover_maps.len() != covers.len() {
            return Err(Error::Invalid(format!(
                "module has {} maps for {} covers",
                cover_maps.len(),
                covers.len()
            )));
        }
        for (&(a, b), m) in covers.iter().zip(&cover_maps) {
            if m.rows() != dims[b] || m.cols() != dims[a] {
                return Err(Error::Invalid(format!(
                    "map {} -> {} is {}x{}, expected {}x{}",
                    poset.name(a),
                    poset.name(b),
                    m.rows(),
                    m.cols(),
                    dims[b],
                    dims[a]
                )));
            }
            if m.field() != field {
                return Err(Error::Mismatch("map over a different field".into()));
            }
        }
        let paths = composite_maps(&poset, field, &dims, &covers, &cover_maps)?;
        Ok(EncodedModule {
            poset,
            field,
            dims,
            covers,
            cover_maps,
            paths,
        })
    }

    /// Builds from maps keyed by cover pairs.
    pub fn from_cover_map(
        poset: Arc<FinitePoset>,
        field: Field,
        dims: Vec<usize>,
        mut maps: HashMap<(usize, usize), Matrix>,
    ) -> Result<EncodedModule> {
        let covers = poset.covers();
        let mut aligned = Vec::with_capacity(covers.len());
        for &(a, b) in &covers {
            let m = maps
                .remove(&(a, b))
                .unwrap_or_else(|| Matrix::zeros(field, dims[b], dims[a]));
            aligned.push(m);
        }
        if let Some(&(a, b)) = maps.keys().next() {
            return Err(Error::Invalid(format!(
                "map given for {} -> {}, which is not a cover",
                poset.name(a),
                poset.name(b)
            )));
        }
        EncodedModule::new(poset, field, dims, aligned)
    }

    pub fn zero(poset: Arc<FinitePoset>, field: Field) -> EncodedModule {
        let n = poset.len();
        let maps = poset.covers().iter().map(|_| Matrix::zeros(field, 0, 0)).collect();
        EncodedModule::new(poset, field, vec![0; n], maps).expect("zero module is valid")
    }

    /// The indicator module `k[R]` of an upset, downset or interval.
    pub fn indicator(poset: Arc<FinitePoset>, field: Field, members: &FixedBitSet) -> Result<EncodedModule> {
        if !poset.is_interval(members) {
            return Err(Error::Invalid("indicator of a non-convex set".into()));
        }
        let dims: Vec<usize> = (0..poset.len()).map(|p| usize::from(members.contains(p))).collect();
        let maps = poset
            .covers()
            .iter()
            .map(|&(a, b)| {
                let mut m = Matrix::zeros(field, dims[b], dims[a]);
                if dims[a] == 1 && dims[b] == 1 {
                    m.set(0, 0, field.one());
                }
                m
            })
            .collect();
        EncodedModule::new(poset, field, dims, maps)
    }

    pub fn poset(&self) -> &Arc<FinitePoset> {
        &self.poset
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn cover_maps(&self) -> &[Matrix] {
        &self.cover_maps
    }

    /// The structure map `M_p -> M_q`, for `p <= q`.
    pub fn map(&self, p: usize, q: usize) -> Option<&Matrix> {
        self.paths.get(&(p, q))
    }

    /// Pullback along `π: Q -> P` where `self` lives on `P`.
    pub fn pullback(&self, pi: &PosetMorphism) -> Result<EncodedModule> {
        if **pi.target() != *self.poset {
            return Err(Error::Mismatch("pullback along a morphism into another poset".into()));
        }
        let q = pi.source().clone();
        let dims = (0..q.len()).map(|x| self.dims[pi.apply(x)]).collect();
        let maps = q
            .covers()
            .iter()
            .map(|&(a, b)| self.paths[&(pi.apply(a), pi.apply(b))].clone())
            .collect();
        EncodedModule::new(q, self.field, dims, maps)
    }

    /// The module read on a grid box through a map from cells to elements.
    pub fn pullback_to_box(&self, bx: &GridBox, cell_to_element: &[usize]) -> Result<FinDetModule> {
        let dims = cell_to_element.iter().map(|&p| self.dims[p]).collect();
        FinDetModule::from_fn(bx.clone(), self.field, dims, |c, d| {
            self.map(cell_to_element[c], cell_to_element[d])
                .cloned()
                .ok_or_else(|| Error::violation("cell map is not order-preserving", format!("cells {c} -> {d}")))
        })
    }
}

/// Composite maps for every comparable pair, checking that all cover paths
/// agree. For `p < q` the reference composite goes through the first upper
/// cover of `p` below `q`; every other cover must give the same answer.
fn composite_maps(
    poset: &FinitePoset,
    field: Field,
    dims: &[usize],
    covers: &[(usize, usize)],
    cover_maps: &[Matrix],
) -> Result<HashMap<(usize, usize), Matrix>> {
    let cover_index: HashMap<(usize, usize), usize> = covers.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut paths: HashMap<(usize, usize), Matrix> = HashMap::new();
    let order = poset.linear_extension();
    for &p in order.iter().rev() {
        paths.insert((p, p), Matrix::identity(field, dims[p]));
        for q in poset.principal_upset(p).ones() {
            if q == p {
                continue;
            }
            let mut reference: Option<(usize, Matrix)> = None;
            for &c in poset.upper_covers(p) {
                if !poset.leq(c, q) {
                    continue;
                }
                let step = &cover_maps[cover_index[&(p, c)]];
                let composite = paths[&(c, q)].mul(step);
                match &reference {
                    None => reference = Some((c, composite)),
                    Some((c0, r)) => {
                        if *r != composite {
                            return Err(Error::violation(
                                "structure maps do not commute",
                                format!(
                                    "paths {} -> {} -> {} and {} -> {} -> {} differ",
                                    poset.name(p),
                                    poset.name(*c0),
                                    poset.name(q),
                                    poset.name(p),
                                    poset.name(c),
                                    poset.name(q)
                                ),
                            ));
                        }
                    }
                }
            }
            let (_, m) = reference.expect("p < q has an upper cover below q");
            paths.insert((p, q), m);
        }
    }
    Ok(paths)
}

impl Representation for EncodedModule {
    fn field(&self) -> Field {
        self.field
    }

    fn vertex_count(&self) -> usize {
        self.dims.len()
    }

    fn dim(&self, v: usize) -> usize {
        self.dims[v]
    }

    fn arrows(&self) -> Vec<(usize, usize)> {
        self.covers.clone()
    }

    fn arrow_map(&self, k: usize) -> &Matrix {
        &self.cover_maps[k]
    }

    fn rebuild(&self, dims: Vec<usize>, maps: Vec<Matrix>) -> Result<Self> {
        EncodedModule::new(self.poset.clone(), self.field, dims, maps)
    }

    fn vertex_name(&self, v: usize) -> String {
        self.poset.name(v).to_string()
    }
}

/// A finitely determined `Z^n`-module stored on a box: the value at `q` is
/// the value at `clamp(q)`, and steps that clamping collapses are identities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinDetModule {
    bx: GridBox,
    field: Field,
    dims: Vec<usize>,
    /// `steps[i][c]`: the map from cell `c` to `c + e_i`; identity at the top.
    steps: Vec<Vec<Matrix>>,
}

impl FinDetModule {
    /// `step(c, d)` gives the map for each unit step `c -> d` inside the box.
    pub fn from_fn(
        bx: GridBox,
        field: Field,
        dims: Vec<usize>,
        mut step: impl FnMut(usize, usize) -> Result<Matrix>,
    ) -> Result<FinDetModule> {
        if dims.len() != bx.len() {
            return Err(Error::Invalid(format!("{} dimensions for {} cells", dims.len(), bx.len())));
        }
        let mut steps = Vec::with_capacity(bx.n());
        for i in 0..bx.n() {
            let mut row = Vec::with_capacity(bx.len());
            for c in bx.cells() {
                match bx.step_up(c, i) {
                    Some(d) => row.push(step(c, d)?),
                    None => row.push(Matrix::identity(field, dims[c])),
                }
            }
            steps.push(row);
        }
        FinDetModule::from_steps(bx, field, dims, steps)
    }

    pub fn from_steps(bx: GridBox, field: Field, dims: Vec<usize>, steps: Vec<Vec<Matrix>>) -> Result<FinDetModule> {
        let m = FinDetModule { bx, field, dims, steps };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let bx = &self.bx;
        let n = bx.n();
        if self.steps.len() != n || self.steps.iter().any(|s| s.len() != bx.len()) {
            return Err(Error::Invalid("step table does not match the box".into()));
        }
        for i in 0..n {
            for c in bx.cells() {
                let m = &self.steps[i][c];
                let d = bx.step_up(c, i).unwrap_or(c);
                if m.rows() != self.dims[d] || m.cols() != self.dims[c] {
                    return Err(Error::Invalid(format!(
                        "step at {:?} along axis {} has shape {}x{}",
                        bx.coords(c),
                        i + 1,
                        m.rows(),
                        m.cols()
                    )));
                }
                if d == c && *m != Matrix::identity(self.field, self.dims[c]) {
                    return Err(Error::violation(
                        "step past the box top must be the identity",
                        format!("{:?} axis {}", bx.coords(c), i + 1),
                    ));
                }
            }
        }
        for c in bx.cells() {
            for i in 0..n {
                let Some(ci) = bx.step_up(c, i) else { continue };
                for j in (i + 1)..n {
                    let Some(cj) = bx.step_up(c, j) else { continue };
                    let lhs = self.steps[j][ci].mul(&self.steps[i][c]);
                    let rhs = self.steps[i][cj].mul(&self.steps[j][c]);
                    if lhs != rhs {
                        return Err(Error::violation(
                            "structure maps do not commute",
                            format!("square at {:?} on axes {} and {}", bx.coords(c), i + 1, j + 1),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn zero(bx: GridBox, field: Field) -> FinDetModule {
        let len = bx.len();
        FinDetModule::from_fn(bx, field, vec![0; len], |_, _| Ok(Matrix::zeros(field, 0, 0)))
            .expect("zero module is valid")
    }

    /// `k[R]` for an upset or downset region on its own box.
    pub fn indicator(region: &FinDetRegion, field: Field) -> FinDetModule {
        let bx = region.grid().clone();
        let dims: Vec<usize> = bx.cells().map(|c| usize::from(region.contains_cell(c))).collect();
        let d2 = dims.clone();
        FinDetModule::from_fn(bx, field, dims, |c, d| {
            let mut m = Matrix::zeros(field, d2[d], d2[c]);
            if d2[c] == 1 && d2[d] == 1 {
                m.set(0, 0, field.one());
            }
            Ok(m)
        })
        .expect("indicator of a closed region is a module")
    }

    pub fn grid(&self) -> &GridBox {
        &self.bx
    }

    pub fn n(&self) -> usize {
        self.bx.n()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim_at(&self, q: &[i64]) -> usize {
        self.dims[self.bx.clamp_index(q)]
    }

    pub fn step(&self, c: usize, i: usize) -> &Matrix {
        &self.steps[i][c]
    }

    pub fn steps(&self) -> &[Vec<Matrix>] {
        &self.steps
    }

    /// The structure map between cells `a <= b`, raising axes in order.
    pub fn map_between(&self, a: usize, b: usize) -> Matrix {
        let mut m = Matrix::identity(self.field, self.dims[a]);
        let mut cur = a;
        for i in 0..self.n() {
            let target = self.bx.coord(b, i);
            while self.bx.coord(cur, i) < target {
                m = self.steps[i][cur].mul(&m);
                cur += self.bx.stride(i);
            }
        }
        debug_assert_eq!(cur, b);
        m
    }

    /// The structure map between arbitrary degrees `p <= q`.
    pub fn map_degrees(&self, p: &[i64], q: &[i64]) -> Matrix {
        self.map_between(self.bx.clamp_index(p), self.bx.clamp_index(q))
    }

    /// The same module on another box, read through clamping.
    pub fn rebox(&self, bx: &GridBox) -> Result<FinDetModule> {
        let old = &self.bx;
        let index: Vec<usize> = bx.cells().map(|c| old.clamp_index(&bx.coords(c))).collect();
        let dims = index.iter().map(|&c| self.dims[c]).collect();
        FinDetModule::from_fn(bx.clone(), self.field, dims, |c, d| Ok(self.map_between(index[c], index[d])))
    }

    /// `M_τ`: the value at `q` is the value with τ-coordinates pushed to the top.
    pub fn localize(&self, tau: Face) -> Result<FinDetModule> {
        let bx = &self.bx;
        let push: Vec<usize> = bx.cells().map(|c| bx.push_to_top(c, tau)).collect();
        let dims = push.iter().map(|&c| self.dims[c]).collect();
        FinDetModule::from_fn(bx.clone(), self.field, dims, |c, d| Ok(self.map_between(push[c], push[d])))
    }

    /// The natural map `M -> M_τ`.
    pub fn localization_map(&self, tau: Face) -> Result<FinDetMorphism> {
        let loc = self.localize(tau)?;
        let comps = self
            .bx
            .cells()
            .map(|c| self.map_between(c, self.bx.push_to_top(c, tau)))
            .collect();
        Ok(Morphism::new_unchecked(self.clone(), loc, comps))
    }

    /// `Γ_τ M`: elements killed by pushing along every axis outside τ, with
    /// its inclusion.
    pub fn global_support(&self, tau: Face) -> Result<(FinDetModule, FinDetMorphism)> {
        let axes = tau.complement_axes(self.n());
        if axes.is_empty() {
            return Ok((self.clone(), Morphism::identity(self)));
        }
        let maps = axes
            .iter()
            .map(|&i| self.localization_map(Face::single(i)))
            .collect::<Result<Vec<_>>>()?;
        let targets: Vec<FinDetModule> = maps.iter().map(|m| m.target().clone()).collect();
        let (sum, _, _) = direct_sum(&targets)?;
        let phi = vstack_morphisms(&sum, &maps)?;
        kernel(&phi)
    }

    /// Whether the module is τ-coprimary. Exactly when it embeds in `M_τ`
    /// and `M_τ` vanishes on the top layer of every axis outside τ: then each
    /// element has a multiple killed by every further step off τ, which
    /// persists along τ; a nonzero top value would persist off τ forever.
    pub fn coprimary_test(&self, tau: Face) -> Result<bool> {
        if self.is_zero_module() {
            return Ok(false);
        }
        let to_local = self.localization_map(tau)?;
        if !to_local.is_injective() {
            return Ok(false);
        }
        let local = to_local.target();
        let bx = &self.bx;
        let others = tau.complement_axes(self.n());
        Ok(bx
            .cells()
            .all(|c| local.dims[c] == 0 || !others.iter().any(|&i| bx.is_top(c, i))))
    }

    /// Joint kernel at cell `c` of the unit steps along `axes` that stay in
    /// the box.
    pub fn socle_at(&self, c: usize, axes: &[usize]) -> Subspace {
        let mut stacked = Matrix::zeros(self.field, 0, self.dims[c]);
        for &i in axes {
            if self.bx.step_up(c, i).is_some() {
                stacked = stacked.vstack(&self.steps[i][c]);
            }
        }
        Subspace::from_columns(&stacked.kernel())
    }

    /// The same data as a module over the box poset.
    pub fn to_encoded(&self) -> Result<EncodedModule> {
        let (poset, _) = box_poset(&self.bx)?;
        let covers = poset.covers();
        let maps = covers.iter().map(|&(a, b)| self.map_between(a, b)).collect();
        EncodedModule::new(poset, self.field, self.dims.clone(), maps)
    }

    /// The dual construction: the finitely determined module on `bx` whose
    /// cells read an encoded module over the box poset.
    pub fn from_encoded(bx: &GridBox, m: &EncodedModule) -> Result<FinDetModule> {
        let cells: Vec<usize> = bx.cells().collect();
        m.pullback_to_box(bx, &cells)
    }
}

impl Representation for FinDetModule {
    fn field(&self) -> Field {
        self.field
    }

    fn vertex_count(&self) -> usize {
        self.dims.len()
    }

    fn dim(&self, v: usize) -> usize {
        self.dims[v]
    }

    fn arrows(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n() {
            for c in self.bx.cells() {
                if let Some(d) = self.bx.step_up(c, i) {
                    out.push((c, d));
                }
            }
        }
        out
    }

    fn arrow_map(&self, k: usize) -> &Matrix {
        // Arrows are listed axis by axis, skipping top cells.
        let mut k = k;
        for i in 0..self.n() {
            let per_axis = self.bx.len() - self.bx.len() / self.bx.width(i);
            if k < per_axis {
                let c = nth_non_top(&self.bx, i, k);
                return &self.steps[i][c];
            }
            k -= per_axis;
        }
        panic!("arrow index out of range")
    }

    fn rebuild(&self, dims: Vec<usize>, maps: Vec<Matrix>) -> Result<Self> {
        let bx = &self.bx;
        let mut it = maps.into_iter();
        let mut steps = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            let mut row = Vec::with_capacity(bx.len());
            for c in bx.cells() {
                if bx.step_up(c, i).is_some() {
                    row.push(it.next().ok_or_else(|| Error::Internal("too few arrow maps".into()))?);
                } else {
                    row.push(Matrix::identity(self.field, dims[c]));
                }
            }
            steps.push(row);
        }
        FinDetModule::from_steps(bx.clone(), self.field, dims, steps)
    }

    fn vertex_name(&self, v: usize) -> String {
        format!("{:?}", self.bx.coords(v))
    }
}

/// The `k`-th cell (in cell order) that is not on the top layer of axis `i`.
fn nth_non_top(bx: &GridBox, i: usize, k: usize) -> usize {
    // Cells split into blocks of `stride * width` consecutive indices; in
    // each block the last `stride` cells are top along `i`.
    let stride = bx.stride(i);
    let per_block = stride * (bx.width(i) - 1);
    let block = k / per_block;
    let within = k % per_block;
    block * stride * bx.width(i) + within
}

/// The box as a finite poset, with element `c` equal to cell `c`. Ids are
/// zero-padded offsets from `lo`, so lexicographic order is cell order.
pub fn box_poset(bx: &GridBox) -> Result<(Arc<FinitePoset>, Vec<usize>)> {
    let width = (0..bx.n()).map(|i| (bx.width(i) - 1).to_string().len()).max().unwrap_or(1);
    let names: Vec<String> = bx
        .cells()
        .map(|c| {
            (0..bx.n())
                .map(|i| format!("{:0width$}", bx.coord(c, i) - bx.lo()[i]))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    let (poset, map) = FinitePoset::from_leq_fn(names, |a, b| bx.cell_leq(a, b))?;
    debug_assert!(map.iter().enumerate().all(|(i, &e)| i == e));
    Ok((Arc::new(poset), map))
}

/// Pushforward along an order embedding `ι: P -> Z^n`: at `z` the colimit of
/// `H` over `{p : ι(p) <= z}`. The box is `[-1, extent + 1]`.
pub fn pushforward(h: &EncodedModule, iota: &GridEmbedding) -> Result<FinDetModule> {
    let poset = h.poset();
    if iota.coords.len() != poset.len() || !iota.is_order_embedding(poset) {
        return Err(Error::violation("not an order embedding", format!("{:?}", iota.coords)));
    }
    let f = h.field;
    let n = iota.dim;
    let extent = iota.extent();
    let bx = GridBox::new(vec![-1; n], extent.iter().map(|e| e + 1).collect())?;
    // Blocks follow a fixed linear extension, so at ι(p) the element p comes
    // last and the quotient coordinates are exactly its own basis.
    let order = poset.linear_extension();
    let mut rank_of = vec![0; poset.len()];
    for (r, &p) in order.iter().enumerate() {
        rank_of[p] = r;
    }
    struct Colim {
        offsets: HashMap<usize, usize>,
        projection: Matrix,
        section: Matrix,
    }
    let mut colims: Vec<Colim> = Vec::with_capacity(bx.len());
    for c in bx.cells() {
        let z = bx.coords(c);
        let mut below: Vec<usize> = (0..poset.len())
            .filter(|&p| iota.coords[p].iter().zip(&z).all(|(a, b)| a <= b))
            .collect();
        below.sort_by_key(|&p| rank_of[p]);
        let mut offsets = HashMap::new();
        let mut total = 0;
        for &p in &below {
            offsets.insert(p, total);
            total += h.dims[p];
        }
        let mut rows = Vec::new();
        for (k, &(a, b)) in h.covers.iter().enumerate() {
            let (Some(&oa), Some(&ob)) = (offsets.get(&a), offsets.get(&b)) else {
                continue;
            };
            let m = &h.cover_maps[k];
            for v in 0..h.dims[a] {
                let mut row = vec![Scalar::zero(); total];
                row[oa + v] = f.one();
                for r in 0..h.dims[b] {
                    row[ob + r] = f.neg(m.get(r, v));
                }
                rows.push(row);
            }
        }
        let rel = Subspace::from_vectors(f, total, &rows);
        let projection = rel.quotient_projection();
        let section = Matrix::identity(f, total).select_cols(&rel.complement_indices());
        colims.push(Colim {
            offsets,
            projection,
            section,
        });
    }
    let dims: Vec<usize> = colims.iter().map(|c| c.projection.rows()).collect();
    FinDetModule::from_fn(bx, f, dims, |c, d| {
        let (from, to) = (&colims[c], &colims[d]);
        let big = to.projection.cols();
        let small = from.section.rows();
        // Inclusion of the smaller diagram's blocks into the larger one.
        let mut incl = Matrix::zeros(f, big, small);
        for (&p, &o) in &from.offsets {
            let o2 = to.offsets[&p];
            for v in 0..h.dims[p] {
                incl.set(o2 + v, o + v, f.one());
            }
        }
        Ok(to.projection.mul(&incl.mul(&from.section)))
    })
}

/// The comparison `H -> ι*(push H)` on `P`; an isomorphism for embeddings.
pub fn pushforward_unit(h: &EncodedModule, iota: &GridEmbedding, pushed: &FinDetModule) -> Result<ModuleMorphism> {
    let bx = pushed.grid();
    let cells: Vec<usize> = iota.coords.iter().map(|q| bx.index(q)).collect();
    let restricted = {
        let dims = cells.iter().map(|&c| pushed.dims[c]).collect();
        let maps = h
            .covers
            .iter()
            .map(|&(a, b)| pushed.map_between(cells[a], cells[b]))
            .collect();
        EncodedModule::new(h.poset.clone(), h.field, dims, maps)?
    };
    // Colimit coordinates at ι(p) are the block of p itself.
    let comps = (0..h.poset.len())
        .map(|p| Matrix::identity(h.field, h.dims[p]))
        .collect::<Vec<_>>();
    if comps.iter().zip(&restricted.dims).any(|(c, &d)| c.rows() != d) {
        return Err(Error::violation("pushforward changed a dimension on the image", String::new()));
    }
    Morphism::new(h.clone(), restricted, comps)
}

/// Degrees of a box listed in cell order.
pub fn box_degrees(bx: &GridBox) -> Vec<Degree> {
    bx.cells().map(|c| bx.coords(c)).collect()
}

/// `⊕_j k[R_j]` on a box, with basis at each cell the regions containing
/// it, in list order.
pub fn indicator_sum_findet(bx: &GridBox, field: Field, regions: &[FixedBitSet]) -> Result<FinDetModule> {
    let members: Vec<Vec<usize>> = bx
        .cells()
        .map(|c| (0..regions.len()).filter(|&j| regions[j].contains(c)).collect())
        .collect();
    let dims = members.iter().map(|m| m.len()).collect();
    FinDetModule::from_fn(bx.clone(), field, dims, |c, d| Ok(inclusion_of_members(field, &members[c], &members[d])))
}

/// `⊕_j k[R_j]` over a finite poset.
pub fn indicator_sum_encoded(poset: &Arc<FinitePoset>, field: Field, regions: &[FixedBitSet]) -> Result<EncodedModule> {
    let members: Vec<Vec<usize>> = (0..poset.len())
        .map(|p| (0..regions.len()).filter(|&j| regions[j].contains(p)).collect())
        .collect();
    let dims = members.iter().map(|m| m.len()).collect();
    let maps = poset
        .covers()
        .iter()
        .map(|&(a, b)| inclusion_of_members(field, &members[a], &members[b]))
        .collect();
    EncodedModule::new(poset.clone(), field, dims, maps)
}

/// The map sending summand `j` at the source to summand `j` at the target
/// when both contain it, and to zero otherwise.
fn inclusion_of_members(field: Field, from: &[usize], to: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(field, to.len(), from.len());
    for (col, j) in from.iter().enumerate() {
        if let Ok(row) = to.binary_search(j) {
            m.set(row, col, field.one());
        }
    }
    m
}

/// Components of the map `⊕ k[S_p] -> ⊕ k[T_q]` whose `(p, q)` block is the
/// scalar `entries[p][q]` (rows index sources, columns targets).
pub fn materialize_scalar_map(
    field: Field,
    vertex_count: usize,
    sources: &[FixedBitSet],
    targets: &[FixedBitSet],
    entries: &Matrix,
) -> Vec<Matrix> {
    (0..vertex_count)
        .map(|v| {
            let src: Vec<usize> = (0..sources.len()).filter(|&p| sources[p].contains(v)).collect();
            let tgt: Vec<usize> = (0..targets.len()).filter(|&q| targets[q].contains(v)).collect();
            let mut m = Matrix::zeros(field, tgt.len(), src.len());
            for (c, &p) in src.iter().enumerate() {
                for (r, &q) in tgt.iter().enumerate() {
                    m.set(r, c, entries.get(p, q).clone());
                }
            }
            m
        })
        .collect()
}

/// Position of summand `j` in the basis at vertex `v` of an indicator sum.
pub fn summand_position(regions: &[FixedBitSet], v: usize, j: usize) -> Option<usize> {
    if !regions[j].contains(v) {
        return None;
    }
    Some((0..j).filter(|&k| regions[k].contains(v)).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::IndecFlatLabel;
    use crate::poset::RegionKind;

    fn q() -> Field {
        Field::Rational
    }

    fn two_chain() -> Arc<FinitePoset> {
        Arc::new(FinitePoset::chain(2))
    }

    #[test]
    fn noncommuting_diamond_is_rejected() {
        let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let e = |a: &str, b: &str| (a.to_string(), b.to_string());
        let p = Arc::new(
            FinitePoset::from_relation(names, &[e("a", "b"), e("a", "c"), e("b", "d"), e("c", "d")]).unwrap(),
        );
        let one = Matrix::from_i64(q(), &[vec![1]]);
        let two = Matrix::from_i64(q(), &[vec![2]]);
        let maps = vec![one.clone(), one.clone(), one.clone(), two];
        let err = EncodedModule::new(p.clone(), q(), vec![1; 4], maps).unwrap_err();
        assert!(matches!(err, Error::Violation { .. }));
        let maps = vec![one.clone(), one.clone(), one.clone(), one];
        assert!(EncodedModule::new(p, q(), vec![1; 4], maps).is_ok());
    }

    #[test]
    fn kernel_of_identity_and_zero() {
        let p = two_chain();
        let mut all = p.empty_set();
        all.insert_range(..);
        let m = EncodedModule::indicator(p, q(), &all).unwrap();
        let (k, _) = kernel(&Morphism::identity(&m)).unwrap();
        assert!(k.is_zero_module());
        let (k, incl) = kernel(&Morphism::zero(&m, &m)).unwrap();
        assert_eq!(k.dims(), m.dims());
        assert!(verify_isomorphism(&incl));
    }

    #[test]
    fn pushforward_of_a_point() {
        let p = Arc::new(FinitePoset::chain(1));
        let mut all = p.empty_set();
        all.insert(0);
        let h = EncodedModule::indicator(p, q(), &all).unwrap();
        let iota = GridEmbedding {
            dim: 2,
            coords: vec![vec![1, 1]],
        };
        let m = pushforward(&h, &iota).unwrap();
        let principal = IndecFlatLabel::new(vec![1, 1], Face::empty());
        for c in m.grid().cells() {
            assert_eq!(m.dims()[c], usize::from(principal.contains(&m.grid().coords(c))));
        }
        assert!(verify_isomorphism(&pushforward_unit(&h, &iota, &m).unwrap()));
    }

    #[test]
    fn pushforward_of_antichain_sums() {
        let names = vec!["a".to_string(), "b".to_string()];
        let p = Arc::new(FinitePoset::antichain(names).unwrap());
        let h = EncodedModule::new(p, q(), vec![1, 1], vec![]).unwrap();
        let iota = GridEmbedding {
            dim: 2,
            coords: vec![vec![1, 0], vec![0, 1]],
        };
        let m = pushforward(&h, &iota).unwrap();
        assert_eq!(m.dim_at(&[1, 1]), 2);
        assert_eq!(m.dim_at(&[0, 0]), 0);
    }

    #[test]
    fn findet_arrow_indexing_matches_steps() {
        let bx = GridBox::new(vec![0, 0, 0], vec![2, 1, 3]).unwrap();
        let region = FinDetRegion::from_fn(bx, RegionKind::Downset, |q| q[0] + q[1] + q[2] <= 3).unwrap();
        let m = FinDetModule::indicator(&region, q());
        for (k, (a, b)) in m.arrows().into_iter().enumerate() {
            let i = (0..3).find(|&i| m.grid().step_up(a, i) == Some(b)).unwrap();
            assert_eq!(m.arrow_map(k), m.step(a, i));
        }
    }

    #[test]
    fn localization_and_support_of_strip() {
        let bx = GridBox::new(vec![-1, -1], vec![4, 4]).unwrap();
        let strip = FinDetRegion::from_fn(bx, RegionKind::Downset, |q| q[1] <= 1).unwrap();
        let m = FinDetModule::indicator(&strip, q());
        assert!(m.coprimary_test(Face::single(0)).unwrap());
        assert!(!m.coprimary_test(Face::empty()).unwrap());
        let (g, _) = m.global_support(Face::single(1)).unwrap();
        assert!(g.is_zero_module());
        let (g, _) = m.global_support(Face::single(0)).unwrap();
        assert_eq!(g.dims(), m.dims());
    }

    #[test]
    fn to_encoded_round_trip() {
        let bx = GridBox::new(vec![0, 0], vec![2, 2]).unwrap();
        let r = FinDetRegion::from_fn(bx.clone(), RegionKind::Upset, |q| q[0] >= 1).unwrap();
        let m = FinDetModule::indicator(&r, q());
        let e = m.to_encoded().unwrap();
        let back = FinDetModule::from_encoded(&bx, &e).unwrap();
        assert_eq!(back, m);
    }
}
