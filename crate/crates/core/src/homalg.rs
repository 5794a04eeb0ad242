//! Matlis duality, injective hulls and flat covers, minimal resolutions and
//! flange presentations of finitely determined `Z^n`-modules.

use fixedbitset::FixedBitSet;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::lattice::{check_face_dim, flat_meets_inj, meeting_degree, Degree, Face, GridBox, IndecFlatLabel, IndecInjLabel};
use crate::matrix::{Matrix, Subspace};
use crate::module::{
    cokernel, indicator_sum_findet, materialize_scalar_map, summand_position, FinDetModule, FinDetMorphism, Morphism,
    Representation,
};

/// Retries after enlarging the box by one layer when a construction fails
/// its own verification.
pub const MAX_MARGIN_RETRIES: i64 = 2;

/// A scalar array whose rows and columns carry labels. Entry `(p, q)` is the
/// coefficient of the map from row summand `p` to column summand `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialMatrix<R, C> {
    pub rows: Vec<R>,
    pub cols: Vec<C>,
    pub entries: Matrix,
}

impl<R, C> MonomialMatrix<R, C> {
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, Scalar)> {
        let mut out = Vec::new();
        for p in 0..self.entries.rows() {
            for q in 0..self.entries.cols() {
                let v = self.entries.get(p, q);
                if !v.is_zero() {
                    out.push((p, q, v.clone()));
                }
            }
        }
        out
    }
}

pub type FlangeMatrix = MonomialMatrix<IndecFlatLabel, IndecInjLabel>;

/// `⊕ k[b + Zτ − N^n]` in label order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct InjectiveModule {
    pub labels: Vec<IndecInjLabel>,
}

/// `⊕ k[b + Zτ + N^n]` in label order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FlatModule {
    pub labels: Vec<IndecFlatLabel>,
}

impl InjectiveModule {
    pub fn regions(&self, bx: &GridBox) -> Result<Vec<FixedBitSet>> {
        self.labels.iter().map(|l| Ok(l.to_region(bx)?.members().clone())).collect()
    }

    pub fn materialize(&self, bx: &GridBox, field: Field) -> Result<FinDetModule> {
        indicator_sum_findet(bx, field, &self.regions(bx)?)
    }

    pub fn dual(&self) -> FlatModule {
        FlatModule {
            labels: self
                .labels
                .iter()
                .map(|l| IndecFlatLabel::new(l.b.iter().map(|x| -x).collect(), l.tau))
                .collect(),
        }
    }
}

impl FlatModule {
    pub fn regions(&self, bx: &GridBox) -> Result<Vec<FixedBitSet>> {
        self.labels.iter().map(|l| Ok(l.to_region(bx)?.members().clone())).collect()
    }

    pub fn materialize(&self, bx: &GridBox, field: Field) -> Result<FinDetModule> {
        indicator_sum_findet(bx, field, &self.regions(bx)?)
    }

    pub fn dual(&self) -> InjectiveModule {
        InjectiveModule {
            labels: self
                .labels
                .iter()
                .map(|l| IndecInjLabel::new(l.b.iter().map(|x| -x).collect(), l.tau))
                .collect(),
        }
    }
}

/// The cell where an injective label is read: `b` off τ, the box top on τ.
pub fn inj_label_cell(l: &IndecInjLabel, bx: &GridBox) -> usize {
    let q: Degree = (0..bx.n())
        .map(|i| if l.tau.contains(i) { bx.hi()[i] } else { l.b[i] })
        .collect();
    bx.clamp_index(&q)
}

/// The cell where a flat label is read: `b` off τ, the box bottom on τ.
pub fn flat_label_cell(l: &IndecFlatLabel, bx: &GridBox) -> usize {
    let q: Degree = (0..bx.n())
        .map(|i| if l.tau.contains(i) { bx.lo()[i] } else { l.b[i] })
        .collect();
    bx.clamp_index(&q)
}

/// Index map from cells of `bx` to the mirrored cells of `bx.negated()`.
fn mirror_cells(bx: &GridBox, dual: &GridBox) -> Vec<usize> {
    bx.cells()
        .map(|c| dual.index(&bx.coords(c).iter().map(|x| -x).collect::<Vec<_>>()))
        .collect()
}

/// `M∨_q = (M_{−q})*` on the negated box, with transposed maps.
pub fn matlis_dual(m: &FinDetModule) -> FinDetModule {
    let bx = m.grid();
    let dual_box = bx.negated();
    let to_orig = mirror_cells(&dual_box, bx);
    let dims = to_orig.iter().map(|&c| m.dims()[c]).collect();
    FinDetModule::from_fn(dual_box, m.field(), dims, |c, d| {
        // The step c -> d in the dual is the transpose of -d -> -c.
        let (oc, od) = (to_orig[c], to_orig[d]);
        let axis = (0..bx.n())
            .find(|&i| bx.step_up(od, i) == Some(oc))
            .ok_or_else(|| Error::Internal("mirrored step is not a unit step".into()))?;
        Ok(m.step(od, axis).transpose())
    })
    .expect("dual of a module is a module")
}

/// `φ∨: B∨ -> A∨` for `φ: A -> B`, given the already dualized modules.
pub fn matlis_dual_morphism(phi: &FinDetMorphism, source: &FinDetModule, target: &FinDetModule) -> Result<FinDetMorphism> {
    let bx = phi.source().grid();
    let dual_box = source.grid();
    if *dual_box != bx.negated() || target.grid() != dual_box {
        return Err(Error::Mismatch("dual morphism on a non-mirrored box".into()));
    }
    let to_orig = mirror_cells(dual_box, bx);
    let comps = to_orig.iter().map(|&c| phi.comp(c).transpose()).collect();
    Morphism::new(source.clone(), target.clone(), comps)
}

/// The canonical map `M -> (M∨)∨`. In coordinates it is the identity.
pub fn double_dual_map(m: &FinDetModule) -> Result<FinDetMorphism> {
    let dd = matlis_dual(&matlis_dual(m));
    let comps = m.dims().iter().map(|&d| Matrix::identity(m.field(), d)).collect();
    Morphism::new(m.clone(), dd, comps)
}

/// Degrees where `⊕_i M_{q−e_i} -> M_q` is not onto, with the dimension of
/// the cokernel. Only cells above the bottom layer can qualify.
pub fn generators(m: &FinDetModule) -> Vec<(Degree, usize)> {
    let bx = m.grid();
    let mut out = Vec::new();
    for c in bx.cells() {
        let d = m.dims()[c];
        if d == 0 {
            continue;
        }
        if (0..bx.n()).any(|i| bx.step_down(c, i).is_none()) {
            continue;
        }
        let mut incoming = Matrix::zeros(m.field(), d, 0);
        for i in 0..bx.n() {
            let below = bx.step_down(c, i).expect("interior cell");
            incoming = incoming.hstack(m.step(below, i));
        }
        let extra = d - incoming.rank();
        if extra > 0 {
            out.push((bx.coords(c), extra));
        }
    }
    out
}

struct Candidate {
    label: IndecInjLabel,
    cell: usize,
    functional: Vec<Scalar>,
}

/// Functionals whose restrictions form a basis of `S*`: the transposed basis
/// rows when their Gram matrix is invertible, else pivot coordinates.
fn dual_functionals(soc: &Subspace) -> Vec<Vec<Scalar>> {
    let s = soc.basis_rows();
    let gram = s.mul(&s.transpose());
    if gram.is_invertible() {
        soc.basis_vectors()
    } else {
        let f = soc.field();
        soc.pivots()
            .iter()
            .map(|&p| {
                let mut v = vec![Scalar::zero(); soc.ambient()];
                v[p] = f.one();
                v
            })
            .collect()
    }
}

/// Candidate summands of the injective hull: for each face τ and each cell
/// with τ-coordinates at the top and the rest below it, the socle of the
/// localization along τ (joint kernel of steps off τ).
fn hull_candidates(m: &FinDetModule) -> Result<Vec<Candidate>> {
    let bx = m.grid();
    let n = bx.n();
    check_face_dim(n)?;
    let mut out = Vec::new();
    for tau in Face::all(n) {
        let others = tau.complement_axes(n);
        for c in bx.cells() {
            if m.dims()[c] == 0 {
                continue;
            }
            if tau.axes(n).iter().any(|&i| !bx.is_top(c, i)) || others.iter().any(|&i| bx.is_top(c, i)) {
                continue;
            }
            let soc = m.socle_at(c, &others);
            if soc.is_zero() {
                continue;
            }
            for functional in dual_functionals(&soc) {
                out.push(Candidate {
                    label: IndecInjLabel::new(bx.coords(c), tau),
                    cell: c,
                    functional,
                });
            }
        }
    }
    Ok(out)
}

/// Socle labels with multiplicity, before any verification or pruning.
pub fn cogenerators(m: &FinDetModule) -> Result<Vec<(IndecInjLabel, usize)>> {
    let mut out: Vec<(IndecInjLabel, usize)> = Vec::new();
    for c in hull_candidates(m)? {
        match out.last_mut() {
            Some((l, k)) if *l == c.label => *k += 1,
            _ => out.push((c.label, 1)),
        }
    }
    Ok(out)
}

/// An injective hull `M ↪ E` together with the materialized `E`.
#[derive(Clone, Debug)]
pub struct InjectiveHull {
    pub module: InjectiveModule,
    pub hull: FinDetModule,
    pub map: FinDetMorphism,
}

fn try_injective_hull(m: &FinDetModule) -> Result<InjectiveHull> {
    let bx = m.grid();
    let f = m.field();
    let cands = hull_candidates(m)?;
    let regions: Vec<FixedBitSet> = cands
        .iter()
        .map(|g| Ok(g.label.to_region(bx)?.members().clone()))
        .collect::<Result<_>>()?;
    // rows[c] lists (candidate, row of the map at c) in candidate order.
    let mut rows: Vec<Vec<(usize, Vec<Scalar>)>> = vec![Vec::new(); bx.len()];
    for (g, cand) in cands.iter().enumerate() {
        let lambda = Matrix::from_rows(f, vec![cand.functional.clone()], m.dims()[cand.cell]);
        for c in regions[g].ones() {
            if m.dims()[c] == 0 {
                continue;
            }
            let push = m.map_between(c, cand.cell);
            rows[c].push((g, lambda.mul(&push).row(0).to_vec()));
        }
    }
    let rank_at = |c: usize, keep: &[bool]| -> usize {
        let kept: Vec<Vec<Scalar>> = rows[c].iter().filter(|(g, _)| keep[*g]).map(|(_, r)| r.clone()).collect();
        Matrix::from_rows(f, kept, m.dims()[c]).rank()
    };
    let mut keep = vec![true; cands.len()];
    for c in bx.cells() {
        if m.dims()[c] > 0 && rank_at(c, &keep) < m.dims()[c] {
            return Err(Error::Internal(format!(
                "socle candidates do not embed the module at {:?}",
                bx.coords(c)
            )));
        }
    }
    for g in 0..cands.len() {
        keep[g] = false;
        let still = regions[g]
            .ones()
            .all(|c| m.dims()[c] == 0 || rank_at(c, &keep) == m.dims()[c]);
        if !still {
            keep[g] = true;
        }
    }
    let kept: Vec<usize> = (0..cands.len()).filter(|&g| keep[g]).collect();
    let module = InjectiveModule {
        labels: kept.iter().map(|&g| cands[g].label.clone()).collect(),
    };
    let kept_regions: Vec<FixedBitSet> = kept.iter().map(|&g| regions[g].clone()).collect();
    let hull = indicator_sum_findet(bx, f, &kept_regions)?;
    let comps = bx
        .cells()
        .map(|c| {
            let r: Vec<Vec<Scalar>> = rows[c].iter().filter(|(g, _)| keep[*g]).map(|(_, r)| r.clone()).collect();
            if r.len() != hull.dims()[c] {
                // Zero-dimensional cells carry no rows; pad with the empty map.
                return Matrix::zeros(f, hull.dims()[c], m.dims()[c]);
            }
            Matrix::from_rows(f, r, m.dims()[c])
        })
        .collect();
    let map = Morphism::new(m.clone(), hull.clone(), comps)?;
    if let Some(c) = map.injectivity_witness() {
        return Err(Error::Internal(format!("hull map not injective at {:?}", bx.coords(c))));
    }
    Ok(InjectiveHull { module, hull, map })
}

/// Runs `f` on the module, enlarging its box by one layer per retry when the
/// result fails verification.
fn with_margin_retries<T>(m: &FinDetModule, f: impl Fn(&FinDetModule) -> Result<T>) -> Result<T> {
    let mut last = None;
    for margin in 0..=MAX_MARGIN_RETRIES {
        let mm = if margin == 0 {
            m.clone()
        } else {
            m.rebox(&m.grid().enlarged(margin))?
        };
        match f(&mm) {
            Ok(v) => return Ok(v),
            Err(Error::Internal(msg)) => last = Some(msg),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Internal(last.unwrap_or_default()))
}

/// The minimal injective hull, verified injective and pruned so that
/// dropping any summand breaks injectivity.
pub fn injective_hull(m: &FinDetModule) -> Result<InjectiveHull> {
    with_margin_retries(m, try_injective_hull)
}

/// A flat cover `F ↠ M`, obtained by dualizing the hull of `M∨`.
#[derive(Clone, Debug)]
pub struct FlatCover {
    pub module: FlatModule,
    pub cover: FinDetModule,
    pub map: FinDetMorphism,
}

fn try_flat_cover(m: &FinDetModule) -> Result<FlatCover> {
    let dual = matlis_dual(m);
    let h = try_injective_hull(&dual)?;
    let module = h.module.dual();
    let cover = module.materialize(m.grid(), m.field())?;
    let dual_hull = matlis_dual(&h.hull);
    if dual_hull != cover {
        return Err(Error::Internal("dual of the hull is not the flat sum".into()));
    }
    let map = matlis_dual_morphism(&h.map, &cover, &matlis_dual(&dual))?;
    let map = Morphism::new(cover.clone(), m.clone(), map.comps().to_vec())?;
    Ok(FlatCover { module, cover, map })
}

pub fn flat_cover(m: &FinDetModule) -> Result<FlatCover> {
    with_margin_retries(m, try_flat_cover)
}

/// `0 -> M -> E^0 -> E^1 -> ...` with indecomposable terms.
#[derive(Clone, Debug)]
pub struct InjectiveResolution {
    pub terms: Vec<InjectiveModule>,
    pub modules: Vec<FinDetModule>,
    pub augmentation: FinDetMorphism,
    /// `E^j -> E^{j+1}`.
    pub maps: Vec<FinDetMorphism>,
    pub differentials: Vec<MonomialMatrix<IndecInjLabel, IndecInjLabel>>,
}

impl InjectiveResolution {
    pub fn length(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    pub fn grid(&self) -> &GridBox {
        self.augmentation.source().grid()
    }

    pub fn check_exact(&self) -> Result<()> {
        let mut seq = vec![&self.augmentation];
        seq.extend(self.maps.iter());
        check_exact_sequence(self.augmentation.source(), &seq)
    }
}

/// `... -> F_1 -> F_0 -> M -> 0` with indecomposable terms.
#[derive(Clone, Debug)]
pub struct FlatResolution {
    pub terms: Vec<FlatModule>,
    pub modules: Vec<FinDetModule>,
    pub augmentation: FinDetMorphism,
    /// `F_{j+1} -> F_j`.
    pub maps: Vec<FinDetMorphism>,
    /// Rows label `F_{j+1}`, columns `F_j`.
    pub differentials: Vec<MonomialMatrix<IndecFlatLabel, IndecFlatLabel>>,
}

impl FlatResolution {
    pub fn length(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    pub fn grid(&self) -> &GridBox {
        self.augmentation.target().grid()
    }

    pub fn check_exact(&self) -> Result<()> {
        let mut seq: Vec<&FinDetMorphism> = self.maps.iter().rev().collect();
        seq.push(&self.augmentation);
        let first = seq.first().map(|m| m.source()).expect("nonempty sequence");
        check_exact_sequence(first, &seq)
    }
}

/// Checks `0 -> X_0 -> X_1 -> ... -> X_k -> 0` exact at every cell, where
/// `maps[i]: X_i -> X_{i+1}` and `first = X_0`.
pub fn check_exact_sequence<M: Representation>(first: &M, maps: &[&Morphism<M>]) -> Result<()> {
    for w in maps.windows(2) {
        if !w[0].compose(w[1])?.is_zero() {
            return Err(Error::violation("consecutive maps do not compose to zero", String::new()));
        }
    }
    let ranks: Vec<Vec<usize>> = maps.iter().map(|m| m.ranks()).collect();
    for c in 0..first.vertex_count() {
        for i in 0..=maps.len() {
            let dim = if i == 0 { first.dim(c) } else { maps[i - 1].target().dim(c) };
            let incoming = if i == 0 { 0 } else { ranks[i - 1][c] };
            let outgoing = if i == maps.len() { 0 } else { ranks[i][c] };
            if dim != incoming + outgoing {
                return Err(Error::violation(
                    "sequence not exact",
                    format!("term {i} at {}", first.vertex_name(c)),
                ));
            }
        }
    }
    Ok(())
}

/// Scalars of a map between injective sums, read at each target label's cell.
fn injective_differential(
    d: &FinDetMorphism,
    source: &InjectiveModule,
    target: &InjectiveModule,
) -> Result<MonomialMatrix<IndecInjLabel, IndecInjLabel>> {
    let bx = d.source().grid();
    let f = d.source().field();
    let sr = source.regions(bx)?;
    let tr = target.regions(bx)?;
    let mut entries = Matrix::zeros(f, sr.len(), tr.len());
    for (t, label) in target.labels.iter().enumerate() {
        let c = inj_label_cell(label, bx);
        let row = summand_position(&tr, c, t).expect("a label contains its own cell");
        for s in 0..sr.len() {
            if let Some(col) = summand_position(&sr, c, s) {
                entries.set(s, t, d.comp(c).get(row, col).clone());
            }
        }
    }
    let rebuilt = materialize_scalar_map(f, bx.len(), &sr, &tr, &entries);
    if rebuilt != d.comps() {
        return Err(Error::Internal("differential is not given by scalars".into()));
    }
    Ok(MonomialMatrix {
        rows: source.labels.clone(),
        cols: target.labels.clone(),
        entries,
    })
}

fn try_injective_resolution(m: &FinDetModule) -> Result<InjectiveResolution> {
    let n = m.n();
    let h0 = try_injective_hull(m)?;
    let mut terms = vec![h0.module];
    let mut modules = vec![h0.hull];
    let augmentation = h0.map;
    let mut maps: Vec<FinDetMorphism> = Vec::new();
    let mut differentials = Vec::new();
    loop {
        let prev = maps.last().unwrap_or(&augmentation);
        let (coker, proj) = cokernel(prev)?;
        if coker.is_zero_module() {
            break;
        }
        if terms.len() > n {
            return Err(Error::Internal(format!("injective resolution longer than n = {n}")));
        }
        let h = try_injective_hull(&coker)?;
        let d = proj.compose(&h.map)?;
        let d = Morphism::new(modules.last().expect("a term").clone(), h.hull.clone(), d.comps().to_vec())?;
        differentials.push(injective_differential(&d, terms.last().expect("a term"), &h.module)?);
        maps.push(d);
        terms.push(h.module);
        modules.push(h.hull);
    }
    let res = InjectiveResolution {
        terms,
        modules,
        augmentation,
        maps,
        differentials,
    };
    res.check_exact().map_err(|e| Error::Internal(e.to_string()))?;
    Ok(res)
}

/// The minimal injective resolution, verified exact with length at most `n`.
/// The zero module has an empty resolution.
pub fn minimal_injective_resolution(m: &FinDetModule) -> Result<InjectiveResolution> {
    with_margin_retries(m, try_injective_resolution)
}

/// The flat resolution, as the termwise dual of the injective resolution of `M∨`.
pub fn minimal_flat_resolution(m: &FinDetModule) -> Result<FlatResolution> {
    let dual = matlis_dual(m);
    let inj = minimal_injective_resolution(&dual)?;
    flat_resolution_from_dual(&inj)
}

/// Dualizes an injective resolution of `M∨` into a flat resolution of `M`.
pub fn flat_resolution_from_dual(inj: &InjectiveResolution) -> Result<FlatResolution> {
    let dual_m = inj.augmentation.source();
    let m = matlis_dual(dual_m);
    let bx = m.grid().clone();
    let f = m.field();
    let terms: Vec<FlatModule> = inj.terms.iter().map(|t| t.dual()).collect();
    let modules: Vec<FinDetModule> = terms
        .iter()
        .map(|t| t.materialize(&bx, f))
        .collect::<Result<_>>()?;
    let augmentation = matlis_dual_morphism(&inj.augmentation, &modules[0], &m)?;
    let maps = inj
        .maps
        .iter()
        .enumerate()
        .map(|(j, d)| matlis_dual_morphism(d, &modules[j + 1], &modules[j]))
        .collect::<Result<Vec<_>>>()?;
    let differentials = inj
        .differentials
        .iter()
        .enumerate()
        .map(|(j, d)| MonomialMatrix {
            rows: terms[j + 1].labels.clone(),
            cols: terms[j].labels.clone(),
            entries: d.entries.transpose(),
        })
        .collect();
    let res = FlatResolution {
        terms,
        modules,
        augmentation,
        maps,
        differentials,
    };
    res.check_exact().map_err(|e| Error::Internal(e.to_string()))?;
    Ok(res)
}

/// A flange presentation `F -> E` with image `M`, kept with the witnesses
/// `F ↠ M ↪ E` that certify the image.
#[derive(Clone, Debug)]
pub struct FlangePresentation {
    pub matrix: FlangeMatrix,
    pub cover: FlatCover,
    pub hull: InjectiveHull,
}

impl FlangePresentation {
    pub fn grid(&self) -> &GridBox {
        self.hull.map.source().grid()
    }
}

/// Scalars of a map between a flat sum and an injective sum, each read at a
/// degree in both labels.
pub fn flange_entries(
    composite: &FinDetMorphism,
    flat: &FlatModule,
    inj: &InjectiveModule,
) -> Result<FlangeMatrix> {
    let bx = composite.source().grid();
    let f = composite.source().field();
    let fr = flat.regions(bx)?;
    let er = inj.regions(bx)?;
    let mut entries = Matrix::zeros(f, fr.len(), er.len());
    for (p, fl) in flat.labels.iter().enumerate() {
        for (q, el) in inj.labels.iter().enumerate() {
            let Some(deg) = meeting_degree(fl, el, bx) else { continue };
            let c = bx.index(&deg);
            let (Some(col), Some(row)) = (summand_position(&fr, c, p), summand_position(&er, c, q)) else {
                return Err(Error::Internal("meeting degree outside a label".into()));
            };
            entries.set(p, q, composite.comp(c).get(row, col).clone());
        }
    }
    let rebuilt = materialize_scalar_map(f, bx.len(), &fr, &er, &entries);
    if rebuilt != composite.comps() {
        return Err(Error::Internal("flange map is not given by scalars".into()));
    }
    Ok(MonomialMatrix {
        rows: flat.labels.clone(),
        cols: inj.labels.clone(),
        entries,
    })
}

fn try_flange(m: &FinDetModule) -> Result<FlangePresentation> {
    let cover = try_flat_cover(m)?;
    let hull = try_injective_hull(m)?;
    let composite = cover.map.compose(&hull.map)?;
    let matrix = flange_entries(&composite, &cover.module, &hull.module)?;
    let pres = FlangePresentation { matrix, cover, hull };
    verify_flange(&pres, m).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(pres)
}

/// Flat cover composed with injective hull, verified to have image `M`.
pub fn flange_presentation(m: &FinDetModule) -> Result<FlangePresentation> {
    with_margin_retries(m, try_flange)
}

/// Checks a flange presentation against `M`: the support rule, that the
/// matrix materializes to a module map, and that it factors as the
/// recorded surjection onto `M` followed by the recorded injection.
pub fn verify_flange(pres: &FlangePresentation, m: &FinDetModule) -> Result<()> {
    let mat = &pres.matrix;
    for (p, q, _) in mat.nonzero_entries() {
        if !flat_meets_inj(&mat.rows[p], &mat.cols[q]) {
            return Err(Error::violation(
                "nonzero entry between disjoint labels",
                format!("({p},{q}): {:?} vs {:?}", mat.rows[p], mat.cols[q]),
            ));
        }
    }
    let bx = pres.grid();
    let mm = if m.grid() == bx { m.clone() } else { m.rebox(bx)? };
    let f = mm.field();
    let flat = FlatModule { labels: mat.rows.clone() };
    let inj = InjectiveModule { labels: mat.cols.clone() };
    let fm = flat.materialize(bx, f)?;
    let em = inj.materialize(bx, f)?;
    let comps = materialize_scalar_map(f, bx.len(), &flat.regions(bx)?, &inj.regions(bx)?, &mat.entries);
    let phi = Morphism::new(fm, em, comps)?;
    let cover = Morphism::new(phi.source().clone(), mm.clone(), pres.cover.map.comps().to_vec())?;
    let hull = Morphism::new(mm.clone(), phi.target().clone(), pres.hull.map.comps().to_vec())?;
    if !cover.is_surjective() {
        return Err(Error::violation("flat side does not cover the module", String::new()));
    }
    if let Some(c) = hull.injectivity_witness() {
        return Err(Error::violation("injective side is not an embedding", format!("{:?}", bx.coords(c))));
    }
    if cover.compose(&hull)?.comps() != phi.comps() {
        return Err(Error::violation("matrix does not factor through the module", String::new()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FinDetRegion;
    use crate::poset::RegionKind;

    fn q() -> Field {
        Field::Rational
    }

    fn quotient_by_square() -> FinDetModule {
        let bx = GridBox::new(vec![-1, -1], vec![3, 3]).unwrap();
        let inside = |d: &[i64]| d[0] >= 0 && d[1] >= 0 && d[0] + d[1] <= 1;
        let dims: Vec<usize> = bx.cells().map(|c| usize::from(inside(&bx.coords(c)))).collect();
        let d2 = dims.clone();
        FinDetModule::from_fn(bx, q(), dims, |c, d| {
            let mut m = Matrix::zeros(q(), d2[d], d2[c]);
            if d2[c] == 1 && d2[d] == 1 {
                m.set(0, 0, q().one());
            }
            Ok(m)
        })
        .unwrap()
    }

    fn free_module() -> FinDetModule {
        let bx = GridBox::new(vec![-1, -1], vec![2, 2]).unwrap();
        let r = FinDetRegion::from_fn(bx, RegionKind::Upset, |d| d[0] >= 0 && d[1] >= 0).unwrap();
        FinDetModule::indicator(&r, q())
    }

    #[test]
    fn cogenerators_of_quotient_by_square() {
        let m = quotient_by_square();
        let c = cogenerators(&m).unwrap();
        let labels: Vec<_> = c.iter().map(|(l, k)| (l.b.clone(), l.tau, *k)).collect();
        assert_eq!(labels, vec![(vec![0, 1], Face::empty(), 1), (vec![1, 0], Face::empty(), 1)]);
        let h = injective_hull(&m).unwrap();
        assert_eq!(h.module.labels.len(), 2);
        assert_eq!(generators(&m), vec![(vec![0, 0], 1)]);
    }

    #[test]
    fn hull_of_free_module_is_everything() {
        let m = free_module();
        let h = injective_hull(&m).unwrap();
        assert_eq!(h.module.labels, vec![IndecInjLabel::new(vec![0, 0], Face::full(2))]);
        let res = minimal_injective_resolution(&m).unwrap();
        assert!(res.length() <= 2);
        let flat = minimal_flat_resolution(&m).unwrap();
        assert_eq!(flat.length(), 0);
        assert_eq!(flat.terms[0].labels, vec![IndecFlatLabel::new(vec![0, 0], Face::empty())]);
    }

    #[test]
    fn double_dual_is_identity() {
        let m = quotient_by_square();
        assert_eq!(matlis_dual(&matlis_dual(&m)), m);
        assert!(crate::module::verify_isomorphism(&double_dual_map(&m).unwrap()));
    }

    #[test]
    fn flange_of_free_module() {
        let m = free_module();
        let p = flange_presentation(&m).unwrap();
        assert_eq!(p.matrix.entries, Matrix::from_i64(q(), &[vec![1]]));
        assert_eq!(p.matrix.cols[0].tau, Face::full(2));
    }

    #[test]
    fn zero_module_has_empty_resolutions() {
        let m = FinDetModule::zero(GridBox::new(vec![0], vec![3]).unwrap(), q());
        let r = minimal_injective_resolution(&m).unwrap();
        assert!(r.terms[0].labels.is_empty());
        assert_eq!(r.length(), 0);
        let p = flange_presentation(&m).unwrap();
        assert_eq!((p.matrix.entries.rows(), p.matrix.entries.cols()), (0, 0));
    }
}
