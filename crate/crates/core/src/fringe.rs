//! Fringe presentations and upset/downset resolutions of encoded modules,
//! computed on `Z^n` after embedding the encoding poset and pulled back.

use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::encoding::{singleton_partition, uptight_encoding, verify_constant_subdivision, Encoding};
use crate::error::{Error, Result};
use crate::homalg::{
    check_exact_sequence, flange_presentation, minimal_flat_resolution, minimal_injective_resolution,
    FlangePresentation, FlatModule, InjectiveModule, MonomialMatrix,
};
use crate::lattice::{Degree, GridBox};
use crate::matrix::{Matrix, Subspace};
use crate::module::{
    box_poset, indicator_sum_encoded, materialize_scalar_map, pushforward, pushforward_unit, verify_isomorphism,
    EncodedModule, FinDetModule, FinDetMorphism, ModuleMorphism, Morphism, Representation,
};
use crate::poset::{embed_into_grid, FinitePoset, GridEmbedding, PosetMorphism, PosetRegion, RegionKind};

/// Rows are upsets, columns downsets; entry `(p, q)` is the scalar of
/// `k[U_p] -> k[D_q]`.
pub type FringeMatrix = MonomialMatrix<PosetRegion, PosetRegion>;

/// A fringe presentation with the embedding `M ↪ ⊕ k[D_q]` whose image
/// certifies that the matrix has image `M`.
#[derive(Clone, Debug)]
pub struct FringePresentation {
    pub matrix: FringeMatrix,
    pub embedding: ModuleMorphism,
}

/// Degrees `ι(π(q))` for each carrier element, with their cells in a box.
struct Pullback {
    carrier: Arc<FinitePoset>,
    degrees: Vec<Degree>,
}

impl Pullback {
    fn new(pi: &PosetMorphism, iota: &GridEmbedding) -> Pullback {
        Pullback {
            carrier: pi.source().clone(),
            degrees: pi.images().iter().map(|&p| iota.coords[p].clone()).collect(),
        }
    }

    fn identity_on_box(bx: &GridBox, carrier: Arc<FinitePoset>) -> Pullback {
        Pullback {
            carrier,
            degrees: bx.cells().map(|c| bx.coords(c)).collect(),
        }
    }

    fn cells(&self, bx: &GridBox) -> Result<Vec<usize>> {
        self.degrees
            .iter()
            .map(|d| {
                if bx.contains(d) {
                    Ok(bx.index(d))
                } else {
                    Err(Error::Internal(format!("{d:?} lies outside the working box")))
                }
            })
            .collect()
    }

    /// Preimages of box regions, with the indices of the nonempty ones.
    fn regions(&self, bx: &GridBox, regions: &[FixedBitSet], kind: RegionKind) -> Result<(Vec<PosetRegion>, Vec<usize>)> {
        let cells = self.cells(bx)?;
        let mut out = Vec::new();
        let mut kept = Vec::new();
        for (j, r) in regions.iter().enumerate() {
            let mut s = self.carrier.empty_set();
            for (q, &c) in cells.iter().enumerate() {
                if r.contains(c) {
                    s.insert(q);
                }
            }
            if !s.is_clear() {
                out.push(PosetRegion::new(self.carrier.clone(), s, kind)?);
                kept.push(j);
            }
        }
        Ok((out, kept))
    }

    /// A box map between indicator sums read on the carrier. Summands with
    /// empty preimage contain no image cell, so bases line up.
    fn morphism(&self, phi: &FinDetMorphism, source: &EncodedModule, target: &EncodedModule) -> Result<ModuleMorphism> {
        let cells = self.cells(phi.source().grid())?;
        Morphism::new(source.clone(), target.clone(), cells.iter().map(|&c| phi.comp(c).clone()).collect())
    }
}

fn members(regions: &[PosetRegion]) -> Vec<FixedBitSet> {
    regions.iter().map(|r| r.members().clone()).collect()
}

fn submatrix(entries: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    entries.select_rows(rows).select_cols(cols)
}

/// The encoding by singletons, for modules given without one.
pub fn trivial_encoding(m: &EncodedModule) -> Result<Encoding> {
    let s = verify_constant_subdivision(m, &singleton_partition(m.poset()))?;
    uptight_encoding(&s)
}

struct Pushed {
    pull: Pullback,
    module: FinDetModule,
    /// `ψ_q: M_q -> H_{π q}` and its inverse.
    witness: Vec<Matrix>,
    witness_inv: Vec<Matrix>,
}

fn push(enc: &Encoding) -> Result<Pushed> {
    let iota = embed_into_grid(enc.h.poset());
    let module = pushforward(&enc.h, &iota)?;
    if !verify_isomorphism(&pushforward_unit(&enc.h, &iota, &module)?) {
        return Err(Error::Internal("pushforward does not restrict back to the encoding module".into()));
    }
    let witness = enc.witness.comps().to_vec();
    let witness_inv = witness
        .iter()
        .map(|g| g.inverse().ok_or_else(|| Error::Internal("encoding witness is not invertible".into())))
        .collect::<Result<_>>()?;
    Ok(Pushed {
        pull: Pullback::new(&enc.pi, &iota),
        module,
        witness,
        witness_inv,
    })
}

fn pull_flange(
    pull: &Pullback,
    flange: &FlangePresentation,
    m: &EncodedModule,
    witness: &[Matrix],
) -> Result<FringePresentation> {
    let bx = flange.grid();
    let f = m.field();
    let flat = FlatModule { labels: flange.matrix.rows.clone() };
    let inj = InjectiveModule { labels: flange.matrix.cols.clone() };
    let (rows, kept_rows) = pull.regions(bx, &flat.regions(bx)?, RegionKind::Upset)?;
    let (cols, kept_cols) = pull.regions(bx, &inj.regions(bx)?, RegionKind::Downset)?;
    let entries = submatrix(&flange.matrix.entries, &kept_rows, &kept_cols);
    let target = indicator_sum_encoded(m.poset(), f, &members(&cols))?;
    let cells = pull.cells(bx)?;
    let comps = cells
        .iter()
        .enumerate()
        .map(|(q, &c)| flange.hull.map.comp(c).mul(&witness[q]))
        .collect();
    let embedding = Morphism::new(m.clone(), target, comps)?;
    let pres = FringePresentation {
        matrix: MonomialMatrix { rows, cols, entries },
        embedding,
    };
    verify_fringe(&pres.matrix, m, &pres.embedding).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(pres)
}

/// Embeds the encoding poset, takes the flange presentation of the
/// pushforward and replaces each label by its preimage under `ι∘π`.
pub fn fringe_presentation(enc: &Encoding) -> Result<FringePresentation> {
    let pushed = push(enc)?;
    let flange = flange_presentation(&pushed.module)?;
    pull_flange(&pushed.pull, &flange, enc.witness.source(), &pushed.witness)
}

/// The fringe presentation of a module on a box, read off its flange
/// presentation directly. Labels live on the box poset.
pub fn fringe_presentation_box(m: &FinDetModule) -> Result<FringePresentation> {
    let encoded = m.to_encoded()?;
    let flange = flange_presentation(m)?;
    let pull = Pullback::identity_on_box(m.grid(), encoded.poset().clone());
    let witness: Vec<Matrix> = m.grid().cells().map(|c| Matrix::identity(m.field(), m.dims()[c])).collect();
    pull_flange(&pull, &flange, &encoded, &witness)
}

/// Checks that `matrix` presents `m`: labels are upsets and downsets of
/// `m`'s carrier, nonzero entries only where labels meet, the scalars form
/// a module map, and its image equals that of the injective `embedding`.
pub fn verify_fringe(matrix: &FringeMatrix, m: &EncodedModule, embedding: &ModuleMorphism) -> Result<()> {
    let poset = m.poset();
    if matrix.entries.rows() != matrix.rows.len() || matrix.entries.cols() != matrix.cols.len() {
        return Err(Error::Invalid("matrix shape does not match its labels".into()));
    }
    for r in &matrix.rows {
        if r.poset() != poset || r.kind() != RegionKind::Upset {
            return Err(Error::violation("row label is not an upset of the carrier", format!("{r:?}")));
        }
    }
    for c in &matrix.cols {
        if c.poset() != poset || c.kind() != RegionKind::Downset {
            return Err(Error::violation("column label is not a downset of the carrier", format!("{c:?}")));
        }
    }
    for (p, q, _) in matrix.nonzero_entries() {
        if matrix.rows[p].members().is_disjoint(matrix.cols[q].members()) {
            return Err(Error::violation(
                "nonzero entry between disjoint labels",
                format!("({p},{q}): {:?} vs {:?}", matrix.rows[p], matrix.cols[q]),
            ));
        }
    }
    let f = m.field();
    let ups = members(&matrix.rows);
    let downs = members(&matrix.cols);
    let source = indicator_sum_encoded(poset, f, &ups)?;
    let target = indicator_sum_encoded(poset, f, &downs)?;
    let comps = materialize_scalar_map(f, poset.len(), &ups, &downs, &matrix.entries);
    let phi = Morphism::new(source, target.clone(), comps)?;
    if embedding.source() != m || embedding.target() != &target {
        return Err(Error::Mismatch("embedding does not run from the module to the downset sum".into()));
    }
    if let Some(v) = embedding.injectivity_witness() {
        return Err(Error::violation("embedding is not injective", poset.name(v).to_string()));
    }
    for v in 0..poset.len() {
        if Subspace::from_columns(phi.comp(v)) != Subspace::from_columns(embedding.comp(v)) {
            return Err(Error::violation("image of the matrix differs from the module", poset.name(v).to_string()));
        }
    }
    Ok(())
}

pub fn is_fringe_presentation(matrix: &FringeMatrix, m: &EncodedModule, embedding: &ModuleMorphism) -> bool {
    verify_fringe(matrix, m, embedding).is_ok()
}

/// A resolution by indicator modules. For upsets the augmentation is
/// `F_0 -> M` and `maps[j]: F_{j+1} -> F_j`; for downsets it is `M -> E^0`
/// and `maps[j]: E^j -> E^{j+1}`. Differential rows label the map's source.
#[derive(Clone, Debug)]
pub struct IndicatorResolution {
    pub kind: RegionKind,
    pub terms: Vec<Vec<PosetRegion>>,
    pub modules: Vec<EncodedModule>,
    pub augmentation: ModuleMorphism,
    pub maps: Vec<ModuleMorphism>,
    pub differentials: Vec<FringeMatrix>,
}

impl IndicatorResolution {
    pub fn length(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    /// The upset presentation or downset copresentation: the first differential.
    pub fn presentation(&self) -> Option<&FringeMatrix> {
        self.differentials.first()
    }

    pub fn check_exact(&self) -> Result<()> {
        match self.kind {
            RegionKind::Downset => {
                let mut seq = vec![&self.augmentation];
                seq.extend(self.maps.iter());
                check_exact_sequence(self.augmentation.source(), &seq)
            }
            _ => {
                let mut seq: Vec<&ModuleMorphism> = self.maps.iter().rev().collect();
                seq.push(&self.augmentation);
                check_exact_sequence(seq[0].source(), &seq)
            }
        }
    }

    /// Whether every term's regions are unions of fibers of `pi`.
    pub fn dominates(&self, pi: &PosetMorphism) -> bool {
        let fibers = pi.fibers();
        self.terms.iter().flatten().all(|r| {
            fibers
                .iter()
                .all(|fib| fib.is_subset(r.members()) || fib.is_disjoint(r.members()))
        })
    }
}

struct PulledTerms {
    regions: Vec<Vec<PosetRegion>>,
    kept: Vec<Vec<usize>>,
    modules: Vec<EncodedModule>,
}

fn pull_terms(pull: &Pullback, bx: &GridBox, m: &EncodedModule, boxes: &[Vec<FixedBitSet>], kind: RegionKind) -> Result<PulledTerms> {
    let mut out = PulledTerms {
        regions: Vec::new(),
        kept: Vec::new(),
        modules: Vec::new(),
    };
    for b in boxes {
        let (r, k) = pull.regions(bx, b, kind)?;
        out.modules.push(indicator_sum_encoded(m.poset(), m.field(), &members(&r))?);
        out.regions.push(r);
        out.kept.push(k);
    }
    // Trailing terms may vanish on the carrier.
    while out.regions.len() > 1 && out.regions.last().is_some_and(|r| r.is_empty()) {
        out.regions.pop();
        out.kept.pop();
        out.modules.pop();
    }
    Ok(out)
}

/// Pulls back a minimal flat resolution of the pushforward.
pub fn upset_resolution(enc: &Encoding) -> Result<IndicatorResolution> {
    let m = enc.witness.source();
    let pushed = push(enc)?;
    let res = minimal_flat_resolution(&pushed.module)?;
    let bx = res.grid().clone();
    let boxes: Vec<Vec<FixedBitSet>> = res.terms.iter().map(|t| t.regions(&bx)).collect::<Result<_>>()?;
    let terms = pull_terms(&pushed.pull, &bx, m, &boxes, RegionKind::Upset)?;
    let cells = pushed.pull.cells(&bx)?;
    let aug_comps = cells
        .iter()
        .enumerate()
        .map(|(q, &c)| pushed.witness_inv[q].mul(res.augmentation.comp(c)))
        .collect();
    let augmentation = Morphism::new(terms.modules[0].clone(), m.clone(), aug_comps)?;
    let mut maps = Vec::new();
    let mut differentials = Vec::new();
    for j in 0..terms.modules.len() - 1 {
        maps.push(pushed.pull.morphism(&res.maps[j], &terms.modules[j + 1], &terms.modules[j])?);
        differentials.push(MonomialMatrix {
            rows: terms.regions[j + 1].clone(),
            cols: terms.regions[j].clone(),
            entries: submatrix(&res.differentials[j].entries, &terms.kept[j + 1], &terms.kept[j]),
        });
    }
    let out = IndicatorResolution {
        kind: RegionKind::Upset,
        terms: terms.regions,
        modules: terms.modules,
        augmentation,
        maps,
        differentials,
    };
    out.check_exact().map_err(|e| Error::Internal(e.to_string()))?;
    Ok(out)
}

/// Pulls back a minimal injective resolution of the pushforward.
pub fn downset_resolution(enc: &Encoding) -> Result<IndicatorResolution> {
    let m = enc.witness.source();
    let pushed = push(enc)?;
    let res = minimal_injective_resolution(&pushed.module)?;
    let bx = res.grid().clone();
    let boxes: Vec<Vec<FixedBitSet>> = res.terms.iter().map(|t| t.regions(&bx)).collect::<Result<_>>()?;
    let terms = pull_terms(&pushed.pull, &bx, m, &boxes, RegionKind::Downset)?;
    let cells = pushed.pull.cells(&bx)?;
    let aug_comps = cells
        .iter()
        .enumerate()
        .map(|(q, &c)| res.augmentation.comp(c).mul(&pushed.witness[q]))
        .collect();
    let augmentation = Morphism::new(m.clone(), terms.modules[0].clone(), aug_comps)?;
    let mut maps = Vec::new();
    let mut differentials = Vec::new();
    for j in 0..terms.modules.len() - 1 {
        maps.push(pushed.pull.morphism(&res.maps[j], &terms.modules[j], &terms.modules[j + 1])?);
        differentials.push(MonomialMatrix {
            rows: terms.regions[j].clone(),
            cols: terms.regions[j + 1].clone(),
            entries: submatrix(&res.differentials[j].entries, &terms.kept[j], &terms.kept[j + 1]),
        });
    }
    let out = IndicatorResolution {
        kind: RegionKind::Downset,
        terms: terms.regions,
        modules: terms.modules,
        augmentation,
        maps,
        differentials,
    };
    out.check_exact().map_err(|e| Error::Internal(e.to_string()))?;
    Ok(out)
}

/// The box poset of `bx` with the module read on it, for callers that want
/// box-carrier labels.
pub fn box_carrier(m: &FinDetModule) -> Result<(Arc<FinitePoset>, EncodedModule)> {
    let (poset, _) = box_poset(m.grid())?;
    Ok((poset, m.to_encoded()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use std::collections::HashMap;

    fn q() -> Field {
        Field::Rational
    }

    fn bar_module(len: usize, bars: &[(usize, usize)]) -> EncodedModule {
        let p = Arc::new(FinitePoset::chain(len));
        let regions: Vec<FixedBitSet> = bars
            .iter()
            .map(|&(a, b)| {
                let mut s = p.empty_set();
                s.insert_range(a..b);
                s
            })
            .collect();
        indicator_sum_encoded(&p, q(), &regions).unwrap()
    }

    #[test]
    fn single_bar_presentation_is_one_by_one() {
        let m = bar_module(6, &[(1, 4)]);
        let enc = trivial_encoding(&m).unwrap();
        let pres = fringe_presentation(&enc).unwrap();
        assert_eq!(pres.matrix.entries.rows(), 1);
        assert_eq!(pres.matrix.entries.cols(), 1);
        assert_eq!(pres.matrix.rows[0].ids(), vec!["1", "2", "3", "4", "5"]);
        assert_eq!(pres.matrix.cols[0].ids(), vec!["0", "1", "2", "3"]);
    }

    #[test]
    fn single_bar_upset_resolution_has_two_rays() {
        let m = bar_module(6, &[(1, 4)]);
        let enc = trivial_encoding(&m).unwrap();
        let res = upset_resolution(&enc).unwrap();
        assert_eq!(res.length(), 1);
        assert_eq!(res.terms[0][0].ids(), vec!["1", "2", "3", "4", "5"]);
        assert_eq!(res.terms[1][0].ids(), vec!["4", "5"]);
        assert!(res.dominates(&enc.pi));
        let down = downset_resolution(&enc).unwrap();
        assert_eq!(down.terms[0][0].ids(), vec!["0", "1", "2", "3"]);
        assert_eq!(down.length(), 1);
    }

    #[test]
    fn disjoint_support_entry_is_rejected() {
        let m = bar_module(4, &[(0, 2)]);
        let p = m.poset().clone();
        let up = PosetRegion::from_ids(p.clone(), &["2", "3"], RegionKind::Upset).unwrap();
        let down = PosetRegion::from_ids(p.clone(), &["0", "1"], RegionKind::Downset).unwrap();
        let matrix = MonomialMatrix {
            rows: vec![up],
            cols: vec![down.clone()],
            entries: Matrix::from_i64(q(), &[vec![1]]),
        };
        let target = indicator_sum_encoded(&p, q(), &[down.members().clone()]).unwrap();
        let emb = Morphism::identity(&m);
        let emb = Morphism::new(m.clone(), target, emb.comps().to_vec()).unwrap();
        let err = verify_fringe(&matrix, &m, &emb).unwrap_err();
        assert!(matches!(err, Error::Violation { .. }));
    }

    #[test]
    fn crown_presentation() {
        let e = |a: &str, b: &str| (a.to_string(), b.to_string());
        let names = ["B", "L", "R", "T"].map(String::from).to_vec();
        let p = Arc::new(
            FinitePoset::from_relation(names, &[e("L", "T"), e("R", "T"), e("L", "B"), e("R", "B")]).unwrap(),
        );
        let idx = |s: &str| p.index_of(s).unwrap();
        let scalar = |x: i64| Matrix::from_i64(q(), &[vec![x]]);
        let mut maps = HashMap::new();
        maps.insert((idx("L"), idx("T")), scalar(1));
        maps.insert((idx("R"), idx("T")), scalar(2));
        maps.insert((idx("L"), idx("B")), scalar(1));
        maps.insert((idx("R"), idx("B")), scalar(1));
        let m = EncodedModule::from_cover_map(p, q(), vec![1; 4], maps).unwrap();
        let enc = trivial_encoding(&m).unwrap();
        let res = upset_resolution(&enc).unwrap();
        let pres = res.presentation().unwrap();
        let ids = |rs: &[PosetRegion]| rs.iter().map(|r| r.ids()).collect::<Vec<_>>();
        assert_eq!(ids(&pres.cols), vec![vec!["B", "L", "T"], vec!["B", "R", "T"]]);
        assert_eq!(ids(&pres.rows), vec![vec!["B"], vec!["T"]]);
        let fringe = fringe_presentation(&enc).unwrap();
        assert!(is_fringe_presentation(&fringe.matrix, &m, &fringe.embedding));
    }
}
