//! Downset hulls and primary decompositions of finitely determined modules.

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::homalg::{injective_hull, InjectiveHull};
use crate::lattice::{canonical_primary_decomposition_downset, check_face_dim, Face, FinDetRegion, IndecInjLabel};
use crate::matrix::Matrix;
use crate::module::{
    cokernel, direct_sum, indicator_sum_findet, kernel, summand_position, vstack_morphisms, FinDetModule,
    FinDetMorphism, Morphism, Representation,
};

/// `M ↪ ⊕ k[D_j]` with indecomposable downsets.
#[derive(Clone, Debug)]
pub struct DownsetHull {
    pub labels: Vec<IndecInjLabel>,
    pub downsets: Vec<FinDetRegion>,
    pub map: FinDetMorphism,
}

impl DownsetHull {
    /// The module on the box the hull was computed on.
    pub fn module(&self) -> &FinDetModule {
        self.map.source()
    }
}

pub fn downset_hull(m: &FinDetModule) -> Result<DownsetHull> {
    let InjectiveHull { module, map, .. } = injective_hull(m)?;
    let bx = map.source().grid().clone();
    let downsets = module
        .labels
        .iter()
        .map(|l| l.to_region(&bx))
        .collect::<Result<Vec<_>>>()?;
    if let Some(c) = map.injectivity_witness() {
        return Err(Error::Internal(format!("downset hull not injective at {:?}", bx.coords(c))));
    }
    Ok(DownsetHull {
        labels: module.labels,
        downsets,
        map,
    })
}

#[derive(Clone, Debug)]
pub struct PrimaryComponent {
    pub tau: Face,
    /// `M / M^τ`.
    pub quotient: FinDetModule,
    pub projection: FinDetMorphism,
}

#[derive(Clone, Debug)]
pub struct PrimaryDecomposition {
    pub components: Vec<PrimaryComponent>,
    /// `M -> ⊕_τ M/M^τ`, injective.
    pub combined: FinDetMorphism,
}

impl PrimaryDecomposition {
    pub fn faces(&self) -> Vec<Face> {
        self.components.iter().map(|c| c.tau).collect()
    }

    pub fn module(&self) -> &FinDetModule {
        self.combined.source()
    }
}

/// The map from `M` to `⊕ k[P]` over the pieces `(j, P)`, `P ⊆ D_j`, read
/// off the hull summand `j` on `P`.
fn restrict_hull(hull: &DownsetHull, pieces: &[(usize, FixedBitSet)]) -> Result<FinDetMorphism> {
    let m = hull.module();
    let bx = m.grid();
    let f = m.field();
    let regions: Vec<FixedBitSet> = hull.downsets.iter().map(|d| d.members().clone()).collect();
    let piece_sets: Vec<FixedBitSet> = pieces.iter().map(|(_, p)| p.clone()).collect();
    let target = indicator_sum_findet(bx, f, &piece_sets)?;
    let comps = bx
        .cells()
        .map(|c| {
            let rows: Vec<usize> = pieces
                .iter()
                .filter(|(_, p)| p.contains(c))
                .map(|&(j, _)| summand_position(&regions, c, j).expect("piece lies in its downset"))
                .collect();
            if rows.is_empty() {
                Matrix::zeros(f, 0, m.dims()[c])
            } else {
                hull.map.comp(c).select_rows(&rows)
            }
        })
        .collect();
    Morphism::new(m.clone(), target, comps)
}

/// `M ↪ ⊕_τ M/M^τ` where `M^τ = ker(M -> E^τ)` and `E^τ` gathers the
/// τ-primary pieces of the hull downsets. With `prune`, components are
/// dropped greedily (in face order) while the combined map stays injective;
/// no minimality is claimed.
pub fn primary_decomposition(m: &FinDetModule, prune: bool) -> Result<PrimaryDecomposition> {
    check_face_dim(m.n())?;
    let hull = downset_hull(m)?;
    let m = hull.module().clone();
    let mut by_face: Vec<(Face, Vec<(usize, FixedBitSet)>)> = Vec::new();
    for (j, d) in hull.downsets.iter().enumerate() {
        for (tau, p) in canonical_primary_decomposition_downset(d)? {
            match by_face.iter_mut().find(|(t, _)| *t == tau) {
                Some((_, v)) => v.push((j, p.members().clone())),
                None => by_face.push((tau, vec![(j, p.members().clone())])),
            }
        }
    }
    by_face.sort_by_key(|(t, _)| *t);
    let mut components = Vec::new();
    for (tau, pieces) in &by_face {
        let to_e = restrict_hull(&hull, pieces)?;
        let (_, incl) = kernel(&to_e)?;
        let (quotient, projection) = cokernel(&incl)?;
        let projection = Morphism::new(m.clone(), quotient.clone(), projection.comps().to_vec())?;
        components.push(PrimaryComponent {
            tau: *tau,
            quotient,
            projection,
        });
    }
    let mut keep = vec![true; components.len()];
    let combined_of = |keep: &[bool]| -> Result<FinDetMorphism> {
        let kept: Vec<&PrimaryComponent> = components.iter().zip(keep).filter(|(_, k)| **k).map(|(c, _)| c).collect();
        if kept.is_empty() {
            return Ok(Morphism::zero(&m, &FinDetModule::zero(m.grid().clone(), m.field())));
        }
        let quotients: Vec<FinDetModule> = kept.iter().map(|c| c.quotient.clone()).collect();
        let (sum, _, _) = direct_sum(&quotients)?;
        let maps: Vec<FinDetMorphism> = kept.iter().map(|c| c.projection.clone()).collect();
        vstack_morphisms(&sum, &maps)
    };
    if prune {
        for k in 0..components.len() {
            keep[k] = false;
            if !combined_of(&keep)?.is_injective() {
                keep[k] = true;
            }
        }
    }
    let combined = combined_of(&keep)?;
    if let Some(c) = combined.injectivity_witness() {
        return Err(Error::Internal(format!(
            "primary decomposition map not injective at {:?}",
            m.grid().coords(c)
        )));
    }
    let components: Vec<PrimaryComponent> = components.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c).collect();
    for c in &components {
        let faces: Vec<Face> = Face::all(m.n())
            .into_iter()
            .filter(|&t| c.quotient.coprimary_test(t).unwrap_or(false))
            .collect();
        if faces != [c.tau] {
            return Err(Error::Internal(format!(
                "component for {:?} is coprimary for {:?}",
                c.tau.to_one_based(),
                faces.iter().map(|t| t.to_one_based()).collect::<Vec<_>>()
            )));
        }
    }
    Ok(PrimaryDecomposition { components, combined })
}

/// Faces of the primary decomposition, in bitmask order.
pub fn associated_faces(m: &FinDetModule) -> Result<Vec<Face>> {
    Ok(primary_decomposition(m, false)?.faces())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::lattice::GridBox;
    use crate::poset::RegionKind;

    fn q() -> Field {
        Field::Rational
    }

    fn strip_union() -> FinDetRegion {
        let bx = GridBox::new(vec![-2, -2], vec![3, 5]).unwrap();
        FinDetRegion::from_fn(bx, RegionKind::Downset, |d| d[1] <= 1 || (d[0] <= 0 && d[1] <= 3)).unwrap()
    }

    #[test]
    fn strip_union_has_two_components() {
        let d = strip_union();
        let m = FinDetModule::indicator(&d, q());
        let dec = primary_decomposition(&m, false).unwrap();
        assert_eq!(dec.faces(), vec![Face::empty(), Face::single(0)]);
        assert!(dec.combined.is_injective());
    }

    #[test]
    fn free_module_is_coprimary_for_the_full_face() {
        let bx = GridBox::new(vec![-1, -1], vec![2, 2]).unwrap();
        let r = FinDetRegion::from_fn(bx, RegionKind::Upset, |d| d[0] >= 0 && d[1] >= 0).unwrap();
        let m = FinDetModule::indicator(&r, q());
        assert_eq!(associated_faces(&m).unwrap(), vec![Face::full(2)]);
    }

    #[test]
    fn coprincipal_downset_has_empty_face() {
        let bx = GridBox::new(vec![-1, -1], vec![3, 3]).unwrap();
        let r = FinDetRegion::from_fn(bx, RegionKind::Downset, |d| d[0] <= 1 && d[1] <= 2).unwrap();
        let m = FinDetModule::indicator(&r, q());
        assert_eq!(associated_faces(&m).unwrap(), vec![Face::empty()]);
        let h = downset_hull(&m).unwrap();
        assert_eq!(h.downsets.len(), 1);
        assert_eq!(h.downsets[0].members(), r.members());
    }

    #[test]
    fn zero_module_has_no_components() {
        let m = FinDetModule::zero(GridBox::new(vec![0, 0], vec![2, 2]).unwrap(), q());
        let dec = primary_decomposition(&m, true).unwrap();
        assert!(dec.components.is_empty());
    }
}
