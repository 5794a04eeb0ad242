//! Multifiltered simplicial complexes and their persistent homology.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::lattice::{Degree, GridBox};
use crate::matrix::{Matrix, Subspace};
use crate::module::{box_poset, EncodedModule, FinDetModule};
use crate::poset::{FinitePoset, PosetMorphism};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredSimplex {
    pub vertices: Vec<String>,
    /// Minimal degrees of entry; the simplex is present on the upset they generate.
    pub entries: Vec<Degree>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiFiltration {
    pub n: usize,
    pub simplices: Vec<FilteredSimplex>,
}

fn dominated(entries: &[Degree], q: &[i64]) -> bool {
    entries.iter().any(|e| e.iter().zip(q).all(|(a, b)| a <= b))
}

/// A validated filtration: simplices sorted by dimension, then vertex list.
#[derive(Clone, Debug)]
struct Complex {
    simplices: Vec<FilteredSimplex>,
    /// Global indices of the simplices of each dimension.
    by_dim: Vec<Vec<usize>>,
    /// Position of each simplex within its dimension.
    slot: Vec<usize>,
    /// Faces of codimension one, with their signs.
    boundary: Vec<Vec<(usize, i64)>>,
}

impl MultiFiltration {
    /// Checks shapes and that every face of a simplex enters no later than it.
    pub fn validate(&self) -> Result<()> {
        self.complex().map(|_| ())
    }

    fn complex(&self) -> Result<Complex> {
        let mut simplices = Vec::with_capacity(self.simplices.len());
        for s in &self.simplices {
            let mut v = s.vertices.clone();
            v.sort();
            v.dedup();
            if v.is_empty() || v.len() != s.vertices.len() {
                return Err(Error::Invalid(format!("simplex {:?} has empty or repeated vertices", s.vertices)));
            }
            if s.entries.is_empty() {
                return Err(Error::Invalid(format!("simplex {v:?} has no entry degree")));
            }
            if let Some(e) = s.entries.iter().find(|e| e.len() != self.n) {
                return Err(Error::Invalid(format!("entry {e:?} of {v:?} is not in {} parameters", self.n)));
            }
            simplices.push(FilteredSimplex {
                vertices: v,
                entries: s.entries.clone(),
            });
        }
        simplices.sort_by(|a, b| (a.vertices.len(), &a.vertices).cmp(&(b.vertices.len(), &b.vertices)));
        if let Some(w) = simplices.windows(2).find(|w| w[0].vertices == w[1].vertices) {
            return Err(Error::Invalid(format!("simplex {:?} listed twice", w[0].vertices)));
        }
        let index: HashMap<&[String], usize> = simplices
            .iter()
            .enumerate()
            .map(|(k, s)| (s.vertices.as_slice(), k))
            .collect();
        let top = simplices.iter().map(|s| s.vertices.len()).max().unwrap_or(0);
        let mut by_dim = vec![Vec::new(); top + 1];
        let mut slot = vec![0; simplices.len()];
        for (k, s) in simplices.iter().enumerate() {
            let d = s.vertices.len() - 1;
            slot[k] = by_dim[d].len();
            by_dim[d].push(k);
        }
        let mut boundary = Vec::with_capacity(simplices.len());
        for s in &simplices {
            let mut faces = Vec::new();
            if s.vertices.len() > 1 {
                for j in 0..s.vertices.len() {
                    let mut face = s.vertices.clone();
                    face.remove(j);
                    let &k = index.get(face.as_slice()).ok_or_else(|| {
                        Error::violation("face missing from the complex", format!("{face:?} of {:?}", s.vertices))
                    })?;
                    for e in &s.entries {
                        if !dominated(&simplices[k].entries, e) {
                            return Err(Error::violation(
                                "face enters after its coface",
                                format!("{:?} is absent at {e:?} where {:?} is present", face, s.vertices),
                            ));
                        }
                    }
                    faces.push((k, if j % 2 == 0 { 1 } else { -1 }));
                }
            }
            boundary.push(faces);
        }
        Ok(Complex {
            simplices,
            by_dim,
            slot,
            boundary,
        })
    }
}

impl Complex {
    fn count(&self, d: usize) -> usize {
        self.by_dim.get(d).map_or(0, |v| v.len())
    }

    /// `∂_d: C_d -> C_{d-1}` on all simplices, columns in dimension order.
    fn boundary_matrix(&self, field: Field, d: usize) -> Matrix {
        let rows = if d == 0 { 0 } else { self.count(d - 1) };
        let mut m = Matrix::zeros(field, rows, self.count(d));
        if d == 0 {
            return m;
        }
        for (col, &k) in self.by_dim.get(d).into_iter().flatten().enumerate() {
            for &(face, sign) in &self.boundary[k] {
                m.set(self.slot[face], col, field.from_i64(sign));
            }
        }
        m
    }

    fn present(&self, q: &[i64]) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.simplices.len());
        for (k, simplex) in self.simplices.iter().enumerate() {
            if dominated(&simplex.entries, q) {
                s.insert(k);
            }
        }
        s
    }

    fn present_in_dim(&self, s: &FixedBitSet, d: usize) -> Vec<usize> {
        self.by_dim
            .get(d)
            .into_iter()
            .flatten()
            .enumerate()
            .filter(|(_, &k)| s.contains(k))
            .map(|(slot, _)| slot)
            .collect()
    }
}

/// `H_d` of one subcomplex: representative cycles (columns in the chain
/// space of all `d`-simplices) and a solver `[reps | boundaries]`.
#[derive(Clone, Debug)]
struct HomologyAt {
    reps: Matrix,
    solver: Matrix,
}

impl HomologyAt {
    fn dim(&self) -> usize {
        self.reps.cols()
    }

    fn coords(&self, cycles: &Matrix) -> Matrix {
        let x = self
            .solver
            .solve(cycles)
            .expect("cycles of a subcomplex are cycles of a larger one");
        x.select_rows(&(0..self.dim()).collect::<Vec<_>>())
    }
}

struct Homology<'a> {
    complex: &'a Complex,
    field: Field,
    degree: usize,
    d_here: Matrix,
    d_above: Matrix,
}

impl<'a> Homology<'a> {
    fn new(complex: &'a Complex, field: Field, degree: usize) -> Homology<'a> {
        Homology {
            complex,
            field,
            degree,
            d_here: complex.boundary_matrix(field, degree),
            d_above: complex.boundary_matrix(field, degree + 1),
        }
    }

    /// Representatives are picked greedily from the canonical cycle basis,
    /// so in degree 0 each component is represented by its first vertex.
    fn at(&self, s: &FixedBitSet) -> HomologyAt {
        let f = self.field;
        let n_here = self.complex.count(self.degree);
        let cells = self.complex.present_in_dim(s, self.degree);
        let above = self.complex.present_in_dim(s, self.degree + 1);
        let kernel = self.d_here.select_cols(&cells).kernel();
        let mut lift = Matrix::zeros(f, n_here, cells.len());
        for (j, &slot) in cells.iter().enumerate() {
            lift.set(slot, j, f.one());
        }
        let cycles = lift.mul(&kernel);
        let bounds = self.d_above.select_cols(&above).column_space();
        let mut span = Subspace::from_columns(&bounds);
        let mut reps = Vec::new();
        for z in cycles.column_vectors() {
            if !span.contains(&z) {
                span = span.sum(&Subspace::from_vectors(f, n_here, std::slice::from_ref(&z)));
                reps.push(z);
            }
        }
        let reps = Matrix::from_columns(f, n_here, &reps);
        let solver = reps.hstack(&bounds);
        HomologyAt { reps, solver }
    }

    fn map(&self, from: &HomologyAt, to: &HomologyAt) -> Matrix {
        to.coords(&from.reps)
    }
}

/// `H_i` of a filtration as a finitely determined module.
#[derive(Clone, Debug)]
pub struct PersistenceModule {
    pub degree: usize,
    pub module: FinDetModule,
}

/// The box `[min - 1, max + 1]` over all entry coordinates.
pub fn working_box(f: &MultiFiltration) -> Result<GridBox> {
    let mut lo = vec![i64::MAX; f.n];
    let mut hi = vec![i64::MIN; f.n];
    for s in &f.simplices {
        for e in &s.entries {
            for i in 0..f.n {
                lo[i] = lo[i].min(e[i]);
                hi[i] = hi[i].max(e[i]);
            }
        }
    }
    if f.simplices.is_empty() {
        return GridBox::new(vec![-1; f.n], vec![1; f.n]);
    }
    GridBox::new(lo.iter().map(|x| x - 1).collect(), hi.iter().map(|x| x + 1).collect())
}

/// Critical values per axis; each box coordinate is replaced by the largest
/// critical value at most it, since the complex is constant in between.
fn compressed_cells(f: &MultiFiltration, bx: &GridBox) -> (Vec<Degree>, Vec<usize>) {
    let mut critical: Vec<Vec<i64>> = vec![Vec::new(); f.n];
    for s in &f.simplices {
        for e in &s.entries {
            for i in 0..f.n {
                critical[i].push(e[i]);
            }
        }
    }
    for c in &mut critical {
        c.sort_unstable();
        c.dedup();
    }
    let mut ids: BTreeMap<Degree, usize> = BTreeMap::new();
    let mut reps: Vec<Degree> = Vec::new();
    let cell_rep = bx
        .cells()
        .map(|c| {
            let q = bx.coords(c);
            let key: Degree = (0..f.n)
                .map(|i| {
                    let k = critical[i].partition_point(|&v| v <= q[i]);
                    if k == 0 {
                        bx.lo()[i]
                    } else {
                        critical[i][k - 1]
                    }
                })
                .collect();
            *ids.entry(key.clone()).or_insert_with(|| {
                reps.push(key);
                reps.len() - 1
            })
        })
        .collect();
    (reps, cell_rep)
}

/// Homology in degree `i` at every box degree, with maps induced by inclusion.
pub fn persistent_homology(f: &MultiFiltration, degree: usize, field: Field) -> Result<PersistenceModule> {
    let complex = f.complex()?;
    let bx = working_box(f)?;
    let (reps, cell_rep) = compressed_cells(f, &bx);
    let h = Homology::new(&complex, field, degree);
    let at: Vec<HomologyAt> = reps.par_iter().map(|q| h.at(&complex.present(q))).collect();
    let dims = cell_rep.iter().map(|&r| at[r].dim()).collect();
    let mut cache: HashMap<(usize, usize), Matrix> = HashMap::new();
    let module = FinDetModule::from_fn(bx, field, dims, |c, d| {
        let (a, b) = (cell_rep[c], cell_rep[d]);
        if a == b {
            return Ok(Matrix::identity(field, at[a].dim()));
        }
        Ok(cache.entry((a, b)).or_insert_with(|| h.map(&at[a], &at[b])).clone())
    })?;
    Ok(PersistenceModule { degree, module })
}

/// The encoding by distinct subcomplexes: `π` sends each box degree to the
/// subcomplex present there, ordered by inclusion, and `H` is homology.
#[derive(Clone, Debug)]
pub struct NaturalEncoding {
    pub pi: PosetMorphism,
    pub h: EncodedModule,
    /// Simplices of each subcomplex, by vertex lists.
    pub subcomplexes: Vec<Vec<Vec<String>>>,
}

pub fn natural_encoding(f: &MultiFiltration, degree: usize, field: Field) -> Result<NaturalEncoding> {
    let complex = f.complex()?;
    let bx = working_box(f)?;
    let (box_p, _) = box_poset(&bx)?;
    let mut distinct: Vec<FixedBitSet> = Vec::new();
    let mut lookup: HashMap<FixedBitSet, usize> = HashMap::new();
    let map: Vec<usize> = bx
        .cells()
        .map(|c| {
            let s = complex.present(&bx.coords(c));
            *lookup.entry(s.clone()).or_insert_with(|| {
                distinct.push(s);
                distinct.len() - 1
            })
        })
        .collect();
    let width = distinct.len().saturating_sub(1).to_string().len();
    let names: Vec<String> = (0..distinct.len()).map(|k| format!("K{k:0width$}")).collect();
    let (poset, order) = FinitePoset::from_leq_fn(names, |a, b| distinct[a].is_subset(&distinct[b]))?;
    let poset = Arc::new(poset);
    let hom = Homology::new(&complex, field, degree);
    let at: Vec<HomologyAt> = distinct.par_iter().map(|s| hom.at(s)).collect();
    // order[k] is the poset element of subcomplex k.
    let mut sub_of = vec![0; distinct.len()];
    for (k, &p) in order.iter().enumerate() {
        sub_of[p] = k;
    }
    let dims = (0..poset.len()).map(|p| at[sub_of[p]].dim()).collect();
    let maps = poset
        .covers()
        .iter()
        .map(|&(a, b)| hom.map(&at[sub_of[a]], &at[sub_of[b]]))
        .collect();
    let h = EncodedModule::new(poset.clone(), field, dims, maps)?;
    let pi = PosetMorphism::new(box_p, poset, map.iter().map(|&k| order[k]).collect())?;
    let subcomplexes = (0..distinct.len())
        .map(|p| {
            distinct[sub_of[p]]
                .ones()
                .map(|k| complex.simplices[k].vertices.clone())
                .collect()
        })
        .collect();
    Ok(NaturalEncoding { pi, h, subcomplexes })
}

/// Two vertices entering at `(1,0)` and `(0,1)` joined by an edge at `(1,1)`.
pub fn two_vertex_example() -> MultiFiltration {
    let s = |v: &[&str], e: &[i64]| FilteredSimplex {
        vertices: v.iter().map(|x| x.to_string()).collect(),
        entries: vec![e.to_vec()],
    };
    MultiFiltration {
        n: 2,
        simplices: vec![s(&["u"], &[1, 0]), s(&["v"], &[0, 1]), s(&["u", "v"], &[1, 1])],
    }
}
