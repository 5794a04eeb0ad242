//! JSON forms of posets, regions, modules, morphisms, monomial matrices,
//! encodings, filtrations and decomposition reports. Scalars are exact
//! strings; element and degree keys make every object deterministic.
//!
//! Box regions store cells as run lengths in cell order (last axis
//! fastest), alternating absent and present runs and starting with an
//! absent run, which may be zero.

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde_json::{json, Map, Value};

use crate::encoding::Encoding;
use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::filtration::MultiFiltration;
use crate::homalg::{FlangeMatrix, MonomialMatrix};
use crate::lattice::{Degree, Face, FinDetRegion, GridBox, IndecFlatLabel, IndecInjLabel};
use crate::matrix::Matrix;
use crate::module::{EncodedModule, FinDetModule, ModuleMorphism, Morphism, Representation};
use crate::poset::{FinitePoset, PosetMorphism, PosetRegion, RegionKind};
use crate::primary::PrimaryDecomposition;

fn err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{path}: {msg}"))
}

fn get<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| err(path, format!("missing field {key:?}")))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(path, "expected an array"))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| err(path, "expected an object"))
}

fn string<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| err(path, "expected a string"))
}

fn uint(v: &Value, path: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| err(path, "expected a nonnegative integer"))
}

fn int(v: &Value, path: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| err(path, "expected an integer"))
}

fn strings(v: &Value, path: &str) -> Result<Vec<String>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(k, x)| Ok(string(x, &format!("{path}[{k}]"))?.to_string()))
        .collect()
}

fn degree(v: &Value, path: &str) -> Result<Degree> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(k, x)| int(x, &format!("{path}[{k}]")))
        .collect()
}

pub fn field_from_json(v: &Value, path: &str) -> Result<Field> {
    string(v, path)?.parse().map_err(|e: Error| err(path, e))
}

pub fn scalar_to_json(f: Field, s: &Scalar) -> Value {
    Value::String(f.format(s))
}

/// Accepts exact strings or JSON integers.
pub fn scalar_from_json(f: Field, v: &Value, path: &str) -> Result<Scalar> {
    match v {
        Value::String(s) => f.parse(s).map_err(|e| err(path, e)),
        Value::Number(n) if n.is_i64() => Ok(f.from_i64(n.as_i64().expect("checked"))),
        _ => Err(err(path, "expected a scalar string or integer")),
    }
}

pub fn matrix_to_json(m: &Matrix) -> Value {
    let f = m.field();
    Value::Array(
        (0..m.rows())
            .map(|r| Value::Array(m.row(r).iter().map(|s| scalar_to_json(f, s)).collect()))
            .collect(),
    )
}

pub fn matrix_from_json(f: Field, v: &Value, rows: usize, cols: usize, path: &str) -> Result<Matrix> {
    let rs = array(v, path)?;
    if rs.len() != rows {
        return Err(err(path, format!("expected {rows} rows, found {}", rs.len())));
    }
    let mut out = Vec::with_capacity(rows);
    for (r, row) in rs.iter().enumerate() {
        let p = format!("{path}[{r}]");
        let entries = array(row, &p)?;
        if entries.len() != cols {
            return Err(err(&p, format!("expected {cols} entries, found {}", entries.len())));
        }
        out.push(
            entries
                .iter()
                .enumerate()
                .map(|(c, x)| scalar_from_json(f, x, &format!("{p}[{c}]")))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(Matrix::from_rows(f, out, cols))
}

pub fn degree_key(q: &[i64]) -> String {
    q.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_degree_key(s: &str, n: usize, path: &str) -> Result<Degree> {
    let q: Degree = s
        .split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|_| err(path, format!("bad degree key {s:?}"))))
        .collect::<Result<_>>()?;
    if q.len() != n {
        return Err(err(path, format!("degree key {s:?} is not in {n} coordinates")));
    }
    Ok(q)
}

// Posets and regions.

/// `{"elements": [...], "relations": [[a, b], ...]}`; relations are closed
/// up transitively, and the covers are written back.
pub fn poset_to_json(p: &FinitePoset) -> Value {
    json!({
        "elements": p.elements(),
        "relations": p.covers_named().iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
    })
}

pub fn poset_from_json(v: &Value, path: &str) -> Result<FinitePoset> {
    let elements = strings(get(v, "elements", path)?, &format!("{path}.elements"))?;
    let rp = format!("{path}.relations");
    let relations = match v.get("relations") {
        None => Vec::new(),
        Some(r) => array(r, &rp)?
            .iter()
            .enumerate()
            .map(|(k, pair)| {
                let p = format!("{rp}[{k}]");
                let ab = strings(pair, &p)?;
                if ab.len() != 2 {
                    return Err(err(&p, "a relation is a pair"));
                }
                Ok((ab[0].clone(), ab[1].clone()))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    FinitePoset::from_relation(elements, &relations)
}

fn kind_name(k: RegionKind) -> &'static str {
    match k {
        RegionKind::Upset => "upset",
        RegionKind::Downset => "downset",
        RegionKind::Interval => "interval",
    }
}

fn kind_from_json(v: &Value, path: &str) -> Result<RegionKind> {
    match string(v, path)? {
        "upset" => Ok(RegionKind::Upset),
        "downset" => Ok(RegionKind::Downset),
        "interval" => Ok(RegionKind::Interval),
        other => Err(err(path, format!("unknown region kind {other:?}"))),
    }
}

pub fn region_to_json(r: &PosetRegion) -> Value {
    json!({ "kind": kind_name(r.kind()), "members": r.ids() })
}

pub fn region_from_json(poset: &Arc<FinitePoset>, v: &Value, path: &str) -> Result<PosetRegion> {
    let kind = kind_from_json(get(v, "kind", path)?, &format!("{path}.kind"))?;
    let ids = strings(get(v, "members", path)?, &format!("{path}.members"))?;
    let members = poset.set_from_ids(&ids).map_err(|e| err(path, e))?;
    PosetRegion::new(poset.clone(), members, kind)
}

/// A region together with its poset, as used by standalone region files.
pub fn region_file_from_json(v: &Value) -> Result<PosetRegion> {
    let poset = Arc::new(poset_from_json(get(v, "poset", "$")?, "$.poset")?);
    region_from_json(&poset, v, "$")
}

pub fn region_file_to_json(r: &PosetRegion) -> Value {
    let mut v = region_to_json(r);
    v["poset"] = poset_to_json(r.poset());
    v
}

pub fn box_to_json(bx: &GridBox) -> Value {
    json!({ "lo": bx.lo(), "hi": bx.hi() })
}

pub fn box_from_json(v: &Value, path: &str) -> Result<GridBox> {
    let lo = degree(get(v, "lo", path)?, &format!("{path}.lo"))?;
    let hi = degree(get(v, "hi", path)?, &format!("{path}.hi"))?;
    GridBox::new(lo, hi).map_err(|e| err(path, e))
}

pub fn runs_of(bits: &FixedBitSet, len: usize) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut count = 0;
    for c in 0..len {
        if bits.contains(c) != current {
            runs.push(count);
            current = !current;
            count = 0;
        }
        count += 1;
    }
    runs.push(count);
    runs
}

pub fn bits_of_runs(runs: &[usize], len: usize, path: &str) -> Result<FixedBitSet> {
    let mut bits = FixedBitSet::with_capacity(len);
    let mut pos = 0;
    for (k, &r) in runs.iter().enumerate() {
        if pos + r > len {
            return Err(err(path, "runs exceed the box"));
        }
        if k % 2 == 1 {
            bits.insert_range(pos..pos + r);
        }
        pos += r;
    }
    if pos != len {
        return Err(err(path, format!("runs cover {pos} of {len} cells")));
    }
    Ok(bits)
}

pub fn findet_region_to_json(r: &FinDetRegion) -> Value {
    json!({
        "kind": kind_name(r.kind()),
        "box": box_to_json(r.grid()),
        "runs": runs_of(r.members(), r.grid().len()),
    })
}

pub fn findet_region_from_json(v: &Value, path: &str) -> Result<FinDetRegion> {
    let kind = kind_from_json(get(v, "kind", path)?, &format!("{path}.kind"))?;
    let bx = box_from_json(get(v, "box", path)?, &format!("{path}.box"))?;
    let rp = format!("{path}.runs");
    let runs: Vec<usize> = array(get(v, "runs", path)?, &rp)?
        .iter()
        .enumerate()
        .map(|(k, x)| uint(x, &format!("{rp}[{k}]")))
        .collect::<Result<_>>()?;
    let bits = bits_of_runs(&runs, bx.len(), &rp)?;
    FinDetRegion::new(bx, bits, kind)
}

// Modules.

/// `{"field", "poset", "dims": {id: d}, "maps": {"a->b": matrix}}` with a
/// map for each cover; absent maps are zero.
pub fn encoded_module_to_json(m: &EncodedModule) -> Value {
    let p = m.poset();
    let dims: Map<String, Value> = (0..p.len()).map(|q| (p.name(q).to_string(), json!(m.dims()[q]))).collect();
    let maps: Map<String, Value> = m
        .covers()
        .iter()
        .zip(m.cover_maps())
        .filter(|(_, mat)| mat.rows() > 0 && mat.cols() > 0)
        .map(|(&(a, b), mat)| (format!("{}->{}", p.name(a), p.name(b)), matrix_to_json(mat)))
        .collect();
    json!({
        "field": m.field().to_string(),
        "poset": poset_to_json(p),
        "dims": dims,
        "maps": maps,
    })
}

pub fn encoded_module_from_json(v: &Value, path: &str) -> Result<EncodedModule> {
    let f = field_from_json(get(v, "field", path)?, &format!("{path}.field"))?;
    let poset = Arc::new(poset_from_json(get(v, "poset", path)?, &format!("{path}.poset"))?);
    let dp = format!("{path}.dims");
    let dims_obj = object(get(v, "dims", path)?, &dp)?;
    let mut dims = vec![0; poset.len()];
    for (id, d) in dims_obj {
        let q = poset.index_of(id).ok_or_else(|| err(&dp, format!("unknown element {id:?}")))?;
        dims[q] = uint(d, &format!("{dp}.{id}"))?;
    }
    let mut maps = HashMap::new();
    if let Some(mv) = v.get("maps") {
        let mp = format!("{path}.maps");
        for (key, mat) in object(mv, &mp)? {
            let kp = format!("{mp}.{key}");
            let (a, b) = key.split_once("->").ok_or_else(|| err(&kp, "map keys look like \"a->b\""))?;
            let ia = poset.index_of(a.trim()).ok_or_else(|| err(&kp, format!("unknown element {a:?}")))?;
            let ib = poset.index_of(b.trim()).ok_or_else(|| err(&kp, format!("unknown element {b:?}")))?;
            maps.insert((ia, ib), matrix_from_json(f, mat, dims[ib], dims[ia], &kp)?);
        }
    }
    EncodedModule::from_cover_map(poset, f, dims, maps)
}

/// `{"field", "box", "dims": [cell order], "steps": [{degree: matrix}]}`,
/// one step object per axis keyed by the source degree; absent steps are
/// zero and steps out of the top layer are identities.
pub fn findet_module_to_json(m: &FinDetModule) -> Value {
    let bx = m.grid();
    let steps: Vec<Value> = (0..bx.n())
        .map(|i| {
            let obj: Map<String, Value> = bx
                .cells()
                .filter(|&c| bx.step_up(c, i).is_some())
                .filter(|&c| {
                    let s = m.step(c, i);
                    s.rows() > 0 && s.cols() > 0
                })
                .map(|c| (degree_key(&bx.coords(c)), matrix_to_json(m.step(c, i))))
                .collect();
            Value::Object(obj)
        })
        .collect();
    json!({
        "field": m.field().to_string(),
        "box": box_to_json(bx),
        "dims": m.dims(),
        "steps": steps,
    })
}

pub fn findet_module_from_json(v: &Value, path: &str) -> Result<FinDetModule> {
    let f = field_from_json(get(v, "field", path)?, &format!("{path}.field"))?;
    let bx = box_from_json(get(v, "box", path)?, &format!("{path}.box"))?;
    let dp = format!("{path}.dims");
    let dims: Vec<usize> = array(get(v, "dims", path)?, &dp)?
        .iter()
        .enumerate()
        .map(|(k, x)| uint(x, &format!("{dp}[{k}]")))
        .collect::<Result<_>>()?;
    if dims.len() != bx.len() {
        return Err(err(&dp, format!("{} dimensions for {} cells", dims.len(), bx.len())));
    }
    let sp = format!("{path}.steps");
    let given = match v.get("steps") {
        None => Vec::new(),
        Some(s) => array(s, &sp)?.clone(),
    };
    if given.len() > bx.n() {
        return Err(err(&sp, "more step objects than axes"));
    }
    let mut steps: Vec<Vec<Matrix>> = (0..bx.n())
        .map(|i| {
            bx.cells()
                .map(|c| match bx.step_up(c, i) {
                    Some(d) => Matrix::zeros(f, dims[d], dims[c]),
                    None => Matrix::identity(f, dims[c]),
                })
                .collect()
        })
        .collect();
    for (i, obj) in given.iter().enumerate() {
        let ip = format!("{sp}[{i}]");
        for (key, mat) in object(obj, &ip)? {
            let kp = format!("{ip}.{key}");
            let q = parse_degree_key(key, bx.n(), &kp)?;
            if !bx.contains(&q) {
                return Err(err(&kp, "degree outside the box"));
            }
            let c = bx.index(&q);
            let d = bx.step_up(c, i).ok_or_else(|| err(&kp, "no step out of the top layer"))?;
            steps[i][c] = matrix_from_json(f, mat, dims[d], dims[c], &kp)?;
        }
    }
    FinDetModule::from_steps(bx, f, dims, steps)
}

/// Either module form, recognized by the presence of `"box"`.
pub enum AnyModule {
    Encoded(EncodedModule),
    Box(FinDetModule),
}

pub fn any_module_from_json(v: &Value, path: &str) -> Result<AnyModule> {
    if v.get("box").is_some() {
        Ok(AnyModule::Box(findet_module_from_json(v, path)?))
    } else {
        Ok(AnyModule::Encoded(encoded_module_from_json(v, path)?))
    }
}

fn comps_to_json<M: Representation>(phi: &Morphism<M>) -> Value {
    let obj: Map<String, Value> = (0..phi.source().vertex_count())
        .filter(|&v| phi.comp(v).rows() > 0 && phi.comp(v).cols() > 0)
        .map(|v| (phi.source().vertex_name(v), matrix_to_json(phi.comp(v))))
        .collect();
    Value::Object(obj)
}

/// `{"source", "target", "comps": {id: matrix}}`; absent components are zero.
pub fn morphism_to_json(phi: &ModuleMorphism) -> Value {
    json!({
        "source": encoded_module_to_json(phi.source()),
        "target": encoded_module_to_json(phi.target()),
        "comps": comps_to_json(phi),
    })
}

fn comps_from_json(
    f: Field,
    poset: &FinitePoset,
    sdims: &[usize],
    tdims: &[usize],
    v: Option<&Value>,
    path: &str,
) -> Result<Vec<Matrix>> {
    let mut comps: Vec<Matrix> = (0..poset.len()).map(|q| Matrix::zeros(f, tdims[q], sdims[q])).collect();
    if let Some(v) = v {
        for (id, mat) in object(v, path)? {
            let kp = format!("{path}.{id}");
            let q = poset.index_of(id).ok_or_else(|| err(&kp, format!("unknown element {id:?}")))?;
            comps[q] = matrix_from_json(f, mat, tdims[q], sdims[q], &kp)?;
        }
    }
    Ok(comps)
}

pub fn morphism_from_json(v: &Value, path: &str) -> Result<ModuleMorphism> {
    let source = encoded_module_from_json(get(v, "source", path)?, &format!("{path}.source"))?;
    let target = encoded_module_from_json(get(v, "target", path)?, &format!("{path}.target"))?;
    let comps = comps_from_json(
        source.field(),
        source.poset(),
        source.dims(),
        target.dims(),
        v.get("comps"),
        &format!("{path}.comps"),
    )?;
    Morphism::new(source, target, comps)
}

// Monomial matrices.

fn entries_to_json(m: &Matrix) -> Value {
    let f = m.field();
    let mut obj = Map::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let s = m.get(r, c);
            if *s != f.zero() {
                obj.insert(format!("({r},{c})"), scalar_to_json(f, s));
            }
        }
    }
    Value::Object(obj)
}

fn entries_from_json(f: Field, v: &Value, rows: usize, cols: usize, path: &str) -> Result<Matrix> {
    let mut m = Matrix::zeros(f, rows, cols);
    for (key, s) in object(v, path)? {
        let kp = format!("{path}.{key}");
        let inner = key
            .trim()
            .strip_prefix('(')
            .and_then(|k| k.strip_suffix(')'))
            .ok_or_else(|| err(&kp, "entry keys look like \"(p,q)\""))?;
        let (p, q) = inner.split_once(',').ok_or_else(|| err(&kp, "entry keys look like \"(p,q)\""))?;
        let p: usize = p.trim().parse().map_err(|_| err(&kp, "bad row index"))?;
        let q: usize = q.trim().parse().map_err(|_| err(&kp, "bad column index"))?;
        if p >= rows || q >= cols {
            return Err(err(&kp, "entry outside the matrix"));
        }
        m.set(p, q, scalar_from_json(f, s, &kp)?);
    }
    Ok(m)
}

fn label_to_json(b: &[i64], tau: Face) -> Value {
    json!({ "b": b, "tau": tau.to_one_based() })
}

fn label_parts(v: &Value, path: &str) -> Result<(Degree, Face)> {
    let b = degree(get(v, "b", path)?, &format!("{path}.b"))?;
    let tp = format!("{path}.tau");
    let axes: Vec<usize> = array(get(v, "tau", path)?, &tp)?
        .iter()
        .enumerate()
        .map(|(k, x)| uint(x, &format!("{tp}[{k}]")))
        .collect::<Result<_>>()?;
    let tau = Face::from_one_based(b.len(), &axes).map_err(|e| err(&tp, e))?;
    Ok((b, tau))
}

pub fn flange_matrix_to_json(m: &FlangeMatrix) -> Value {
    json!({
        "field": m.entries.field().to_string(),
        "rows": m.rows.iter().map(|l| label_to_json(&l.b, l.tau)).collect::<Vec<_>>(),
        "cols": m.cols.iter().map(|l| label_to_json(&l.b, l.tau)).collect::<Vec<_>>(),
        "entries": entries_to_json(&m.entries),
    })
}

pub fn flange_matrix_from_json(v: &Value, path: &str) -> Result<FlangeMatrix> {
    let f = field_from_json(get(v, "field", path)?, &format!("{path}.field"))?;
    let labels = |key: &str| -> Result<Vec<(Degree, Face)>> {
        let p = format!("{path}.{key}");
        array(get(v, key, path)?, &p)?
            .iter()
            .enumerate()
            .map(|(k, x)| label_parts(x, &format!("{p}[{k}]")))
            .collect()
    };
    let rows: Vec<IndecFlatLabel> = labels("rows")?.into_iter().map(|(b, t)| IndecFlatLabel::new(b, t)).collect();
    let cols: Vec<IndecInjLabel> = labels("cols")?.into_iter().map(|(b, t)| IndecInjLabel::new(b, t)).collect();
    let entries = entries_from_json(f, get(v, "entries", path)?, rows.len(), cols.len(), &format!("{path}.entries"))?;
    Ok(MonomialMatrix { rows, cols, entries })
}

pub fn injective_labels_matrix_to_json(m: &MonomialMatrix<IndecInjLabel, IndecInjLabel>) -> Value {
    json!({
        "field": m.entries.field().to_string(),
        "rows": m.rows.iter().map(|l| label_to_json(&l.b, l.tau)).collect::<Vec<_>>(),
        "cols": m.cols.iter().map(|l| label_to_json(&l.b, l.tau)).collect::<Vec<_>>(),
        "entries": entries_to_json(&m.entries),
    })
}

pub fn flat_labels_matrix_to_json(m: &MonomialMatrix<IndecFlatLabel, IndecFlatLabel>) -> Value {
    json!({
        "field": m.entries.field().to_string(),
        "rows": m.rows.iter().map(|l| label_to_json(&l.b, l.tau)).collect::<Vec<_>>(),
        "cols": m.cols.iter().map(|l| label_to_json(&l.b, l.tau)).collect::<Vec<_>>(),
        "entries": entries_to_json(&m.entries),
    })
}

/// Labels serialize as member lists, or as box regions when `bx` is given
/// (the carrier is then the box poset, element `c` being cell `c`).
pub fn region_matrix_to_json(m: &MonomialMatrix<PosetRegion, PosetRegion>, bx: Option<&GridBox>) -> Result<Value> {
    let label = |r: &PosetRegion| -> Result<Value> {
        match bx {
            None => Ok(region_to_json(r)),
            Some(bx) => Ok(findet_region_to_json(&FinDetRegion::new(bx.clone(), r.members().clone(), r.kind())?)),
        }
    };
    let mut v = json!({
        "field": m.entries.field().to_string(),
        "rows": m.rows.iter().map(label).collect::<Result<Vec<_>>>()?,
        "cols": m.cols.iter().map(label).collect::<Result<Vec<_>>>()?,
        "entries": entries_to_json(&m.entries),
    });
    if bx.is_none() {
        if let Some(r) = m.rows.first().or(m.cols.first()) {
            v["poset"] = poset_to_json(r.poset());
        }
    }
    Ok(v)
}

/// Reads a matrix with member-list labels on `poset`.
pub fn region_matrix_from_json(poset: &Arc<FinitePoset>, v: &Value, path: &str) -> Result<MonomialMatrix<PosetRegion, PosetRegion>> {
    let f = field_from_json(get(v, "field", path)?, &format!("{path}.field"))?;
    let labels = |key: &str| -> Result<Vec<PosetRegion>> {
        let p = format!("{path}.{key}");
        array(get(v, key, path)?, &p)?
            .iter()
            .enumerate()
            .map(|(k, x)| region_from_json(poset, x, &format!("{p}[{k}]")))
            .collect()
    };
    let rows = labels("rows")?;
    let cols = labels("cols")?;
    let entries = entries_from_json(f, get(v, "entries", path)?, rows.len(), cols.len(), &format!("{path}.entries"))?;
    Ok(MonomialMatrix { rows, cols, entries })
}

// Encodings, filtrations, reports.

/// `{"module", "encoding_poset", "pi": {q: p}, "h", "witness": {q: matrix}}`.
pub fn encoding_to_json(e: &Encoding) -> Value {
    let src = e.pi.source();
    let tgt = e.pi.target();
    let pi: Map<String, Value> = (0..src.len())
        .map(|q| (src.name(q).to_string(), json!(tgt.name(e.pi.apply(q)))))
        .collect();
    let mut v = json!({
        "module": encoded_module_to_json(e.module()),
        "h": encoded_module_to_json(&e.h),
        "pi": pi,
        "witness": comps_to_json(&e.witness),
    });
    if let Some(up) = &e.uptight {
        v["blocks"] = Value::Array(up.blocks.iter().map(|b| json!(src.ids_of(b))).collect());
    }
    v
}

pub fn encoding_from_json(v: &Value) -> Result<Encoding> {
    let m = encoded_module_from_json(get(v, "module", "$")?, "$.module")?;
    let h = encoded_module_from_json(get(v, "h", "$")?, "$.h")?;
    let pp = "$.pi";
    let pi_obj = object(get(v, "pi", "$")?, pp)?;
    let src = m.poset();
    let tgt = h.poset();
    let mut map = vec![usize::MAX; src.len()];
    for (q, p) in pi_obj {
        let kp = format!("{pp}.{q}");
        let iq = src.index_of(q).ok_or_else(|| err(&kp, format!("unknown element {q:?}")))?;
        let name = string(p, &kp)?;
        map[iq] = tgt.index_of(name).ok_or_else(|| err(&kp, format!("unknown encoding element {name:?}")))?;
    }
    if let Some(q) = map.iter().position(|&x| x == usize::MAX) {
        return Err(err(pp, format!("no image for {:?}", src.name(q))));
    }
    let pi = PosetMorphism::new(src.clone(), tgt.clone(), map)?;
    let hdims: Vec<usize> = (0..src.len()).map(|q| h.dims()[pi.apply(q)]).collect();
    let comps = comps_from_json(m.field(), src, m.dims(), &hdims, v.get("witness"), "$.witness")?;
    Encoding::new(&m, pi, h, comps)
}

pub fn filtration_from_json(v: &Value) -> Result<MultiFiltration> {
    serde_json::from_value(v.clone()).map_err(|e| err("$", e))
}

pub fn filtration_to_json(f: &MultiFiltration) -> Value {
    serde_json::to_value(f).expect("filtrations serialize")
}

pub fn decomposition_to_json(d: &PrimaryDecomposition) -> Value {
    json!({
        "components": d.components.iter().map(|c| json!({
            "tau": c.tau.to_one_based(),
            "quotient": findet_module_to_json(&c.quotient),
        })).collect::<Vec<_>>(),
        "injective": d.combined.is_injective(),
    })
}

/// Parses text into JSON, reporting line and column on failure.
pub fn parse_text(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Stable pretty form with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{singleton_partition, uptight_encoding, verify_constant_subdivision};
    use crate::module::indicator_sum_encoded;

    fn q() -> Field {
        Field::Rational
    }

    fn sample() -> EncodedModule {
        let p = Arc::new(FinitePoset::chain(4));
        let mut a = p.empty_set();
        a.insert_range(0..3);
        let mut b = p.empty_set();
        b.insert_range(1..4);
        indicator_sum_encoded(&p, q(), &[a, b]).unwrap()
    }

    #[test]
    fn encoded_module_round_trip() {
        let m = sample();
        let v = encoded_module_to_json(&m);
        assert_eq!(encoded_module_from_json(&v, "$").unwrap(), m);
    }

    #[test]
    fn box_module_round_trip() {
        let bx = GridBox::new(vec![-1, 0], vec![2, 2]).unwrap();
        let r = FinDetRegion::from_fn(bx, RegionKind::Downset, |d| d[0] + d[1] <= 1).unwrap();
        let m = FinDetModule::indicator(&r, Field::prime(5).unwrap());
        let v = findet_module_to_json(&m);
        assert_eq!(findet_module_from_json(&v, "$").unwrap(), m);
        let rv = findet_region_to_json(&r);
        assert_eq!(findet_region_from_json(&rv, "$").unwrap(), r);
    }

    #[test]
    fn encoding_round_trip() {
        let m = sample();
        let s = verify_constant_subdivision(&m, &singleton_partition(m.poset())).unwrap();
        let e = uptight_encoding(&s).unwrap();
        let back = encoding_from_json(&encoding_to_json(&e)).unwrap();
        assert_eq!(back.h, e.h);
        assert_eq!(back.witness, e.witness);
    }

    #[test]
    fn runs_start_with_absent_cells() {
        let mut b = FixedBitSet::with_capacity(5);
        b.insert_range(0..2);
        assert_eq!(runs_of(&b, 5), vec![0, 2, 3]);
        assert_eq!(bits_of_runs(&[0, 2, 3], 5, "$").unwrap(), b);
    }

    #[test]
    fn malformed_input_names_its_location() {
        let v = json!({"field": "q", "poset": {"elements": ["a"]}, "dims": {"a": "x"}});
        let e = encoded_module_from_json(&v, "$").unwrap_err();
        assert!(e.to_string().contains("$.dims.a"), "{e}");
    }
}
