//! Integer-weighted chains of geodesic simplices.
//!
//! A [`SimplicialChain`] is a finite list of `(vertices, coefficient)` terms;
//! a `k`-simplex is determined by its `k+1` vertices and interpolated by
//! geodesics. Chains canonicalize to sorted vertex tuples with orientation
//! signs, so boundary cancellation is exact integer arithmetic. Simplex
//! volumes use the Cayley-Menger determinant of pairwise geodesic distances,
//! which is exact in Euclidean factors and second-order accurate in curved
//! ones, so refinement drives volumes to the Riemannian value.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::space::{
    hyperbolic_exp_block, BoundaryDirection, Factor, FlatSpec, ProductSpace, SpacePoint,
};

#[derive(Debug, Clone, Default)]
pub struct SimplicialChain {
    k: usize,
    terms: Vec<(Vec<SpacePoint>, i64)>,
}

/// Scalar functions used to slice chains.
#[derive(Debug, Clone)]
pub enum Functional {
    Busemann(BoundaryDirection),
    /// Coordinate `axis` of the nearest-point projection to a flat.
    FlatCoordinate { flat: FlatSpec, axis: usize },
}

impl Functional {
    pub fn evaluate(&self, sp: &ProductSpace, p: &SpacePoint) -> f64 {
        match self {
            Functional::Busemann(w) => sp.busemann(w, p),
            Functional::FlatCoordinate { flat, axis } => flat.projection_chart(sp, p)[*axis],
        }
    }
}

type Key = Vec<u64>;

fn point_key(p: &SpacePoint) -> Key {
    p.coords.iter().map(|c| c.to_bits()).collect()
}

fn cmp_points(a: &SpacePoint, b: &SpacePoint) -> std::cmp::Ordering {
    for (x, y) in a.coords.iter().zip(&b.coords) {
        let c = x.total_cmp(y);
        if c != std::cmp::Ordering::Equal {
            return c;
        }
    }
    std::cmp::Ordering::Equal
}

/// Sorts vertices into canonical order; returns the permutation sign, or
/// `None` for a degenerate simplex (repeated vertex).
fn sort_simplex(verts: &mut [SpacePoint]) -> Option<i64> {
    let mut sign = 1i64;
    for i in 1..verts.len() {
        let mut j = i;
        while j > 0 && cmp_points(&verts[j], &verts[j - 1]) == std::cmp::Ordering::Less {
            verts.swap(j, j - 1);
            sign = -sign;
            j -= 1;
        }
    }
    for w in verts.windows(2) {
        if cmp_points(&w[0], &w[1]) == std::cmp::Ordering::Equal {
            return None;
        }
    }
    Some(sign)
}

impl SimplicialChain {
    pub fn new(k: usize, terms: Vec<(Vec<SpacePoint>, i64)>) -> Result<Self> {
        for (verts, _) in &terms {
            if verts.len() != k + 1 {
                return Err(Error::Dimension(format!(
                    "a {k}-simplex needs {} vertices, found {}",
                    k + 1,
                    verts.len()
                )));
            }
        }
        Ok(SimplicialChain { k, terms })
    }

    pub fn empty(k: usize) -> Self {
        SimplicialChain { k, terms: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &[(Vec<SpacePoint>, i64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.canonicalized().terms.is_empty()
    }

    /// Merges like terms over sorted vertex tuples and drops degenerate
    /// simplices and zero coefficients.
    pub fn canonicalized(&self) -> SimplicialChain {
        let mut acc: BTreeMap<Key, (Vec<SpacePoint>, i64)> = BTreeMap::new();
        for (verts, coeff) in &self.terms {
            if *coeff == 0 {
                continue;
            }
            let mut v = verts.clone();
            let Some(sign) = sort_simplex(&mut v) else {
                continue;
            };
            let key: Key = v.iter().flat_map(point_key).collect();
            let entry = acc.entry(key).or_insert_with(|| (v, 0));
            entry.1 += sign * coeff;
        }
        let terms = acc
            .into_values()
            .filter(|(_, c)| *c != 0)
            .collect();
        SimplicialChain { k: self.k, terms }
    }

    /// Alternating-sign face chain; `boundary(boundary(c))` cancels exactly.
    pub fn boundary(&self) -> Result<SimplicialChain> {
        if self.k == 0 {
            return Err(Error::Domain("0-chains have no boundary".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * (self.k + 1));
        for (verts, coeff) in &self.terms {
            for i in 0..verts.len() {
                let face: Vec<SpacePoint> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v.clone())
                    .collect();
                let sign = if i % 2 == 0 { 1 } else { -1 };
                terms.push((face, sign * coeff));
            }
        }
        Ok(SimplicialChain {
            k: self.k - 1,
            terms,
        }
        .canonicalized())
    }

    /// For `k >= 1`: the boundary cancels to nothing. 0-chains are cycles
    /// when their coefficients sum to zero (augmentation).
    pub fn is_cycle(&self) -> bool {
        if self.k == 0 {
            return self.terms.iter().map(|&(_, c)| c).sum::<i64>() == 0;
        }
        self.boundary().map(|b| b.terms.is_empty()).unwrap_or(false)
    }

    /// `sum |coeff| * vol_k(simplex)` with flat-simplex volumes from pairwise
    /// geodesic distances.
    pub fn k_volume(&self, sp: &ProductSpace) -> f64 {
        self.terms
            .iter()
            .map(|(verts, coeff)| coeff.unsigned_abs() as f64 * simplex_volume(sp, verts))
            .sum()
    }

    pub fn negated(&self) -> SimplicialChain {
        SimplicialChain {
            k: self.k,
            terms: self.terms.iter().map(|(v, c)| (v.clone(), -c)).collect(),
        }
    }

    pub fn add(&self, other: &SimplicialChain) -> Result<SimplicialChain> {
        if self.k != other.k {
            return Err(Error::Dimension("adding chains of different dimension".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(SimplicialChain { k: self.k, terms })
    }

    /// Consuming concatenation; avoids cloning large term lists.
    pub fn extended(mut self, other: SimplicialChain) -> Result<SimplicialChain> {
        if self.k != other.k {
            return Err(Error::Dimension("adding chains of different dimension".into()));
        }
        self.terms.extend(other.terms);
        Ok(self)
    }

    pub fn map_vertices(&self, f: impl Fn(&SpacePoint) -> SpacePoint) -> SimplicialChain {
        SimplicialChain {
            k: self.k,
            terms: self
                .terms
                .iter()
                .map(|(verts, c)| (verts.iter().map(&f).collect(), *c))
                .collect(),
        }
    }

    /// Edgewise subdivision with geodesic midpoints, `levels` times. Each
    /// `k`-simplex splits into `2^k` children and boundary commutes with the
    /// subdivision.
    pub fn refine(&self, sp: &ProductSpace, levels: usize) -> SimplicialChain {
        let mut current = self.clone();
        for _ in 0..levels {
            let mut cache: HashMap<(Key, Key), SpacePoint> = HashMap::new();
            let mut midpoint = |a: &SpacePoint, b: &SpacePoint| -> SpacePoint {
                let (lo, hi) = if cmp_points(a, b) == std::cmp::Ordering::Greater {
                    (b, a)
                } else {
                    (a, b)
                };
                cache
                    .entry((point_key(lo), point_key(hi)))
                    .or_insert_with(|| {
                        sp.geodesic_point(lo, hi, 0.5)
                            .expect("chain vertices lie in the space")
                    })
                    .clone()
            };
            let mut terms = Vec::with_capacity(current.terms.len() << current.k);
            for (verts, coeff) in &current.terms {
                subdivide_term(verts, *coeff, &mut midpoint, &mut terms);
            }
            current = SimplicialChain {
                k: current.k,
                terms,
            };
        }
        current
    }

    /// Subchain of simplices whose barycenter functional value lies in the
    /// closed interval, refined first until the per-simplex variation is
    /// below an eighth of the interval length.
    pub fn clip(
        &self,
        sp: &ProductSpace,
        functional: &Functional,
        interval: (f64, f64),
    ) -> SimplicialChain {
        let (lo, hi) = interval;
        let len = hi - lo;
        let mut current = self.clone();
        if len.is_finite() && len > 0.0 {
            for _ in 0..12 {
                let worst = current
                    .terms
                    .iter()
                    .map(|(verts, _)| {
                        let vals: Vec<f64> =
                            verts.iter().map(|v| functional.evaluate(sp, v)).collect();
                        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                        max - min
                    })
                    .fold(0.0, f64::max);
                if worst < len / 8.0 {
                    break;
                }
                current = current.refine(sp, 1);
            }
        }
        let terms = current
            .terms
            .into_iter()
            .filter(|(verts, _)| {
                let bary = chart_barycenter(verts);
                let v = functional.evaluate(sp, &bary);
                v >= lo && v <= hi
            })
            .collect();
        SimplicialChain { k: self.k, terms }
    }

    /// Plain-text form: a header with the space spec and dimension, then one
    /// simplex per line as `coeff` followed by `|`-separated vertex blocks.
    pub fn to_text(&self, space_spec: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("# space: {space_spec}\n# k: {}\n", self.k));
        for (verts, coeff) in &self.terms {
            out.push_str(&coeff.to_string());
            for v in verts {
                out.push_str(" |");
                for c in &v.coords {
                    out.push_str(&format!(" {c}"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<(String, SimplicialChain)> {
        let mut space = String::new();
        let mut k: Option<usize> = None;
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("space:") {
                    space = v.trim().to_string();
                } else if let Some(v) = rest.strip_prefix("k:") {
                    k = Some(v.trim().parse().map_err(|_| {
                        Error::Parse(format!("bad k header at line {}", lineno + 1))
                    })?);
                }
                continue;
            }
            let mut blocks = line.split('|');
            let coeff: i64 = blocks
                .next()
                .unwrap()
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient at line {}", lineno + 1)))?;
            let mut verts = Vec::new();
            for block in blocks {
                let coords: std::result::Result<Vec<f64>, _> =
                    block.split_whitespace().map(str::parse).collect();
                let coords = coords
                    .map_err(|_| Error::Parse(format!("bad coordinate at line {}", lineno + 1)))?;
                verts.push(SpacePoint::new(coords));
            }
            terms.push((verts, coeff));
        }
        let k = k.ok_or_else(|| Error::Parse("missing '# k:' header".into()))?;
        Ok((space, SimplicialChain::new(k, terms)?))
    }
}

/// Coordinate-average point; classification proxy for small simplices.
pub(crate) fn chart_barycenter(verts: &[SpacePoint]) -> SpacePoint {
    let n = verts.len() as f64;
    let dim = verts[0].coords.len();
    let mut coords = vec![0.0; dim];
    for v in verts {
        for (c, x) in coords.iter_mut().zip(&v.coords) {
            *c += x / n;
        }
    }
    SpacePoint::new(coords)
}

/// Edgewise (Freudenthal) subdivision of one simplex. Children correspond to
/// monotone lattice paths through the midpoint grid; the path's inversion
/// parity orients each child so that boundary commutes with subdivision.
fn subdivide_term(
    verts: &[SpacePoint],
    coeff: i64,
    midpoint: &mut impl FnMut(&SpacePoint, &SpacePoint) -> SpacePoint,
    out: &mut Vec<(Vec<SpacePoint>, i64)>,
) {
    let k = verts.len() - 1;
    if k == 0 {
        out.push((verts.to_vec(), coeff));
        return;
    }
    let mut grid: HashMap<(usize, usize), SpacePoint> = HashMap::new();
    let mut vertex_at = |i: usize, j: usize, grid: &mut HashMap<(usize, usize), SpacePoint>| {
        if i == j {
            verts[i].clone()
        } else {
            grid.entry((i, j))
                .or_insert_with(|| midpoint(&verts[i], &verts[j]))
                .clone()
        }
    };
    for mask in 0u32..(1u32 << k) {
        let s = mask.count_ones() as usize;
        let mut i = 0usize;
        let mut j = s;
        let mut child = Vec::with_capacity(k + 1);
        child.push(vertex_at(i, j, &mut grid));
        let mut inversions = 0usize;
        let mut j_steps_seen = 0usize;
        for t in 0..k {
            if mask & (1 << t) != 0 {
                i += 1;
                inversions += j_steps_seen;
            } else {
                j += 1;
                j_steps_seen += 1;
            }
            child.push(vertex_at(i, j, &mut grid));
        }
        let sign = if inversions % 2 == 0 { 1 } else { -1 };
        out.push((child, sign * coeff));
    }
}

/// Flat-simplex `k`-volume from pairwise geodesic distances via the
/// Cayley-Menger determinant. Points get volume 1, degenerate simplices 0.
pub fn simplex_volume(sp: &ProductSpace, verts: &[SpacePoint]) -> f64 {
    let k = verts.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let d = |a: &SpacePoint, b: &SpacePoint| {
        sp.distance(a, b).expect("chain vertices lie in the space")
    };
    if k == 1 {
        return d(&verts[0], &verts[1]);
    }
    let n = k + 2;
    let mut m = vec![vec![0.0f64; n]; n];
    for i in 1..n {
        m[0][i] = 1.0;
        m[i][0] = 1.0;
    }
    for i in 0..=k {
        for j in i + 1..=k {
            let dij = d(&verts[i], &verts[j]);
            m[i + 1][j + 1] = dij * dij;
            m[j + 1][i + 1] = dij * dij;
        }
    }
    let det = determinant(&mut m);
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let vol2 = sign * det / (2f64.powi(k as i32) * factorial * factorial);
    vol2.max(0.0).sqrt()
}

pub(crate) fn determinant(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[p][col] == 0.0 {
            return 0.0;
        }
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        det *= m[col][col];
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            for c in col..n {
                m[i][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Simplicial round `k`-sphere of the given radius inside a flat, refined
/// until the edge length is below `mesh`. The output is a cycle; for `k = 0`
/// it is two points at distance `2 * radius` with coefficients +1 and -1.
pub fn round_sphere_in_flat(
    sp: &ProductSpace,
    flat: &FlatSpec,
    k: usize,
    radius: f64,
    mesh: f64,
) -> Result<SimplicialChain> {
    if radius <= 0.0 || mesh <= 0.0 {
        return Err(Error::Domain("radius and mesh must be positive".into()));
    }
    if k + 1 > flat.dim() {
        return Err(Error::Dimension(format!(
            "a round {k}-sphere needs a flat of dimension >= {}, got {}",
            k + 1,
            flat.dim()
        )));
    }
    let chart_terms = unit_sphere_chart(k, flat.dim(), mesh / radius);
    let mut terms = Vec::with_capacity(chart_terms.len());
    for (chart_verts, coeff) in chart_terms {
        let verts: Result<Vec<SpacePoint>> = chart_verts
            .iter()
            .map(|u| {
                let scaled: Vec<f64> = u.iter().map(|c| c * radius).collect();
                flat.embed(sp, &scaled)
            })
            .collect();
        terms.push((verts?, coeff));
    }
    SimplicialChain::new(k, terms)
}

/// Triangulated unit `k`-sphere in `R^{ambient}` supported on the first
/// `k+1` axes: cross-polytope facets subdivided and radially projected until
/// every edge is at most `mesh`.
fn unit_sphere_chart(k: usize, ambient: usize, mesh: f64) -> Vec<(Vec<Vec<f64>>, i64)> {
    let mut terms: Vec<(Vec<Vec<f64>>, i64)> = Vec::new();
    for mask in 0u32..(1u32 << (k + 1)) {
        let mut verts = Vec::with_capacity(k + 1);
        let mut orient = 1i64;
        for (i, vert) in (0..=k).map(|i| {
            let mut v = vec![0.0; ambient];
            let sign = if mask & (1 << i) != 0 { -1.0 } else { 1.0 };
            v[i] = sign;
            (i, v)
        }) {
            if mask & (1 << i) != 0 {
                orient = -orient;
            }
            verts.push(vert);
        }
        terms.push((verts, orient));
    }
    if k == 0 {
        return terms;
    }
    for _ in 0..16 {
        let max_edge = terms
            .iter()
            .flat_map(|(verts, _)| {
                let mut edges = Vec::new();
                for i in 0..verts.len() {
                    for j in i + 1..verts.len() {
                        let d: f64 = verts[i]
                            .iter()
                            .zip(&verts[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt();
                        edges.push(d);
                    }
                }
                edges
            })
            .fold(0.0, f64::max);
        if max_edge <= mesh {
            break;
        }
        terms = subdivide_chart_on_sphere(&terms, k);
    }
    terms
}

fn subdivide_chart_on_sphere(
    terms: &[(Vec<Vec<f64>>, i64)],
    k: usize,
) -> Vec<(Vec<Vec<f64>>, i64)> {
    // reuse the space subdivision by treating chart vectors as points
    let to_point = |v: &Vec<f64>| SpacePoint::new(v.clone());
    let mut midpoint = |a: &SpacePoint, b: &SpacePoint| -> SpacePoint {
        let (lo, hi) = if cmp_points(a, b) == std::cmp::Ordering::Greater {
            (b, a)
        } else {
            (a, b)
        };
        let mut m: Vec<f64> = lo
            .coords
            .iter()
            .zip(&hi.coords)
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        let n: f64 = m.iter().map(|c| c * c).sum::<f64>().sqrt();
        for c in &mut m {
            *c /= n;
        }
        SpacePoint::new(m)
    };
    let mut out = Vec::with_capacity(terms.len() << k);
    for (verts, coeff) in terms {
        let pts: Vec<SpacePoint> = verts.iter().map(to_point).collect();
        let mut subdivided = Vec::new();
        subdivide_term(&pts, *coeff, &mut midpoint, &mut subdivided);
        out.extend(
            subdivided
                .into_iter()
                .map(|(vs, c)| (vs.into_iter().map(|p| p.coords).collect(), c)),
        );
    }
    out
}

/// Which flat directions realize the `Q` factor of `W = H^2 x Q`.
enum QDir {
    HypVertical { factor: usize },
    EuclideanAxis { factor: usize, axis: usize },
}

/// Distance sphere of radius `big_r` about the basepoint inside
/// `W = H^2 x Q`, where the hyperbolic plane sits in the first hyperbolic
/// factor and `Q` is a `(k-1)`-dimensional flat through the basepoint in the
/// remaining factors. The output is a simplicial `k`-cycle.
pub fn slice_sphere(
    sp: &ProductSpace,
    big_r: f64,
    k: usize,
    mesh: f64,
) -> Result<SimplicialChain> {
    if big_r <= 0.0 || mesh <= 0.0 {
        return Err(Error::Domain("radius and mesh must be positive".into()));
    }
    if k < 1 {
        return Err(Error::Domain("slice spheres need k >= 1".into()));
    }
    let hyp = sp
        .factors()
        .iter()
        .position(Factor::is_hyperbolic)
        .ok_or_else(|| Error::Domain("the space has no hyperbolic factor".into()))?;

    let mut qdirs = Vec::new();
    for (i, f) in sp.factors().iter().enumerate() {
        if i == hyp {
            continue;
        }
        match f {
            Factor::Hyperbolic { .. } => qdirs.push(QDir::HypVertical { factor: i }),
            Factor::Euclidean { dim } => {
                for axis in 0..*dim {
                    qdirs.push(QDir::EuclideanAxis { factor: i, axis });
                }
            }
        }
    }
    if qdirs.len() < k - 1 {
        return Err(Error::Dimension(format!(
            "need {} flat directions for Q, only {} available",
            k - 1,
            qdirs.len()
        )));
    }
    qdirs.truncate(k - 1);

    let base = sp.basepoint();
    let hyp_range = sp.block_range(hyp);
    let hyp_dim = sp.factors()[hyp].dim();
    let xb = base.coords[hyp_range.start..hyp_range.start + hyp_dim - 1].to_vec();
    let yb = base.coords[hyp_range.start + hyp_dim - 1];

    let embed = |u: &[f64]| -> SpacePoint {
        let mut coords = base.coords.clone();
        let rho = big_r * (u[0] * u[0] + u[1] * u[1]).sqrt();
        let phi = u[1].atan2(u[0]);
        let mut vx = vec![0.0; hyp_dim - 1];
        vx[0] = phi.sin();
        let block = hyperbolic_exp_block(&xb, yb, &vx, phi.cos(), rho);
        coords[hyp_range.clone()].copy_from_slice(&block);
        for (j, qd) in qdirs.iter().enumerate() {
            let v = big_r * u[2 + j];
            match *qd {
                QDir::HypVertical { factor } => {
                    let r = sp.block_range(factor);
                    let d = sp.factors()[factor].dim();
                    coords[r.start + d - 1] = base.coords[r.start + d - 1] * v.exp();
                }
                QDir::EuclideanAxis { factor, axis } => {
                    let r = sp.block_range(factor);
                    coords[r.start + axis] += v;
                }
            }
        }
        SpacePoint::new(coords)
    };

    // Refine the unit sphere until image edges are below the mesh.
    let mut chart = unit_sphere_chart(k, k + 1, 2.0);
    for _ in 0..16 {
        let mut max_edge = 0.0f64;
        for (verts, _) in &chart {
            let imgs: Vec<SpacePoint> = verts.iter().map(|u| embed(u)).collect();
            for i in 0..imgs.len() {
                for j in i + 1..imgs.len() {
                    max_edge = max_edge.max(sp.distance(&imgs[i], &imgs[j])?);
                }
            }
        }
        if max_edge <= mesh {
            break;
        }
        chart = subdivide_chart_on_sphere(&chart, k);
    }

    let terms = chart
        .into_iter()
        .map(|(verts, coeff)| (verts.iter().map(|u| embed(u)).collect(), coeff))
        .collect();
    SimplicialChain::new(k, terms)
}
