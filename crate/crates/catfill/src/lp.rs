//! Finite weighted cell complexes and the minimal-filling oracle.
//!
//! A [`CellComplex`] stores integer boundary matrices and one positive
//! weight per cell (its Riemannian volume). [`min_fill`] computes the
//! weighted-1-norm-minimal chain with a prescribed boundary by linear
//! programming over the split `x = x+ - x-`; [`min_fill_rational`] re-solves
//! small instances in exact arithmetic.
//!
//! [`build_grid`] produces cubical grid complexes in chart coordinates,
//! with cell weights evaluated from the product metric at cell barycenters
//! (hyperbolic factors contribute a `1/y` scale per axis) and an optional
//! keep-predicate that realizes neutered regions. Removal is closed under
//! taking cofaces so the boundary identity survives.

use std::collections::HashMap;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::simplex::{solve_min, LpOutcome, LpScalar, SparseMatrix};
use crate::space::{Factor, HoroballFamily, ProductSpace, SpacePoint};

/// Column-major integer sparse matrix.
#[derive(Debug, Clone)]
pub struct SparseIntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub by_col: Vec<Vec<(usize, i64)>>,
}

impl SparseIntMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseIntMatrix {
            rows,
            cols,
            by_col: vec![Vec::new(); cols],
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: i64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.by_col[col].push((row, val));
    }

    pub fn apply(&self, chain: &[i64]) -> Vec<i64> {
        let mut out = vec![0i64; self.rows];
        for (col, x) in chain.iter().enumerate() {
            if *x == 0 {
                continue;
            }
            for (row, v) in &self.by_col[col] {
                out[*row] += v * x;
            }
        }
        out
    }

    pub fn apply_f64(&self, chain: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (col, x) in chain.iter().enumerate() {
            if *x == 0.0 {
                continue;
            }
            for (row, v) in &self.by_col[col] {
                out[*row] += *v as f64 * x;
            }
        }
        out
    }
}

/// Weighted chain complex with integer boundary matrices.
#[derive(Debug, Clone)]
pub struct CellComplex {
    counts: Vec<usize>,
    boundaries: Vec<SparseIntMatrix>,
    weights: Vec<Vec<f64>>,
}

impl CellComplex {
    /// Validates shapes, positive weights, and `boundary . boundary = 0`
    /// in exact integer arithmetic.
    pub fn new(
        counts: Vec<usize>,
        boundaries: Vec<SparseIntMatrix>,
        weights: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if counts.is_empty() || weights.len() != counts.len() {
            return Err(Error::Dimension("counts/weights length mismatch".into()));
        }
        if boundaries.len() + 1 != counts.len() {
            return Err(Error::Dimension("one boundary matrix per dim >= 1".into()));
        }
        for (d, w) in weights.iter().enumerate() {
            if w.len() != counts[d] {
                return Err(Error::Dimension(format!("weights at dim {d}")));
            }
            if w.iter().any(|&x| x.is_nan() || x <= 0.0 || !x.is_finite()) {
                return Err(Error::Domain(format!("nonpositive weight at dim {d}")));
            }
        }
        for (d, b) in boundaries.iter().enumerate() {
            if b.rows != counts[d] || b.cols != counts[d + 1] {
                return Err(Error::Dimension(format!("boundary shape at dim {}", d + 1)));
            }
        }
        for d in 1..boundaries.len() {
            let lower = &boundaries[d - 1];
            let upper = &boundaries[d];
            for col in 0..upper.cols {
                let mut acc: HashMap<usize, i64> = HashMap::new();
                for (mid, v) in &upper.by_col[col] {
                    for (row, w) in &lower.by_col[*mid] {
                        *acc.entry(*row).or_insert(0) += v * w;
                    }
                }
                if acc.values().any(|&v| v != 0) {
                    return Err(Error::Domain(format!(
                        "boundary of boundary is nonzero at dim {} cell {col}",
                        d + 1
                    )));
                }
            }
        }
        Ok(CellComplex {
            counts,
            boundaries,
            weights,
        })
    }

    pub fn top_dim(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn count(&self, dim: usize) -> usize {
        self.counts.get(dim).copied().unwrap_or(0)
    }

    pub fn total_cells(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn weights(&self, dim: usize) -> &[f64] {
        &self.weights[dim]
    }

    pub fn boundary_matrix(&self, dim: usize) -> &SparseIntMatrix {
        &self.boundaries[dim - 1]
    }

    pub fn boundary_of(&self, dim: usize, chain: &[i64]) -> Vec<i64> {
        self.boundary_matrix(dim).apply(chain)
    }

    pub fn weighted_norm_int(&self, dim: usize, chain: &[i64]) -> f64 {
        chain
            .iter()
            .zip(&self.weights[dim])
            .map(|(x, w)| x.unsigned_abs() as f64 * w)
            .sum()
    }

    pub fn weighted_norm(&self, dim: usize, chain: &[f64]) -> f64 {
        chain
            .iter()
            .zip(&self.weights[dim])
            .map(|(x, w)| x.abs() * w)
            .sum()
    }

    /// Plain-text export: `cells` count lines, then `w dim idx weight` and
    /// `b dim row col val` triplet lines.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# cell complex\n");
        for (d, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("cells {d} {c}\n"));
        }
        for (d, ws) in self.weights.iter().enumerate() {
            for (i, w) in ws.iter().enumerate() {
                out.push_str(&format!("w {d} {i} {w}\n"));
            }
        }
        for (d, b) in self.boundaries.iter().enumerate() {
            for (col, entries) in b.by_col.iter().enumerate() {
                for (row, v) in entries {
                    out.push_str(&format!("b {} {row} {col} {v}\n", d + 1));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut counts: Vec<usize> = Vec::new();
        let mut weight_entries: Vec<(usize, usize, f64)> = Vec::new();
        let mut boundary_entries: Vec<(usize, usize, usize, i64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap();
            let bad = |what: &str| Error::Parse(format!("{what} at line {}", lineno + 1));
            match tag {
                "cells" => {
                    let d: usize = it.next().ok_or(bad("dim"))?.parse().map_err(|_| bad("dim"))?;
                    let c: usize = it
                        .next()
                        .ok_or(bad("count"))?
                        .parse()
                        .map_err(|_| bad("count"))?;
                    if d != counts.len() {
                        return Err(bad("cells lines must come in dimension order"));
                    }
                    counts.push(c);
                }
                "w" => {
                    let d: usize = it.next().ok_or(bad("dim"))?.parse().map_err(|_| bad("dim"))?;
                    let i: usize = it.next().ok_or(bad("idx"))?.parse().map_err(|_| bad("idx"))?;
                    let v: f64 = it
                        .next()
                        .ok_or(bad("weight"))?
                        .parse()
                        .map_err(|_| bad("weight"))?;
                    weight_entries.push((d, i, v));
                }
                "b" => {
                    let d: usize = it.next().ok_or(bad("dim"))?.parse().map_err(|_| bad("dim"))?;
                    let r: usize = it.next().ok_or(bad("row"))?.parse().map_err(|_| bad("row"))?;
                    let c: usize = it.next().ok_or(bad("col"))?.parse().map_err(|_| bad("col"))?;
                    let v: i64 = it.next().ok_or(bad("val"))?.parse().map_err(|_| bad("val"))?;
                    boundary_entries.push((d, r, c, v));
                }
                _ => return Err(bad("unknown tag")),
            }
        }
        if counts.is_empty() {
            return Err(Error::Parse("complex file has no cells lines".into()));
        }
        let mut weights: Vec<Vec<f64>> = counts.iter().map(|&c| vec![0.0; c]).collect();
        for (d, i, v) in weight_entries {
            *weights
                .get_mut(d)
                .and_then(|ws| ws.get_mut(i))
                .ok_or_else(|| Error::Parse(format!("weight index out of range: {d} {i}")))? = v;
        }
        let mut boundaries: Vec<SparseIntMatrix> = (1..counts.len())
            .map(|d| SparseIntMatrix::new(counts[d - 1], counts[d]))
            .collect();
        for (d, r, c, v) in boundary_entries {
            if d == 0 || d >= counts.len() || r >= counts[d - 1] || c >= counts[d] {
                return Err(Error::Parse(format!("boundary entry out of range: {d} {r} {c}")));
            }
            boundaries[d - 1].push(r, c, v);
        }
        CellComplex::new(counts, boundaries, weights)
    }
}

/// Cycle (or chain) file: one `dim idx value` triplet per line.
pub fn cycle_to_text(dim: usize, chain: &[i64]) -> String {
    let mut out = String::new();
    for (i, v) in chain.iter().enumerate() {
        if *v != 0 {
            out.push_str(&format!("{dim} {i} {v}\n"));
        }
    }
    out
}

pub fn cycle_from_text(text: &str, cx: &CellComplex) -> Result<(usize, Vec<i64>)> {
    let mut dim: Option<usize> = None;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let bad = || Error::Parse(format!("bad cycle line {}", lineno + 1));
        let d: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let i: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let v: i64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        match dim {
            None => dim = Some(d),
            Some(d0) if d0 != d => {
                return Err(Error::Parse("cycle file mixes dimensions".into()))
            }
            _ => {}
        }
        entries.push((i, v));
    }
    let dim = dim.ok_or_else(|| Error::Parse("empty cycle file".into()))?;
    if dim > cx.top_dim() {
        return Err(Error::Dimension("cycle dimension above complex".into()));
    }
    let mut chain = vec![0i64; cx.count(dim)];
    for (i, v) in entries {
        if i >= chain.len() {
            return Err(Error::Parse(format!("cycle index {i} out of range")));
        }
        chain[i] += v;
    }
    Ok((dim, chain))
}

/// Result of a minimal-filling solve.
#[derive(Debug, Clone)]
pub struct FillResult {
    /// Real coefficients over the `(k+1)`-cells.
    pub chain: Vec<f64>,
    /// Weighted 1-norm of the chain.
    pub value: f64,
    /// `max |boundary(chain) - z|`.
    pub residual: f64,
}

fn check_cycle(cx: &CellComplex, k: usize, z: &[i64]) -> Result<()> {
    if k + 1 > cx.top_dim() {
        return Err(Error::Dimension(format!(
            "filling dimension {} above the complex top dimension {}",
            k + 1,
            cx.top_dim()
        )));
    }
    if z.len() != cx.count(k) {
        return Err(Error::Dimension("cycle vector length".into()));
    }
    if k >= 1 {
        let bz = cx.boundary_of(k, z);
        if bz.iter().any(|&v| v != 0) {
            return Err(Error::Domain("input chain is not a cycle".into()));
        }
    }
    Ok(())
}

fn fill_lp<T: LpScalar>(cx: &CellComplex, k: usize, z: &[i64]) -> Result<LpOutcome<T>> {
    let n = cx.count(k + 1);
    let rows = cx.count(k);
    let mut a = SparseMatrix::new(rows, 2 * n);
    let bdry = cx.boundary_matrix(k + 1);
    for col in 0..n {
        for (row, v) in &bdry.by_col[col] {
            a.push(*row, col, T::from_f64(*v as f64));
            a.push(*row, n + col, T::from_f64(-*v as f64));
        }
    }
    let mut c: Vec<T> = cx.weights(k + 1).iter().map(|&w| T::from_f64(w)).collect();
    c.extend(cx.weights(k + 1).iter().map(|&w| T::from_f64(w)));
    let b: Vec<T> = z.iter().map(|&v| T::from_f64(v as f64)).collect();
    solve_min(&c, &a, &b)
}

/// Minimal weighted filling of the `k`-cycle `z` by a real `(k+1)`-chain.
pub fn min_fill(cx: &CellComplex, k: usize, z: &[i64]) -> Result<FillResult> {
    check_cycle(cx, k, z)?;
    match fill_lp::<f64>(cx, k, z)? {
        LpOutcome::Infeasible { row } => Err(Error::Infeasible { row }),
        LpOutcome::Optimal { x, value } => {
            let n = cx.count(k + 1);
            let chain: Vec<f64> = (0..n).map(|j| x[j] - x[n + j]).collect();
            let bz = cx.boundary_matrix(k + 1).apply_f64(&chain);
            let residual = bz
                .iter()
                .zip(z)
                .map(|(a, b)| (a - *b as f64).abs())
                .fold(0.0, f64::max);
            if residual > 1e-9 {
                return Err(Error::Domain(format!(
                    "filling residual {residual:.3e} exceeds tolerance"
                )));
            }
            Ok(FillResult {
                chain,
                value,
                residual,
            })
        }
    }
}

/// Exact rational filling. Intended for complexes of a few thousand cells;
/// guards the acceptance fixtures.
pub fn min_fill_rational(
    cx: &CellComplex,
    k: usize,
    z: &[i64],
) -> Result<(Vec<BigRational>, BigRational)> {
    check_cycle(cx, k, z)?;
    match fill_lp::<BigRational>(cx, k, z)? {
        LpOutcome::Infeasible { row } => Err(Error::Infeasible { row }),
        LpOutcome::Optimal { x, value } => {
            let n = cx.count(k + 1);
            let chain: Vec<BigRational> =
                (0..n).map(|j| x[j].clone() - x[n + j].clone()).collect();
            Ok((chain, value))
        }
    }
}

/// Per-cycle `(weighted k-volume, minimal filling value)` pairs.
pub fn filling_profile(
    cx: &CellComplex,
    k: usize,
    cycles: &[Vec<i64>],
) -> Result<Vec<(f64, f64)>> {
    cycles
        .iter()
        .map(|z| {
            let l = cx.weighted_norm_int(k, z);
            let fill = min_fill(cx, k, z)?;
            Ok((l, fill.value))
        })
        .collect()
}

/// Cubical grid complex in chart coordinates with cell lookups.
#[derive(Debug, Clone)]
pub struct GridComplex {
    pub complex: CellComplex,
    axes: Vec<Vec<f64>>,
    dims: Vec<DimIndex>,
}

#[derive(Debug, Clone)]
struct DimIndex {
    masks: Vec<u32>,
    kept: Vec<HashMap<u64, usize>>,
    rev: Vec<(u32, Vec<usize>)>,
}

fn mixed_radix_key(idx: &[usize]) -> u64 {
    let mut key = 0u64;
    for &i in idx {
        key = key * 100_000 + i as u64 + 1;
    }
    key
}

impl GridComplex {
    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn cell_count(&self, dim: usize) -> usize {
        self.complex.count(dim)
    }

    /// Compact id of the cell extended along the axes of `mask` at the
    /// given multi-index (cell index on set axes, vertex index otherwise).
    pub fn cell_id(&self, dim: usize, mask: u32, idx: &[usize]) -> Option<usize> {
        let di = self.dims.get(dim)?;
        let mi = di.masks.iter().position(|&m| m == mask)?;
        di.kept[mi].get(&mixed_radix_key(idx)).copied()
    }

    pub fn cell_shape(&self, dim: usize, id: usize) -> (u32, &[usize]) {
        let (mask, idx) = &self.dims[dim].rev[id];
        (*mask, idx)
    }

    pub fn barycenter(&self, dim: usize, id: usize) -> Vec<f64> {
        let (mask, idx) = &self.dims[dim].rev[id];
        barycenter_of(&self.axes, *mask, idx)
    }

    /// Cells of the given dimension and axis mask whose barycenter passes
    /// the predicate.
    pub fn select(&self, dim: usize, mask: u32, pred: impl Fn(&[f64]) -> bool) -> Vec<usize> {
        self.dims[dim]
            .rev
            .iter()
            .enumerate()
            .filter(|(_, (m, idx))| *m == mask && pred(&barycenter_of(&self.axes, *m, idx)))
            .map(|(id, _)| id)
            .collect()
    }

    /// Boundary cycle of the indicator chain on the given dim-cells.
    pub fn boundary_cycle(&self, dim: usize, ids: &[usize]) -> Vec<i64> {
        let mut indicator = vec![0i64; self.complex.count(dim)];
        for &id in ids {
            indicator[id] = 1;
        }
        self.complex.boundary_of(dim, &indicator)
    }
}

fn barycenter_of(axes: &[Vec<f64>], mask: u32, idx: &[usize]) -> Vec<f64> {
    axes.iter()
        .enumerate()
        .map(|(a, cuts)| {
            if mask & (1 << a) != 0 {
                0.5 * (cuts[idx[a]] + cuts[idx[a] + 1])
            } else {
                cuts[idx[a]]
            }
        })
        .collect()
}

fn masks_with_popcount(naxes: usize, d: usize) -> Vec<u32> {
    (0u32..(1u32 << naxes))
        .filter(|m| m.count_ones() as usize == d)
        .collect()
}

fn enumerate_indices(axes: &[Vec<f64>], mask: u32) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = axes
        .iter()
        .enumerate()
        .map(|(a, cuts)| {
            if mask & (1 << a) != 0 {
                cuts.len() - 1
            } else {
                cuts.len()
            }
        })
        .collect();
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        out.push(idx.clone());
        for a in 0..axes.len() {
            idx[a] += 1;
            if idx[a] < sizes[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

/// Builds the grid complex on the product of the given axis cut lists,
/// keeping only cells whose barycenter passes `keep` and whose faces are
/// all kept (so removal never orphans a boundary).
pub fn build_grid(
    sp: &ProductSpace,
    axes: Vec<Vec<f64>>,
    keep: impl Fn(usize, &[f64]) -> bool,
) -> Result<GridComplex> {
    if axes.len() != sp.dim() {
        return Err(Error::Dimension(format!(
            "{} axes for a chart of dimension {}",
            axes.len(),
            sp.dim()
        )));
    }
    for cuts in &axes {
        if cuts.len() < 2 {
            return Err(Error::Domain("every axis needs at least one cell".into()));
        }
        if cuts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("axis cuts must increase".into()));
        }
    }
    // axis -> (factor, is_hyperbolic, height axis index of that factor)
    let mut axis_scale: Vec<Option<usize>> = vec![None; sp.dim()];
    for (fi, f) in sp.factors().iter().enumerate() {
        if f.is_hyperbolic() {
            let range = sp.block_range(fi);
            let height_axis = range.end - 1;
            for a in range {
                axis_scale[a] = Some(height_axis);
            }
        }
    }
    for (a, height) in axis_scale.iter().enumerate() {
        if let Some(h) = height {
            if axes[*h][0] <= 0.0 {
                return Err(Error::Domain(format!(
                    "height axis {h} must stay positive (axis {a} scales by it)"
                )));
            }
        }
    }

    let naxes = axes.len();
    let mut dims: Vec<DimIndex> = Vec::with_capacity(naxes + 1);
    for d in 0..=naxes {
        let masks = masks_with_popcount(naxes, d);
        let mut kept: Vec<HashMap<u64, usize>> = vec![HashMap::new(); masks.len()];
        let mut rev: Vec<(u32, Vec<usize>)> = Vec::new();
        for (mi, &mask) in masks.iter().enumerate() {
            for idx in enumerate_indices(&axes, mask) {
                let bary = barycenter_of(&axes, mask, &idx);
                if !keep(d, &bary) {
                    continue;
                }
                // faces must already be kept
                if d > 0 {
                    let prev = &dims[d - 1];
                    let mut ok = true;
                    'faces: for a in 0..naxes {
                        if mask & (1 << a) == 0 {
                            continue;
                        }
                        let fmask = mask & !(1 << a);
                        let fmi = prev.masks.iter().position(|&m| m == fmask).unwrap();
                        for hi in [0usize, 1] {
                            let mut fidx = idx.clone();
                            fidx[a] += hi;
                            if !prev.kept[fmi].contains_key(&mixed_radix_key(&fidx)) {
                                ok = false;
                                break 'faces;
                            }
                        }
                    }
                    if !ok {
                        continue;
                    }
                }
                let id = rev.len();
                kept[mi].insert(mixed_radix_key(&idx), id);
                rev.push((mask, idx));
            }
        }
        dims.push(DimIndex { masks, kept, rev });
    }

    let counts: Vec<usize> = dims.iter().map(|d| d.rev.len()).collect();
    let mut weights: Vec<Vec<f64>> = Vec::with_capacity(counts.len());
    for di in &dims {
        let ws = di
            .rev
            .iter()
            .map(|(mask, idx)| {
                let bary = barycenter_of(&axes, *mask, idx);
                let mut w = 1.0;
                for a in 0..naxes {
                    if mask & (1 << a) == 0 {
                        continue;
                    }
                    let delta = axes[a][idx[a] + 1] - axes[a][idx[a]];
                    let scale = match axis_scale[a] {
                        Some(h) => 1.0 / bary[h],
                        None => 1.0,
                    };
                    w *= delta * scale;
                }
                w
            })
            .collect();
        weights.push(ws);
    }

    let mut boundaries: Vec<SparseIntMatrix> = Vec::with_capacity(naxes);
    for d in 1..=naxes {
        let mut b = SparseIntMatrix::new(counts[d - 1], counts[d]);
        let prev = &dims[d - 1];
        for (col, (mask, idx)) in dims[d].rev.iter().enumerate() {
            let mut sign = 1i64;
            for a in 0..naxes {
                if mask & (1 << a) == 0 {
                    continue;
                }
                let fmask = mask & !(1 << a);
                let fmi = prev.masks.iter().position(|&m| m == fmask).unwrap();
                for (hi, s) in [(1usize, sign), (0usize, -sign)] {
                    let mut fidx = idx.clone();
                    fidx[a] += hi;
                    let row = prev.kept[fmi][&mixed_radix_key(&fidx)];
                    b.push(row, col, s);
                }
                sign = -sign;
            }
            b.by_col[col].sort_by_key(|&(r, _)| r);
        }
        boundaries.push(b);
    }

    let complex = CellComplex::new(counts, boundaries, weights)?;
    Ok(GridComplex {
        complex,
        axes,
        dims,
    })
}

/// Grid on a chart box. Hyperbolic height axes get geometric cut spacing
/// (uniform in hyperbolic distance); all other axes are uniform. The
/// optional horoball family removes cells whose barycenter lies inside any
/// open horoball.
pub fn discretize_region(
    sp: &ProductSpace,
    lo: &[f64],
    hi: &[f64],
    cells_per_axis: &[usize],
    horoballs: Option<&HoroballFamily>,
) -> Result<GridComplex> {
    if lo.len() != sp.dim() || hi.len() != sp.dim() || cells_per_axis.len() != sp.dim() {
        return Err(Error::Dimension("region bounds must match the chart".into()));
    }
    if lo.iter().zip(hi).any(|(a, b)| a.is_nan() || b.is_nan() || a >= b) {
        return Err(Error::Domain("empty region".into()));
    }
    let mut height_axes = vec![false; sp.dim()];
    for (fi, f) in sp.factors().iter().enumerate() {
        if f.is_hyperbolic() {
            height_axes[sp.block_range(fi).end - 1] = true;
        }
    }
    let axes: Vec<Vec<f64>> = (0..sp.dim())
        .map(|a| {
            let n = cells_per_axis[a].max(1);
            if height_axes[a] {
                let ratio = hi[a] / lo[a];
                (0..=n)
                    .map(|j| lo[a] * ratio.powf(j as f64 / n as f64))
                    .collect()
            } else {
                (0..=n)
                    .map(|j| lo[a] + (hi[a] - lo[a]) * j as f64 / n as f64)
                    .collect()
            }
        })
        .collect();
    build_grid(sp, axes, |_, bary| match horoballs {
        Some(hb) => sp.in_neutered(hb, &SpacePoint::new(bary.to_vec())),
        None => true,
    })
}

/// Euclidean helper space for grids living inside a flat.
pub fn flat_chart_space(dim: usize) -> ProductSpace {
    ProductSpace::with_standard_basepoint(vec![Factor::Euclidean { dim }])
        .expect("euclidean chart space")
}

/// Uniform grid over a box in a flat's isometric chart; weights are plain
/// Euclidean volumes.
pub fn grid_on_flat(
    flat_dim: usize,
    lo: &[f64],
    hi: &[f64],
    cells_per_axis: &[usize],
) -> Result<GridComplex> {
    let sp = flat_chart_space(flat_dim);
    discretize_region(&sp, lo, hi, cells_per_axis, None)
}

/// Verifies that an LP filling is integral and rounds it; errors when any
/// coefficient strays from an integer by more than `tol`.
pub fn round_integral_chain(chain: &[f64], tol: f64) -> Result<Vec<i64>> {
    chain
        .iter()
        .map(|&x| {
            let r = x.round();
            if (x - r).abs() > tol {
                Err(Error::Domain(format!(
                    "filling coefficient {x} is not integral"
                )))
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

pub fn rational_is_integral(chain: &[BigRational]) -> bool {
    chain.iter().all(|x| x.is_integer())
}
