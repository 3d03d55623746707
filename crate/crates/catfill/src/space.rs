//! Model CAT(0) spaces: metric products of upper-half-space hyperbolic
//! factors (curvature -1) and Euclidean factors.
//!
//! Points are stored in chart coordinates, one block per factor. A
//! hyperbolic factor of dimension `d` uses `d` coordinates
//! `[x_1, ..., x_{d-1}, y]` with height `y > 0` last; a Euclidean factor of
//! dimension `d` uses `d` plain coordinates. Distances, geodesics, Busemann
//! functions, asymptotic rays, convex projections, and horoball membership
//! are all closed-form.
//!
//! Boundary directions are restricted to the chart's vertical infinity per
//! hyperbolic factor plus an optional unit direction per Euclidean factor,
//! weighted by speeds with unit square sum. This covers every direction the
//! filling constructions flow toward; general directions are conjugate to
//! these by isometries.

use crate::error::{Error, Result};
use rand::Rng;

/// One factor of the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// Upper half-space model of curvature -1 hyperbolic space, `dim >= 2`.
    Hyperbolic { dim: usize },
    /// Flat factor, `dim >= 1`.
    Euclidean { dim: usize },
}

impl Factor {
    pub fn dim(&self) -> usize {
        match *self {
            Factor::Hyperbolic { dim } | Factor::Euclidean { dim } => dim,
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, Factor::Hyperbolic { .. })
    }

    /// Contribution to the Euclidean rank: 1 per hyperbolic factor, `dim`
    /// per Euclidean factor.
    pub fn rank(&self) -> usize {
        match *self {
            Factor::Hyperbolic { .. } => 1,
            Factor::Euclidean { dim } => dim,
        }
    }
}

/// A point of the product space in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacePoint {
    pub coords: Vec<f64>,
}

impl SpacePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        SpacePoint { coords }
    }
}

/// Product of hyperbolic and Euclidean factors with a basepoint.
#[derive(Debug, Clone)]
pub struct ProductSpace {
    factors: Vec<Factor>,
    offsets: Vec<usize>,
    basepoint: SpacePoint,
    dim: usize,
    rank: usize,
}

/// Direction at infinity: per hyperbolic factor the chart's vertical
/// infinity, per Euclidean factor an optional unit direction, with
/// nonnegative per-factor speeds of unit square sum.
#[derive(Debug, Clone)]
pub struct BoundaryDirection {
    speeds: Vec<f64>,
    euclidean_dirs: Vec<Option<Vec<f64>>>,
}

/// Finitely many horoballs; each entry is `{ x : busemann(dir, x) <= level }`.
#[derive(Debug, Clone, Default)]
pub struct HoroballFamily {
    pub entries: Vec<(BoundaryDirection, f64)>,
}

/// One flat component per factor.
#[derive(Debug, Clone)]
pub enum FlatComponent {
    /// Vertical geodesic of a hyperbolic factor through `(x0, y0)`,
    /// parametrized by arclength `t -> (x0, y0 * e^t)`.
    Geodesic { x0: Vec<f64>, y0: f64 },
    /// Hyperbolic factor pinned to a single point.
    Fixed { point: Vec<f64> },
    /// Affine subspace of a Euclidean factor with orthonormal axes.
    Affine { origin: Vec<f64>, axes: Vec<Vec<f64>> },
}

/// A totally geodesic flat: a product of one vertical geodesic per chosen
/// hyperbolic factor and an affine subspace per Euclidean factor. Its chart
/// is an isometry from `R^dim` onto the flat.
#[derive(Debug, Clone)]
pub struct FlatSpec {
    components: Vec<FlatComponent>,
    dim: usize,
}

const HEIGHT_TOL: f64 = 0.0;

impl ProductSpace {
    pub fn new(factors: Vec<Factor>, basepoint: SpacePoint) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("empty factor list".into()));
        }
        for f in &factors {
            match *f {
                Factor::Hyperbolic { dim } if dim < 2 => {
                    return Err(Error::Domain(format!("hyperbolic factor of dim {dim} < 2")))
                }
                Factor::Euclidean { dim } if dim < 1 => {
                    return Err(Error::Domain("euclidean factor of dim 0".into()))
                }
                _ => {}
            }
        }
        let mut offsets = Vec::with_capacity(factors.len());
        let mut total = 0;
        for f in &factors {
            offsets.push(total);
            total += f.dim();
        }
        let dim = total;
        let rank = factors.iter().map(Factor::rank).sum();
        let sp = ProductSpace {
            factors,
            offsets,
            basepoint: SpacePoint::new(vec![0.0; dim]),
            dim,
            rank,
        };
        if basepoint.coords.len() != dim {
            return Err(Error::Dimension(format!(
                "basepoint has {} coordinates, space has dimension {dim}",
                basepoint.coords.len()
            )));
        }
        if !sp.contains(&basepoint) {
            return Err(Error::Domain("basepoint heights must be positive".into()));
        }
        Ok(ProductSpace { basepoint, ..sp })
    }

    /// Basepoint with unit heights and zero horizontal/Euclidean coordinates.
    pub fn with_standard_basepoint(factors: Vec<Factor>) -> Result<Self> {
        let dim: usize = factors.iter().map(Factor::dim).sum();
        let mut coords = vec![0.0; dim];
        let mut off = 0;
        for f in &factors {
            if f.is_hyperbolic() {
                coords[off + f.dim() - 1] = 1.0;
            }
            off += f.dim();
        }
        Self::new(factors, SpacePoint::new(coords))
    }

    /// Parses a space spec like `H2`, `H2xH2`, `H2xE1`, `H3 neutered level=-1`.
    pub fn parse(spec: &str) -> Result<(Self, Option<HoroballFamily>)> {
        let mut words = spec.split_whitespace();
        let head = words
            .next()
            .ok_or_else(|| Error::SpaceSpec("empty spec".into()))?;
        let mut factors = Vec::new();
        for tok in head.split('x') {
            let bad = || Error::SpaceSpec(tok.to_string());
            if tok.len() < 2 {
                return Err(bad());
            }
            let (kind, digits) = tok.split_at(1);
            let d: usize = digits.parse().map_err(|_| bad())?;
            match kind {
                "H" if d >= 2 => factors.push(Factor::Hyperbolic { dim: d }),
                "E" if d >= 1 => factors.push(Factor::Euclidean { dim: d }),
                _ => return Err(bad()),
            }
        }
        let sp = Self::with_standard_basepoint(factors)?;
        let mut horoballs = None;
        match words.next() {
            None => {}
            Some("neutered") => {
                let mut level = 0.0;
                for extra in words {
                    if let Some(v) = extra.strip_prefix("level=") {
                        level = v
                            .parse()
                            .map_err(|_| Error::SpaceSpec(format!("bad level in {spec:?}")))?;
                    } else {
                        return Err(Error::SpaceSpec(extra.to_string()));
                    }
                }
                let dir = sp.default_direction()?;
                horoballs = Some(HoroballFamily {
                    entries: vec![(dir, level)],
                });
            }
            Some(other) => return Err(Error::SpaceSpec(other.to_string())),
        }
        Ok((sp, horoballs))
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn basepoint(&self) -> &SpacePoint {
        &self.basepoint
    }

    pub fn block_range(&self, factor: usize) -> std::ops::Range<usize> {
        let start = self.offsets[factor];
        start..start + self.factors[factor].dim()
    }

    pub fn block<'a>(&self, p: &'a SpacePoint, factor: usize) -> &'a [f64] {
        &p.coords[self.block_range(factor)]
    }

    /// All heights strictly positive and the coordinate count right.
    pub fn contains(&self, p: &SpacePoint) -> bool {
        if p.coords.len() != self.dim {
            return false;
        }
        self.factors.iter().enumerate().all(|(i, f)| {
            !f.is_hyperbolic() || self.block(p, i)[f.dim() - 1] > HEIGHT_TOL
        })
    }

    fn check_point(&self, p: &SpacePoint) -> Result<()> {
        if p.coords.len() != self.dim {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, space has dimension {}",
                p.coords.len(),
                self.dim
            )));
        }
        if !self.contains(p) {
            return Err(Error::Domain("nonpositive hyperbolic height".into()));
        }
        Ok(())
    }

    /// Product metric: the square root of the sum of squared factor distances.
    pub fn distance(&self, p: &SpacePoint, q: &SpacePoint) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        let mut sum = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            let d = factor_distance(*f, self.block(p, i), self.block(q, i));
            sum += d * d;
        }
        Ok(sum.sqrt())
    }

    /// Constant-speed geodesic interpolation with `d(p, gamma(s)) = s * d(p, q)`.
    pub fn geodesic_point(&self, p: &SpacePoint, q: &SpacePoint, s: f64) -> Result<SpacePoint> {
        self.check_point(p)?;
        self.check_point(q)?;
        if s == 0.0 || p == q {
            return Ok(p.clone());
        }
        if s == 1.0 {
            return Ok(q.clone());
        }
        let mut coords = Vec::with_capacity(self.dim);
        for (i, f) in self.factors.iter().enumerate() {
            let pb = self.block(p, i);
            let qb = self.block(q, i);
            match f {
                Factor::Euclidean { .. } => {
                    coords.extend(pb.iter().zip(qb).map(|(a, b)| a + s * (b - a)));
                }
                Factor::Hyperbolic { .. } => {
                    coords.extend(hyp_geodesic_point(pb, qb, s));
                }
            }
        }
        Ok(SpacePoint::new(coords))
    }

    /// Per-factor speeds all equal on hyperbolic factors, Euclidean inactive.
    pub fn default_direction(&self) -> Result<BoundaryDirection> {
        let h = self.factors.iter().filter(|f| f.is_hyperbolic()).count();
        if h == 0 {
            return Err(Error::Domain(
                "no hyperbolic factor: no chamber direction to flow toward".into(),
            ));
        }
        let c = 1.0 / (h as f64).sqrt();
        let speeds = self
            .factors
            .iter()
            .map(|f| if f.is_hyperbolic() { c } else { 0.0 })
            .collect();
        BoundaryDirection::new(self, speeds, vec![None; self.factors.len()])
    }

    /// Weighted Busemann function, normalized to 0 at the basepoint.
    pub fn busemann(&self, w: &BoundaryDirection, p: &SpacePoint) -> f64 {
        let mut total = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            let c = w.speeds[i];
            if c == 0.0 {
                continue;
            }
            let pb = self.block(p, i);
            let bb = self.block(&self.basepoint, i);
            let b = match f {
                Factor::Hyperbolic { dim } => -(pb[dim - 1] / bb[dim - 1]).ln(),
                Factor::Euclidean { .. } => {
                    let dir = w.euclidean_dirs[i].as_ref().expect("active euclidean dir");
                    -pb.iter()
                        .zip(bb)
                        .zip(dir)
                        .map(|((x, x0), u)| (x - x0) * u)
                        .sum::<f64>()
                }
            };
            total += c * b;
        }
        total
    }

    /// Unit-speed ray toward `w`: factor `i` flows at speed `c_i`
    /// (hyperbolic heights multiply by `e^{c_i t}`). The Busemann function
    /// of `w` decreases by exactly `t` along the ray.
    pub fn asymptotic_ray(&self, p: &SpacePoint, w: &BoundaryDirection, t: f64) -> SpacePoint {
        let mut coords = p.coords.clone();
        for (i, f) in self.factors.iter().enumerate() {
            let c = w.speeds[i];
            if c == 0.0 {
                continue;
            }
            let range = self.block_range(i);
            match f {
                Factor::Hyperbolic { dim } => {
                    coords[range.start + dim - 1] *= (c * t).exp();
                }
                Factor::Euclidean { .. } => {
                    let dir = w.euclidean_dirs[i].as_ref().expect("active euclidean dir");
                    for (x, u) in coords[range].iter_mut().zip(dir) {
                        *x += c * t * u;
                    }
                }
            }
        }
        SpacePoint::new(coords)
    }

    /// Nearest-point projection onto a flat, per factor in closed form.
    pub fn project_to_flat(&self, flat: &FlatSpec, p: &SpacePoint) -> Result<SpacePoint> {
        self.check_point(p)?;
        flat.check_against(self)?;
        Ok(flat.project(self, p))
    }

    /// Flows `p` along the ray toward `w` until its Busemann value is `level`.
    /// Errors when `p` lies strictly inside the horoball `{b < level}`.
    pub fn project_to_horosphere(
        &self,
        w: &BoundaryDirection,
        level: f64,
        p: &SpacePoint,
    ) -> Result<SpacePoint> {
        self.check_point(p)?;
        let t = self.busemann(w, p) - level;
        if t < -1e-9 {
            return Err(Error::Domain(format!(
                "point is strictly inside the horoball (busemann excess {t:.3e})"
            )));
        }
        Ok(self.asymptotic_ray(p, w, t.max(0.0)))
    }

    /// True iff `p` avoids every open horoball in the family.
    pub fn in_neutered(&self, hb: &HoroballFamily, p: &SpacePoint) -> bool {
        hb.entries
            .iter()
            .all(|(dir, level)| self.busemann(dir, p) >= *level)
    }

    /// Canonical maximal flat through the basepoint: the vertical geodesic of
    /// every hyperbolic factor times every full Euclidean factor.
    pub fn maximal_flat(&self) -> FlatSpec {
        let components = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let bb = self.block(&self.basepoint, i);
                match f {
                    Factor::Hyperbolic { dim } => FlatComponent::Geodesic {
                        x0: bb[..dim - 1].to_vec(),
                        y0: bb[dim - 1],
                    },
                    Factor::Euclidean { dim } => FlatComponent::Affine {
                        origin: bb.to_vec(),
                        axes: (0..*dim)
                            .map(|j| {
                                let mut a = vec![0.0; *dim];
                                a[j] = 1.0;
                                a
                            })
                            .collect(),
                    },
                }
            })
            .collect();
        FlatSpec::assemble(components)
    }

    /// Riemannian inner product of chart tangent vectors at `at`.
    pub fn metric_dot(&self, at: &SpacePoint, u: &[f64], v: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            let range = self.block_range(i);
            let dot: f64 = u[range.clone()]
                .iter()
                .zip(&v[range.clone()])
                .map(|(a, b)| a * b)
                .sum();
            match f {
                Factor::Hyperbolic { dim } => {
                    let y = at.coords[range.start + dim - 1];
                    total += dot / (y * y);
                }
                Factor::Euclidean { .. } => total += dot,
            }
        }
        total
    }

    /// Random point within roughly `radius` of the basepoint. Sampling
    /// helper for property checks and Lipschitz surveys.
    pub fn sample_point<R: Rng>(&self, rng: &mut R, radius: f64) -> SpacePoint {
        let mut coords = self.basepoint.coords.clone();
        for (i, f) in self.factors.iter().enumerate() {
            let range = self.block_range(i);
            match f {
                Factor::Euclidean { .. } => {
                    for x in &mut coords[range] {
                        *x += rng.random_range(-radius..=radius);
                    }
                }
                Factor::Hyperbolic { dim } => {
                    let d = *dim;
                    let dir = random_unit(rng, d);
                    let t = rng.random_range(0.0..=radius);
                    let xb = coords[range.start..range.start + d - 1].to_vec();
                    let yb = coords[range.start + d - 1];
                    let block = hyperbolic_exp_block(&xb, yb, &dir[..d - 1], dir[d - 1], t);
                    coords[range].copy_from_slice(&block);
                }
            }
        }
        SpacePoint::new(coords)
    }
}

fn random_unit<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Distance inside one factor.
pub fn factor_distance(f: Factor, pb: &[f64], qb: &[f64]) -> f64 {
    match f {
        Factor::Euclidean { .. } => pb
            .iter()
            .zip(qb)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        Factor::Hyperbolic { dim } => {
            let yp = pb[dim - 1];
            let yq = qb[dim - 1];
            let mut s = (yp - yq) * (yp - yq);
            for j in 0..dim - 1 {
                s += (pb[j] - qb[j]) * (pb[j] - qb[j]);
            }
            // d = 2 asinh( sqrt(s / (4 yp yq)) ), stable near coincident points
            2.0 * (s / (4.0 * yp * yq)).sqrt().asinh()
        }
    }
}

/// Geodesic interpolation in one upper-half-space factor. The geodesic is a
/// vertical line or a semicircle orthogonal to the boundary; the circle case
/// is parametrized by arclength `t(theta) = ln tan(theta/2)`.
fn hyp_geodesic_point(pb: &[f64], qb: &[f64], s: f64) -> Vec<f64> {
    let d = pb.len();
    let yp = pb[d - 1];
    let yq = qb[d - 1];
    let dx: Vec<f64> = (0..d - 1).map(|j| qb[j] - pb[j]).collect();
    let r2: f64 = dx.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r2 <= 1e-14 * (yp + yq) {
        let mut out = Vec::with_capacity(d);
        out.extend((0..d - 1).map(|j| pb[j] + s * dx[j]));
        out.push(yp * (yq / yp).powf(s));
        return out;
    }
    let u: Vec<f64> = dx.iter().map(|x| x / r2).collect();
    let xi_c = (r2 * r2 + yq * yq - yp * yp) / (2.0 * r2);
    let r = (xi_c * xi_c + yp * yp).sqrt();
    let theta_p = yp.atan2(-xi_c);
    let theta_q = yq.atan2(r2 - xi_c);
    let tp = (theta_p / 2.0).tan().ln();
    let tq = (theta_q / 2.0).tan().ln();
    let t = (1.0 - s) * tp + s * tq;
    let theta = 2.0 * t.exp().atan();
    let xi = xi_c + r * theta.cos();
    let y = r * theta.sin();
    let mut out = Vec::with_capacity(d);
    out.extend((0..d - 1).map(|j| pb[j] + xi * u[j]));
    out.push(y.max(f64::MIN_POSITIVE));
    out
}

/// Exponential map of one hyperbolic factor from `(xb, yb)`: geodesic of
/// length `t` whose unit tangent has horizontal part `vx` (direction in the
/// boundary chart) and vertical part `vy`, with `|(|vx|, vy)|` arbitrary
/// (only the direction matters).
pub fn hyperbolic_exp_block(xb: &[f64], yb: f64, vx: &[f64], vy: f64, t: f64) -> Vec<f64> {
    let hx: f64 = vx.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm = (hx * hx + vy * vy).sqrt();
    if norm <= 0.0 || t == 0.0 {
        let mut out = xb.to_vec();
        out.push(yb);
        return out;
    }
    let phi = hx.atan2(vy);
    let rho = (t / 2.0).tanh();
    let den = 1.0 - 2.0 * rho * phi.cos() + rho * rho;
    let x_std = 2.0 * rho * phi.sin() / den;
    let y_std = (1.0 - rho * rho) / den;
    let mut out = Vec::with_capacity(xb.len() + 1);
    if hx > 0.0 {
        out.extend(xb.iter().zip(vx).map(|(x0, v)| x0 + yb * x_std * v / hx));
    } else {
        out.extend_from_slice(xb);
    }
    out.push(yb * y_std.max(f64::MIN_POSITIVE));
    out
}

impl BoundaryDirection {
    pub fn new(
        sp: &ProductSpace,
        speeds: Vec<f64>,
        euclidean_dirs: Vec<Option<Vec<f64>>>,
    ) -> Result<Self> {
        if speeds.len() != sp.factors().len() || euclidean_dirs.len() != sp.factors().len() {
            return Err(Error::Dimension(
                "per-factor speeds/directions count mismatch".into(),
            ));
        }
        if speeds.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(Error::Domain("speeds must be nonnegative".into()));
        }
        let total: f64 = speeds.iter().map(|c| c * c).sum();
        if total <= 0.0 {
            return Err(Error::Domain("at least one speed must be positive".into()));
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "speeds have square sum {total}, expected 1"
            )));
        }
        let mut dirs = Vec::with_capacity(euclidean_dirs.len());
        for (i, (f, dir)) in sp.factors().iter().zip(euclidean_dirs).enumerate() {
            match (f, dir, speeds[i] > 0.0) {
                (Factor::Hyperbolic { .. }, None, _) => dirs.push(None),
                (Factor::Hyperbolic { .. }, Some(_), _) => {
                    return Err(Error::Domain(
                        "hyperbolic factors flow toward the chart infinity; no direction expected"
                            .into(),
                    ))
                }
                (Factor::Euclidean { .. }, None, false) => dirs.push(None),
                (Factor::Euclidean { .. }, None, true) => {
                    return Err(Error::Domain(
                        "active euclidean factor needs a unit direction".into(),
                    ))
                }
                (Factor::Euclidean { dim }, Some(mut u), _) => {
                    if u.len() != *dim {
                        return Err(Error::Dimension("euclidean direction dimension".into()));
                    }
                    let n: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n <= 0.0 {
                        return Err(Error::Domain("zero euclidean direction".into()));
                    }
                    for x in &mut u {
                        *x /= n;
                    }
                    dirs.push(Some(u));
                }
            }
        }
        Ok(BoundaryDirection {
            speeds,
            euclidean_dirs: dirs,
        })
    }

    /// Vertical infinity of every hyperbolic factor with the given speeds;
    /// Euclidean factors inactive.
    pub fn vertical(sp: &ProductSpace, speeds: Vec<f64>) -> Result<Self> {
        for (f, &c) in sp.factors().iter().zip(&speeds) {
            if !f.is_hyperbolic() && c != 0.0 {
                return Err(Error::Domain(
                    "vertical direction cannot move a euclidean factor".into(),
                ));
            }
        }
        Self::new(sp, speeds, vec![None; sp.factors().len()])
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn euclidean_dir(&self, factor: usize) -> Option<&[f64]> {
        self.euclidean_dirs[factor].as_deref()
    }
}

impl HoroballFamily {
    pub fn single(dir: BoundaryDirection, level: f64) -> Self {
        HoroballFamily {
            entries: vec![(dir, level)],
        }
    }

    /// Sampled check that the open horoballs are pairwise disjoint.
    pub fn disjoint_by_sampling<R: Rng>(
        &self,
        sp: &ProductSpace,
        rng: &mut R,
        samples: usize,
        radius: f64,
    ) -> bool {
        for _ in 0..samples {
            let p = sp.sample_point(rng, radius);
            let inside = self
                .entries
                .iter()
                .filter(|(dir, level)| sp.busemann(dir, &p) < *level)
                .count();
            if inside > 1 {
                return false;
            }
        }
        true
    }
}

impl FlatSpec {
    fn assemble(components: Vec<FlatComponent>) -> Self {
        let dim = components
            .iter()
            .map(|c| match c {
                FlatComponent::Geodesic { .. } => 1,
                FlatComponent::Fixed { .. } => 0,
                FlatComponent::Affine { axes, .. } => axes.len(),
            })
            .sum();
        FlatSpec { components, dim }
    }

    pub fn new(sp: &ProductSpace, components: Vec<FlatComponent>) -> Result<Self> {
        let flat = Self::assemble(components);
        flat.check_against(sp)?;
        Ok(flat)
    }

    pub fn components(&self) -> &[FlatComponent] {
        &self.components
    }

    /// Dimension of the flat (number of chart coordinates).
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_against(&self, sp: &ProductSpace) -> Result<()> {
        if self.components.len() != sp.factors().len() {
            return Err(Error::Dimension(
                "flat spec must have one component per factor".into(),
            ));
        }
        for (f, c) in sp.factors().iter().zip(&self.components) {
            match (f, c) {
                (Factor::Hyperbolic { dim }, FlatComponent::Geodesic { x0, y0 }) => {
                    if x0.len() != dim - 1 {
                        return Err(Error::Dimension("geodesic foot dimension".into()));
                    }
                    if *y0 <= 0.0 {
                        return Err(Error::Domain("geodesic reference height".into()));
                    }
                }
                (Factor::Hyperbolic { dim }, FlatComponent::Fixed { point }) => {
                    if point.len() != *dim {
                        return Err(Error::Dimension("fixed point dimension".into()));
                    }
                    if point[dim - 1] <= 0.0 {
                        return Err(Error::Domain("fixed point height".into()));
                    }
                }
                (Factor::Euclidean { dim }, FlatComponent::Affine { origin, axes }) => {
                    if origin.len() != *dim || axes.iter().any(|a| a.len() != *dim) {
                        return Err(Error::Dimension("affine component dimension".into()));
                    }
                    if axes.len() > *dim {
                        return Err(Error::Domain("too many affine axes".into()));
                    }
                    for (i, a) in axes.iter().enumerate() {
                        for (j, b) in axes.iter().enumerate() {
                            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                            let want = if i == j { 1.0 } else { 0.0 };
                            if (dot - want).abs() > 1e-9 {
                                return Err(Error::Domain("affine axes not orthonormal".into()));
                            }
                        }
                    }
                }
                _ => {
                    return Err(Error::Domain(
                        "flat component kind does not match factor kind".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Isometric chart `R^dim -> flat`.
    pub fn embed(&self, sp: &ProductSpace, chart: &[f64]) -> Result<SpacePoint> {
        if chart.len() != self.dim {
            return Err(Error::Dimension(format!(
                "chart has {} coordinates, flat has dimension {}",
                chart.len(),
                self.dim
            )));
        }
        let mut coords = Vec::with_capacity(sp.dim());
        let mut next = 0;
        for c in &self.components {
            match c {
                FlatComponent::Geodesic { x0, y0 } => {
                    coords.extend_from_slice(x0);
                    coords.push(y0 * chart[next].exp());
                    next += 1;
                }
                FlatComponent::Fixed { point } => coords.extend_from_slice(point),
                FlatComponent::Affine { origin, axes } => {
                    let mut block = origin.clone();
                    for a in axes {
                        for (b, ai) in block.iter_mut().zip(a) {
                            *b += chart[next] * ai;
                        }
                        next += 1;
                    }
                    coords.extend_from_slice(&block);
                }
            }
        }
        Ok(SpacePoint::new(coords))
    }

    /// Nearest-point projection, factor by factor.
    pub fn project(&self, sp: &ProductSpace, p: &SpacePoint) -> SpacePoint {
        self.embed(sp, &self.projection_chart(sp, p))
            .expect("projection chart has the flat's dimension")
    }

    /// Chart coordinates of the projection of `p`.
    pub fn projection_chart(&self, sp: &ProductSpace, p: &SpacePoint) -> Vec<f64> {
        let mut chart = Vec::with_capacity(self.dim);
        for (i, c) in self.components.iter().enumerate() {
            let pb = sp.block(p, i);
            match c {
                FlatComponent::Geodesic { x0, y0 } => {
                    // foot of the orthogonal circle: (x0, sqrt(|x-x0|^2 + y^2))
                    let d = pb.len();
                    let y = pb[d - 1];
                    let mut s = y * y;
                    for j in 0..d - 1 {
                        s += (pb[j] - x0[j]) * (pb[j] - x0[j]);
                    }
                    chart.push((s.sqrt() / y0).ln());
                }
                FlatComponent::Fixed { .. } => {}
                FlatComponent::Affine { origin, axes } => {
                    for a in axes {
                        chart.push(
                            pb.iter()
                                .zip(origin)
                                .zip(a)
                                .map(|((x, o), ai)| (x - o) * ai)
                                .sum(),
                        );
                    }
                }
            }
        }
        chart
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn h2() -> ProductSpace {
        ProductSpace::with_standard_basepoint(vec![Factor::Hyperbolic { dim: 2 }]).unwrap()
    }

    fn h2xh2() -> ProductSpace {
        ProductSpace::with_standard_basepoint(vec![
            Factor::Hyperbolic { dim: 2 },
            Factor::Hyperbolic { dim: 2 },
        ])
        .unwrap()
    }

    fn pt(coords: &[f64]) -> SpacePoint {
        SpacePoint::new(coords.to_vec())
    }

    #[test]
    fn vertical_distance_is_log_height_ratio() {
        let sp = h2();
        let d = sp
            .distance(&pt(&[0.0, 1.0]), &pt(&[0.0, std::f64::consts::E]))
            .unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert_eq!(sp.distance(&pt(&[0.3, 2.0]), &pt(&[0.3, 2.0])).unwrap(), 0.0);
    }

    #[test]
    fn product_distance_is_pythagorean() {
        let sp = h2xh2();
        // factor distances 3 and 4 via vertical pairs
        let p = pt(&[0.0, 1.0, 0.0, 1.0]);
        let q = pt(&[0.0, 3f64.exp(), 0.0, 4f64.exp()]);
        assert!((sp.distance(&p, &q).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn distance_rejects_bad_heights() {
        let sp = h2();
        assert!(sp.distance(&pt(&[0.0, -1.0]), &pt(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn geodesic_endpoints_and_vertical_midpoint() {
        let sp = h2();
        let p = pt(&[0.0, 1.0]);
        let q = pt(&[0.0, (2.0f64).exp()]);
        assert_eq!(sp.geodesic_point(&p, &q, 0.0).unwrap(), p);
        assert_eq!(sp.geodesic_point(&p, &q, 1.0).unwrap(), q);
        let mid = sp.geodesic_point(&p, &q, 0.5).unwrap();
        assert!((mid.coords[1] - std::f64::consts::E).abs() < 1e-12);
        assert!(mid.coords[0].abs() < 1e-12);
    }

    #[test]
    fn geodesic_is_constant_speed() {
        let sp = h2xh2();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let p = sp.sample_point(&mut rng, 2.0);
            let q = sp.sample_point(&mut rng, 2.0);
            let d = sp.distance(&p, &q).unwrap();
            if d < 1e-9 {
                continue;
            }
            for s in [0.25, 0.5, 0.8] {
                let g = sp.geodesic_point(&p, &q, s).unwrap();
                let dp = sp.distance(&p, &g).unwrap();
                let dq = sp.distance(&g, &q).unwrap();
                assert!((dp - s * d).abs() < 1e-9 * (1.0 + d));
                assert!((dp + dq - d).abs() < 1e-9 * (1.0 + d));
            }
        }
    }

    #[test]
    fn euclidean_factor_interpolates_affinely() {
        let sp = ProductSpace::with_standard_basepoint(vec![Factor::Euclidean { dim: 2 }]).unwrap();
        let g = sp
            .geodesic_point(&pt(&[0.0, 0.0]), &pt(&[2.0, -4.0]), 0.25)
            .unwrap();
        assert_eq!(g.coords, vec![0.5, -1.0]);
    }

    #[test]
    fn busemann_examples() {
        let sp = h2();
        let w = sp.default_direction().unwrap();
        assert_eq!(sp.busemann(&w, sp.basepoint()), 0.0);
        let t = 1.7f64;
        let p = pt(&[0.0, t.exp()]);
        assert!((sp.busemann(&w, &p) + t).abs() < 1e-12);

        let sp2 = h2xh2();
        let w2 = sp2.default_direction().unwrap();
        let e = std::f64::consts::E;
        let p2 = pt(&[0.0, e, 0.0, e]);
        assert!((sp2.busemann(&w2, &p2) + std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn ray_identities() {
        let sp = h2xh2();
        let w = sp.default_direction().unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let p = sp.sample_point(&mut rng, 2.0);
            assert_eq!(sp.asymptotic_ray(&p, &w, 0.0), p);
            for t in [0.3, 1.0, 4.0] {
                let r = sp.asymptotic_ray(&p, &w, t);
                // defining property of the Busemann function along the ray
                assert!((sp.busemann(&w, &r) - (sp.busemann(&w, &p) - t)).abs() < 1e-12);
                // unit speed
                assert!((sp.distance(&p, &r).unwrap() - t).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn vertical_ray_in_h2() {
        let sp = h2();
        let w = sp.default_direction().unwrap();
        let p = pt(&[0.7, 2.0]);
        let r = sp.asymptotic_ray(&p, &w, 3.0);
        assert_eq!(r.coords[0], 0.7);
        assert!((r.coords[1] - 2.0 * 3.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn rays_converge_in_cat0() {
        let sp = h2xh2();
        let w = sp.default_direction().unwrap();
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..50 {
            let p = sp.sample_point(&mut rng, 2.0);
            let q = sp.sample_point(&mut rng, 2.0);
            let mut last = f64::INFINITY;
            for i in 0..=20 {
                let t = i as f64 * 0.5;
                let d = sp
                    .distance(&sp.asymptotic_ray(&p, &w, t), &sp.asymptotic_ray(&q, &w, t))
                    .unwrap();
                assert!(d <= last + 1e-12, "asymptotic rays diverged");
                last = d;
            }
        }
    }

    /// Numeric minimization oracle for the closed-form foot of the
    /// projection onto a vertical geodesic.
    #[test]
    fn flat_projection_matches_minimization_oracle() {
        let sp = h2();
        let flat = sp.maximal_flat();
        let p = pt(&[1.3, 0.4]);
        let foot = sp.project_to_flat(&flat, &p).unwrap();
        let expected_h = (1.3f64 * 1.3 + 0.4 * 0.4).sqrt();
        assert!(foot.coords[0].abs() < 1e-12);
        assert!((foot.coords[1] - expected_h).abs() < 1e-12);

        let d_foot = sp.distance(&p, &foot).unwrap();
        let mut best = f64::INFINITY;
        for i in -4000..=4000 {
            let h = (i as f64 * 0.001).exp();
            let d = sp.distance(&p, &pt(&[0.0, h])).unwrap();
            best = best.min(d);
        }
        assert!(d_foot <= best + 1e-6);
    }

    #[test]
    fn projection_fixes_the_flat_and_affine_case() {
        let sp = ProductSpace::with_standard_basepoint(vec![
            Factor::Hyperbolic { dim: 2 },
            Factor::Euclidean { dim: 2 },
        ])
        .unwrap();
        let flat = sp.maximal_flat();
        let on_flat = flat.embed(&sp, &[0.7, 1.0, -2.0]).unwrap();
        let proj = sp.project_to_flat(&flat, &on_flat).unwrap();
        for (a, b) in proj.coords.iter().zip(&on_flat.coords) {
            assert!((a - b).abs() < 1e-12);
        }

        // affine subspace of the euclidean factor: the first axis only
        let flat2 = FlatSpec::new(
            &sp,
            vec![
                FlatComponent::Geodesic {
                    x0: vec![0.0],
                    y0: 1.0,
                },
                FlatComponent::Affine {
                    origin: vec![0.0, 0.0],
                    axes: vec![vec![1.0, 0.0]],
                },
            ],
        )
        .unwrap();
        let p = pt(&[0.5, 2.0, 3.0, 4.0]);
        let proj = sp.project_to_flat(&flat2, &p).unwrap();
        assert_eq!(proj.coords[2], 3.0);
        assert_eq!(proj.coords[3], 0.0);
    }

    #[test]
    fn flat_projection_is_one_lipschitz() {
        let sp = h2xh2();
        let flat = sp.maximal_flat();
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..2000 {
            let p = sp.sample_point(&mut rng, 3.0);
            let q = sp.sample_point(&mut rng, 3.0);
            let d = sp.distance(&p, &q).unwrap();
            let dp = sp
                .distance(
                    &sp.project_to_flat(&flat, &p).unwrap(),
                    &sp.project_to_flat(&flat, &q).unwrap(),
                )
                .unwrap();
            assert!(dp <= d + 1e-9);
        }
    }

    #[test]
    fn horosphere_projection_examples() {
        let sp = h2();
        let w = sp.default_direction().unwrap();
        // on the horosphere already
        let p = pt(&[2.0, 1.0]);
        let proj = sp.project_to_horosphere(&w, 0.0, &p).unwrap();
        assert!((proj.coords[1] - 1.0).abs() < 1e-12);
        // level -1 from height 1 flows up to height e
        let proj = sp.project_to_horosphere(&w, -1.0, &p).unwrap();
        assert_eq!(proj.coords[0], 2.0);
        assert!((proj.coords[1] - std::f64::consts::E).abs() < 1e-12);
        assert!((sp.busemann(&w, &proj) + 1.0).abs() < 1e-12);
        // strictly inside errors
        let inside = pt(&[0.0, (2.0f64).exp()]);
        assert!(sp.project_to_horosphere(&w, -1.0, &inside).is_err());
    }

    #[test]
    fn horosphere_projection_is_one_lipschitz_ambient() {
        let sp = h2xh2();
        let w = sp.default_direction().unwrap();
        let level = -1.5;
        let mut rng = StdRng::seed_from_u64(19);
        let mut tested = 0;
        while tested < 2000 {
            let p = sp.sample_point(&mut rng, 2.5);
            let q = sp.sample_point(&mut rng, 2.5);
            if sp.busemann(&w, &p) < level || sp.busemann(&w, &q) < level {
                continue;
            }
            tested += 1;
            let d = sp.distance(&p, &q).unwrap();
            let dp = sp
                .distance(
                    &sp.project_to_horosphere(&w, level, &p).unwrap(),
                    &sp.project_to_horosphere(&w, level, &q).unwrap(),
                )
                .unwrap();
            assert!(dp <= d + 1e-9);
        }
    }

    /// Path-metric version: chain the projections of a sampled geodesic that
    /// stays outside the horoball; the chained length on the horosphere is
    /// bounded by the ambient distance.
    #[test]
    fn horosphere_projection_chained_path_metric() {
        let sp = h2();
        let w = sp.default_direction().unwrap();
        let level = -1.0;
        let mut rng = StdRng::seed_from_u64(23);
        let mut tested = 0;
        'outer: while tested < 300 {
            let p = sp.sample_point(&mut rng, 1.5);
            let q = sp.sample_point(&mut rng, 1.5);
            if sp.busemann(&w, &p) < level || sp.busemann(&w, &q) < level {
                continue;
            }
            let n = 64;
            let mut samples = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let g = sp.geodesic_point(&p, &q, i as f64 / n as f64).unwrap();
                if sp.busemann(&w, &g) < level {
                    continue 'outer;
                }
                samples.push(g);
            }
            tested += 1;
            let chained: f64 = samples
                .windows(2)
                .map(|pair| {
                    sp.distance(
                        &sp.project_to_horosphere(&w, level, &pair[0]).unwrap(),
                        &sp.project_to_horosphere(&w, level, &pair[1]).unwrap(),
                    )
                    .unwrap()
                })
                .sum();
            assert!(chained <= sp.distance(&p, &q).unwrap() + 1e-6);
        }
    }

    #[test]
    fn neutered_membership() {
        let sp = h2();
        let empty = HoroballFamily::default();
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..20 {
            let p = sp.sample_point(&mut rng, 3.0);
            assert!(sp.in_neutered(&empty, &p));
        }
        let w = sp.default_direction().unwrap();
        let hb = HoroballFamily::single(w, -1.0);
        assert!(sp.in_neutered(&hb, sp.basepoint()));
        let deep = pt(&[0.0, (2.0f64).exp()]); // busemann -2
        assert!(!sp.in_neutered(&hb, &deep));
    }

    #[test]
    fn parse_specs() {
        let (sp, hb) = ProductSpace::parse("H2xH2").unwrap();
        assert_eq!(sp.rank(), 2);
        assert_eq!(sp.dim(), 4);
        assert!(hb.is_none());

        let (sp, hb) = ProductSpace::parse("H3 neutered level=-1").unwrap();
        assert_eq!(sp.dim(), 3);
        assert_eq!(sp.rank(), 1);
        let hb = hb.unwrap();
        assert_eq!(hb.entries.len(), 1);
        assert_eq!(hb.entries[0].1, -1.0);

        let (sp, _) = ProductSpace::parse("H2xE1").unwrap();
        assert_eq!(sp.rank(), 2);

        let err = ProductSpace::parse("H5xQ").unwrap_err();
        assert!(err.to_string().contains('Q'), "{err}");
        assert!(ProductSpace::parse("H1").is_err());
        assert!(ProductSpace::parse("E0").is_err());
    }

    #[test]
    fn rank_dim_relation() {
        let (sp, _) = ProductSpace::parse("E3").unwrap();
        assert_eq!(sp.rank(), sp.dim());
        let (sp, _) = ProductSpace::parse("H4xE2").unwrap();
        assert_eq!(sp.rank(), 3);
        assert_eq!(sp.dim(), 6);
        assert!(sp.rank() < sp.dim());
    }

    #[test]
    fn triangle_inequality_sampled() {
        let sp = ProductSpace::parse("H2xE1").unwrap().0;
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..2000 {
            let a = sp.sample_point(&mut rng, 3.0);
            let b = sp.sample_point(&mut rng, 3.0);
            let c = sp.sample_point(&mut rng, 3.0);
            let ab = sp.distance(&a, &b).unwrap();
            let bc = sp.distance(&b, &c).unwrap();
            let ac = sp.distance(&a, &c).unwrap();
            assert!((ab - sp.distance(&b, &a).unwrap()).abs() < 1e-12);
            assert!(ac <= ab + bc + 1e-9);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn h2_point() -> impl Strategy<Value = SpacePoint> {
            // heights across six orders of magnitude
            (-40.0f64..40.0, -7.0f64..7.0)
                .prop_map(|(x, logy)| SpacePoint::new(vec![x, logy.exp()]))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn metric_axioms_across_scales(p in h2_point(), q in h2_point(), r in h2_point()) {
                let sp = h2();
                let pq = sp.distance(&p, &q).unwrap();
                let qp = sp.distance(&q, &p).unwrap();
                prop_assert!((pq - qp).abs() <= 1e-9 * (1.0 + pq));
                let pr = sp.distance(&p, &r).unwrap();
                let qr = sp.distance(&q, &r).unwrap();
                prop_assert!(pr <= pq + qr + 1e-9 * (1.0 + pr));
            }

            #[test]
            fn geodesics_stay_constant_speed(p in h2_point(), q in h2_point(), s in 0.0f64..1.0) {
                let sp = h2();
                let d = sp.distance(&p, &q).unwrap();
                prop_assume!(d > 1e-9 && d < 60.0);
                let g = sp.geodesic_point(&p, &q, s).unwrap();
                let dp = sp.distance(&p, &g).unwrap();
                prop_assert!((dp - s * d).abs() <= 1e-8 * (1.0 + d), "{dp} vs {}", s * d);
            }
        }
    }

    #[test]
    fn exp_block_matches_distance() {
        let mut rng = StdRng::seed_from_u64(37);
        let sp = ProductSpace::with_standard_basepoint(vec![Factor::Hyperbolic { dim: 3 }]).unwrap();
        for _ in 0..200 {
            let xb = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let yb: f64 = rng.random_range(0.2..3.0);
            let dir = random_unit(&mut rng, 3);
            let t = rng.random_range(0.0..4.0);
            let block = hyperbolic_exp_block(&xb, yb, &dir[..2], dir[2], t);
            let mut from = xb.clone();
            from.push(yb);
            let d = sp
                .distance(&SpacePoint::new(from), &SpacePoint::new(block))
                .unwrap();
            assert!((d - t).abs() < 1e-9, "exp length {d} vs {t}");
        }
    }
}
