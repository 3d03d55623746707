//! Experiment families, constructive fillers, and scaling-exponent fits.
//!
//! A family generates cycles over a size schedule, fills them (by the cone
//! construction, the LP oracle on a discretized region, or a constructive
//! flat ball/tube), and returns `(cycle volume, filling volume)` pairs. The
//! fitted log-log slope is then compared with the expected exponent:
//! `(k+1)/k` for `k <= rank - 1` and `1` above.

use crate::chain::{slice_sphere, round_sphere_in_flat, Functional, SimplicialChain};
use crate::cone::{cone_fill, ConeParams};
use crate::error::{Error, Result};
use crate::lp::{discretize_region, grid_on_flat, min_fill};
use crate::space::{hyperbolic_exp_block, Factor, FlatSpec, ProductSpace, SpacePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    FlatRoundSpheres,
    SliceSpheres,
    TubeBoundaries,
    HorosphereSpheresNeutered,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat_round_spheres" => Ok(Family::FlatRoundSpheres),
            "slice_spheres" => Ok(Family::SliceSpheres),
            "tube_boundaries" => Ok(Family::TubeBoundaries),
            "horosphere_spheres_neutered" => Ok(Family::HorosphereSpheresNeutered),
            other => Err(Error::Parse(format!("unknown experiment family {other:?}"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::FlatRoundSpheres => "flat_round_spheres",
            Family::SliceSpheres => "slice_spheres",
            Family::TubeBoundaries => "tube_boundaries",
            Family::HorosphereSpheresNeutered => "horosphere_spheres_neutered",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filler {
    Cone,
    Lp,
    FlatBall,
}

impl std::str::FromStr for Filler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cone" => Ok(Filler::Cone),
            "lp" => Ok(Filler::Lp),
            "flat_ball" => Ok(Filler::FlatBall),
            other => Err(Error::Parse(format!("unknown filler {other:?}"))),
        }
    }
}

impl std::fmt::Display for Filler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Filler::Cone => "cone",
            Filler::Lp => "lp",
            Filler::FlatBall => "flat_ball",
        };
        f.write_str(s)
    }
}

/// One experiment: a cycle family over a size schedule plus a filler.
///
/// `mesh` is relative to the sphere radius for `flat_round_spheres` (the
/// family is self-similar) and an absolute edge length elsewhere.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub space: String,
    pub family: Family,
    pub k: usize,
    pub schedule: Vec<f64>,
    pub filler: Filler,
    pub mesh: f64,
    /// Horosphere level used by the horosphere family when the space spec
    /// carries no horoball (the un-neutered contrast run).
    pub horosphere_level: f64,
    /// Tube half-width for `tube_boundaries`.
    pub tube_delta: f64,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(space: &str, family: Family, k: usize, schedule: Vec<f64>) -> Self {
        ExperimentSpec {
            space: space.to_string(),
            family,
            k,
            schedule,
            filler: Filler::Cone,
            mesh: 0.2,
            horosphere_level: 0.0,
            tube_delta: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schedule.len() < 3 {
            return Err(Error::Domain(format!(
                "schedule too short: {} sizes, need at least 3",
                self.schedule.len()
            )));
        }
        if self.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("schedule must strictly increase".into()));
        }
        if self.mesh.is_nan() || self.mesh <= 0.0 {
            return Err(Error::Domain("mesh must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::Domain("filling experiments need k >= 1".into()));
        }
        ProductSpace::parse(&self.space)?;
        Ok(())
    }
}

/// Ordinary least squares of `log fv` against `log l`.
#[derive(Debug, Clone)]
pub struct ExponentEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub max_abs_residual: f64,
    pub n_points: usize,
}

pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentEstimate> {
    if samples.len() < 3 {
        return Err(Error::Domain("need at least 3 samples to fit".into()));
    }
    if samples.iter().any(|&(l, fv)| l <= 0.0 || fv <= 0.0) {
        return Err(Error::Domain("samples must be positive for a log fit".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(l, fv)| (l.ln(), fv.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("degenerate schedule for a log fit".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_abs_residual = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, f64::max);
    Ok(ExponentEstimate {
        slope,
        intercept,
        max_abs_residual,
        n_points: samples.len(),
    })
}

pub const DEFAULT_SLOPE_TOL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    MatchesEuclidean,
    MatchesLinear,
    Mismatch,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::MatchesEuclidean => "matches_euclidean",
            Verdict::MatchesLinear => "matches_linear",
            Verdict::Mismatch => "mismatch",
        };
        f.write_str(s)
    }
}

/// Expected exponent `(k+1)/k` below the rank, `1` at or above it; the
/// verdict compares the fitted slope against it at the given tolerance.
pub fn compare_theory(
    est: &ExponentEstimate,
    k: usize,
    rank: usize,
    dim: usize,
    tol: f64,
) -> Result<(Verdict, f64)> {
    if k < 1 || k > dim.saturating_sub(1) {
        return Err(Error::Domain(format!(
            "k = {k} outside the filling range 1..={}",
            dim.saturating_sub(1)
        )));
    }
    let expected = if k <= rank.saturating_sub(1) {
        (k as f64 + 1.0) / k as f64
    } else {
        1.0
    };
    let verdict = if (est.slope - expected).abs() <= tol {
        if expected > 1.0 {
            Verdict::MatchesEuclidean
        } else {
            Verdict::MatchesLinear
        }
    } else {
        Verdict::Mismatch
    };
    Ok((verdict, expected))
}

/// Volume of the filling clipped to a slab of the projection-to-geodesic
/// coordinate; a certified lower-bound contribution, never above the total.
pub fn coarea_lower_check(
    sp: &ProductSpace,
    filling: &SimplicialChain,
    geodesic: &FlatSpec,
    slab: (f64, f64),
) -> Result<f64> {
    if filling.terms().is_empty() {
        return Err(Error::Domain("empty filling".into()));
    }
    let functional = Functional::FlatCoordinate {
        flat: geodesic.clone(),
        axis: 0,
    };
    let clipped = filling.clip(sp, &functional, slab);
    let part = clipped.k_volume(sp);
    let total = filling.k_volume(sp);
    if part > total * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::Domain(format!(
            "clipped volume {part} exceeds total {total}"
        )));
    }
    Ok(part)
}

/// Round ball bounded by `round_sphere_in_flat` at the same mesh: the cone
/// of the sphere to the flat's chart origin.
pub fn round_ball_in_flat(
    sp: &ProductSpace,
    flat: &FlatSpec,
    k: usize,
    radius: f64,
    mesh: f64,
) -> Result<SimplicialChain> {
    let sphere = round_sphere_in_flat(sp, flat, k, radius, mesh)?;
    let origin = flat.embed(sp, &vec![0.0; flat.dim()])?;
    let terms = sphere
        .terms()
        .iter()
        .map(|(verts, c)| {
            let mut vs = Vec::with_capacity(verts.len() + 1);
            vs.push(origin.clone());
            vs.extend(verts.iter().cloned());
            (vs, *c)
        })
        .collect();
    SimplicialChain::new(k + 1, terms)
}

/// Tube pieces around a vertical geodesic segment in the first hyperbolic
/// factor, in Fermi coordinates `(t, s)`: the two equidistant side arcs of
/// length `l cosh(delta)` each, the strip between them of area
/// `2 l sinh(delta)`, and the two end cap arcs of length `pi sinh(delta)`
/// each.
#[derive(Debug, Clone)]
pub struct TubeChains {
    pub side_arcs: SimplicialChain,
    pub strip: SimplicialChain,
    pub cap_arcs: SimplicialChain,
}

pub fn hyperbolic_tube(
    sp: &ProductSpace,
    length: f64,
    delta: f64,
    mesh: f64,
) -> Result<TubeChains> {
    if length <= 0.0 || delta <= 0.0 || mesh <= 0.0 {
        return Err(Error::Domain("tube needs positive length, delta, mesh".into()));
    }
    let hyp = sp
        .factors()
        .iter()
        .position(Factor::is_hyperbolic)
        .ok_or_else(|| Error::Domain("tube needs a hyperbolic factor".into()))?;
    let range = sp.block_range(hyp);
    let d = sp.factors()[hyp].dim();
    let base = sp.basepoint();
    let xb = base.coords[range.start..range.start + d - 1].to_vec();
    let yb = base.coords[range.start + d - 1];

    let point = |t: f64, s: f64| -> SpacePoint {
        let mut coords = base.coords.clone();
        let h = yb * t.exp();
        coords[range.start] = xb[0] + h * s.tanh();
        coords[range.start + d - 1] = h / s.cosh();
        SpacePoint::new(coords)
    };

    let nt = ((length * delta.cosh() / mesh).ceil() as usize).max(2);
    let ns = ((2.0 * delta / mesh).ceil() as usize).max(2);
    let ts: Vec<f64> = (0..=nt).map(|i| length * i as f64 / nt as f64).collect();
    let ss: Vec<f64> = (0..=ns)
        .map(|j| -delta + 2.0 * delta * j as f64 / ns as f64)
        .collect();

    let mut strip_terms = Vec::with_capacity(2 * nt * ns);
    for i in 0..nt {
        for j in 0..ns {
            let p00 = point(ts[i], ss[j]);
            let p10 = point(ts[i + 1], ss[j]);
            let p11 = point(ts[i + 1], ss[j + 1]);
            let p01 = point(ts[i], ss[j + 1]);
            strip_terms.push((vec![p00.clone(), p10, p11.clone()], 1));
            strip_terms.push((vec![p00, p11, p01], 1));
        }
    }
    let strip = SimplicialChain::new(2, strip_terms)?;

    let mut arc_terms = Vec::with_capacity(2 * nt);
    for s in [-delta, delta] {
        for i in 0..nt {
            arc_terms.push((vec![point(ts[i], s), point(ts[i + 1], s)], 1));
        }
    }
    let side_arcs = SimplicialChain::new(1, arc_terms)?;

    // end caps: half circles of radius delta around the segment endpoints
    let ncap = ((std::f64::consts::PI * delta.sinh() / mesh).ceil() as usize).max(4);
    let cap_point = |t: f64, phi: f64| -> SpacePoint {
        let mut coords = base.coords.clone();
        let foot_y = yb * t.exp();
        let block = hyperbolic_exp_block(&[xb[0]], foot_y, &[phi.sin()], phi.cos(), delta);
        coords[range.start] = block[0];
        coords[range.start + d - 1] = block[1];
        SpacePoint::new(coords)
    };
    let mut cap_terms = Vec::with_capacity(2 * ncap);
    for (t, phi0) in [(0.0, std::f64::consts::FRAC_PI_2), (length, -std::f64::consts::FRAC_PI_2)] {
        for i in 0..ncap {
            let a = phi0 + std::f64::consts::PI * i as f64 / ncap as f64;
            let b = phi0 + std::f64::consts::PI * (i + 1) as f64 / ncap as f64;
            cap_terms.push((vec![cap_point(t, a), cap_point(t, b)], 1));
        }
    }
    let cap_arcs = SimplicialChain::new(1, cap_terms)?;

    Ok(TubeChains {
        side_arcs,
        strip,
        cap_arcs,
    })
}

/// Runs the family over its schedule; one `(cycle volume, filling volume)`
/// pair per size, deterministic given the spec.
pub fn run_family(spec: &ExperimentSpec) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let (sp, horoballs) = ProductSpace::parse(&spec.space)?;
    match spec.family {
        Family::FlatRoundSpheres => flat_round_spheres(spec, &sp),
        Family::SliceSpheres => slice_spheres(spec, &sp),
        Family::TubeBoundaries => tube_boundaries(spec, &sp),
        Family::HorosphereSpheresNeutered => horosphere_spheres(spec, &sp, horoballs.as_ref()),
    }
}

fn cone_params_for(sp: &ProductSpace, reach: f64) -> Result<ConeParams> {
    let w = sp.default_direction()?;
    let depth = 2.0 * reach + 4.0;
    let steps = ((depth / 0.4).ceil() as usize).clamp(12, 48);
    ConeParams::new(w, depth, -(reach + 1.0), steps)
}

fn flat_round_spheres(spec: &ExperimentSpec, sp: &ProductSpace) -> Result<Vec<(f64, f64)>> {
    let flat = sp.maximal_flat();
    let k = spec.k;
    let mut out = Vec::with_capacity(spec.schedule.len());
    for &r in &spec.schedule {
        let mesh = spec.mesh * r;
        let pair = match spec.filler {
            Filler::FlatBall => {
                let sphere = round_sphere_in_flat(sp, &flat, k, r, mesh)?;
                let ball = round_ball_in_flat(sp, &flat, k, r, mesh)?;
                (sphere.k_volume(sp), ball.k_volume(sp))
            }
            Filler::Cone => {
                let sphere = round_sphere_in_flat(sp, &flat, k, r, mesh)?;
                let params = cone_params_for(sp, r)?;
                let (_, report) = cone_fill(sp, &sphere, &params)?;
                (report.cycle_volume, report.total_volume)
            }
            Filler::Lp => {
                let (l, fv) = lp_fill_round_sphere_in_flat(&flat, k, r, spec.mesh)?;
                (l, fv)
            }
        };
        out.push(pair);
    }
    Ok(out)
}

/// Digitized round sphere on a grid inside the flat: the boundary of the
/// rasterized ball. The digitized cycle volume carries a taxicab constant,
/// which drops out of the fitted exponent.
pub fn lp_fill_round_sphere_in_flat(
    flat: &FlatSpec,
    k: usize,
    r: f64,
    rel_mesh: f64,
) -> Result<(f64, f64)> {
    if k + 1 > flat.dim() {
        return Err(Error::Dimension("sphere does not fit in the flat".into()));
    }
    let h = rel_mesh * r;
    let half = r + 2.0 * h;
    let n = ((2.0 * half / h).ceil() as usize).max(4);
    let dim = k + 1;
    let grid = grid_on_flat(dim, &vec![-half; dim], &vec![half; dim], &vec![n; dim])?;
    let top_mask = (1u32 << dim) - 1;
    let ball = grid.select(dim, top_mask, |bary| {
        bary.iter().map(|c| c * c).sum::<f64>().sqrt() <= r
    });
    if ball.is_empty() {
        return Err(Error::Domain("mesh too coarse for the sphere".into()));
    }
    let z = grid.boundary_cycle(dim, &ball);
    let l = grid.complex.weighted_norm_int(k, &z);
    let fill = min_fill(&grid.complex, k, &z)?;
    Ok((l, fill.value))
}

fn slice_spheres(spec: &ExperimentSpec, sp: &ProductSpace) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(spec.schedule.len());
    for &r in &spec.schedule {
        let sphere = slice_sphere(sp, r, spec.k, spec.mesh)?;
        let pair = match spec.filler {
            Filler::Cone => {
                let params = cone_params_for(sp, r)?;
                let (_, report) = cone_fill(sp, &sphere, &params)?;
                (report.cycle_volume, report.total_volume)
            }
            Filler::Lp => lp_fill_metric_ball(sp, r, spec.k)?,
            Filler::FlatBall => {
                return Err(Error::Domain(
                    "flat_ball does not fill curved sphere families".into(),
                ))
            }
        };
        out.push(pair);
    }
    Ok(out)
}

/// LP filling of the digitized metric sphere: boundary of the grid cells
/// within distance `r` of the basepoint, on a coarse chart box. Intended as
/// a cross-validation oracle at small radii.
pub fn lp_fill_metric_ball(sp: &ProductSpace, r: f64, k: usize) -> Result<(f64, f64)> {
    if k + 1 != sp.dim() {
        return Err(Error::Dimension(
            "lp cross-validation needs the sphere codimension one in the chart".into(),
        ));
    }
    let mut lo = Vec::with_capacity(sp.dim());
    let mut hi = Vec::with_capacity(sp.dim());
    let mut cells = Vec::with_capacity(sp.dim());
    for (fi, f) in sp.factors().iter().enumerate() {
        let range = sp.block_range(fi);
        let base = &sp.basepoint().coords[range.clone()];
        match f {
            Factor::Hyperbolic { dim } => {
                let spread = r.sinh() + 1.0;
                for x0 in base.iter().take(dim - 1) {
                    lo.push(x0 - spread);
                    hi.push(x0 + spread);
                    cells.push(10);
                }
                let y0 = base[dim - 1];
                lo.push(y0 * (-(r + 0.5)).exp());
                hi.push(y0 * (r + 0.5).exp());
                cells.push(((2.0 * r + 1.0) / 0.75).ceil() as usize);
            }
            Factor::Euclidean { .. } => {
                for x0 in base {
                    lo.push(x0 - (r + 1.0));
                    hi.push(x0 + (r + 1.0));
                    cells.push(((2.0 * r + 2.0) / 0.8).ceil() as usize);
                }
            }
        }
    }
    let grid = discretize_region(sp, &lo, &hi, &cells, None)?;
    let dim = sp.dim();
    let top_mask = (1u32 << dim) - 1;
    let ball = grid.select(dim, top_mask, |bary| {
        sp.distance(&SpacePoint::new(bary.to_vec()), sp.basepoint())
            .map(|d| d <= r)
            .unwrap_or(false)
    });
    if ball.is_empty() {
        return Err(Error::Domain("grid too coarse for the metric ball".into()));
    }
    let z = grid.boundary_cycle(dim, &ball);
    let l = grid.complex.weighted_norm_int(k, &z);
    let fill = min_fill(&grid.complex, k, &z)?;
    Ok((l, fill.value))
}

fn tube_boundaries(spec: &ExperimentSpec, sp: &ProductSpace) -> Result<Vec<(f64, f64)>> {
    if spec.filler != Filler::FlatBall {
        return Err(Error::Domain(
            "tube_boundaries measures its constructive filling; use filler = flat_ball".into(),
        ));
    }
    let mut out = Vec::with_capacity(spec.schedule.len());
    for &l in &spec.schedule {
        let tube = hyperbolic_tube(sp, l, spec.tube_delta, spec.mesh)?;
        out.push((tube.side_arcs.k_volume(sp), tube.strip.k_volume(sp)));
    }
    Ok(out)
}

fn horosphere_spheres(
    spec: &ExperimentSpec,
    sp: &ProductSpace,
    horoballs: Option<&crate::space::HoroballFamily>,
) -> Result<Vec<(f64, f64)>> {
    if spec.filler != Filler::Lp {
        return Err(Error::Domain(
            "horosphere_spheres_neutered is an lp experiment".into(),
        ));
    }
    if spec.k != 1 {
        return Err(Error::Domain("horosphere circles have k = 1".into()));
    }
    let hyp = sp
        .factors()
        .iter()
        .position(Factor::is_hyperbolic)
        .ok_or_else(|| Error::Domain("needs a hyperbolic factor".into()))?;
    let d = sp.factors()[hyp].dim();
    if sp.factors().len() != 1 || d < 3 {
        return Err(Error::Domain(
            "horosphere circle experiment runs in a single H^d factor, d >= 3".into(),
        ));
    }
    let level = horoballs
        .and_then(|hb| hb.entries.first().map(|&(_, l)| l))
        .unwrap_or(spec.horosphere_level);
    let range = sp.block_range(hyp);
    let y0 = sp.basepoint().coords[range.end - 1];
    let y_h = y0 * (-level).exp();

    let below_step = 0.7f64;
    let above_steps = if horoballs.is_some() { 0 } else { 4 };
    let mut out = Vec::with_capacity(spec.schedule.len());
    for &rho in &spec.schedule {
        let chart_r = rho * y_h;
        let hx = spec.mesh * y_h;
        let half = chart_r + 2.0 * hx;
        let nx = ((2.0 * half / hx).ceil() as usize).max(4);
        let mut lo = vec![0.0; sp.dim()];
        let mut hi = vec![0.0; sp.dim()];
        let mut cells = vec![0usize; sp.dim()];
        for a in 0..d - 1 {
            lo[range.start + a] = -half;
            hi[range.start + a] = half;
            cells[range.start + a] = nx;
        }
        let ny = 1 + above_steps;
        lo[range.end - 1] = y_h * (-below_step).exp();
        hi[range.end - 1] = y_h * (below_step * above_steps as f64).exp();
        cells[range.end - 1] = ny;
        let grid = discretize_region(sp, &lo, &hi, &cells, horoballs)?;

        // 2-cells spanning the horizontal axes in the horosphere plane
        let plane_mask: u32 = (1 << range.start) | (1 << (range.start + 1));
        let disc = grid.select(2, plane_mask, |bary| {
            let yv = bary[range.end - 1];
            let on_horosphere = ((yv - y_h) / y_h).abs() < 1e-9;
            let r2: f64 = (0..d - 1)
                .map(|a| bary[range.start + a] * bary[range.start + a])
                .sum();
            on_horosphere && r2.sqrt() <= chart_r
        });
        if disc.is_empty() {
            return Err(Error::Domain(format!("mesh too coarse at radius {rho}")));
        }
        let z = grid.boundary_cycle(2, &disc);
        let l = grid.complex.weighted_norm_int(1, &z);
        let fill = min_fill(&grid.complex, 1, &z)?;
        out.push((l, fill.value));
    }
    Ok(out)
}

/// CSV with the documented header, one row per schedule entry.
pub fn csv_string(schedule: &[f64], samples: &[(f64, f64)]) -> String {
    let mut out = String::from("size,cycle_volume,fill_volume\n");
    for (size, (l, fv)) in schedule.iter().zip(samples) {
        out.push_str(&format!("{size},{l:.9e},{fv:.9e}\n"));
    }
    out
}
