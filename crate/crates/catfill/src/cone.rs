//! The cone-over-horosphere filling construction.
//!
//! A cycle is filled by flowing it along the asymptotic rays toward a
//! boundary direction until it reaches a horosphere, then capping the small
//! projected image inside the horosphere. The flow map is 3-Lipschitz and
//! its volume density decays exponentially, which is what makes the total
//! filling volume linear in the cycle volume once the cycle dimension
//! reaches the rank.
//!
//! The prism between consecutive flow layers is triangulated by the
//! staircase scheme, so the boundary identity
//! `boundary(cone) = cycle - image` holds by exact integer cancellation.

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::chain::{chart_barycenter, determinant, simplex_volume, SimplicialChain};
use crate::error::{Error, Result};
use crate::space::{BoundaryDirection, Factor, ProductSpace, SpacePoint};

/// How to fill the flowed image on the horosphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapStrategy {
    /// Cone the image to the flowed basepoint.
    #[default]
    FlatConeInHorosphere,
    /// Minimal filling over a small simplicial complex of candidate cones.
    LpFill,
}

#[derive(Debug, Clone)]
pub struct ConeParams {
    pub direction: BoundaryDirection,
    /// Truncation depth of the flow.
    pub t_max: f64,
    /// Horosphere level for the cap.
    pub cap_level: f64,
    pub time_steps: usize,
    pub cap_strategy: CapStrategy,
}

impl ConeParams {
    pub fn new(
        direction: BoundaryDirection,
        t_max: f64,
        cap_level: f64,
        time_steps: usize,
    ) -> Result<Self> {
        if t_max.is_nan() || t_max < 0.0 || !t_max.is_finite() {
            return Err(Error::Domain("t_max must be a nonnegative real".into()));
        }
        if time_steps < 4 {
            return Err(Error::Domain("need at least 4 time steps".into()));
        }
        if !cap_level.is_finite() {
            return Err(Error::Domain("cap level must be finite".into()));
        }
        Ok(ConeParams {
            direction,
            t_max,
            cap_level,
            time_steps,
            cap_strategy: CapStrategy::default(),
        })
    }

    pub fn with_cap_strategy(mut self, s: CapStrategy) -> Self {
        self.cap_strategy = s;
        self
    }
}

/// Measured quantities of one cone filling.
#[derive(Debug, Clone, Default)]
pub struct ConeReport {
    pub cycle_volume: f64,
    pub cone_volume: f64,
    pub cap_volume: f64,
    pub total_volume: f64,
    /// Largest observed `phi(x, t) * exp(rho_star * t)`.
    pub measured_c1: f64,
    /// Negated log-slope of the sampled density.
    pub measured_decay: f64,
    pub density_samples: Vec<(f64, f64)>,
}

impl ConeReport {
    pub fn csv_header() -> &'static str {
        "R_or_size,cycle_volume,cone_volume,cap_volume,total_volume,measured_decay"
    }

    pub fn csv_row(&self, label: f64) -> String {
        format!(
            "{label},{:.9e},{:.9e},{:.9e},{:.9e},{:.6}",
            self.cycle_volume,
            self.cone_volume,
            self.cap_volume,
            self.total_volume,
            self.measured_decay
        )
    }
}

/// Per-factor decay rates of stable Jacobi fields transverse to the ray.
#[derive(Debug, Clone)]
pub struct DecayRates {
    rates: Vec<f64>,
}

impl DecayRates {
    /// Hyperbolic factors decay at the speed the ray traverses them.
    pub fn from_direction(sp: &ProductSpace, w: &BoundaryDirection) -> Self {
        let rates = sp
            .factors()
            .iter()
            .zip(w.speeds())
            .map(|(f, &c)| if f.is_hyperbolic() { c } else { 0.0 })
            .collect();
        DecayRates { rates }
    }

    /// Rates from abstract root data: one `A1` factor per hyperbolic factor,
    /// evaluated on the chamber direction `h`.
    pub fn from_root_data(
        rs: &crate::roots::RootSystem,
        h: &[f64],
        sp: &ProductSpace,
    ) -> Result<Self> {
        let hyp: Vec<usize> = sp
            .factors()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_hyperbolic())
            .map(|(i, _)| i)
            .collect();
        if !rs.label().starts_with("A1") || rs.rank() != hyp.len() {
            return Err(Error::Domain(format!(
                "root system {} does not match {} hyperbolic factors",
                rs.label(),
                hyp.len()
            )));
        }
        let mut rates = vec![0.0; sp.factors().len()];
        for (root, &fi) in rs.positive_roots().iter().zip(&hyp) {
            rates[fi] = crate::roots::RootSystem::pairing(&root.covector, h);
        }
        Ok(DecayRates { rates })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Minimal strictly positive rate; the exponent of the density bound.
    pub fn rho_star(&self) -> f64 {
        self.rates
            .iter()
            .copied()
            .filter(|&r| r > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Chart tangent of the unit ray direction at `x`.
fn ray_tangent(sp: &ProductSpace, w: &BoundaryDirection, x: &SpacePoint) -> Vec<f64> {
    let mut v = vec![0.0; sp.dim()];
    for (i, f) in sp.factors().iter().enumerate() {
        let c = w.speeds()[i];
        if c == 0.0 {
            continue;
        }
        let range = sp.block_range(i);
        match f {
            Factor::Hyperbolic { dim } => {
                v[range.start + dim - 1] = c * x.coords[range.start + dim - 1];
            }
            Factor::Euclidean { .. } => {
                let dir = w.euclidean_dir(i).expect("active euclidean direction");
                for (slot, u) in v[range].iter_mut().zip(dir) {
                    *slot = c * u;
                }
            }
        }
    }
    v
}

/// Propagates a chart tangent at `x` by time `t` of the stable-Jacobi flow:
/// horizontal components of each hyperbolic factor decay at that factor's
/// rate, vertical and Euclidean components ride along unchanged.
fn propagate(sp: &ProductSpace, rates: &DecayRates, v: &[f64], t: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    for (i, f) in sp.factors().iter().enumerate() {
        if let Factor::Hyperbolic { dim } = f {
            let decay = (-rates.rates[i] * t).exp();
            let range = sp.block_range(i);
            for slot in &mut out[range.start..range.start + dim - 1] {
                *slot *= decay;
            }
        }
    }
    out
}

/// Volume density of the cone map: the ratio of the `(k+1)`-volume spanned
/// by the propagated frame together with the ray direction to the
/// `k`-volume of the frame, `sqrt(det A_k(t) / det Gram(frame))`.
pub fn density_phi(
    sp: &ProductSpace,
    rates: &DecayRates,
    x: &SpacePoint,
    frame: &[Vec<f64>],
    w: &BoundaryDirection,
    t: f64,
) -> Result<f64> {
    if frame.is_empty() {
        return Err(Error::Domain("empty frame".into()));
    }
    if frame.iter().any(|u| u.len() != sp.dim()) {
        return Err(Error::Dimension("frame vectors must be chart tangents".into()));
    }
    let v0 = ray_tangent(sp, w, x);
    let k = frame.len();

    let mut gram_u = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            gram_u[i][j] = sp.metric_dot(x, &frame[i], &frame[j]);
        }
    }
    let det_u = determinant(&mut gram_u.clone());
    if det_u <= 1e-300 {
        return Err(Error::Domain("degenerate frame".into()));
    }

    // remove the along-ray components, then propagate
    let transverse: Vec<Vec<f64>> = frame
        .iter()
        .map(|u| {
            let a = sp.metric_dot(x, u, &v0);
            u.iter().zip(&v0).map(|(ui, vi)| ui - a * vi).collect()
        })
        .collect();
    let propagated: Vec<Vec<f64>> = transverse
        .iter()
        .map(|v| propagate(sp, rates, v, t))
        .collect();
    let mut gram_j = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            gram_j[i][j] = sp.metric_dot(x, &propagated[i], &propagated[j]);
        }
    }
    let det_j = determinant(&mut gram_j);
    Ok((det_j.max(0.0) / det_u).sqrt())
}

fn flow_time(sp: &ProductSpace, w: &BoundaryDirection, params: &ConeParams, v: &SpacePoint) -> f64 {
    (sp.busemann(w, v) - params.cap_level).max(0.0).min(params.t_max)
}

fn vertex_key(p: &SpacePoint) -> Vec<u64> {
    p.coords.iter().map(|c| c.to_bits()).collect()
}

/// The flowed image of the cycle at the end of the truncated flow.
fn final_layer(sp: &ProductSpace, cycle: &SimplicialChain, params: &ConeParams) -> SimplicialChain {
    cycle.map_vertices(|v| {
        let t = flow_time(sp, &params.direction, params, v);
        sp.asymptotic_ray(v, &params.direction, t)
    })
}

/// Prism chain of the flow `tau(cycle x [0, T])`, each vertex flowing for
/// `min(t_max, busemann - cap_level)`. Its boundary is
/// `cycle - final_layer`, exactly.
pub fn cone_chain(
    sp: &ProductSpace,
    cycle: &SimplicialChain,
    params: &ConeParams,
) -> Result<SimplicialChain> {
    let k = cycle.k();
    let cyc = cycle.canonicalized();
    if cyc.terms().is_empty() {
        return Ok(SimplicialChain::empty(k + 1));
    }
    if !cyc.is_cycle() {
        return Err(Error::Domain("cone input must be a cycle".into()));
    }
    for (verts, _) in cyc.terms() {
        for v in verts {
            if sp.busemann(&params.direction, v) < params.cap_level - 1e-9 {
                return Err(Error::Domain(
                    "cycle dips inside the horoball below the cap level".into(),
                ));
            }
        }
    }
    if params.t_max == 0.0 {
        return Ok(SimplicialChain::empty(k + 1));
    }

    let built = build_prisms(sp, &cyc, params);
    let cycle_vol = cyc.k_volume(sp);
    if cycle_vol > 1e-12 && built.k_volume(sp) <= 1e-14 * cycle_vol {
        // flow tangential to the whole cycle: perturb deterministically and
        // rebuild once
        let perturbed = cyc.map_vertices(perturb_point);
        let rebuilt = build_prisms(sp, &perturbed.canonicalized(), params);
        return Ok(rebuilt);
    }
    Ok(built)
}

fn perturb_point(v: &SpacePoint) -> SpacePoint {
    let mut h: u64 = 0xcbf29ce484222325;
    for c in &v.coords {
        h = (h ^ c.to_bits()).wrapping_mul(0x100000001b3);
    }
    let coords = v
        .coords
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            h = (h ^ i as u64).wrapping_mul(0x100000001b3);
            let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
            c + 1e-6 * (2.0 * unit - 1.0)
        })
        .collect();
    SpacePoint::new(coords)
}

fn build_prisms(
    sp: &ProductSpace,
    cyc: &SimplicialChain,
    params: &ConeParams,
) -> SimplicialChain {
    let k = cyc.k();
    let n = params.time_steps;
    let w = &params.direction;
    let mut layers: HashMap<Vec<u64>, Vec<SpacePoint>> = HashMap::new();
    for (verts, _) in cyc.terms() {
        for v in verts {
            layers.entry(vertex_key(v)).or_insert_with(|| {
                let total = flow_time(sp, w, params, v);
                // fraction first: at j = n the time is bitwise `total`, so the
                // last layer matches the one-jump final image exactly
                (0..=n)
                    .map(|j| sp.asymptotic_ray(v, w, total * (j as f64 / n as f64)))
                    .collect()
            });
        }
    }
    let mut terms = Vec::with_capacity(cyc.terms().len() * n * (k + 1));
    for (verts, coeff) in cyc.terms() {
        let flows: Vec<&Vec<SpacePoint>> =
            verts.iter().map(|v| &layers[&vertex_key(v)]).collect();
        for j in 0..n {
            // staircase triangulation of the prism between layers j and j+1;
            // sign makes boundary(cone) = cycle - final image
            for i in 0..=k {
                let mut simplex = Vec::with_capacity(k + 2);
                for bot in flows.iter().take(i + 1) {
                    simplex.push(bot[j].clone());
                }
                for top in flows.iter().skip(i).take(k + 1 - i) {
                    simplex.push(top[j + 1].clone());
                }
                let sign = if i % 2 == 0 { -1 } else { 1 };
                terms.push((simplex, sign * coeff));
            }
        }
    }
    SimplicialChain::new(k + 1, terms).expect("prism simplices have k+2 vertices")
}

/// Cone of a cycle to an apex; boundary is the cycle itself.
fn apex_cone(apex: &SpacePoint, cycle: &SimplicialChain) -> SimplicialChain {
    let terms = cycle
        .terms()
        .iter()
        .map(|(verts, c)| {
            let mut vs = Vec::with_capacity(verts.len() + 1);
            vs.push(apex.clone());
            vs.extend(verts.iter().cloned());
            (vs, *c)
        })
        .collect();
    SimplicialChain::new(cycle.k() + 1, terms).expect("cone simplices")
}

fn cap_apex(sp: &ProductSpace, params: &ConeParams) -> SpacePoint {
    let b0 = sp.busemann(&params.direction, sp.basepoint());
    sp.asymptotic_ray(sp.basepoint(), &params.direction, b0 - params.cap_level)
}

fn flat_cap(sp: &ProductSpace, top: &SimplicialChain, params: &ConeParams) -> SimplicialChain {
    apex_cone(&cap_apex(sp, params), top)
}

/// Cap by a minimal filling over a complex assembled from two candidate
/// cones (the flowed basepoint and a vertex of the image). The LP optimum
/// on these fans is integral; it is rounded and the boundary identity
/// re-verified exactly.
fn lp_cap(
    sp: &ProductSpace,
    top: &SimplicialChain,
    params: &ConeParams,
) -> Result<SimplicialChain> {
    use std::collections::BTreeMap;

    let top = top.canonicalized();
    if top.terms().is_empty() {
        return Ok(SimplicialChain::empty(top.k() + 1));
    }
    let apex_a = cap_apex(sp, params);
    let apex_b = top.terms()[0].0[0].clone();
    let fan_a = apex_cone(&apex_a, &top).canonicalized();
    let fan_b = apex_cone(&apex_b, &top).canonicalized();

    let kc = top.k() + 1;
    // collect all iterated faces as cells
    let mut cells: Vec<BTreeMap<Vec<u64>, Vec<SpacePoint>>> = vec![BTreeMap::new(); kc + 1];
    let add_with_faces = |verts: &[SpacePoint], cells: &mut Vec<BTreeMap<Vec<u64>, Vec<SpacePoint>>>| {
        let mut stack = vec![verts.to_vec()];
        while let Some(vs) = stack.pop() {
            let d = vs.len() - 1;
            let key: Vec<u64> = vs.iter().flat_map(vertex_key).collect();
            if cells[d].insert(key, vs.clone()).is_none() && d > 0 {
                for i in 0..vs.len() {
                    let mut face = vs.clone();
                    face.remove(i);
                    stack.push(face);
                }
            }
        }
    };
    for chain in [&fan_a, &fan_b, &top] {
        for (verts, _) in chain.terms() {
            add_with_faces(verts, &mut cells);
        }
    }
    let ids: Vec<BTreeMap<Vec<u64>, usize>> = cells
        .iter()
        .map(|m| {
            m.keys()
                .enumerate()
                .map(|(i, k)| (k.clone(), i))
                .collect()
        })
        .collect();
    let counts: Vec<usize> = cells.iter().map(|m| m.len()).collect();
    let mut boundaries = Vec::new();
    for d in 1..=kc {
        let mut b = crate::lp::SparseIntMatrix::new(counts[d - 1], counts[d]);
        for (col, (_, verts)) in cells[d].iter().enumerate() {
            for i in 0..verts.len() {
                let mut face = verts.clone();
                face.remove(i);
                let fkey: Vec<u64> = face.iter().flat_map(vertex_key).collect();
                let row = ids[d - 1][&fkey];
                b.push(row, col, if i % 2 == 0 { 1 } else { -1 });
            }
        }
        boundaries.push(b);
    }
    let weights: Vec<Vec<f64>> = cells
        .iter()
        .map(|m| {
            m.values()
                .map(|verts| simplex_volume(sp, verts).max(1e-18))
                .collect()
        })
        .collect();
    let cx = crate::lp::CellComplex::new(counts, boundaries, weights)?;

    let mut z = vec![0i64; cx.count(top.k())];
    for (verts, c) in top.terms() {
        let key: Vec<u64> = verts.iter().flat_map(vertex_key).collect();
        z[ids[top.k()][&key]] += c;
    }
    let fill = crate::lp::min_fill(&cx, top.k(), &z)?;
    let rounded = crate::lp::round_integral_chain(&fill.chain, 1e-6)?;
    let terms: Vec<(Vec<SpacePoint>, i64)> = cells[kc]
        .values()
        .zip(&rounded)
        .filter(|(_, &c)| c != 0)
        .map(|(verts, &c)| (verts.clone(), c))
        .collect();
    let cap = SimplicialChain::new(kc, terms)?;
    // exact boundary identity must survive the rounding
    let diff = cap.boundary()?.add(&top.negated())?.canonicalized();
    if !diff.terms().is_empty() {
        return Err(Error::Domain(
            "lp cap rounding broke the boundary identity".into(),
        ));
    }
    Ok(cap)
}

/// Fills a cycle by the truncated cone plus a horosphere cap and reports
/// the measured volumes and density decay.
pub fn cone_fill(
    sp: &ProductSpace,
    cycle: &SimplicialChain,
    params: &ConeParams,
) -> Result<(SimplicialChain, ConeReport)> {
    let cyc = cycle.canonicalized();
    if cyc.terms().is_empty() {
        return Ok((
            SimplicialChain::empty(cycle.k() + 1),
            ConeReport::default(),
        ));
    }
    let cone = cone_chain(sp, &cyc, params)?;
    let top = final_layer(sp, &cyc, params);
    let cap = match params.cap_strategy {
        CapStrategy::FlatConeInHorosphere => flat_cap(sp, &top, params),
        CapStrategy::LpFill => lp_cap(sp, &top, params)?,
    };
    let cone_volume = cone.k_volume(sp);
    let cap_volume = cap.k_volume(sp);
    let filling = cone.extended(cap)?;

    let rates = DecayRates::from_direction(sp, &params.direction);
    let rho = rates.rho_star();
    let mut samples = Vec::new();
    let step = (cyc.terms().len() / 16).max(1);
    for (verts, _) in cyc.terms().iter().step_by(step) {
        let x = chart_barycenter(verts);
        if !sp.contains(&x) {
            continue;
        }
        let frame: Vec<Vec<f64>> = verts
            .iter()
            .skip(1)
            .map(|v| {
                v.coords
                    .iter()
                    .zip(&verts[0].coords)
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        let total = flow_time(sp, &params.direction, params, &x);
        for j in 0..=params.time_steps {
            let t = total * j as f64 / params.time_steps as f64;
            if let Ok(phi) = density_phi(sp, &rates, &x, &frame, &params.direction, t) {
                samples.push((t, phi));
            }
        }
    }
    let measured_c1 = samples
        .iter()
        .filter(|&&(_, phi)| phi > 0.0)
        .map(|&(t, phi)| phi * (rho * t).exp())
        .fold(0.0, f64::max);
    let measured_decay = decay_slope(&samples);

    let cycle_volume = cyc.k_volume(sp);
    let report = ConeReport {
        cycle_volume,
        cone_volume,
        cap_volume,
        total_volume: cone_volume + cap_volume,
        measured_c1,
        measured_decay,
        density_samples: samples,
    };
    Ok((filling, report))
}

fn decay_slope(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(_, phi)| phi > 1e-280)
        .map(|&(t, phi)| (t, phi.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx <= 0.0 {
        return 0.0;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    -(sxy / sxx)
}

/// Largest observed Lipschitz ratio of the flow map
/// `tau : cycle x [0, inf) -> X` over sampled pairs; the convexity of the
/// distance function keeps it at or below 3.
pub fn verify_three_lipschitz(
    sp: &ProductSpace,
    cycle: &SimplicialChain,
    w: &BoundaryDirection,
    sample_count: usize,
    seed: u64,
) -> f64 {
    let refined = cycle.refine(sp, 2).canonicalized();
    let mut pool: Vec<SpacePoint> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (verts, _) in refined.terms() {
        for v in verts {
            if seen.insert(vertex_key(v)) {
                pool.push(v.clone());
            }
        }
    }
    if pool.len() < 2 {
        return 0.0;
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_ratio = 0.0f64;
    for _ in 0..sample_count {
        let x = &pool[rng.random_range(0..pool.len())];
        let y = &pool[rng.random_range(0..pool.len())];
        let s = rng.random_range(0.0..8.0);
        let t = rng.random_range(0.0..8.0);
        let dxy = sp.distance(x, y).expect("cycle points");
        let input = (dxy * dxy + (s - t) * (s - t)).sqrt();
        if input < 1e-9 {
            continue;
        }
        let dout = sp
            .distance(&sp.asymptotic_ray(x, w, s), &sp.asymptotic_ray(y, w, t))
            .expect("ray points");
        max_ratio = max_ratio.max(dout / input);
    }
    max_ratio
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::slice_sphere;

    const SQRT_2: f64 = std::f64::consts::SQRT_2;

    fn h2() -> ProductSpace {
        ProductSpace::parse("H2").unwrap().0
    }

    fn h2xh2() -> ProductSpace {
        ProductSpace::parse("H2xH2").unwrap().0
    }

    fn circle_params(sp: &ProductSpace, r: f64) -> ConeParams {
        let w = sp.default_direction().unwrap();
        ConeParams::new(w, 2.0 * r + 4.0, -(r + 1.0), 24).unwrap()
    }

    #[test]
    fn cone_boundary_is_cycle_minus_image() {
        let sp = h2();
        let circle = slice_sphere(&sp, 1.0, 1, 0.5).unwrap();
        let params = circle_params(&sp, 1.0);
        let cone = cone_chain(&sp, &circle, &params).unwrap();
        let top = final_layer(&sp, &circle.canonicalized(), &params);
        let expect = circle.add(&top.negated()).unwrap();
        let diff = cone.boundary().unwrap().add(&expect.negated()).unwrap();
        assert!(diff.canonicalized().terms().is_empty());
    }

    #[test]
    fn zero_depth_gives_empty_cone() {
        let sp = h2();
        let circle = slice_sphere(&sp, 1.0, 1, 0.5).unwrap();
        let w = sp.default_direction().unwrap();
        let params = ConeParams::new(w, 0.0, -2.0, 8).unwrap();
        let cone = cone_chain(&sp, &circle, &params).unwrap();
        assert!(cone.terms().is_empty());
    }

    /// A cycle of collinear vertical segments sweeps zero area along the
    /// flow; the deterministic perturbation restores transversality.
    #[test]
    fn tangential_cycle_is_perturbed() {
        let sp = h2();
        let a = SpacePoint::new(vec![0.0, 1.0]);
        let b = SpacePoint::new(vec![0.0, 1.5]);
        let c = SpacePoint::new(vec![0.0, 2.25]);
        let cycle = SimplicialChain::new(
            1,
            vec![
                (vec![a.clone(), b.clone()], 1),
                (vec![b, c.clone()], 1),
                (vec![c, a], 1),
            ],
        )
        .unwrap();
        assert!(cycle.is_cycle());
        assert!(cycle.k_volume(&sp) > 0.0);
        let w = sp.default_direction().unwrap();
        let params = ConeParams::new(w, 4.0, -2.0, 8).unwrap();
        let cone = cone_chain(&sp, &cycle, &params).unwrap();
        let swept = cone.k_volume(&sp);
        assert!(
            swept > 0.0 && swept < 1e-3,
            "perturbed tangential sweep should be tiny but positive: {swept}"
        );
    }

    #[test]
    fn cycle_inside_horoball_is_rejected() {
        let sp = h2();
        let circle = slice_sphere(&sp, 2.0, 1, 0.5).unwrap();
        let w = sp.default_direction().unwrap();
        // cap level above parts of the circle (busemann ranges in [-2, 2])
        let params = ConeParams::new(w, 8.0, 1.0, 8).unwrap();
        assert!(cone_chain(&sp, &circle, &params).is_err());
    }

    #[test]
    fn cone_fill_boundary_identity_both_caps() {
        let sp = h2xh2();
        let circle = slice_sphere(&sp, 1.5, 1, 0.4).unwrap();
        for strategy in [CapStrategy::FlatConeInHorosphere, CapStrategy::LpFill] {
            let params = circle_params(&sp, 1.5).with_cap_strategy(strategy);
            let (filling, report) = cone_fill(&sp, &circle, &params).unwrap();
            let diff = filling
                .boundary()
                .unwrap()
                .add(&circle.negated())
                .unwrap()
                .canonicalized();
            assert!(
                diff.terms().is_empty(),
                "boundary(filling) != cycle for {strategy:?}"
            );
            assert!(report.total_volume > 0.0);
            assert!(
                (report.total_volume - report.cone_volume - report.cap_volume).abs() < 1e-12
            );
        }
    }

    #[test]
    fn cap_strategies_agree_at_desk_scale() {
        let sp = h2();
        let circle = slice_sphere(&sp, 1.5, 1, 0.2).unwrap();
        let base = circle_params(&sp, 1.5);
        let (_, flat) = cone_fill(&sp, &circle, &base.clone()).unwrap();
        let (_, lp) = cone_fill(
            &sp,
            &circle,
            &base.with_cap_strategy(CapStrategy::LpFill),
        )
        .unwrap();
        assert!(lp.cap_volume <= flat.cap_volume + 1e-9);
        assert!(lp.cap_volume > 0.25 * flat.cap_volume);
    }

    #[test]
    fn empty_cycle_fills_trivially() {
        let sp = h2();
        let empty = SimplicialChain::empty(1);
        let params = circle_params(&sp, 1.0);
        let (filling, report) = cone_fill(&sp, &empty, &params).unwrap();
        assert!(filling.terms().is_empty());
        assert_eq!(report.total_volume, 0.0);
        assert_eq!(report.cycle_volume, 0.0);
    }

    #[test]
    fn density_is_one_at_time_zero_for_orthonormal_normal_frames() {
        let sp = h2xh2();
        let w = sp.default_direction().unwrap();
        let rates = DecayRates::from_direction(&sp, &w);
        let x = sp.basepoint().clone();
        // in-factor horizontal unit normals
        let frame = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let phi = density_phi(&sp, &rates, &x, &frame, &w, 0.0).unwrap();
        assert!((phi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aligned_two_frame_decays_like_exp_sqrt2() {
        let sp = h2xh2();
        let w = sp.default_direction().unwrap();
        let rates = DecayRates::from_direction(&sp, &w);
        let x = sp.basepoint().clone();
        let frame = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        for i in 0..=40 {
            let t = 10.0 * i as f64 / 40.0;
            let phi = density_phi(&sp, &rates, &x, &frame, &w, t).unwrap();
            assert!(
                (phi - (-SQRT_2 * t).exp()).abs() < 1e-10,
                "t={t}: {phi} vs {}",
                (-SQRT_2 * t).exp()
            );
        }
    }

    #[test]
    fn euclidean_direction_rides_along() {
        let sp = ProductSpace::parse("H2xE1").unwrap().0;
        let w = BoundaryDirection::vertical(&sp, vec![1.0, 0.0]).unwrap();
        let rates = DecayRates::from_direction(&sp, &w);
        let x = sp.basepoint().clone();
        let frame = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
        let phi0 = density_phi(&sp, &rates, &x, &frame, &w, 0.0).unwrap();
        for t in [0.5, 1.0, 3.0] {
            let phi = density_phi(&sp, &rates, &x, &frame, &w, t).unwrap();
            assert!(((phi / phi0) - (-t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn density_bound_with_unit_constant_on_random_two_frames() {
        let sp = h2xh2();
        let w = sp.default_direction().unwrap();
        let rates = DecayRates::from_direction(&sp, &w);
        let rho = rates.rho_star();
        assert!((rho - 1.0 / SQRT_2).abs() < 1e-12);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..300 {
            let x = sp.sample_point(&mut rng, 2.0);
            let frame: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let phi0 = match density_phi(&sp, &rates, &x, &frame, &w, 0.0) {
                Ok(p) => p,
                Err(_) => continue,
            };
            assert!(phi0 <= 1.0 + 1e-9, "phi(0) = {phi0}");
            for t in [0.5, 2.0, 5.0, 9.0] {
                let phi = density_phi(&sp, &rates, &x, &frame, &w, t).unwrap();
                assert!(
                    phi <= (-rho * t).exp() + 1e-9,
                    "phi {phi} above exp(-rho t) at t={t}"
                );
            }
        }
    }

    #[test]
    fn root_data_rates_match_speed_rates_for_two_factors() {
        let sp = h2xh2();
        let rs = crate::roots::RootSystem::from_label("A1xA1").unwrap();
        let bc = crate::roots::chamber_barycenter(&rs);
        let from_roots = DecayRates::from_root_data(&rs, &bc.h0, &sp).unwrap();
        let w = sp.default_direction().unwrap();
        let from_speeds = DecayRates::from_direction(&sp, &w);
        for (a, b) in from_roots.rates().iter().zip(from_speeds.rates()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_depth_shrinks_the_cap() {
        let sp = h2();
        let circle = slice_sphere(&sp, 2.0, 1, 0.2).unwrap();
        let w = sp.default_direction().unwrap();
        let mut last = f64::INFINITY;
        for t_max in [1.0, 2.0, 4.0, 8.0] {
            let params = ConeParams::new(w.clone(), t_max, -3.0, 16).unwrap();
            let (_, report) = cone_fill(&sp, &circle, &params).unwrap();
            assert!(
                report.cap_volume <= last + 1e-9,
                "cap volume grew with t_max"
            );
            last = report.cap_volume;
        }
    }

    /// Independent first-fundamental-form quadrature of the swept cone
    /// surface for a circle in the hyperbolic plane.
    #[test]
    fn cone_area_matches_surface_quadrature() {
        let sp = h2();
        let r = 2.0f64;
        let w = sp.default_direction().unwrap();
        let cap_level = -(r + 1.0);
        let circle = slice_sphere(&sp, r, 1, 0.02).unwrap();
        let params = ConeParams::new(w.clone(), 2.0 * r + 4.0, cap_level, 48).unwrap();
        let (_, report) = cone_fill(&sp, &circle, &params).unwrap();

        // point on the circle at angle theta, flowed for time s * T(theta)
        let point = |theta: f64, u: f64| -> SpacePoint {
            let x = SpacePoint::new(vec![
                r.sinh() * theta.cos(),
                r.cosh() + r.sinh() * theta.sin(),
            ]);
            let total = (sp.busemann(&w, &x) - cap_level).max(0.0);
            sp.asymptotic_ray(&x, &w, total * u)
        };
        let n_theta = 1024;
        let n_u = 256;
        let mut area = 0.0;
        for i in 0..n_theta {
            let theta = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n_theta as f64;
            for j in 0..n_u {
                let u = (j as f64 + 0.5) / n_u as f64;
                let h = 1e-5;
                let p = point(theta, u);
                let dth: Vec<f64> = point(theta + h, u)
                    .coords
                    .iter()
                    .zip(&point(theta - h, u).coords)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                let du: Vec<f64> = point(theta, u + h)
                    .coords
                    .iter()
                    .zip(&point(theta, u - h).coords)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                let e = sp.metric_dot(&p, &dth, &dth);
                let f = sp.metric_dot(&p, &dth, &du);
                let g = sp.metric_dot(&p, &du, &du);
                area += (e * g - f * f).max(0.0).sqrt();
            }
        }
        area *= 2.0 * std::f64::consts::PI / n_theta as f64 / n_u as f64;
        assert!(
            (report.cone_volume - area).abs() / area < 0.02,
            "cone volume {} vs quadrature {area}",
            report.cone_volume
        );
    }

    #[test]
    fn flow_is_three_lipschitz_on_samples() {
        let sp = h2xh2();
        let circle = slice_sphere(&sp, 4.0, 1, 0.3).unwrap();
        let w = sp.default_direction().unwrap();
        let ratio = verify_three_lipschitz(&sp, &circle, &w, 20_000, 42);
        assert!(ratio <= 3.0 + 1e-9, "lipschitz ratio {ratio}");
        assert!(ratio > 0.5);
    }

    #[test]
    fn report_decay_tracks_the_rate() {
        let sp = h2();
        let circle = slice_sphere(&sp, 2.0, 1, 0.1).unwrap();
        let params = circle_params(&sp, 2.0);
        let (_, report) = cone_fill(&sp, &circle, &params).unwrap();
        assert!(report.measured_decay > 0.5 && report.measured_decay < 1.5);
        assert!(report.measured_c1 <= 4.0);
        assert!(!report.density_samples.is_empty());
    }
}
