//! Reduced root systems and the decay rates of stable Jacobi fields.
//!
//! A [`RootSystem`] stores positive roots as covectors on the chamber space
//! `R^rank` together with their multiplicities. Along a unit-speed geodesic
//! ray with chamber direction `H`, a stable Jacobi field decays per root
//! direction like `exp(-alpha(H) * t)`; the curvature operator eigenvalue for
//! the root `alpha` is `(alpha(H))^2`, and flat directions contribute zero
//! eigenvalues of multiplicity `rank - 1`.
//!
//! Normalization: the irreducible systems A1, A2, B2, G2 carry long roots of
//! squared length 2. The product systems `A1^r` (r >= 2) scale each factor
//! root to `sqrt(2/r) * e_i` so that the barycentric decay rates match a
//! product of unit-curvature hyperbolic planes traversed at equal speeds.

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-6;
const CHAMBER_TOL: f64 = 1e-12;

/// A positive root together with its multiplicity.
#[derive(Debug, Clone)]
pub struct PositiveRoot {
    pub covector: Vec<f64>,
    pub multiplicity: usize,
}

/// Abstract reduced root system with chamber data.
#[derive(Debug, Clone)]
pub struct RootSystem {
    label: String,
    rank: usize,
    simple: Vec<Vec<f64>>,
    positive: Vec<PositiveRoot>,
}

/// Unit chamber direction with its minimal root value.
///
/// `rho_star = min over positive roots of alpha(h0)`, the decay rate that
/// bounds the cone density from above.
#[derive(Debug, Clone)]
pub struct ChamberDirection {
    pub h0: Vec<f64>,
    pub rho_star: f64,
}

impl RootSystem {
    /// Parses a label: `A1`, `A1xA1`, `A1^3`, `A2`, `B2`, `G2`.
    pub fn from_label(label: &str) -> Result<Self> {
        let trimmed = label.trim();
        match trimmed {
            "A1" => return Ok(Self::a1_power(1)),
            "A2" => return Ok(Self::a2()),
            "B2" => return Ok(Self::b2()),
            "G2" => return Ok(Self::g2()),
            _ => {}
        }
        if let Some(rest) = trimmed.strip_prefix("A1^") {
            let r: usize = rest
                .parse()
                .map_err(|_| Error::Parse(format!("bad A1 power in root label {trimmed:?}")))?;
            if r == 0 {
                return Err(Error::Parse("A1^0 has empty rank".into()));
            }
            return Ok(Self::a1_power(r));
        }
        if trimmed
            .split('x')
            .filter(|t| !t.is_empty())
            .all(|t| t == "A1")
            && trimmed.contains('x')
        {
            let r = trimmed.split('x').count();
            return Ok(Self::a1_power(r));
        }
        Err(Error::Parse(format!("unknown root system label {trimmed:?}")))
    }

    /// `A1^r`: r orthogonal rank-one factors, roots `sqrt(2/r) * e_i`.
    pub fn a1_power(r: usize) -> Self {
        assert!(r >= 1);
        let scale = (2.0 / r as f64).sqrt();
        let simple: Vec<Vec<f64>> = (0..r)
            .map(|i| {
                let mut v = vec![0.0; r];
                v[i] = scale;
                v
            })
            .collect();
        let positive = simple
            .iter()
            .map(|c| PositiveRoot {
                covector: c.clone(),
                multiplicity: 1,
            })
            .collect();
        let label = if r == 1 {
            "A1".to_string()
        } else {
            format!("A1^{r}")
        };
        RootSystem {
            label,
            rank: r,
            simple,
            positive,
        }
    }

    pub fn a2() -> Self {
        let s2 = std::f64::consts::SQRT_2;
        let a1 = vec![s2, 0.0];
        let a2 = vec![-s2 / 2.0, s2 * 3f64.sqrt() / 2.0];
        let highest = vec![a1[0] + a2[0], a1[1] + a2[1]];
        Self::rank2("A2", [a1, a2], vec![highest])
    }

    pub fn b2() -> Self {
        // long simple e1 - e2, short simple e2; positive roots e1-e2, e2, e1, e1+e2
        let a1 = vec![1.0, -1.0];
        let a2 = vec![0.0, 1.0];
        let extra = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        Self::rank2("B2", [a1, a2], extra)
    }

    pub fn g2() -> Self {
        // short simple a1, long simple a2 at 150 degrees
        let s = (2.0f64 / 3.0).sqrt();
        let a1 = vec![s, 0.0];
        let a2 = vec![
            -std::f64::consts::SQRT_2 * 3f64.sqrt() / 2.0,
            std::f64::consts::SQRT_2 / 2.0,
        ];
        let combo = |p: f64, q: f64| vec![p * a1[0] + q * a2[0], p * a1[1] + q * a2[1]];
        let extra = vec![combo(1.0, 1.0), combo(2.0, 1.0), combo(3.0, 1.0), combo(3.0, 2.0)];
        Self::rank2("G2", [a1, a2], extra)
    }

    fn rank2(label: &str, simple: [Vec<f64>; 2], extra_positive: Vec<Vec<f64>>) -> Self {
        let mut positive: Vec<PositiveRoot> = simple
            .iter()
            .map(|c| PositiveRoot {
                covector: c.clone(),
                multiplicity: 1,
            })
            .collect();
        positive.extend(extra_positive.into_iter().map(|covector| PositiveRoot {
            covector,
            multiplicity: 1,
        }));
        RootSystem {
            label: label.to_string(),
            rank: 2,
            simple: simple.to_vec(),
            positive,
        }
    }

    /// Replaces the per-root multiplicities (split real forms default to 1).
    pub fn with_multiplicities(mut self, mults: &[usize]) -> Result<Self> {
        if mults.len() != self.positive.len() {
            return Err(Error::Dimension(format!(
                "{} multiplicities for {} positive roots",
                mults.len(),
                self.positive.len()
            )));
        }
        if mults.contains(&0) {
            return Err(Error::Domain("multiplicities must be positive".into()));
        }
        for (root, &m) in self.positive.iter_mut().zip(mults) {
            root.multiplicity = m;
        }
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn simple_roots(&self) -> &[Vec<f64>] {
        &self.simple
    }

    pub fn positive_roots(&self) -> &[PositiveRoot] {
        &self.positive
    }

    /// `alpha(h)` for a covector.
    pub fn pairing(root: &[f64], h: &[f64]) -> f64 {
        root.iter().zip(h).map(|(a, b)| a * b).sum()
    }

    /// True when every simple root is nonnegative on `h` (closed chamber).
    pub fn in_closed_chamber(&self, h: &[f64]) -> bool {
        h.len() == self.rank
            && self
                .simple
                .iter()
                .all(|a| Self::pairing(a, h) >= -CHAMBER_TOL)
    }

    /// Structural invariants: nonzero roots, reduced (no positive multiples),
    /// full-rank span, and the label's normalization.
    pub fn validate(&self) -> Result<()> {
        for root in &self.positive {
            let n2: f64 = root.covector.iter().map(|c| c * c).sum();
            if n2 <= 0.0 {
                return Err(Error::Domain("zero positive root".into()));
            }
        }
        for (i, a) in self.positive.iter().enumerate() {
            for b in self.positive.iter().skip(i + 1) {
                if positive_multiple(&a.covector, &b.covector) {
                    return Err(Error::Domain(
                        "positive roots contain a positive multiple pair".into(),
                    ));
                }
            }
        }
        let mat: Vec<Vec<f64>> = self.positive.iter().map(|r| r.covector.clone()).collect();
        if matrix_rank(&mat) != self.rank {
            return Err(Error::Domain("roots do not span the chamber space".into()));
        }
        let long2 = self
            .positive
            .iter()
            .map(|r| r.covector.iter().map(|c| c * c).sum::<f64>())
            .fold(0.0f64, f64::max);
        let expected = if let Some(rest) = self.label.strip_prefix("A1^") {
            2.0 / rest.parse::<f64>().unwrap_or(1.0)
        } else {
            2.0
        };
        if (long2 - expected).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "long root squared length {long2} != {expected} for {}",
                self.label
            )));
        }
        Ok(())
    }
}

fn positive_multiple(a: &[f64], b: &[f64]) -> bool {
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot > 0.0 && (dot - na * nb).abs() < 1e-9 * na * nb
}

fn matrix_rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let ncols = m[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        let pivot = (rank..m.len()).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()));
        let Some(p) = pivot else { break };
        if m[p][col].abs() < 1e-12 {
            continue;
        }
        m.swap(rank, p);
        for i in rank + 1..m.len() {
            let f = m[i][col] / m[rank][col];
            for c in col..ncols {
                m[i][c] -= f * m[rank][c];
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// The unit vector on which all simple roots take a common positive value,
/// together with `rho_star`, the minimum of `alpha(h0)` over positive roots.
pub fn chamber_barycenter(rs: &RootSystem) -> ChamberDirection {
    let n = rs.rank;
    assert_eq!(rs.simple.len(), n, "simple roots must form a chamber basis");
    // Solve simple * h = (1, ..., 1), then normalize.
    let mut aug: Vec<Vec<f64>> = rs
        .simple
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.push(1.0);
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, p);
        let piv = aug[col][col];
        assert!(piv.abs() > 1e-12, "degenerate simple root matrix");
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = aug[i][col] / piv;
            for c in col..=n {
                aug[i][c] -= f * aug[col][c];
            }
        }
    }
    let mut h: Vec<f64> = (0..n).map(|i| aug[i][n] / aug[i][i]).collect();
    let norm: f64 = h.iter().map(|c| c * c).sum::<f64>().sqrt();
    for c in &mut h {
        *c /= norm;
    }
    let rho_star = rs
        .positive
        .iter()
        .map(|r| RootSystem::pairing(&r.covector, &h))
        .fold(f64::INFINITY, f64::min);
    ChamberDirection { h0: h, rho_star }
}

/// Eigenvalues `(alpha(h))^2` of the curvature operator along `h`, one entry
/// per positive root with its multiplicity, followed by the flat zero
/// eigenvalue of multiplicity `rank - 1` when the rank exceeds one.
pub fn curvature_eigenvalues(rs: &RootSystem, h: &[f64]) -> Result<Vec<(f64, usize)>> {
    if h.len() != rs.rank {
        return Err(Error::Dimension(format!(
            "direction has {} coordinates in a rank-{} system",
            h.len(),
            rs.rank
        )));
    }
    let norm: f64 = h.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::Domain(format!("direction has norm {norm}, not unit")));
    }
    if !rs.in_closed_chamber(h) {
        return Err(Error::Domain(
            "direction lies outside the closed positive chamber".into(),
        ));
    }
    let mut eigen: Vec<(f64, usize)> = rs
        .positive
        .iter()
        .map(|r| {
            let v = RootSystem::pairing(&r.covector, h);
            (v * v, r.multiplicity)
        })
        .collect();
    if rs.rank > 1 {
        eigen.push((0.0, rs.rank - 1));
    }
    Ok(eigen)
}

/// Propagates stable Jacobi coefficients, one coordinate per eigenvalue
/// counted with multiplicity: `y_l * exp(-sqrt(lambda_l) * t)`.
pub fn jacobi_coefficients(rs: &RootSystem, h: &[f64], y0: &[f64], t: f64) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::Domain(format!("negative time {t}")));
    }
    let eigen = curvature_eigenvalues(rs, h)?;
    let total: usize = eigen.iter().map(|&(_, m)| m).sum();
    if y0.len() != total {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} eigenvalue slots",
            y0.len(),
            total
        )));
    }
    let mut out = Vec::with_capacity(total);
    let mut idx = 0;
    for &(lambda, mult) in &eigen {
        let decay = (-lambda.sqrt() * t).exp();
        for _ in 0..mult {
            out.push(y0[idx] * decay);
            idx += 1;
        }
    }
    Ok(out)
}
