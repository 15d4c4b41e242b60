//! Fourier and B-spline basis systems on `[0, 1]` together with the
//! roughness matrix `R[a][b] = ∫ φ_a''(t) φ_b''(t) dt`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::DOMAIN_SLACK;
use crate::error::{FkmError, Result};
use crate::quadrature::gauss_legendre_on;

pub const DEFAULT_SPLINE_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Fourier,
    #[serde(alias = "b-spline")]
    BSpline,
}

impl std::str::FromStr for BasisKind {
    type Err = FkmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fourier" | "f" => Ok(BasisKind::Fourier),
            "bspline" | "b-spline" | "b" => Ok(BasisKind::BSpline),
            other => Err(FkmError::InvalidBasis(format!("unknown basis kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BasisKind::Fourier => "fourier",
            BasisKind::BSpline => "bspline",
        })
    }
}

/// Serializable description of a basis. `knots` is the full clamped knot
/// vector for B-splines and absent for Fourier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<f64>>,
}

/// Symmetric positive semi-definite roughness matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrix {
    matrix: DMatrix<f64>,
}

impl PenaltyMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `βᵀ R β`, the integrated squared curvature of `βᵀφ`.
    pub fn quadratic_form(&self, beta: &[f64]) -> f64 {
        let b = DVector::from_column_slice(beta);
        b.dot(&(&self.matrix * &b))
    }

    /// A factor `L` with `LᵀL = R`. Tiny negative eigenvalues from rounding
    /// are clamped to zero.
    pub fn root(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut diagonal = true;
        for a in 0..m {
            for b in 0..m {
                if a != b && self.matrix[(a, b)] != 0.0 {
                    diagonal = false;
                }
            }
        }
        if diagonal {
            return DMatrix::from_fn(m, m, |a, b| {
                if a == b {
                    self.matrix[(a, a)].max(0.0).sqrt()
                } else {
                    0.0
                }
            });
        }
        let eig = self.matrix.clone().symmetric_eigen();
        let mut root = eig.eigenvectors.transpose();
        for (r, &lambda) in eig.eigenvalues.iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            root.row_mut(r).scale_mut(s);
        }
        root
    }
}

/// A finite set of basis functions on `[0, 1]` with its roughness matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BasisSpec", try_from = "BasisSpec")]
pub struct BasisSystem {
    kind: BasisKind,
    m: usize,
    order: usize,
    knots: Vec<f64>,
    penalty: Option<PenaltyMatrix>,
}

impl BasisSystem {
    /// `m` Fourier functions: `1`, then `√2 sin(2πlt)`, `√2 cos(2πlt)` for
    /// `l = 1, 2, …`.
    pub fn fourier(m: usize) -> Result<Self> {
        if m < 1 {
            return Err(FkmError::InvalidBasis("need at least one basis function".into()));
        }
        let mut basis = Self {
            kind: BasisKind::Fourier,
            m,
            order: 0,
            knots: Vec::new(),
            penalty: None,
        };
        basis.penalty = Some(basis.compute_roughness()?);
        Ok(basis)
    }

    /// `m` clamped B-splines of the given order with `m - order` equispaced
    /// interior knots.
    pub fn bspline(m: usize, order: usize) -> Result<Self> {
        if order < 1 {
            return Err(FkmError::InvalidBasis("spline order must be positive".into()));
        }
        if m < order {
            return Err(FkmError::InvalidBasis(format!(
                "B-spline basis of order {order} needs at least {order} functions, got {m}"
            )));
        }
        let n_interior = m - order;
        let interior: Vec<f64> = (1..=n_interior)
            .map(|i| i as f64 / (n_interior + 1) as f64)
            .collect();
        Self::bspline_with_knots(&interior, order)
    }

    /// Clamped B-splines on user-supplied interior knots.
    pub fn bspline_with_knots(interior: &[f64], order: usize) -> Result<Self> {
        if order < 1 {
            return Err(FkmError::InvalidBasis("spline order must be positive".into()));
        }
        let mut prev = 0.0;
        for &k in interior {
            if !(k > prev && k < 1.0) {
                return Err(FkmError::InvalidBasis(
                    "interior knots must be strictly increasing inside (0, 1)".into(),
                ));
            }
            prev = k;
        }
        let mut knots = vec![0.0; order];
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat_n(1.0, order));
        let mut basis = Self {
            kind: BasisKind::BSpline,
            m: interior.len() + order,
            order,
            knots,
            penalty: None,
        };
        if order >= 3 {
            basis.penalty = Some(basis.compute_roughness()?);
        }
        Ok(basis)
    }

    pub fn construct(kind: BasisKind, m: usize, order: Option<usize>) -> Result<Self> {
        match kind {
            BasisKind::Fourier => Self::fourier(m),
            BasisKind::BSpline => Self::bspline(m, order.unwrap_or(DEFAULT_SPLINE_ORDER)),
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Number of basis functions.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Spline order (degree + 1); `None` for Fourier.
    pub fn order(&self) -> Option<usize> {
        (self.kind == BasisKind::BSpline).then_some(self.order)
    }

    /// Full clamped knot vector (empty for Fourier).
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn interior_knots(&self) -> &[f64] {
        match self.kind {
            BasisKind::Fourier => &[],
            BasisKind::BSpline => &self.knots[self.order..self.knots.len() - self.order],
        }
    }

    pub fn spec(&self) -> BasisSpec {
        BasisSpec {
            kind: self.kind,
            m: self.m,
            order: self.order(),
            knots: (self.kind == BasisKind::BSpline).then(|| self.knots.clone()),
        }
    }

    /// Roughness matrix. Fails for B-splines of order below 3.
    pub fn roughness(&self) -> Result<&PenaltyMatrix> {
        self.penalty.as_ref().ok_or_else(|| {
            FkmError::Unsupported(format!(
                "roughness penalty needs spline order >= 3, basis has order {}",
                self.order
            ))
        })
    }

    fn check_domain(t: f64) -> Result<f64> {
        if !t.is_finite() || t < -DOMAIN_SLACK || t > 1.0 + DOMAIN_SLACK {
            return Err(FkmError::OutOfDomain { t, lo: 0.0, hi: 1.0 });
        }
        Ok(t.clamp(0.0, 1.0))
    }

    /// Values of all basis functions at `t`.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        let t = Self::check_domain(t)?;
        let mut out = vec![0.0; self.m];
        self.fill(t, 0, &mut out);
        Ok(out)
    }

    /// Derivatives of order `deriv` (0, 1 or 2) of all basis functions at
    /// `t`. B-spline derivatives at interior knots are right limits.
    pub fn evaluate_derivative(&self, t: f64, deriv: usize) -> Result<Vec<f64>> {
        if deriv > 2 {
            return Err(FkmError::Unsupported(format!("derivative of order {deriv}")));
        }
        let t = Self::check_domain(t)?;
        let mut out = vec![0.0; self.m];
        self.fill(t, deriv, &mut out);
        Ok(out)
    }

    /// `N × m` matrix whose row `j` is `φ(times[j])ᵀ`.
    pub fn design_matrix(&self, times: &[f64]) -> Result<DMatrix<f64>> {
        let mut design = DMatrix::zeros(times.len(), self.m);
        let mut row = vec![0.0; self.m];
        for (j, &t) in times.iter().enumerate() {
            let t = Self::check_domain(t)?;
            row.iter_mut().for_each(|v| *v = 0.0);
            self.fill(t, 0, &mut row);
            for (l, &v) in row.iter().enumerate() {
                design[(j, l)] = v;
            }
        }
        Ok(design)
    }

    fn fill(&self, t: f64, deriv: usize, out: &mut [f64]) {
        match self.kind {
            BasisKind::Fourier => fourier_fill(t, deriv, out),
            BasisKind::BSpline => self.bspline_fill(t, deriv, out),
        }
    }

    fn compute_roughness(&self) -> Result<PenaltyMatrix> {
        let m = self.m;
        let matrix = match self.kind {
            BasisKind::Fourier => DMatrix::from_fn(m, m, |a, b| {
                if a == b && a > 0 {
                    let freq = 2.0 * PI * a.div_ceil(2) as f64;
                    freq.powi(4)
                } else {
                    0.0
                }
            }),
            BasisKind::BSpline => {
                if self.order < 3 {
                    return Err(FkmError::Unsupported(
                        "roughness penalty needs spline order >= 3".into(),
                    ));
                }
                // φ'' is piecewise polynomial of degree order-3; its square
                // is integrated exactly by this many nodes per span.
                let nodes = (self.order - 2).max(5);
                let mut r = DMatrix::zeros(m, m);
                let mut d2 = vec![0.0; m];
                for span in self.knots.windows(2) {
                    let (a, b) = (span[0], span[1]);
                    if b <= a {
                        continue;
                    }
                    for (x, w) in gauss_legendre_on(nodes, a, b) {
                        d2.iter_mut().for_each(|v| *v = 0.0);
                        self.bspline_fill(x, 2, &mut d2);
                        for i in 0..m {
                            if d2[i] == 0.0 {
                                continue;
                            }
                            for j in 0..m {
                                r[(i, j)] += w * d2[i] * d2[j];
                            }
                        }
                    }
                }
                r
            }
        };
        Ok(PenaltyMatrix { matrix })
    }

    /// Index `μ` with `knots[μ] <= t < knots[μ + 1]`, restricted to the
    /// valid spans; `t = 1` lands in the last span.
    fn find_span(&self, t: f64) -> usize {
        let degree = self.order - 1;
        let upto = self.knots.partition_point(|&k| k <= t);
        upto.saturating_sub(1).clamp(degree, self.m - 1)
    }

    /// Nonzero B-spline values (or derivatives) at `t` via the triangular
    /// Cox–de Boor scheme, written into `out`.
    fn bspline_fill(&self, t: f64, deriv: usize, out: &mut [f64]) {
        let p = self.order - 1;
        let span = self.find_span(t);
        let u = &self.knots;

        // ndu: upper triangle holds basis values, lower triangle knot gaps.
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = t - u[span + 1 - j];
            right[j] = u[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let first = span - p;
        if deriv == 0 {
            for j in 0..=p {
                out[first + j] = ndu[j][p];
            }
            return;
        }
        if deriv > p {
            return;
        }

        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            let mut value = 0.0;
            for k in 1..=deriv {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if rk >= 0 {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r <= pk + 1 { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                value = d;
                std::mem::swap(&mut s1, &mut s2);
            }
            let mut factor = p as f64;
            for k in 1..deriv {
                factor *= (p - k) as f64;
            }
            out[first + r] = value * factor;
        }
    }
}

fn fourier_fill(t: f64, deriv: usize, out: &mut [f64]) {
    out[0] = if deriv == 0 { 1.0 } else { 0.0 };
    for l in 1..=out.len() / 2 {
        let w = 2.0 * PI * l as f64;
        let (s, c) = (w * t).sin_cos();
        let (sv, cv) = match deriv {
            0 => (s, c),
            1 => (w * c, -w * s),
            _ => (-w * w * s, -w * w * c),
        };
        out[2 * l - 1] = SQRT_2 * sv;
        if 2 * l < out.len() {
            out[2 * l] = SQRT_2 * cv;
        }
    }
}

impl From<BasisSystem> for BasisSpec {
    fn from(b: BasisSystem) -> Self {
        b.spec()
    }
}

impl TryFrom<BasisSpec> for BasisSystem {
    type Error = FkmError;

    fn try_from(spec: BasisSpec) -> Result<Self> {
        let basis = match (spec.kind, &spec.knots) {
            (BasisKind::BSpline, Some(knots)) => {
                let order = spec.order.unwrap_or(DEFAULT_SPLINE_ORDER);
                if knots.len() < 2 * order {
                    return Err(FkmError::InvalidBasis("knot vector too short".into()));
                }
                let clamped_lo = knots[..order].iter().all(|&k| k == 0.0);
                let clamped_hi = knots[knots.len() - order..].iter().all(|&k| k == 1.0);
                if !(clamped_lo && clamped_hi) {
                    return Err(FkmError::InvalidBasis(
                        "knot vector must be clamped at 0 and 1".into(),
                    ));
                }
                Self::bspline_with_knots(&knots[order..knots.len() - order], order)?
            }
            _ => Self::construct(spec.kind, spec.m, spec.order)?,
        };
        if basis.m != spec.m {
            return Err(FkmError::InvalidBasis(format!(
                "knot vector implies {} functions but m = {}",
                basis.m, spec.m
            )));
        }
        Ok(basis)
    }
}
