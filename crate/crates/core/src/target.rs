//! Target functions `f*: box -> [0,1]^dy` with a declared sup-norm Lipschitz constant.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type Evaluator = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct TargetFunction {
    name: String,
    dx: usize,
    dy: usize,
    lipschitz: f64,
    domain: Vec<(f64, f64)>,
    f: Evaluator,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("name", &self.name)
            .field("dx", &self.dx)
            .field("dy", &self.dy)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl TargetFunction {
    /// Target on the unit cube `[0,1]^dx`.
    pub fn new<F>(name: impl Into<String>, dx: usize, dy: usize, lipschitz: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::on_box(name, vec![(0.0, 1.0); dx], dy, lipschitz, f)
    }

    pub fn on_box<F>(
        name: impl Into<String>,
        domain: Vec<(f64, f64)>,
        dy: usize,
        lipschitz: f64,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if domain.is_empty() || dy == 0 {
            return Err(Error::InvalidParameter("target dimensions must be positive".into()));
        }
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!("lipschitz constant {lipschitz}")));
        }
        if domain.iter().any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("empty domain box".into()));
        }
        Ok(Self { name: name.into(), dx: domain.len(), dy, lipschitz, domain, f: Arc::new(f) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn is_unit_cube(&self) -> bool {
        self.domain.iter().all(|&(a, b)| a == 0.0 && b == 1.0)
    }

    /// Evaluates without checks; `x.len()` must be `dx`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dx {
            return Err(Error::DimensionMismatch { expected: self.dx, got: x.len() });
        }
        let y = (self.f)(x);
        if y.len() != self.dy {
            return Err(Error::Target(format!("{} returned {} values, expected {}", self.name, y.len(), self.dy)));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::Target(format!("{} returned {v} at {x:?}", self.name)));
        }
        Ok(y)
    }

    /// Sample-checks the codomain `[0,1]^dy` and the declared Lipschitz constant.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            self.domain.iter().map(|&(a, b)| rng.random_range(a..=b)).collect()
        };
        let tol = 1e-12;
        for i in 0..samples {
            let x = point(&mut rng);
            let fx = self.evaluate(&x)?;
            if let Some(v) = fx.iter().find(|v| **v < -tol || **v > 1.0 + tol) {
                return Err(Error::Target(format!("{} value {v} at {x:?} leaves [0,1]", self.name)));
            }
            // alternate between far pairs and close pairs
            let z: Vec<f64> = if i % 2 == 0 {
                point(&mut rng)
            } else {
                x.iter()
                    .zip(&self.domain)
                    .map(|(xi, &(a, b))| (xi + rng.random_range(-1e-3..1e-3) * (b - a)).clamp(a, b))
                    .collect()
            };
            let fz = self.evaluate(&z)?;
            let dxn = sup_dist(&x, &z);
            if dxn == 0.0 {
                continue;
            }
            let q = sup_dist(&fx, &fz) / dxn;
            if q > self.lipschitz * (1.0 + 1e-9) + 1e-9 {
                return Err(Error::Target(format!(
                    "{}: difference quotient {q} exceeds declared lipschitz {}",
                    self.name, self.lipschitz
                )));
            }
        }
        Ok(())
    }

    /// Resolves a registry spec: `builtin:<name>[:<param>]`, `table:<csv>` or `pl:<csv>`.
    ///
    /// `lipschitz` overrides the intrinsic constant; it may not undercut it for
    /// builtins and is required for tables.
    pub fn from_spec(spec: &str, dx: usize, dy: usize, lipschitz: Option<f64>) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("target spec {spec:?} lacks a kind prefix")))?;
        let t = match kind {
            "builtin" => {
                let (name, param) = match rest.split_once(':') {
                    Some((n, p)) => (n, Some(p)),
                    None => (rest, None),
                };
                let t = builtin(name, param, dx, dy)?;
                match lipschitz {
                    Some(l) if l < t.lipschitz => {
                        return Err(Error::InvalidParameter(format!(
                            "declared lipschitz {l} below the intrinsic {} of {}",
                            t.lipschitz, t.name
                        )))
                    }
                    Some(l) => Self { lipschitz: l, ..t },
                    None => t,
                }
            }
            "table" => {
                let l = lipschitz.ok_or_else(|| {
                    Error::InvalidParameter("tabulated targets need a declared lipschitz constant".into())
                })?;
                tabulated(Path::new(rest), dx, dy, l)?
            }
            "pl" => {
                let t = pl_curve(Path::new(rest))?;
                let t = match lipschitz {
                    Some(l) if l >= t.lipschitz => Self { lipschitz: l, ..t },
                    Some(l) => {
                        return Err(Error::InvalidParameter(format!(
                            "declared lipschitz {l} below the curve's slope bound {}",
                            t.lipschitz
                        )))
                    }
                    None => t,
                };
                if t.dx != dx || t.dy != dy {
                    return Err(Error::InvalidParameter(format!(
                        "curve has dx={}, dy={} but {dx}, {dy} were requested",
                        t.dx, t.dy
                    )));
                }
                t
            }
            other => return Err(Error::InvalidParameter(format!("unknown target kind {other:?}"))),
        };
        Ok(t)
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn expect_dims(name: &str, dx: usize, dy: usize, want_dx: Option<usize>, want_dy: usize) -> Result<()> {
    let ok = want_dx.is_none_or(|w| w == dx) && dy == want_dy && dx > 0;
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "builtin:{name} does not support dx={dx}, dy={dy}"
        )));
    }
    Ok(())
}

/// Builtin targets, each Lipschitz-1 (or 0) in the sup norm on `[0,1]^dx`.
///
/// `product` is `x_1 ... x_dx / dx` and `absdiff` is `|x_1 - x_2| / 2`; the scaling
/// keeps the sup-norm Lipschitz constant at 1.
pub fn builtin(name: &str, param: Option<&str>, dx: usize, dy: usize) -> Result<TargetFunction> {
    let full = format!("builtin:{name}");
    match name {
        "identity" => {
            if dx != dy {
                return Err(Error::InvalidParameter("builtin:identity needs dx = dy".into()));
            }
            TargetFunction::new(full, dx, dy, 1.0, |x| x.to_vec())
        }
        "constant" => {
            let c: f64 = match param {
                Some(p) => p.parse().map_err(|_| Error::InvalidParameter(format!("constant value {p:?}")))?,
                None => 0.5,
            };
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidParameter(format!("constant {c} outside [0,1]")));
            }
            TargetFunction::new(full, dx, dy, 0.0, move |_| vec![c; dy])
        }
        "product" => {
            expect_dims(name, dx, dy, None, 1)?;
            let n = dx as f64;
            TargetFunction::new(full, dx, 1, 1.0, move |x| vec![x.iter().product::<f64>() / n])
        }
        "mean" => {
            expect_dims(name, dx, dy, None, 1)?;
            let n = dx as f64;
            TargetFunction::new(full, dx, 1, 1.0, move |x| vec![x.iter().sum::<f64>() / n])
        }
        "absdiff" => {
            expect_dims(name, dx, dy, Some(2), 1)?;
            TargetFunction::new(full, 2, 1, 1.0, |x| vec![(x[0] - x[1]).abs() / 2.0])
        }
        "product-mean-absdiff" => {
            expect_dims(name, dx, dy, Some(2), 3)?;
            TargetFunction::new(full, 2, 3, 1.0, |x| {
                vec![x[0] * x[1] / 2.0, (x[0] + x[1]) / 2.0, (x[0] - x[1]).abs() / 2.0]
            })
        }
        other => Err(Error::InvalidParameter(format!("unknown builtin target {other:?}"))),
    }
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Schema(format!("{}: bad number {s:?}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Schema(format!("{}: ragged row", path.display())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema(format!("{}: non-finite entry", path.display())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Piecewise-linear curve from rows `t, y1, ..., y_dy` (strictly increasing `t`).
/// Evaluation clamps `t` into the tabulated range.
pub fn pl_curve(path: &Path) -> Result<TargetFunction> {
    let (header, rows) = read_rows(path)?;
    if header.len() < 2 || rows.len() < 2 {
        return Err(Error::Schema(format!("{}: need a t column, outputs and two rows", path.display())));
    }
    let dy = header.len() - 1;
    let ts: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Schema(format!("{}: t must be strictly increasing", path.display())));
    }
    let ys: Vec<Vec<f64>> = rows.iter().map(|r| r[1..].to_vec()).collect();
    let mut lip: f64 = 0.0;
    for i in 1..ts.len() {
        for j in 0..dy {
            lip = lip.max((ys[i][j] - ys[i - 1][j]).abs() / (ts[i] - ts[i - 1]));
        }
    }
    let domain = vec![(ts[0], *ts.last().unwrap())];
    let name = format!("pl:{}", path.display());
    TargetFunction::on_box(name, domain, dy, lip, move |x| {
        let t = x[0].clamp(ts[0], *ts.last().unwrap());
        let i = ts.partition_point(|v| *v <= t).clamp(1, ts.len() - 1);
        let s = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
        (0..dy).map(|j| ys[i - 1][j] + s * (ys[i][j] - ys[i - 1][j])).collect()
    })
}

/// Full tensor-grid table with columns `x1..x_dx, y1..y_dy`, multilinearly interpolated.
pub fn tabulated(path: &Path, dx: usize, dy: usize, lipschitz: f64) -> Result<TargetFunction> {
    let (header, rows) = read_rows(path)?;
    if header.len() != dx + dy {
        return Err(Error::Schema(format!(
            "{}: {} columns, expected dx + dy = {}",
            path.display(),
            header.len(),
            dx + dy
        )));
    }
    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); dx];
    for row in &rows {
        for (k, axis) in axes.iter_mut().enumerate() {
            axis.push(row[k]);
        }
    }
    for axis in &mut axes {
        axis.sort_by(f64::total_cmp);
        axis.dedup();
        if axis.len() < 2 {
            return Err(Error::Schema(format!("{}: every axis needs two grid values", path.display())));
        }
    }
    let total: usize = axes.iter().map(Vec::len).product();
    if total != rows.len() {
        return Err(Error::Schema(format!(
            "{}: {} rows do not form a full {} point grid",
            path.display(),
            rows.len(),
            total
        )));
    }
    let strides: Vec<usize> = (0..dx).map(|k| axes[k + 1..].iter().map(Vec::len).product()).collect();
    let mut values = vec![Vec::new(); total];
    let mut seen = vec![false; total];
    for row in &rows {
        let mut idx = 0;
        for k in 0..dx {
            let i = axes[k].binary_search_by(|v| v.total_cmp(&row[k])).expect("value on axis");
            idx += i * strides[k];
        }
        if seen[idx] {
            return Err(Error::Schema(format!("{}: duplicate grid point", path.display())));
        }
        seen[idx] = true;
        values[idx] = row[dx..].to_vec();
    }
    let domain = axes.iter().map(|a| (a[0], *a.last().unwrap())).collect();
    let name = format!("table:{}", path.display());
    TargetFunction::on_box(name, domain, dy, lipschitz, move |x| {
        let mut cell = Vec::with_capacity(dx);
        for k in 0..dx {
            let a = &axes[k];
            let t = x[k].clamp(a[0], *a.last().unwrap());
            let i = a.partition_point(|v| *v <= t).clamp(1, a.len() - 1);
            cell.push((i - 1, (t - a[i - 1]) / (a[i] - a[i - 1])));
        }
        let mut out = vec![0.0; dy];
        for corner in 0..(1usize << dx) {
            let mut weight = 1.0;
            let mut idx = 0;
            for (k, &(i, s)) in cell.iter().enumerate() {
                let hi = (corner >> k) & 1 == 1;
                weight *= if hi { s } else { 1.0 - s };
                idx += (i + hi as usize) * strides[k];
            }
            if weight != 0.0 {
                for (o, v) in out.iter_mut().zip(&values[idx]) {
                    *o += weight * v;
                }
            }
        }
        out
    })
}
