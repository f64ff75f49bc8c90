//! Descriptor algebra for structured matrix sets.
//!
//! A [`SetDescriptor`] is an algebraic tree describing a structured set of
//! matrices. The calculus in [`SetDescriptor::rect_param`] derives a
//! rectifiability parameter `s` (the set is a countable union of Lipschitz
//! images of compact subsets of R^s), from which Hausdorff and box-counting
//! upper bounds and measurement-count thresholds follow:
//!
//! * unique recovery of every member needs `k > dim(U - U)`;
//! * zero-error recovery of a random member needs `k > dim(U)`;
//! * Hölder-continuous (noise-robust) recovery with exponent `beta` needs
//!   `k > dim / (1 - beta)` with the corresponding dimension.
//!
//! Sets that are a single Lipschitz image of a compact set (orthogonal
//! groups, bounded restrictions, attractors) carry their box-counting bound
//! directly; countable unions (sparse, low rank, the combinators over them)
//! only do after a [`SetDescriptor::BoundedBy`] restriction, which the
//! report tracks through the `countable_only` flag.

use crate::rifs::{Rifs, RifsError, RifsSpec};
use crate::rng::Rng;
use crate::Matrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SetError {
    #[error(
        "shape mismatch in {combinator}: left is {l_rows}x{l_cols}, right is {r_rows}x{r_cols}"
    )]
    ShapeMismatch {
        combinator: &'static str,
        l_rows: usize,
        l_cols: usize,
        r_rows: usize,
        r_cols: usize,
    },
    #[error("invalid descriptor: {0}")]
    Invalid(String),
    #[error("descriptor kind {0} does not support projection")]
    NoProjection(&'static str),
    #[error("descriptor kind {0} has no membership residual")]
    NoResidual(&'static str),
    #[error("sampling failed: {0}")]
    SamplingFailed(String),
    #[error("matrix is {got_rows}x{got_cols}, descriptor expects {rows}x{cols}")]
    MatrixShape {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error(transparent)]
    Rifs(#[from] RifsError),
}

/// Algebraic description of a structured matrix set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDescriptor {
    /// Matrices with at most `s` nonzero entries.
    Sparse { m: usize, n: usize, s: usize },
    /// Matrices supported on the given (0-based) index set.
    FixedSupport {
        m: usize,
        n: usize,
        support: Vec<(usize, usize)>,
    },
    /// Matrices of rank at most `r`.
    LowRank { m: usize, n: usize, r: usize },
    /// Orthogonal m-by-m matrices.
    Orthogonal { m: usize },
    /// Upper triangular matrices with at most `s` nonzero entries.
    UpperTriangularSparse { m: usize, n: usize, s: usize },
    /// Attractor of a recurrent iterated function system, components stacked
    /// as matrix columns.
    RifsAttractor { rifs: RifsSpec },
    /// Union of the children (equal shapes).
    Union { children: Vec<SetDescriptor> },
    /// `{ L R : L in left, R in right }`.
    MatrixProduct {
        left: Box<SetDescriptor>,
        right: Box<SetDescriptor>,
    },
    /// `{ L + R }`.
    Sum {
        left: Box<SetDescriptor>,
        right: Box<SetDescriptor>,
    },
    /// `{ L (x) R }` (Kronecker product).
    Kronecker {
        left: Box<SetDescriptor>,
        right: Box<SetDescriptor>,
    },
    /// `{ L - R }` (Minkowski difference of the two sets).
    MinkowskiDiff {
        left: Box<SetDescriptor>,
        right: Box<SetDescriptor>,
    },
    /// `{ X X^T : X in child }`.
    GramSquare { child: Box<SetDescriptor> },
    /// Members of `child` with Frobenius norm at most `radius`.
    BoundedBy {
        child: Box<SetDescriptor>,
        radius: f64,
    },
}

/// Box-counting (upper Minkowski) dimension bound of a descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum MinkowskiUpper {
    /// The set is bounded with this box-counting dimension bound.
    Value(f64),
    /// The set is unbounded; wrap it in `BoundedBy` to get a finite bound.
    RequiresBounding,
    /// No bound is derivable for this descriptor.
    Unknown,
}

/// Output of the dimension calculus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    /// Rectifiability parameter `s`, `None` when the set is not rectifiable.
    pub rect_param: Option<u64>,
    /// True when only countably rectifiable (a countable union of pieces);
    /// box-counting bounds then need a bounded restriction.
    pub countable_only: bool,
    /// Upper bound on the Hausdorff dimension.
    pub hausdorff_upper: Option<f64>,
    /// Upper bound on the upper Minkowski dimension.
    pub minkowski_upper: MinkowskiUpper,
    /// Applied rules, innermost first.
    pub derivation_trace: Vec<String>,
}

impl DimensionReport {
    fn push(mut self, line: String) -> Self {
        self.derivation_trace.push(line);
        self
    }
}

/// Recovery thresholds derived from the dimension calculus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Smallest k guaranteeing unique recovery of every member
    /// (`k > dim(U - U)`); `None` when no finite threshold is derivable.
    pub k_unique: Option<u64>,
    /// Smallest k guaranteeing zero-error recovery of a random member
    /// (`k > dim(U)`).
    pub k_probabilistic: Option<u64>,
    /// Dimension used for the difference-set (unique/deterministic) variant.
    pub dim_unique: Option<f64>,
    /// Dimension used for the direct (probabilistic) variant.
    pub dim_probabilistic: Option<f64>,
    pub derivation_trace: Vec<String>,
}

impl ThresholdReport {
    /// Smallest k admitting a beta-Hölder recovery map for every member:
    /// `k > dim(U - U) / (1 - beta)`.
    pub fn k_holder_unique(&self, beta: f64) -> Option<u64> {
        holder_threshold(self.dim_unique, beta)
    }

    /// Smallest k admitting beta-Hölder recovery of a random member with
    /// arbitrarily small error: `k > dim(U) / (1 - beta)`.
    pub fn k_holder_probabilistic(&self, beta: f64) -> Option<u64> {
        holder_threshold(self.dim_probabilistic, beta)
    }
}

/// Smallest integer k with `k > dim / (1 - beta)`.
fn holder_threshold(dim: Option<f64>, beta: f64) -> Option<u64> {
    assert!(beta > 0.0 && beta < 1.0, "beta must be in (0, 1)");
    dim.map(|d| (d / (1.0 - beta)).floor() as u64 + 1)
}

/// Smallest integer k with `k > dim`.
fn exceeding(dim: f64) -> u64 {
    dim.floor() as u64 + 1
}

impl SetDescriptor {
    /// Shape (rows, cols) of the matrices in the set, checking combinator
    /// compatibility throughout the tree.
    pub fn shape(&self) -> Result<(usize, usize), SetError> {
        use SetDescriptor::*;
        let positive = |m: usize, n: usize, what: &str| {
            if m == 0 || n == 0 {
                Err(SetError::Invalid(format!(
                    "{what}: dimensions must be positive"
                )))
            } else {
                Ok((m, n))
            }
        };
        match self {
            Sparse { m, n, s } => {
                if *s > m * n {
                    return Err(SetError::Invalid(format!(
                        "sparse: s = {s} exceeds m*n = {}",
                        m * n
                    )));
                }
                positive(*m, *n, "sparse")
            }
            FixedSupport { m, n, support } => {
                for &(p, q) in support {
                    if p >= *m || q >= *n {
                        return Err(SetError::Invalid(format!(
                            "fixed_support: index ({p}, {q}) outside {m}x{n}"
                        )));
                    }
                }
                positive(*m, *n, "fixed_support")
            }
            LowRank { m, n, r } => {
                if *r > (*m).min(*n) {
                    return Err(SetError::Invalid(format!(
                        "low_rank: r = {r} exceeds min(m, n) = {}",
                        (*m).min(*n)
                    )));
                }
                positive(*m, *n, "low_rank")
            }
            Orthogonal { m } => positive(*m, *m, "orthogonal"),
            UpperTriangularSparse { m, n, s } => {
                let positions = upper_triangular_positions(*m, *n).len();
                if *s > positions {
                    return Err(SetError::Invalid(format!(
                        "upper_triangular_sparse: s = {s} exceeds the {positions} upper positions"
                    )));
                }
                positive(*m, *n, "upper_triangular_sparse")
            }
            RifsAttractor { rifs } => positive(rifs.m, rifs.maps.len(), "rifs_attractor"),
            Union { children } => {
                let first = children
                    .first()
                    .ok_or_else(|| SetError::Invalid("union: needs at least one child".into()))?
                    .shape()?;
                for c in &children[1..] {
                    let sh = c.shape()?;
                    if sh != first {
                        return Err(SetError::ShapeMismatch {
                            combinator: "union",
                            l_rows: first.0,
                            l_cols: first.1,
                            r_rows: sh.0,
                            r_cols: sh.1,
                        });
                    }
                }
                Ok(first)
            }
            MatrixProduct { left, right } => {
                let (lm, ln) = left.shape()?;
                let (rm, rn) = right.shape()?;
                if ln != rm {
                    return Err(SetError::ShapeMismatch {
                        combinator: "matrix_product",
                        l_rows: lm,
                        l_cols: ln,
                        r_rows: rm,
                        r_cols: rn,
                    });
                }
                Ok((lm, rn))
            }
            Sum { left, right } | MinkowskiDiff { left, right } => {
                let l = left.shape()?;
                let r = right.shape()?;
                if l != r {
                    return Err(SetError::ShapeMismatch {
                        combinator: if matches!(self, Sum { .. }) {
                            "sum"
                        } else {
                            "minkowski_diff"
                        },
                        l_rows: l.0,
                        l_cols: l.1,
                        r_rows: r.0,
                        r_cols: r.1,
                    });
                }
                Ok(l)
            }
            Kronecker { left, right } => {
                let (lm, ln) = left.shape()?;
                let (rm, rn) = right.shape()?;
                Ok((lm * rm, ln * rn))
            }
            GramSquare { child } => {
                let (m, _) = child.shape()?;
                Ok((m, m))
            }
            BoundedBy { child, radius } => {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(SetError::Invalid(format!(
                        "bounded_by: radius {radius} must be positive and finite"
                    )));
                }
                child.shape()
            }
        }
    }

    /// Applies the dimension calculus.
    pub fn rect_param(&self) -> Result<DimensionReport, SetError> {
        self.shape()?;
        self.rect_param_inner()
    }

    fn rect_param_inner(&self) -> Result<DimensionReport, SetError> {
        use SetDescriptor::*;
        let countable = |s: u64, trace: String| DimensionReport {
            rect_param: Some(s),
            countable_only: true,
            hausdorff_upper: Some(s as f64),
            minkowski_upper: MinkowskiUpper::RequiresBounding,
            derivation_trace: vec![trace],
        };
        let compact = |s: u64, trace: String| DimensionReport {
            rect_param: Some(s),
            countable_only: false,
            hausdorff_upper: Some(s as f64),
            minkowski_upper: MinkowskiUpper::Value(s as f64),
            derivation_trace: vec![trace],
        };
        match self {
            Sparse { m, n, s } => Ok(countable(
                *s as u64,
                format!("sparse({m},{n},{s}): union over supports of {s}-dim subspaces -> {s}"),
            )),
            FixedSupport { support, .. } => {
                let s = support.len() as u64;
                Ok(countable(
                    s,
                    format!("fixed_support: {s}-dimensional subspace -> {s}"),
                ))
            }
            LowRank { m, n, r } => {
                let dim = manifold_dim_low_rank(*m, *n, *r);
                Ok(countable(
                    dim,
                    format!("low_rank({m},{n},{r}): manifold dimension (m+n-r)r -> {dim}"),
                ))
            }
            Orthogonal { m } => {
                let m = *m as u64;
                let dim = m * (m - 1) / 2;
                Ok(compact(
                    dim,
                    format!("orthogonal({m}): compact manifold of dimension m(m-1)/2 -> {dim}"),
                ))
            }
            UpperTriangularSparse { m, n, s } => Ok(countable(
                *s as u64,
                format!("upper_triangular_sparse({m},{n},{s}): union of {s}-dim subspaces -> {s}"),
            )),
            RifsAttractor { rifs } => {
                let sys = Rifs::from_spec(rifs)?;
                let d = sys.contraction_dimension()?;
                let n = sys.map_count() as f64;
                Ok(DimensionReport {
                    rect_param: None,
                    countable_only: false,
                    hausdorff_upper: Some(n * d),
                    minkowski_upper: MinkowskiUpper::Value(n * d),
                    derivation_trace: vec![format!(
                        "rifs_attractor: not rectifiable; box-counting bound n*d = {n}*{d:.8} = {:.8}",
                        n * d
                    )],
                })
            }
            Union { children } => {
                let reports: Vec<DimensionReport> = children
                    .iter()
                    .map(|c| c.rect_param_inner())
                    .collect::<Result<_, _>>()?;
                let rect = reports
                    .iter()
                    .map(|r| r.rect_param)
                    .try_fold(0u64, |acc, r| r.map(|v| acc.max(v)));
                let countable_only = reports.iter().any(|r| r.countable_only);
                let hausdorff = reports
                    .iter()
                    .map(|r| r.hausdorff_upper)
                    .try_fold(0.0f64, |acc, h| h.map(|v| acc.max(v)));
                let minkowski = reports
                    .iter()
                    .map(|r| r.minkowski_upper)
                    .fold(MinkowskiUpper::Value(0.0), combine_minkowski_max);
                let mut trace: Vec<String> = reports
                    .into_iter()
                    .flat_map(|r| r.derivation_trace)
                    .collect();
                trace.push(format!(
                    "union: maximum over {} children -> {}",
                    children.len(),
                    fmt_rect(rect)
                ));
                Ok(DimensionReport {
                    rect_param: rect,
                    countable_only,
                    hausdorff_upper: hausdorff,
                    minkowski_upper: minkowski,
                    derivation_trace: trace,
                })
            }
            MatrixProduct { left, right } => combine_pair(left, right, "matrix_product"),
            Sum { left, right } => combine_pair(left, right, "sum"),
            Kronecker { left, right } => combine_pair(left, right, "kronecker"),
            MinkowskiDiff { left, right } => {
                // The difference of a low-rank set with itself stays inside
                // the variety of doubled (clamped) rank, which has a smaller
                // dimension than the generic sum rule gives.
                if let (
                    LowRank { m, n, r },
                    LowRank {
                        m: m2,
                        n: n2,
                        r: r2,
                    },
                ) = (left.as_ref(), right.as_ref())
                {
                    if m == m2 && n == n2 && r == r2 {
                        let clamped = (2 * r).min((*m).min(*n));
                        let dim = manifold_dim_low_rank(*m, *n, clamped);
                        let saturated = 2 * r > (*m).min(*n);
                        let mut trace = vec![format!(
                            "minkowski_diff of low_rank({m},{n},{r}): difference set lies in low_rank({m},{n},{clamped}) -> {dim}"
                        )];
                        if saturated {
                            trace.push(format!(
                                "saturation: doubled rank {} exceeds min(m,n) = {}, clamped to {clamped}",
                                2 * r,
                                (*m).min(*n)
                            ));
                        }
                        return Ok(DimensionReport {
                            rect_param: Some(dim),
                            countable_only: true,
                            hausdorff_upper: Some(dim as f64),
                            minkowski_upper: MinkowskiUpper::RequiresBounding,
                            derivation_trace: trace,
                        });
                    }
                }
                // Likewise the difference of s-sparse with itself is
                // 2s-sparse (capped at the ambient dimension).
                if let (
                    Sparse { m, n, s },
                    Sparse {
                        m: m2,
                        n: n2,
                        s: s2,
                    },
                ) = (left.as_ref(), right.as_ref())
                {
                    if m == m2 && n == n2 && s == s2 {
                        let dim = ((2 * s).min(m * n)) as u64;
                        return Ok(countable(
                            dim,
                            format!(
                                "minkowski_diff of sparse({m},{n},{s}): difference set is sparse({m},{n},{}) -> {dim}",
                                (2 * s).min(m * n)
                            ),
                        ));
                    }
                }
                combine_pair(left, right, "minkowski_diff")
            }
            GramSquare { child } => {
                let inner = child.rect_param_inner()?;
                let line = format!(
                    "gram_square: Lipschitz image keeps the parameter -> {}",
                    fmt_rect(inner.rect_param)
                );
                Ok(inner.push(line))
            }
            BoundedBy { child, radius } => {
                let inner = child.rect_param_inner()?;
                let minkowski = match (inner.rect_param, inner.minkowski_upper) {
                    // A bounded piece of a countably rectifiable set has a
                    // rectifiable closure; the box-counting bound becomes
                    // the rectifiability parameter.
                    (Some(s), _) => MinkowskiUpper::Value(s as f64),
                    (None, mk) => mk,
                };
                let line = format!(
                    "bounded_by(radius {radius}): closed bounded restriction, box-counting bound {}",
                    match minkowski {
                        MinkowskiUpper::Value(v) => format!("{v}"),
                        _ => "unavailable".into(),
                    }
                );
                Ok(DimensionReport {
                    countable_only: false,
                    minkowski_upper: minkowski,
                    ..inner
                }
                .push(line))
            }
        }
    }

    /// Measurement-count thresholds implied by the calculus.
    pub fn thresholds(&self) -> Result<ThresholdReport, SetError> {
        let direct = self.rect_param()?;
        let diff = SetDescriptor::MinkowskiDiff {
            left: Box::new(self.clone()),
            right: Box::new(self.clone()),
        }
        .rect_param()?;

        let mut trace = Vec::new();
        let dim_probabilistic = direct.hausdorff_upper;
        let dim_unique = diff.hausdorff_upper;
        let k_probabilistic = dim_probabilistic.map(exceeding);
        let k_unique = dim_unique.map(exceeding);
        match dim_probabilistic {
            Some(d) => trace.push(format!(
                "probabilistic threshold: k > dim(U) = {d} -> k >= {}",
                exceeding(d)
            )),
            None => trace.push("probabilistic threshold: no finite dimension bound".into()),
        }
        match dim_unique {
            Some(d) => trace.push(format!(
                "unique-recovery threshold: k > dim(U - U) = {d} -> k >= {}",
                exceeding(d)
            )),
            None => trace.push("unique-recovery threshold: no finite dimension bound".into()),
        }
        if direct.countable_only {
            trace.push(
                "Hölder thresholds apply to bounded subsets (set is a countable union of pieces)"
                    .into(),
            );
        }
        trace.extend(direct.derivation_trace);
        trace.extend(diff.derivation_trace);
        Ok(ThresholdReport {
            k_unique,
            k_probabilistic,
            dim_unique,
            dim_probabilistic,
            derivation_trace: trace,
        })
    }

    /// Draws a random member of the set. Deterministic given the generator
    /// state; `amplitude` scales the Gaussian coefficients.
    pub fn sample_member(&self, rng: &mut Rng, amplitude: f64) -> Result<Matrix, SetError> {
        use SetDescriptor::*;
        let (rows, cols) = self.shape()?;
        match self {
            Sparse { m, n, s } => {
                let mut x = Matrix::zeros(*m, *n);
                for idx in rng.distinct_below(m * n, *s) {
                    x[(idx / n, idx % n)] = amplitude * rng.standard_normal();
                }
                Ok(x)
            }
            FixedSupport { m, n, support } => {
                let mut x = Matrix::zeros(*m, *n);
                for &(p, q) in support {
                    x[(p, q)] = amplitude * rng.standard_normal();
                }
                Ok(x)
            }
            LowRank { m, n, r } => {
                if *r == 0 {
                    return Ok(Matrix::zeros(*m, *n));
                }
                let g1 = Matrix::from_fn(*m, *r, |_, _| rng.standard_normal());
                let g2 = Matrix::from_fn(*n, *r, |_, _| rng.standard_normal());
                Ok(g1 * g2.transpose() * amplitude)
            }
            Orthogonal { m } => {
                // QR of a Gaussian matrix with the R diagonal sign fixed;
                // amplitude does not apply (the set is scale-fixed).
                let g = Matrix::from_fn(*m, *m, |_, _| rng.standard_normal());
                let qr = g.qr();
                let r = qr.r();
                let mut q = qr.q();
                for j in 0..*m {
                    if r[(j, j)] < 0.0 {
                        for i in 0..*m {
                            q[(i, j)] = -q[(i, j)];
                        }
                    }
                }
                Ok(q)
            }
            UpperTriangularSparse { m, n, s } => {
                let positions = upper_triangular_positions(*m, *n);
                let mut x = Matrix::zeros(*m, *n);
                for idx in rng.distinct_below(positions.len(), *s) {
                    let (p, q) = positions[idx];
                    x[(p, q)] = amplitude * rng.standard_normal();
                }
                Ok(x)
            }
            RifsAttractor { rifs } => {
                let sys = Rifs::from_spec(rifs)?;
                let sample = sys.attractor_points(1, 128, rng.next_u64());
                let mut x = Matrix::zeros(rows, cols);
                for (j, cloud) in sample.components.iter().enumerate() {
                    x.set_column(j, &cloud[0]);
                }
                Ok(x)
            }
            Union { children } => {
                let pick = rng.below(children.len());
                children[pick].sample_member(rng, amplitude)
            }
            MatrixProduct { left, right } => {
                Ok(left.sample_member(rng, amplitude)? * right.sample_member(rng, amplitude)?)
            }
            Sum { left, right } => {
                Ok(left.sample_member(rng, amplitude)? + right.sample_member(rng, amplitude)?)
            }
            Kronecker { left, right } => Ok(left
                .sample_member(rng, amplitude)?
                .kronecker(&right.sample_member(rng, amplitude)?)),
            MinkowskiDiff { left, right } => {
                Ok(left.sample_member(rng, amplitude)? - right.sample_member(rng, amplitude)?)
            }
            GramSquare { child } => {
                let x = child.sample_member(rng, amplitude)?;
                Ok(&x * x.transpose())
            }
            BoundedBy { child, radius } => {
                for _ in 0..100_000 {
                    let x = child.sample_member(rng, amplitude)?;
                    if x.norm() <= *radius {
                        return Ok(x);
                    }
                }
                Err(SetError::SamplingFailed(format!(
                    "no member with norm <= {radius} found in 100000 draws; lower the amplitude"
                )))
            }
        }
    }

    /// Nearest-member projection, defined for `Sparse` (keep the `s` largest
    /// magnitudes, row-major tie-break), `FixedSupport` (zero off support)
    /// and `LowRank` (truncated SVD). Idempotent.
    pub fn project(&self, x: &Matrix) -> Result<Matrix, SetError> {
        use SetDescriptor::*;
        let (m, n) = self.shape()?;
        if x.shape() != (m, n) {
            return Err(SetError::MatrixShape {
                rows: m,
                cols: n,
                got_rows: x.nrows(),
                got_cols: x.ncols(),
            });
        }
        match self {
            Sparse { s, .. } => Ok(keep_largest(x, *s, None)),
            FixedSupport { support, .. } => {
                let mut out = Matrix::zeros(m, n);
                for &(p, q) in support {
                    out[(p, q)] = x[(p, q)];
                }
                Ok(out)
            }
            LowRank { r, .. } => {
                if *r >= m.min(n) {
                    return Ok(x.clone());
                }
                let mut svd = x.clone().svd(true, true);
                for i in *r..svd.singular_values.len() {
                    svd.singular_values[i] = 0.0;
                }
                svd.recompose()
                    .map_err(|e| SetError::Invalid(format!("svd recompose failed: {e}")))
            }
            other => Err(SetError::NoProjection(other.kind_name())),
        }
    }

    /// Distance-like membership residual: 0 exactly when the matrix belongs
    /// to the set. Equals `||X - project(X)||` for projectable kinds.
    pub fn membership_residual(&self, x: &Matrix) -> Result<f64, SetError> {
        use SetDescriptor::*;
        match self {
            Sparse { .. } | FixedSupport { .. } | LowRank { .. } => {
                Ok((x - self.project(x)?).norm())
            }
            UpperTriangularSparse { m, n, s } => {
                if x.shape() != (*m, *n) {
                    return Err(SetError::MatrixShape {
                        rows: *m,
                        cols: *n,
                        got_rows: x.nrows(),
                        got_cols: x.ncols(),
                    });
                }
                let allowed = upper_triangular_positions(*m, *n);
                Ok((x - keep_largest(x, *s, Some(&allowed))).norm())
            }
            Orthogonal { m } => {
                if x.shape() != (*m, *m) {
                    return Err(SetError::MatrixShape {
                        rows: *m,
                        cols: *m,
                        got_rows: x.nrows(),
                        got_cols: x.ncols(),
                    });
                }
                Ok((x.transpose() * x - Matrix::identity(*m, *m)).norm())
            }
            BoundedBy { child, radius } => {
                let inner = child.membership_residual(x)?;
                Ok(inner.max((x.norm() - radius).max(0.0)))
            }
            Union { children } => {
                let mut best: Option<f64> = None;
                for c in children {
                    if let Ok(r) = c.membership_residual(x) {
                        best = Some(best.map_or(r, |b: f64| b.min(r)));
                    }
                }
                best.ok_or(SetError::NoResidual("union"))
            }
            other => Err(SetError::NoResidual(other.kind_name())),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        use SetDescriptor::*;
        match self {
            Sparse { .. } => "sparse",
            FixedSupport { .. } => "fixed_support",
            LowRank { .. } => "low_rank",
            Orthogonal { .. } => "orthogonal",
            UpperTriangularSparse { .. } => "upper_triangular_sparse",
            RifsAttractor { .. } => "rifs_attractor",
            Union { .. } => "union",
            MatrixProduct { .. } => "matrix_product",
            Sum { .. } => "sum",
            Kronecker { .. } => "kronecker",
            MinkowskiDiff { .. } => "minkowski_diff",
            GramSquare { .. } => "gram_square",
            BoundedBy { .. } => "bounded_by",
        }
    }
}

/// Manifold dimension (m+n-r)r of the rank-<=r variety, exact in integers.
fn manifold_dim_low_rank(m: usize, n: usize, r: usize) -> u64 {
    let (m, n, r) = (m as u64, n as u64, r as u64);
    (m + n - r) * r
}

fn fmt_rect(r: Option<u64>) -> String {
    match r {
        Some(v) => v.to_string(),
        None => "unbounded".into(),
    }
}

fn combine_minkowski_max(a: MinkowskiUpper, b: MinkowskiUpper) -> MinkowskiUpper {
    use MinkowskiUpper::*;
    match (a, b) {
        (Value(x), Value(y)) => Value(x.max(y)),
        (RequiresBounding, _) | (_, RequiresBounding) => RequiresBounding,
        (Unknown, _) | (_, Unknown) => Unknown,
    }
}

fn combine_minkowski_sum(a: MinkowskiUpper, b: MinkowskiUpper) -> MinkowskiUpper {
    use MinkowskiUpper::*;
    match (a, b) {
        (Value(x), Value(y)) => Value(x + y),
        (RequiresBounding, _) | (_, RequiresBounding) => RequiresBounding,
        (Unknown, _) | (_, Unknown) => Unknown,
    }
}

/// Dimension rule shared by the Lipschitz-image combinators (product, sum,
/// Kronecker, difference): parameters add.
fn combine_pair(
    left: &SetDescriptor,
    right: &SetDescriptor,
    name: &'static str,
) -> Result<DimensionReport, SetError> {
    let l = left.rect_param_inner()?;
    let r = right.rect_param_inner()?;
    let rect = match (l.rect_param, r.rect_param) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    let countable_only = l.countable_only || r.countable_only;
    let minkowski = combine_minkowski_sum(l.minkowski_upper, r.minkowski_upper);
    // Hausdorff bound: through rectifiability when available, otherwise
    // through the box-counting bound of the (bounded) factors.
    let hausdorff = match rect {
        Some(s) => Some(s as f64),
        None => match minkowski {
            MinkowskiUpper::Value(v) => Some(v),
            _ => None,
        },
    };
    let mut trace: Vec<String> = l
        .derivation_trace
        .into_iter()
        .chain(r.derivation_trace)
        .collect();
    trace.push(format!("{name}: parameters add -> {}", fmt_rect(rect)));
    Ok(DimensionReport {
        rect_param: rect,
        countable_only,
        hausdorff_upper: hausdorff,
        minkowski_upper: minkowski,
        derivation_trace: trace,
    })
}

fn upper_triangular_positions(m: usize, n: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// Keeps the `s` largest-magnitude entries of `x` (restricted to `allowed`
/// positions when given), zeroing the rest. Ties break toward the smaller
/// row-major index.
fn keep_largest(x: &Matrix, s: usize, allowed: Option<&[(usize, usize)]>) -> Matrix {
    let n = x.ncols();
    let mut entries: Vec<(f64, usize)> = match allowed {
        Some(pos) => pos
            .iter()
            .map(|&(p, q)| (x[(p, q)].abs(), p * n + q))
            .collect(),
        None => (0..x.nrows())
            .flat_map(|p| (0..n).map(move |q| (x[(p, q)].abs(), p * n + q)))
            .collect(),
    };
    entries.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let mut out = Matrix::zeros(x.nrows(), x.ncols());
    for &(_, idx) in entries.iter().take(s) {
        let (p, q) = (idx / n, idx % n);
        out[(p, q)] = x[(p, q)];
    }
    out
}
