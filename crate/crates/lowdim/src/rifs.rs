//! Recurrent iterated function systems.
//!
//! A system is a family of contractive similitudes `w_1..w_n` on a ball of
//! radius `R` together with a row-stochastic, irreducible transition matrix
//! `P`. Its attractor components satisfy `A_i = union over j in I(i) of
//! w_i(A_j)` where `I(i)` indexes the positive entries of row i of `P`.
//!
//! The contraction dimension `d` is the unique positive number making the
//! spectral radius of `diag(s_i^d) * C` equal to 1 (`C` the 0/1 connectivity
//! pattern of `P`); for nonoverlapping components it equals the largest
//! per-component box-counting dimension, and `n * d` bounds the box-counting
//! dimension of the stacked attractor.

use crate::measurement::sample_uniform_ball;
use crate::rng::Rng;
use crate::{Matrix, Vector};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum RifsError {
    #[error("transition matrix must be square and nonempty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("transition entry ({row}, {col}) = {value} outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("row {row} of the transition matrix sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },
    #[error("transition matrix not irreducible: no path from {from} to {to}")]
    NotIrreducible { from: usize, to: usize },
    #[error("expected {expected} similitudes to match the transition matrix, got {got}")]
    MapCount { expected: usize, got: usize },
    #[error("similitude {map}: scale {scale} outside [0, 1)")]
    BadScale { map: usize, scale: f64 },
    #[error("similitude {map}: rotation is not orthogonal (||Q^T Q - I|| = {defect:e})")]
    NotOrthogonal { map: usize, defect: f64 },
    #[error("similitude {map}: rotation/translation dimensions do not match ambient dimension {ambient}")]
    BadDimensions { map: usize, ambient: usize },
    #[error(
        "similitude {map} does not map the radius-{radius} ball into itself \
         (needs radius >= {required})"
    )]
    NotInvariant {
        map: usize,
        radius: f64,
        required: f64,
    },
    #[error("power iteration did not converge (last estimate {last})")]
    NonConvergence { last: f64 },
    #[error("degenerate system: spectral radius of the connectivity pattern is {lambda} <= 1, no positive contraction dimension exists")]
    Degenerate { lambda: f64 },
}

/// Similitude `x -> scale * rotation * x + translation`.
#[derive(Clone, Debug)]
pub struct Similitude {
    pub scale: f64,
    pub rotation: Matrix,
    pub translation: Vector,
}

impl Similitude {
    pub fn apply(&self, x: &Vector) -> Vector {
        &self.rotation * x * self.scale + &self.translation
    }
}

/// Serialized form of a similitude: rotation as a row-major flat array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilitudeSpec {
    pub scale: f64,
    pub rotation: Vec<f64>,
    pub translation: Vec<f64>,
}

/// Serialized form of a system, matching the JSON schema
/// `{m, R, maps: [{scale, rotation, translation}], P}` with `rotation` and
/// `P` row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RifsSpec {
    pub m: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub maps: Vec<SimilitudeSpec>,
    #[serde(rename = "P")]
    pub transition: Vec<f64>,
}

/// Validated recurrent iterated function system.
#[derive(Clone, Debug)]
pub struct Rifs {
    pub ambient_dim: usize,
    pub domain_radius: f64,
    pub maps: Vec<Similitude>,
    pub transition: Matrix,
    connectivity: Matrix,
    index_sets: Vec<Vec<usize>>,
}

/// Checks row-stochasticity and irreducibility of a transition matrix and
/// derives the 0/1 connectivity matrix together with the index sets
/// `I(i) = {j : p_ij > 0}`.
pub fn validate_transition(p: &Matrix) -> Result<(Matrix, Vec<Vec<usize>>), RifsError> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(RifsError::NotSquare {
            rows: p.nrows(),
            cols: p.ncols(),
        });
    }
    for i in 0..n {
        for j in 0..n {
            let v = p[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                return Err(RifsError::EntryOutOfRange {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        let sum: f64 = p.row(i).iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(RifsError::RowSum { row: i, sum });
        }
    }
    let connectivity = Matrix::from_fn(n, n, |i, j| if p[(i, j)] > 0.0 { 1.0 } else { 0.0 });
    let index_sets: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| p[(i, j)] > 0.0).collect())
        .collect();

    // Irreducibility: every node reaches every other in the directed graph
    // of C. Breadth-first search from each node; report the first missing
    // pair in row-major order.
    for from in 0..n {
        let mut reached = vec![false; n];
        let mut queue = vec![from];
        reached[from] = true;
        while let Some(i) = queue.pop() {
            for &j in &index_sets[i] {
                if !reached[j] {
                    reached[j] = true;
                    queue.push(j);
                }
            }
        }
        for (to, &ok) in reached.iter().enumerate() {
            if !ok {
                return Err(RifsError::NotIrreducible { from, to });
            }
        }
    }
    Ok((connectivity, index_sets))
}

impl Rifs {
    pub fn new(
        ambient_dim: usize,
        domain_radius: f64,
        maps: Vec<Similitude>,
        transition: Matrix,
    ) -> Result<Self, RifsError> {
        let (connectivity, index_sets) = validate_transition(&transition)?;
        let n = transition.nrows();
        if maps.len() != n {
            return Err(RifsError::MapCount {
                expected: n,
                got: maps.len(),
            });
        }
        for (idx, w) in maps.iter().enumerate() {
            if !(0.0..1.0).contains(&w.scale) {
                return Err(RifsError::BadScale {
                    map: idx,
                    scale: w.scale,
                });
            }
            if w.rotation.shape() != (ambient_dim, ambient_dim)
                || w.translation.len() != ambient_dim
            {
                return Err(RifsError::BadDimensions {
                    map: idx,
                    ambient: ambient_dim,
                });
            }
            let defect = (w.rotation.transpose() * &w.rotation
                - Matrix::identity(ambient_dim, ambient_dim))
            .norm();
            if defect > 1e-9 {
                return Err(RifsError::NotOrthogonal { map: idx, defect });
            }
            // sup over the ball of ||w(x)|| is s*R + ||t||; invariance is the
            // exact condition s*R + ||t|| <= R.
            let reach = w.scale * domain_radius + w.translation.norm();
            if reach > domain_radius * (1.0 + 1e-12) {
                return Err(RifsError::NotInvariant {
                    map: idx,
                    radius: domain_radius,
                    required: w.translation.norm() / (1.0 - w.scale),
                });
            }
        }
        Ok(Rifs {
            ambient_dim,
            domain_radius,
            maps,
            transition,
            connectivity,
            index_sets,
        })
    }

    pub fn from_spec(spec: &RifsSpec) -> Result<Self, RifsError> {
        let n = spec.maps.len();
        let m = spec.m;
        let mut maps = Vec::with_capacity(n);
        for (idx, ms) in spec.maps.iter().enumerate() {
            if ms.rotation.len() != m * m || ms.translation.len() != m {
                return Err(RifsError::BadDimensions {
                    map: idx,
                    ambient: m,
                });
            }
            maps.push(Similitude {
                scale: ms.scale,
                rotation: Matrix::from_row_slice(m, m, &ms.rotation),
                translation: Vector::from_column_slice(&ms.translation),
            });
        }
        if spec.transition.len() != n * n {
            return Err(RifsError::NotSquare {
                rows: n,
                cols: spec.transition.len().checked_div(n).unwrap_or(0),
            });
        }
        let p = Matrix::from_row_slice(n, n, &spec.transition);
        Rifs::new(m, spec.radius, maps, p)
    }

    pub fn to_spec(&self) -> RifsSpec {
        RifsSpec {
            m: self.ambient_dim,
            radius: self.domain_radius,
            maps: self
                .maps
                .iter()
                .map(|w| SimilitudeSpec {
                    scale: w.scale,
                    rotation: w.rotation.transpose().as_slice().to_vec(),
                    translation: w.translation.as_slice().to_vec(),
                })
                .collect(),
            transition: self.transition.transpose().as_slice().to_vec(),
        }
    }

    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    pub fn connectivity(&self) -> &Matrix {
        &self.connectivity
    }

    pub fn index_sets(&self) -> &[Vec<usize>] {
        &self.index_sets
    }

    /// `diag(s_1^t, ..., s_n^t) * C`, with zero scales contributing zero rows
    /// for every t (including t = 0).
    pub fn weighted_connectivity(&self, t: f64) -> Matrix {
        let n = self.map_count();
        Matrix::from_fn(n, n, |i, j| {
            let s = self.maps[i].scale;
            if s <= 0.0 {
                0.0
            } else {
                s.powf(t) * self.connectivity[(i, j)]
            }
        })
    }

    /// The unique positive `d` with `spectral_radius(S(d) C) = 1`, found by
    /// bisection on the strictly decreasing map `t -> spectral_radius(S(t)C)`.
    /// The returned value satisfies `|spectral_radius(S(d)C) - 1| <= 1e-9`.
    pub fn contraction_dimension(&self) -> Result<f64, RifsError> {
        let lambda0 = spectral_radius(&self.weighted_connectivity(0.0))?;
        if lambda0 <= 1.0 + 1e-12 {
            return Err(RifsError::Degenerate { lambda: lambda0 });
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while spectral_radius(&self.weighted_connectivity(hi))? >= 1.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e9 {
                return Err(RifsError::NonConvergence { last: hi });
            }
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let lam = spectral_radius(&self.weighted_connectivity(mid))?;
            if (lam - 1.0).abs() <= 1e-10 {
                return Ok(mid);
            }
            if lam > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * hi.max(1.0) {
                break;
            }
        }
        Ok(mid)
    }

    /// Upper bound `n * d` on the box-counting dimension of the stacked
    /// attractor (components as matrix columns).
    pub fn dimension_bound(&self) -> Result<f64, RifsError> {
        Ok(self.map_count() as f64 * self.contraction_dimension()?)
    }

    /// Samples the attractor components by the recurrent chaos game.
    ///
    /// The chain runs on states `(i, x)` with `x` tracking a point of `A_i`.
    /// Because `A_i` is built from `w_i` applied to points of `A_j` with
    /// `j in I(i)`, the simulation transitions on the reversed chain: the
    /// next index `i'` is drawn among `{i' : c_{i',i} = 1}` with probability
    /// proportional to `p_{i',i}`, then `x <- w_{i'}(x)`. After `burn_in`
    /// steps each visited state deposits its point into component `i`'s
    /// cloud until every cloud holds `points_per_component` points.
    /// Deterministic given `seed`.
    pub fn attractor_points(
        &self,
        points_per_component: usize,
        burn_in: usize,
        seed: u64,
    ) -> AttractorSample {
        assert!(burn_in >= 50, "burn_in must be at least 50");
        assert!(points_per_component >= 1);
        let n = self.map_count();
        // Reversed-chain candidates: predecessors[i] lists the i' with
        // c_{i',i} = 1, weighted by p_{i',i}.
        let predecessors: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&ip| self.connectivity[(ip, i)] > 0.0)
                    .map(|ip| (ip, self.transition[(ip, i)]))
                    .collect()
            })
            .collect();

        let mut rng = Rng::from_seed(seed);
        let mut state = 0usize;
        let mut x = sample_uniform_ball(self.ambient_dim, self.domain_radius, &mut rng);
        let mut components: Vec<Vec<Vector>> = vec![Vec::with_capacity(points_per_component); n];
        let mut filled = 0usize;
        let mut step = 0usize;
        while filled < n {
            let cands = &predecessors[state];
            let total: f64 = cands.iter().map(|&(_, w)| w).sum();
            let mut u = rng.uniform01() * total;
            let mut next = cands[cands.len() - 1].0;
            for &(ip, w) in cands {
                if u < w {
                    next = ip;
                    break;
                }
                u -= w;
            }
            debug_assert!(
                self.connectivity[(next, state)] > 0.0,
                "transition must follow the connectivity pattern"
            );
            x = self.maps[next].apply(&x);
            state = next;
            step += 1;
            if step > burn_in {
                let cloud = &mut components[state];
                if cloud.len() < points_per_component {
                    cloud.push(x.clone());
                    if cloud.len() == points_per_component {
                        filled += 1;
                    }
                }
            }
        }
        AttractorSample {
            components,
            burn_in,
            chain_seed: seed,
        }
    }
}

/// Per-component attractor point clouds.
#[derive(Clone, Debug)]
pub struct AttractorSample {
    pub components: Vec<Vec<Vector>>,
    pub burn_in: usize,
    pub chain_seed: u64,
}

impl AttractorSample {
    /// All points of all components, flattened.
    pub fn all_points(&self) -> Vec<Vector> {
        self.components.iter().flatten().cloned().collect()
    }
}

/// Spectral radius of an entrywise-nonnegative square matrix by power
/// iteration with a deterministic positive start vector and convergence on
/// the Rayleigh quotient. Iterating on `M + I` (same Perron vector, radius
/// shifted by one) keeps the iteration convergent for periodic patterns.
pub fn spectral_radius(m: &Matrix) -> Result<f64, RifsError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    debug_assert!(m.iter().all(|&v| v >= 0.0), "matrix must be nonnegative");
    let shifted = m + Matrix::identity(n, n);
    let mut x = Vector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda_prev = f64::NAN;
    for iter in 0..1_000_000 {
        let y = &shifted * &x;
        let lambda = x.dot(&y);
        let norm = y.norm();
        // diag(M + I) >= 1 keeps ||y|| >= ||x|| > 0
        x = y / norm;
        if iter >= 10 && (lambda - lambda_prev).abs() <= 1e-14 * lambda.abs().max(1.0) {
            return Ok((lambda - 1.0).max(0.0));
        }
        lambda_prev = lambda;
    }
    Err(RifsError::NonConvergence {
        last: lambda_prev - 1.0,
    })
}

/// The four-similitude system on the unit square: maps of common contractivity
/// `scale` toward the four corners. With `self_transitions = false` the
/// transition matrix is `(J - I)/3` (no self loops); with `true` it is `J/4`.
/// The domain ball radius is 1.5 (>= sqrt(2), so the square fits and every
/// map keeps the ball invariant).
pub fn four_corner_square_system(scale: f64, self_transitions: bool) -> Result<Rifs, RifsError> {
    assert!((0.0..0.5).contains(&scale), "scale must be in (0, 0.5)");
    let corners = [
        (0.0, 0.0),
        (1.0 - scale, 0.0),
        (0.0, 1.0 - scale),
        (1.0 - scale, 1.0 - scale),
    ];
    let maps = corners
        .iter()
        .map(|&(tx, ty)| Similitude {
            scale,
            rotation: Matrix::identity(2, 2),
            translation: Vector::from_column_slice(&[tx, ty]),
        })
        .collect();
    let p = if self_transitions {
        Matrix::from_element(4, 4, 0.25)
    } else {
        Matrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 / 3.0 })
    };
    Rifs::new(2, 1.5, maps, p)
}
