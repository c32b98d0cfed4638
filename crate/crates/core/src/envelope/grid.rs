//! Brute-force proximal points and Moreau envelopes over a tensor grid.

use crate::{dist_sq, BoxDomain, Error, Objective, Result};

/// Nodes per axis used by [`GridSpec::around`].
pub const DEFAULT_POINTS_1D: usize = 4001;
pub const DEFAULT_POINTS_2D: usize = 601;

/// A uniform tensor grid over a box, at most two-dimensional.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    domain: BoxDomain,
    points_per_axis: usize,
}

impl GridSpec {
    pub fn new(domain: BoxDomain, points_per_axis: usize) -> Result<Self> {
        if domain.dim() > 2 {
            return Err(Error::UnsupportedDimension(domain.dim()));
        }
        if points_per_axis < 3 {
            return Err(Error::invalid("grid needs at least 3 points per axis"));
        }
        Ok(GridSpec {
            domain,
            points_per_axis,
        })
    }

    /// Default oracle grid for a query at `(x, t)`: the objective's domain,
    /// grown to contain `x` with margin `3√(2t·max(1, δ))`.
    pub fn around(obj: &Objective, x: &[f64], t: f64, delta: f64) -> Result<Self> {
        let dim = obj.dim();
        if dim > 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        let margin = 3.0 * (2.0 * t * delta.max(1.0)).sqrt();
        let (mut lower, mut upper) = match obj.default_domain() {
            Some(d) => (d.lower.clone(), d.upper.clone()),
            None => (x.to_vec(), x.to_vec()),
        };
        for i in 0..dim {
            lower[i] = lower[i].min(x[i] - margin);
            upper[i] = upper[i].max(x[i] + margin);
        }
        let points = if dim == 1 {
            DEFAULT_POINTS_1D
        } else {
            DEFAULT_POINTS_2D
        };
        GridSpec::new(BoxDomain::new(lower, upper)?, points)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> Vec<f64> {
        let m = (self.points_per_axis - 1) as f64;
        self.domain
            .lower
            .iter()
            .zip(&self.domain.upper)
            .map(|(l, u)| (u - l) / m)
            .collect()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing().into_iter().fold(0.0, f64::max)
    }

    /// Nodes along one axis, ascending. Built from the box centre so that a
    /// box symmetric about zero yields nodes that are exact negatives of each
    /// other (exact ties for even objectives).
    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        let l = self.domain.lower[axis];
        let u = self.domain.upper[axis];
        let centre = 0.5 * (l + u);
        let half = 0.5 * (u - l);
        let m = (self.points_per_axis - 1) as f64;
        (0..self.points_per_axis)
            .map(|i| centre + half * ((2.0 * i as f64 - m) / m))
            .collect()
    }

    /// All nodes in lexicographic order, flattened.
    pub fn nodes(&self) -> Vec<f64> {
        match self.dim() {
            1 => self.axis_nodes(0),
            _ => {
                let a = self.axis_nodes(0);
                let b = self.axis_nodes(1);
                let mut out = Vec::with_capacity(2 * a.len() * b.len());
                for &ai in &a {
                    for &bi in &b {
                        out.push(ai);
                        out.push(bi);
                    }
                }
                out
            }
        }
    }
}

/// Objective values tabulated on a grid. Building it costs one counted
/// evaluation per node; queries are then free.
#[derive(Debug, Clone)]
pub struct GridTable {
    grid: GridSpec,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl GridTable {
    pub fn build(obj: &Objective, grid: &GridSpec) -> Result<Self> {
        if obj.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: obj.dim(),
                got: grid.dim(),
            });
        }
        let nodes = grid.nodes();
        let values = obj.evaluate_batch(&nodes)?;
        let dim = grid.dim();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                point: nodes[i * dim..(i + 1) * dim].to_vec(),
                value: values[i],
            });
        }
        Ok(GridTable {
            grid: grid.clone(),
            nodes,
            values,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Grid minimizer of `f(z) + ‖z − x‖²/(2t)` and the minimum value. Ties
    /// go to the lexicographically smallest node.
    pub fn prox(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
        let dim = self.grid.dim();
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        if !(t > 0.0) {
            return Err(Error::invalid(format!("time must be positive, got {t}")));
        }
        let inv = 0.5 / t;
        let mut best = 0;
        let mut best_val = f64::INFINITY;
        for (i, (z, fz)) in self.nodes.chunks_exact(dim).zip(&self.values).enumerate() {
            let v = fz + inv * dist_sq(z, x);
            if v < best_val {
                best_val = v;
                best = i;
            }
        }
        Ok((self.nodes[best * dim..(best + 1) * dim].to_vec(), best_val))
    }

    pub fn envelope(&self, x: &[f64], t: f64) -> Result<f64> {
        self.prox(x, t).map(|(_, v)| v)
    }
}

/// Grid proximal point of `f` at `x` with time `t`.
pub fn exact_prox_grid(obj: &Objective, x: &[f64], t: f64, grid: &GridSpec) -> Result<Vec<f64>> {
    GridTable::build(obj, grid)?.prox(x, t).map(|(z, _)| z)
}

/// Grid Moreau envelope `u(x, t)`.
pub fn exact_envelope_grid(obj: &Objective, x: &[f64], t: f64, grid: &GridSpec) -> Result<f64> {
    GridTable::build(obj, grid)?.envelope(x, t)
}
