// Copyright 2026 The meander authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Finite-difference Dirichlet solvers on rectangles, used as independent
//! oracles for the kernel series: a 5-point Laplace solve (conjugate
//! gradients) and explicit time stepping for the heat equation with
//! diffusion coefficient 1/2.

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::geometry::Side;

#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn unit() -> Self {
        Self {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }
}

/// Dirichlet data per side, each a function of the coordinate along the side.
pub struct BoundaryData {
    fns: [Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>; 4],
}

impl Default for BoundaryData {
    fn default() -> Self {
        Self {
            fns: [None, None, None, None],
        }
    }
}

impl BoundaryData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, side: Side, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.fns[side.index()] = Some(Box::new(f));
        self
    }

    pub fn eval(&self, side: Side, along: f64) -> f64 {
        self.fns[side.index()].as_ref().map(|f| f(along)).unwrap_or(0.0)
    }
}

/// Node-centered grid including boundary nodes; `nx + 1` by `ny + 1` values,
/// row-major with y varying slowest.
#[derive(Debug, Clone)]
pub struct Grid {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub time: Option<f64>,
}

impl Grid {
    pub fn h(&self) -> f64 {
        (self.rect.y1 - self.rect.y0) / self.ny as f64
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * (self.nx + 1) + ix]
    }

    /// Bilinear interpolation at an interior point.
    pub fn interp(&self, x: f64, y: f64) -> f64 {
        let fx = (x - self.rect.x0) / (self.rect.x1 - self.rect.x0) * self.nx as f64;
        let fy = (y - self.rect.y0) / (self.rect.y1 - self.rect.y0) * self.ny as f64;
        let ix = (fx.floor() as usize).min(self.nx - 1);
        let iy = (fy.floor() as usize).min(self.ny - 1);
        let (wx, wy) = (fx - ix as f64, fy - iy as f64);
        self.node(ix, iy) * (1.0 - wx) * (1.0 - wy)
            + self.node(ix + 1, iy) * wx * (1.0 - wy)
            + self.node(ix, iy + 1) * (1.0 - wx) * wy
            + self.node(ix + 1, iy + 1) * wx * wy
    }

    pub fn to_field(&self) -> DensityField {
        let mut field = DensityField::new(1.0, self.time);
        for iy in 0..=self.ny {
            for ix in 0..=self.nx {
                let x = self.rect.x0 + (self.rect.x1 - self.rect.x0) * ix as f64 / self.nx as f64;
                let y = self.rect.y0 + (self.rect.y1 - self.rect.y0) * iy as f64 / self.ny as f64;
                field.push(None, [x, y], self.node(ix, iy));
            }
        }
        field
    }
}

fn grid_dims(rect: Rect, n: usize) -> Result<(usize, usize, f64)> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("grid must be at least 16; got {n}")));
    }
    let h = (rect.y1 - rect.y0) / n as f64;
    let nx = ((rect.x1 - rect.x0) / h).round() as usize;
    if nx < 2 {
        return Err(Error::InvalidArgument("rectangle too narrow for the grid".into()));
    }
    Ok((nx, n, h))
}

fn boundary_grid(rect: Rect, nx: usize, ny: usize, data: &BoundaryData) -> Grid {
    let mut g = Grid {
        rect,
        nx,
        ny,
        values: vec![0.0; (nx + 1) * (ny + 1)],
        time: None,
    };
    for iy in 0..=ny {
        let y = rect.y0 + (rect.y1 - rect.y0) * iy as f64 / ny as f64;
        g.values[iy * (nx + 1)] = data.eval(Side::West, y);
        g.values[iy * (nx + 1) + nx] = data.eval(Side::East, y);
    }
    for ix in 0..=nx {
        let x = rect.x0 + (rect.x1 - rect.x0) * ix as f64 / nx as f64;
        // Corners average the two adjacent sides.
        let s = data.eval(Side::South, x);
        let n = data.eval(Side::North, x);
        if ix == 0 || ix == nx {
            let idx0 = ix;
            let idx1 = ny * (nx + 1) + ix;
            g.values[idx0] = 0.5 * (g.values[idx0] + s);
            g.values[idx1] = 0.5 * (g.values[idx1] + n);
        } else {
            g.values[ix] = s;
            g.values[ny * (nx + 1) + ix] = n;
        }
    }
    g
}

/// Solve the 5-point Laplace system with Dirichlet data by conjugate
/// gradients; residual (max norm) below 1e-11.
pub fn fd_laplace(rect: Rect, n: usize, data: &BoundaryData) -> Result<Grid> {
    let (nx, ny, _h) = grid_dims(rect, n)?;
    let mut grid = boundary_grid(rect, nx, ny, data);
    let (iw, ih) = (nx - 1, ny - 1);
    let idx = |i: usize, j: usize| j * iw + i;
    let gidx = |i: usize, j: usize| (j + 1) * (nx + 1) + (i + 1);

    // b = sum of Dirichlet neighbors for each interior node.
    let mut b = vec![0.0f64; iw * ih];
    for j in 0..ih {
        for i in 0..iw {
            let mut s = 0.0;
            if i == 0 {
                s += grid.values[(j + 1) * (nx + 1)];
            }
            if i == iw - 1 {
                s += grid.values[(j + 1) * (nx + 1) + nx];
            }
            if j == 0 {
                s += grid.values[i + 1];
            }
            if j == ih - 1 {
                s += grid.values[ny * (nx + 1) + i + 1];
            }
            b[idx(i, j)] = s;
        }
    }

    // A x = 4x - Σ neighbors (interior only).
    let apply = |x: &[f64], out: &mut [f64]| {
        for j in 0..ih {
            for i in 0..iw {
                let mut v = 4.0 * x[idx(i, j)];
                if i > 0 {
                    v -= x[idx(i - 1, j)];
                }
                if i + 1 < iw {
                    v -= x[idx(i + 1, j)];
                }
                if j > 0 {
                    v -= x[idx(i, j - 1)];
                }
                if j + 1 < ih {
                    v -= x[idx(i, j + 1)];
                }
                out[idx(i, j)] = v;
            }
        }
    };

    let nunk = iw * ih;
    let mut x = vec![0.0f64; nunk];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0f64; nunk];
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    let tol = 1e-11;
    let max_iter = 60 * nx.max(ny);
    let mut converged = rs.sqrt() < tol;
    for _ in 0..max_iter {
        if converged {
            break;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rs / pap;
        for i in 0..nunk {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let rmax = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if rmax < tol {
            converged = true;
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..nunk {
            p[i] = r[i] + beta * p[i];
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            residual: rs.sqrt(),
            iterations: max_iter,
        });
    }
    for j in 0..ih {
        for i in 0..iw {
            grid.values[gidx(i, j)] = x[idx(i, j)];
        }
    }
    Ok(grid)
}

/// Explicit time stepping for `v_t = (v_xx + v_yy)/2` with Dirichlet data and
/// zero initial condition. Requires `dt <= h²/4`.
pub fn fd_heat(rect: Rect, n: usize, dt: f64, t: f64, data: &BoundaryData) -> Result<Grid> {
    let (nx, ny, h) = grid_dims(rect, n)?;
    if !(dt > 0.0) || dt > h * h / 4.0 + 1e-15 {
        return Err(Error::InvalidArgument(format!(
            "explicit heat step requires dt <= h^2/4 = {:.3e}; got {dt:.3e}",
            h * h / 4.0
        )));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("t must be positive".into()));
    }
    let steps = (t / dt).ceil() as usize;
    let dt = t / steps as f64;
    let lam = 0.5 * dt / (h * h);

    let mut grid = boundary_grid(rect, nx, ny, data);
    grid.time = Some(t);
    let w = nx + 1;
    let mut next = grid.values.clone();
    for _ in 0..steps {
        for j in 1..ny {
            let row = j * w;
            for i in 1..nx {
                let c = grid.values[row + i];
                let lap = grid.values[row + i - 1]
                    + grid.values[row + i + 1]
                    + grid.values[row - w + i]
                    + grid.values[row + w + i]
                    - 4.0 * c;
                next[row + i] = c + lam * lap;
            }
        }
        std::mem::swap(&mut grid.values, &mut next);
    }
    Ok(grid)
}
