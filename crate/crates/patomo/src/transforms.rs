//! Discrete regularization operators: forward-difference gradient and its
//! negative adjoint (divergence), the symmetrized gradient pair, and power
//! iteration norms of the operator blocks used by the solver.
//!
//! Grid spacing is normalized to 1 inside all regularizers; the weights
//! alpha and beta absorb physical scaling. Differences use Neumann
//! boundaries (the last difference along each axis is zero).

use crate::dtcwt::{self, WaveletCoeffs};
use crate::field::{Image, SymTensorField, VectorField};
use crate::operator::{estimate_norm, LinearOperator};

/// Forward-difference gradient with Neumann boundary.
pub fn grad(u: &Image) -> VectorField {
    let (nx, ny) = (u.nx, u.ny);
    let mut g = VectorField::zeros(nx, ny);
    for i in 0..ny {
        for j in 0..nx {
            let k = i * nx + j;
            if j + 1 < nx {
                g.x[k] = u.data[k + 1] - u.data[k];
            }
            if i + 1 < ny {
                g.y[k] = u.data[k + nx] - u.data[k];
            }
        }
    }
    g
}

/// Discrete divergence, the exact negative adjoint of [`grad`]:
/// `<grad u, r> = -<u, div r>` holds to machine rounding.
pub fn div(r: &VectorField) -> Image {
    let (nx, ny) = (r.nx, r.ny);
    let mut out = Image::zeros(nx, ny);
    for i in 0..ny {
        for j in 0..nx {
            let k = i * nx + j;
            let mut d = 0.0;
            if j + 1 < nx {
                d += r.x[k];
            }
            if j > 0 {
                d -= r.x[k - 1];
            }
            if i + 1 < ny {
                d += r.y[k];
            }
            if i > 0 {
                d -= r.y[k - nx];
            }
            out.data[k] = d;
        }
    }
    out
}

/// Symmetrized gradient `(grad v + grad v^T) / 2` with the same
/// forward-difference stencil as [`grad`].
pub fn sym_grad(v: &VectorField) -> SymTensorField {
    let (nx, ny) = (v.nx, v.ny);
    let mut w = SymTensorField::zeros(nx, ny);
    for i in 0..ny {
        for j in 0..nx {
            let k = i * nx + j;
            let dx_vx = if j + 1 < nx { v.x[k + 1] - v.x[k] } else { 0.0 };
            let dy_vy = if i + 1 < ny { v.y[k + nx] - v.y[k] } else { 0.0 };
            let dy_vx = if i + 1 < ny { v.x[k + nx] - v.x[k] } else { 0.0 };
            let dx_vy = if j + 1 < nx { v.y[k + 1] - v.y[k] } else { 0.0 };
            w.xx[k] = dx_vx;
            w.yy[k] = dy_vy;
            w.xy[k] = 0.5 * (dy_vx + dx_vy);
        }
    }
    w
}

/// Negative adjoint of [`sym_grad`] under the symmetric-tensor pairing
/// (off-diagonal weighted by 2): `<sym_grad v, s> = -<v, sym_div s>`.
pub fn sym_div(s: &SymTensorField) -> VectorField {
    let (nx, ny) = (s.nx, s.ny);
    let mut v = VectorField::zeros(nx, ny);
    for i in 0..ny {
        for j in 0..nx {
            let k = i * nx + j;
            // x component: d/dx applied to s_xx plus d/dy applied to s_xy
            let mut dx = 0.0;
            if j + 1 < nx {
                dx += s.xx[k];
            }
            if j > 0 {
                dx -= s.xx[k - 1];
            }
            if i + 1 < ny {
                dx += s.xy[k];
            }
            if i > 0 {
                dx -= s.xy[k - nx];
            }
            // y component: d/dx applied to s_xy plus d/dy applied to s_yy
            let mut dy = 0.0;
            if j + 1 < nx {
                dy += s.xy[k];
            }
            if j > 0 {
                dy -= s.xy[k - 1];
            }
            if i + 1 < ny {
                dy += s.yy[k];
            }
            if i > 0 {
                dy -= s.yy[k - nx];
            }
            v.x[k] = dx;
            v.y[k] = dy;
        }
    }
    v
}

/// Gradient as a flat linear operator (image -> stacked x/y components),
/// used for norm estimation.
pub struct GradOp {
    pub nx: usize,
    pub ny: usize,
}

impl LinearOperator for GradOp {
    fn n_rows(&self) -> usize {
        2 * self.nx * self.ny
    }

    fn n_cols(&self) -> usize {
        self.nx * self.ny
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let u = Image::from_vec(self.nx, self.ny, x.to_vec());
        let g = grad(&u);
        let n = self.nx * self.ny;
        y[..n].copy_from_slice(&g.x);
        y[n..].copy_from_slice(&g.y);
    }

    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let n = self.nx * self.ny;
        let r = VectorField {
            nx: self.nx,
            ny: self.ny,
            x: y[..n].to_vec(),
            y: y[n..].to_vec(),
        };
        let d = div(&r);
        for (xi, di) in x.iter_mut().zip(&d.data) {
            *xi = -di;
        }
    }
}

/// The stacked operator `(u, v) -> (grad u - v, sym_grad v)` appearing in
/// the second-order model; the off-diagonal tensor component carries
/// weight sqrt(2) in the flat embedding so the flat 2-norm matches the
/// weighted tensor pairing.
pub struct TgvBlockOp {
    pub nx: usize,
    pub ny: usize,
}

impl LinearOperator for TgvBlockOp {
    fn n_rows(&self) -> usize {
        5 * self.nx * self.ny
    }

    fn n_cols(&self) -> usize {
        3 * self.nx * self.ny
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nx * self.ny;
        let u = Image::from_vec(self.nx, self.ny, x[..n].to_vec());
        let v = VectorField {
            nx: self.nx,
            ny: self.ny,
            x: x[n..2 * n].to_vec(),
            y: x[2 * n..].to_vec(),
        };
        let mut g = grad(&u);
        g.axpy(-1.0, &v);
        let e = sym_grad(&v);
        let s2 = std::f64::consts::SQRT_2;
        y[..n].copy_from_slice(&g.x);
        y[n..2 * n].copy_from_slice(&g.y);
        y[2 * n..3 * n].copy_from_slice(&e.xx);
        y[3 * n..4 * n].copy_from_slice(&e.yy);
        for (dst, &src) in y[4 * n..].iter_mut().zip(&e.xy) {
            *dst = s2 * src;
        }
    }

    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let n = self.nx * self.ny;
        let r = VectorField {
            nx: self.nx,
            ny: self.ny,
            x: y[..n].to_vec(),
            y: y[n..2 * n].to_vec(),
        };
        let s2 = std::f64::consts::SQRT_2;
        let s = SymTensorField {
            nx: self.nx,
            ny: self.ny,
            xx: y[2 * n..3 * n].to_vec(),
            yy: y[3 * n..4 * n].to_vec(),
            xy: y[4 * n..].iter().map(|&v| v / s2).collect(),
        };
        let du = div(&r);
        let dv = sym_div(&s);
        for k in 0..n {
            x[k] = -du.data[k];
            x[n + k] = -r.x[k] - dv.x[k];
            x[2 * n + k] = -r.y[k] - dv.y[k];
        }
    }
}

/// Dual-tree complex wavelet transform as a flat linear operator
/// (image -> flattened coefficient vector).
pub struct WaveletOp {
    pub nx: usize,
    pub ny: usize,
    pub levels: usize,
}

impl LinearOperator for WaveletOp {
    fn n_rows(&self) -> usize {
        4 * self.nx * self.ny
    }

    fn n_cols(&self) -> usize {
        self.nx * self.ny
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let u = Image::from_vec(self.nx, self.ny, x.to_vec());
        let c = dtcwt::dtcwt_forward(&u, self.levels).expect("dimensions validated at setup");
        c.write_flat(y);
    }

    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let c = WaveletCoeffs::read_flat(self.nx, self.ny, self.levels, y);
        let u = dtcwt::dtcwt_inverse(&c);
        x.copy_from_slice(&u.data);
    }
}

/// Power-iteration operator norms of the regularization blocks.
#[derive(Debug, Clone, Copy)]
pub struct RegOperatorNorms {
    pub l_grad: f64,
    pub l_tgv_block: f64,
    pub l_wavelet: f64,
}

pub fn operator_norms(nx: usize, ny: usize, levels: usize, iters: usize, seed: u64) -> RegOperatorNorms {
    RegOperatorNorms {
        l_grad: estimate_norm(&GradOp { nx, ny }, iters, seed),
        l_tgv_block: estimate_norm(&TgvBlockOp { nx, ny }, iters, seed),
        l_wavelet: estimate_norm(&WaveletOp { nx, ny, levels }, iters, seed),
    }
}
