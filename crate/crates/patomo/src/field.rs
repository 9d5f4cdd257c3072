//! Dense pixel fields: scalar images, vector fields and symmetric 2x2
//! tensor fields, all stored flat in row-major order.

/// Scalar image, `ny` rows by `nx` columns, row-major (`idx = i * nx + j`).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Image {
            nx,
            ny,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for i in 0..ny {
            for j in 0..nx {
                data.push(f(i, j));
            }
        }
        Image { nx, ny, data }
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nx * ny, "image data length mismatch");
        Image { nx, ny, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.nx + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.nx + j]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn dot(&self, other: &Image) -> f64 {
        dot(&self.data, &other.data)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Image) {
        axpy(&mut self.data, c, &other.data);
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

/// Two image-shaped components, one per spatial direction.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub nx: usize,
    pub ny: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        VectorField {
            nx,
            ny,
            x: vec![0.0; nx * ny],
            y: vec![0.0; nx * ny],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dot(&self, other: &VectorField) -> f64 {
        dot(&self.x, &other.x) + dot(&self.y, &other.y)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn axpy(&mut self, c: f64, other: &VectorField) {
        axpy(&mut self.x, c, &other.x);
        axpy(&mut self.y, c, &other.y);
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.x.iter_mut().chain(self.y.iter_mut()) {
            *v *= c;
        }
    }

    /// Sum over pixels of the pointwise Euclidean magnitude.
    pub fn l1_of_magnitude(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(&a, &b)| (a * a + b * b).sqrt())
            .sum()
    }

    /// Pointwise projection onto the ball of the given radius.
    pub fn project_ball(&mut self, radius: f64) {
        for k in 0..self.x.len() {
            let m = (self.x[k] * self.x[k] + self.y[k] * self.y[k]).sqrt();
            let scale = radius / radius.max(m);
            self.x[k] *= scale;
            self.y[k] *= scale;
        }
    }
}

/// Symmetric 2x2 tensor per pixel; the off-diagonal entry is stored once.
///
/// Inner products weight `xy` by 2 so that three-component storage is
/// exact under the Frobenius pairing of full symmetric tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub nx: usize,
    pub ny: usize,
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub xy: Vec<f64>,
}

impl SymTensorField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        SymTensorField {
            nx,
            ny,
            xx: vec![0.0; nx * ny],
            yy: vec![0.0; nx * ny],
            xy: vec![0.0; nx * ny],
        }
    }

    pub fn len(&self) -> usize {
        self.xx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xx.is_empty()
    }

    pub fn dot(&self, other: &SymTensorField) -> f64 {
        dot(&self.xx, &other.xx) + dot(&self.yy, &other.yy) + 2.0 * dot(&self.xy, &other.xy)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn axpy(&mut self, c: f64, other: &SymTensorField) {
        axpy(&mut self.xx, c, &other.xx);
        axpy(&mut self.yy, c, &other.yy);
        axpy(&mut self.xy, c, &other.xy);
    }

    pub fn scale(&mut self, c: f64) {
        for v in self
            .xx
            .iter_mut()
            .chain(self.yy.iter_mut())
            .chain(self.xy.iter_mut())
        {
            *v *= c;
        }
    }

    /// Sum over pixels of the Frobenius magnitude (off-diagonal counted twice).
    pub fn l1_of_magnitude(&self) -> f64 {
        (0..self.xx.len()).map(|k| self.magnitude_at(k)).sum()
    }

    #[inline]
    pub fn magnitude_at(&self, k: usize) -> f64 {
        (self.xx[k] * self.xx[k] + self.yy[k] * self.yy[k] + 2.0 * self.xy[k] * self.xy[k]).sqrt()
    }

    pub fn project_ball(&mut self, radius: f64) {
        for k in 0..self.xx.len() {
            let m = self.magnitude_at(k);
            let scale = radius / radius.max(m);
            self.xx[k] *= scale;
            self.yy[k] *= scale;
            self.xy[k] *= scale;
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(dst: &mut [f64], c: f64, src: &[f64]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

/// Relative change `||a - b|| / ||b||` with the 0/0 case defined as 0.
pub(crate) fn relative_change(a: &[f64], b: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}
