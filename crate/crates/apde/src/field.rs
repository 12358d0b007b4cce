//! Square scalar fields on the unit square.
//!
//! A [`Field`] is a `size × size` grid of `f64` values stored row-major.
//! Grids are square with power-of-two side length — the spectral transforms
//! and the super-resolution lattices both rely on that shape. Whether a grid
//! point sits at a cell center (periodic problems) or a vertex (Dirichlet
//! problems, boundary ring included) is a convention of the solver using the
//! field, not of the container.

/// Dense row-major `size × size` scalar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    size: usize,
    data: Vec<f64>,
}

impl Field {
    /// All-zero field. Panics unless `size` is a power of two ≥ 2.
    pub fn zeros(size: usize) -> Self {
        assert!(
            size >= 2 && size.is_power_of_two(),
            "field side must be a power of two >= 2, got {size}"
        );
        Field {
            size,
            data: vec![0.0; size * size],
        }
    }

    /// Wrap an existing row-major buffer of length `size * size`.
    pub fn from_vec(size: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), size * size, "buffer length must be size^2");
        assert!(
            size >= 2 && size.is_power_of_two(),
            "field side must be a power of two >= 2, got {size}"
        );
        Field { size, data }
    }

    /// Build a field by evaluating `f(row, col)` at every grid point.
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Field::zeros(size);
        for y in 0..size {
            for x in 0..size {
                out.data[y * size + x] = f(y, x);
            }
        }
        out
    }

    /// Constant field.
    pub fn constant(size: usize, value: f64) -> Self {
        Field {
            size,
            data: vec![value; size * size],
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.size + col]
    }

    #[inline]
    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        &mut self.data[row * self.size + col]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Mean over all grid points.
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Euclidean norm over all grid points.
    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute value on the grid.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Subtract the mean in place so the field averages to exactly zero.
    pub fn remove_mean(&mut self) {
        let m = self.mean();
        for v in &mut self.data {
            *v -= m;
        }
    }

    /// Apply `f` to every value, returning a new field.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Field {
        Field {
            size: self.size,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `self + scale * other`.
    pub fn add_scaled(&self, other: &Field, scale: f64) -> Field {
        assert_eq!(self.size, other.size, "field sizes must match");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + scale * b)
            .collect();
        Field {
            size: self.size,
            data,
        }
    }

    /// In-place convex step `self ← (1 − c)·self + c·other`.
    ///
    /// `c = 1` copies `other` bit-exactly (including signed zeros), which
    /// the ODE sampler relies on for its final step.
    pub fn blend_toward(&mut self, other: &Field, c: f64) {
        assert_eq!(self.size, other.size, "field sizes must match");
        if c == 1.0 {
            self.data.copy_from_slice(&other.data);
            return;
        }
        let a = 1.0 - c;
        for (v, &o) in self.data.iter_mut().zip(&other.data) {
            *v = a * *v + c * o;
        }
    }

    /// Euclidean distance to another field.
    pub fn l2_distance(&self, other: &Field) -> f64 {
        assert_eq!(self.size, other.size, "field sizes must match");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}
