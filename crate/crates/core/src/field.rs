use crate::error::{Error, Result};

/// How a stencil reads cells beyond the grid edge.
///
/// `DirichletZero` pads with zeros (homogeneous Dirichlet via a ghost ring),
/// `NeumannZero` replicates the nearest edge cell (zero normal gradient).
/// `Mixed` picks one rule per side for cases like a channel with an outflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    DirichletZero,
    NeumannZero,
    Mixed {
        left: SideRule,
        right: SideRule,
        top: SideRule,
        bottom: SideRule,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideRule {
    DirichletZero,
    NeumannZero,
}

/// A real scalar field on a uniform H x W grid.
///
/// Values are stored row-major; index `(i, j)` is row `i` (the y direction)
/// and column `j` (the x direction). Cell centers sit at
/// `x = (j + 0.5) h`, `y = (i + 0.5) h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    values: Vec<f64>,
    height: usize,
    width: usize,
    spacing: f64,
    boundary: BoundaryKind,
}

impl Field2D {
    pub fn new(height: usize, width: usize, spacing: f64, boundary: BoundaryKind) -> Self {
        Self {
            values: vec![0.0; height * width],
            height,
            width,
            spacing,
            boundary,
        }
    }

    pub fn from_values(
        values: Vec<f64>,
        height: usize,
        width: usize,
        spacing: f64,
        boundary: BoundaryKind,
    ) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::ShapeMismatch(height, width, values.len(), 1));
        }
        Ok(Self {
            values,
            height,
            width,
            spacing,
            boundary,
        })
    }

    /// Builds a field by evaluating `f(i, j)` at every cell.
    pub fn from_fn(
        height: usize,
        width: usize,
        spacing: f64,
        boundary: BoundaryKind,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                values.push(f(i, j));
            }
        }
        Self {
            values,
            height,
            width,
            spacing,
            boundary,
        }
    }

    pub fn zeros_like(other: &Field2D) -> Self {
        Self::new(other.height, other.width, other.spacing, other.boundary)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn set_boundary(&mut self, boundary: BoundaryKind) {
        self.boundary = boundary;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.width + j] = v;
    }

    /// Reads `(i, j)` with out-of-range indices resolved by the boundary rule.
    #[inline]
    pub fn sample_padded(&self, i: isize, j: isize) -> f64 {
        let h = self.height as isize;
        let w = self.width as isize;
        if i >= 0 && i < h && j >= 0 && j < w {
            return self.values[(i as usize) * self.width + j as usize];
        }
        let rule = |side: SideRule| side;
        let (left, right, top, bottom) = match self.boundary {
            BoundaryKind::DirichletZero => (
                SideRule::DirichletZero,
                SideRule::DirichletZero,
                SideRule::DirichletZero,
                SideRule::DirichletZero,
            ),
            BoundaryKind::NeumannZero => (
                SideRule::NeumannZero,
                SideRule::NeumannZero,
                SideRule::NeumannZero,
                SideRule::NeumannZero,
            ),
            BoundaryKind::Mixed {
                left,
                right,
                top,
                bottom,
            } => (rule(left), rule(right), rule(top), rule(bottom)),
        };
        let mut ci = i;
        let mut cj = j;
        if ci < 0 {
            if top == SideRule::DirichletZero {
                return 0.0;
            }
            ci = 0;
        } else if ci >= h {
            if bottom == SideRule::DirichletZero {
                return 0.0;
            }
            ci = h - 1;
        }
        if cj < 0 {
            if left == SideRule::DirichletZero {
                return 0.0;
            }
            cj = 0;
        } else if cj >= w {
            if right == SideRule::DirichletZero {
                return 0.0;
            }
            cj = w - 1;
        }
        self.values[(ci as usize) * self.width + cj as usize]
    }

    /// x coordinate of the cell center in column `j`.
    pub fn x_of(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.spacing
    }

    /// y coordinate of the cell center in row `i`.
    pub fn y_of(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self += scale * other`; shapes must match.
    pub fn axpy(&mut self, scale: f64, other: &Field2D) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ));
        }
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// L2 norm of the difference; shapes must match.
    pub fn l2_distance(&self, other: &Field2D) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn max_abs_diff(&self, other: &Field2D) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}
