//! Structured P1 triangulation of the unit square `(-1/2, 1/2)²` and the
//! finite element operators built on it.
//!
//! Nodes are numbered row-major (`x` fastest). Each grid square is split
//! along its bottom-left to top-right diagonal, so every element is a right
//! isosceles triangle with legs of length `h`. The Gauss–Seidel sweep in
//! [`crate::solver`] visits nodes in this order.

use crate::error::{Error, Result};

/// Uniform triangulation of `(-1/2, 1/2)²` with `n` cells per side.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub n_cells_per_side: usize,
    pub h: f64,
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub elements: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Nodes per side of the grid, `n + 1`.
    pub fn nodes_per_side(&self) -> usize {
        self.n_cells_per_side + 1
    }

    /// Lattice position `(ix, iy)` of a node.
    pub fn grid_index(&self, node: usize) -> (usize, usize) {
        let side = self.nodes_per_side();
        (node % side, node / side)
    }

    pub fn node_at(&self, ix: usize, iy: usize) -> usize {
        iy * self.nodes_per_side() + ix
    }

    pub fn element_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.elements[e];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    /// Sum of element areas; equals `|Ω| = 1` up to rounding.
    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.element_area(e)).sum()
    }

    fn lattice(&self, node: usize) -> [i64; 2] {
        let (ix, iy) = self.grid_index(node);
        [ix as i64, iy as i64]
    }
}

/// Uniform mesh with `n` cells per side. Requires `n >= 2`.
pub fn build_mesh(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::InvalidMesh(format!(
            "need at least 2 cells per side, got {n}"
        )));
    }
    let side = n + 1;
    let h = 1.0 / n as f64;
    let mut nodes = Vec::with_capacity(side * side);
    for iy in 0..side {
        for ix in 0..side {
            nodes.push([
                -0.5 + ix as f64 / n as f64,
                -0.5 + iy as f64 / n as f64,
            ]);
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for iy in 0..n {
        for ix in 0..n {
            let bl = iy * side + ix;
            let br = bl + 1;
            let tl = bl + side;
            let tr = tl + 1;
            elements.push([bl, br, tr]);
            elements.push([bl, tr, tl]);
        }
    }
    Ok(Mesh {
        n_cells_per_side: n,
        h,
        nodes,
        elements,
    })
}

/// Square sparse matrix in compressed sparse row form. Column indices are
/// sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Assembles from `(row, col, value)` triplets, summing duplicates in
    /// input order. Off-diagonal entries that sum to exactly zero are dropped;
    /// diagonal entries are always kept.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::DimensionError {
                expected: dim,
                got: r.max(c) + 1,
            });
        }
        // stable: duplicates keep their input order, so sums are reproducible
        triplets.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; dim + 1];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut iter = triplets.into_iter().peekable();
        for row in 0..dim {
            while let Some(&(r, c, _)) = iter.peek() {
                if r != row {
                    break;
                }
                let mut sum = 0.0;
                while let Some(&(r2, c2, v)) = iter.peek() {
                    if r2 != r || c2 != c {
                        break;
                    }
                    sum += v;
                    iter.next();
                }
                if sum != 0.0 || r == c {
                    col_indices.push(c);
                    values.push(sum);
                }
            }
            row_offsets[row + 1] = col_indices.len();
        }
        Ok(SparseMatrix {
            dim,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionError {
                    expected: dim,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 || i == j {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(dim, triplets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, a)| a * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| x[i] * self.row(i).map(|(j, a)| a * x[j]).sum::<f64>())
            .sum()
    }

    /// True if every stored entry has a matching transpose entry within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, a)| (a - self.get(j, i)).abs() <= tol))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, a) in self.row(i) {
                row[j] = a;
            }
        }
        out
    }
}

/// Element stiffness of a P1 triangle given its vertices in lattice units.
///
/// The mesh is a scaled integer lattice and P1 stiffness is scale-free in
/// 2D, so the entries are exact small dyadic rationals.
fn local_stiffness(p: [[i64; 2]; 3]) -> [[f64; 3]; 3] {
    let mut b = [0i64; 3];
    let mut c = [0i64; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = p[j][1] - p[k][1];
        c[i] = p[k][0] - p[j][0];
    }
    let twice_area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) as f64 / (2 * twice_area) as f64;
        }
    }
    k
}

/// `A_ij = ∫ ∇χ_i · ∇χ_j` for the P1 nodal basis.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseMatrix> {
    let mut triplets = Vec::with_capacity(9 * mesh.n_elements());
    for tri in &mesh.elements {
        let k = local_stiffness([mesh.lattice(tri[0]), mesh.lattice(tri[1]), mesh.lattice(tri[2])]);
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((tri[a], tri[b], k[a][b]));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_nodes(), triplets)
}

/// Diagonal of the lumped mass matrix: each element gives a third of its
/// area to each of its vertices.
///
/// Areas are accumulated exactly on the integer lattice and scaled once, so
/// every entry is a correctly rounded multiple of `h²/6`.
pub fn assemble_lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut twice_area = vec![0i64; mesh.n_nodes()];
    for tri in &mesh.elements {
        let [a, b, c] = tri.map(|v| mesh.lattice(v));
        let twice = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
        for &v in tri {
            twice_area[v] += twice;
        }
    }
    let n = mesh.n_cells_per_side as f64;
    twice_area.into_iter().map(|t| t as f64 / (6.0 * n * n)).collect()
}

/// `A = A_D - A_L - A_Lᵀ` with `A_L` strictly lower triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSplitting {
    pub a_diag: Vec<f64>,
    pub a_lower: SparseMatrix,
}

impl MatrixSplitting {
    /// `A_D - A_L - A_Lᵀ` as a sparse matrix.
    pub fn reconstruct(&self) -> SparseMatrix {
        let dim = self.a_diag.len();
        let mut triplets: Vec<_> = self.a_diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        for i in 0..dim {
            for (j, l) in self.a_lower.row(i) {
                triplets.push((i, j, -l));
                triplets.push((j, i, -l));
            }
        }
        SparseMatrix::from_triplets(dim, triplets).expect("indices come from a valid matrix")
    }
}

pub fn split_stiffness(a: &SparseMatrix) -> Result<MatrixSplitting> {
    let a_diag = a.diagonal();
    if let Some((row, &value)) = a_diag.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(Error::DegenerateDiagonal { row, value });
    }
    let mut triplets = Vec::new();
    for i in 0..a.dim() {
        for (j, v) in a.row(i) {
            if j < i {
                triplets.push((i, j, -v));
            }
        }
    }
    let a_lower = SparseMatrix::from_triplets(a.dim(), triplets)?;
    Ok(MatrixSplitting { a_diag, a_lower })
}
