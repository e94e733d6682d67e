//! Problem instances: the measurement graph, candidate solutions, and the
//! quantities the solvers build from them.

use std::collections::{HashSet, VecDeque};
use std::ops::Index;

use nalgebra::{DMatrix, Matrix3};

use crate::error::{Error, Result};
use crate::so3::{LinearCost, Rotation};

/// One relative-rotation measurement `R_ij ≈ R_iᵀ R_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub i: usize,
    pub j: usize,
    pub rel: Rotation,
}

#[derive(Clone, Copy, Debug)]
struct Incidence {
    neighbor: usize,
    edge: usize,
    /// The edge is stored as `(self, neighbor)`.
    forward: bool,
}

/// A connected measurement graph on `n` vertices.
///
/// Each unordered pair carries at most one measurement. The stored
/// orientation is kept; the reverse direction is the transpose.
#[derive(Clone, Debug)]
pub struct RaGraph {
    n: usize,
    edges: Vec<Measurement>,
    adjacency: Vec<Vec<Incidence>>,
}

impl PartialEq for RaGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl RaGraph {
    pub fn new(n: usize, edges: Vec<Measurement>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph must have at least one vertex"));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            if e.i >= n || e.j >= n {
                return Err(Error::invalid(format!(
                    "edge {k} ({}, {}) references a vertex outside 0..{n}",
                    e.i, e.j
                )));
            }
            if e.i == e.j {
                return Err(Error::invalid(format!(
                    "edge {k} is a self-loop on {}",
                    e.i
                )));
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::invalid(format!(
                    "duplicate measurement for pair ({}, {})",
                    e.i, e.j
                )));
            }
            adjacency[e.i].push(Incidence {
                neighbor: e.j,
                edge: k,
                forward: true,
            });
            adjacency[e.j].push(Incidence {
                neighbor: e.i,
                edge: k,
                forward: false,
            });
        }
        for list in &mut adjacency {
            list.sort_by_key(|inc| inc.neighbor);
        }
        let graph = RaGraph {
            n,
            edges,
            adjacency,
        };
        if let Some(v) = graph.first_unreachable() {
            return Err(Error::Disconnected(v));
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Measurement] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Neighbors of `v` in ascending order, each with `R̃_vq` (the stored
    /// measurement, or its transpose for edges stored as `(q, v)`).
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, Matrix3<f64>)> + '_ {
        self.adjacency[v].iter().map(move |inc| {
            let rel = self.edges[inc.edge].rel.matrix();
            let block = if inc.forward { *rel } else { rel.transpose() };
            (inc.neighbor, block)
        })
    }

    fn first_unreachable(&self) -> Option<usize> {
        let (parents, _) = self.bfs();
        parents.iter().position(|p| p.is_none())
    }

    /// BFS from vertex 0 visiting neighbors in ascending index order.
    /// Returns, per vertex, `(parent, index into the parent's adjacency)`
    /// (`None` for the root and unreachable vertices), plus the visit order.
    fn bfs(&self) -> (Vec<Option<(usize, usize)>>, Vec<usize>) {
        let mut parent = vec![None; self.n];
        let mut visited = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        visited[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for (k, inc) in self.adjacency[v].iter().enumerate() {
                if !visited[inc.neighbor] {
                    visited[inc.neighbor] = true;
                    parent[inc.neighbor] = Some((v, k));
                    queue.push_back(inc.neighbor);
                }
            }
        }
        // The root is reachable by definition.
        if let Some(root) = parent.first_mut() {
            if root.is_none() {
                *root = Some((0, usize::MAX));
            }
        }
        (parent, order)
    }
}

/// Candidate solution `[R_1 … R_n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationStack(Vec<Rotation>);

impl RotationStack {
    pub fn new(rotations: Vec<Rotation>) -> Self {
        RotationStack(rotations)
    }

    pub fn identity(n: usize) -> Self {
        RotationStack(vec![Rotation::identity(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rotation> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Rotation] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Rotation] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<Rotation> {
        self.0
    }

    /// Left-multiplies every block by `g`. The objective is invariant under this.
    pub fn left_multiplied(&self, g: &Rotation) -> RotationStack {
        RotationStack(self.0.iter().map(|r| g * r).collect())
    }

    /// The 3×3n matrix `[R_1 … R_n]`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(3, 3 * self.len());
        for (i, r) in self.0.iter().enumerate() {
            m.fixed_view_mut::<3, 3>(0, 3 * i).copy_from(r.matrix());
        }
        m
    }

    /// `‖self − other‖_F` over all blocks.
    pub fn distance(&self, other: &RotationStack) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a.matrix() - b.matrix()).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

impl Index<usize> for RotationStack {
    type Output = Rotation;

    fn index(&self, i: usize) -> &Rotation {
        &self.0[i]
    }
}

impl FromIterator<Rotation> for RotationStack {
    fn from_iter<T: IntoIterator<Item = Rotation>>(iter: T) -> Self {
        RotationStack(iter.into_iter().collect())
    }
}

/// A dense 3n×3n matrix viewed as an n×n grid of 3×3 blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    n: usize,
    data: DMatrix<f64>,
}

impl BlockMatrix {
    pub fn zeros(n: usize) -> Self {
        BlockMatrix {
            n,
            data: DMatrix::zeros(3 * n, 3 * n),
        }
    }

    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() || !data.nrows().is_multiple_of(3) {
            return Err(Error::invalid(format!(
                "block matrix must be 3n×3n, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(BlockMatrix {
            n: data.nrows() / 3,
            data,
        })
    }

    pub fn block_count(&self) -> usize {
        self.n
    }

    pub fn block(&self, i: usize, j: usize) -> Matrix3<f64> {
        self.data.fixed_view::<3, 3>(3 * i, 3 * j).into_owned()
    }

    pub fn set_block(&mut self, i: usize, j: usize, block: &Matrix3<f64>) {
        self.data
            .fixed_view_mut::<3, 3>(3 * i, 3 * j)
            .copy_from(block);
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// `‖M − Mᵀ‖_F`.
    pub fn asymmetry(&self) -> f64 {
        (&self.data - self.data.transpose()).norm()
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrized(&self) -> BlockMatrix {
        BlockMatrix {
            n: self.n,
            data: (&self.data + self.data.transpose()) * 0.5,
        }
    }
}

fn check_len(g: &RaGraph, r: &RotationStack) -> Result<()> {
    if r.len() != g.vertex_count() {
        return Err(Error::invalid(format!(
            "stack has {} rotations but graph has {} vertices",
            r.len(),
            g.vertex_count()
        )));
    }
    Ok(())
}

/// `Σ_{(i,j)∈E} ‖R_i R_ij − R_j‖²_F`.
pub fn objective(g: &RaGraph, r: &RotationStack) -> Result<f64> {
    check_len(g, r)?;
    Ok(g.edges
        .iter()
        .map(|e| (r[e.i].matrix() * e.rel.matrix() - r[e.j].matrix()).norm_squared())
        .sum())
}

/// `Σ_{(i,j)∈E} tr(R_i R_ij R_jᵀ)`; the objective equals `6|E| − 2·this`.
pub fn trace_objective_sum(g: &RaGraph, r: &RotationStack) -> Result<f64> {
    check_len(g, r)?;
    Ok(g.edges
        .iter()
        .map(|e| (r[e.i].matrix() * e.rel.matrix() * r[e.j].matrix().transpose()).trace())
        .sum())
}

/// `Σ_q R̃_lq R_qᵀ` over the neighbors of `l`.
pub(crate) fn neighbor_sum(g: &RaGraph, r: &RotationStack, l: usize) -> Matrix3<f64> {
    g.neighbors(l).fold(Matrix3::zeros(), |acc, (q, block)| {
        acc + block * r[q].matrix().transpose()
    })
}

/// Cost matrix of the single-block subproblem for vertex `l`:
/// `A_l = −Σ_{(l,q)∈E} R_lq R_qᵀ − Σ_{(p,l)∈E} R_plᵀ R_pᵀ`, so that the part
/// of `−Σ tr(R_i R_ij R_jᵀ)` depending on `R_l` is `tr(A_l R_l)`.
pub fn assemble_cost_block(g: &RaGraph, r: &RotationStack, l: usize) -> Result<LinearCost> {
    check_len(g, r)?;
    if l >= g.vertex_count() {
        return Err(Error::invalid(format!(
            "vertex {l} out of range 0..{}",
            g.vertex_count()
        )));
    }
    if g.degree(l) == 0 {
        return Err(Error::DegenerateVertex(l));
    }
    LinearCost::new(-neighbor_sum(g, r, l))
}

/// The symmetric measurement matrix `R̃`: block `(i,j) = R_ij`, block
/// `(j,i) = R_ijᵀ`, zero elsewhere.
pub fn assemble_r_tilde(g: &RaGraph) -> BlockMatrix {
    let mut m = BlockMatrix::zeros(g.vertex_count());
    for e in &g.edges {
        m.set_block(e.i, e.j, e.rel.matrix());
        m.set_block(e.j, e.i, &e.rel.matrix().transpose());
    }
    m
}

/// Chains measurements along BFS shortest paths from vertex 0, with
/// `R̂_0 = I`. Exact (objective zero) for noiseless measurements.
pub fn spanning_tree_init(g: &RaGraph) -> Result<RotationStack> {
    let (parents, order) = g.bfs();
    let mut out: Vec<Option<Rotation>> = vec![None; g.n];
    out[0] = Some(Rotation::identity());
    for &v in order.iter().skip(1) {
        let (p, k) = parents[v].expect("visited vertex has a parent");
        let inc = g.adjacency[p][k];
        let rel = g.edges[inc.edge].rel;
        let step = if inc.forward { rel } else { rel.transpose() };
        let parent_rot = out[p].expect("BFS order resolves parents first");
        out[v] = Some(parent_rot * step);
    }
    out.into_iter()
        .enumerate()
        .map(|(v, r)| r.ok_or(Error::Disconnected(v)))
        .collect::<Result<Vec<_>>>()
        .map(RotationStack::new)
}
