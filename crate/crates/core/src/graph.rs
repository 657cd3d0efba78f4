//! Spanning-tree measures on finite graphs. The uniform (or
//! conductance-weighted) spanning tree is the determinantal measure of the
//! projection onto the star space, the row space of the signed incidence
//! matrix.

use rand::Rng;

use crate::dpm::{ProjectionSampler, SubsetDistribution, ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::kernel::{
    projection_from_basis, validate_contraction, GroundSet, HermitianKernel, ProjectionKernel, DEFAULT_SYMMETRY_TOL,
    DEFAULT_TOL,
};
use crate::linalg::{self, c, orthonormalize, projector, CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub conductance: f64,
}

/// Finite multigraph with oriented edges. Orientation is fixed by input order
/// and does not affect any measure built here.
#[derive(Clone, Debug)]
pub struct Graph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
}

impl Graph {
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        for (i, e) in edges.iter().enumerate() {
            for v in [e.tail, e.head] {
                if v >= vertices.len() {
                    return Err(Error::IndexOutOfRange { index: v, limit: vertices.len() });
                }
            }
            if e.tail == e.head {
                return Err(Error::SelfLoop(i));
            }
            if !(e.conductance > 0.0) || !e.conductance.is_finite() {
                return Err(Error::InvalidInput(format!("edge {i} has conductance {}", e.conductance)));
            }
        }
        Ok(Graph { vertices, edges })
    }

    /// Vertices labelled `1..=n`, unit conductances, 0-based endpoints.
    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let vertices = (1..=n).map(|i| i.to_string()).collect();
        let edges = edges.iter().map(|&(tail, head)| Edge { tail, head, conductance: 1.0 }).collect();
        Graph::new(vertices, edges)
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph::unweighted(n, &edges).expect("complete graph is valid")
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::unweighted(n, &edges).expect("cycle is valid")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::unweighted(n, &edges).expect("path is valid")
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|e| e.conductance == 1.0)
    }

    /// Edge labels `0..m`, matching the edge indices used in tree output.
    pub fn edge_ground(&self) -> GroundSet {
        GroundSet::new((0..self.edges.len()).map(|i| i.to_string())).expect("edge indices are distinct")
    }

    /// The same graph with every edge whose bit is set in `flip` reversed.
    pub fn reoriented(&self, flip: impl Fn(usize) -> bool) -> Graph {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| if flip(i) { Edge { tail: e.head, head: e.tail, ..*e } } else { *e })
            .collect();
        Graph { vertices: self.vertices.clone(), edges }
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.num_vertices());
        for e in &self.edges {
            uf.union(e.tail, e.head);
        }
        uf.count()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    fn require_connected(&self) -> Result<()> {
        if self.num_vertices() == 0 || !self.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(())
    }

    /// Whether the edge set is acyclic, spans every vertex and has `|V| - 1` edges.
    pub fn is_spanning_tree(&self, edge_set: &[usize]) -> bool {
        if edge_set.len() + 1 != self.num_vertices() {
            return false;
        }
        let mut uf = UnionFind::new(self.num_vertices());
        edge_set.iter().all(|&i| i < self.edges.len() && uf.union(self.edges[i].tail, self.edges[i].head))
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), sets: n }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.sets -= 1;
        true
    }

    pub(crate) fn count(&self) -> usize {
        self.sets
    }
}

/// Star vectors as the rows of a `|V| x |E|` matrix: `+sqrt(c)` at the head,
/// `-sqrt(c)` at the tail.
#[derive(Clone, Debug)]
pub struct StarSpace {
    pub matrix: nalgebra::DMatrix<f64>,
}

impl StarSpace {
    pub fn rank(&self) -> usize {
        self.matrix.rank(1e-10)
    }

    pub fn star(&self, x: usize) -> Vec<C64> {
        self.matrix.row(x).iter().map(|&v| c(v)).collect()
    }
}

pub fn star_space(g: &Graph) -> Result<StarSpace> {
    let mut m = nalgebra::DMatrix::zeros(g.num_vertices(), g.num_edges());
    for (i, e) in g.edges.iter().enumerate() {
        if e.tail == e.head {
            return Err(Error::SelfLoop(i));
        }
        let w = e.conductance.sqrt();
        m[(e.head, i)] += w;
        m[(e.tail, i)] -= w;
    }
    Ok(StarSpace { matrix: m })
}

fn star_projection(g: &Graph) -> Result<ProjectionKernel> {
    if g.num_edges() == 0 {
        return Err(Error::InvalidInput("graph has no edges".into()));
    }
    let stars = star_space(g)?;
    let rows: Vec<Vec<C64>> = (0..g.num_vertices()).map(|x| stars.star(x)).collect();
    projection_from_basis(g.edge_ground(), &rows)
}

/// Transfer-current matrix: the projection onto the star space. Its
/// determinantal measure is the (weighted) uniform spanning tree.
pub fn transfer_current_kernel(g: &Graph) -> Result<ProjectionKernel> {
    g.require_connected()?;
    star_projection(g)
}

/// Weighted matrix-tree count with vertex `x0` deleted.
pub fn spanning_tree_count_deleting(g: &Graph, x0: usize) -> Result<f64> {
    g.require_connected()?;
    let n = g.num_vertices();
    if x0 >= n {
        return Err(Error::IndexOutOfRange { index: x0, limit: n });
    }
    let keep: Vec<usize> = (0..n).filter(|&v| v != x0).collect();
    let stars = star_space(g)?;
    let gram = &stars.matrix * stars.matrix.transpose();
    let reduced = CMatrix::from_fn(keep.len(), keep.len(), |i, j| c(gram[(keep[i], keep[j])]));
    Ok(linalg::det_lu(&reduced).re)
}

/// Number of spanning trees (total tree weight with conductances), deleting
/// the first vertex. Rounded to an integer for unit conductances.
pub fn spanning_tree_count(g: &Graph) -> Result<f64> {
    let count = spanning_tree_count_deleting(g, 0)?;
    Ok(if g.is_unweighted() { count.round() } else { count })
}

/// Reusable spanning-tree sampler over the transfer-current kernel.
#[derive(Clone, Debug)]
pub struct UstSampler {
    sampler: ProjectionSampler,
}

impl UstSampler {
    pub fn new(g: &Graph) -> Result<Self> {
        Ok(UstSampler { sampler: ProjectionSampler::new(&transfer_current_kernel(g)?) })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        self.sampler.sample(rng)
    }
}

/// One uniform spanning tree as sorted edge indices.
pub fn sample_ust<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Result<Vec<usize>> {
    UstSampler::new(g)?.sample(rng)
}

/// Independent spanning-tree sampler by loop-erased random walks (Wilson's
/// algorithm), rooted at the first vertex.
pub fn random_walk_tree_oracle<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Result<Vec<usize>> {
    g.require_connected()?;
    let n = g.num_vertices();
    let mut adj: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n];
    for (i, e) in g.edges.iter().enumerate() {
        adj[e.tail].push((e.head, i, e.conductance));
        adj[e.head].push((e.tail, i, e.conductance));
    }
    let totals: Vec<f64> = adj.iter().map(|a| a.iter().map(|t| t.2).sum()).collect();
    let mut in_tree = vec![false; n];
    let mut next = vec![(0usize, 0usize); n];
    in_tree[0] = true;
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    for start in 0..n {
        let mut u = start;
        while !in_tree[u] {
            let mut target = rng.random::<f64>() * totals[u];
            let mut step = *adj[u].last().expect("connected graph has no isolated vertex");
            for &t in &adj[u] {
                if target < t.2 {
                    step = t;
                    break;
                }
                target -= t.2;
            }
            next[u] = (step.0, step.1);
            u = step.0;
        }
        u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            tree.push(next[u].1);
            u = next[u].0;
        }
    }
    tree.sort_unstable();
    Ok(tree)
}

/// Every spanning tree as an edge bitmask, with its weight `Π c_e`.
pub fn enumerate_spanning_trees(g: &Graph) -> Result<Vec<(u32, f64)>> {
    if g.num_edges() > 24 {
        return Err(Error::GroundSetTooLarge { size: g.num_edges(), cap: 24 });
    }
    let need = g.num_vertices().saturating_sub(1) as u32;
    let mut trees = Vec::new();
    for mask in 0..1u32 << g.num_edges() {
        if mask.count_ones() != need {
            continue;
        }
        let set = crate::dpm::mask_to_indices(mask);
        if g.is_spanning_tree(&set) {
            trees.push((mask, set.iter().map(|&i| g.edges[i].conductance).product()));
        }
    }
    Ok(trees)
}

/// Spanning-tree law computed by brute-force enumeration, independent of
/// the determinantal machinery.
pub fn ust_distribution(g: &Graph) -> Result<SubsetDistribution> {
    g.require_connected()?;
    if g.num_edges() > ENUMERATION_CAP {
        return Err(Error::GroundSetTooLarge { size: g.num_edges(), cap: ENUMERATION_CAP });
    }
    let trees = enumerate_spanning_trees(g)?;
    let total: f64 = trees.iter().map(|t| t.1).sum();
    let mut probs = vec![0.0; 1 << g.num_edges()];
    for (mask, w) in trees {
        probs[mask as usize] = w / total;
    }
    SubsetDistribution::new(g.edge_ground(), probs)
}

/// Signed fundamental cycles of a spanning forest, entries `±1/sqrt(c)` so
/// that each is orthogonal to every star.
pub fn cycle_basis(g: &Graph) -> Vec<Vec<C64>> {
    let n = g.num_vertices();
    let m = g.num_edges();
    let mut uf = UnionFind::new(n);
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut chords = Vec::new();
    for (i, e) in g.edges.iter().enumerate() {
        if uf.union(e.tail, e.head) {
            adj[e.tail].push((e.head, i));
            adj[e.head].push((e.tail, i));
        } else {
            chords.push(i);
        }
    }
    chords
        .into_iter()
        .map(|ch| {
            let e = g.edges[ch];
            let mut z = vec![c(0.0); m];
            z[ch] = c(1.0 / e.conductance.sqrt());
            // Cross the chord tail -> head, then return through the forest.
            for (u, edge) in forest_path(&adj, e.head, e.tail) {
                let sign = if g.edges[edge].tail == u { 1.0 } else { -1.0 };
                z[edge] = c(sign / g.edges[edge].conductance.sqrt());
            }
            z
        })
        .collect()
}

/// Forest path from `from` to `to` as `(departure vertex, edge)` steps.
fn forest_path(adj: &[Vec<(usize, usize)>], from: usize, to: usize) -> Vec<(usize, usize)> {
    let n = adj.len();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        if u == to {
            break;
        }
        for &(v, e) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                prev[v] = Some((u, e));
                stack.push(v);
            }
        }
    }
    let mut path = Vec::new();
    let mut v = to;
    while let Some((u, e)) = prev[v] {
        path.push((u, e));
        v = u;
    }
    path.reverse();
    path
}

/// Wired and free spanning-forest kernels: the projection onto the star
/// space and the complement of the projection onto the cycle space.
pub fn forest_kernels(g: &Graph) -> Result<(ProjectionKernel, ProjectionKernel)> {
    let wired = star_projection(g)?;
    let m = g.num_edges();
    let cycles = orthonormalize(&cycle_basis(g), crate::kernel::RANK_DROP_TOL);
    let pc = projector(&cycles, m);
    let free = CMatrix::from_fn(m, m, |i, j| {
        let sym = (pc[(i, j)] + pc[(j, i)].conj()) * 0.5;
        if i == j {
            c(1.0) - sym
        } else {
            -sym
        }
    });
    let free = ProjectionKernel::certify(validate_contraction(
        HermitianKernel::new(g.edge_ground(), free, DEFAULT_SYMMETRY_TOL)?,
        DEFAULT_TOL,
    )?)?;
    Ok((wired, free))
}

/// All connected simple graphs on `n` labelled vertices with at most
/// `max_edges` edges.
pub fn connected_graphs(n: usize, max_edges: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0..1u32 << pairs.len())
        .filter(|m| (m.count_ones() as usize) <= max_edges)
        .filter_map(|mask| {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
            let g = Graph::unweighted(n, &edges).ok()?;
            (g.num_edges() > 0 && g.is_connected()).then_some(g)
        })
        .collect()
}
