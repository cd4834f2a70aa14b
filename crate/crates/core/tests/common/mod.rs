//! Reference computations shared by the integration tests. Everything here is
//! written from the definitions directly and avoids the library's own
//! algorithms; only the mesh and value arrays are taken from it.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use tetmodes::mesh::{TetMesh, Vec3};

/// Six times the signed volume of the tetrahedron `abcd`.
pub fn det6(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0]) + u[2] * (v[0] * w[1] - v[1] * w[0])
}

pub fn tet_volume(mesh: &TetMesh, t: usize) -> f64 {
    let [a, b, c, d] = mesh.tets()[t].map(|v| mesh.vertex(v));
    det6(a, b, c, d) / 6.0
}

/// Closed form of the standard primitive's second objective: valleys
/// `|x-1|+|y|` and `0.5 + 0.5(|x-3|+|y|)` at the bottom, only the first at the
/// top, linear in `z` between.
pub fn standard_psi2(p: Vec3) -> f64 {
    let major = (p[0] - 1.0).abs() + p[1].abs();
    let minor = 0.5 + 0.5 * ((p[0] - 3.0).abs() + p[1].abs());
    (1.0 - p[2]) * major.min(minor) + p[2] * major
}

/// `psi` rotated by minus 45 degrees, written out by hand.
pub fn rotate_minus_45(psi: [f64; 2]) -> [f64; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [r * (psi[0] + psi[1]), r * (psi[1] - psi[0])]
}

pub fn dominates(a: [f64; 2], b: [f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Adjacency rebuilt from the tet list.
pub fn adjacency(mesh: &TetMesh) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); mesh.vertex_count()];
    for tet in mesh.tets() {
        for &a in tet {
            for &b in tet {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    adj
}

/// Brute-force mode computation over a full dominance table.
pub struct ModeOracle {
    pub adj: Vec<BTreeSet<usize>>,
    pub local_pareto: Vec<bool>,
    /// Label of the connected component of local Pareto vertices, by the
    /// smallest vertex index in it.
    pub label: Vec<Option<usize>>,
    /// `weak[v][w]`: `f(w) <= f(v)` componentwise.
    weak: Vec<Vec<bool>>,
}

impl ModeOracle {
    pub fn new(mesh: &TetMesh, f: &[[f64; 2]]) -> Self {
        let n = f.len();
        let adj = adjacency(mesh);
        let weak: Vec<Vec<bool>> = (0..n)
            .map(|v| (0..n).map(|w| f[w][0] <= f[v][0] && f[w][1] <= f[v][1]).collect())
            .collect();
        let strict = |v: usize, w: usize| weak[v][w] && !weak[w][v];
        let local_pareto: Vec<bool> = (0..n).map(|v| !adj[v].iter().any(|&w| strict(v, w))).collect();

        let mut label = vec![None; n];
        for s in 0..n {
            if !local_pareto[s] || label[s].is_some() {
                continue;
            }
            let comp = Self::flood(&adj, s, |w| local_pareto[w]);
            let root = *comp.iter().min().unwrap();
            for v in comp {
                label[v] = Some(root);
            }
        }
        Self { adj, local_pareto, label, weak }
    }

    fn flood(adj: &[BTreeSet<usize>], start: usize, allowed: impl Fn(usize) -> bool) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if allowed(w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Everything reachable from `v` by edges that never worsen either objective.
    pub fn reachable(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([v]);
        let mut stack = vec![v];
        while let Some(a) = stack.pop() {
            for &b in &self.adj[a] {
                if self.weak[a][b] && seen.insert(b) {
                    stack.push(b);
                }
            }
        }
        seen
    }

    /// Modes admissible from `v`, as component labels. The admissible local
    /// Pareto vertices are grouped into connected components and each one is
    /// reported by the label of the global component it sits in.
    pub fn modes_of_vertex(&self, v: usize) -> BTreeSet<usize> {
        self.modes_of_seeds(&[v])
    }

    pub fn modes_of_seeds(&self, seeds: &[usize]) -> BTreeSet<usize> {
        let mut admissible = BTreeSet::new();
        for &s in seeds {
            admissible.extend(self.reachable(s));
        }
        let lp: BTreeSet<usize> = admissible.iter().copied().filter(|&w| self.local_pareto[w]).collect();
        let mut out = BTreeSet::new();
        let mut done = BTreeSet::new();
        for &s in &lp {
            if done.contains(&s) {
                continue;
            }
            let comp = Self::flood(&self.adj, s, |w| lp.contains(&w));
            out.insert(self.label[s].unwrap());
            done.extend(comp);
        }
        out
    }

    /// Vertices grouped by their mode set.
    pub fn signatures(&self) -> BTreeMap<BTreeSet<usize>, Vec<usize>> {
        let mut out: BTreeMap<BTreeSet<usize>, Vec<usize>> = BTreeMap::new();
        for v in 0..self.adj.len() {
            out.entry(self.modes_of_vertex(v)).or_default().push(v);
        }
        out
    }
}

/// Vertex dual volumes: a quarter of each incident tet's volume.
pub fn dual_volumes(mesh: &TetMesh) -> Vec<f64> {
    let mut vol = vec![0.0; mesh.vertex_count()];
    for t in 0..mesh.tet_count() {
        let q = tet_volume(mesh, t) / 4.0;
        for &v in &mesh.tets()[t] {
            vol[v] += q;
        }
    }
    vol
}
