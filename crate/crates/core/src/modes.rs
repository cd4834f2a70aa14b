//! Modes of a bi-objective PL problem on the mesh vertex graph.
//!
//! Minimization throughout. A vertex is a local Pareto vertex when no
//! neighbour dominates it. The admissible set of a point is everything
//! reachable along mesh edges on which neither objective ever gets worse. A
//! mode is a connected component of the local Pareto vertices; the mode set of
//! a point holds every mode the admissible set touches.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::mesh::{MeshError, Vec3};
use crate::nesting::Problem;

/// Which edges a descent may follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DescentRule {
    /// `f(w) <= f(v)` componentwise; plateaus may be crossed.
    #[default]
    NonWorsening,
    /// `f(w)` dominates `f(v)`.
    Strict,
}

impl DescentRule {
    pub fn allows(self, from: [f64; 2], to: [f64; 2]) -> bool {
        match self {
            DescentRule::NonWorsening => weakly_dominates(to, from),
            DescentRule::Strict => dominates(to, from),
        }
    }
}

/// `a <= b` componentwise.
pub fn weakly_dominates(a: [f64; 2], b: [f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1]
}

/// `a <= b` componentwise with at least one strict inequality.
pub fn dominates(a: [f64; 2], b: [f64; 2]) -> bool {
    weakly_dominates(a, b) && (a[0] < b[0] || a[1] < b[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId {
    pub component: usize,
    /// Lowest vertex index in the component.
    pub representative: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub query: Vec3,
    /// Sorted by component.
    pub modes: Vec<ModeId>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn components(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.component).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub modes: Vec<ModeId>,
    pub vertex_count: usize,
    /// Sum of the member vertices' dual volumes.
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeHierarchy {
    pub components: Vec<ModeId>,
    /// Distinct mode sets, numbered by first occurrence in vertex order.
    pub signatures: Vec<Signature>,
    pub vertex_signature: Vec<usize>,
    /// Covering pairs `(smaller, larger)` of strict inclusion.
    pub edges: Vec<(usize, usize)>,
}

impl ModeHierarchy {
    /// Strict inclusion of signature `a` in signature `b`.
    pub fn includes(&self, a: usize, b: usize) -> bool {
        let (sa, sb) = (&self.signatures[a].modes, &self.signatures[b].modes);
        sa.len() < sb.len() && sa.iter().all(|m| sb.binary_search(m).is_ok())
    }

    /// Number of signatures on the longest strict inclusion chain.
    pub fn depth(&self) -> usize {
        let mut order: Vec<usize> = (0..self.signatures.len()).collect();
        order.sort_by_key(|&s| self.signatures[s].modes.len());
        let mut chain = vec![1usize; self.signatures.len()];
        for (i, &b) in order.iter().enumerate() {
            for &a in &order[..i] {
                if self.includes(a, b) {
                    chain[b] = chain[b].max(chain[a] + 1);
                }
            }
        }
        chain.into_iter().max().unwrap_or(0)
    }

    pub fn total_volume(&self) -> f64 {
        self.signatures.iter().map(|s| s.volume).sum()
    }

    /// Signature whose mode set is exactly `components`, if present.
    pub fn find(&self, components: &[usize]) -> Option<usize> {
        self.signatures
            .iter()
            .position(|s| s.modes.iter().map(|m| m.component).eq(components.iter().copied()))
    }
}

/// Precomputed adjacency, local Pareto flags and components for one problem.
#[derive(Debug, Clone)]
pub struct ModeAnalysis<'a> {
    problem: &'a Problem,
    rule: DescentRule,
    adjacency: Vec<Vec<usize>>,
    local_pareto: Vec<bool>,
    /// Component of each local Pareto vertex.
    component_of: Vec<Option<usize>>,
    components: Vec<Vec<usize>>,
}

impl<'a> ModeAnalysis<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        Self::with_rule(problem, DescentRule::default())
    }

    pub fn with_rule(problem: &'a Problem, rule: DescentRule) -> Self {
        let adjacency = problem.mesh.vertex_adjacency();
        let f = problem.objectives.values();
        let local_pareto: Vec<bool> = (0..f.len())
            .map(|v| !adjacency[v].iter().any(|&w| dominates(f[w], f[v])))
            .collect();

        let mut component_of = vec![None; f.len()];
        let mut components = Vec::new();
        for start in 0..f.len() {
            if !local_pareto[start] || component_of[start].is_some() {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            component_of[start] = Some(id);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adjacency[v] {
                    if local_pareto[w] && component_of[w].is_none() {
                        component_of[w] = Some(id);
                        members.push(w);
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }

        Self { problem, rule, adjacency, local_pareto, component_of, components }
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn is_local_pareto(&self, v: usize) -> bool {
        self.local_pareto[v]
    }

    pub fn local_pareto_vertices(&self) -> Vec<usize> {
        (0..self.local_pareto.len()).filter(|&v| self.local_pareto[v]).collect()
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_members(&self, c: usize) -> &[usize] {
        &self.components[c]
    }

    pub fn mode_id(&self, c: usize) -> ModeId {
        ModeId { component: c, representative: self.components[c][0] }
    }

    /// Component containing local Pareto vertex `v`.
    pub fn component_of(&self, v: usize) -> Option<usize> {
        self.component_of[v]
    }

    /// Vertices carrying positive barycentric weight at `x`.
    pub fn seeds(&self, x: Vec3) -> Result<Vec<usize>, MeshError> {
        let bary = self.problem.mesh.locate(x)?;
        let tet = self.problem.mesh.tets()[bary.tet];
        let mut seeds: Vec<usize> = bary.support().map(|i| tet[i]).collect();
        seeds.sort_unstable();
        Ok(seeds)
    }

    /// Closure of `seeds` under non-worsening (or strict) edge moves.
    pub fn closure(&self, seeds: &[usize]) -> Vec<usize> {
        let f = self.problem.objectives.values();
        let mut seen = vec![false; f.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in seeds {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !seen[w] && self.rule.allows(f[v], f[w]) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        (0..f.len()).filter(|&v| seen[v]).collect()
    }

    pub fn admissible_vertices(&self, x: Vec3) -> Result<Vec<usize>, MeshError> {
        Ok(self.closure(&self.seeds(x)?))
    }

    fn modes_of(&self, vertices: &[usize]) -> Vec<ModeId> {
        let comps: BTreeSet<usize> = vertices.iter().filter_map(|&v| self.component_of[v]).collect();
        comps.into_iter().map(|c| self.mode_id(c)).collect()
    }

    pub fn mode_set(&self, x: Vec3) -> Result<ModeSet, MeshError> {
        let admissible = self.admissible_vertices(x)?;
        Ok(ModeSet { query: x, modes: self.modes_of(&admissible) })
    }

    /// Mode sets of every vertex, grouped into signatures with volumes and
    /// inclusion edges.
    ///
    /// Vertices joined by equal-valued edges share a mode set; the rest of the
    /// descent graph is acyclic and is swept in increasing objective order.
    pub fn mode_regions(&self) -> ModeHierarchy {
        let f = self.problem.objectives.values();
        let n = f.len();

        let mut uf = UnionFind::new(n);
        if self.rule == DescentRule::NonWorsening {
            for v in 0..n {
                for &w in &self.adjacency[v] {
                    if w > v && f[w] == f[v] {
                        uf.union(v, w);
                    }
                }
            }
        }
        let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
        for v in 0..n {
            members.entry(uf.find(v)).or_default().push(v);
        }
        let mut classes: Vec<usize> = members.keys().copied().collect();
        classes.sort_by(|&a, &b| {
            f[a][0].total_cmp(&f[b][0]).then(f[a][1].total_cmp(&f[b][1])).then(a.cmp(&b))
        });

        let mut reach: HashMap<usize, Vec<usize>> = HashMap::with_capacity(classes.len());
        for &c in &classes {
            let mut set: BTreeSet<usize> = BTreeSet::new();
            for &v in &members[&c] {
                if let Some(comp) = self.component_of[v] {
                    set.insert(comp);
                }
                for &w in &self.adjacency[v] {
                    let cw = uf.find(w);
                    if cw != c && self.rule.allows(f[v], f[w]) {
                        set.extend(reach[&cw].iter().copied());
                    }
                }
            }
            reach.insert(c, set.into_iter().collect());
        }

        let dual = self.problem.mesh.dual_volumes();
        let mut index: HashMap<&[usize], usize> = HashMap::new();
        let mut signatures: Vec<Signature> = Vec::new();
        let mut vertex_signature = Vec::with_capacity(n);
        for v in 0..n {
            let comps = reach[&uf.find(v)].as_slice();
            let s = *index.entry(comps).or_insert_with(|| {
                signatures.push(Signature {
                    modes: comps.iter().map(|&c| self.mode_id(c)).collect(),
                    vertex_count: 0,
                    volume: 0.0,
                });
                signatures.len() - 1
            });
            signatures[s].vertex_count += 1;
            signatures[s].volume += dual[v];
            vertex_signature.push(s);
        }

        let mut hierarchy = ModeHierarchy {
            components: (0..self.components.len()).map(|c| self.mode_id(c)).collect(),
            signatures,
            vertex_signature,
            edges: Vec::new(),
        };
        let k = hierarchy.signatures.len();
        for a in 0..k {
            for b in 0..k {
                if hierarchy.includes(a, b)
                    && !(0..k).any(|c| hierarchy.includes(a, c) && hierarchy.includes(c, b))
                {
                    hierarchy.edges.push((a, b));
                }
            }
        }
        hierarchy
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    // The smaller index becomes the root.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

pub fn local_pareto_vertices(problem: &Problem) -> Vec<usize> {
    ModeAnalysis::new(problem).local_pareto_vertices()
}

pub fn admissible_vertices(problem: &Problem, x: Vec3) -> Result<Vec<usize>, MeshError> {
    ModeAnalysis::new(problem).admissible_vertices(x)
}

pub fn mode_set(problem: &Problem, x: Vec3) -> Result<ModeSet, MeshError> {
    ModeAnalysis::new(problem).mode_set(x)
}

pub fn mode_regions(problem: &Problem) -> ModeHierarchy {
    ModeAnalysis::new(problem).mode_regions()
}
