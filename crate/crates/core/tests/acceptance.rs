//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Built with `harness = false`, so `cargo test --test acceptance` always
//! prints the report and exits nonzero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tetmodes::harness::{descent_solver, render_artifact, Artifact, ProblemSpecFile, SolverConfig};
use tetmodes::mesh::{build_fc24_mesh, Box3, TetMesh};
use tetmodes::modes::ModeAnalysis;
use tetmodes::nesting::{Anchor, ChildPlacement, CompositeNode, NestingNode};
use tetmodes::transform::MonotoneMap;
use tetmodes::{build_primitive_field, compose_problem, PrimitiveSpec, Problem, ProblemSpec};

use common::{det6, dominates, rotate_minus_45, standard_psi2, tet_volume, ModeOracle};

const EXACT: f64 = 1e-12;

type Outcome = Result<String, String>;

fn close(label: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{label}: got {got}, want {want}"))
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn standard() -> Problem {
    compose_problem(&ProblemSpec::standard()).expect("standard problem")
}

fn vertex(p: &Problem, x: [f64; 3]) -> usize {
    p.mesh.vertex_at(x).unwrap_or_else(|| panic!("no vertex at {x:?}"))
}

fn reference_values() -> Outcome {
    let spec = PrimitiveSpec::standard();
    let field = build_primitive_field(&spec).map_err(|e| e.to_string())?;
    let mesh = field.mesh().clone();
    let at = |x: [f64; 3]| field.value(mesh.vertex_at(x).unwrap())[1];
    close("psi2(p+, z=0)", at([1.0, 0.0, 0.0]), 0.0, EXACT)?;
    close("psi2(p-, z=0)", at([3.0, 0.0, 0.0]), 0.5, EXACT)?;
    let slopes: Vec<f64> = spec.optima.iter().map(|o| o.slope).collect();
    ensure(slopes == [1.0, 0.5], || format!("slopes {slopes:?}"))?;
    let minor = field.interpolate([3.0, 0.0, 0.5]).map_err(|e| e.to_string())?[1];
    close("psi2(3,0,0.5)", minor, 1.25, EXACT)?;
    let major = field.interpolate([1.0, 0.0, 0.5]).map_err(|e| e.to_string())?[1];
    close("psi2(1,0,0.5)", major, 0.0, EXACT)?;
    Ok(format!("psi2 = 0, 0.5 at z=0; r = (1, 0.5); z=0.5 columns {major}, {minor}"))
}

/// Faces keyed by sorted vertex triple, with the opposite vertex of every tet using it.
fn face_map(mesh: &TetMesh) -> BTreeMap<[usize; 3], Vec<usize>> {
    let mut faces: BTreeMap<[usize; 3], Vec<usize>> = BTreeMap::new();
    for tet in mesh.tets() {
        for skip in 0..4 {
            let mut f = [0; 3];
            let mut k = 0;
            for (i, &v) in tet.iter().enumerate() {
                if i != skip {
                    f[k] = v;
                    k += 1;
                }
            }
            f.sort_unstable();
            faces.entry(f).or_default().push(tet[skip]);
        }
    }
    faces
}

fn mesh_invariants() -> Outcome {
    let single = build_fc24_mesh(Box3::new([0.0; 3], [1.0; 3]).unwrap(), [1.0; 3]).map_err(|e| e.to_string())?;
    ensure(single.vertex_count() == 15, || format!("{} vertices in one cube", single.vertex_count()))?;
    ensure(single.tet_count() == 24, || format!("{} tets in one cube", single.tet_count()))?;

    let mesh = build_fc24_mesh(Box3::primitive(), [1.0; 3]).map_err(|e| e.to_string())?;
    ensure(mesh.cube_count() == 8, || "primitive mesh is not 8 cubes".into())?;
    ensure(mesh.tet_count() == 24 * 8, || format!("{} tets", mesh.tet_count()))?;
    let total: f64 = (0..mesh.tet_count()).map(|t| tet_volume(&mesh, t)).sum();
    ensure(((total - 8.0) / 8.0).abs() <= EXACT, || format!("volume {total}"))?;
    let min_vol = (0..mesh.tet_count()).map(|t| tet_volume(&mesh, t)).fold(f64::INFINITY, f64::min);
    ensure(min_vol > 0.0, || format!("non-positive tet volume {min_vol}"))?;

    let b = mesh.bbox();
    let on_boundary = |f: &[usize; 3]| {
        (0..3).any(|a| {
            f.iter().all(|&v| mesh.vertex(v)[a] == b.min[a]) || f.iter().all(|&v| mesh.vertex(v)[a] == b.max[a])
        })
    };
    let mut interior = 0;
    for (f, opposite) in face_map(&mesh) {
        match opposite.len() {
            1 => ensure(on_boundary(&f), || format!("face {f:?} has one tet but is interior"))?,
            2 => {
                let [p, q, r] = f.map(|v| mesh.vertex(v));
                let s0 = det6(p, q, r, mesh.vertex(opposite[0]));
                let s1 = det6(p, q, r, mesh.vertex(opposite[1]));
                ensure(s0 * s1 < 0.0, || format!("tets on face {f:?} overlap"))?;
                interior += 1;
            }
            n => return Err(format!("face {f:?} shared by {n} tets")),
        }
    }
    Ok(format!("15 vertices / 24 tets per cube; volume {total}; {interior} conforming interior faces"))
}

fn saddle() -> Outcome {
    let major = 0.0 + 1.0 * ((2.0f64 - 1.0).abs() + 0.0);
    let minor = 0.5 + 0.5 * ((2.0f64 - 3.0).abs() + 0.0);
    close("major branch at (2,0)", major, 1.0, EXACT)?;
    close("minor branch at (2,0)", minor, 1.0, EXACT)?;
    let spec = PrimitiveSpec::standard();
    for o in &spec.optima {
        close("library branch at (2,0)", o.branch_value([2.0, 0.0]), 1.0, EXACT)?;
    }

    let field = build_primitive_field(&spec).map_err(|e| e.to_string())?;
    let mesh = field.mesh();
    let s = mesh.vertex_at([2.0, 0.0, 0.0]).unwrap();
    close("psi2(2,0,0)", field.value(s)[1], 1.0, EXACT)?;
    let adj = common::adjacency(mesh);
    let here = field.value(s)[1];
    let (mut lower, mut higher) = (Vec::new(), Vec::new());
    for &w in &adj[s] {
        let q = mesh.vertex(w);
        if q[2] != 0.0 {
            continue;
        }
        let dir = [q[0] - 2.0, q[1]];
        match field.value(w)[1].total_cmp(&here) {
            std::cmp::Ordering::Less => lower.push(dir),
            std::cmp::Ordering::Greater => higher.push(dir),
            _ => {}
        }
    }
    ensure(!lower.is_empty() && !higher.is_empty(), || format!("lower {lower:?}, higher {higher:?}"))?;
    ensure(lower.iter().all(|d| d[1] == 0.0) && higher.iter().all(|d| d[0] == 0.0), || {
        format!("lower {lower:?}, higher {higher:?}")
    })?;
    Ok(format!("branches agree at 1.0; descends along {lower:?}, rises along {higher:?}"))
}

fn strict_minima(field: &tetmodes::PLFieldPair, z: f64) -> Vec<[f64; 3]> {
    let mesh = field.mesh();
    let adj = common::adjacency(mesh);
    (0..mesh.vertex_count())
        .filter(|&v| mesh.vertex(v)[2] == z)
        .filter(|&v| {
            adj[v]
                .iter()
                .filter(|&&w| mesh.vertex(w)[2] == z)
                .all(|&w| field.value(w)[1] > field.value(v)[1])
        })
        .map(|v| mesh.vertex(v))
        .collect()
}

fn slice_modality() -> Outcome {
    let field = build_primitive_field(&PrimitiveSpec::standard()).map_err(|e| e.to_string())?;
    for v in 0..field.mesh().vertex_count() {
        let p = field.mesh().vertex(v);
        close("psi2 vs closed form", field.value(v)[1], standard_psi2(p), EXACT)?;
    }
    let bottom = strict_minima(&field, 0.0);
    let top = strict_minima(&field, 1.0);
    ensure(bottom.len() == 2, || format!("z=0 minima {bottom:?}"))?;
    ensure(top.len() == 1, || format!("z=1 minima {top:?}"))?;
    Ok(format!("z=0 minima {bottom:?}; z=1 minima {top:?}"))
}

fn mode_sets() -> Outcome {
    let p = standard();
    for v in 0..p.mesh.vertex_count() {
        let want = rotate_minus_45([p.mesh.vertex(v)[2], standard_psi2(p.mesh.vertex(v))]);
        let got = p.objectives.value(v);
        close("f1", got[0], want[0], EXACT)?;
        close("f2", got[1], want[1], EXACT)?;
    }
    let a = ModeAnalysis::new(&p);
    let comp = |x| a.component_of(vertex(&p, x)).expect("local Pareto vertex");
    let (plus, minus) = (comp([1.0, 0.0, 0.0]), comp([3.0, 0.0, 0.0]));

    let at_saddle = a.mode_set([2.0, 0.0, 0.0]).map_err(|e| e.to_string())?.components();
    ensure(at_saddle == [plus, minus], || format!("saddle modes {at_saddle:?}"))?;
    let near_top = a.mode_set([1.1, 0.1, 1.0]).map_err(|e| e.to_string())?.components();
    ensure(near_top == [plus], || format!("modes near p+ at z=1: {near_top:?}"))?;

    let h = a.mode_regions();
    let vol = |c: usize| h.find(&[c]).map(|s| h.signatures[s].volume).ok_or(format!("no {{{c}}} signature"));
    let (vp, vm) = (vol(plus)?, vol(minus)?);
    ensure(vm < vp, || format!("vol {{p-}} {vm} >= vol {{p+}} {vp}"))?;
    Ok(format!("saddle -> 2 modes; near p+ at z=1 -> 1; vol {{p-}} {vm:.4} < vol {{p+}} {vp:.4}"))
}

fn nested_spec() -> ProblemSpec {
    let mut root = NestingNode::standard();
    root.children.push(ChildPlacement::new(Anchor::Minor(0), 0.25, NestingNode::standard()));
    ProblemSpec::new(root)
}

fn hierarchy() -> Outcome {
    let spec = nested_spec();
    let p = compose_problem(&spec).map_err(|e| e.to_string())?;
    let a = ModeAnalysis::new(&p);
    let h = a.mode_regions();
    let chain = h.depth().saturating_sub(1);
    ensure(chain >= 2, || format!("longest inclusion chain has {chain} edges"))?;

    let compiled = CompositeNode::compile(&spec.root).map_err(|e| e.to_string())?;
    let (anchorage, _) = &compiled.children[0];
    let [lo, hi] = anchorage.region;
    let cell = p.mesh.spacing()[0].min(p.mesh.spacing()[1]);
    let parent = &spec.root.primitive;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..400 {
        let z: f64 = rng.random_range(0.0..=1.0);
        let side = rng.random_range(0..4);
        let s: f64 = rng.random_range(0.0..=1.0);
        let (b, n) = match side {
            0 => ([lo[0], lo[1] + s * (hi[1] - lo[1])], [-1.0, 0.0]),
            1 => ([hi[0], lo[1] + s * (hi[1] - lo[1])], [1.0, 0.0]),
            2 => ([lo[0] + s * (hi[0] - lo[0]), lo[1]], [0.0, -1.0]),
            _ => ([lo[0] + s * (hi[0] - lo[0]), hi[1]], [0.0, 1.0]),
        };
        let d = 1e-10;
        let inside = [b[0] - d * n[0], b[1] - d * n[1], z];
        let outside = [b[0] + d * n[0], b[1] + d * n[1], z];
        let pl = |x| p.psi_at(x).map(|v| v[1]).map_err(|e| e.to_string());
        let jump = (pl(inside)? - pl(outside)?).abs();
        let on = [b[0], b[1], z];
        let exact_gap = (compiled.psi2(on, cell) - parent.psi2(on)).abs();
        let inner_gap = (compiled.psi2(inside, cell) - compiled.psi2(outside, cell)).abs();
        worst = worst.max(jump).max(exact_gap).max(inner_gap);
    }
    ensure(worst <= 1e-9, || format!("jump {worst:e} across the child boundary"))?;
    Ok(format!(
        "{} modes, {} signatures, chain of {chain} inclusions; max boundary jump {worst:.1e}",
        h.components.len(),
        h.signatures.len()
    ))
}

fn oracle_equivalence() -> Outcome {
    let p = standard();
    let a = ModeAnalysis::new(&p);
    let oracle = ModeOracle::new(&p.mesh, p.objectives.values());
    let h = a.mode_regions();
    let n = p.mesh.vertex_count();
    for v in 0..n {
        ensure(a.is_local_pareto(v) == oracle.local_pareto[v], || format!("local Pareto flag differs at {v}"))?;
        let rep = |c: usize| a.mode_id(c).representative;
        let want = oracle.modes_of_vertex(v);
        let got: BTreeSet<usize> = a.mode_set(p.mesh.vertex(v)).map_err(|e| e.to_string())?.components().into_iter().map(rep).collect();
        ensure(got == want, || format!("vertex {v}: mode_set {got:?}, oracle {want:?}"))?;
        let region: BTreeSet<usize> = h.signatures[h.vertex_signature[v]].modes.iter().map(|m| m.representative).collect();
        ensure(region == want, || format!("vertex {v}: mode_regions {region:?}, oracle {want:?}"))?;
    }
    let oracle_sigs = oracle.signatures();
    ensure(oracle_sigs.len() == h.signatures.len(), || {
        format!("{} signatures, oracle {}", h.signatures.len(), oracle_sigs.len())
    })?;
    Ok(format!("{n} vertices agree; {} signatures", oracle_sigs.len()))
}

fn catalog() -> Vec<MonotoneMap> {
    vec![
        MonotoneMap::Identity,
        MonotoneMap::Power { gamma: 0.5 },
        MonotoneMap::Power { gamma: 3.0 },
        MonotoneMap::Affine { a: 2.5, b: -1.0 },
        MonotoneMap::Log1pScale { k: 4.0 },
    ]
}

fn dominance_preservation() -> Outcome {
    let base = standard();
    let b = base.bbox();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut point = || [0, 1, 2].map(|i| rng.random_range(b.min[i]..=b.max[i]));
    let pairs: Vec<_> = (0..1000).map(|_| (point(), point())).collect();
    let mut dominated = 0;
    for map in catalog() {
        let mut spec = ProblemSpec::standard();
        spec.transform.maps.f1 = vec![map];
        spec.transform.maps.f2 = vec![map];
        let mapped = compose_problem(&spec).map_err(|e| e.to_string())?;
        for &(x, y) in &pairs {
            let (fx, fy) = (base.evaluate(x).unwrap(), base.evaluate(y).unwrap());
            let (gx, gy) = (mapped.evaluate(x).unwrap(), mapped.evaluate(y).unwrap());
            let m = |v: [f64; 2]| v.map(|c| map.apply(c));
            ensure(dominates(fx, fy) == dominates(gx, gy), || format!("{map:?} flips {x:?} vs {y:?}"))?;
            ensure(dominates(fy, fx) == dominates(gy, gx), || format!("{map:?} flips {y:?} vs {x:?}"))?;
            ensure(dominates(fx, fy) == dominates(m(fx), m(fy)), || format!("{map:?} flips raw values"))?;
            dominated += dominates(fx, fy) as usize + dominates(fy, fx) as usize;
        }
    }
    Ok(format!("1000 pairs x {} maps; {dominated} dominated pairs kept", catalog().len()))
}

fn bifurcation() -> Outcome {
    let p = standard();
    let a = ModeAnalysis::new(&p);
    let config = SolverConfig::default();
    let mut terminals: BTreeMap<usize, usize> = BTreeMap::new();
    for seed in 0..200 {
        let t = descent_solver(&a, [2.0, 0.0, 0.0], seed, &config).map_err(|e| e.to_string())?;
        ensure(t.is_monotone(), || format!("seed {seed} trajectory is not monotone"))?;
        for w in t.steps.windows(2) {
            let (f0, f1) = (w[0].1, w[1].1);
            ensure(f1[0] <= f0[0] && f1[1] <= f0[1], || format!("seed {seed} worsens"))?;
        }
        let m = t.terminal_mode.ok_or(format!("seed {seed} has no terminal mode"))?;
        *terminals.entry(m.component).or_default() += 1;
    }
    ensure(terminals.len() >= 2, || format!("terminal modes {terminals:?}"))?;
    Ok(format!("terminal mode counts {terminals:?}"))
}

fn determinism() -> Outcome {
    let render = || {
        let artifact = Artifact::compose(ProblemSpecFile::default()).map_err(|e| e.to_string())?;
        render_artifact(&artifact).map_err(|e| e.to_string())
    };
    let (first, second) = (render()?, render()?);
    ensure(first == second, || "generate output differs between runs".into())?;
    let bytes: usize = first.iter().map(|(_, b)| b.len()).sum();

    let mut spec = ProblemSpecFile::default();
    spec.problem = nested_spec();
    let nested = Artifact::compose(spec).map_err(|e| e.to_string())?;
    let nested_again = Artifact::compose(nested.spec.clone()).map_err(|e| e.to_string())?;
    ensure(nested.problem.objectives == nested_again.problem.objectives, || "nested values differ".into())?;

    let p = standard();
    let a = ModeAnalysis::new(&p);
    let config = SolverConfig::default();
    for seed in [0, 1, 99] {
        let x = descent_solver(&a, [2.5, 0.4, 0.3], seed, &config).map_err(|e| e.to_string())?;
        let y = descent_solver(&a, [2.5, 0.4, 0.3], seed, &config).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("seed {seed} trajectories differ"))?;
    }
    Ok(format!("{bytes} artifact bytes identical; nested values identical; solver repeats"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("reference values", reference_values),
        ("mesh invariants", mesh_invariants),
        ("saddle construction", saddle),
        ("slice modality", slice_modality),
        ("mode sets", mode_sets),
        ("hierarchy", hierarchy),
        ("oracle equivalence", oracle_equivalence),
        ("dominance preservation", dominance_preservation),
        ("bifurcation", bifurcation),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({ms} ms)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {:.1} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
