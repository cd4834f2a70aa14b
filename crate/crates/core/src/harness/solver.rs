//! Seeded random descent used to show how the start point decides which
//! local Pareto set a simple solver ends up in. It is a demonstration
//! baseline, not a competitive optimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mesh::{fmt_f64, MeshError, Vec3};
use crate::modes::{weakly_dominates, ModeAnalysis, ModeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub seed: u64,
    /// Candidate steps drawn per iteration.
    pub candidates: usize,
    pub initial_radius: f64,
    /// Radius factor applied after an iteration without an accepted move.
    pub shrink: f64,
    /// Consecutive failed iterations before stopping.
    pub patience: usize,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            candidates: 16,
            initial_radius: 0.25,
            shrink: 0.5,
            patience: 12,
            max_steps: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    /// Accepted points and their objective values, start first.
    pub steps: Vec<(Vec3, [f64; 2])>,
    /// Mode of the nearest local Pareto vertex admissible from the end point.
    pub terminal_mode: Option<ModeId>,
}

impl Trajectory {
    pub fn terminal(&self) -> (Vec3, [f64; 2]) {
        *self.steps.last().expect("trajectory holds its start")
    }

    pub fn is_monotone(&self) -> bool {
        self.steps.windows(2).all(|w| weakly_dominates(w[1].1, w[0].1))
    }

    /// `step,x,y,z,f1,f2` rows, one per accepted point.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "x", "y", "z", "f1", "f2"])?;
        for (i, (p, f)) in self.steps.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend([p[0], p[1], p[2], f[0], f[1]].map(fmt_f64));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sample_ball(rng: &mut ChaCha8Rng, r: f64) -> Vec3 {
    loop {
        let d: Vec3 = [
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        ];
        if d.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return d.map(|x| x * r);
        }
    }
}

/// Random weakly-dominating descent from `start` with the given seed.
pub fn descent_solver(
    analysis: &ModeAnalysis<'_>,
    start: Vec3,
    seed: u64,
    config: &SolverConfig,
) -> Result<Trajectory, MeshError> {
    let problem = analysis.problem();
    let bbox = problem.bbox();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = (start, problem.evaluate(start)?);
    let mut steps = vec![current];
    let mut radius = config.initial_radius;
    let mut failures = 0;
    let mut accepted = Vec::with_capacity(config.candidates);

    while steps.len() < config.max_steps && failures < config.patience {
        accepted.clear();
        for _ in 0..config.candidates {
            let d = sample_ball(&mut rng, radius);
            let p = [0, 1, 2].map(|a| current.0[a] + d[a]);
            if p == current.0 || !bbox.contains(p, 0.0) {
                continue;
            }
            let f = problem.evaluate(p)?;
            if weakly_dominates(f, current.1) {
                accepted.push((p, f));
            }
        }
        if accepted.is_empty() {
            failures += 1;
            radius *= config.shrink;
        } else {
            failures = 0;
            current = accepted[rng.random_range(0..accepted.len())];
            steps.push(current);
        }
    }

    let end = current.0;
    let modes = analysis.mode_set(end)?;
    let mesh = &problem.mesh;
    let dist2 = |v: usize| {
        let q = mesh.vertex(v);
        (0..3).map(|a| (q[a] - end[a]).powi(2)).sum::<f64>()
    };
    let terminal_mode = modes
        .modes
        .iter()
        .map(|m| {
            let d = analysis
                .component_members(m.component)
                .iter()
                .map(|&v| dist2(v))
                .fold(f64::INFINITY, f64::min);
            (d, *m)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, m)| m);

    Ok(Trajectory { seed, steps, terminal_mode })
}
