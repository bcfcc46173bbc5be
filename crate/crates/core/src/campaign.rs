//! Campaign driver: trivial branch, the primary branch from `(π², 0)`,
//! branch switching, multi-bump seeding and solution census.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuation::{
    branch_switch, initial_tangent, seed_multibump, trace_both_ways, trace_branch, Branch, BranchPointEvent,
    ContinuationConfig, EventKind, Provenance, Tangent,
};
use crate::discretization::{discrete_dirichlet_eigenvalue, WeightDescriptor, DEFAULT_N_INTERIOR};
use crate::error::{Error, Result};
use crate::nonlinear::{NewtonConfig, SolutionPoint};
use crate::parabolic::EvolutionConfig;
use crate::problem::Problem;
use crate::spectral::{BifurcationDirection, BumpCode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_interior: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_interior: DEFAULT_N_INTERIOR,
        }
    }
}

/// Seeds for isolated folds: every code is seeded at `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub lambda: Option<f64>,
    pub codes: Vec<BumpCode>,
    /// Seed every nonzero code.
    pub all: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CensusSection {
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub svg: bool,
    pub snapshots: bool,
    /// Steps between stored u-vector snapshots.
    pub snapshot_every: usize,
    /// Optional plot window; `None` fits the data.
    pub lambda_range: Option<[f64; 2]>,
    pub uprime_range: Option<[f64; 2]>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            svg: true,
            snapshots: false,
            snapshot_every: 10,
            lambda_range: None,
            uprime_range: None,
        }
    }
}

/// Parabolic runs for the `evolve` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct EvolveSection {
    pub lambda: Option<f64>,
    pub codes: Vec<BumpCode>,
    pub all: bool,
    #[serde(flatten)]
    pub stepping: EvolutionConfig,
}

/// Everything a campaign needs; deserialised from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub weight: WeightDescriptor,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub seeds: SeedSection,
    #[serde(default)]
    pub census: CensusSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    /// How many generations of switched branches are followed.
    #[serde(default = "default_switch_depth")]
    pub max_switch_depth: usize,
}

fn default_switch_depth() -> usize {
    3
}

/// Default seeding λ for `Sin{n}`-like weights with `n+1` positive bumps.
pub fn default_seed_lambda(positive_intervals: usize) -> f64 {
    match positive_intervals {
        0..=2 => -21.0,
        3 => -60.0,
        _ => -80.0,
    }
}

impl CampaignConfig {
    pub fn new(weight: WeightDescriptor) -> Self {
        Self {
            weight,
            grid: GridSection::default(),
            continuation: ContinuationConfig::default(),
            newton: NewtonConfig::default(),
            seeds: SeedSection::default(),
            census: CensusSection::default(),
            output: OutputSection::default(),
            evolve: EvolveSection::default(),
            max_switch_depth: default_switch_depth(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        self.continuation.validate()?;
        self.newton.validate()?;
        if self.grid.n_interior < 3 {
            return Err(Error::Config("grid.n_interior must be at least 3".into()));
        }
        let s = self.weight.sign_intervals().iter().filter(|iv| iv.sign > 0).count();
        for c in self.seed_codes() {
            if c.len() != s {
                return Err(Error::Config(format!("seed code {c} needs {s} digits")));
            }
        }
        for &l in &self.census.lambdas {
            if l < self.continuation.lambda_min || l > self.continuation.lambda_max {
                return Err(Error::Config(format!(
                    "census lambda {l} outside the continuation window"
                )));
            }
        }
        Ok(())
    }

    pub fn positive_intervals(&self) -> usize {
        self.weight.sign_intervals().iter().filter(|iv| iv.sign > 0).count()
    }

    pub fn seed_codes(&self) -> Vec<BumpCode> {
        if self.seeds.all {
            BumpCode::all_nonzero(self.positive_intervals())
        } else {
            self.seeds.codes.clone()
        }
    }

    pub fn seed_lambda(&self) -> f64 {
        self.seeds
            .lambda
            .unwrap_or_else(|| default_seed_lambda(self.positive_intervals()))
    }

    pub fn problem(&self) -> Result<Problem> {
        Ok(Problem::new(self.weight, self.grid.n_interior)?.with_newton(self.newton))
    }
}

/// Distinct positive solutions found at one λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub lambda: f64,
    pub points: Vec<SolutionPoint>,
}

/// Flattened event with the id of the branch it was found on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub branch_id: usize,
    pub kind: EventKind,
    pub lambda: f64,
    pub uprime0: f64,
}

/// Output of [`run_campaign`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub weight: WeightDescriptor,
    pub n_interior: usize,
    pub direction: Option<BifurcationDirection>,
    pub trivial: Option<Branch>,
    pub branches: Vec<Branch>,
    /// Connected-component id of each branch.
    pub components: Vec<usize>,
    pub events: Vec<EventRecord>,
    pub census: Vec<CensusEntry>,
    /// Per-branch failures (stalled traces, failed switches, seeds).
    pub failures: Vec<String>,
}

impl BifurcationDiagram {
    pub fn component_count(&self) -> usize {
        let mut ids = self.components.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn census_at(&self, lambda: f64) -> Option<&CensusEntry> {
        self.census
            .iter()
            .find(|c| (c.lambda - lambda).abs() <= 1e-12 * (1.0 + lambda.abs()))
    }

    /// Branch ids grouped by component, in order of first appearance.
    pub fn component_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for (b, &c) in self.components.iter().enumerate() {
            match groups.iter_mut().find(|(id, _)| *id == c) {
                Some((_, v)) => v.push(b),
                None => groups.push((c, vec![b])),
            }
        }
        groups.into_iter().map(|(_, v)| v).collect()
    }
}

fn same_location(a: &SolutionPoint, b: &SolutionPoint) -> bool {
    (a.lambda - b.lambda).abs() <= 1e-3 * (1.0 + a.lambda.abs())
        && (a.uprime0 - b.uprime0).abs() <= 1e-3 * (1.0 + a.uprime0.abs().max(b.uprime0.abs()))
}

/// Dedup rule of the census: two solutions coincide when both `u′(0)` and
/// the full vectors agree to a relative `1e-3`.
pub fn same_solution(a: &SolutionPoint, b: &SolutionPoint) -> bool {
    let up = a.uprime0.abs().max(b.uprime0.abs()).max(f64::MIN_POSITIVE);
    let un = a.max_norm().max(b.max_norm()).max(f64::MIN_POSITIVE);
    let du = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max);
    (a.uprime0 - b.uprime0).abs() <= 1e-3 * up && du <= 1e-3 * un
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Positive solutions at `lambda` obtained by intersecting every branch
/// with the line λ = const and polishing with Newton.
pub fn census_at(branches: &[Branch], lambda: f64, problem: &Problem) -> Vec<SolutionPoint> {
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for b in branches {
        for (k, w) in b.points.windows(2).enumerate() {
            let (p, q) = (&w[0], &w[1]);
            let (a, c) = (p.lambda - lambda, q.lambda - lambda);
            if a == 0.0 && k > 0 {
                continue; // counted as the end of the previous segment
            }
            if a * c > 0.0 || (p.lambda == q.lambda) {
                continue;
            }
            let t = a / (a - c);
            starts.push(p.u.iter().zip(&q.u).map(|(x, y)| x + t * (y - x)).collect());
        }
        if let (Some(first), true) = (b.points.first(), b.points.len() == 1) {
            if first.lambda == lambda {
                starts.push(first.u.clone());
            }
        }
    }
    let solved: Vec<Option<SolutionPoint>> = starts
        .par_iter()
        .map(|u0| {
            let mut p = problem.newton(lambda, u0).ok()?;
            let max = p.max_norm();
            if max <= 1e-6 || !p.is_nonnegative(problem.tol_pos * max.max(1.0)) {
                return None;
            }
            p.clip_undershoot(problem.tol_pos * max.max(1.0));
            problem.annotate(&mut p).ok()?;
            Some(p)
        })
        .collect();
    let mut out: Vec<SolutionPoint> = Vec::new();
    for p in solved.into_iter().flatten() {
        if !out.iter().any(|q| same_solution(q, &p)) {
            out.push(p);
        }
    }
    out.sort_by(|a, b| a.uprime0.total_cmp(&b.uprime0));
    out
}

/// Steps 1–5 of the discovery strategy. Fails only when the primary branch
/// cannot be reached from `(π², 0)`.
/// Shoots from `(sigma, 0)` onto the positive primary branch and traces it
/// both ways; returns the branch and the λ where it stalled, if it did.
fn primary_branch(sigma: f64, problem: &Problem, ccfg: &ContinuationConfig) -> Result<(Branch, Option<f64>)> {
    let n = problem.n();
    let mut origin = problem.point(sigma, vec![0.0; n])?;
    problem.annotate(&mut origin)?;
    let origin_event = BranchPointEvent {
        kind: EventKind::SimpleBifurcation,
        location: origin,
        tangent: Tangent::lambda_direction(n),
        step_index: 0,
    };
    let (p0, t0) = branch_switch(&origin_event, problem, ccfg)?.plus;
    if !p0.is_nonnegative(problem.tol_pos) {
        return Err(Error::SwitchFailed("primary branch seed is not positive".into()));
    }
    Ok(
        match trace_both_ways(p0, t0, Provenance::FromZero { sigma }, problem, ccfg) {
            Ok(b) => (b, None),
            Err(s) => (s.partial, Some(s.lambda)),
        },
    )
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<BifurcationDiagram> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let ccfg = &cfg.continuation;
    let n = problem.n();
    let w = ccfg.metric_weight(&problem);
    let mut failures = Vec::new();

    // (1) trivial branch and the shot onto the primary branch
    let trivial = {
        let mut start = problem.point(ccfg.lambda_min, vec![0.0; n])?;
        problem.annotate(&mut start)?;
        match trace_branch(start, Tangent::lambda_direction(n), Provenance::Trivial, &problem, ccfg) {
            Ok(b) => Some(b),
            Err(s) => {
                failures.push(format!("trivial branch stalled at lambda={:.6}", s.lambda));
                Some(s.partial)
            }
        }
    };
    // the discrete problem bifurcates at σ₁ʰ, which sits O(h²) below π²
    let s1 = discrete_dirichlet_eigenvalue(1, problem.grid.h);
    let mut branches: Vec<Branch> = Vec::new();
    if s1 > ccfg.lambda_min && s1 < ccfg.lambda_max {
        match primary_branch(s1, &problem, ccfg) {
            Ok((b, stalled)) => {
                if let Some(l) = stalled {
                    failures.push(format!("primary branch stalled at lambda={l:.6}"));
                }
                branches.push(b);
            }
            Err(e) => failures.push(format!("primary branch at lambda={s1:.6}: {e}")),
        }
    } else {
        log::info!("sigma_1 = {s1:.6} lies outside the lambda window; no primary branch");
    }
    let mut parents: Vec<Option<usize>> = vec![None; branches.len()];
    let mut depth: Vec<usize> = vec![0; branches.len()];
    // branch points already switched at, with the branch they were found on
    let mut handled: Vec<(usize, SolutionPoint)> = Vec::new();
    let mut cursor = 0;

    let mut process_switches = |branches: &mut Vec<Branch>,
                                parents: &mut Vec<Option<usize>>,
                                depth: &mut Vec<usize>,
                                cursor: &mut usize,
                                failures: &mut Vec<String>| {
        while *cursor < branches.len() {
            let b = *cursor;
            *cursor += 1;
            if depth[b] >= cfg.max_switch_depth {
                continue;
            }
            let events: Vec<BranchPointEvent> = branches[b]
                .events
                .iter()
                .filter(|e| e.kind == EventKind::SimpleBifurcation)
                .cloned()
                .collect();
            for ev in events {
                let seen_elsewhere = handled.iter().any(|(_, p)| same_location(p, &ev.location))
                    || branches.iter().enumerate().filter(|(i, _)| *i != b).any(|(_, o)| {
                        o.events
                            .iter()
                            .any(|e| e.kind == EventKind::SimpleBifurcation && same_location(&e.location, &ev.location))
                    });
                if seen_elsewhere {
                    continue;
                }
                handled.push((b, ev.location.clone()));
                let pair = match branch_switch(&ev, &problem, ccfg) {
                    Ok(p) => p,
                    Err(e) => {
                        failures.push(format!("switch on branch {b} at lambda={:.6}: {e}", ev.location.lambda));
                        continue;
                    }
                };
                let provenance = Provenance::Switched {
                    parent_branch: b,
                    event_lambda: ev.location.lambda,
                };
                let sides = [pair.plus, pair.minus];
                let traced: Vec<_> = sides
                    .into_par_iter()
                    .map(|(p, t)| trace_branch(p, t, provenance.clone(), &problem, ccfg))
                    .collect();
                for r in traced {
                    let branch = match r {
                        Ok(br) => br,
                        Err(s) => {
                            failures.push(format!("switched branch from {b} stalled at lambda={:.6}", s.lambda));
                            s.partial
                        }
                    };
                    branches.push(branch);
                    parents.push(Some(b));
                    depth.push(depth[b] + 1);
                }
            }
        }
    };

    // (3) switch along the primary branch and everything it spawns
    process_switches(&mut branches, &mut parents, &mut depth, &mut cursor, &mut failures);

    // (4) seeds for isolated folds
    let seed_lambda = cfg.seed_lambda();
    for code in cfg.seed_codes() {
        if code.is_zero() {
            continue;
        }
        let present = census_at(&branches, seed_lambda, &problem);
        if present.iter().any(|p| p.bump_code.as_ref() == Some(&code)) {
            log::info!("seed {code} already represented at lambda={seed_lambda}");
            continue;
        }
        let seeded = seed_multibump(&code, seed_lambda, &problem).and_then(|u0| {
            let mut p = problem.newton(seed_lambda, &u0)?;
            let max = p.max_norm();
            if max <= 1e-6 {
                return Err(Error::SwitchFailed("seed converged to the trivial solution".into()));
            }
            if !p.is_nonnegative(problem.tol_pos * max.max(1.0)) {
                return Err(Error::NonPositive { min: p.min_value() });
            }
            p.clip_undershoot(problem.tol_pos * max.max(1.0));
            problem.annotate(&mut p)?;
            Ok(p)
        });
        let p = match seeded {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("seed {code} at lambda={seed_lambda}: {e}"));
                continue;
            }
        };
        if present.iter().any(|q| same_solution(q, &p)) {
            log::info!("seed {code} converged onto a known solution");
            continue;
        }
        if p.bump_code.as_ref() != Some(&code) {
            log::warn!(
                "seed {code} converged to a solution classified {}",
                p.bump_code.as_ref().map(|c| c.to_string()).unwrap_or_default()
            );
        }
        let t = match initial_tangent(&p, None, 1.0, &problem, w) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("seed {code}: tangent: {e}"));
                continue;
            }
        };
        let branch = match trace_both_ways(
            p,
            t,
            Provenance::Seeded {
                code: code.clone(),
                lambda: seed_lambda,
            },
            &problem,
            ccfg,
        ) {
            Ok(b) => b,
            Err(s) => {
                failures.push(format!("seeded branch {code} stalled at lambda={:.6}", s.lambda));
                s.partial
            }
        };
        branches.push(branch);
        parents.push(None);
        depth.push(0);
        process_switches(&mut branches, &mut parents, &mut depth, &mut cursor, &mut failures);
    }

    // components: switched branches hang off their parent, branches sharing
    // a branch point are connected
    let mut uf = UnionFind((0..branches.len()).collect());
    for (b, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            uf.union(b, *p);
        }
    }
    for i in 0..branches.len() {
        for j in (i + 1)..branches.len() {
            let shared = branches[i].events.iter().any(|a| {
                a.kind == EventKind::SimpleBifurcation
                    && branches[j]
                        .events
                        .iter()
                        .any(|c| c.kind == EventKind::SimpleBifurcation && same_location(&a.location, &c.location))
            });
            if shared {
                uf.union(i, j);
            }
        }
    }
    for (b, loc) in &handled {
        for (j, other) in branches.iter().enumerate() {
            if other
                .events
                .iter()
                .any(|e| e.kind == EventKind::SimpleBifurcation && same_location(&e.location, loc))
            {
                uf.union(*b, j);
            }
        }
    }
    let components: Vec<usize> = (0..branches.len()).map(|i| uf.find(i)).collect();

    let events = branches
        .iter()
        .enumerate()
        .flat_map(|(id, b)| {
            b.events.iter().map(move |e| EventRecord {
                branch_id: id,
                kind: e.kind,
                lambda: e.location.lambda,
                uprime0: e.location.uprime0,
            })
        })
        .collect();

    // (5) census
    let census = cfg
        .census
        .lambdas
        .iter()
        .map(|&lambda| CensusEntry {
            lambda,
            points: census_at(&branches, lambda, &problem),
        })
        .collect();

    let direction = BifurcationDirection::compute(&cfg.weight).ok();
    Ok(BifurcationDiagram {
        weight: cfg.weight,
        n_interior: n,
        direction,
        trivial,
        branches,
        components,
        events,
        census,
        failures,
    })
}
