//! CSV, SVG and text output of a bifurcation diagram, plus branch
//! persistence with periodic u-vector snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::campaign::BifurcationDiagram;
use crate::continuation::{Branch, ContinuationConfig, EventKind};
use crate::error::{Error, Result};
use crate::nonlinear::SolutionPoint;

pub const BRANCH_HEADER: &str = "branch_id,step,lambda,uprime0,morse,code,residual_norm";
pub const EVENTS_HEADER: &str = "kind,lambda,uprime0,branch_id";

/// Scientific notation with 12 significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn point_row(branch_id: usize, step: usize, p: &SolutionPoint) -> String {
    format!(
        "{branch_id},{step},{},{},{},{},{}",
        sig12(p.lambda),
        sig12(p.uprime0),
        p.morse_index.map(|m| m.to_string()).unwrap_or_default(),
        p.bump_code.as_ref().map(|c| c.to_string()).unwrap_or_default(),
        sig12(p.residual_norm)
    )
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// CSV text of one branch.
pub fn branch_csv(branch_id: usize, branch: &Branch) -> String {
    let mut s = String::from(BRANCH_HEADER);
    s.push('\n');
    for (k, p) in branch.points.iter().enumerate() {
        s.push_str(&point_row(branch_id, k, p));
        s.push('\n');
    }
    s
}

/// CSV text of the flattened event list.
pub fn events_csv(diagram: &BifurcationDiagram) -> String {
    let mut s = String::from(EVENTS_HEADER);
    s.push('\n');
    for e in &diagram.events {
        let _ = writeln!(s, "{},{},{},{}", e.kind, sig12(e.lambda), sig12(e.uprime0), e.branch_id);
    }
    s
}

/// Writes `branch_NNN.csv` per branch, `branches.csv` with all rows and
/// `events.csv` into `dir`. Returns the paths written.
pub fn export_csv(diagram: &BifurcationDiagram, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut all = String::from(BRANCH_HEADER);
    all.push('\n');
    for (id, b) in diagram.branches.iter().enumerate() {
        let text = branch_csv(id, b);
        all.push_str(text.split_once('\n').map(|(_, rows)| rows).unwrap_or(""));
        let path = dir.join(format!("branch_{id:03}.csv"));
        write_file(&path, &text)?;
        written.push(path);
    }
    let path = dir.join("branches.csv");
    write_file(&path, &all)?;
    written.push(path);
    let path = dir.join("events.csv");
    write_file(&path, &events_csv(diagram))?;
    written.push(path);
    Ok(written)
}

/// One parsed row of a branch CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub branch_id: usize,
    pub step: usize,
    pub lambda: f64,
    pub uprime0: f64,
    pub morse: Option<usize>,
    pub code: String,
    pub residual_norm: f64,
}

/// Parses the branch CSV format (header line required, `#` lines skipped).
pub fn parse_branch_csv(text: &str) -> Result<Vec<BranchRow>> {
    let bad = |line: usize, what: &str| Error::InvalidArgument(format!("branch csv line {line}: {what}"));
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == BRANCH_HEADER => {}
        _ => return Err(bad(1, "missing header")),
    }
    lines
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(bad(i + 1, "expected 7 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
            Ok(BranchRow {
                branch_id: f[0].parse().map_err(|_| bad(i + 1, "bad branch id"))?,
                step: f[1].parse().map_err(|_| bad(i + 1, "bad step"))?,
                lambda: num(f[2])?,
                uprime0: num(f[3])?,
                morse: if f[4].is_empty() {
                    None
                } else {
                    Some(f[4].parse().map_err(|_| bad(i + 1, "bad morse"))?)
                },
                code: f[5].to_string(),
                residual_norm: num(f[6])?,
            })
        })
        .collect()
}

/// Writes `branch_NNN.dat` (header plus rows) and, when `snapshot_every`
/// is positive, `branch_NNN.snapshots.csv` with the full u-vector every
/// `snapshot_every` steps (and at the last step).
pub fn persist_branch(
    diagram: &BifurcationDiagram,
    branch_id: usize,
    continuation: &ContinuationConfig,
    dir: impl AsRef<Path>,
    snapshot_every: usize,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let branch = diagram
        .branches
        .get(branch_id)
        .ok_or_else(|| Error::InvalidArgument(format!("no branch {branch_id}")))?;
    let h = 1.0 / (diagram.n_interior + 1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# weight: {}",
        serde_json::to_string(&diagram.weight).unwrap_or_default()
    );
    let _ = writeln!(s, "# grid: n_interior={} h={}", diagram.n_interior, sig12(h));
    let _ = writeln!(
        s,
        "# continuation: {}",
        serde_json::to_string(continuation).unwrap_or_default()
    );
    let _ = writeln!(s, "# provenance: {}", branch.provenance);
    let _ = writeln!(s, "# stop: {:?}", branch.stop);
    let _ = writeln!(
        s,
        "# component: {}",
        diagram.components.get(branch_id).copied().unwrap_or(branch_id)
    );
    s.push_str(&branch_csv(branch_id, branch));
    let path = dir.join(format!("branch_{branch_id:03}.dat"));
    write_file(&path, &s)?;
    let mut written = vec![path];
    if snapshot_every > 0 && !branch.is_empty() {
        let mut snap = String::from("step,lambda,u\n");
        let last = branch.len() - 1;
        for (k, p) in branch.points.iter().enumerate() {
            if k % snapshot_every != 0 && k != last {
                continue;
            }
            let _ = write!(snap, "{k},{}", sig12(p.lambda));
            for v in &p.u {
                let _ = write!(snap, ",{}", sig12(*v));
            }
            snap.push('\n');
        }
        let path = dir.join(format!("branch_{branch_id:03}.snapshots.csv"));
        write_file(&path, &snap)?;
        written.push(path);
    }
    Ok(written)
}

/// Plot window; `None` entries are fitted to the data with a 5% margin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SvgAxes {
    pub lambda_range: Option<[f64; 2]>,
    pub uprime_range: Option<[f64; 2]>,
    pub width: Option<f64>,
    pub height: Option<f64>,
}

const PALETTE: [&str; 8] = [
    "#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#16a085", "#7f8c8d", "#b7950b",
];

fn fitted(values: impl Iterator<Item = f64>, fixed: Option<[f64; 2]>) -> [f64; 2] {
    if let Some(r) = fixed {
        return r;
    }
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return [0.0, 1.0];
    }
    let span = (hi - lo).max(1e-9 * (1.0 + hi.abs()));
    [lo - 0.05 * span, hi + 0.05 * span]
}

/// Round tick values in `[lo, hi]` with the decimals needed to print them.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    (out, (-step.log10().floor()).max(0.0) as usize)
}

/// Standalone SVG: one polyline per branch coloured by component, circles
/// at folds, squares at branch points.
pub fn render_svg(diagram: &BifurcationDiagram, axes: &SvgAxes) -> String {
    let (w, h) = (axes.width.unwrap_or(800.0), axes.height.unwrap_or(560.0));
    let (ml, mr, mt, mb) = (80.0, 20.0, 20.0, 60.0);
    let pts = || diagram.branches.iter().flat_map(|b| b.points.iter());
    let [l0, l1] = fitted(pts().map(|p| p.lambda), axes.lambda_range);
    let [u0, u1] = fitted(pts().map(|p| p.uprime0), axes.uprime_range);
    let sx = |l: f64| ml + (l - l0) / (l1 - l0) * (w - ml - mr);
    let sy = |u: f64| h - mb - (u - u0) / (u1 - u0) * (h - mt - mb);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{ml}" y="{mt}" width="{}" height="{}"/></clipPath></defs>"#,
        w - ml - mr,
        h - mt - mb
    );
    let _ = writeln!(
        s,
        r#"<g stroke="black" fill="none"><rect x="{ml}" y="{mt}" width="{}" height="{}"/></g>"#,
        w - ml - mr,
        h - mt - mb
    );
    let (lt, ld) = ticks(l0, l1);
    for t in lt {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.ld$}</text>"#,
            h - mb,
            h - mb + 5.0,
            h - mb + 20.0
        );
    }
    let (ut, ud) = ticks(u0, u1);
    for t in ut {
        let y = sy(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{ml}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{t:.ud$}</text>"#,
            ml - 5.0,
            ml - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="16">λ</text>"#,
        ml + 0.5 * (w - ml - mr),
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" font-size="16" transform="rotate(-90 20 {:.2})">u′(0)</text>"#,
        mt + 0.5 * (h - mt - mb),
        mt + 0.5 * (h - mt - mb)
    );
    let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
    for (id, b) in diagram.branches.iter().enumerate() {
        let comp = diagram.components.get(id).copied().unwrap_or(id);
        let color = PALETTE[comp % PALETTE.len()];
        if b.points.len() == 1 {
            let p = &b.points[0];
            let _ = writeln!(
                s,
                r#"<circle class="point" data-branch="{id}" cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sx(p.lambda),
                sy(p.uprime0)
            );
            continue;
        }
        let coords: Vec<String> = b
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.lambda), sy(p.uprime0)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-branch="{id}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }
    for e in &diagram.events {
        let (x, y) = (sx(e.lambda), sy(e.uprime0));
        match e.kind {
            EventKind::Fold => {
                let _ = writeln!(
                    s,
                    r#"<circle class="fold" cx="{x:.2}" cy="{y:.2}" r="4" fill="none" stroke="black"/>"#
                );
            }
            EventKind::SimpleBifurcation => {
                let _ = writeln!(
                    s,
                    r#"<rect class="branch-point" x="{:.2}" y="{:.2}" width="8" height="8" fill="none" stroke="black"/>"#,
                    x - 4.0,
                    y - 4.0
                );
            }
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn export_svg(diagram: &BifurcationDiagram, path: impl AsRef<Path>, axes: &SvgAxes) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_file(path, &render_svg(diagram, axes))
}

fn label(p: &SolutionPoint) -> String {
    match &p.bump_code {
        Some(c) => c.with_index(p.morse_index),
        None => "?".into(),
    }
}

/// Types on both sides of each fold: the far ends of the two stretches
/// it joins (bounded by the neighbouring events or the branch ends), since
/// the code along a fold component changes away from the turning point.
pub fn fold_transitions(branch: &Branch) -> Vec<(String, String, f64)> {
    let idx: Vec<usize> = branch.events.iter().map(|e| e.step_index).collect();
    let last = branch.len().saturating_sub(1);
    branch
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind == EventKind::Fold && !branch.is_empty())
        .map(|(i, e)| {
            let before = if i == 0 { 0 } else { (idx[i - 1] + 1).min(last) };
            let after = idx.get(i + 1).copied().unwrap_or(last).min(last);
            (
                label(&branch.points[before]),
                label(&branch.points[after]),
                e.location.lambda,
            )
        })
        .collect()
}

/// Successive distinct `code(index)` labels along a branch.
pub fn type_sequence(branch: &Branch) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for p in &branch.points {
        let l = label(p);
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    out
}

/// Human-readable report: directions, branches with their type transitions
/// and the census table.
pub fn report_summary(diagram: &BifurcationDiagram) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "weight: {}", diagram.weight.label());
    let _ = writeln!(s, "grid: n_interior = {}", diagram.n_interior);
    match &diagram.direction {
        Some(d) => {
            let _ = write!(s, "D1 = {}", sig12(d.d1));
            match d.d2 {
                Some(d2) => {
                    let _ = write!(s, ", D2 = {}", sig12(d2));
                }
                None => s.push_str(", D2 not computed"),
            }
            let _ = writeln!(s, " ({})", d.criticality());
        }
        None => s.push_str("D1/D2 unavailable\n"),
    }
    if let Some(t) = &diagram.trivial {
        let bps: Vec<String> = t.events.iter().map(|e| format!("{:.6}", e.location.lambda)).collect();
        let _ = writeln!(s, "trivial branch: bifurcation points at lambda = [{}]", bps.join(", "));
    }
    let _ = writeln!(s, "components: {}", diagram.component_count());
    for (id, b) in diagram.branches.iter().enumerate() {
        let (lo, hi) = b.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
            (l.min(p.lambda), h.max(p.lambda))
        });
        let _ = writeln!(
            s,
            "branch {id} [component {}] {}: {} points, lambda in [{lo:.4}, {hi:.4}], stop {:?}",
            diagram.components.get(id).copied().unwrap_or(id),
            b.provenance,
            b.len(),
            b.stop
        );
        let _ = writeln!(s, "  types: {}", type_sequence(b).join(" → "));
        for e in &b.events {
            let _ = writeln!(
                s,
                "  {} at λ≈{:.5}, u′(0)≈{:.5}",
                e.kind, e.location.lambda, e.location.uprime0
            );
        }
        for (a, c, l) in fold_transitions(b) {
            let _ = writeln!(s, "  {a} → {c} across Fold at λ≈{l:.4}");
        }
    }
    for c in &diagram.census {
        let _ = writeln!(s, "census at λ = {}: {} solutions", c.lambda, c.points.len());
        for p in &c.points {
            let _ = writeln!(
                s,
                "  {:<12} u′(0) = {}  max = {}",
                label(p),
                sig12(p.uprime0),
                sig12(p.max_norm())
            );
        }
    }
    if !diagram.failures.is_empty() {
        let _ = writeln!(s, "failures:");
        for f in &diagram.failures {
            let _ = writeln!(s, "  {f}");
        }
    }
    s
}
