//! Finite-scale probes of stability and the Morse property.
//!
//! Orbits `n ↦ gⁿ` are compared in the word metric and in the vertex-star
//! coned metric. Quasi-geodesic constants are fitted over all index pairs
//! and Morse gauges are estimated from a seeded pool of sample paths.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cayley::{coned_length, random_geodesic, spell_letters, standard_geodesic, vertex_stars, walk};
use crate::graph::Subgraph;
use crate::word::{GraphProduct, NormalForm, Syllable};

/// Longest power probed, in generators.
pub const MAX_PROBE_LENGTH: u64 = 4_096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorseError {
    #[error("probe exceeds the budget: {0}")]
    BudgetExceeded(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("piece {piece} does not start where the previous one ends")]
    Disconnected { piece: usize },
    #[error("window at {start} violates the local bound between positions {i} and {j}")]
    WindowViolation { start: usize, i: usize, j: usize },
}

// ---------------------------------------------------------------------------
// Distortion

/// Radii at which restricted cone distances are taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RSchedule {
    /// The same radii for every row.
    Fixed { radii: Vec<u64> },
    /// `|gⁿ| + offset` for each offset.
    Relative { offsets: Vec<u64> },
}

impl Default for RSchedule {
    fn default() -> Self {
        RSchedule::Relative { offsets: vec![0, 4] }
    }
}

impl RSchedule {
    fn radii(&self, length: u64) -> Vec<u64> {
        match self {
            RSchedule::Fixed { radii } => radii.clone(),
            RSchedule::Relative { offsets } => offsets.iter().map(|o| length + o).collect(),
        }
    }

    fn validate(&self) -> Result<(), MorseError> {
        let v = match self {
            RSchedule::Fixed { radii } => radii,
            RSchedule::Relative { offsets } => offsets,
        };
        if v.is_empty() || v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MorseError::InvalidParameter(
                "radius schedule must be nonempty and increasing".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistortionRow {
    pub n: u64,
    pub standard: u64,
    pub radii: Vec<u64>,
    /// Cone distance of `gⁿ` inside each ball; `None` when `gⁿ` lies outside.
    pub cone: Vec<Option<u64>>,
}

impl DistortionRow {
    /// Whether the last two radii give the same cone distance.
    pub fn stabilized(&self) -> bool {
        match self.cone.as_slice() {
            [.., Some(a), Some(b)] => a == b,
            _ => false,
        }
    }

    pub fn settled(&self) -> Option<u64> {
        self.cone.last().copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistortionCurve {
    pub element: String,
    pub schedule: RSchedule,
    pub rows: Vec<DistortionRow>,
}

impl DistortionCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let columns = self.rows.first().map_or(0, |r| r.cone.len());
        write!(out, "n,standard")?;
        for i in 1..=columns {
            write!(out, ",cone_R{i}")?;
        }
        writeln!(out)?;
        for row in &self.rows {
            write!(out, "{},{}", row.n, row.standard)?;
            for c in &row.cone {
                match c {
                    Some(c) => write!(out, ",{c}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Word length and restricted cone distance of `gⁿ` for `n = 1..=n_max`.
pub fn distortion_curve(
    gp: &GraphProduct,
    g: &NormalForm,
    n_max: u64,
    schedule: &RSchedule,
) -> Result<DistortionCurve, MorseError> {
    schedule.validate()?;
    if n_max == 0 {
        return Err(MorseError::InvalidParameter("n_max must be positive".into()));
    }
    let top = gp.pow(g, n_max as i64);
    let top_len = gp.word_length(&top);
    if top_len > MAX_PROBE_LENGTH {
        return Err(MorseError::BudgetExceeded(format!(
            "|g^{n_max}| = {top_len} exceeds {MAX_PROBE_LENGTH}"
        )));
    }
    if let RSchedule::Fixed { radii } = schedule {
        let max = *radii.last().unwrap();
        if top_len > max {
            return Err(MorseError::BudgetExceeded(format!(
                "|g^{n_max}| = {top_len} lies outside the largest radius {max}"
            )));
        }
    }
    let stars = vertex_stars(gp);
    let rows = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let x = gp.pow(g, n as i64);
            let standard = gp.word_length(&x);
            let radii = schedule.radii(standard);
            let inside = radii.iter().any(|&r| standard <= r);
            let d = inside.then(|| coned_length(gp, &x, &stars));
            let cone = radii.iter().map(|&r| d.filter(|_| standard <= r)).collect();
            DistortionRow {
                n,
                standard,
                radii,
                cone,
            }
        })
        .collect();
    Ok(DistortionCurve {
        element: gp.format(g),
        schedule: schedule.clone(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Stability verdicts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityThresholds {
    /// Cone distances at most this, for every `n`, count as bounded.
    pub cap: u64,
    /// Least slope of a linear lower bound that counts as growth.
    pub slope: f64,
    /// Word lengths must exceed `cap` times this before boundedness is
    /// believed.
    pub spread: u64,
}

impl Default for StabilityThresholds {
    fn default() -> Self {
        StabilityThresholds {
            cap: 2,
            slope: 0.25,
            spread: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityEvidence {
    pub n_range: (u64, u64),
    pub schedule: RSchedule,
    pub thresholds: StabilityThresholds,
    pub stabilized: bool,
    /// `min (cone(n) − cone(1)) / (n − 1)` over `n ≥ 2`.
    pub slope: Option<f64>,
    pub max_cone: Option<u64>,
    pub standard_at_n_max: Option<u64>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub element: String,
    pub verdict: Verdict,
    pub evidence: StabilityEvidence,
    pub curve: Option<DistortionCurve>,
}

/// Why the probe does not apply to `gp`, if it does not.
pub fn out_of_scope(gp: &GraphProduct) -> Option<String> {
    if gp.graph().has_isolated_vertices() {
        Some("OutOfScope: the graph has isolated vertices".into())
    } else if !gp.all_infinite() {
        Some("OutOfScope: some vertex group is finite".into())
    } else {
        None
    }
}

pub fn stability_verdict(
    gp: &GraphProduct,
    g: &NormalForm,
    n_max: u64,
    schedule: &RSchedule,
    thresholds: &StabilityThresholds,
) -> Result<StabilityVerdict, MorseError> {
    let mut evidence = StabilityEvidence {
        n_range: (1, n_max),
        schedule: schedule.clone(),
        thresholds: thresholds.clone(),
        stabilized: false,
        slope: None,
        max_cone: None,
        standard_at_n_max: None,
        reason: None,
    };
    let inconclusive = |evidence: StabilityEvidence, curve| StabilityVerdict {
        element: gp.format(g),
        verdict: Verdict::Inconclusive,
        evidence,
        curve,
    };
    if let Some(reason) = out_of_scope(gp) {
        evidence.reason = Some(reason);
        return Ok(inconclusive(evidence, None));
    }
    if g.is_identity() {
        evidence.reason = Some("the identity has no orbit".into());
        return Ok(inconclusive(evidence, None));
    }
    let curve = distortion_curve(gp, g, n_max, schedule)?;
    evidence.stabilized = curve.rows.iter().all(|r| r.stabilized());
    evidence.standard_at_n_max = curve.rows.last().map(|r| r.standard);
    let cones: Vec<u64> = curve.rows.iter().filter_map(|r| r.settled()).collect();
    evidence.max_cone = cones.iter().copied().max();
    evidence.slope = (2..=cones.len())
        .map(|n| (cones[n - 1] as f64 - cones[0] as f64) / (n - 1) as f64)
        .min_by(f64::total_cmp);
    if !evidence.stabilized {
        evidence.reason = Some("cone distances did not stabilize across the schedule".into());
        return Ok(inconclusive(evidence, Some(curve)));
    }
    let bounded = evidence.max_cone.is_some_and(|m| m <= thresholds.cap);
    let spread = evidence
        .standard_at_n_max
        .is_some_and(|s| s > thresholds.spread * thresholds.cap);
    let verdict = if bounded && spread {
        Verdict::Unstable
    } else if evidence.slope.is_some_and(|s| s >= thresholds.slope) {
        Verdict::Stable
    } else {
        evidence.reason = Some(if bounded {
            "cone distances are bounded but the orbit is too short to tell".into()
        } else {
            "cone distances grow too slowly".into()
        });
        Verdict::Inconclusive
    };
    Ok(StabilityVerdict {
        element: gp.format(g),
        verdict,
        evidence,
        curve: Some(curve),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupVerdict {
    pub verdict: Verdict,
    pub probes: Vec<StabilityVerdict>,
}

/// Probes every nontrivial element of the radius-3 ball of the subgroup
/// generated by `gens`, each as a cyclic direction. The subgroup is Stable
/// if every direction is, Unstable if some direction is.
pub fn subgroup_stability(
    gp: &GraphProduct,
    gens: &[NormalForm],
    n_max: u64,
    schedule: &RSchedule,
    thresholds: &StabilityThresholds,
) -> Result<SubgroupVerdict, MorseError> {
    if gens.is_empty() {
        return Err(MorseError::InvalidParameter("no generators".into()));
    }
    let letters: Vec<NormalForm> = gens
        .iter()
        .flat_map(|g| [g.clone(), gp.invert(g)])
        .collect();
    let mut seen = HashSet::from([gp.identity()]);
    let mut frontier = vec![gp.identity()];
    let mut elements = Vec::new();
    for _ in 0..3 {
        let mut next = Vec::new();
        for x in &frontier {
            for s in &letters {
                let y = gp.mul(x, s);
                if seen.insert(y.clone()) {
                    next.push(y);
                }
            }
        }
        elements.extend(next.iter().cloned());
        frontier = next;
    }
    let probes = elements
        .par_iter()
        .map(|g| stability_verdict(gp, g, n_max, schedule, thresholds))
        .collect::<Result<Vec<_>, _>>()?;
    let verdict = if probes.iter().any(|p| p.verdict == Verdict::Unstable) {
        Verdict::Unstable
    } else if probes.iter().all(|p| p.verdict == Verdict::Stable) {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };
    Ok(SubgroupVerdict { verdict, probes })
}

// ---------------------------------------------------------------------------
// Quasi-geodesic fits

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QgParams {
    pub lambda: f64,
    pub epsilon: f64,
}

impl Default for QgParams {
    fn default() -> Self {
        QgParams {
            lambda: 4.0,
            epsilon: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QgFit {
    pub lambda: f64,
    pub epsilon: f64,
    /// Whether the fit is within the allowed constants.
    pub ok: bool,
}

/// Fits `|i−j|/λ − ε ≤ d(i,j) ≤ λ|i−j| + ε` over all index pairs: the
/// least `λ` with `ε = 0`, and if that exceeds the allowed `λ`, the least
/// `ε` at the allowed `λ`.
pub fn fit_quasi_geodesic(len: usize, d: impl Fn(usize, usize) -> u64, limit: QgParams) -> QgFit {
    let pairs: Vec<(f64, f64)> = (0..len)
        .flat_map(|i| (i + 1..len).map(move |j| (i, j)))
        .map(|(i, j)| ((j - i) as f64, d(i, j) as f64))
        .collect();
    let lambda_star = pairs
        .iter()
        .map(|&(t, d)| if d == 0.0 { f64::INFINITY } else { (t / d).max(d / t) })
        .fold(1.0, f64::max);
    if lambda_star <= limit.lambda {
        return QgFit {
            lambda: lambda_star,
            epsilon: 0.0,
            ok: true,
        };
    }
    let lambda = limit.lambda;
    let epsilon = pairs
        .iter()
        .map(|&(t, d)| (t / lambda - d).max(d - lambda * t))
        .fold(0.0, f64::max);
    QgFit {
        lambda,
        epsilon,
        ok: epsilon <= limit.epsilon,
    }
}

fn check_in_ball(gp: &GraphProduct, path: &[NormalForm], radius: u64) -> Result<(), MorseError> {
    match path.iter().map(|x| gp.word_length(x)).max() {
        Some(l) if l > radius => Err(MorseError::BudgetExceeded(format!(
            "path leaves the ball of radius {radius} (reaches length {l})"
        ))),
        _ => Ok(()),
    }
}

/// Coned distance between two elements, as seen inside any ball that
/// contains a geodesic between them.
pub fn cone_distance(gp: &GraphProduct, stars: &[Subgraph], x: &NormalForm, y: &NormalForm) -> u64 {
    coned_length(gp, &gp.between(x, y), stars)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectabilityReport {
    pub points: usize,
    pub radius: u64,
    pub params: QgParams,
    pub standard_fit: QgFit,
    pub cone_fit: QgFit,
    pub cone_image_diameter: u64,
}

/// Quasi-geodesic fits of a vertex sequence in the word metric and in the
/// coned metric.
pub fn detectability_probe(
    gp: &GraphProduct,
    path: &[NormalForm],
    params: QgParams,
    radius: u64,
) -> Result<DetectabilityReport, MorseError> {
    check_in_ball(gp, path, radius)?;
    let stars = vertex_stars(gp);
    let n = path.len();
    let cone: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| cone_distance(gp, &stars, &path[i], &path[j])).collect())
        .collect();
    let standard_fit = fit_quasi_geodesic(n, |i, j| gp.distance(&path[i], &path[j]), params);
    let cone_fit = fit_quasi_geodesic(n, |i, j| cone[i][j], params);
    Ok(DetectabilityReport {
        points: n,
        radius,
        params,
        standard_fit,
        cone_fit,
        cone_image_diameter: cone.iter().flatten().copied().max().unwrap_or(0),
    })
}

/// The orbit `gⁿ` for `n = 0..=n_max`.
pub fn orbit_path(gp: &GraphProduct, g: &NormalForm, n_max: u64) -> Vec<NormalForm> {
    (0..=n_max).map(|n| gp.pow(g, n as i64)).collect()
}

// ---------------------------------------------------------------------------
// Morse gauge

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GaugeCell {
    pub k: u64,
    pub c: u64,
    pub samples: usize,
    /// Largest Hausdorff distance to the geodesic among qualifying samples.
    pub hausdorff: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MorseGaugeTable {
    pub geodesic_length: usize,
    pub seed: u64,
    pub pool: usize,
    pub cells: Vec<GaugeCell>,
}

impl MorseGaugeTable {
    pub fn get(&self, k: u64, c: u64) -> Option<&GaugeCell> {
        self.cells.iter().find(|cell| cell.k == k && cell.c == c)
    }

    pub fn max_entry(&self) -> Option<u64> {
        self.cells.iter().filter_map(|c| c.hausdorff).max()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,c,hausdorff")?;
        for cell in &self.cells {
            match cell.hausdorff {
                Some(h) => writeln!(out, "{},{},{h}", cell.k, cell.c)?,
                None => writeln!(out, "{},{},", cell.k, cell.c)?,
            }
        }
        Ok(())
    }
}

pub fn default_kc_grid() -> Vec<(u64, u64)> {
    [1, 2, 3]
        .into_iter()
        .flat_map(|k| [0, 2, 4].into_iter().map(move |c| (k, c)))
        .collect()
}

/// Whether a unit-speed path satisfies `|i−j|/k − c ≤ d(p_i, p_j)`.
fn is_quasi_geodesic(gp: &GraphProduct, path: &[NormalForm], k: u64, c: u64) -> bool {
    (0..path.len()).all(|i| {
        (i + 1..path.len()).all(|j| {
            let t = (j - i) as u64;
            // t/k − c ≤ d  ⇔  t ≤ k(d + c)
            t <= k * (gp.distance(&path[i], &path[j]) + c)
        })
    })
}

fn hausdorff(gp: &GraphProduct, a: &[NormalForm], b: &[NormalForm]) -> u64 {
    let one_way = |p: &[NormalForm], q: &[NormalForm]| {
        p.iter()
            .map(|x| q.iter().map(|y| gp.distance(x, y)).min().unwrap_or(0))
            .max()
            .unwrap_or(0)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Heap order of `letters` that always takes the available letter with the
/// least vertex (or the greatest, if `reverse`).
fn extreme_extension(gp: &GraphProduct, letters: &[Syllable], reverse: bool) -> Vec<Syllable> {
    let mut slots: Vec<Option<Syllable>> = letters.iter().cloned().map(Some).collect();
    let mut out = Vec::with_capacity(letters.len());
    while out.len() < letters.len() {
        let mut seen = 0u64;
        let mut best: Option<usize> = None;
        for (j, slot) in slots.iter().enumerate() {
            let Some(s) = slot else { continue };
            if seen & gp.blockers(s.vertex) == 0 {
                let better = best.is_none_or(|b| {
                    let v = slots[b].as_ref().unwrap().vertex;
                    if reverse { s.vertex > v } else { s.vertex < v }
                });
                if better {
                    best = Some(j);
                }
            }
            seen |= 1 << s.vertex;
        }
        out.push(slots[best.unwrap()].take().unwrap());
    }
    out
}

/// Seeded sample paths with the endpoints of `geodesic`: random
/// reshufflings, the two extreme reshufflings, and random detours through
/// nearby waypoints.
fn sample_pool(gp: &GraphProduct, geodesic: &[NormalForm], budget: usize, seed: u64) -> Vec<Vec<NormalForm>> {
    let (x, y) = (&geodesic[0], geodesic.last().unwrap());
    let letters = spell_letters(gp, &gp.between(x, y));
    let mut pool = vec![
        geodesic.to_vec(),
        walk(gp, x, &extreme_extension(gp, &letters, false)),
        walk(gp, x, &extreme_extension(gp, &letters, true)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens = gp.generators();
    while pool.len() < budget.max(3) {
        if rng.gen_bool(0.25) {
            pool.push(random_geodesic(gp, x, y, &mut rng));
            continue;
        }
        let i = rng.gen_range(0..geodesic.len());
        let j = rng.gen_range(i..geodesic.len());
        let detour: Vec<Syllable> = (0..rng.gen_range(1..=3))
            .map(|_| gens[rng.gen_range(0..gens.len())].clone())
            .collect();
        let mut path = geodesic[..=i].to_vec();
        let out = walk(gp, &geodesic[i], &detour);
        path.extend(out[1..].iter().cloned());
        let back = random_geodesic(gp, out.last().unwrap(), &geodesic[j], &mut rng);
        path.extend(back[1..].iter().cloned());
        path.extend(geodesic[j + 1..].iter().cloned());
        pool.push(path);
    }
    pool
}

/// Estimates the Morse gauge of `geodesic` on a grid of quasi-geodesic
/// constants. All cells share one sample pool, so entries are monotone in
/// both constants.
pub fn morse_gauge_table(
    gp: &GraphProduct,
    geodesic: &[NormalForm],
    kc_grid: &[(u64, u64)],
    budget: usize,
    seed: u64,
) -> Result<MorseGaugeTable, MorseError> {
    if geodesic.is_empty() {
        return Err(MorseError::InvalidParameter("empty geodesic".into()));
    }
    if kc_grid.iter().any(|&(k, _)| k == 0) {
        return Err(MorseError::InvalidParameter("k must be at least 1".into()));
    }
    let pool = sample_pool(gp, geodesic, budget, seed);
    let distances: Vec<u64> = pool.par_iter().map(|p| hausdorff(gp, p, geodesic)).collect();
    let cells = kc_grid
        .par_iter()
        .map(|&(k, c)| {
            let qualifying: Vec<usize> = (0..pool.len())
                .filter(|&i| is_quasi_geodesic(gp, &pool[i], k, c))
                .collect();
            GaugeCell {
                k,
                c,
                samples: qualifying.len(),
                hausdorff: qualifying.iter().map(|&i| distances[i]).max(),
            }
        })
        .collect();
    Ok(MorseGaugeTable {
        geodesic_length: geodesic.len() - 1,
        seed,
        pool: pool.len(),
        cells,
    })
}

// ---------------------------------------------------------------------------
// Local-to-global

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalToGlobalReport {
    pub window: usize,
    pub pieces: usize,
    pub length: usize,
    pub global_fit: QgFit,
    pub cone_fit: QgFit,
}

/// Concatenates `pieces` (each starting where the previous one ends),
/// checks the local bound on every window of `window` steps, and fits the
/// whole path.
pub fn local_to_global_probe(
    gp: &GraphProduct,
    pieces: &[Vec<NormalForm>],
    window: usize,
    params: QgParams,
) -> Result<LocalToGlobalReport, MorseError> {
    if window == 0 {
        return Err(MorseError::InvalidParameter("window must be positive".into()));
    }
    let mut path: Vec<NormalForm> = Vec::new();
    for (p, piece) in pieces.iter().enumerate() {
        let Some(first) = piece.first() else {
            return Err(MorseError::InvalidParameter(format!("piece {p} is empty")));
        };
        match path.last() {
            None => path.extend(piece.iter().cloned()),
            Some(last) if last == first => path.extend(piece[1..].iter().cloned()),
            Some(_) => return Err(MorseError::Disconnected { piece: p }),
        }
    }
    if path.is_empty() {
        return Err(MorseError::InvalidParameter("no pieces".into()));
    }
    for start in 0..path.len().saturating_sub(window).max(1) {
        let end = (start + window).min(path.len() - 1);
        for i in start..=end {
            for j in i + 1..=end {
                let t = (j - i) as f64;
                let d = gp.distance(&path[i], &path[j]) as f64;
                if t / params.lambda - params.epsilon > d || d > params.lambda * t + params.epsilon {
                    return Err(MorseError::WindowViolation { start, i, j });
                }
            }
        }
    }
    let stars = vertex_stars(gp);
    let n = path.len();
    let global_fit = fit_quasi_geodesic(n, |i, j| gp.distance(&path[i], &path[j]), params);
    let cone_fit = fit_quasi_geodesic(n, |i, j| cone_distance(gp, &stars, &path[i], &path[j]), params);
    Ok(LocalToGlobalReport {
        window,
        pieces: pieces.len(),
        length: n - 1,
        global_fit,
        cone_fit,
    })
}

/// `windings` laps around a square of side `side` in ℤ², one piece per
/// side. Vertex 0 moves horizontally and vertex 1 vertically.
pub fn square_spiral(gp: &GraphProduct, side: u64, windings: usize) -> Vec<Vec<NormalForm>> {
    let gens = gp.generators();
    let step = |v: usize, sign: bool| {
        let s = gens.iter().find(|s| s.vertex == v).expect("generator").clone();
        if sign {
            s
        } else {
            let inv = gp.invert(&gp.normalize(&[s]).unwrap());
            inv.syllables()[0].clone()
        }
    };
    let sides = [(0, true), (1, true), (0, false), (1, false)];
    let mut pieces = Vec::new();
    let mut at = gp.identity();
    for _ in 0..windings {
        for &(v, sign) in &sides {
            let letters = vec![step(v, sign); side as usize];
            let piece = walk(gp, &at, &letters);
            at = piece.last().unwrap().clone();
            pieces.push(piece);
        }
    }
    pieces
}

/// A geodesic path from the identity to `x`.
pub fn geodesic_to(gp: &GraphProduct, x: &NormalForm) -> Vec<NormalForm> {
    standard_geodesic(gp, &gp.identity(), x)
}
