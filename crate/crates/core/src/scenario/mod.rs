//! Scenarios bundle structures, an optional map and sampling boxes; the
//! suite runner turns them into check reports.

mod config;
mod registry;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::chart::{Chart, Point};
use crate::error::{Error, Result};
use crate::maps::{self, MapKind, SmoothMapSpec, StructurePair};
use crate::metric::{check_metric_compatibility, check_trace_frame};
use crate::report::CheckReport;
use crate::sampling::sample_box;
use crate::structures::{self as st, ParaHermitianStructure, ParacontactStructure, StructureRef};

pub use config::{load_config, parse_config, ConfigDocument};
pub use registry::{registry, RegistryEntry};

/// A structure on one chart, keyed by its name inside a scenario.
#[derive(Debug, Clone)]
pub enum ScenarioStructure {
    Contact(ParacontactStructure),
    Hermitian(ParaHermitianStructure),
}

impl ScenarioStructure {
    pub fn as_ref(&self) -> StructureRef<'_> {
        match self {
            ScenarioStructure::Contact(s) => StructureRef::Contact(s),
            ScenarioStructure::Hermitian(s) => StructureRef::Hermitian(s),
        }
    }

    pub fn name(&self) -> &str {
        self.as_ref().name()
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.as_ref().chart()
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioMap {
    pub map: SmoothMapSpec,
    /// Index into [`Scenario::structures`].
    pub source: usize,
    pub target: usize,
    /// `None` skips the paraholomorphy checks.
    pub kind: Option<MapKind>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub structures: Vec<ScenarioStructure>,
    pub map: Option<ScenarioMap>,
    /// Sampling boxes by chart name; charts without an entry use their own
    /// domain box.
    pub domains: BTreeMap<String, Vec<(f64, f64)>>,
    /// Full check names (`"<structure or map>/<check>"`) that are known to
    /// fail and do not affect the exit code.
    pub expected_fail: BTreeSet<String>,
    pub notes: Vec<String>,
    /// Suite options stored with a config document; command-line values
    /// take precedence.
    pub defaults: PartialOptions,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialOptions {
    pub checks: Option<Vec<String>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// `None` runs every applicable check. Entries are short names
    /// (`normal`) or full names (`M2/normal`).
    pub checks: Option<Vec<String>>,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            checks: None,
            samples: 64,
            seed: 42,
            tol: crate::DEFAULT_TOL,
        }
    }
}

impl SuiteOptions {
    /// Fills unset fields from `defaults`.
    pub fn resolve(cli: &PartialOptions, defaults: &PartialOptions) -> Self {
        let base = Self::default();
        Self {
            checks: cli.checks.clone().or_else(|| defaults.checks.clone()),
            samples: cli.samples.or(defaults.samples).unwrap_or(base.samples),
            seed: cli.seed.or(defaults.seed).unwrap_or(base.seed),
            tol: cli.tol.or(defaults.tol).unwrap_or(base.tol),
        }
    }
}

/// Every check name the runner knows, per structure kind and for maps.
pub const CONTACT_CHECKS: &[&str] = &[
    "almost-paracontact",
    "compatible-metric",
    "paracontact-metric",
    "normal",
    "pq-identities",
    "para-sasakian",
    "k-paracontact",
    "classification",
    "phi-basis",
    "metric-compatibility",
    "trace-frame",
];

pub const HERMITIAN_CHECKS: &[&str] = &[
    "para-hermitian",
    "para-kahler",
    "frame-identity",
    "metric-compatibility",
    "trace-frame",
];

pub const MAP_CHECKS: &[&str] = &[
    "harmonic",
    "alpha-symmetry",
    "energy-density",
    "tension-trace-frame",
    "paraholomorphic",
    "anti-paraholomorphic",
    "tension-transfer",
    "pointwise-transfer",
    "parapluriharmonic",
    "lambda",
    "xi-orthogonal-image",
    "pluriharmonic-obstruction",
    "normality-transfer",
    "tension-vertical",
];

impl Scenario {
    pub fn new(name: impl Into<String>, structures: Vec<ScenarioStructure>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for s in &structures {
            if !seen.insert(s.name().to_string()) {
                return Err(Error::Schema {
                    path: "structures".into(),
                    message: format!("duplicate structure name `{}`", s.name()),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            structures,
            map: None,
            domains: BTreeMap::new(),
            expected_fail: BTreeSet::new(),
            notes: Vec::new(),
            defaults: PartialOptions::default(),
        })
    }

    /// Attaches `f` between the named structures. The paraholomorphy pair is
    /// inferred from the structure kinds; `sign` is `Some(±1)` or `None` to
    /// skip paraholomorphy.
    pub fn with_map(mut self, map: SmoothMapSpec, source: &str, target: &str, sign: Option<i8>) -> Result<Self> {
        let find = |label: &str, role: &str| {
            self.structures
                .iter()
                .position(|s| s.name() == label)
                .ok_or_else(|| Error::Schema {
                    path: format!("map.{role}"),
                    message: format!("no structure named `{label}`"),
                })
        };
        let si = find(source, "source")?;
        let ti = find(target, "target")?;
        let (s, t) = (&self.structures[si], &self.structures[ti]);
        if **s.chart() != **map.source() || **t.chart() != **map.target() {
            return Err(Error::Schema {
                path: "map".into(),
                message: format!(
                    "map `{}` goes `{}` → `{}` but the structures live on `{}` and `{}`",
                    map.name,
                    map.source().name,
                    map.target().name,
                    s.chart().name,
                    t.chart().name
                ),
            });
        }
        let kind = match sign {
            None => None,
            Some(sign) => {
                let pair = match (s, t) {
                    (ScenarioStructure::Contact(_), ScenarioStructure::Hermitian(_)) => StructurePair::ContactToHermitian,
                    (ScenarioStructure::Hermitian(_), ScenarioStructure::Contact(_)) => StructurePair::HermitianToContact,
                    (ScenarioStructure::Contact(_), ScenarioStructure::Contact(_)) => StructurePair::ContactToContact,
                    _ => {
                        return Err(Error::Schema {
                            path: "map".into(),
                            message: "paraholomorphy between two para-Hermitian structures is not supported".into(),
                        })
                    }
                };
                Some(MapKind { pair, sign })
            }
        };
        self.map = Some(ScenarioMap {
            map,
            source: si,
            target: ti,
            kind,
        });
        Ok(self)
    }

    pub fn with_domain(mut self, chart: &str, domain: Vec<(f64, f64)>) -> Result<Self> {
        let c = self
            .charts()
            .into_iter()
            .find(|c| c.name == chart)
            .ok_or_else(|| Error::Schema {
                path: format!("domains.{chart}"),
                message: "no such chart in this scenario".into(),
            })?;
        let inside = domain.len() == c.dim()
            && domain
                .iter()
                .zip(c.domain())
                .all(|(&(lo, hi), &(clo, chi))| clo <= lo && lo <= hi && hi <= chi);
        if !inside {
            return Err(Error::Schema {
                path: format!("domains.{chart}"),
                message: format!("sampling box {domain:?} is not inside the chart box {:?}", c.domain()),
            });
        }
        self.domains.insert(chart.to_string(), domain);
        Ok(self)
    }

    pub fn expect_fail<I: IntoIterator<Item = S>, S: Into<String>>(mut self, checks: I) -> Self {
        self.expected_fail.extend(checks.into_iter().map(Into::into));
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn structure(&self, name: &str) -> Option<&ScenarioStructure> {
        self.structures.iter().find(|s| s.name() == name)
    }

    /// Distinct charts in order of first appearance.
    pub fn charts(&self) -> Vec<Arc<Chart>> {
        let mut out: Vec<Arc<Chart>> = Vec::new();
        let from_map = self.map.iter().flat_map(|m| [m.map.source().clone(), m.map.target().clone()]);
        for c in self.structures.iter().map(|s| s.chart().clone()).chain(from_map) {
            if !out.iter().any(|o| **o == *c) {
                out.push(c);
            }
        }
        out
    }

    /// Sample points on `chart` inside its sampling box.
    pub fn sample(&self, chart: &Arc<Chart>, count: usize, seed: u64) -> Result<Vec<Point<f64>>> {
        let domain = self.domains.get(&chart.name).map(Vec::as_slice).unwrap_or(chart.domain());
        sample_box(domain, count, seed)
            .into_iter()
            .map(|c| Point::from_f64(chart, &c))
            .collect()
    }
}

/// Name resolution for built-ins: a registry name or alias.
pub fn load_scenario(name: &str) -> Result<Scenario> {
    registry()
        .into_iter()
        .find(|e| e.name == name || e.aliases.contains(&name))
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
        .and_then(|e| (e.build)())
}

/// Errors that describe the geometry at a sample point rather than the
/// input; these turn into failing reports instead of aborting the suite.
fn is_numerical(e: &Error) -> bool {
    matches!(
        e,
        Error::SingularMetric { .. }
            | Error::OutOfDomain { .. }
            | Error::PivotFailure(_)
            | Error::NotParallel { .. }
            | Error::DivisionByZero { .. }
            | Error::NonFinite { .. }
    )
}

type Job<'a> = (String, Box<dyn Fn() -> Result<CheckReport> + 'a>);

fn structure_jobs<'a>(s: &'a ScenarioStructure, pts: &'a [Point<f64>], tol: f64) -> Vec<Job<'a>> {
    let label = s.name().to_string();
    let full = |c: &str| format!("{label}/{c}");
    let mut jobs: Vec<Job<'a>> = Vec::new();
    match s {
        ScenarioStructure::Contact(c) => {
            jobs.push((full("almost-paracontact"), Box::new(move || st::check_almost_paracontact(c, pts, tol))));
            jobs.push((full("compatible-metric"), Box::new(move || st::check_compatible_metric(c, pts, tol))));
            jobs.push((full("paracontact-metric"), Box::new(move || st::check_paracontact_metric(c, pts, tol))));
            jobs.push((full("normal"), Box::new(move || st::check_normal(c, pts, tol))));
            jobs.push((full("pq-identities"), Box::new(move || st::check_pq_identities(c, pts, tol))));
            jobs.push((full("para-sasakian"), Box::new(move || st::check_para_sasakian(c, pts, tol))));
            jobs.push((full("k-paracontact"), Box::new(move || st::check_k_paracontact(c, pts, tol))));
            if c.chart().dim() == 3 {
                jobs.push((full("classification"), Box::new(move || st::check_classification(c, pts, tol))));
            }
            jobs.push((full("phi-basis"), Box::new(move || st::check_phi_basis(c, pts, tol))));
        }
        ScenarioStructure::Hermitian(h) => {
            jobs.push((full("para-hermitian"), Box::new(move || st::check_para_hermitian(h, pts, tol))));
            jobs.push((full("para-kahler"), Box::new(move || st::check_para_kahler(h, pts, tol))));
            jobs.push((full("frame-identity"), Box::new(move || maps::verify_frame_identity(h, pts, tol))));
        }
    }
    let g = s.as_ref().metric();
    let n1 = full("metric-compatibility");
    let n2 = full("trace-frame");
    jobs.push((n1.clone(), Box::new(move || check_metric_compatibility(&n1, g, pts, tol))));
    jobs.push((n2.clone(), Box::new(move || check_trace_frame(&n2, g, &[], pts, tol))));
    jobs
}

fn map_jobs<'a>(sc: &'a Scenario, m: &'a ScenarioMap, pts: &'a [Point<f64>], tol: f64) -> Vec<Job<'a>> {
    let f = &m.map;
    let src = sc.structures[m.source].as_ref();
    let tgt = sc.structures[m.target].as_ref();
    let (g1, g2) = (src.metric(), tgt.metric());
    let full = |c: &str| format!("{}/{c}", f.name);
    let mut jobs: Vec<Job<'a>> = vec![
        (full("harmonic"), Box::new(move || maps::is_harmonic(f, g1, g2, pts, tol))),
        (full("alpha-symmetry"), Box::new(move || maps::check_alpha_symmetry(f, g1, g2, pts, tol))),
        (full("energy-density"), Box::new(move || maps::check_energy_density(f, g1, g2, pts, tol))),
        (full("tension-trace-frame"), Box::new(move || maps::check_tension_trace_frame(f, src, g2, pts, tol))),
    ];
    if let StructureRef::Contact(s1) = src {
        jobs.push((full("parapluriharmonic"), Box::new(move || maps::check_parapluriharmonic(f, s1, g2, pts, tol))));
    }
    let Some(kind) = m.kind else { return jobs };
    let holo = if kind.sign > 0 { "paraholomorphic" } else { "anti-paraholomorphic" };
    jobs.push((full(holo), Box::new(move || maps::check_paraholomorphic(f, kind, src, tgt, pts, tol))));
    jobs.push((full("tension-transfer"), Box::new(move || maps::verify_tension_transfer(f, kind, src, tgt, pts, tol))));
    jobs.push((
        full("pointwise-transfer"),
        Box::new(move || maps::verify_pointwise_transfer(f, kind, src, tgt, pts, &[], tol)),
    ));
    match (src, tgt) {
        (StructureRef::Contact(s1), StructureRef::Contact(s2)) => {
            jobs.push((full("lambda"), Box::new(move || maps::check_lambda_consistency(f, s1, s2, pts, tol))));
            jobs.push((full("xi-orthogonal-image"), Box::new(move || maps::check_xi_orthogonal_image(f, s1, s2, pts, tol))));
            jobs.push((
                full("pluriharmonic-obstruction"),
                Box::new(move || maps::verify_pluriharmonic_obstruction(f, s1, s2, pts, tol)),
            ));
        }
        (StructureRef::Contact(s1), StructureRef::Hermitian(n)) if s1.chart().dim() == 3 => {
            jobs.push((
                full("normality-transfer"),
                Box::new(move || maps::verify_normality_transfer(f, s1, n, pts, None, tol)),
            ));
        }
        (StructureRef::Hermitian(n), StructureRef::Contact(s2)) => {
            jobs.push((full("tension-vertical"), Box::new(move || maps::verify_tension_vertical(f, n, s2, pts, tol))));
        }
        _ => {}
    }
    jobs
}

fn selected(selection: &Option<Vec<String>>, full: &str) -> bool {
    match selection {
        None => true,
        Some(list) => {
            let short = full.split_once('/').map_or(full, |(_, s)| s);
            list.iter().any(|c| c == full || c == short)
        }
    }
}

fn validate_selection(sc: &Scenario, selection: &Option<Vec<String>>) -> Result<()> {
    let Some(list) = selection else { return Ok(()) };
    let mut prefixes: Vec<&str> = sc.structures.iter().map(|s| s.name()).collect();
    if let Some(m) = &sc.map {
        prefixes.push(&m.map.name);
    }
    let known = |c: &str| -> bool {
        let short = match c.split_once('/') {
            Some((prefix, short)) if prefixes.contains(&prefix) => short,
            Some(_) => return false,
            None => c,
        };
        CONTACT_CHECKS.contains(&short) || HERMITIAN_CHECKS.contains(&short) || MAP_CHECKS.contains(&short)
    };
    match list.iter().find(|c| !known(c)) {
        Some(bad) => Err(Error::UnknownCheck(bad.clone())),
        None => Ok(()),
    }
}

/// Runs the selected checks; reports are sorted by check name. Output is a
/// pure function of the scenario and the options.
pub fn run_suite(sc: &Scenario, opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    validate_selection(sc, &opts.checks)?;
    if !(opts.tol.is_finite() && opts.tol >= 0.0) {
        return Err(Error::Schema {
            path: "tol".into(),
            message: format!("tolerance must be a non-negative number, got {}", opts.tol),
        });
    }
    let mut points: BTreeMap<String, Vec<Point<f64>>> = BTreeMap::new();
    for c in sc.charts() {
        points.insert(c.name.clone(), sc.sample(&c, opts.samples.max(1), opts.seed)?);
    }
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for s in &sc.structures {
        jobs.extend(structure_jobs(s, &points[&s.chart().name], opts.tol));
    }
    if let Some(m) = &sc.map {
        jobs.extend(map_jobs(sc, m, &points[&m.map.source().name], opts.tol));
    }
    let mut reports = Vec::new();
    for (name, job) in jobs.into_iter().filter(|(n, _)| selected(&opts.checks, n)) {
        let mut r = match job() {
            Ok(r) => r,
            Err(e) if is_numerical(&e) => {
                let mut r = crate::report::ResidualTracker::new(name.clone(), opts.tol);
                r.record("error", f64::INFINITY, &[]);
                r.note(format!("aborted: {e}"));
                r.finish()
            }
            Err(e) => return Err(e),
        };
        r.check = name;
        r.expected_fail = sc.expected_fail.contains(&r.check);
        reports.push(r);
    }
    reports.sort_by(|a, b| a.check.cmp(&b.check));
    Ok(reports)
}
