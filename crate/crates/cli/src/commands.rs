use std::fs;
use std::path::{Path, PathBuf};

use fraisse_core::algebra::{
    automorphisms, closure_violation, congruence_lattice, filtered_boolean_power, is_simple, malcev_term_exists,
    BooleanPowerSpace, ClosureViolation, FinAlgebra, DEFAULT_AUT_CAP, DEFAULT_CLONE_CAP,
};
use fraisse_core::autgroup::{cycle_cover_instance, marked_instance, verify_transconj, BlockSpec, TransconjInstance, DEFAULT_D_CAP};
use fraisse_core::gen::rng;
use fraisse_core::io::{parse, to_dot, LoadError, MapDoc, StructureDoc};
use fraisse_core::maps::{
    coinitial_cover, default_size_cap, f_cover, find_epimorphism, jpp_witness, pap_witness, Amalgam, DEFAULT_BUDGET,
};
use fraisse_core::spirals::{make_spiral, spiral_cover_map, spiral_cover_of_digraph, spiral_qp_labelling, surj_qp_cover};
use fraisse_core::structures::{expand_constants, in_family, Violation};
use fraisse_core::tower::{grow, GrowReport, GrowStatus, Task, Tower, DEFAULT_STAGE_GUARD};
use fraisse_core::{Error, Family, FinGroup, FinStructure, GroupAction, Labelling, SearchOutcome, StructMap};
use serde::{Deserialize, Serialize};

use crate::docs::{AmalgamDoc, Certificate, InstanceDoc, QpDoc, TaskDoc, TasksDoc, TowerDoc};
use crate::{AlgebraSource, AmalgamateCmd, Command, QpCmd, SpiralCmd, TowerCmd, TransconjCmd};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}: {source}")]
    Load { path: String, source: LoadError },
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Core(Error::CapExceeded(_)) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Text for stdout, the exit code and an optional line for stderr.
pub struct Reply {
    pub text: String,
    pub code: u8,
    pub note: Option<String>,
}

fn reply(text: String, code: u8) -> Reply {
    Reply { text, code, note: None }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialise");
    s.push('\n');
    s
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Read { path: path.display().to_string(), message: e.to_string() })
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    parse(&read(path)?).map_err(|source| CliError::Load { path: path.display().to_string(), source })
}

fn load_structure(path: &Path) -> CliResult<FinStructure> {
    Ok(load::<StructureDoc>(path)?.to_structure()?)
}

fn load_map(path: &Path) -> CliResult<StructMap> {
    Ok(load::<MapDoc>(path)?.to_map()?)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Write { path: path.display().to_string(), message: e.to_string() })
}

fn group(name: &str) -> CliResult<FinGroup> {
    Ok(FinGroup::preset(name)?)
}

/// Printed when a search finds nothing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Miss {
    pub found: bool,
    pub status: String,
}

fn settle<T>(outcome: SearchOutcome<T>, found: impl FnOnce(T) -> CliResult<String>) -> CliResult<Reply> {
    match outcome {
        SearchOutcome::Found(w) => Ok(reply(found(w)?, 0)),
        SearchOutcome::NoWitness => Ok(reply(json(&Miss { found: false, status: "no witness".into() }), 1)),
        SearchOutcome::Exhausted => Ok(Reply {
            text: json(&Miss { found: false, status: "cap exhausted".into() }),
            code: 3,
            note: Some("search cap exhausted; raise --cap".into()),
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckDoc {
    pub family: Family,
    pub member: bool,
    pub violation: Option<Violation>,
    pub message: String,
}

pub fn run(cmd: &Command) -> CliResult<Reply> {
    match cmd {
        Command::Check { family, input } => {
            let s = load_structure(input)?;
            let report = in_family(&s, *family);
            let message = match &report.violation {
                Some(v) => v.to_string(),
                None => format!("member of {family}"),
            };
            let code = if report.member { 0 } else { 1 };
            Ok(reply(json(&CheckDoc { family: *family, member: report.member, violation: report.violation, message }), code))
        }
        Command::Epi { input, to, cap } => {
            let (a, b) = (load_structure(input)?, load_structure(to)?);
            let found = find_epimorphism(&a, &b, cap.unwrap_or(DEFAULT_BUDGET))?;
            settle(found, |phi| Ok(json(&Certificate::Epimorphism(MapDoc::from_map(&phi)?))))
        }
        Command::Amalgamate(sub) => amalgamate(sub),
        Command::Spiral(sub) => spiral(sub),
        Command::Qp(sub) => qp(sub),
        Command::Algebra { source, cap } => algebra(source, cap.unwrap_or(DEFAULT_CLONE_CAP)),
        Command::Power { source, points, marked, pins } => power(source, *points, marked, pins),
        Command::Transconj(TransconjCmd::Demo { preset, seed, cap, dot, certificate }) => {
            transconj_demo(preset, *seed, cap.unwrap_or(DEFAULT_D_CAP), *dot, certificate.as_deref())
        }
        Command::Tower(sub) => tower(sub),
        Command::Verify { input, cap } => {
            let cert: Certificate = load(input)?;
            let v = cert.verify(cap.unwrap_or(DEFAULT_D_CAP))?;
            let code = if v.valid { 0 } else { 1 };
            Ok(reply(json(&v), code))
        }
    }
}

fn amalgam_doc(w: &Amalgam, family: Family, base: Option<(&StructMap, &StructMap)>) -> CliResult<String> {
    let (phi1, phi2) = match base {
        Some((a, b)) => (Some(MapDoc::from_map(a)?), Some(MapDoc::from_map(b)?)),
        None => (None, None),
    };
    let doc = AmalgamDoc { family, phi1, phi2, psi1: MapDoc::from_map(&w.psi1)?, psi2: MapDoc::from_map(&w.psi2)? };
    Ok(json(&Certificate::Amalgam(doc)))
}

fn amalgamate(cmd: &AmalgamateCmd) -> CliResult<Reply> {
    match cmd {
        AmalgamateCmd::Pap { phi1, phi2, family, cap } => {
            let (phi1, phi2) = (load_map(phi1)?, load_map(phi2)?);
            let cap = cap.unwrap_or_else(|| default_size_cap(phi1.domain(), phi2.domain()));
            let found = pap_witness(&phi1, &phi2, *family, cap)?;
            settle(found, |w| amalgam_doc(&w, *family, Some((&phi1, &phi2))))
        }
        AmalgamateCmd::Jpp { a1, a2, family, cap } => {
            let (a1, a2) = (load_structure(a1)?, load_structure(a2)?);
            let cap = cap.unwrap_or_else(|| default_size_cap(&a1, &a2));
            let found = jpp_witness(&a1, &a2, *family, cap)?;
            settle(found, |w| amalgam_doc(&w, *family, None))
        }
        AmalgamateCmd::Cover { input, family, cap } => {
            let s = load_structure(input)?;
            let found = coinitial_cover(&s, *family, cap.unwrap_or(4096))?;
            settle(found, |phi| Ok(json(&Certificate::Epimorphism(MapDoc::from_map(&phi)?))))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpiralUnionDoc {
    /// `(p, q, r)` of each component.
    pub components: Vec<(usize, usize, usize)>,
    pub offsets: Vec<usize>,
    pub cover: Certificate,
}

fn image_labels(phi: &StructMap) -> Vec<String> {
    (0..phi.domain().size()).map(|v| format!("↦ {}", phi.codomain().name(phi.apply(v)))).collect()
}

fn spiral(cmd: &SpiralCmd) -> CliResult<Reply> {
    match *cmd {
        SpiralCmd::Make { p, q, r, dot } => {
            let s = make_spiral(p, q, r)?;
            let text = if dot { to_dot(s.structure(), None) } else { json(&StructureDoc::from(s.structure())) };
            Ok(reply(text, 0))
        }
        SpiralCmd::Cover { t, p, q, r, dot } => {
            let phi = spiral_cover_map(t, p, q, r)?;
            let text = if dot {
                to_dot(phi.domain(), Some(&image_labels(&phi)))
            } else {
                json(&Certificate::Epimorphism(MapDoc::from_map(&phi)?))
            };
            Ok(reply(text, 0))
        }
        SpiralCmd::DigraphCover { ref input, relation, dot } => {
            let s = load_structure(input)?;
            if relation == 0 || relation > s.m() {
                return Err(CliError::Usage(format!("--relation must lie in 1..={}", s.m())));
            }
            let u = spiral_cover_of_digraph(&s, relation - 1)?;
            if dot {
                return Ok(reply(to_dot(u.map.domain(), Some(&image_labels(&u.map))), 0));
            }
            let doc = SpiralUnionDoc {
                components: u.components.iter().map(|c| c.params()).collect(),
                offsets: u.offsets.clone(),
                cover: Certificate::Epimorphism(MapDoc::from_map(&u.map)?),
            };
            Ok(reply(json(&doc), 0))
        }
    }
}

fn qp(cmd: &QpCmd) -> CliResult<Reply> {
    match cmd {
        QpCmd::Spiral { p, q, r, group: name, t, x0, alpha, seed } => {
            let g = group(name)?;
            let base = make_spiral(*p, *q, *r)?;
            let mut rng = rng(*seed);
            let lambda = Labelling::random(base.size(), 1, &g, &mut rng);
            let w = spiral_qp_labelling(&base, &lambda, 0, &g, t.unwrap_or(g.exponent()), *x0, alpha.unwrap_or(g.identity()))?;
            Ok(reply(json(&Certificate::Qp(QpDoc::from_witness(&w, None)?)), 0))
        }
        QpCmd::Cover { input, group: name, seed } => {
            let g = group(name)?;
            let a = load_structure(input)?;
            let mut rng = rng(*seed);
            let lambda = Labelling::random(a.size(), a.m(), &g, &mut rng);
            let cover = surj_qp_cover(&a, &lambda, &g)?;
            let blocks = cover.blocks.iter().map(|b| (b.start, b.end)).collect();
            Ok(reply(json(&Certificate::Qp(QpDoc::from_witness(&cover.witness, Some(blocks))?)), 0))
        }
    }
}

fn load_algebra(source: &AlgebraSource) -> CliResult<FinAlgebra> {
    match (&source.preset, &source.input) {
        (Some(name), _) => Ok(FinAlgebra::preset(name)?),
        (None, Some(path)) => Ok(load::<FinAlgebra>(path)?.validated()?),
        (None, None) => Err(CliError::Usage("give --preset or --in".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraDoc {
    pub size: usize,
    pub arities: Vec<usize>,
    pub idempotents: Vec<usize>,
    pub simple: Option<bool>,
    /// Each congruence as block labels.
    pub congruences: Vec<Vec<usize>>,
    /// `m(x, y, z)` in lexicographic order of `(x, y, z)`.
    pub malcev: Option<Vec<usize>>,
    pub malcev_status: String,
    pub automorphisms: Option<usize>,
}

fn algebra(source: &AlgebraSource, clone_cap: usize) -> CliResult<Reply> {
    let a = load_algebra(source)?;
    let (malcev, status, code) = match malcev_term_exists(&a, clone_cap) {
        SearchOutcome::Found(t) => (Some(t), "found", 0),
        SearchOutcome::NoWitness => (None, "none", 0),
        SearchOutcome::Exhausted => (None, "cap exhausted", 3),
    };
    let doc = AlgebraDoc {
        size: a.size(),
        arities: a.ops().iter().map(|o| o.arity).collect(),
        idempotents: a.idempotents(),
        simple: if a.size() >= 2 { Some(is_simple(&a)?) } else { None },
        congruences: congruence_lattice(&a).iter().map(|p| p.labels().to_vec()).collect(),
        malcev,
        malcev_status: status.into(),
        automorphisms: automorphisms(&a, DEFAULT_AUT_CAP).ok().map(|g| g.order()),
    };
    Ok(reply(json(&doc), code))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PowerDoc {
    Closed { size: usize, functions: Vec<Vec<usize>> },
    Violation { point: usize, pin: usize, violation: Option<ClosureViolation> },
}

fn power(source: &AlgebraSource, points: usize, marked: &[usize], pins: &[usize]) -> CliResult<Reply> {
    let a = load_algebra(source)?;
    let space = BooleanPowerSpace::new(points, marked.to_vec(), pins.to_vec())?;
    match filtered_boolean_power(&a, &space) {
        Ok(p) => Ok(reply(json(&PowerDoc::Closed { size: p.functions.len(), functions: p.functions }), 0)),
        Err(Error::NonIdempotentPin { point, element }) => {
            let violation = closure_violation(&a, &space);
            Ok(reply(json(&PowerDoc::Violation { point, pin: element, violation }), 1))
        }
        Err(e) => Err(e.into()),
    }
}

fn transconj_preset(name: &str, seed: u64) -> CliResult<(String, TransconjInstance)> {
    let mut rng = rng(seed);
    let cycle = |action: &str, p: usize, q: usize, r: usize, rng: &mut _| -> CliResult<(String, TransconjInstance)> {
        let action = GroupAction::preset(action)?;
        let lambda = Labelling::random(p + q + r - 2, 1, action.group(), rng);
        Ok((format!("cycle cover over S({p},{q},{r})"), cycle_cover_instance(p, q, r, &action, &lambda, 1)?))
    };
    match name {
        "z2-spiral" => cycle("z2-flip", 2, 1, 2, &mut rng),
        "z2-transposition-spiral" => cycle("z2-transposition", 2, 2, 2, &mut rng),
        "z3-spiral" => cycle("z3-rotation", 2, 1, 2, &mut rng),
        "s3-spiral" => cycle("s3-natural", 2, 1, 2, &mut rng),
        "z2-marked" => {
            let action = GroupAction::preset("z2-flip")?;
            let b1 = BlockSpec { p: 2, q: 1, r: 2, lambda: Labelling::random(3, 1, action.group(), &mut rng), ell: 1 };
            let b2 = BlockSpec { p: 2, q: 2, r: 2, lambda: Labelling::random(4, 1, action.group(), &mut rng), ell: 1 };
            Ok(("marked point plus blocks over S(2,1,2) and S(2,2,2)".into(), marked_instance(&action, 0, [&b1, &b2])?))
        }
        other => Err(CliError::Usage(format!(
            "unknown preset `{other}`; expected z2-spiral, z2-transposition-spiral, z3-spiral, s3-spiral or z2-marked"
        ))),
    }
}

fn transconj_demo(preset: &str, seed: u64, cap: usize, dot: bool, certificate: Option<&Path>) -> CliResult<Reply> {
    let (shape, inst) = transconj_preset(preset, seed)?;
    let doc = Certificate::Transconj(InstanceDoc::from_instance(&inst)?);
    if let Some(path) = certificate {
        write(path, &json(&doc))?;
    }
    if dot {
        let labels: Vec<String> = (0..inst.q.size()).map(|v| format!("μ = {}", inst.mu.scalar_at(v))).collect();
        return Ok(reply(to_dot(&inst.q, Some(&labels)), 0));
    }
    let space = inst.space(cap)?;
    let (c, report) = verify_transconj(&inst, &space)?;
    let g = inst.action.group();
    let mut lines = vec![
        format!("instance {}", serde_json::to_string(&doc).expect("documents serialise")),
        format!("shape: {shape}"),
        format!("group of order {} acting on {} points", g.order(), inst.action.degree()),
        format!("X has {} points, {} marked; Q has {} vertices over {} blocks", inst.x_size, inst.marked.len(), inst.q.size(), inst.blocks.size()),
        format!("λ per block and relation: {:?}", inst.lambda().values),
        format!("μ on Q: {:?}", inst.mu.values.iter().map(|v| v[0]).collect::<Vec<_>>()),
        format!("ψ: X → Q is {:?}", inst.psi),
        "checked: ψ is a homomorphism, φ2 ∘ ψ is the projection, QP holds on Q".to_string(),
    ];
    if let fraisse_core::autgroup::AutElement::Khat(values) = &c {
        lines.push(format!("conjugator c acts at each point of X by {values:?}"));
    }
    for (i, ok) in report.per_relation.iter().enumerate() {
        let verdict = if *ok { "holds" } else { "FAILS" };
        lines.push(format!("relation {}: a_{0} h̄_{0} = c⁻¹ h̄_{0} c {verdict} on all {} functions", i + 1, report.functions));
    }
    let code = if report.holds() {
        lines.push(format!("identity verified over {} functions", report.functions));
        0
    } else {
        lines.push(format!("identity failed over {} functions", report.functions));
        1
    };
    Ok(reply(lines.join("\n") + "\n", code))
}

/// The scripted run: three universality and three extension tasks over
/// the F-example with one constant.
fn demo_tasks() -> CliResult<TasksDoc> {
    let f = FinStructure::two_point_f_example();
    let seed = expand_constants(&f, 1)?;
    let (double, _) = FinStructure::disjoint_union(&[&f, &f])?;
    let targets = [
        expand_constants(&double, 1)?,
        expand_constants(f_cover(&FinStructure::directed_cycle(2))?.domain(), 1)?,
        expand_constants(f_cover(&FinStructure::directed_cycle(1))?.domain(), 1)?,
    ];
    let id = StructMap::identity(&seed);
    let onto_seed = |b: &FinStructure| -> CliResult<StructMap> {
        find_epimorphism(b, &seed, DEFAULT_BUDGET)?
            .found()
            .ok_or_else(|| CliError::Usage("demo target does not map onto the seed".into()))
    };
    let mut tasks: Vec<Task> = targets.iter().map(|t| Task::Universality { target: t.clone() }).collect();
    tasks.push(Task::Extension { stage: 0, phi1: id.clone(), phi2: id.clone() });
    tasks.push(Task::Extension { stage: 0, phi1: id.clone(), phi2: onto_seed(&targets[0])? });
    tasks.push(Task::Extension { stage: 0, phi1: id, phi2: onto_seed(&targets[1])? });
    Ok(TasksDoc { seed: (&seed).into(), tasks: tasks.iter().map(TaskDoc::from_task).collect::<Result<_, _>>()? })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowDoc {
    #[serde(flatten)]
    pub report: GrowReport,
    pub constant_threads: Vec<usize>,
}

fn tower_doc(t: &Tower) -> CliResult<TowerDoc> {
    Ok(TowerDoc {
        stages: t.stages().iter().map(StructureDoc::from).collect(),
        bonds: t.bonds().iter().map(MapDoc::from_map).collect::<Result<_, _>>()?,
    })
}

fn tower(cmd: &TowerCmd) -> CliResult<Reply> {
    match cmd {
        TowerCmd::Demo => Ok(reply(json(&demo_tasks()?), 0)),
        TowerCmd::Grow { tasks, stages, cap, attempts, guard, dump, certificate } => {
            let doc: TasksDoc = load(tasks)?;
            let seed = doc.seed.to_structure()?;
            let tasks = doc.tasks.iter().map(TaskDoc::to_task).collect::<Result<Vec<_>, _>>()?;
            let mut t = Tower::with_guard(seed, guard.unwrap_or(DEFAULT_STAGE_GUARD))?;
            let report = grow(&mut t, &tasks, *stages, cap.unwrap_or(64), *attempts)?;
            let constant_threads = (0..t.height()).map(|d| t.constant_threads(d)).collect::<Result<_, _>>()?;
            if let Some(dir) = dump {
                dump_stages(&t, dir)?;
            }
            if let Some(path) = certificate {
                write(path, &json(&Certificate::Tower(tower_doc(&t)?)))?;
            }
            let code = match report.status {
                GrowStatus::Complete => 0,
                GrowStatus::Partial if report.tasks.iter().any(|r| r.last == "no witness") => 1,
                GrowStatus::Partial => 3,
            };
            Ok(reply(json(&GrowDoc { report, constant_threads }), code))
        }
    }
}

fn dump_stages(t: &Tower, dir: &PathBuf) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Write { path: dir.display().to_string(), message: e.to_string() })?;
    for (k, s) in t.stages().iter().enumerate() {
        write(&dir.join(format!("stage_{k}.json")), &json(&StructureDoc::from(s)))?;
        write(&dir.join(format!("stage_{k}.dot")), &to_dot(s, None))?;
    }
    Ok(())
}
