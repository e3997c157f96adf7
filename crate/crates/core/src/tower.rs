//! Finite towers `S_0 ← S_1 ← …` of F^(n) structures joined by
//! epimorphisms, grown by discharging universality and extension tasks.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{check_epimorphism, jpp_witness, pap_witness, Amalgam, SearchOutcome, StructMap};
use crate::structures::{connected_components, in_family, Family, FinStructure};

pub const DEFAULT_STAGE_GUARD: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    stages: Vec<FinStructure>,
    /// `bonds[k]` maps stage `k + 1` onto stage `k`.
    bonds: Vec<StructMap>,
    stage_guard: usize,
}

/// A task for the tower: universality asks for an epimorphism from some
/// stage onto `target`; extension asks, for `phi1: S_stage → A` and
/// `phi2: B → A`, for a later stage mapping onto `B` over `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Task {
    Universality { target: FinStructure },
    Extension { stage: usize, phi1: StructMap, phi2: StructMap },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Universality { .. } => "universality",
            Task::Extension { .. } => "extension",
        }
    }
}

/// Result of one discharge attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TaskOutcome {
    /// A new stage was appended; `witness` maps it onto the task's target
    /// (`A` or `B`).
    Discharged { stage: usize, witness: StructMap },
    /// The search ran out of room; the tower is unchanged.
    CapExhausted,
    /// A witness was found but exceeds the stage size guard; the tower is
    /// unchanged.
    StageGuard { size: usize },
    /// No witness exists (the amalgamation search is complete).
    NoWitness,
}

impl Tower {
    pub fn new(seed: FinStructure) -> Result<Self> {
        Self::with_guard(seed, DEFAULT_STAGE_GUARD)
    }

    pub fn with_guard(seed: FinStructure, stage_guard: usize) -> Result<Self> {
        let r = in_family(&seed, Family::Fn);
        if !r.member {
            return Err(Error::NotInFamily {
                family: "Fn".into(),
                reason: r.violation.map(|v| v.to_string()).unwrap_or_default(),
            });
        }
        Ok(Tower { stages: vec![seed], bonds: Vec::new(), stage_guard })
    }

    pub fn n(&self) -> usize {
        self.stages[0].n()
    }

    pub fn stages(&self) -> &[FinStructure] {
        &self.stages
    }

    pub fn bonds(&self) -> &[StructMap] {
        &self.bonds
    }

    pub fn top(&self) -> &FinStructure {
        self.stages.last().unwrap()
    }

    pub fn height(&self) -> usize {
        self.stages.len()
    }

    /// Composite of bonds from stage `from` down to stage `to` (`to <= from`).
    pub fn composite(&self, from: usize, to: usize) -> Result<StructMap> {
        if to > from || from >= self.stages.len() {
            return Err(Error::Precondition(format!("no composite from stage {from} to stage {to}")));
        }
        let mut map = StructMap::identity(&self.stages[from]);
        for k in (to..from).rev() {
            map = map.then(&self.bonds[k])?;
        }
        Ok(map)
    }

    fn push(&mut self, bond: StructMap) -> Result<usize> {
        debug_assert_eq!(bond.codomain(), self.top());
        self.stages.push(bond.domain().clone());
        self.bonds.push(bond);
        Ok(self.stages.len() - 1)
    }

    fn accept(&mut self, found: SearchOutcome<Amalgam>, onto_target: impl FnOnce(&Amalgam) -> StructMap) -> Result<TaskOutcome> {
        match found {
            SearchOutcome::Found(w) => {
                let size = w.structure().size();
                if size > self.stage_guard {
                    return Ok(TaskOutcome::StageGuard { size });
                }
                let witness = onto_target(&w);
                let stage = self.push(w.psi1)?;
                Ok(TaskOutcome::Discharged { stage, witness })
            }
            SearchOutcome::Exhausted => Ok(TaskOutcome::CapExhausted),
            SearchOutcome::NoWitness => Ok(TaskOutcome::NoWitness),
        }
    }

    /// Appends a stage mapping onto both the current top and `a`.
    pub fn discharge_universality(&mut self, a: &FinStructure, cap: usize) -> Result<TaskOutcome> {
        let found = jpp_witness(self.top(), a, Family::Fn, cap)?;
        self.accept(found, |w| w.psi2.clone())
    }

    /// For `phi1: S_k → A` and `phi2: B → A`, appends a stage `C` with bond
    /// `β: C → top` and `ρ: C → B` such that `phi2 ∘ ρ = phi1 ∘ (bonds) ∘ β`.
    pub fn discharge_extension(&mut self, stage: usize, phi1: &StructMap, phi2: &StructMap, cap: usize) -> Result<TaskOutcome> {
        if stage >= self.stages.len() || phi1.domain() != &self.stages[stage] {
            return Err(Error::Precondition(format!("phi1 is not defined on stage {stage}")));
        }
        let down = self.composite(self.height() - 1, stage)?;
        let lifted = down.then(phi1)?;
        let found = pap_witness(&lifted, phi2, Family::Fn, cap)?;
        self.accept(found, |w| w.psi2.clone())
    }

    pub fn discharge(&mut self, task: &Task, cap: usize) -> Result<TaskOutcome> {
        match task {
            Task::Universality { target } => self.discharge_universality(target, cap),
            Task::Extension { stage, phi1, phi2 } => self.discharge_extension(*stage, phi1, phi2, cap),
        }
    }

    /// All sequences `(v_0, …, v_depth)` with `bond(v_{j+1}) = v_j`.
    pub fn threads(&self, depth: usize) -> Result<Vec<Vec<usize>>> {
        if depth >= self.stages.len() {
            return Err(Error::Precondition(format!("depth {depth} beyond {} stages", self.stages.len())));
        }
        Ok((0..self.stages[depth].size())
            .map(|v| {
                let mut t = vec![v];
                for k in (0..depth).rev() {
                    let below = self.bonds[k].apply(*t.last().unwrap());
                    t.push(below);
                }
                t.reverse();
                t
            })
            .collect())
    }

    /// Threads passing through a constant at stage 0.
    pub fn constant_threads(&self, depth: usize) -> Result<usize> {
        let cs = self.stages[0].constants();
        Ok(self.threads(depth)?.iter().filter(|t| cs.contains(&t[0])).count())
    }

    /// Re-checks every bond, every composite, stage membership and the
    /// singleton constant components.
    pub fn check(&self) -> Result<TowerReport> {
        let mut report = TowerReport::default();
        for (k, s) in self.stages.iter().enumerate() {
            let ok = in_family(s, Family::Fn).member && {
                let comps = connected_components(s);
                s.constants().iter().all(|&c| comps.blocks()[comps.block_of(c)].len() == 1)
            };
            if !ok {
                report.bad_stages.push(k);
            }
        }
        for from in 1..self.stages.len() {
            for to in 0..from {
                if !check_epimorphism(&self.composite(from, to)?)? {
                    report.bad_composites.push((from, to));
                }
            }
        }
        report.composites_checked = self.stages.len() * (self.stages.len() - 1) / 2;
        Ok(report)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerReport {
    pub bad_stages: Vec<usize>,
    pub bad_composites: Vec<(usize, usize)>,
    pub composites_checked: usize,
}

impl TowerReport {
    pub fn ok(&self) -> bool {
        self.bad_stages.is_empty() && self.bad_composites.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowStatus {
    /// Every task was discharged.
    Complete,
    /// Stopped with tasks left: stage limit, size guard or retries used up.
    Partial,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: usize,
    pub kind: String,
    /// Stage at which the task was discharged.
    pub stage: Option<usize>,
    pub attempts: usize,
    pub last: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowReport {
    pub status: GrowStatus,
    pub tasks: Vec<TaskRecord>,
    pub stage_sizes: Vec<usize>,
}

/// Discharges tasks round-robin. A task whose search runs out of room is
/// re-queued with its cap doubled, at most `max_attempts` times; growth stops
/// after `max_stages` stages.
pub fn grow(tower: &mut Tower, tasks: &[Task], max_stages: usize, cap: usize, max_attempts: usize) -> Result<GrowReport> {
    let mut records: Vec<TaskRecord> = tasks
        .iter()
        .enumerate()
        .map(|(k, t)| TaskRecord { task: k, kind: t.kind().into(), stage: None, attempts: 0, last: "pending".into() })
        .collect();
    let mut queue: VecDeque<(usize, usize)> = (0..tasks.len()).map(|k| (k, cap)).collect();
    while let Some((k, c)) = queue.pop_front() {
        if tower.height() >= max_stages {
            records[k].last = "stage limit".into();
            continue;
        }
        records[k].attempts += 1;
        match tower.discharge(&tasks[k], c)? {
            TaskOutcome::Discharged { stage, .. } => {
                records[k].stage = Some(stage);
                records[k].last = "discharged".into();
            }
            TaskOutcome::CapExhausted => {
                records[k].last = "cap exhausted".into();
                if records[k].attempts < max_attempts {
                    queue.push_back((k, c.saturating_mul(2)));
                }
            }
            TaskOutcome::StageGuard { size } => {
                records[k].last = format!("stage guard: witness of size {size}");
                if records[k].attempts < max_attempts {
                    queue.push_back((k, c));
                }
            }
            TaskOutcome::NoWitness => records[k].last = "no witness".into(),
        }
    }
    let status = if records.iter().all(|r| r.stage.is_some()) { GrowStatus::Complete } else { GrowStatus::Partial };
    Ok(GrowReport { status, tasks: records, stage_sizes: tower.stages.iter().map(FinStructure::size).collect() })
}
