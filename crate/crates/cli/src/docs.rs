//! JSON documents read and written by the CLI. Every certificate carries a
//! `kind` tag so that `verify` can re-check any of them.

use fraisse_core::autgroup::{verify_transconj, TransconjInstance};
use fraisse_core::groups::CayleyTable;
use fraisse_core::io::{MapDoc, StructureDoc};
use fraisse_core::maps::check_epimorphism;
use fraisse_core::spirals::{verify_qp, QpWitness};
use fraisse_core::structures::in_family;
use fraisse_core::tower::Task;
use fraisse_core::{Error, Family, FinGroup, GroupAction, Labelling, Result, StructMap};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmalgamDoc {
    pub family: Family,
    /// The two maps being amalgamated; absent for a joint projection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<MapDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi2: Option<MapDoc>,
    pub psi1: MapDoc,
    pub psi2: MapDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QpDoc {
    pub phi: MapDoc,
    pub lambda: Labelling,
    pub mu: Labelling,
    pub group: CayleyTable,
    /// Vertex ranges `[start, end)` of the blocks `B_i`, for covers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<(usize, usize)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub x_size: usize,
    pub marked: Vec<usize>,
    pub pins: Vec<usize>,
    pub h: Vec<Vec<usize>>,
    pub blocks: StructureDoc,
    pub proj: Vec<usize>,
    pub alpha: Vec<Vec<usize>>,
    pub group: CayleyTable,
    /// `action[g]` is the permutation of `A` induced by `g`.
    pub action: Vec<Vec<usize>>,
    pub q: StructureDoc,
    pub phi2: MapDoc,
    pub mu: Labelling,
    pub psi: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDoc {
    pub stages: Vec<StructureDoc>,
    /// `bonds[k]` maps stage `k + 1` onto stage `k`.
    pub bonds: Vec<MapDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Epimorphism(MapDoc),
    Amalgam(AmalgamDoc),
    Qp(QpDoc),
    Transconj(InstanceDoc),
    Tower(TowerDoc),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskDoc {
    Universality { target: StructureDoc },
    Extension { stage: usize, phi1: MapDoc, phi2: MapDoc },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TasksDoc {
    pub seed: StructureDoc,
    pub tasks: Vec<TaskDoc>,
}

impl TaskDoc {
    pub fn to_task(&self) -> Result<Task> {
        Ok(match self {
            TaskDoc::Universality { target } => Task::Universality { target: target.to_structure()? },
            TaskDoc::Extension { stage, phi1, phi2 } => {
                Task::Extension { stage: *stage, phi1: phi1.to_map()?, phi2: phi2.to_map()? }
            }
        })
    }

    pub fn from_task(task: &Task) -> Result<Self> {
        Ok(match task {
            Task::Universality { target } => TaskDoc::Universality { target: target.into() },
            Task::Extension { stage, phi1, phi2 } => {
                TaskDoc::Extension { stage: *stage, phi1: MapDoc::from_map(phi1)?, phi2: MapDoc::from_map(phi2)? }
            }
        })
    }
}

impl QpDoc {
    pub fn from_witness(w: &QpWitness, blocks: Option<Vec<(usize, usize)>>) -> Result<Self> {
        Ok(QpDoc {
            phi: MapDoc::from_map(&w.phi)?,
            lambda: w.lambda.clone(),
            mu: w.mu.clone(),
            group: w.group.to_cayley(),
            blocks,
        })
    }

    pub fn to_witness(&self) -> Result<QpWitness> {
        let group = FinGroup::from_cayley(&self.group)?;
        let lambda = Labelling::new(self.lambda.width, self.lambda.values.clone(), &group)?;
        let mu = Labelling::new(self.mu.width, self.mu.values.clone(), &group)?;
        Ok(QpWitness { phi: self.phi.to_map()?, lambda, mu, group })
    }
}

impl InstanceDoc {
    pub fn from_instance(inst: &TransconjInstance) -> Result<Self> {
        let g = inst.action.group();
        Ok(InstanceDoc {
            x_size: inst.x_size,
            marked: inst.marked.clone(),
            pins: inst.pins.clone(),
            h: inst.h.clone(),
            blocks: (&inst.blocks).into(),
            proj: inst.proj.clone(),
            alpha: inst.alpha.clone(),
            group: g.to_cayley(),
            action: g.elements().map(|e| inst.action.perm(e).to_vec()).collect(),
            q: (&inst.q).into(),
            phi2: MapDoc::from_map(&inst.phi2)?,
            mu: inst.mu.clone(),
            psi: inst.psi.clone(),
        })
    }

    pub fn to_instance(&self) -> Result<TransconjInstance> {
        let group = FinGroup::from_cayley(&self.group)?;
        let degree = self.action.first().map_or(0, Vec::len);
        let action = GroupAction::new(group.clone(), degree, self.action.clone())?;
        let mu = Labelling::new(self.mu.width, self.mu.values.clone(), &group)?;
        if self.alpha.iter().flatten().any(|&g| g >= group.order()) {
            return Err(Error::ShapeMismatch("alpha names an element outside the group".into()));
        }
        Ok(TransconjInstance {
            x_size: self.x_size,
            marked: self.marked.clone(),
            pins: self.pins.clone(),
            h: self.h.clone(),
            blocks: self.blocks.to_structure()?,
            proj: self.proj.clone(),
            alpha: self.alpha.clone(),
            action,
            q: self.q.to_structure()?,
            phi2: self.phi2.to_map()?,
            mu,
            psi: self.psi.clone(),
        })
    }
}

/// Outcome of re-checking a certificate from scratch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: String,
    pub valid: bool,
    pub detail: String,
}

fn verdict(kind: &str, valid: bool, detail: impl Into<String>) -> Verdict {
    Verdict { kind: kind.into(), valid, detail: detail.into() }
}

fn epi_detail(phi: &StructMap, what: &str) -> Result<Option<String>> {
    Ok((!check_epimorphism(phi)?).then(|| format!("{what} is not an epimorphism")))
}

impl Certificate {
    pub fn verify(&self, d_cap: usize) -> Result<Verdict> {
        match self {
            Certificate::Epimorphism(doc) => {
                let phi = doc.to_map()?;
                Ok(match epi_detail(&phi, "the map")? {
                    Some(why) => verdict("epimorphism", false, why),
                    None => verdict("epimorphism", true, format!("epimorphism onto {} vertices", phi.codomain().size())),
                })
            }
            Certificate::Amalgam(doc) => {
                let (psi1, psi2) = (doc.psi1.to_map()?, doc.psi2.to_map()?);
                if psi1.domain() != psi2.domain() {
                    return Ok(verdict("amalgam", false, "psi1 and psi2 have different domains"));
                }
                for (phi, what) in [(&psi1, "psi1"), (&psi2, "psi2")] {
                    if let Some(why) = epi_detail(phi, what)? {
                        return Ok(verdict("amalgam", false, why));
                    }
                }
                let report = in_family(psi1.domain(), doc.family);
                if !report.member {
                    let why = report.violation.map(|v| v.to_string()).unwrap_or_default();
                    return Ok(verdict("amalgam", false, format!("amalgam not in {}: {why}", doc.family)));
                }
                if let (Some(p1), Some(p2)) = (&doc.phi1, &doc.phi2) {
                    let (phi1, phi2) = (p1.to_map()?, p2.to_map()?);
                    let left = psi1.then(&phi1);
                    let right = psi2.then(&phi2);
                    match (left, right) {
                        (Ok(l), Ok(r)) if l.map() == r.map() => {}
                        _ => return Ok(verdict("amalgam", false, "the square does not commute")),
                    }
                }
                Ok(verdict("amalgam", true, format!("amalgam of size {} in {}", psi1.domain().size(), doc.family)))
            }
            Certificate::Qp(doc) => {
                let w = doc.to_witness()?;
                let report = verify_qp(&w)?;
                if !report.holds {
                    let v = report.violation.unwrap();
                    return Ok(verdict("qp", false, format!("QP fails on edge ({}, {}) of relation {}", v.from, v.to, v.relation + 1)));
                }
                if let Some(why) = epi_detail(&w.phi, "φ")? {
                    return Ok(verdict("qp", false, why));
                }
                if let Some(blocks) = &doc.blocks {
                    let n = w.phi.domain().size();
                    let a = w.phi.codomain().size();
                    for (i, &(start, end)) in blocks.iter().enumerate() {
                        if start > end || end > n {
                            return Ok(verdict("qp", false, format!("block {} is out of range", i + 1)));
                        }
                        let mut seen = vec![vec![false; w.group.order()]; a];
                        for b in start..end {
                            seen[w.phi.apply(b)][w.mu.scalar_at(b)] = true;
                        }
                        if seen.iter().flatten().any(|&s| !s) {
                            return Ok(verdict("qp", false, format!("block {} misses some (vertex, element) pair", i + 1)));
                        }
                    }
                }
                Ok(verdict("qp", true, format!("QP holds on {} edges", report.edges_checked)))
            }
            Certificate::Transconj(doc) => {
                let inst = doc.to_instance()?;
                if let Err(e) = inst.check() {
                    return Ok(verdict("transconj", false, e.to_string()));
                }
                let space = inst.space(d_cap)?;
                let (_, report) = verify_transconj(&inst, &space)?;
                Ok(if report.holds() {
                    verdict("transconj", true, format!("identity verified over {} functions", report.functions))
                } else {
                    let i = report.per_relation.iter().position(|&b| !b).unwrap();
                    verdict("transconj", false, format!("identity fails for relation {}", i + 1))
                })
            }
            Certificate::Tower(doc) => {
                let stages = doc.stages.iter().map(StructureDoc::to_structure).collect::<Result<Vec<_>>>()?;
                let bonds = doc.bonds.iter().map(MapDoc::to_map).collect::<Result<Vec<_>>>()?;
                if stages.is_empty() || bonds.len() + 1 != stages.len() {
                    return Ok(verdict("tower", false, "expected one bond between consecutive stages"));
                }
                for (k, s) in stages.iter().enumerate() {
                    if !in_family(s, Family::Fn).member {
                        return Ok(verdict("tower", false, format!("stage {k} is not in Fn")));
                    }
                }
                for (k, b) in bonds.iter().enumerate() {
                    if b.domain() != &stages[k + 1] || b.codomain() != &stages[k] {
                        return Ok(verdict("tower", false, format!("bond {k} does not join stages {} and {k}", k + 1)));
                    }
                }
                for from in 1..stages.len() {
                    let mut map = StructMap::identity(&stages[from]);
                    for k in (0..from).rev() {
                        map = map.then(&bonds[k])?;
                        if let Some(why) = epi_detail(&map, &format!("composite {from} → {k}"))? {
                            return Ok(verdict("tower", false, why));
                        }
                    }
                }
                Ok(verdict("tower", true, format!("{} stages, all composites are epimorphisms", stages.len())))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fraisse_core::autgroup::cycle_cover_instance;
    use fraisse_core::spirals::spiral_cover_map;

    #[test]
    fn epimorphism_certificate_round_trip() {
        let phi = spiral_cover_map(2, 2, 1, 2).unwrap();
        let cert = Certificate::Epimorphism(MapDoc::from_map(&phi).unwrap());
        let text = serde_json::to_string(&cert).unwrap();
        assert!(text.starts_with(r#"{"kind":"epimorphism""#));
        let back: Certificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cert);
        assert!(back.verify(16).unwrap().valid);
    }

    #[test]
    fn instance_round_trip() {
        let action = GroupAction::preset("z2-flip").unwrap();
        let inst = cycle_cover_instance(2, 1, 2, &action, &Labelling::scalar(vec![1, 0, 1]), 1).unwrap();
        let doc = InstanceDoc::from_instance(&inst).unwrap();
        assert_eq!(doc.to_instance().unwrap(), inst);
        let v = Certificate::Transconj(doc).verify(16).unwrap();
        assert_eq!(v.detail, "identity verified over 16 functions");
    }

    #[test]
    fn bad_group_elements_are_rejected() {
        let action = GroupAction::preset("z2-flip").unwrap();
        let inst = cycle_cover_instance(2, 1, 2, &action, &Labelling::scalar(vec![0, 0, 0]), 1).unwrap();
        let mut doc = InstanceDoc::from_instance(&inst).unwrap();
        doc.alpha[0][0] = 5;
        assert!(doc.to_instance().is_err());
    }
}
