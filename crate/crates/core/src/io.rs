//! JSON documents for structures, maps, groups and algebras, and DOT output.

use std::fmt::Write;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::maps::{check_epimorphism, StructMap};
use crate::structures::FinStructure;

/// `{"m", "n", "vertices", "relations": [[[u, v], …], …], "constants"}`
/// with vertices referred to by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureDoc {
    pub m: usize,
    pub n: usize,
    pub vertices: Vec<String>,
    pub relations: Vec<Vec<(String, String)>>,
    #[serde(default)]
    pub constants: Vec<String>,
}

impl From<&FinStructure> for StructureDoc {
    fn from(s: &FinStructure) -> Self {
        StructureDoc {
            m: s.m(),
            n: s.n(),
            vertices: s.names().to_vec(),
            relations: s
                .relations()
                .iter()
                .map(|rel| rel.iter().map(|&(u, v)| (s.name(u).to_string(), s.name(v).to_string())).collect())
                .collect(),
            constants: s.constants().iter().map(|&c| s.name(c).to_string()).collect(),
        }
    }
}

impl StructureDoc {
    pub fn to_structure(&self) -> Result<FinStructure, Error> {
        if self.m != self.relations.len() {
            return Err(Error::InvalidStructure(format!("m = {} but {} relations given", self.m, self.relations.len())));
        }
        if self.n != self.constants.len() {
            return Err(Error::InvalidStructure(format!("n = {} but {} constants given", self.n, self.constants.len())));
        }
        let index = |name: &str| {
            self.vertices
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::InvalidStructure(format!("unknown vertex `{name}`")))
        };
        let relations = self
            .relations
            .iter()
            .map(|rel| rel.iter().map(|(u, v)| Ok((index(u)?, index(v)?))).collect::<Result<Vec<_>, Error>>())
            .collect::<Result<Vec<_>, Error>>()?;
        let constants = self.constants.iter().map(|c| index(c)).collect::<Result<Vec<_>, Error>>()?;
        FinStructure::with_names(self.vertices.clone(), relations, constants)
    }
}

/// A map between two structures with its verification flag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapDoc {
    pub domain: StructureDoc,
    pub codomain: StructureDoc,
    pub map: Vec<(String, String)>,
    #[serde(default)]
    pub checked: bool,
}

impl MapDoc {
    pub fn from_map(phi: &StructMap) -> Result<Self, Error> {
        let cert = phi.certificate()?;
        Ok(MapDoc {
            domain: phi.domain().into(),
            codomain: phi.codomain().into(),
            map: cert.map,
            checked: check_epimorphism(phi)?,
        })
    }

    /// Rebuilds the map; the stored `checked` flag is not trusted.
    pub fn to_map(&self) -> Result<StructMap, Error> {
        let dom = self.domain.to_structure()?;
        let cod = self.codomain.to_structure()?;
        crate::maps::Certificate { map: self.map.clone(), checked: false }.to_map(&dom, &cod)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl From<serde_json::Error> for LoadError {
    fn from(e: serde_json::Error) -> Self {
        LoadError::Json { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, LoadError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_structure(text: &str) -> Result<FinStructure, LoadError> {
    Ok(parse::<StructureDoc>(text)?.to_structure()?)
}

pub fn structure_json(s: &FinStructure) -> String {
    serde_json::to_string_pretty(&StructureDoc::from(s)).expect("serialisable")
}

const COLORS: [&str; 6] = ["black", "red", "blue", "darkgreen", "orange", "purple"];

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT rendering with nodes and edges sorted by name; one colour per
/// relation, constants drawn as double circles. `labels` adds a second
/// line to each node label.
pub fn to_dot(s: &FinStructure, labels: Option<&[String]>) -> String {
    let mut out = String::from("digraph S {\n");
    let mut nodes: Vec<usize> = (0..s.size()).collect();
    nodes.sort_by(|&a, &b| s.name(a).cmp(s.name(b)));
    for v in nodes {
        let mut attrs = Vec::new();
        if let Some(l) = labels {
            attrs.push(format!("label={}", quote(&format!("{}\\n{}", s.name(v), l[v]))));
        }
        if s.constants().contains(&v) {
            attrs.push("shape=doublecircle".to_string());
        }
        if attrs.is_empty() {
            writeln!(out, "  {};", quote(s.name(v))).unwrap();
        } else {
            writeln!(out, "  {} [{}];", quote(s.name(v)), attrs.join(", ")).unwrap();
        }
    }
    for (i, rel) in s.relations().iter().enumerate() {
        let mut edges: Vec<(&str, &str)> = rel.iter().map(|&(u, v)| (s.name(u), s.name(v))).collect();
        edges.sort();
        for (u, v) in edges {
            writeln!(
                out,
                "  {} -> {} [color={}, label=\"s{}\"];",
                quote(u),
                quote(v),
                COLORS[i % COLORS.len()],
                i + 1
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::expand_constants;

    #[test]
    fn structure_round_trip() {
        let s = expand_constants(&FinStructure::two_point_f_example(), 2).unwrap();
        let text = structure_json(&s);
        assert_eq!(parse_structure(&text).unwrap(), s);
    }

    #[test]
    fn malformed_json_has_position() {
        match parse_structure("{\n  \"m\": 1,\n  \"n\": }") {
            Err(LoadError::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_vertex_rejected() {
        let text = r#"{"m":1,"n":0,"vertices":["x"],"relations":[[["x","y"]]],"constants":[]}"#;
        assert!(matches!(parse_structure(text), Err(LoadError::Invalid(_))));
    }

    #[test]
    fn map_round_trip() {
        let phi = crate::spirals::spiral_cover_map(2, 2, 1, 2).unwrap();
        let doc = MapDoc::from_map(&phi).unwrap();
        assert!(doc.checked);
        let text = serde_json::to_string(&doc).unwrap();
        let back: MapDoc = parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_map().unwrap(), phi);
    }

    #[test]
    fn dot_is_sorted_and_marks_constants() {
        let s = expand_constants(&FinStructure::two_point_f_example(), 1).unwrap();
        let dot = to_dot(&s, None);
        assert!(dot.contains("\"p1\" [shape=doublecircle];"));
        let x = dot.find("\"x\" -> \"x\"").unwrap();
        let y = dot.find("\"x\" -> \"y\"").unwrap();
        assert!(x < y);
        assert_eq!(dot, to_dot(&s, None));
    }
}
