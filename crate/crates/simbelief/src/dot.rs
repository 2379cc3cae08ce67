//! Graphviz export of a model's 1-skeleton. Output is deterministic: worlds
//! sorted by name, vertices and edges sorted by id. Higher-dimensional faces
//! have no DOT equivalent and are recorded as comments on the worlds.

use std::collections::BTreeSet;

use crate::model::Model;

/// Rendered DOT text plus the node and edge counts.
#[derive(Debug, Clone)]
pub struct DotExport {
    pub text: String,
    pub nodes: usize,
    pub edges: usize,
}

/// All 2-element faces, i.e. the vertex pairs that appear together in some
/// facet.
pub fn skeleton_edges(model: &Model) -> BTreeSet<(String, String)> {
    let mut edges = BTreeSet::new();
    for facet in model.complex().facets() {
        let ids: Vec<&str> = facet.vertices().collect();
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                edges.insert((ids[i].to_string(), ids[j].to_string()));
            }
        }
    }
    edges
}

pub fn export_dot(model: &Model) -> DotExport {
    let mut out = String::from("graph simplicial_model {\n");

    let mut worlds: Vec<_> = model.worlds().iter().collect();
    worlds.sort_by(|a, b| a.name.cmp(&b.name));
    for w in worlds {
        let mults: Vec<String> = model
            .agents()
            .iter()
            .map(|a| format!("m_{a}={}", model.multiplicity(a, &w.name).expect("world exists")))
            .collect();
        out.push_str(&format!("  // world {} = {}  {}\n", w.name, w.face, mults.join(" ")));
    }

    for (id, color) in model.complex().vertices() {
        out.push_str(&format!("  \"{id}\" [label=\"{id}:{color}\"];\n"));
    }

    let edges = skeleton_edges(model);
    for (u, v) in &edges {
        out.push_str(&format!("  \"{u}\" -- \"{v}\";\n"));
    }

    out.push_str("}\n");
    DotExport {
        text: out,
        nodes: model.complex().vertex_count(),
        edges: edges.len(),
    }
}
