//! Colored simplicial complexes and polychromatic models.
//!
//! A complex is stored by its generating faces (usually the facets); the set
//! of all faces is the downward closure of the generators and is only
//! materialized on demand, since membership and facet queries never need it.
//! Models are immutable once built: every operation here is a pure read, so a
//! validated model can be shared freely across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::Group;

/// Hard limit on the size of a face whose subsets we are asked to
/// materialize; the closure of a k-face has 2^k - 1 elements.
const MAX_CLOSURE_FACE: usize = 24;

/// Structural errors: the input does not denote a model at all. Conditions
/// that denote a structure which merely fails the model invariants are
/// reported by [`Model::validate`] instead.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("face #{index} is empty")]
    EmptyFace { index: usize },
    #[error("face is empty")]
    EmptyFaceSet,
    #[error("face #{index} has {len} vertices; refusing to close faces larger than {MAX_CLOSURE_FACE}")]
    FaceTooLarge { index: usize, len: usize },
    #[error("{context} references undeclared vertex `{id}`")]
    UnknownVertex { context: String, id: String },
    #[error("vertex `{id}` is declared twice with different colors (`{first}` vs `{second}`)")]
    ConflictingColor { id: String, first: String, second: String },
    #[error("vertex `{id}` is colored `{color}`, which is not a declared agent")]
    UnknownColor { id: String, color: String },
    #[error("world name `{name}` is declared twice")]
    DuplicateWorldName { name: String },
    #[error("worlds `{first}` and `{second}` have the same vertex set")]
    DuplicateWorldFace { first: String, second: String },
    #[error("valuation names unknown world `{name}`")]
    UnknownValuationWorld { name: String },
    #[error("model declares no agents")]
    NoAgents,
    #[error("empty vertex id")]
    EmptyVertexId,
}

/// Errors raised by lookups against a model's universes.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("the empty group is not allowed here")]
    EmptyGroup,
}

/// A nonempty set of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Face(BTreeSet<String>);

impl Face {
    pub fn new<I, S>(vertices: I) -> Result<Face, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = vertices.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(ModelError::EmptyFaceSet);
        }
        Ok(Face(set))
    }

    pub fn from_set(set: BTreeSet<String>) -> Result<Face, ModelError> {
        if set.is_empty() {
            return Err(ModelError::EmptyFaceSet);
        }
        Ok(Face(set))
    }

    pub fn as_set(&self) -> &BTreeSet<String> {
        &self.0
    }

    pub fn vertices(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn is_subset(&self, other: &Face) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Vertex-set intersection; may be empty, hence not a `Face`.
    pub fn intersection(&self, other: &Face) -> BTreeSet<String> {
        self.0.intersection(&other.0).cloned().collect()
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().cloned().collect::<Vec<_>>().join(","))
    }
}

/// Smallest downward-closed set of faces containing the generators; the
/// empty set is never included. Idempotent and monotone in its argument.
pub fn downward_closure<S>(generators: &[BTreeSet<S>]) -> Result<BTreeSet<Face>, ModelError>
where
    S: Ord + Clone + Into<String>,
{
    let mut out = BTreeSet::new();
    for (index, gen) in generators.iter().enumerate() {
        if gen.is_empty() {
            return Err(ModelError::EmptyFace { index });
        }
        if gen.len() > MAX_CLOSURE_FACE {
            return Err(ModelError::FaceTooLarge { index, len: gen.len() });
        }
        let items: Vec<String> = gen.iter().cloned().map(Into::into).collect();
        let n = items.len();
        for mask in 1u32..(1u32 << n) {
            let subset: BTreeSet<String> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| items[i].clone())
                .collect();
            out.insert(Face(subset));
        }
    }
    Ok(out)
}

/// Inclusion-maximal elements of a face collection.
pub fn maximal_faces(faces: &BTreeSet<Face>) -> Vec<Face> {
    faces
        .iter()
        .filter(|f| !faces.iter().any(|g| *f != g && f.is_subset(g)))
        .cloned()
        .collect()
}

#[derive(Debug, Clone)]
enum FaceStore {
    /// The complex is the downward closure of these faces.
    Generated(Vec<Face>),
    /// The complex is exactly this set; validation checks downward closure.
    Explicit(BTreeSet<Face>),
}

/// A vertex-colored simplicial complex.
#[derive(Debug, Clone)]
pub struct Complex {
    /// Vertex id -> agent color.
    vertices: BTreeMap<String, String>,
    store: FaceStore,
}

impl Complex {
    /// A complex given by generating faces; its face set is their downward
    /// closure.
    pub fn from_generators(
        vertices: BTreeMap<String, String>,
        generators: Vec<Face>,
    ) -> Complex {
        // Deduplicate and drop generators contained in other generators;
        // neither changes the closure.
        let set: BTreeSet<Face> = generators.into_iter().collect();
        let gens = maximal_faces(&set);
        Complex { vertices, store: FaceStore::Generated(gens) }
    }

    /// A complex given by an explicit face set. Downward closure is *not*
    /// assumed; `validate` on the containing model reports the gap.
    pub fn from_faces(vertices: BTreeMap<String, String>, faces: BTreeSet<Face>) -> Complex {
        Complex { vertices, store: FaceStore::Explicit(faces) }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = (&str, &str)> {
        self.vertices.iter().map(|(id, color)| (id.as_str(), color.as_str()))
    }

    pub fn color(&self, id: &str) -> Option<&str> {
        self.vertices.get(id).map(String::as_str)
    }

    /// The color image of a vertex set, skipping unknown ids.
    pub fn colors_of<'a, I: IntoIterator<Item = &'a String>>(&self, ids: I) -> BTreeSet<&str> {
        ids.into_iter().filter_map(|id| self.color(id)).collect()
    }

    pub fn generators(&self) -> Vec<&Face> {
        match &self.store {
            FaceStore::Generated(gens) => gens.iter().collect(),
            FaceStore::Explicit(faces) => faces.iter().collect(),
        }
    }

    /// Inclusion-maximal faces.
    pub fn facets(&self) -> Vec<Face> {
        match &self.store {
            // Generators are kept inclusion-maximal by construction.
            FaceStore::Generated(gens) => {
                let mut v = gens.clone();
                v.sort();
                v
            }
            FaceStore::Explicit(faces) => maximal_faces(faces),
        }
    }

    /// Face membership. For a generated complex this is a subset test
    /// against the generators, no closure is materialized.
    pub fn contains_face(&self, face: &Face) -> bool {
        match &self.store {
            FaceStore::Generated(gens) => gens.iter().any(|g| face.is_subset(g)),
            FaceStore::Explicit(faces) => faces.contains(face),
        }
    }

    /// The full face set. Materializes the closure for generated complexes.
    pub fn all_faces(&self) -> Result<BTreeSet<Face>, ModelError> {
        match &self.store {
            FaceStore::Generated(gens) => {
                let sets: Vec<BTreeSet<String>> =
                    gens.iter().map(|f| f.as_set().clone()).collect();
                downward_closure(&sets)
            }
            FaceStore::Explicit(faces) => Ok(faces.clone()),
        }
    }

    fn downward_closure_gap(&self) -> Option<Face> {
        // A face set is downward closed iff it is closed under removing one
        // vertex at a time; returns a witness face whose sub-face is missing.
        if let FaceStore::Explicit(faces) = &self.store {
            for face in faces {
                if face.len() == 1 {
                    continue;
                }
                for v in face.vertices() {
                    let mut sub = face.as_set().clone();
                    sub.remove(v);
                    if !faces.contains(&Face(sub)) {
                        return Some(face.clone());
                    }
                }
            }
        }
        None
    }
}

/// A named world of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct World {
    pub name: String,
    pub face: Face,
}

/// How the world set of a model is specified.
#[derive(Debug, Clone)]
pub enum WorldsSpec {
    /// The worlds are exactly the facets; names default to the sorted
    /// vertex-id join.
    Facets,
    /// Explicitly named worlds.
    Named(Vec<(String, Face)>),
}

/// Default name for a world given by its face: the sorted vertex ids joined
/// with `+`.
pub fn default_world_name(face: &Face) -> String {
    face.vertices().collect::<Vec<_>>().join("+")
}

/// A polychromatic simplicial model: a colored complex, a set of worlds
/// between the facets and the faces, and a valuation on worlds.
#[derive(Debug, Clone)]
pub struct Model {
    agents: Vec<String>,
    complex: Complex,
    worlds: Vec<World>,
    valuation: Vec<BTreeSet<String>>,
    by_name: BTreeMap<String, usize>,
}

/// One rule violation found by [`Model::validate`], with a witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Stable rule identifier, e.g. `star-condition`.
    pub rule: &'static str,
    pub message: String,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    None,
    Face { face: Face },
    World { world: String },
    StarTriple { agent: String, x: String, y: String, z: String },
}

/// Outcome of structural validation; `ok()` iff no violations.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            writeln!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "{}: {}", v.rule, v.message)?;
            }
            Ok(())
        }
    }
}

impl Model {
    /// Builds a model. Referential problems (unknown ids, duplicate names,
    /// valuation keys that name no world) are construction errors; the model
    /// invariants proper are checked by [`Model::validate`].
    pub fn new(
        agents: Vec<String>,
        vertices: Vec<(String, String)>,
        complex_faces: Vec<Face>,
        worlds: WorldsSpec,
        valuation: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Model, ModelError> {
        Self::build(agents, vertices, complex_faces, false, worlds, valuation)
    }

    /// Like [`Model::new`] but treats `complex_faces` as the exact face set
    /// rather than generators, so validation can detect a complex that is
    /// not downward closed.
    pub fn with_explicit_faces(
        agents: Vec<String>,
        vertices: Vec<(String, String)>,
        faces: Vec<Face>,
        worlds: WorldsSpec,
        valuation: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Model, ModelError> {
        Self::build(agents, vertices, faces, true, worlds, valuation)
    }

    fn build(
        agents: Vec<String>,
        vertices: Vec<(String, String)>,
        complex_faces: Vec<Face>,
        explicit: bool,
        worlds: WorldsSpec,
        valuation: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Model, ModelError> {
        if agents.is_empty() {
            return Err(ModelError::NoAgents);
        }
        let mut agent_list: Vec<String> = Vec::new();
        for a in agents {
            if !agent_list.contains(&a) {
                agent_list.push(a);
            }
        }

        let mut vmap: BTreeMap<String, String> = BTreeMap::new();
        for (id, color) in vertices {
            if id.is_empty() {
                return Err(ModelError::EmptyVertexId);
            }
            if !agent_list.contains(&color) {
                return Err(ModelError::UnknownColor { id, color });
            }
            if let Some(prev) = vmap.get(&id) {
                if *prev != color {
                    return Err(ModelError::ConflictingColor {
                        id,
                        first: prev.clone(),
                        second: color,
                    });
                }
            } else {
                vmap.insert(id, color);
            }
        }

        for face in &complex_faces {
            for v in face.vertices() {
                if !vmap.contains_key(v) {
                    return Err(ModelError::UnknownVertex {
                        context: format!("face {face}"),
                        id: v.to_string(),
                    });
                }
            }
        }

        let complex = if explicit {
            Complex::from_faces(vmap, complex_faces.into_iter().collect())
        } else {
            Complex::from_generators(vmap, complex_faces)
        };

        let world_list: Vec<World> = match worlds {
            WorldsSpec::Facets => complex
                .facets()
                .into_iter()
                .map(|face| World { name: default_world_name(&face), face })
                .collect(),
            WorldsSpec::Named(list) => {
                let mut out: Vec<World> = Vec::new();
                for (name, face) in list {
                    for v in face.vertices() {
                        if !complex.vertices.contains_key(v) {
                            return Err(ModelError::UnknownVertex {
                                context: format!("world `{name}`"),
                                id: v.to_string(),
                            });
                        }
                    }
                    // Identical (name, face) pairs are deduplicated silently;
                    // clashes are errors.
                    if let Some(prev) = out.iter().find(|w| w.name == name) {
                        if prev.face == face {
                            continue;
                        }
                        return Err(ModelError::DuplicateWorldName { name });
                    }
                    if let Some(prev) = out.iter().find(|w| w.face == face) {
                        return Err(ModelError::DuplicateWorldFace {
                            first: prev.name.clone(),
                            second: name,
                        });
                    }
                    out.push(World { name, face });
                }
                out
            }
        };

        let by_name: BTreeMap<String, usize> = world_list
            .iter()
            .enumerate()
            .map(|(i, w)| (w.name.clone(), i))
            .collect();

        let mut val: Vec<BTreeSet<String>> = vec![BTreeSet::new(); world_list.len()];
        for (name, atoms) in valuation {
            match by_name.get(&name) {
                Some(&i) => val[i] = atoms,
                None => return Err(ModelError::UnknownValuationWorld { name }),
            }
        }

        Ok(Model {
            agents: agent_list,
            complex,
            worlds: world_list,
            valuation: val,
            by_name,
        })
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn complex(&self) -> &Complex {
        &self.complex
    }

    pub fn worlds(&self) -> &[World] {
        &self.worlds
    }

    pub fn world_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn world(&self, name: &str) -> Option<&World> {
        self.world_index(name).map(|i| &self.worlds[i])
    }

    pub fn world_with_face(&self, face: &Face) -> Option<&World> {
        self.worlds.iter().find(|w| &w.face == face)
    }

    /// Atoms true at the world with the given index.
    pub fn valuation(&self, world: usize) -> &BTreeSet<String> {
        &self.valuation[world]
    }

    /// Union of all atoms mentioned by the valuation.
    pub fn atom_universe(&self) -> BTreeSet<String> {
        self.valuation.iter().flatten().cloned().collect()
    }

    /// Number of vertices of the world colored with the agent.
    pub fn multiplicity(&self, agent: &str, world: &str) -> Result<usize, QueryError> {
        if self.agent_index(agent).is_none() {
            return Err(QueryError::UnknownAgent(agent.to_string()));
        }
        let w = self
            .world(world)
            .ok_or_else(|| QueryError::UnknownWorld(world.to_string()))?;
        Ok(self.multiplicity_idx(agent, &w.face))
    }

    pub(crate) fn multiplicity_idx(&self, agent: &str, face: &Face) -> usize {
        face.vertices()
            .filter(|v| self.complex.color(v) == Some(agent))
            .count()
    }

    /// Worlds whose color image contains every agent of the group. The empty
    /// group is alive everywhere.
    pub fn alive_worlds(&self, group: &Group) -> Result<Vec<&World>, QueryError> {
        for a in group {
            if self.agent_index(a).is_none() {
                return Err(QueryError::UnknownAgent(a.clone()));
            }
        }
        Ok(self
            .worlds
            .iter()
            .filter(|w| {
                let colors = self.complex.colors_of(w.face.as_set());
                group.iter().all(|a| colors.contains(a.as_str()))
            })
            .collect())
    }

    /// Whether no face carries two vertices of one color. Checked on facets;
    /// a repeated color in any face persists in the containing facet.
    pub fn is_proper(&self) -> bool {
        self.complex.facets().iter().all(|facet| {
            let mut seen = BTreeSet::new();
            facet
                .vertices()
                .filter_map(|v| self.complex.color(v))
                .all(|c| seen.insert(c))
        })
    }

    /// Checks the triangle condition that makes indistinguishability
    /// transitive: for every agent `a` and worlds X, Y, Z, if `a` colors the
    /// intersections X∩Y and Y∩Z then it colors X∩Z. Single agents suffice:
    /// a group satisfies the condition iff each of its members does.
    #[allow(clippy::needless_range_loop)] // witness reporting wants indices
    pub fn star_condition(&self) -> ValidationReport {
        let n = self.worlds.len();
        let mut report = ValidationReport::default();
        for agent in &self.agents {
            // shared[x][y] = agent colors some vertex of X∩Y
            let mut shared = vec![vec![false; n]; n];
            for x in 0..n {
                for y in 0..n {
                    let inter = self.worlds[x].face.intersection(&self.worlds[y].face);
                    shared[x][y] = inter.iter().any(|v| self.complex.color(v) == Some(agent));
                }
            }
            'triples: for x in 0..n {
                for y in 0..n {
                    if !shared[x][y] {
                        continue;
                    }
                    for z in 0..n {
                        if shared[y][z] && !shared[x][z] {
                            report.violations.push(Violation {
                                rule: "star-condition",
                                message: format!(
                                    "agent `{agent}` relates {} ~ {} and {} ~ {} but not {} ~ {}",
                                    self.worlds[x].name,
                                    self.worlds[y].name,
                                    self.worlds[y].name,
                                    self.worlds[z].name,
                                    self.worlds[x].name,
                                    self.worlds[z].name,
                                ),
                                witness: Witness::StarTriple {
                                    agent: agent.clone(),
                                    x: self.worlds[x].name.clone(),
                                    y: self.worlds[y].name.clone(),
                                    z: self.worlds[z].name.clone(),
                                },
                            });
                            // One witness per agent keeps reports readable.
                            break 'triples;
                        }
                    }
                }
            }
        }
        report
    }

    /// Full structural validation. All violations are collected, not only
    /// the first.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        if self.worlds.is_empty() {
            report.violations.push(Violation {
                rule: "empty-worlds",
                message: "model has no worlds".into(),
                witness: Witness::None,
            });
        }

        if let Some(face) = self.complex.downward_closure_gap() {
            report.violations.push(Violation {
                rule: "downward-closure",
                message: format!("face {face} has a sub-face outside the complex"),
                witness: Witness::Face { face },
            });
        }

        for facet in self.complex.facets() {
            if self.world_with_face(&facet).is_none() {
                report.violations.push(Violation {
                    rule: "facet-not-world",
                    message: format!("facet {facet} is not a world"),
                    witness: Witness::Face { face: facet },
                });
            }
        }

        for w in &self.worlds {
            if !self.complex.contains_face(&w.face) {
                report.violations.push(Violation {
                    rule: "world-not-face",
                    message: format!(
                        "world `{}` = {} is not a face of the complex",
                        w.name, w.face
                    ),
                    witness: Witness::World { world: w.name.clone() },
                });
            }
        }

        report.merge(self.star_condition());
        report
    }

    // -- JSON interchange ---------------------------------------------------

    pub fn from_json(text: &str) -> Result<Model, LoadError> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Model, LoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Model::from_json(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "agents": self.agents,
            "vertices": self
                .complex
                .vertices()
                .map(|(id, color)| serde_json::json!({"id": id, "color": color}))
                .collect::<Vec<_>>(),
            "facets": self
                .complex
                .facets()
                .iter()
                .map(|f| f.vertices().collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "worlds": self
                .worlds
                .iter()
                .map(|w| serde_json::json!({
                    "name": w.name,
                    "vertices": w.face.vertices().collect::<Vec<_>>(),
                }))
                .collect::<Vec<_>>(),
            "valuation": self
                .worlds
                .iter()
                .enumerate()
                .map(|(i, w)| (w.name.clone(), self.valuation[i].clone()))
                .collect::<BTreeMap<_, _>>(),
        })
    }
}

/// Errors turning a file into a model: I/O, malformed JSON, or a payload
/// that does not denote a model.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("\"worlds\" must be the string \"facets\" or a list of named worlds, got \"{0}\"")]
    BadWorldsKeyword(String),
}

#[derive(Debug, Deserialize)]
struct VertexEntry {
    id: String,
    color: String,
}

#[derive(Debug, Deserialize)]
struct WorldEntry {
    name: String,
    vertices: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum WorldsField {
    Keyword(String),
    List(Vec<WorldEntry>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    agents: Vec<String>,
    vertices: Vec<VertexEntry>,
    facets: Vec<Vec<String>>,
    #[serde(default)]
    worlds: Option<WorldsField>,
    #[serde(default)]
    valuation: BTreeMap<String, BTreeSet<String>>,
}

impl ModelFile {
    fn into_model(self) -> Result<Model, LoadError> {
        let vertices: Vec<(String, String)> =
            self.vertices.into_iter().map(|v| (v.id, v.color)).collect();
        let mut faces = Vec::new();
        for (index, ids) in self.facets.into_iter().enumerate() {
            if ids.is_empty() {
                return Err(ModelError::EmptyFace { index }.into());
            }
            faces.push(Face::new(ids).expect("nonempty"));
        }
        let worlds = match self.worlds {
            None => WorldsSpec::Facets,
            Some(WorldsField::Keyword(k)) if k == "facets" => WorldsSpec::Facets,
            Some(WorldsField::Keyword(k)) => return Err(LoadError::BadWorldsKeyword(k)),
            Some(WorldsField::List(list)) => {
                let mut named = Vec::new();
                for entry in list {
                    if entry.vertices.is_empty() {
                        return Err(ModelError::EmptyFaceSet.into());
                    }
                    named.push((entry.name, Face::new(entry.vertices).expect("nonempty")));
                }
                WorldsSpec::Named(named)
            }
        };
        Ok(Model::new(self.agents, vertices, faces, worlds, self.valuation)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn face(ids: &[&str]) -> Face {
        Face::new(ids.iter().copied()).unwrap()
    }

    #[test]
    fn closure_of_a_triangle_is_its_power_set_minus_empty() {
        let closed = downward_closure(&[set(&["1", "2", "3"])]).unwrap();
        let expected: BTreeSet<Face> = [
            face(&["1", "2", "3"]),
            face(&["1", "2"]),
            face(&["1", "3"]),
            face(&["2", "3"]),
            face(&["1"]),
            face(&["2"]),
            face(&["3"]),
        ]
        .into_iter()
        .collect();
        assert_eq!(closed, expected);
    }

    #[test]
    fn closure_of_a_singleton_is_itself() {
        let closed = downward_closure(&[set(&["1"])]).unwrap();
        assert_eq!(closed.len(), 1);
        assert!(closed.contains(&face(&["1"])));
    }

    #[test]
    fn closure_of_triangle_plus_edge_is_the_union_of_power_sets() {
        // 7 nonempty subsets of {1,2,3}, 3 of {3,4}, sharing {3}.
        let closed = downward_closure(&[set(&["1", "2", "3"]), set(&["3", "4"])]).unwrap();
        assert_eq!(closed.len(), 9);
        assert!(closed.contains(&face(&["3", "4"])));
        assert!(closed.contains(&face(&["4"])));
        assert!(closed.contains(&face(&["1", "2", "3"])));
    }

    #[test]
    fn closure_rejects_empty_generators_by_index() {
        let err = downward_closure(&[set(&["1"]), BTreeSet::<String>::new()]).unwrap_err();
        assert!(matches!(err, ModelError::EmptyFace { index: 1 }));
    }

    #[test]
    fn facets_of_example_complex() {
        let closed = downward_closure(&[set(&["1", "2", "3"]), set(&["3", "4"])]).unwrap();
        let maximal = maximal_faces(&closed);
        assert_eq!(maximal, vec![face(&["1", "2", "3"]), face(&["3", "4"])]);
    }

    #[test]
    fn chain_facets_are_the_three_edges() {
        let closed =
            downward_closure(&[set(&["0", "1"]), set(&["1", "2"]), set(&["2", "3"])]).unwrap();
        let maximal = maximal_faces(&closed);
        assert_eq!(
            maximal,
            vec![face(&["0", "1"]), face(&["1", "2"]), face(&["2", "3"])]
        );
    }

    fn chain_model() -> Model {
        Model::new(
            vec!["a".into()],
            vec![
                ("0".into(), "a".into()),
                ("1".into(), "a".into()),
                ("2".into(), "a".into()),
                ("3".into(), "a".into()),
            ],
            vec![face(&["0", "1"]), face(&["1", "2"]), face(&["2", "3"])],
            WorldsSpec::Named(vec![
                ("X".into(), face(&["0", "1"])),
                ("Y".into(), face(&["1", "2"])),
                ("Z".into(), face(&["2", "3"])),
            ]),
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn chain_model_fails_star_condition_with_the_expected_witness() {
        let report = chain_model().validate();
        assert!(!report.ok());
        let star: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.rule == "star-condition")
            .collect();
        assert_eq!(star.len(), 1);
        assert_eq!(
            star[0].witness,
            Witness::StarTriple {
                agent: "a".into(),
                x: "X".into(),
                y: "Y".into(),
                z: "Z".into(),
            }
        );
    }

    #[test]
    fn properly_colored_models_satisfy_the_star_condition() {
        let m = Model::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                ("va".into(), "a".into()),
                ("vb".into(), "b".into()),
                ("vc1".into(), "c".into()),
                ("vc2".into(), "c".into()),
            ],
            vec![face(&["va", "vb", "vc1"]), face(&["va", "vb", "vc2"])],
            WorldsSpec::Facets,
            BTreeMap::new(),
        )
        .unwrap();
        assert!(m.is_proper());
        assert!(m.star_condition().ok());
        assert!(m.validate().ok());
    }

    #[test]
    fn missing_facet_in_world_set_is_reported() {
        let m = Model::new(
            vec!["a".into()],
            vec![("0".into(), "a".into()), ("1".into(), "a".into()), ("2".into(), "a".into())],
            vec![face(&["0", "1"]), face(&["2"])],
            WorldsSpec::Named(vec![("X".into(), face(&["0", "1"]))]),
            BTreeMap::new(),
        )
        .unwrap();
        let report = m.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| v.rule == "facet-not-world"
                && v.witness == Witness::Face { face: face(&["2"]) }));
    }

    #[test]
    fn world_that_is_no_face_is_reported() {
        let m = Model::new(
            vec!["a".into()],
            vec![("0".into(), "a".into()), ("1".into(), "a".into()), ("2".into(), "a".into())],
            vec![face(&["0", "1"]), face(&["2"])],
            WorldsSpec::Named(vec![
                ("X".into(), face(&["0", "1"])),
                ("W".into(), face(&["0", "2"])),
                ("V".into(), face(&["2"])),
            ]),
            BTreeMap::new(),
        )
        .unwrap();
        let report = m.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| v.rule == "world-not-face" && v.witness == Witness::World { world: "W".into() }));
    }

    #[test]
    fn explicit_face_set_must_be_downward_closed() {
        let m = Model::with_explicit_faces(
            vec!["a".into()],
            vec![("0".into(), "a".into()), ("1".into(), "a".into())],
            vec![face(&["0", "1"])],
            WorldsSpec::Named(vec![("X".into(), face(&["0", "1"]))]),
            BTreeMap::new(),
        )
        .unwrap();
        let report = m.validate();
        assert!(report.violations.iter().any(|v| v.rule == "downward-closure"));
    }

    #[test]
    fn zero_worlds_is_rejected_by_validate() {
        let m = Model::new(
            vec!["a".into()],
            vec![("0".into(), "a".into())],
            vec![],
            WorldsSpec::Facets,
            BTreeMap::new(),
        )
        .unwrap();
        assert!(m.validate().violations.iter().any(|v| v.rule == "empty-worlds"));
    }

    #[test]
    fn multiplicity_counts_colored_vertices() {
        let m = Model::new(
            vec!["a".into(), "b".into()],
            vec![
                ("1".into(), "a".into()),
                ("2".into(), "a".into()),
                ("3".into(), "b".into()),
            ],
            vec![face(&["1", "2", "3"])],
            WorldsSpec::Named(vec![
                ("X".into(), face(&["1", "2", "3"])),
                ("Y".into(), face(&["1", "3"])),
            ]),
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(m.multiplicity("a", "X").unwrap(), 2);
        assert_eq!(m.multiplicity("a", "Y").unwrap(), 1);
        assert_eq!(m.multiplicity("b", "Y").unwrap(), 1);
        assert_eq!(
            m.multiplicity("z", "X").unwrap_err(),
            QueryError::UnknownAgent("z".into())
        );
        assert_eq!(
            m.multiplicity("a", "V").unwrap_err(),
            QueryError::UnknownWorld("V".into())
        );
        // Alive iff multiplicity is at least one.
        let alive_a = m.alive_worlds(&crate::syntax::group(["a"])).unwrap();
        assert_eq!(alive_a.len(), 2);
        assert!(!m.is_proper());
    }

    #[test]
    fn duplicate_worlds_and_valuations_are_policed() {
        let mk = |worlds: WorldsSpec, val: BTreeMap<String, BTreeSet<String>>| {
            Model::new(
                vec!["a".into()],
                vec![("0".into(), "a".into()), ("1".into(), "a".into())],
                vec![face(&["0", "1"])],
                worlds,
                val,
            )
        };
        // Same vertex set under two names is rejected.
        let err = mk(
            WorldsSpec::Named(vec![
                ("X".into(), face(&["0", "1"])),
                ("Y".into(), face(&["0", "1"])),
            ]),
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::DuplicateWorldFace { .. }));
        // Identical duplicate entries collapse silently.
        let m = mk(
            WorldsSpec::Named(vec![
                ("X".into(), face(&["0", "1"])),
                ("X".into(), face(&["0", "1"])),
            ]),
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(m.worlds().len(), 1);
        // Valuation keys must name worlds.
        let err = mk(
            WorldsSpec::Facets,
            [("nope".to_string(), BTreeSet::new())].into_iter().collect(),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::UnknownValuationWorld { .. }));
    }

    #[test]
    fn json_roundtrip_with_default_worlds() {
        let m = Model::from_json(
            r#"{
                "agents": ["a", "b"],
                "vertices": [
                    {"id": "u", "color": "a"},
                    {"id": "v", "color": "b"}
                ],
                "facets": [["u", "v"]]
            }"#,
        )
        .unwrap();
        assert_eq!(m.worlds().len(), 1);
        assert_eq!(m.worlds()[0].name, "u+v");
        assert!(m.validate().ok());

        let err = Model::from_json("{ not json").unwrap_err();
        assert!(matches!(err, LoadError::Json(_)));

        let err = Model::from_json(
            r#"{"agents":["a"],"vertices":[{"id":"u","color":"a"}],"facets":[["u"]],"worlds":"everything"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, LoadError::BadWorldsKeyword(_)));
    }

    proptest! {
        // Random generator sets over a small vertex pool.
        #[test]
        fn closure_is_idempotent_monotone_and_avoids_empty(
            gens in proptest::collection::vec(
                proptest::collection::btree_set(prop::sample::select(vec!["0","1","2","3","4"]), 1..=4),
                1..4,
            ),
            extra in proptest::collection::btree_set(prop::sample::select(vec!["0","1","2","3","4"]), 1..=4),
        ) {
            let gens: Vec<BTreeSet<String>> =
                gens.into_iter().map(|g| g.into_iter().map(String::from).collect()).collect();
            let closed = downward_closure(&gens).unwrap();
            prop_assert!(closed.iter().all(|f| !f.as_set().is_empty()));

            // Idempotent: closing the closure adds nothing.
            let again = downward_closure(
                &closed.iter().map(|f| f.as_set().clone()).collect::<Vec<_>>(),
            ).unwrap();
            prop_assert_eq!(&again, &closed);

            // Monotone: adding a generator only grows the closure.
            let mut bigger = gens.clone();
            bigger.push(extra.into_iter().map(String::from).collect());
            let closed_bigger = downward_closure(&bigger).unwrap();
            prop_assert!(closed.is_subset(&closed_bigger));
        }

        // Facets must coincide with a brute-force pairwise inclusion scan.
        #[test]
        fn facets_match_bruteforce_maximality(
            gens in proptest::collection::vec(
                proptest::collection::btree_set(prop::sample::select(vec!["0","1","2","3","4","5"]), 1..=4),
                1..5,
            ),
        ) {
            let gens: Vec<BTreeSet<String>> =
                gens.into_iter().map(|g| g.into_iter().map(String::from).collect()).collect();
            let closed = downward_closure(&gens).unwrap();
            let brute: BTreeSet<Face> = closed
                .iter()
                .filter(|f| !closed.iter().any(|g| *f != g && f.is_subset(g)))
                .cloned()
                .collect();

            let vertices: BTreeMap<String, String> = gens
                .iter()
                .flatten()
                .map(|v| (v.clone(), "a".to_string()))
                .collect();
            let faces: Vec<Face> = gens.iter().cloned().map(|g| Face::from_set(g).unwrap()).collect();
            let complex = Complex::from_generators(vertices, faces);
            let facets: BTreeSet<Face> = complex.facets().into_iter().collect();
            prop_assert_eq!(facets, brute);

            // Every face of the closure is below some facet.
            for f in &closed {
                prop_assert!(complex.contains_face(f));
            }
        }
    }
}
