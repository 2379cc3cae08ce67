//! Vertex maps between models, the four morphism conditions, preservation
//! of positive formulas, and the search for belief gain.
//!
//! A morphism must (1) be simplicial, (2) preserve colors, (3) send worlds
//! to worlds, and (4) preserve valuations exactly. Positive formulas travel
//! backwards along morphisms: truth at the image world implies truth at the
//! source world. Safe belief does not enjoy this, and
//! [`belief_gain_witness`] looks for a concrete counterexample.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Face, LoadError, Model};
use crate::semantics::RelationTable;
use crate::syntax::{Formula, Group};

#[derive(Debug, Error)]
pub enum MorphismError {
    #[error("vertex `{0}` of the source is not mapped")]
    UnmappedVertex(String),
    #[error("vertex `{0}` is mapped to `{1}`, which the target does not declare")]
    UnknownTargetVertex(String, String),
    #[error("formula is not positive; offending subformula: {0}")]
    NotPositive(Formula),
    #[error("world `{0}` not found")]
    UnknownWorld(String),
    #[error(transparent)]
    Query(#[from] crate::model::QueryError),
}

/// A candidate morphism: a total function on the source vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexMap {
    map: BTreeMap<String, String>,
}

impl VertexMap {
    pub fn new(map: BTreeMap<String, String>) -> VertexMap {
        VertexMap { map }
    }

    /// The identity map on a model's vertices.
    pub fn identity(model: &Model) -> VertexMap {
        VertexMap {
            map: model
                .complex()
                .vertices()
                .map(|(id, _)| (id.to_string(), id.to_string()))
                .collect(),
        }
    }

    pub fn get(&self, v: &str) -> Option<&str> {
        self.map.get(v).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// `self` followed by `other`.
    pub fn compose(&self, other: &VertexMap) -> Result<VertexMap, MorphismError> {
        let mut map = BTreeMap::new();
        for (v, mid) in self.iter() {
            let out = other
                .get(mid)
                .ok_or_else(|| MorphismError::UnmappedVertex(mid.to_string()))?;
            map.insert(v.to_string(), out.to_string());
        }
        Ok(VertexMap { map })
    }

    /// Checks totality on the source vertices and that all images exist in
    /// the target.
    pub fn check_wellformed(&self, source: &Model, target: &Model) -> Result<(), MorphismError> {
        for (id, _) in source.complex().vertices() {
            match self.get(id) {
                None => return Err(MorphismError::UnmappedVertex(id.to_string())),
                Some(img) => {
                    if target.complex().color(img).is_none() {
                        return Err(MorphismError::UnknownTargetVertex(
                            id.to_string(),
                            img.to_string(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Pointwise image of a face; duplicates collapse, so the image of a
/// polychromatic face can be smaller than the face.
pub fn image_face(map: &VertexMap, face: &Face) -> Result<Face, MorphismError> {
    let mut out = std::collections::BTreeSet::new();
    for v in face.vertices() {
        let img = map
            .get(v)
            .ok_or_else(|| MorphismError::UnmappedVertex(v.to_string()))?;
        out.insert(img.to_string());
    }
    Ok(Face::from_set(out).expect("image of a nonempty face is nonempty"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MorphismWitness {
    /// A facet whose image is not a face of the target.
    NonSimplicial { face: Face },
    /// A vertex whose color changes.
    ColorClash { vertex: String, source_color: String, target_color: String },
    /// A world whose image is not a world of the target.
    WorldImageMissing { world: String, image: Face },
    /// A world whose valuation differs from its image's.
    ValuationMismatch { world: String, image: String },
}

/// Outcome of the four morphism conditions. Simpliciality is verified on
/// facets only: images of sub-faces are sub-faces of facet images, and the
/// target complex is downward closed.
#[derive(Debug, Clone, Serialize)]
pub struct MorphismReport {
    pub simplicial: bool,
    pub color_preserving: bool,
    pub worlds_to_worlds: bool,
    pub valuation_preserving: bool,
    pub witnesses: Vec<MorphismWitness>,
}

impl MorphismReport {
    pub fn is_morphism(&self) -> bool {
        self.simplicial && self.color_preserving && self.worlds_to_worlds && self.valuation_preserving
    }
}

/// Verifies the four morphism conditions; failures land in the report, only
/// an ill-formed map is an error.
pub fn check_morphism(
    source: &Model,
    target: &Model,
    map: &VertexMap,
) -> Result<MorphismReport, MorphismError> {
    map.check_wellformed(source, target)?;

    let mut report = MorphismReport {
        simplicial: true,
        color_preserving: true,
        worlds_to_worlds: true,
        valuation_preserving: true,
        witnesses: Vec::new(),
    };

    for facet in source.complex().facets() {
        let img = image_face(map, &facet)?;
        if !target.complex().contains_face(&img) {
            report.simplicial = false;
            report.witnesses.push(MorphismWitness::NonSimplicial { face: facet });
        }
    }

    for (v, color) in source.complex().vertices() {
        let img = map.get(v).expect("map is total");
        let target_color = target.complex().color(img).expect("image exists");
        if color != target_color {
            report.color_preserving = false;
            report.witnesses.push(MorphismWitness::ColorClash {
                vertex: v.to_string(),
                source_color: color.to_string(),
                target_color: target_color.to_string(),
            });
        }
    }

    for (i, w) in source.worlds().iter().enumerate() {
        let img = image_face(map, &w.face)?;
        match target.world_with_face(&img) {
            None => {
                report.worlds_to_worlds = false;
                report.witnesses.push(MorphismWitness::WorldImageMissing {
                    world: w.name.clone(),
                    image: img,
                });
            }
            Some(tw) => {
                let ti = target.world_index(&tw.name).expect("world exists");
                if source.valuation(i) != target.valuation(ti) {
                    report.valuation_preserving = false;
                    report.witnesses.push(MorphismWitness::ValuationMismatch {
                        world: w.name.clone(),
                        image: tw.name.clone(),
                    });
                }
            }
        }
    }

    Ok(report)
}

/// One instance of the statement "indistinguishable worlds have
/// indistinguishable images": X ∼_G Y implies f(X) ∼_G f(Y). Pairs that are
/// not indistinguishable satisfy it vacuously.
pub fn respects_indist(
    source: &RelationTable,
    target: &RelationTable,
    map: &VertexMap,
    group: &Group,
    x: &str,
    y: &str,
) -> Result<bool, MorphismError> {
    if !source.indist(group, x, y)? {
        return Ok(true);
    }
    let img = |name: &str| -> Result<String, MorphismError> {
        let w = source
            .model()
            .world(name)
            .ok_or_else(|| MorphismError::UnknownWorld(name.to_string()))?;
        let face = image_face(map, &w.face)?;
        let tw = target
            .model()
            .world_with_face(&face)
            .ok_or_else(|| MorphismError::UnknownWorld(format!("image of `{name}`")))?;
        Ok(tw.name.clone())
    };
    Ok(target.indist(group, &img(x)?, &img(y)?)?)
}

/// Report of a backwards-preservation sweep.
#[derive(Debug, Clone, Serialize)]
pub struct PreservationReport {
    pub formula: String,
    pub checked_worlds: usize,
    /// Source worlds where the target satisfied the formula at the image
    /// but the source did not.
    pub violations: Vec<String>,
}

impl PreservationReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// First subformula that breaks positivity, used in error messages: a belief
/// operator, or a negation/implication whose scope mentions knowledge.
fn positivity_offender(f: &Formula) -> Option<&Formula> {
    if f.is_positive() {
        return None;
    }
    for sub in f.subformulas() {
        match sub {
            Formula::SafeBelief(..)
            | Formula::DualSafeBelief(..)
            | Formula::Belief(..)
            | Formula::GroupSafeBelief(..)
            | Formula::GroupBelief(..) => return Some(sub),
            Formula::Not(_) | Formula::Implies(..) if !sub.is_propositional() => return Some(sub),
            _ => {}
        }
    }
    Some(f)
}

/// Checks that target truth at the image implies source truth, at every
/// source world. The formula must be positive.
pub fn check_positive_preservation(
    source: &RelationTable,
    target: &RelationTable,
    map: &VertexMap,
    f: &Formula,
) -> Result<PreservationReport, MorphismError> {
    if !f.is_positive() {
        let offender = positivity_offender(f).unwrap_or(f);
        return Err(MorphismError::NotPositive(offender.clone()));
    }
    let mut report = PreservationReport {
        formula: f.to_string(),
        checked_worlds: source.model().worlds().len(),
        violations: Vec::new(),
    };
    for w in source.model().worlds() {
        let img_face = image_face(map, &w.face)?;
        let img = target
            .model()
            .world_with_face(&img_face)
            .ok_or_else(|| MorphismError::UnknownWorld(format!("image of `{}`", w.name)))?;
        let target_holds = target.eval(&img.name, f)?;
        let source_holds = source.eval(&w.name, f)?;
        if target_holds && !source_holds {
            report.violations.push(w.name.clone());
        }
    }
    Ok(report)
}

/// Searches for belief gain: a world X and agent a with `Sb[a] atom` true at
/// f(X) in the target but false at X in the source. Worlds are scanned in
/// model order, agents in declared order; the first hit is returned.
pub fn belief_gain_witness(
    source: &RelationTable,
    target: &RelationTable,
    map: &VertexMap,
    atom: &str,
) -> Result<Option<(String, String)>, MorphismError> {
    for w in source.model().worlds() {
        let img_face = image_face(map, &w.face)?;
        let img = target
            .model()
            .world_with_face(&img_face)
            .ok_or_else(|| MorphismError::UnknownWorld(format!("image of `{}`", w.name)))?;
        for agent in source.model().agents() {
            if target.model().agent_index(agent).is_none() {
                continue;
            }
            let f = Formula::safe_belief(agent.clone(), Formula::atom(atom));
            if target.eval(&img.name, &f)? && !source.eval(&w.name, &f)? {
                return Ok(Some((w.name.clone(), agent.clone())));
            }
        }
    }
    Ok(None)
}

// -- map files ----------------------------------------------------------------

/// On-disk form of a vertex map: paths to the two models plus the map
/// itself. Paths are resolved relative to the map file's directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub source: String,
    pub target: String,
    pub map: BTreeMap<String, String>,
}

impl MapFile {
    pub fn from_json(text: &str) -> Result<MapFile, LoadError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<MapFile, LoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        MapFile::from_json(&text)
    }

    /// Loads the referenced models, resolving relative paths against the
    /// map file's parent directory.
    pub fn load_models(&self, map_path: &Path) -> Result<(Model, Model), LoadError> {
        let base = map_path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &str| -> PathBuf {
            let pb = PathBuf::from(p);
            if pb.is_absolute() {
                pb
            } else {
                base.join(pb)
            }
        };
        Ok((
            Model::from_file(resolve(&self.source))?,
            Model::from_file(resolve(&self.target))?,
        ))
    }

    pub fn vertex_map(&self) -> VertexMap {
        VertexMap::new(self.map.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WorldsSpec;
    use crate::syntax::{group, parse};
    use std::collections::{BTreeMap, BTreeSet};

    fn face(ids: &[&str]) -> Face {
        Face::new(ids.iter().copied()).unwrap()
    }

    fn atoms(ps: &[&str]) -> BTreeSet<String> {
        ps.iter().map(|s| s.to_string()).collect()
    }

    /// Path of two unicolored edges; p holds at the far edge only.
    fn gain_source() -> Model {
        Model::new(
            vec!["a".into()],
            vec![
                ("1".into(), "a".into()),
                ("2".into(), "a".into()),
                ("3".into(), "a".into()),
            ],
            vec![face(&["1", "2"]), face(&["2", "3"])],
            WorldsSpec::Named(vec![
                ("X".into(), face(&["1", "2"])),
                ("Y".into(), face(&["2", "3"])),
            ]),
            [("Y".to_string(), atoms(&["p"]))].into_iter().collect(),
        )
        .unwrap()
    }

    /// One unicolored edge with its middle vertex as an extra world; p holds
    /// at the vertex world.
    fn gain_target() -> Model {
        Model::new(
            vec!["a".into()],
            vec![("1".into(), "a".into()), ("2".into(), "a".into())],
            vec![face(&["1", "2"])],
            WorldsSpec::Named(vec![
                ("X".into(), face(&["1", "2"])),
                ("Z".into(), face(&["2"])),
            ]),
            [("Z".to_string(), atoms(&["p"]))].into_iter().collect(),
        )
        .unwrap()
    }

    fn gain_map() -> VertexMap {
        VertexMap::new(
            [("1", "1"), ("2", "2"), ("3", "2")]
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
    }

    #[test]
    fn image_collapses_duplicates() {
        let map = gain_map();
        assert_eq!(image_face(&map, &face(&["2", "3"])).unwrap(), face(&["2"]));
        assert_eq!(image_face(&map, &face(&["1", "2"])).unwrap(), face(&["1", "2"]));
        assert_eq!(image_face(&map, &face(&["3"])).unwrap(), face(&["2"]));
        // Sub-faces map to sub-faces of the image.
        let whole = image_face(&map, &face(&["1", "2", "3"])).unwrap();
        for sub in [face(&["1"]), face(&["1", "3"]), face(&["2", "3"])] {
            assert!(image_face(&map, &sub).unwrap().is_subset(&whole));
        }
    }

    #[test]
    fn unmapped_vertices_are_errors() {
        let map = VertexMap::new(BTreeMap::new());
        assert!(matches!(
            image_face(&map, &face(&["1"])),
            Err(MorphismError::UnmappedVertex(_))
        ));
        assert!(matches!(
            check_morphism(&gain_source(), &gain_target(), &map),
            Err(MorphismError::UnmappedVertex(_))
        ));
    }

    #[test]
    fn the_gain_map_is_a_morphism() {
        let report = check_morphism(&gain_source(), &gain_target(), &gain_map()).unwrap();
        assert!(report.is_morphism(), "witnesses: {:?}", report.witnesses);
    }

    #[test]
    fn identity_is_a_morphism() {
        let m = gain_source();
        let report = check_morphism(&m, &m, &VertexMap::identity(&m)).unwrap();
        assert!(report.is_morphism());
    }

    #[test]
    fn color_clashes_are_caught() {
        // Same shape as the gain target but with vertex 2 recolored.
        let target = Model::new(
            vec!["a".into(), "b".into()],
            vec![("1".into(), "a".into()), ("2".into(), "b".into())],
            vec![face(&["1", "2"])],
            WorldsSpec::Named(vec![
                ("X".into(), face(&["1", "2"])),
                ("Z".into(), face(&["2"])),
            ]),
            [("Z".to_string(), atoms(&["p"]))].into_iter().collect(),
        )
        .unwrap();
        let report = check_morphism(&gain_source(), &target, &gain_map()).unwrap();
        assert!(!report.color_preserving);
        assert!(report.witnesses.iter().any(|w| matches!(
            w,
            MorphismWitness::ColorClash { vertex, .. } if vertex == "2" || vertex == "3"
        )));
    }

    #[test]
    fn morphisms_respect_indistinguishability() {
        let src = RelationTable::new(gain_source());
        let tgt = RelationTable::new(gain_target());
        let map = gain_map();
        let g = group(["a"]);
        for x in ["X", "Y"] {
            for y in ["X", "Y"] {
                assert!(respects_indist(&src, &tgt, &map, &g, x, y).unwrap());
            }
        }
    }

    #[test]
    fn positive_formulas_are_preserved_backwards() {
        let src = RelationTable::new(gain_source());
        let tgt = RelationTable::new(gain_target());
        let map = gain_map();
        for text in ["p", "true", "K{a} p | ~p", "K{a} (p & p)"] {
            let f = parse(text).unwrap();
            let report = check_positive_preservation(&src, &tgt, &map, &f).unwrap();
            assert!(report.holds(), "{text} violated at {:?}", report.violations);
        }
    }

    #[test]
    fn non_positive_formulas_are_rejected_with_the_offender() {
        let src = RelationTable::new(gain_source());
        let tgt = RelationTable::new(gain_target());
        let err = check_positive_preservation(
            &src,
            &tgt,
            &gain_map(),
            &parse("p & Sb[a] p").unwrap(),
        )
        .unwrap_err();
        match err {
            MorphismError::NotPositive(f) => assert_eq!(f, parse("Sb[a] p").unwrap()),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn belief_gain_shows_up_at_the_collapsed_world() {
        let src = RelationTable::new(gain_source());
        let tgt = RelationTable::new(gain_target());
        let map = gain_map();
        // Safe belief in p appears at the image of Y without holding at Y.
        assert_eq!(
            belief_gain_witness(&src, &tgt, &map, "p").unwrap(),
            Some(("Y".to_string(), "a".to_string()))
        );
        // No gain along the identity.
        let m = RelationTable::new(gain_source());
        let id = VertexMap::identity(m.model());
        assert_eq!(belief_gain_witness(&m, &m, &id, "p").unwrap(), None);
        // An atom that is false everywhere cannot be gained.
        assert_eq!(belief_gain_witness(&src, &tgt, &map, "q").unwrap(), None);
    }

    #[test]
    fn composition_of_maps() {
        let m = gain_source();
        let id = VertexMap::identity(&m);
        let composed = gain_map().compose(&VertexMap::identity(&gain_target())).unwrap();
        assert_eq!(composed, gain_map());
        assert_eq!(id.compose(&gain_map()).unwrap(), gain_map());
    }
}
