//! Test laboratory: bundled fixtures, seeded random model and formula
//! generators, a pushforward morphism generator, an independent relational
//! evaluator, and the axiom-scheme checker.
//!
//! Everything here is deterministic in the seed, so failures reproduce.

pub mod fixtures;
pub mod relational;
pub mod schemes;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Face, Model, WorldsSpec};
use crate::morphism::VertexMap;
use crate::syntax::{Formula, Group};

pub use fixtures::{run_fixture, Fixture, FixtureReport};
pub use relational::{eval_relational, to_relational, RelationalModel};
pub use schemes::{check_scheme, Scheme, SchemeOutcome};

/// Retries against the triangle condition before falling back to a proper
/// coloring, which always satisfies it.
const STAR_RETRY_CAP: usize = 200;

const AGENT_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

#[derive(Debug, Error)]
pub enum TestlabError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("facts line {line}: {message}")]
    BadFacts { line: usize, message: String },
    #[error(transparent)]
    Load(#[from] crate::model::LoadError),
    #[error(transparent)]
    Query(#[from] crate::model::QueryError),
    #[error(transparent)]
    Parse(#[from] crate::syntax::ParseError),
    #[error(transparent)]
    Morphism(#[from] crate::morphism::MorphismError),
    #[error("the relational oracle has no relation for group {{{0}}}")]
    MissingGroup(String),
    #[error("the relational oracle does not cover the experimental group modalities")]
    UnsupportedOperator,
}

/// Connectives the free formula generator may use.
#[derive(Debug, Clone)]
pub struct ConnectiveSet {
    pub negation: bool,
    pub conjunction: bool,
    pub disjunction: bool,
    pub implication: bool,
    pub knowledge: bool,
    pub safe_belief: bool,
    pub dual_safe_belief: bool,
    pub belief: bool,
    pub group_safe_belief: bool,
    pub group_belief: bool,
}

impl Default for ConnectiveSet {
    /// Everything except the experimental group modalities.
    fn default() -> Self {
        ConnectiveSet {
            negation: true,
            conjunction: true,
            disjunction: true,
            implication: true,
            knowledge: true,
            safe_belief: true,
            dual_safe_belief: true,
            belief: true,
            group_safe_belief: false,
            group_belief: false,
        }
    }
}

/// How formulas are generated.
#[derive(Debug, Clone)]
pub enum FormulaMode {
    /// Free generation over the enabled connectives.
    Free(ConnectiveSet),
    /// Only shapes of the positive grammar: propositional pieces combined
    /// by conjunction, disjunction and knowledge.
    Positive,
}

/// Bounds for the generators. All numeric bounds must be at least 1 and the
/// atom pool nonempty.
#[derive(Debug, Clone)]
pub struct GenParams {
    pub max_vertices: usize,
    pub max_agents: usize,
    pub max_facet_size: usize,
    pub max_worlds: usize,
    pub atom_pool: Vec<String>,
    pub formula_depth: usize,
    pub mode: FormulaMode,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_vertices: 8,
            max_agents: 3,
            max_facet_size: 4,
            max_worlds: 6,
            atom_pool: vec!["p".into(), "q".into()],
            formula_depth: 3,
            mode: FormulaMode::Free(ConnectiveSet::default()),
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn with_seed(&self, seed: u64) -> GenParams {
        let mut p = self.clone();
        p.seed = seed;
        p
    }

    fn check(&self) {
        assert!(self.max_vertices >= 1, "max_vertices must be >= 1");
        assert!(
            (1..=AGENT_NAMES.len()).contains(&self.max_agents),
            "max_agents must be in 1..={}",
            AGENT_NAMES.len()
        );
        assert!(self.max_facet_size >= 1, "max_facet_size must be >= 1");
        assert!(self.max_worlds >= 1, "max_worlds must be >= 1");
        assert!(!self.atom_pool.is_empty(), "atom pool must be nonempty");
        assert!(self.formula_depth >= 1, "formula_depth must be >= 1");
    }
}

// ---------------------------------------------------------------------------
// Model generation
// ---------------------------------------------------------------------------

/// Generates a model that passes validation; deterministic in the seed.
/// Candidates violating the triangle condition are redrawn up to
/// [`STAR_RETRY_CAP`] times, then a properly colored model is built instead.
pub fn gen_model(params: &GenParams) -> Model {
    params.check();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    sample_valid_model(&mut rng, params)
}

fn sample_valid_model(rng: &mut ChaCha8Rng, params: &GenParams) -> Model {
    for _ in 0..STAR_RETRY_CAP {
        let candidate = sample_model(rng, params);
        if candidate.validate().ok() {
            return candidate;
        }
    }
    let fallback = sample_proper_model(rng, params);
    debug_assert!(fallback.validate().ok());
    fallback
}

fn random_valuation(
    rng: &mut ChaCha8Rng,
    worlds: &[(String, Face)],
    pool: &[String],
) -> BTreeMap<String, BTreeSet<String>> {
    worlds
        .iter()
        .map(|(name, _)| {
            let atoms = pool
                .iter()
                .filter(|_| rng.random_bool(0.5))
                .cloned()
                .collect();
            (name.clone(), atoms)
        })
        .collect()
}

fn named_worlds(faces: Vec<Face>) -> Vec<(String, Face)> {
    faces
        .into_iter()
        .map(|f| (crate::model::default_world_name(&f), f))
        .collect()
}

fn sample_model(rng: &mut ChaCha8Rng, params: &GenParams) -> Model {
    let n_agents = rng.random_range(1..=params.max_agents);
    let agents: Vec<String> = AGENT_NAMES[..n_agents].iter().map(|s| s.to_string()).collect();
    let n_vertices = rng.random_range(1..=params.max_vertices);
    let vertices: Vec<(String, String)> = (0..n_vertices)
        .map(|i| (format!("v{i}"), agents.choose(rng).unwrap().clone()))
        .collect();
    let ids: Vec<String> = vertices.iter().map(|(id, _)| id.clone()).collect();

    let n_faces = rng.random_range(1..=params.max_worlds);
    let mut faces: BTreeSet<Face> = BTreeSet::new();
    for _ in 0..n_faces {
        let size = rng.random_range(1..=params.max_facet_size.min(n_vertices));
        let picked = rand::seq::index::sample(rng, n_vertices, size);
        faces.insert(Face::new(picked.iter().map(|i| ids[i].clone())).unwrap());
    }
    let facets = crate::model::maximal_faces(&faces);

    // Facets are always worlds; occasionally add proper sub-faces as extra
    // worlds to populate the region between facets and faces.
    let mut world_faces: Vec<Face> = facets.clone();
    while world_faces.len() < params.max_worlds && rng.random_bool(0.4) {
        let base = facets.choose(rng).unwrap();
        if base.len() <= 1 {
            break;
        }
        let size = rng.random_range(1..base.len());
        let items: Vec<&str> = base.vertices().collect();
        let picked = rand::seq::index::sample(rng, items.len(), size);
        let sub = Face::new(picked.iter().map(|i| items[i].to_string())).unwrap();
        if !world_faces.contains(&sub) {
            world_faces.push(sub);
        }
    }

    let worlds = named_worlds(world_faces);
    let valuation = random_valuation(rng, &worlds, &params.atom_pool);
    Model::new(
        agents,
        vertices,
        facets,
        WorldsSpec::Named(worlds),
        valuation,
    )
    .expect("generated input is referentially sound")
}

/// A properly colored model: every facet picks at most one vertex per agent,
/// so the triangle condition holds outright.
fn sample_proper_model(rng: &mut ChaCha8Rng, params: &GenParams) -> Model {
    let n_agents = rng.random_range(1..=params.max_agents);
    let agents: Vec<String> = AGENT_NAMES[..n_agents].iter().map(|s| s.to_string()).collect();
    // Two candidate vertices per agent.
    let vertices: Vec<(String, String)> = agents
        .iter()
        .flat_map(|a| {
            [(format!("{a}0"), a.clone()), (format!("{a}1"), a.clone())]
        })
        .collect();

    let n_faces = rng.random_range(1..=params.max_worlds);
    let mut faces: BTreeSet<Face> = BTreeSet::new();
    for _ in 0..n_faces {
        let mut members: Vec<String> = Vec::new();
        for a in &agents {
            if rng.random_bool(0.7) {
                members.push(format!("{a}{}", rng.random_range(0..2)));
            }
        }
        if members.is_empty() {
            continue;
        }
        faces.insert(Face::new(members).unwrap());
    }
    if faces.is_empty() {
        faces.insert(Face::new([format!("{}0", agents[0])]).unwrap());
    }
    let facets = crate::model::maximal_faces(&faces);
    let worlds = named_worlds(facets.clone());
    let valuation = random_valuation(rng, &worlds, &params.atom_pool);
    Model::new(
        agents,
        vertices,
        facets,
        WorldsSpec::Named(worlds),
        valuation,
    )
    .expect("proper fallback is referentially sound")
}

// ---------------------------------------------------------------------------
// Formula generation
// ---------------------------------------------------------------------------

/// Generates a formula; deterministic in the seed, depth at most
/// `params.formula_depth`, shape per `params.mode`.
pub fn gen_formula(params: &GenParams, atoms: &[String], agents: &[String]) -> Formula {
    params.check();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    gen_formula_with(&mut rng, params.formula_depth, atoms, agents, &params.mode)
}

/// Generates one formula from an externally threaded generator state; used
/// by suites that draw many formulas in sequence.
pub fn gen_formula_with(
    rng: &mut ChaCha8Rng,
    depth: usize,
    atoms: &[String],
    agents: &[String],
    mode: &FormulaMode,
) -> Formula {
    match mode {
        FormulaMode::Free(set) => gen_free(rng, depth, atoms, agents, set),
        FormulaMode::Positive => gen_psi(rng, depth, atoms, agents),
    }
}

fn gen_leaf(rng: &mut ChaCha8Rng, atoms: &[String]) -> Formula {
    match rng.random_range(0..10) {
        0 => Formula::Top,
        1 => Formula::Bottom,
        _ => Formula::atom(atoms.choose(rng).unwrap().clone()),
    }
}

fn gen_group(rng: &mut ChaCha8Rng, agents: &[String]) -> Group {
    let mut g: Group = agents.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
    if g.is_empty() {
        g.insert(agents.choose(rng).unwrap().clone());
    }
    g
}

fn gen_free(
    rng: &mut ChaCha8Rng,
    depth: usize,
    atoms: &[String],
    agents: &[String],
    set: &ConnectiveSet,
) -> Formula {
    if depth == 0 || rng.random_bool(0.2) {
        return gen_leaf(rng, atoms);
    }
    let mut options: Vec<u8> = Vec::new();
    if set.negation {
        options.push(0);
    }
    if set.conjunction {
        options.push(1);
    }
    if set.disjunction {
        options.push(2);
    }
    if set.implication {
        options.push(3);
    }
    if !agents.is_empty() {
        if set.knowledge {
            options.push(4);
        }
        if set.safe_belief {
            options.push(5);
        }
        if set.dual_safe_belief {
            options.push(6);
        }
        if set.belief {
            options.push(7);
        }
        if set.group_safe_belief {
            options.push(8);
        }
        if set.group_belief {
            options.push(9);
        }
    }
    if options.is_empty() {
        return gen_leaf(rng, atoms);
    }
    let sub = |rng: &mut ChaCha8Rng| gen_free(rng, depth - 1, atoms, agents, set);
    match options.choose(rng).copied().unwrap() {
        0 => Formula::not(sub(rng)),
        1 => {
            let l = sub(rng);
            Formula::and(l, sub(rng))
        }
        2 => {
            let l = sub(rng);
            Formula::or(l, sub(rng))
        }
        3 => {
            let l = sub(rng);
            Formula::implies(l, sub(rng))
        }
        4 => Formula::Know(gen_group(rng, agents), Box::new(sub(rng))),
        5 => Formula::safe_belief(agents.choose(rng).unwrap().clone(), sub(rng)),
        6 => Formula::dual_safe_belief(agents.choose(rng).unwrap().clone(), sub(rng)),
        7 => Formula::belief(agents.choose(rng).unwrap().clone(), sub(rng)),
        8 => Formula::GroupSafeBelief(gen_group(rng, agents), Box::new(sub(rng))),
        _ => Formula::GroupBelief(gen_group(rng, agents), Box::new(sub(rng))),
    }
}

/// Propositional layer of the positive grammar: modality-free formulas.
fn gen_prop(rng: &mut ChaCha8Rng, depth: usize, atoms: &[String]) -> Formula {
    if depth == 0 || rng.random_bool(0.3) {
        return gen_leaf(rng, atoms);
    }
    match rng.random_range(0..4) {
        0 => Formula::not(gen_prop(rng, depth - 1, atoms)),
        1 => {
            let l = gen_prop(rng, depth - 1, atoms);
            Formula::and(l, gen_prop(rng, depth - 1, atoms))
        }
        2 => {
            let l = gen_prop(rng, depth - 1, atoms);
            Formula::or(l, gen_prop(rng, depth - 1, atoms))
        }
        _ => {
            let l = gen_prop(rng, depth - 1, atoms);
            Formula::implies(l, gen_prop(rng, depth - 1, atoms))
        }
    }
}

fn gen_psi(rng: &mut ChaCha8Rng, depth: usize, atoms: &[String], agents: &[String]) -> Formula {
    if depth == 0 || rng.random_bool(0.25) || agents.is_empty() {
        return gen_prop(rng, depth.min(2), atoms);
    }
    match rng.random_range(0..3) {
        0 => {
            let l = gen_psi(rng, depth - 1, atoms, agents);
            Formula::and(l, gen_psi(rng, depth - 1, atoms, agents))
        }
        1 => {
            let l = gen_psi(rng, depth - 1, atoms, agents);
            Formula::or(l, gen_psi(rng, depth - 1, atoms, agents))
        }
        _ => Formula::Know(
            gen_group(rng, agents),
            Box::new(gen_psi(rng, depth - 1, atoms, agents)),
        ),
    }
}

// ---------------------------------------------------------------------------
// Morphism generation
// ---------------------------------------------------------------------------

/// Generates a validated source model, a color-preserving vertex merge, and
/// the pushforward target, so that the triple always satisfies the four
/// morphism conditions. Deterministic in the seed; falls back to the
/// identity morphism when the merged target keeps failing the triangle
/// condition.
pub fn gen_morphism(params: &GenParams) -> (Model, Model, VertexMap) {
    params.check();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    for _ in 0..STAR_RETRY_CAP {
        let source = sample_valid_model(&mut rng, params);
        // Merge some vertices into earlier vertices of the same color.
        let vertices: Vec<(String, String)> = source
            .complex()
            .vertices()
            .map(|(id, c)| (id.to_string(), c.to_string()))
            .collect();
        let mut mapping: BTreeMap<String, String> = BTreeMap::new();
        for (i, (id, color)) in vertices.iter().enumerate() {
            let candidates: Vec<&String> = vertices[..i]
                .iter()
                .filter(|(other, c)| {
                    c == color && mapping.get(other).map(String::as_str) == Some(other.as_str())
                })
                .map(|(other, _)| other)
                .collect();
            if !candidates.is_empty() && rng.random_bool(0.35) {
                mapping.insert(id.clone(), (*candidates.choose(&mut rng).unwrap()).clone());
            } else {
                mapping.insert(id.clone(), id.clone());
            }
        }
        let map = VertexMap::new(mapping);

        match pushforward(&source, &map, &mut rng, &params.atom_pool) {
            Some((source, target)) => return (source, target, map),
            None => continue,
        }
    }

    // Identity fallback: source and target coincide.
    let source = sample_valid_model(&mut rng, params);
    let map = VertexMap::identity(&source);
    let target = source.clone();
    (source, target, map)
}

/// Builds the image model of `source` under `map` and re-labels both sides
/// consistently: colliding source worlds inherit the valuation drawn for
/// their common image. Returns None when the image fails validation.
fn pushforward(
    source: &Model,
    map: &VertexMap,
    rng: &mut ChaCha8Rng,
    pool: &[String],
) -> Option<(Model, Model)> {
    let image_ids: BTreeSet<&str> = source
        .complex()
        .vertices()
        .map(|(id, _)| map.get(id).expect("total"))
        .collect();
    let vertices: Vec<(String, String)> = source
        .complex()
        .vertices()
        .filter(|(id, _)| image_ids.contains(id))
        .map(|(id, c)| (id.to_string(), c.to_string()))
        .collect();

    let generators: BTreeSet<Face> = source
        .complex()
        .facets()
        .iter()
        .map(|f| crate::morphism::image_face(map, f).expect("total"))
        .collect();

    let mut world_faces: Vec<Face> = Vec::new();
    for w in source.worlds() {
        let img = crate::morphism::image_face(map, &w.face).expect("total");
        if !world_faces.contains(&img) {
            world_faces.push(img);
        }
    }

    let worlds = named_worlds(world_faces);
    let valuation = random_valuation(rng, &worlds, pool);
    let target = Model::new(
        source.agents().to_vec(),
        vertices,
        generators.into_iter().collect(),
        WorldsSpec::Named(worlds),
        valuation,
    )
    .expect("pushforward is referentially sound");

    if !target.validate().ok() {
        return None;
    }

    // Pull the target valuation back so condition (4) holds exactly.
    let src_valuation: BTreeMap<String, BTreeSet<String>> = source
        .worlds()
        .iter()
        .map(|w| {
            let img = crate::morphism::image_face(map, &w.face).expect("total");
            let tw = target.world_with_face(&img).expect("image is a world");
            let ti = target.world_index(&tw.name).expect("exists");
            (w.name.clone(), target.valuation(ti).clone())
        })
        .collect();
    let source = Model::new(
        source.agents().to_vec(),
        source
            .complex()
            .vertices()
            .map(|(id, c)| (id.to_string(), c.to_string()))
            .collect(),
        source.complex().facets(),
        WorldsSpec::Named(
            source
                .worlds()
                .iter()
                .map(|w| (w.name.clone(), w.face.clone()))
                .collect(),
        ),
        src_valuation,
    )
    .expect("relabeled source is referentially sound");
    debug_assert!(source.validate().ok());

    Some((source, target))
}

// ---------------------------------------------------------------------------
// Canonical positive formula family
// ---------------------------------------------------------------------------

/// Deterministic family of positive formulas stratified by depth: level 0
/// holds the literals over the atom pool, and level d applies `K{G}` or
/// attaches one atom conjunctively or disjunctively to each level d-1
/// formula. The full closure of the positive grammar at depth 3 is in the
/// millions; this family keeps modal nesting exhaustive while holding the
/// propositional branching linear.
pub fn positive_family(atoms: &[String], groups: &[Group], depth: usize) -> Vec<Formula> {
    let mut seen: HashSet<Formula> = HashSet::new();
    let mut out: Vec<Formula> = Vec::new();
    let mut level: Vec<Formula> = Vec::new();

    for p in atoms {
        for f in [Formula::atom(p.clone()), Formula::not(Formula::atom(p.clone()))] {
            if seen.insert(f.clone()) {
                out.push(f.clone());
                level.push(f);
            }
        }
    }

    for _ in 0..depth {
        let mut next: Vec<Formula> = Vec::new();
        for f in &level {
            let push = |candidate: Formula, seen: &mut HashSet<Formula>, next: &mut Vec<Formula>| {
                if seen.insert(candidate.clone()) {
                    next.push(candidate);
                }
            };
            for g in groups {
                push(
                    Formula::Know(g.clone(), Box::new(f.clone())),
                    &mut seen,
                    &mut next,
                );
            }
            for p in atoms {
                push(Formula::and(f.clone(), Formula::atom(p.clone())), &mut seen, &mut next);
                push(Formula::or(f.clone(), Formula::atom(p.clone())), &mut seen, &mut next);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// Singleton groups of all agents plus the full group; the group universe
/// used by preservation sweeps.
pub fn standard_groups(agents: &[String]) -> Vec<Group> {
    let mut groups: Vec<Group> = agents
        .iter()
        .map(|a| [a.clone()].into_iter().collect())
        .collect();
    if agents.len() > 1 {
        groups.push(agents.iter().cloned().collect());
    }
    groups
}

/// Direct implementation of the positive-fragment definition, used as the
/// second route in agreement tests: a formula is positive iff it contains no
/// belief-family operator anywhere and every knowledge operator is reachable
/// from the root through conjunctions, disjunctions and knowledge operators
/// only. The `tainted` flag records entering any other scope.
pub fn is_positive_reference(f: &Formula) -> bool {
    fn walk(f: &Formula, tainted: bool) -> bool {
        match f {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => true,
            Formula::Not(g) => walk(g, true),
            Formula::Implies(l, r) => walk(l, true) && walk(r, true),
            Formula::And(l, r) | Formula::Or(l, r) => walk(l, tainted) && walk(r, tainted),
            Formula::Know(_, g) => !tainted && walk(g, tainted),
            Formula::SafeBelief(..)
            | Formula::DualSafeBelief(..)
            | Formula::Belief(..)
            | Formula::GroupSafeBelief(..)
            | Formula::GroupBelief(..) => false,
        }
    }
    walk(f, false)
}
