//! An independent relational route to the semantics: explicit accessibility
//! relations materialized straight from the model data, and a plain Kripke
//! evaluator over them. Agreement with [`RelationTable`] evaluation is what
//! the oracle suites assert, so nothing here may call into the semantics
//! module.
//!
//! [`RelationTable`]: crate::semantics::RelationTable

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Face, Model};
use crate::syntax::{Formula, Group};
use crate::testlab::TestlabError;

/// Explicit relations of one model: a knowledge relation per requested
/// group, and safe-belief/belief relations per agent.
#[derive(Debug, Clone)]
pub struct RelationalModel {
    pub worlds: Vec<String>,
    pub valuation: Vec<BTreeSet<String>>,
    /// `know[G][x * n + y]`: X ∼_G Y.
    pub know: BTreeMap<Group, Vec<bool>>,
    /// `safe[a][x * n + y]`: X ⊵_a Y.
    pub safe: BTreeMap<String, Vec<bool>>,
    /// `belief[a][x * n + y]`: Y is among the most plausible worlds
    /// indistinguishable from X.
    pub belief: BTreeMap<String, Vec<bool>>,
}

fn colors_of_intersection<'m>(model: &'m Model, x: &Face, y: &Face) -> BTreeSet<&'m str> {
    let inter = x.intersection(y);
    inter.iter().filter_map(|v| model.complex().color(v)).collect()
}

fn count_color(model: &Model, face: &Face, agent: &str) -> usize {
    face.vertices()
        .filter(|v| model.complex().color(v) == Some(agent))
        .count()
}

/// Materializes explicit relations for the given groups and all agents.
pub fn to_relational(model: &Model, groups: &[Group]) -> RelationalModel {
    let n = model.worlds().len();
    let faces: Vec<&Face> = model.worlds().iter().map(|w| &w.face).collect();

    let mut know = BTreeMap::new();
    for g in groups {
        let mut m = vec![false; n * n];
        for x in 0..n {
            for y in 0..n {
                let shared = colors_of_intersection(model, faces[x], faces[y]);
                m[x * n + y] = g.iter().all(|a| shared.contains(a.as_str()));
            }
        }
        know.insert(g.clone(), m);
    }

    let mut safe = BTreeMap::new();
    let mut belief = BTreeMap::new();
    for agent in model.agents() {
        let counts: Vec<usize> = faces.iter().map(|f| count_color(model, f, agent)).collect();
        let mut sim = vec![false; n * n];
        for x in 0..n {
            for y in 0..n {
                sim[x * n + y] = colors_of_intersection(model, faces[x], faces[y])
                    .contains(agent.as_str());
            }
        }

        let mut safe_m = vec![false; n * n];
        for x in 0..n {
            for y in 0..n {
                safe_m[x * n + y] = sim[x * n + y] && counts[x] >= counts[y];
            }
        }

        let mut belief_m = vec![false; n * n];
        for x in 0..n {
            for y in 0..n {
                let minimal = sim[y * n + x]
                    && !(0..n).any(|z| sim[z * n + y] && counts[z] < counts[y]);
                belief_m[x * n + y] = minimal;
            }
        }

        safe.insert(agent.clone(), safe_m);
        belief.insert(agent.clone(), belief_m);
    }

    RelationalModel {
        worlds: model.worlds().iter().map(|w| w.name.clone()).collect(),
        valuation: (0..n).map(|i| model.valuation(i).clone()).collect(),
        know,
        safe,
        belief,
    }
}

/// Generic box/diamond evaluation over the explicit relations.
pub fn eval_relational(
    rm: &RelationalModel,
    world: usize,
    f: &Formula,
) -> Result<bool, TestlabError> {
    let n = rm.worlds.len();
    let all = |rel: &[bool], x: usize, body: &Formula| -> Result<bool, TestlabError> {
        for y in 0..n {
            if rel[x * n + y] && !eval_relational(rm, y, body)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    match f {
        Formula::Atom(p) => Ok(rm.valuation[world].contains(p)),
        Formula::Top => Ok(true),
        Formula::Bottom => Ok(false),
        Formula::Not(g) => Ok(!eval_relational(rm, world, g)?),
        Formula::And(l, r) => {
            Ok(eval_relational(rm, world, l)? && eval_relational(rm, world, r)?)
        }
        Formula::Or(l, r) => {
            Ok(eval_relational(rm, world, l)? || eval_relational(rm, world, r)?)
        }
        Formula::Implies(l, r) => {
            Ok(!eval_relational(rm, world, l)? || eval_relational(rm, world, r)?)
        }
        Formula::Know(g, body) => {
            let rel = rm
                .know
                .get(g)
                .ok_or_else(|| TestlabError::MissingGroup(g.iter().cloned().collect::<Vec<_>>().join(",")))?;
            all(rel, world, body)
        }
        Formula::SafeBelief(a, body) => {
            let rel = rm
                .safe
                .get(a)
                .ok_or_else(|| TestlabError::MissingGroup(a.clone()))?;
            all(rel, world, body)
        }
        Formula::DualSafeBelief(a, body) => {
            let rel = rm
                .safe
                .get(a)
                .ok_or_else(|| TestlabError::MissingGroup(a.clone()))?;
            for y in 0..n {
                if rel[world * n + y] && eval_relational(rm, y, body)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Belief(a, body) => {
            let rel = rm
                .belief
                .get(a)
                .ok_or_else(|| TestlabError::MissingGroup(a.clone()))?;
            all(rel, world, body)
        }
        Formula::GroupSafeBelief(..) | Formula::GroupBelief(..) => {
            Err(TestlabError::UnsupportedOperator)
        }
    }
}
