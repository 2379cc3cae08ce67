//! Axiom-scheme checking: instantiates schemes with generated formulas and
//! evaluates each instance at every world for every agent.
//!
//! The eight core schemes hold on every model that passes validation. The
//! ninth, `unguarded-t`, drops the liveness guard from the truth axiom and
//! is expected to fail on models with dead-agent worlds; suites use it to
//! confirm the checker can falsify at all.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::semantics::RelationTable;
use crate::syntax::Formula;
use crate::testlab::{gen_formula_with, ConnectiveSet, FormulaMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// `Sb[a](φ -> ψ) -> (Sb[a]φ -> Sb[a]ψ)`
    KAxiom,
    /// `alive{a} -> (Sb[a]φ -> φ)`
    GuardedT,
    /// `Sb[a]φ -> Sb[a]Sb[a]φ`
    Four,
    /// `<Sb>[a]Sb[a]φ -> Sb[a]<Sb>[a]φ`
    DotTwo,
    /// `K{a}φ -> Sb[a]φ`
    KnowledgeToSafe,
    /// `Sb[a]φ -> B[a]φ`
    SafeToBelief,
    /// `alive{a} -> (B[a]φ <-> <Sb>[a]Sb[a]φ)`
    BeliefChar,
    /// `B[a]φ & B[a]ψ -> B[a](φ & ψ)`
    BeliefConj,
    /// `Sb[a]φ -> φ` without the guard; a deliberate control that fails at
    /// dead-agent worlds.
    UnguardedT,
}

impl Scheme {
    /// The schemes that are valid on every validated model.
    pub const CORE: [Scheme; 8] = [
        Scheme::KAxiom,
        Scheme::GuardedT,
        Scheme::Four,
        Scheme::DotTwo,
        Scheme::KnowledgeToSafe,
        Scheme::SafeToBelief,
        Scheme::BeliefChar,
        Scheme::BeliefConj,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::KAxiom => "k-axiom",
            Scheme::GuardedT => "guarded-t",
            Scheme::Four => "four",
            Scheme::DotTwo => "dot-two",
            Scheme::KnowledgeToSafe => "kyb-1",
            Scheme::SafeToBelief => "kyb-2",
            Scheme::BeliefChar => "belief-char",
            Scheme::BeliefConj => "belief-conj",
            Scheme::UnguardedT => "unguarded-t",
        }
    }

    pub fn from_id(id: &str) -> Option<Scheme> {
        let all = [
            Scheme::KAxiom,
            Scheme::GuardedT,
            Scheme::Four,
            Scheme::DotTwo,
            Scheme::KnowledgeToSafe,
            Scheme::SafeToBelief,
            Scheme::BeliefChar,
            Scheme::BeliefConj,
            Scheme::UnguardedT,
        ];
        all.into_iter().find(|s| s.id() == id)
    }

    /// Whether the scheme uses the second formula slot.
    pub fn binary(self) -> bool {
        matches!(self, Scheme::KAxiom | Scheme::BeliefConj)
    }

    /// The scheme instance for one agent and formula pair.
    pub fn instance(self, agent: &str, phi: &Formula, psi: &Formula) -> Formula {
        let sb = |f: Formula| Formula::safe_belief(agent, f);
        let dual = |f: Formula| Formula::dual_safe_belief(agent, f);
        let b = |f: Formula| Formula::belief(agent, f);
        let phi = phi.clone();
        let psi = psi.clone();
        match self {
            Scheme::KAxiom => Formula::implies(
                sb(Formula::implies(phi.clone(), psi.clone())),
                Formula::implies(sb(phi), sb(psi)),
            ),
            Scheme::GuardedT => Formula::implies(
                Formula::alive([agent]),
                Formula::implies(sb(phi.clone()), phi),
            ),
            Scheme::Four => Formula::implies(sb(phi.clone()), sb(sb(phi))),
            Scheme::DotTwo => Formula::implies(dual(sb(phi.clone())), sb(dual(phi))),
            Scheme::KnowledgeToSafe => {
                Formula::implies(Formula::know([agent], phi.clone()), sb(phi))
            }
            Scheme::SafeToBelief => Formula::implies(sb(phi.clone()), b(phi)),
            Scheme::BeliefChar => Formula::implies(
                Formula::alive([agent]),
                Formula::iff(b(phi.clone()), dual(sb(phi))),
            ),
            Scheme::BeliefConj => Formula::implies(
                Formula::and(b(phi.clone()), b(psi.clone())),
                b(Formula::and(phi, psi)),
            ),
            Scheme::UnguardedT => Formula::implies(sb(phi.clone()), phi),
        }
    }
}

/// A falsifying instance: the scheme was false at this world under this
/// instantiation.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeCounterexample {
    pub world: String,
    pub agent: String,
    pub phi: String,
    pub psi: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeOutcome {
    pub scheme: &'static str,
    /// Number of (φ, ψ) instantiations evaluated.
    pub instantiations: usize,
    pub counterexamples: Vec<SchemeCounterexample>,
}

impl SchemeOutcome {
    pub fn ok(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Evaluates `budget` generated instantiations of the scheme at every world
/// and for every agent of the model. Formulas are drawn from the full
/// non-experimental language at the given depth, over the model's atom
/// universe (falling back to `p`, `q` when the valuation is empty).
pub fn check_scheme(
    table: &RelationTable,
    scheme: Scheme,
    budget: usize,
    depth: usize,
    seed: u64,
) -> SchemeOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms: Vec<String> = table.model().atom_universe().into_iter().collect();
    if atoms.is_empty() {
        atoms = vec!["p".into(), "q".into()];
    }
    let agents = table.model().agents().to_vec();
    let mode = FormulaMode::Free(ConnectiveSet::default());

    let mut outcome = SchemeOutcome {
        scheme: scheme.id(),
        instantiations: budget,
        counterexamples: Vec::new(),
    };

    for _ in 0..budget {
        let phi = gen_formula_with(&mut rng, depth, &atoms, &agents, &mode);
        let psi = if scheme.binary() {
            gen_formula_with(&mut rng, depth, &atoms, &agents, &mode)
        } else {
            Formula::Top
        };
        for agent in &agents {
            let instance = scheme.instance(agent, &phi, &psi);
            // Instances only mention model agents, so the checked path's
            // formula walk would be pure overhead here.
            let mask = table.ext_unchecked(&instance);
            for (w, holds) in table.model().worlds().iter().zip(mask.iter()) {
                if !holds {
                    outcome.counterexamples.push(SchemeCounterexample {
                        world: w.name.clone(),
                        agent: agent.clone(),
                        phi: phi.to_string(),
                        psi: scheme.binary().then(|| psi.to_string()),
                    });
                }
            }
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testlab::{gen_model, GenParams};

    #[test]
    fn scheme_ids_roundtrip() {
        for s in Scheme::CORE.into_iter().chain([Scheme::UnguardedT]) {
            assert_eq!(Scheme::from_id(s.id()), Some(s));
        }
        assert_eq!(Scheme::from_id("no-such-scheme"), None);
    }

    #[test]
    fn core_schemes_hold_on_generated_models() {
        let params = GenParams::default();
        for seed in 0..25 {
            let table = RelationTable::new(gen_model(&params.with_seed(seed)));
            for scheme in Scheme::CORE {
                let outcome = check_scheme(&table, scheme, 16, 3, seed.wrapping_add(99));
                assert!(
                    outcome.ok(),
                    "seed {seed}, scheme {}: {:?}",
                    scheme.id(),
                    outcome.counterexamples.first()
                );
            }
        }
    }

    #[test]
    fn the_unguarded_control_fails_somewhere() {
        let params = GenParams::default();
        let mut found = false;
        for seed in 0..60 {
            let table = RelationTable::new(gen_model(&params.with_seed(seed)));
            let outcome = check_scheme(&table, Scheme::UnguardedT, 16, 3, seed);
            if !outcome.ok() {
                found = true;
                break;
            }
        }
        assert!(found, "the unguarded truth axiom never failed; the guard is untested");
    }

    #[test]
    fn zero_budget_checks_nothing() {
        let params = GenParams::default();
        let table = RelationTable::new(gen_model(&params));
        let outcome = check_scheme(&table, Scheme::KAxiom, 0, 3, 0);
        assert_eq!(outcome.instantiations, 0);
        assert!(outcome.ok());
    }
}
