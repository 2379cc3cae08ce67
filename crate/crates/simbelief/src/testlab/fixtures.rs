//! The bundled fixture corpus: the figure models, the counterexample models,
//! and their expected facts, all embedded in the binary so `simbelief
//! fixtures` runs anywhere. The same files ship under `fixtures/` for use
//! with the other subcommands.
//!
//! A facts file is tab-separated, one fact per line:
//!
//! ```text
//! <world>  <formula>  true|false      truth of a formula at a world
//! MIN   <agent> <world> {W1,W2}       the most plausible worlds
//! MULT  <agent> <world> <n>           a multiplicity
//! REL   sim|le|lt <agents> <x> <y> true|false   a relation fact
//! ```
//!
//! `#` starts a comment. The `REL` and `MULT` kinds extend the world/formula
//! and `MIN` kinds so the pairwise plausibility facts stated alongside the
//! figures are checkable verbatim.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::Model;
use crate::morphism::{belief_gain_witness, check_morphism, check_positive_preservation, VertexMap};
use crate::semantics::RelationTable;
use crate::syntax::{parse, Group};
use crate::testlab::TestlabError;

/// Expected validation outcome for a fixture model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Valid,
    /// Validation must fail with a star-condition violation by this agent on
    /// this world triple.
    StarViolation {
        agent: &'static str,
        triple: (&'static str, &'static str, &'static str),
    },
}

#[derive(Debug, Clone)]
pub struct FixtureModel {
    pub key: &'static str,
    pub json: &'static str,
    pub facts: &'static str,
    pub expect: Expectation,
}

#[derive(Debug, Clone)]
pub struct FixtureMap {
    pub source_key: &'static str,
    pub target_key: &'static str,
    pub json: &'static str,
    /// Expected belief-gain witness: (atom, world, agent).
    pub belief_gain: Option<(&'static str, &'static str, &'static str)>,
    /// Depth of the positive-formula preservation sweep.
    pub positive_depth: usize,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub models: Vec<FixtureModel>,
    pub map: Option<FixtureMap>,
}

/// All bundled fixtures.
pub fn registry() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "c1",
            models: vec![FixtureModel {
                key: "c1",
                json: include_str!("../../fixtures/c1.json"),
                facts: include_str!("../../fixtures/c1.facts"),
                expect: Expectation::Valid,
            }],
            map: None,
        },
        Fixture {
            name: "c3",
            models: vec![FixtureModel {
                key: "c3",
                json: include_str!("../../fixtures/c3.json"),
                facts: include_str!("../../fixtures/c3.facts"),
                expect: Expectation::Valid,
            }],
            map: None,
        },
        Fixture {
            name: "c5",
            models: vec![FixtureModel {
                key: "c5",
                json: include_str!("../../fixtures/c5.json"),
                facts: include_str!("../../fixtures/c5.facts"),
                expect: Expectation::Valid,
            }],
            map: None,
        },
        Fixture {
            name: "chain",
            models: vec![
                FixtureModel {
                    key: "chain",
                    json: include_str!("../../fixtures/chain.json"),
                    facts: "",
                    expect: Expectation::StarViolation {
                        agent: "a",
                        triple: ("X", "Y", "Z"),
                    },
                },
                FixtureModel {
                    key: "chain-xy",
                    json: include_str!("../../fixtures/chain-xy.json"),
                    facts: include_str!("../../fixtures/chain-xy.facts"),
                    expect: Expectation::Valid,
                },
                FixtureModel {
                    key: "chain-yz",
                    json: include_str!("../../fixtures/chain-yz.json"),
                    facts: include_str!("../../fixtures/chain-yz.facts"),
                    expect: Expectation::Valid,
                },
                FixtureModel {
                    key: "chain-xz",
                    json: include_str!("../../fixtures/chain-xz.json"),
                    facts: include_str!("../../fixtures/chain-xz.facts"),
                    expect: Expectation::Valid,
                },
            ],
            map: None,
        },
        Fixture {
            name: "non-proper",
            models: vec![FixtureModel {
                key: "non-proper",
                json: include_str!("../../fixtures/non-proper.json"),
                facts: include_str!("../../fixtures/non-proper.facts"),
                expect: Expectation::Valid,
            }],
            map: None,
        },
        Fixture {
            name: "belief-gain",
            models: vec![
                FixtureModel {
                    key: "belief-gain-src",
                    json: include_str!("../../fixtures/belief-gain-src.json"),
                    facts: include_str!("../../fixtures/belief-gain-src.facts"),
                    expect: Expectation::Valid,
                },
                FixtureModel {
                    key: "belief-gain-tgt",
                    json: include_str!("../../fixtures/belief-gain-tgt.json"),
                    facts: include_str!("../../fixtures/belief-gain-tgt.facts"),
                    expect: Expectation::Valid,
                },
            ],
            map: Some(FixtureMap {
                source_key: "belief-gain-src",
                target_key: "belief-gain-tgt",
                json: include_str!("../../fixtures/belief-gain.map.json"),
                belief_gain: Some(("p", "Y", "a")),
                positive_depth: 3,
            }),
        },
        Fixture {
            name: "non-monotonic",
            models: vec![
                FixtureModel {
                    key: "nonmono-c",
                    json: include_str!("../../fixtures/nonmono-c.json"),
                    facts: include_str!("../../fixtures/nonmono-c.facts"),
                    expect: Expectation::Valid,
                },
                FixtureModel {
                    key: "nonmono-cpsi",
                    json: include_str!("../../fixtures/nonmono-cpsi.json"),
                    facts: include_str!("../../fixtures/nonmono-cpsi.facts"),
                    expect: Expectation::Valid,
                },
            ],
            map: None,
        },
    ]
}

pub fn fixture(name: &str) -> Result<Fixture, TestlabError> {
    registry()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| TestlabError::UnknownFixture(name.to_string()))
}

// -- facts ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelKind {
    Sim,
    Le,
    Lt,
}

#[derive(Debug, Clone)]
pub enum Fact {
    Eval { world: String, formula: String, expected: bool },
    Min { agent: String, world: String, expected: BTreeSet<String> },
    Mult { agent: String, world: String, expected: usize },
    Rel { kind: RelKind, group: Vec<String>, x: String, y: String, expected: bool },
}

fn parse_bool(s: &str, line: usize) -> Result<bool, TestlabError> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(TestlabError::BadFacts {
            line,
            message: format!("expected true or false, got `{other}`"),
        }),
    }
}

pub fn parse_facts(text: &str) -> Result<Vec<Fact>, TestlabError> {
    let mut facts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        let bad = |message: String| TestlabError::BadFacts { line, message };
        match fields[0] {
            "MIN" => {
                if fields.len() != 4 {
                    return Err(bad("MIN needs: MIN <agent> <world> {worlds}".into()));
                }
                let braces = fields[3];
                if !braces.starts_with('{') || !braces.ends_with('}') {
                    return Err(bad(format!("expected {{worlds}}, got `{braces}`")));
                }
                let inner = &braces[1..braces.len() - 1];
                let expected: BTreeSet<String> = if inner.trim().is_empty() {
                    BTreeSet::new()
                } else {
                    inner.split(',').map(|s| s.trim().to_string()).collect()
                };
                facts.push(Fact::Min {
                    agent: fields[1].to_string(),
                    world: fields[2].to_string(),
                    expected,
                });
            }
            "MULT" => {
                if fields.len() != 4 {
                    return Err(bad("MULT needs: MULT <agent> <world> <n>".into()));
                }
                let expected = fields[3]
                    .parse::<usize>()
                    .map_err(|_| bad(format!("bad multiplicity `{}`", fields[3])))?;
                facts.push(Fact::Mult {
                    agent: fields[1].to_string(),
                    world: fields[2].to_string(),
                    expected,
                });
            }
            "REL" => {
                if fields.len() != 6 {
                    return Err(bad("REL needs: REL <kind> <agents> <x> <y> <bool>".into()));
                }
                let kind = match fields[1] {
                    "sim" => RelKind::Sim,
                    "le" => RelKind::Le,
                    "lt" => RelKind::Lt,
                    other => return Err(bad(format!("unknown relation kind `{other}`"))),
                };
                let group: Vec<String> = fields[2].split(',').map(|s| s.trim().to_string()).collect();
                if kind != RelKind::Sim && group.len() != 1 {
                    return Err(bad("le/lt relations take a single agent".into()));
                }
                facts.push(Fact::Rel {
                    kind,
                    group,
                    x: fields[3].to_string(),
                    y: fields[4].to_string(),
                    expected: parse_bool(fields[5], line)?,
                });
            }
            _ => {
                if fields.len() != 3 {
                    return Err(bad("expected: <world> <formula> <true|false>".into()));
                }
                facts.push(Fact::Eval {
                    world: fields[0].to_string(),
                    formula: fields[1].to_string(),
                    expected: parse_bool(fields[2], line)?,
                });
            }
        }
    }
    Ok(facts)
}

// -- runner ----------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FactCheck {
    pub label: String,
    pub ok: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureReport {
    pub fixture: String,
    pub checks: Vec<FactCheck>,
}

impl FixtureReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    fn push(&mut self, label: impl Into<String>, ok: bool, detail: Option<String>) {
        self.checks.push(FactCheck { label: label.into(), ok, detail });
    }
}

fn check_facts(
    report: &mut FixtureReport,
    key: &str,
    table: &RelationTable,
    facts_text: &str,
) -> Result<(), TestlabError> {
    for fact in parse_facts(facts_text)? {
        match fact {
            Fact::Eval { world, formula, expected } => {
                let f = parse(&formula)?;
                let got = table.eval(&world, &f)?;
                report.push(
                    format!("{key}: {world} |= {formula} is {expected}"),
                    got == expected,
                    (got != expected).then(|| format!("evaluated to {got}")),
                );
            }
            Fact::Min { agent, world, expected } => {
                let got: BTreeSet<String> = table
                    .min_plausible(&agent, &world)?
                    .into_iter()
                    .map(str::to_string)
                    .collect();
                report.push(
                    format!("{key}: Min[{agent}]({world}) = {expected:?}"),
                    got == expected,
                    (got != expected).then(|| format!("computed {got:?}")),
                );
            }
            Fact::Mult { agent, world, expected } => {
                let got = table.model().multiplicity(&agent, &world)?;
                report.push(
                    format!("{key}: m[{agent}]({world}) = {expected}"),
                    got == expected,
                    (got != expected).then(|| format!("computed {got}")),
                );
            }
            Fact::Rel { kind, group, x, y, expected } => {
                let got = match kind {
                    RelKind::Sim => {
                        let g: Group = group.iter().cloned().collect();
                        table.indist(&g, &x, &y)?
                    }
                    RelKind::Le => table.plaus_le(&group[0], &x, &y)?,
                    RelKind::Lt => table.plaus_lt(&group[0], &x, &y)?,
                };
                let kind_name = match kind {
                    RelKind::Sim => "sim",
                    RelKind::Le => "le",
                    RelKind::Lt => "lt",
                };
                report.push(
                    format!("{key}: {kind_name}[{}] {x} {y} is {expected}", group.join(",")),
                    got == expected,
                    (got != expected).then(|| format!("computed {got}")),
                );
            }
        }
    }
    Ok(())
}

/// Loads and checks one fixture: validation expectations, all facts, and for
/// map fixtures the morphism conditions, the positive-formula preservation
/// sweep, and the expected belief-gain witness.
pub fn run_fixture(name: &str) -> Result<FixtureReport, TestlabError> {
    let fixture = fixture(name)?;
    let mut report = FixtureReport { fixture: name.to_string(), checks: Vec::new() };
    let mut tables: Vec<(&'static str, RelationTable)> = Vec::new();

    for fm in &fixture.models {
        let model = Model::from_json(fm.json)?;
        let validation = model.validate();
        match &fm.expect {
            Expectation::Valid => {
                report.push(
                    format!("{}: validates", fm.key),
                    validation.ok(),
                    (!validation.ok()).then(|| format!("{validation}")),
                );
                if validation.ok() {
                    let table = RelationTable::new(model);
                    check_facts(&mut report, fm.key, &table, fm.facts)?;
                    tables.push((fm.key, table));
                }
            }
            Expectation::StarViolation { agent, triple } => {
                let found = validation.violations.iter().any(|v| {
                    v.rule == "star-condition"
                        && v.witness
                            == crate::model::Witness::StarTriple {
                                agent: agent.to_string(),
                                x: triple.0.to_string(),
                                y: triple.1.to_string(),
                                z: triple.2.to_string(),
                            }
                });
                report.push(
                    format!(
                        "{}: rejected with star-condition witness ({agent}, {}, {}, {})",
                        fm.key, triple.0, triple.1, triple.2
                    ),
                    found,
                    (!found).then(|| format!("{validation}")),
                );
            }
        }
    }

    if let Some(map_spec) = &fixture.map {
        let map_file = crate::morphism::MapFile::from_json(map_spec.json)?;
        let map: VertexMap = map_file.vertex_map();
        let src = &tables
            .iter()
            .find(|(k, _)| *k == map_spec.source_key)
            .expect("source model validated")
            .1;
        let tgt = &tables
            .iter()
            .find(|(k, _)| *k == map_spec.target_key)
            .expect("target model validated")
            .1;

        let morphism = check_morphism(src.model(), tgt.model(), &map)?;
        report.push(
            format!("{name}: map is a morphism"),
            morphism.is_morphism(),
            (!morphism.is_morphism()).then(|| format!("{:?}", morphism.witnesses)),
        );

        if map_spec.positive_depth > 0 {
            let mut atoms: BTreeSet<String> = src.model().atom_universe();
            atoms.extend(tgt.model().atom_universe());
            let atoms: Vec<String> = atoms.into_iter().collect();
            let groups = crate::testlab::standard_groups(src.model().agents());
            let family =
                crate::testlab::positive_family(&atoms, &groups, map_spec.positive_depth);
            let mut failures = Vec::new();
            for f in &family {
                let pres = check_positive_preservation(src, tgt, &map, f)?;
                if !pres.holds() {
                    failures.push(format!("{f} at {:?}", pres.violations));
                }
            }
            report.push(
                format!(
                    "{name}: positive preservation over {} formulas (depth {})",
                    family.len(),
                    map_spec.positive_depth
                ),
                failures.is_empty(),
                (!failures.is_empty()).then(|| failures.join("; ")),
            );
        }

        if let Some((atom, world, agent)) = map_spec.belief_gain {
            let witness = belief_gain_witness(src, tgt, &map, atom)?;
            let expected = Some((world.to_string(), agent.to_string()));
            report.push(
                format!("{name}: belief gain witness for `{atom}` is ({world}, {agent})"),
                witness == expected,
                (witness != expected).then(|| format!("found {witness:?}")),
            );
        }
    }

    Ok(report)
}
