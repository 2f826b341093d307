//! Scenario fixture files.
//!
//! ```json
//! { "width": 5, "height": 3, "obstacles": [[0, 0]],
//!   "agents": [{ "id": 1, "x": 1, "y": 1, "action": "R2", "mdr": "S0" }] }
//! ```
//!
//! `mdr` defaults to `S0`. An optional `description` string documents the
//! layout.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Action, AgentId, Cell, GridState, JointAction, MdrProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureAgent {
    pub id: usize,
    pub x: i32,
    pub y: i32,
    pub action: Action,
    #[serde(default = "stay")]
    pub mdr: Action,
}

fn stay() -> Action {
    Action::STAY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub width: i32,
    pub height: i32,
    #[serde(default)]
    pub obstacles: Vec<Cell>,
    pub agents: Vec<FixtureAgent>,
}

/// A validated state, joint action and MdR profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub description: Option<String>,
    pub state: GridState,
    pub joint: JointAction,
    pub mdr: MdrProfile,
}

impl Fixture {
    pub fn to_file(&self) -> FixtureFile {
        FixtureFile {
            description: self.description.clone(),
            width: self.state.width(),
            height: self.state.height(),
            obstacles: self.state.obstacles().collect(),
            agents: self
                .state
                .agents()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let id = AgentId::from_index(i);
                    FixtureAgent {
                        id: id.0,
                        x: c.x,
                        y: c.y,
                        action: self.joint.get(id).expect("joint covers state"),
                        mdr: self.mdr.get(id).expect("mdr covers state"),
                    }
                })
                .collect(),
        }
    }
}

impl FixtureFile {
    pub fn validate(self, origin: &str) -> Result<Fixture> {
        let err = |message: String| Error::Fixture { path: origin.to_string(), message };
        let mut agents = self.agents;
        agents.sort_by_key(|a| a.id);
        for (i, a) in agents.iter().enumerate() {
            if a.id != i + 1 {
                return Err(err(format!("agents: ids must be unique and contiguous from 1, found id {} at position {}", a.id, i + 1)));
            }
        }
        let cells = agents.iter().map(|a| Cell::new(a.x, a.y)).collect();
        let state = GridState::new(self.width, self.height, self.obstacles, cells).map_err(|e| err(e.to_string()))?;
        let joint = JointAction::new(agents.iter().map(|a| a.action).collect());
        let mdr = MdrProfile::new(agents.iter().map(|a| a.mdr).collect());
        Ok(Fixture { description: self.description, state, joint, mdr })
    }
}

/// Parse fixture JSON; `origin` names the source in error messages.
pub fn parse_fixture(text: &str, origin: &str) -> Result<Fixture> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: FixtureFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Fixture {
        path: origin.to_string(),
        message: format!("{}: {}", e.path(), e.inner()),
    })?;
    file.validate(origin)
}

pub fn load_fixture(path: impl AsRef<Path>) -> Result<Fixture> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Fixture { path: origin.clone(), message: e.to_string() })?;
    parse_fixture(&text, &origin)
}

/// Names of the fixtures shipped with the crate.
pub const BUNDLED: [&str; 3] = ["fig3_three_agents", "fig4_seven_agents", "s1_robot_crossing"];

pub fn bundled_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig3_three_agents" => include_str!("../fixtures/fig3_three_agents.json"),
        "fig4_seven_agents" => include_str!("../fixtures/fig4_seven_agents.json"),
        "s1_robot_crossing" => include_str!("../fixtures/s1_robot_crossing.json"),
        _ => return None,
    })
}

pub fn bundled(name: &str) -> Result<Fixture> {
    let text = bundled_source(name).ok_or_else(|| Error::Fixture {
        path: name.to_string(),
        message: format!("no bundled fixture named `{name}`"),
    })?;
    parse_fixture(text, name)
}

/// Load a fixture from a path, falling back to a bundled fixture name.
pub fn build_fixture(path_or_name: &str) -> Result<Fixture> {
    if Path::new(path_or_name).exists() || bundled_source(path_or_name).is_none() {
        load_fixture(path_or_name)
    } else {
        bundled(path_or_name)
    }
}
