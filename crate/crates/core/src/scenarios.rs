//! Randomised scenario generators and batch driver.
//!
//! All randomised scenarios use a 16×16 map with two crossing corridors,
//! four cells wide, meeting in the square `[6, 10) × [6, 10)`. Each
//! simulation draws from its own ChaCha stream selected by
//! `(scenario, simulation)`, so simulations can run in any order or in
//! parallel and still reproduce exactly.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_case, CaseResult};
use crate::error::{Error, Result};
use crate::fear::FearConfig;
use crate::fixture::build_fixture;
use crate::grid::{apply_moves, Action, Cell, Direction, GridState, JointAction, MdrProfile, ACTIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Fixture,
    Aggressive,
    Directed,
    Random,
}

impl ScenarioKind {
    fn stream_tag(self) -> u64 {
        match self {
            ScenarioKind::Fixture => 0,
            ScenarioKind::Aggressive => 1,
            ScenarioKind::Directed => 2,
            ScenarioKind::Random => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Fixture => "fixture",
            ScenarioKind::Aggressive => "aggressive",
            ScenarioKind::Directed => "directed",
            ScenarioKind::Random => "random",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixture" => Ok(ScenarioKind::Fixture),
            "aggressive" => Ok(ScenarioKind::Aggressive),
            "directed" => Ok(ScenarioKind::Directed),
            "random" => Ok(ScenarioKind::Random),
            _ => Err(Error::InvalidConfig(format!("unknown scenario `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapId {
    #[default]
    Crossroads16,
}

/// Lower-left corner and side of the intersection square.
const JUNCTION_LO: i32 = 6;
const JUNCTION_HI: i32 = 10;
const MAP_SIDE: i32 = 16;
/// Directed agents at or beyond this column have crossed the midline.
pub const MIDLINE_X: i32 = 8;

impl MapId {
    pub fn build(self, agents: Vec<Cell>) -> Result<GridState> {
        match self {
            MapId::Crossroads16 => {
                let obstacles = (0..MAP_SIDE)
                    .flat_map(|y| (0..MAP_SIDE).map(move |x| Cell::new(x, y)))
                    .filter(|&c| !in_corridor(c));
                GridState::new(MAP_SIDE, MAP_SIDE, obstacles, agents)
            }
        }
    }

    pub fn free_cells(self) -> Vec<Cell> {
        match self {
            MapId::Crossroads16 => (0..MAP_SIDE)
                .flat_map(|y| (0..MAP_SIDE).map(move |x| Cell::new(x, y)))
                .filter(|&c| in_corridor(c))
                .collect(),
        }
    }

    /// Fixed spawn cells left of the intersection, in fill order: nearest
    /// column first, every other column.
    pub fn directed_spawns(self) -> Vec<Cell> {
        let columns = [5, 3, 1, 4, 2, 0];
        columns
            .iter()
            .flat_map(|&x| (JUNCTION_LO..JUNCTION_HI).map(move |y| Cell::new(x, y)))
            .collect()
    }
}

fn in_band(v: i32) -> bool {
    (JUNCTION_LO..JUNCTION_HI).contains(&v)
}

fn in_corridor(c: Cell) -> bool {
    in_band(c.x) || in_band(c.y)
}

pub fn in_junction(c: Cell) -> bool {
    in_band(c.x) && in_band(c.y)
}

/// L1 distance from a cell to the intersection square.
pub fn distance_to_junction(c: Cell) -> i32 {
    let gap = |v: i32| (JUNCTION_LO - v).max(v - (JUNCTION_HI - 1)).max(0);
    gap(c.x) + gap(c.y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_path: Option<PathBuf>,
    #[serde(default)]
    pub map: MapId,
    pub n_agents: usize,
    pub n_simulations: usize,
    pub n_iterations: usize,
    pub seed: u64,
    #[serde(default)]
    pub fear: FearConfig,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        ScenarioConfig {
            kind,
            fixture_path: None,
            map: MapId::default(),
            n_agents: 8,
            n_simulations: 50,
            n_iterations: 5,
            seed,
            fear: FearConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_simulations == 0 || self.n_iterations == 0 {
            return Err(Error::InvalidConfig("n_simulations and n_iterations must be at least 1".into()));
        }
        self.fear.validate()?;
        match self.kind {
            ScenarioKind::Fixture if self.fixture_path.is_none() => {
                Err(Error::InvalidConfig("fixture scenarios need a fixture_path".into()))
            }
            ScenarioKind::Fixture => Ok(()),
            ScenarioKind::Aggressive => {
                let free = self.map.free_cells().len();
                if self.n_agents > free {
                    return Err(Error::InvalidConfig(format!("{} agents do not fit in {free} free cells", self.n_agents)));
                }
                Ok(())
            }
            ScenarioKind::Directed | ScenarioKind::Random => {
                let spawns = self.map.directed_spawns().len();
                if self.n_agents > spawns {
                    return Err(Error::InvalidConfig(format!(
                        "{} agents do not fit in {spawns} spawn cells",
                        self.n_agents
                    )));
                }
                Ok(())
            }
        }
    }

    /// The random stream of one simulation.
    pub fn stream(&self, simulation: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.kind.stream_tag() << 32) | simulation as u64);
        rng
    }
}

fn spawn(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<GridState> {
    let cells = match config.kind {
        ScenarioKind::Aggressive => {
            let free = config.map.free_cells();
            sample(rng, free.len(), config.n_agents).into_iter().map(|i| free[i]).collect()
        }
        ScenarioKind::Directed | ScenarioKind::Random => {
            config.map.directed_spawns().into_iter().take(config.n_agents).collect()
        }
        ScenarioKind::Fixture => unreachable!("fixtures are loaded, not spawned"),
    };
    config.map.build(cells)
}

fn toward_junction(c: Cell, rng: &mut ChaCha8Rng) -> Direction {
    if c.x < JUNCTION_LO {
        Direction::Right
    } else if c.x >= JUNCTION_HI {
        Direction::Left
    } else if c.y < JUNCTION_LO {
        Direction::Up
    } else if c.y >= JUNCTION_HI {
        Direction::Down
    } else {
        Direction::MOVES[rng.random_range(0..4)]
    }
}

fn sample_actions(config: &ScenarioConfig, state: &GridState, rng: &mut ChaCha8Rng) -> Result<JointAction> {
    state
        .agents()
        .iter()
        .map(|&c| match config.kind {
            ScenarioKind::Aggressive => Action::new(toward_junction(c, rng), rng.random_range(2..=4)),
            ScenarioKind::Directed => {
                let speed = if c.x < MIDLINE_X { rng.random_range(2..=3) } else { rng.random_range(0..=1) };
                if speed == 0 {
                    Ok(Action::STAY)
                } else {
                    Action::new(Direction::Right, speed)
                }
            }
            ScenarioKind::Random => Ok(ACTIONS[rng.random_range(0..ACTIONS.len())]),
            ScenarioKind::Fixture => unreachable!("fixture actions are fixed"),
        })
        .collect::<Result<Vec<_>>>()
        .map(JointAction::new)
}

/// One simulation's sequence of (state, joint action, MdR) over all
/// iterations. Fixture simulations replay the fixture's joint action on the
/// advancing state.
pub fn simulate_states(config: &ScenarioConfig, simulation: usize) -> Result<Vec<(GridState, JointAction, MdrProfile)>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.n_iterations);
    if config.kind == ScenarioKind::Fixture {
        let path = config.fixture_path.as_ref().expect("validated");
        let fixture = build_fixture(&path.to_string_lossy())?;
        let mut state = fixture.state;
        for _ in 0..config.n_iterations {
            let next = apply_moves(&state, &fixture.joint)?;
            out.push((state, fixture.joint.clone(), fixture.mdr.clone()));
            state = next;
        }
        return Ok(out);
    }
    let mut rng = config.stream(simulation);
    let mut state = spawn(config, &mut rng)?;
    let mdr = MdrProfile::stay(config.n_agents);
    for _ in 0..config.n_iterations {
        let joint = sample_actions(config, &state, &mut rng)?;
        let next = apply_moves(&state, &joint)?;
        out.push((state, joint, mdr.clone()));
        state = next;
    }
    Ok(out)
}

/// The state and joint action at `(simulation, iteration)`, replayed from
/// the simulation's stream.
pub fn sample_case(config: &ScenarioConfig, simulation: usize, iteration: usize) -> Result<(GridState, JointAction)> {
    if iteration >= config.n_iterations {
        return Err(Error::InvalidConfig(format!(
            "iteration {iteration} out of range for {} iterations",
            config.n_iterations
        )));
    }
    let mut states = simulate_states(config, simulation)?;
    let (state, joint, _) = states.swap_remove(iteration);
    Ok((state, joint))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub scenario: ScenarioKind,
    pub simulation: usize,
    pub iteration: usize,
    pub state: GridState,
    pub joint: JointAction,
    pub mdr: MdrProfile,
    pub analysis: CaseResult,
}

fn run_simulation(config: &ScenarioConfig, simulation: usize) -> Result<Vec<CaseRecord>> {
    simulate_states(config, simulation)?
        .into_iter()
        .enumerate()
        .map(|(iteration, (state, joint, mdr))| {
            let analysis = analyze_case(&state, &joint, &mdr, &config.fear)
                .map_err(|e| Error::Case { simulation, iteration, source: Box::new(e) })?;
            Ok(CaseRecord { scenario: config.kind, simulation, iteration, state, joint, mdr, analysis })
        })
        .collect()
}

/// Every case of every simulation, ordered by (simulation, iteration).
pub fn run_batch(config: &ScenarioConfig) -> Result<Vec<CaseRecord>> {
    config.validate()?;
    let per_sim = (0..config.n_simulations)
        .into_par_iter()
        .map(|s| run_simulation(config, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_sim.into_iter().flatten().collect())
}
