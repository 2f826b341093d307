//! Grid world, the 17-action move model, and collision semantics.
//!
//! Time inside one window is split into four substeps. An agent moving at
//! speed `v` advances one cell per substep for the first `v` substeps and
//! then holds. Two agents conflict when they occupy the same cell at the
//! same substep (vertex conflict) or exchange cells between consecutive
//! substeps (swap conflict). `x` grows to the right and `y` grows upwards.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of substeps in one time window.
pub const SUBSTEPS: usize = 4;
/// Size of the per-agent action space.
pub const ACTION_COUNT: usize = 17;
/// Agents are tracked in 64-bit masks.
pub const MAX_AGENTS: usize = 64;

/// One-based agent identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn from_index(index: usize) -> Self {
        AgentId(index + 1)
    }

    /// Zero-based position in the state's agent list.
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of agents stored as a bitmask over zero-based indices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentSet(u64);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);

    pub fn from_bits(bits: u64) -> Self {
        AgentSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// All agents `1..=k`.
    pub fn all(k: usize) -> Self {
        if k >= 64 {
            AgentSet(u64::MAX)
        } else {
            AgentSet((1u64 << k) - 1)
        }
    }

    pub fn singleton(id: AgentId) -> Self {
        AgentSet(1u64 << id.index())
    }

    pub fn with(self, id: AgentId) -> Self {
        AgentSet(self.0 | (1u64 << id.index()))
    }

    pub fn without(self, id: AgentId) -> Self {
        AgentSet(self.0 & !(1u64 << id.index()))
    }

    pub fn contains(self, id: AgentId) -> bool {
        id.0 >= 1 && id.index() < 64 && self.0 & (1u64 << id.index()) != 0
    }

    pub fn union(self, other: AgentSet) -> Self {
        AgentSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AgentSet) -> Self {
        AgentSet(self.0 & other.0)
    }

    pub fn difference(self, other: AgentSet) -> Self {
        AgentSet(self.0 & !other.0)
    }

    pub fn intersects(self, other: AgentSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset(self, other: AgentSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in ascending id order.
    pub fn iter(self) -> impl Iterator<Item = AgentId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let index = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(AgentId::from_index(index))
        })
    }

    pub fn to_vec(self) -> Vec<AgentId> {
        self.iter().collect()
    }
}

impl FromIterator<AgentId> for AgentSet {
    fn from_iter<T: IntoIterator<Item = AgentId>>(iter: T) -> Self {
        iter.into_iter().fold(AgentSet::EMPTY, AgentSet::with)
    }
}

impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, id) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for AgentSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for AgentSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let ids = Vec::<usize>::deserialize(deserializer)?;
        ids.into_iter()
            .map(|id| {
                if (1..=MAX_AGENTS).contains(&id) {
                    Ok(AgentId(id))
                } else {
                    Err(serde::de::Error::custom(format!("agent id {id} out of range")))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl From<[i32; 2]> for Cell {
    fn from([x, y]: [i32; 2]) -> Self {
        Cell::new(x, y)
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Stay,
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const MOVES: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Stay => (0, 0),
            Direction::Up => (0, 1),
            Direction::Down => (0, -1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }

    pub fn code(self) -> char {
        match self {
            Direction::Stay => 'S',
            Direction::Up => 'U',
            Direction::Down => 'D',
            Direction::Left => 'L',
            Direction::Right => 'R',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        Some(match c {
            'S' => Direction::Stay,
            'U' => Direction::Up,
            'D' => Direction::Down,
            'L' => Direction::Left,
            'R' => Direction::Right,
            _ => return None,
        })
    }
}

/// A direction plus a speed in cells per window. `Stay` is always speed 0;
/// every other direction has speed 1 to 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    direction: Direction,
    speed: u8,
}

const fn act(direction: Direction, speed: u8) -> Action {
    Action { direction, speed }
}

/// Canonical order: S0, U1..U4, D1..D4, L1..L4, R1..R4.
pub const ACTIONS: [Action; ACTION_COUNT] = [
    act(Direction::Stay, 0),
    act(Direction::Up, 1),
    act(Direction::Up, 2),
    act(Direction::Up, 3),
    act(Direction::Up, 4),
    act(Direction::Down, 1),
    act(Direction::Down, 2),
    act(Direction::Down, 3),
    act(Direction::Down, 4),
    act(Direction::Left, 1),
    act(Direction::Left, 2),
    act(Direction::Left, 3),
    act(Direction::Left, 4),
    act(Direction::Right, 1),
    act(Direction::Right, 2),
    act(Direction::Right, 3),
    act(Direction::Right, 4),
];

impl Action {
    pub const STAY: Action = act(Direction::Stay, 0);

    pub fn new(direction: Direction, speed: u8) -> Result<Self> {
        let valid = match direction {
            Direction::Stay => speed == 0,
            _ => (1..=4).contains(&speed),
        };
        if valid {
            Ok(act(direction, speed))
        } else {
            Err(Error::InvalidAction(format!("{}{}", direction.code(), speed)))
        }
    }

    pub fn direction(self) -> Direction {
        self.direction
    }

    pub fn speed(self) -> u8 {
        self.speed
    }

    /// Position in the canonical action list.
    pub fn index(self) -> usize {
        match self.direction {
            Direction::Stay => 0,
            Direction::Up => self.speed as usize,
            Direction::Down => 4 + self.speed as usize,
            Direction::Left => 8 + self.speed as usize,
            Direction::Right => 12 + self.speed as usize,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.direction.code(), self.speed)
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        let (Some(d), Some(v), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::InvalidAction(s.to_string()));
        };
        let direction = Direction::from_code(d).ok_or_else(|| Error::InvalidAction(s.to_string()))?;
        let speed = v.to_digit(10).ok_or_else(|| Error::InvalidAction(s.to_string()))? as u8;
        Action::new(direction, speed).map_err(|_| Error::InvalidAction(s.to_string()))
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All 17 actions in canonical order.
pub fn enumerate_actions() -> Vec<Action> {
    ACTIONS.to_vec()
}

/// One action per agent, indexed by agent position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointAction(Vec<Action>);

impl JointAction {
    pub fn new(actions: Vec<Action>) -> Self {
        JointAction(actions)
    }

    pub fn uniform(k: usize, action: Action) -> Self {
        JointAction(vec![action; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: AgentId) -> Result<Action> {
        id.0.checked_sub(1)
            .and_then(|i| self.0.get(i))
            .copied()
            .ok_or(Error::UnknownAgent(id))
    }

    pub fn set(&mut self, id: AgentId, action: Action) -> Result<()> {
        let slot = id.0.checked_sub(1).and_then(|i| self.0.get_mut(i)).ok_or(Error::UnknownAgent(id))?;
        *slot = action;
        Ok(())
    }

    pub fn as_slice(&self) -> &[Action] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, Action)> + '_ {
        self.0.iter().enumerate().map(|(i, a)| (AgentId::from_index(i), *a))
    }
}

/// The Move de Rigueur of every agent: the default action used as the
/// counterfactual baseline.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MdrProfile(JointAction);

impl MdrProfile {
    /// Every agent's MdR is to stay.
    pub fn stay(k: usize) -> Self {
        MdrProfile(JointAction::uniform(k, Action::STAY))
    }

    pub fn new(actions: Vec<Action>) -> Self {
        MdrProfile(JointAction(actions))
    }

    pub fn get(&self, id: AgentId) -> Result<Action> {
        self.0.get(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_joint(&self) -> &JointAction {
        &self.0
    }
}

/// Grid geometry, obstacles and agent positions. Agent `i` (1-based) sits at
/// `agents()[i - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridStateRepr", into = "GridStateRepr")]
pub struct GridState {
    width: i32,
    height: i32,
    obstacles: BTreeSet<Cell>,
    blocked: Vec<bool>,
    agents: Vec<Cell>,
}

#[derive(Serialize, Deserialize)]
struct GridStateRepr {
    width: i32,
    height: i32,
    obstacles: Vec<Cell>,
    agents: Vec<Cell>,
}

impl TryFrom<GridStateRepr> for GridState {
    type Error = Error;

    fn try_from(r: GridStateRepr) -> Result<Self> {
        GridState::new(r.width, r.height, r.obstacles, r.agents)
    }
}

impl From<GridState> for GridStateRepr {
    fn from(s: GridState) -> Self {
        GridStateRepr {
            width: s.width,
            height: s.height,
            obstacles: s.obstacles.into_iter().collect(),
            agents: s.agents,
        }
    }
}

impl GridState {
    pub fn new(width: i32, height: i32, obstacles: impl IntoIterator<Item = Cell>, agents: Vec<Cell>) -> Result<Self> {
        if width <= 0 || height <= 0 {
            return Err(Error::InvalidState(format!("grid must be non-empty, got {width}x{height}")));
        }
        if agents.len() > MAX_AGENTS {
            return Err(Error::InvalidState(format!("at most {MAX_AGENTS} agents supported, got {}", agents.len())));
        }
        let mut blocked = vec![false; (width * height) as usize];
        let mut set = BTreeSet::new();
        for c in obstacles {
            if c.x < 0 || c.y < 0 || c.x >= width || c.y >= height {
                return Err(Error::InvalidState(format!("obstacle {c} outside {width}x{height} grid")));
            }
            blocked[(c.y * width + c.x) as usize] = true;
            set.insert(c);
        }
        let state = GridState { width, height, obstacles: set, blocked, agents };
        let mut seen = BTreeSet::new();
        for (i, &c) in state.agents.iter().enumerate() {
            let id = AgentId::from_index(i);
            if !state.in_bounds(c) {
                return Err(Error::InvalidState(format!("agent {id} at {c} is outside the grid")));
            }
            if state.is_obstacle(c) {
                return Err(Error::InvalidState(format!("agent {id} at {c} sits on an obstacle")));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidState(format!("agent {id} at {c} overlaps another agent")));
            }
        }
        Ok(state)
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn obstacles(&self) -> impl Iterator<Item = Cell> + '_ {
        self.obstacles.iter().copied()
    }

    pub fn agents(&self) -> &[Cell] {
        &self.agents
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len()).map(AgentId::from_index)
    }

    pub fn all_agents(&self) -> AgentSet {
        AgentSet::all(self.agents.len())
    }

    pub fn position(&self, id: AgentId) -> Result<Cell> {
        id.0.checked_sub(1)
            .and_then(|i| self.agents.get(i))
            .copied()
            .ok_or(Error::UnknownAgent(id))
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.blocked[(c.y * self.width + c.x) as usize]
    }

    /// In bounds and not an obstacle.
    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked[(c.y * self.width + c.x) as usize]
    }

    pub fn check_agent(&self, id: AgentId) -> Result<()> {
        self.position(id).map(|_| ())
    }

    pub fn check_joint(&self, joint: &JointAction) -> Result<()> {
        if joint.len() != self.agents.len() {
            return Err(Error::ActionCountMismatch { expected: self.agents.len(), got: joint.len() });
        }
        Ok(())
    }

    /// Same geometry, agents moved.
    pub fn with_agents(&self, agents: Vec<Cell>) -> Result<Self> {
        GridState::new(self.width, self.height, self.obstacles.iter().copied(), agents)
    }
}

/// Cells occupied at substeps 1 through 4; substep 0 is `origin` itself.
pub fn action_path(origin: Cell, action: Action) -> [Cell; SUBSTEPS] {
    let (dx, dy) = action.direction.delta();
    std::array::from_fn(|t| {
        let steps = (t as i32 + 1).min(action.speed as i32);
        origin.offset(dx * steps, dy * steps)
    })
}

/// Vertex or swap conflict between two agents following their paths.
pub fn paths_conflict(a0: Cell, a: &[Cell; SUBSTEPS], b0: Cell, b: &[Cell; SUBSTEPS]) -> bool {
    let (mut pa, mut pb) = (a0, b0);
    for t in 0..SUBSTEPS {
        let (qa, qb) = (a[t], b[t]);
        if qa == qb || (qa == pb && qb == pa) {
            return true;
        }
        pa = qa;
        pb = qb;
    }
    false
}

fn path_is_free(state: &GridState, path: &[Cell; SUBSTEPS]) -> bool {
    path.iter().all(|&c| state.is_free(c))
}

/// Whether `candidate` is collision-free for agent `j` while every other
/// agent follows its entry in `joint`. Agent `j`'s own entry is ignored.
pub fn is_feasible(state: &GridState, joint: &JointAction, j: AgentId, candidate: Action) -> Result<bool> {
    state.check_joint(joint)?;
    let origin = state.position(j)?;
    let path = action_path(origin, candidate);
    if !path_is_free(state, &path) {
        return Ok(false);
    }
    for (i, a) in joint.iter() {
        if i == j {
            continue;
        }
        let other = state.agents[i.index()];
        if paths_conflict(origin, &path, other, &action_path(other, a)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `n(s, A, j)`: how many of the 17 actions are feasible for agent `j`.
pub fn count_feasible(state: &GridState, joint: &JointAction, j: AgentId) -> Result<u32> {
    state.check_joint(joint)?;
    let origin = state.position(j)?;
    let others: Vec<(Cell, [Cell; SUBSTEPS])> = joint
        .iter()
        .filter(|&(i, _)| i != j)
        .map(|(i, a)| {
            let c = state.agents[i.index()];
            (c, action_path(c, a))
        })
        .collect();
    let n = ACTIONS
        .iter()
        .filter(|&&b| {
            let path = action_path(origin, b);
            path_is_free(state, &path) && others.iter().all(|(c, p)| !paths_conflict(origin, &path, *c, p))
        })
        .count();
    Ok(n as u32)
}

/// Per-candidate conflict masks for one affected agent.
///
/// Because feasibility only looks at pairwise conflicts between the affected
/// agent and each other agent, the count under any intervention `A_{G→μ}`
/// follows from two masks per candidate: the agents whose actual action
/// blocks it and the agents whose MdR blocks it.
#[derive(Debug, Clone)]
pub struct FeasibilityTable {
    affected: AgentId,
    self_ok: [bool; ACTION_COUNT],
    blocked_by_actual: [AgentSet; ACTION_COUNT],
    blocked_by_mdr: [AgentSet; ACTION_COUNT],
    /// Agents whose actual action differs from their MdR.
    deviating: AgentSet,
}

impl FeasibilityTable {
    pub fn new(state: &GridState, actual: &JointAction, mdr: &MdrProfile, affected: AgentId) -> Result<Self> {
        state.check_joint(actual)?;
        state.check_joint(mdr.as_joint())?;
        let origin = state.position(affected)?;
        let mut self_ok = [false; ACTION_COUNT];
        let mut blocked_by_actual = [AgentSet::EMPTY; ACTION_COUNT];
        let mut blocked_by_mdr = [AgentSet::EMPTY; ACTION_COUNT];
        let mut deviating = AgentSet::EMPTY;
        let candidates: Vec<[Cell; SUBSTEPS]> = ACTIONS.iter().map(|&b| action_path(origin, b)).collect();
        for (b, path) in candidates.iter().enumerate() {
            self_ok[b] = path_is_free(state, path);
        }
        for (i, a) in actual.iter() {
            if i == affected {
                continue;
            }
            let m = mdr.get(i)?;
            if a != m {
                deviating = deviating.with(i);
            }
            let c = state.agents[i.index()];
            let actual_path = action_path(c, a);
            let mdr_path = action_path(c, m);
            for (b, path) in candidates.iter().enumerate() {
                if paths_conflict(origin, path, c, &actual_path) {
                    blocked_by_actual[b] = blocked_by_actual[b].with(i);
                }
                if paths_conflict(origin, path, c, &mdr_path) {
                    blocked_by_mdr[b] = blocked_by_mdr[b].with(i);
                }
            }
        }
        Ok(FeasibilityTable { affected, self_ok, blocked_by_actual, blocked_by_mdr, deviating })
    }

    pub fn affected(&self) -> AgentId {
        self.affected
    }

    pub fn deviating(&self) -> AgentSet {
        self.deviating
    }

    /// `n(s, A_{G→μ}, j)` for `G = intervened`.
    pub fn count(&self, intervened: AgentSet) -> u32 {
        (0..ACTION_COUNT)
            .filter(|&b| {
                self.self_ok[b]
                    && self.blocked_by_actual[b].difference(intervened).is_empty()
                    && !self.blocked_by_mdr[b].intersects(intervened)
            })
            .count() as u32
    }
}

/// Advance every agent through one window. A mover halts for the rest of the
/// window when its next substep would leave the free cells or create a
/// vertex or swap conflict; halting is repeated until no conflicts remain.
pub fn apply_moves(state: &GridState, joint: &JointAction) -> Result<GridState> {
    state.check_joint(joint)?;
    let k = state.agents.len();
    let mut pos = state.agents.clone();
    let mut halted = vec![false; k];
    for t in 1..=SUBSTEPS {
        let mut next: Vec<Cell> = (0..k)
            .map(|i| {
                let a = joint.0[i];
                if halted[i] || t > a.speed as usize {
                    pos[i]
                } else {
                    let (dx, dy) = a.direction.delta();
                    pos[i].offset(dx, dy)
                }
            })
            .collect();
        loop {
            let stop: Vec<usize> = (0..k)
                .filter(|&i| next[i] != pos[i])
                .filter(|&i| {
                    !state.is_free(next[i])
                        || (0..k).any(|o| o != i && (next[o] == next[i] || (next[o] == pos[i] && next[i] == pos[o])))
                })
                .collect();
            if stop.is_empty() {
                break;
            }
            for i in stop {
                next[i] = pos[i];
                halted[i] = true;
            }
        }
        pos = next;
    }
    state.with_agents(pos)
}
