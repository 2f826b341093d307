//! Python bindings: `import fear_py`.
//!
//! Joint actions and MdR profiles are lists of action codes such as
//! `["R2", "S0"]`; agents are numbered from 1. Structured results come back
//! as plain dicts and lists.

use fear_core::fixture::{bundled, load_fixture, parse_fixture};
use fear_core::ranking::{RankSource, RankVector};
use fear_core::{
    analyze_case, run_batch, tiering, AgentId, AgentSet, Cell, FearConfig, GroupFearGame, JointAction, MdrProfile,
    ScenarioConfig,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: fear_core::Error) -> PyErr {
    use fear_core::Error as E;
    match e {
        E::Case { .. } | E::Inconsistent(_) | E::EfficiencyViolation { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(module = "fear_py", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Action(fear_core::Action);

#[pymethods]
impl Action {
    #[new]
    fn new(code: &str) -> PyResult<Self> {
        code.parse().map(Action).map_err(to_py)
    }

    /// All 17 actions in canonical order.
    #[staticmethod]
    fn all() -> Vec<Action> {
        fear_core::enumerate_actions().into_iter().map(Action).collect()
    }

    #[getter]
    fn direction(&self) -> String {
        self.0.direction().code().to_string()
    }

    #[getter]
    fn speed(&self) -> u8 {
        self.0.speed()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Action('{}')", self.0)
    }
}

fn parse_actions(codes: &[String]) -> PyResult<Vec<fear_core::Action>> {
    codes.iter().map(|c| c.parse().map_err(to_py)).collect()
}

fn joint_of(codes: &[String]) -> PyResult<JointAction> {
    Ok(JointAction::new(parse_actions(codes)?))
}

fn mdr_of(codes: Option<Vec<String>>, k: usize) -> PyResult<MdrProfile> {
    match codes {
        Some(c) => Ok(MdrProfile::new(parse_actions(&c)?)),
        None => Ok(MdrProfile::stay(k)),
    }
}

fn group_of(ids: &[usize]) -> AgentSet {
    ids.iter().map(|&i| AgentId(i)).collect()
}

fn ids_of(set: AgentSet) -> Vec<usize> {
    set.iter().map(|a| a.0).collect()
}

#[pyclass(module = "fear_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct GridState(fear_core::GridState);

#[pymethods]
impl GridState {
    #[new]
    #[pyo3(signature = (width, height, agents, obstacles = Vec::new()))]
    fn new(width: i32, height: i32, agents: Vec<(i32, i32)>, obstacles: Vec<(i32, i32)>) -> PyResult<Self> {
        let cell = |(x, y)| Cell::new(x, y);
        fear_core::GridState::new(width, height, obstacles.into_iter().map(cell), agents.into_iter().map(cell).collect())
            .map(GridState)
            .map_err(to_py)
    }

    #[getter]
    fn width(&self) -> i32 {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> i32 {
        self.0.height()
    }

    #[getter]
    fn agents(&self) -> Vec<(i32, i32)> {
        self.0.agents().iter().map(|c| (c.x, c.y)).collect()
    }

    #[getter]
    fn obstacles(&self) -> Vec<(i32, i32)> {
        self.0.obstacles().map(|c| (c.x, c.y)).collect()
    }

    /// The state after everyone executes `joint`.
    fn step(&self, joint: Vec<String>) -> PyResult<GridState> {
        fear_core::apply_moves(&self.0, &joint_of(&joint)?).map(GridState).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("GridState({}x{}, {} agents)", self.0.width(), self.0.height(), self.0.agent_count())
    }
}

#[pyclass(module = "fear_py", frozen, skip_from_py_object)]
struct Fixture(fear_core::Fixture);

#[pymethods]
impl Fixture {
    /// One of the fixtures shipped with the library, by name.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Fixture> {
        bundled(name).map(Fixture).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Fixture> {
        load_fixture(path).map(Fixture).map_err(to_py)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Fixture> {
        parse_fixture(text, "<string>").map(Fixture).map_err(to_py)
    }

    #[getter]
    fn state(&self) -> GridState {
        GridState(self.0.state.clone())
    }

    #[getter]
    fn joint(&self) -> Vec<String> {
        self.0.joint.iter().map(|(_, a)| a.to_string()).collect()
    }

    #[getter]
    fn mdr(&self) -> Vec<String> {
        self.0.mdr.as_joint().iter().map(|(_, a)| a.to_string()).collect()
    }

    #[getter]
    fn description(&self) -> Option<String> {
        self.0.description.clone()
    }

    /// Full analysis as nested dicts.
    fn analyze<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let f = &self.0;
        let result = analyze_case(&f.state, &f.joint, &f.mdr, &FearConfig::default()).map_err(to_py)?;
        json_to_py(py, &result)
    }
}

/// `n(s, A, j)`: feasible actions left to agent `affected`.
#[pyfunction]
fn count_feasible(state: &GridState, joint: Vec<String>, affected: usize) -> PyResult<u32> {
    fear_core::count_feasible(&state.0, &joint_of(&joint)?, AgentId(affected)).map_err(to_py)
}

/// Raw FeAR of `group` on `affected`.
#[pyfunction]
#[pyo3(signature = (state, joint, group, affected, mdr = None))]
fn fear_group(state: &GridState, joint: Vec<String>, group: Vec<usize>, affected: usize, mdr: Option<Vec<String>>) -> PyResult<f64> {
    let mdr = mdr_of(mdr, state.0.agent_count())?;
    fear_core::fear_group(&state.0, &joint_of(&joint)?, &mdr, group_of(&group), AgentId(affected), &FearConfig::default())
        .map(|v| v.raw)
        .map_err(to_py)
}

/// Raw pairwise FeAR; `m[i][j]` is agent `i + 1` acting on agent `j + 1`.
#[pyfunction]
#[pyo3(signature = (state, joint, mdr = None))]
fn fear_matrix(state: &GridState, joint: Vec<String>, mdr: Option<Vec<String>>) -> PyResult<Vec<Vec<f64>>> {
    let k = state.0.agent_count();
    let mdr = mdr_of(mdr, k)?;
    let m = fear_core::fear_matrix(&state.0, &joint_of(&joint)?, &mdr, &FearConfig::default()).map_err(to_py)?;
    Ok((1..=k).map(|i| (1..=k).map(|j| m.raw(AgentId(i), AgentId(j))).collect()).collect())
}

/// Tiers of assertive groups acting on `affected`.
#[pyfunction(name = "tiering")]
#[pyo3(signature = (state, joint, affected, mdr = None))]
fn tiers<'py>(
    py: Python<'py>,
    state: &GridState,
    joint: Vec<String>,
    affected: usize,
    mdr: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mdr = mdr_of(mdr, state.0.agent_count())?;
    let ts = tiering(&state.0, &joint_of(&joint)?, &mdr, AgentId(affected), &FearConfig::default()).map_err(to_py)?;
    let tiers: Vec<Vec<Vec<usize>>> = ts.tiers.iter().map(|t| t.iter().map(|&g| ids_of(g)).collect()).collect();
    let out = PyDict::new(py);
    out.set_item("courteous", ids_of(ts.courteous))?;
    out.set_item("tiers", tiers)?;
    out.set_item("fear_at_tier", ts.fear_at_tier)?;
    Ok(out)
}

/// Shapley values of group FeAR on `affected`, keyed by actor.
#[pyfunction]
#[pyo3(signature = (state, joint, affected, mdr = None))]
fn shapley<'py>(
    py: Python<'py>,
    state: &GridState,
    joint: Vec<String>,
    affected: usize,
    mdr: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mdr = mdr_of(mdr, state.0.agent_count())?;
    let game = GroupFearGame::new(&state.0, &joint_of(&joint)?, &mdr, AgentId(affected), &FearConfig::default())
        .map_err(to_py)?;
    let result = fear_core::ranking::shapley_with(&game).map_err(to_py)?;
    let out = PyDict::new(py);
    for (i, v) in result.values {
        out.set_item(i.0, v)?;
    }
    Ok(out)
}

fn rank_vector(ranks: &[u32]) -> RankVector {
    let k = ranks.len() + 1;
    RankVector {
        affected: AgentId(k),
        source: RankSource::Tier,
        ranks: ranks.iter().enumerate().map(|(i, &r)| (AgentId(i + 1), r)).collect(),
        nonassertive_rank: k as u32 + 1,
    }
}

/// Kendall's tau-b of two rank lists; `None` if either is fully tied.
#[pyfunction]
fn kendall_tau(a: Vec<u32>, b: Vec<u32>) -> PyResult<Option<f64>> {
    if a.len() != b.len() {
        return Err(PyValueError::new_err(format!("rank lists differ in length: {} vs {}", a.len(), b.len())));
    }
    fear_core::kendall_tau(&rank_vector(&a), &rank_vector(&b)).map_err(to_py)
}

/// Full analysis of one interaction as nested dicts.
#[pyfunction]
#[pyo3(signature = (state, joint, mdr = None))]
fn analyze<'py>(py: Python<'py>, state: &GridState, joint: Vec<String>, mdr: Option<Vec<String>>) -> PyResult<Bound<'py, PyAny>> {
    let mdr = mdr_of(mdr, state.0.agent_count())?;
    let result = analyze_case(&state.0, &joint_of(&joint)?, &mdr, &FearConfig::default()).map_err(to_py)?;
    json_to_py(py, &result)
}

/// Run one scenario batch; returns the case records as dicts.
#[pyfunction]
#[pyo3(signature = (scenario, seed, n_sims = 50, n_iters = 5, n_agents = 8))]
fn run_scenario<'py>(
    py: Python<'py>,
    scenario: &str,
    seed: u64,
    n_sims: usize,
    n_iters: usize,
    n_agents: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let kind = scenario.parse().map_err(to_py)?;
    let config = ScenarioConfig { n_simulations: n_sims, n_iterations: n_iters, n_agents, ..ScenarioConfig::new(kind, seed) };
    let records = py.detach(|| run_batch(&config)).map_err(to_py)?;
    json_to_py(py, &records)
}

#[pymodule]
fn fear_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Action>()?;
    m.add_class::<GridState>()?;
    m.add_class::<Fixture>()?;
    m.add_function(wrap_pyfunction!(count_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(fear_group, m)?)?;
    m.add_function(wrap_pyfunction!(fear_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(tiers, m)?)?;
    m.add_function(wrap_pyfunction!(shapley, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
