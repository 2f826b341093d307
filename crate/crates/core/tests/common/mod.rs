//! Reference implementations used as test oracles. Nothing here calls the
//! crate's feasibility, FeAR, tiering, Shapley or rank code; only plain data
//! accessors are used.

#![allow(dead_code)]

use std::collections::BTreeMap;

use fear_core::grid::ACTIONS;
use fear_core::{Action, AgentId, AgentSet, Cell, Direction, GridState, JointAction, MdrProfile};
use rand::seq::SliceRandom;
use rand::Rng;

pub const EPS: f64 = 1e-6;
pub const TOL: f64 = 1e-9;

fn step(d: Direction) -> (i32, i32) {
    match d {
        Direction::Stay => (0, 0),
        Direction::Up => (0, 1),
        Direction::Down => (0, -1),
        Direction::Left => (-1, 0),
        Direction::Right => (1, 0),
    }
}

/// Positions at substeps 0..=4.
pub fn timeline(start: Cell, a: Action) -> [(i32, i32); 5] {
    let (dx, dy) = step(a.direction());
    let mut out = [(start.x, start.y); 5];
    for t in 1..5 {
        let moved = (t as u8).min(a.speed()) as i32;
        out[t] = (start.x + dx * moved, start.y + dy * moved);
    }
    out
}

fn cell_free(state: &GridState, p: (i32, i32)) -> bool {
    p.0 >= 0 && p.1 >= 0 && p.0 < state.width() && p.1 < state.height() && !state.obstacles().any(|o| o.x == p.0 && o.y == p.1)
}

/// Brute-force substep simulation of one candidate for agent `j` against the
/// fixed actions of everyone else.
pub fn oracle_feasible(state: &GridState, actions: &[Action], j: usize, candidate: Action) -> bool {
    let cells = state.agents();
    let mine = timeline(cells[j], candidate);
    if !mine[1..].iter().all(|&p| cell_free(state, p)) {
        return false;
    }
    for (i, &a) in actions.iter().enumerate() {
        if i == j {
            continue;
        }
        let theirs = timeline(cells[i], a);
        for t in 1..5 {
            if mine[t] == theirs[t] {
                return false;
            }
            if mine[t] == theirs[t - 1] && mine[t - 1] == theirs[t] && mine[t] != mine[t - 1] {
                return false;
            }
        }
    }
    true
}

pub fn oracle_count(state: &GridState, actions: &[Action], j: usize) -> u32 {
    ACTIONS.iter().filter(|&&b| oracle_feasible(state, actions, j, b)).count() as u32
}

/// Actions with the agents in `group` (0-based bitmask) switched to MdR.
pub fn swap_in_mdr(actions: &[Action], mdr: &[Action], group: u64) -> Vec<Action> {
    actions
        .iter()
        .zip(mdr)
        .enumerate()
        .map(|(i, (&a, &m))| if group & (1 << i) != 0 { m } else { a })
        .collect()
}

/// Raw group FeAR on 0-based `j` by the 0-based bitmask `group`.
pub fn oracle_fear(state: &GridState, actions: &[Action], mdr: &[Action], group: u64, j: usize) -> f64 {
    if group == 0 {
        return 0.0;
    }
    let n = oracle_count(state, actions, j) as f64;
    let n_cf = oracle_count(state, &swap_in_mdr(actions, mdr, group), j) as f64;
    (n_cf - n) / (n_cf + EPS)
}

/// Group FeAR values for every subset of agents, indexed by bitmask. Subsets
/// containing `j` are left at NaN.
pub fn oracle_fear_table(state: &GridState, actions: &[Action], mdr: &[Action], j: usize) -> Vec<f64> {
    let k = actions.len();
    (0..1u64 << k)
        .map(|g| if g & (1 << j) != 0 { f64::NAN } else { oracle_fear(state, actions, mdr, g, j) })
        .collect()
}

pub fn ids(mask: u64) -> Vec<usize> {
    (0..64).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect()
}

pub fn to_set(mask: u64) -> AgentSet {
    ids(mask).into_iter().map(AgentId).collect()
}

/// The tiering algorithm replayed literally over an explicit subset list: groups are
/// visited by size, then lexicographically by their sorted ids, and a group is
/// skipped once any member has been removed from the candidates.
pub fn oracle_tiers(fear: &[f64], k: usize, j: usize) -> (u64, Vec<Vec<u64>>) {
    let courteous: u64 = (0..k).filter(|&i| i != j && fear[1 << i] < -TOL).map(|i| 1 << i).sum();
    let mut candidates: u64 = (0..k).filter(|&i| i != j).map(|i| 1u64 << i).sum::<u64>() & !courteous;
    let mut r: u64 = 0;
    let mut tiers = Vec::new();
    loop {
        let mut tier = Vec::new();
        let mut size = 1;
        while size as u32 <= candidates.count_ones() {
            let mut groups: Vec<u64> = (1..1u64 << k).filter(|&g| g.count_ones() == size && g & !candidates == 0).collect();
            groups.sort_by_key(|&g| ids(g));
            for g in groups {
                if g & !candidates != 0 {
                    continue;
                }
                if fear[(r | g) as usize] > fear[r as usize] + TOL {
                    tier.push(g);
                    candidates &= !g;
                }
            }
            size += 1;
        }
        if tier.is_empty() {
            break;
        }
        r |= tier.iter().fold(0, |acc, g| acc | g);
        tiers.push(tier);
    }
    (courteous, tiers)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// Shapley values by averaging marginal contributions over every ordering of
/// the players. Feasible for up to seven players.
pub fn oracle_shapley(fear: &[f64], k: usize, j: usize) -> BTreeMap<usize, f64> {
    let players: Vec<usize> = (0..k).filter(|&i| i != j).collect();
    let mut totals: BTreeMap<usize, f64> = players.iter().map(|&p| (p + 1, 0.0)).collect();
    let mut order = players.clone();
    permute(&mut order, 0, &mut |perm| {
        let mut coalition = 0u64;
        for &p in perm {
            let before = fear[coalition as usize];
            coalition |= 1 << p;
            *totals.get_mut(&(p + 1)).unwrap() += fear[coalition as usize] - before;
        }
    });
    let n = factorial(players.len());
    totals.values_mut().for_each(|v| *v /= n);
    totals
}

fn permute(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, visit);
        items.swap(at, i);
    }
}

/// Competition ranks by sorting: an actor's rank is one plus the number of
/// actors with a strictly larger score. Scores at or below `TOL` get `k + 1`.
pub fn oracle_ranks(scores: &[(usize, f64)], k: usize) -> BTreeMap<usize, u32> {
    let mut sorted: Vec<f64> = scores.iter().map(|s| s.1).filter(|&v| v > TOL).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    scores
        .iter()
        .map(|&(a, v)| {
            let rank = if v > TOL { 1 + sorted.iter().filter(|&&w| w > v + TOL).count() as u32 } else { k as u32 + 1 };
            (a, rank)
        })
        .collect()
}

/// Textbook tau-b: (n_c - n_d) / sqrt((n_0 - n_1)(n_0 - n_2)).
pub fn oracle_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let n0 = (n * (n - 1) / 2) as f64;
    let ties = |v: &[f64]| -> f64 {
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for &a in v {
            *counts.entry(a.to_bits()).or_default() += 1;
        }
        counts.values().map(|&t| (t * (t - 1) / 2) as f64).sum()
    };
    let (n1, n2) = (ties(x), ties(y));
    let mut nc = 0.0;
    let mut nd = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let s = (x[a] - x[b]) * (y[a] - y[b]);
            if s > 0.0 {
                nc += 1.0;
            } else if s < 0.0 {
                nd += 1.0;
            }
        }
    }
    let denom = ((n0 - n1) * (n0 - n2)).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some((nc - nd) / denom)
    }
}

/// A random state with up to `max_agents` agents on a grid of side at most
/// `max_side`, random obstacles, and random actions.
pub fn random_instance(rng: &mut impl Rng, max_agents: usize, max_side: i32) -> (GridState, JointAction) {
    loop {
        let width = rng.random_range(2..=max_side);
        let height = rng.random_range(2..=max_side);
        let mut cells: Vec<Cell> = (0..height).flat_map(|y| (0..width).map(move |x| Cell::new(x, y))).collect();
        cells.shuffle(rng);
        let n_obstacles = rng.random_range(0..=cells.len() / 5);
        let obstacles: Vec<Cell> = cells.drain(..n_obstacles).collect();
        let k = rng.random_range(1..=max_agents);
        if cells.len() < k {
            continue;
        }
        let agents: Vec<Cell> = cells[..k].to_vec();
        let state = GridState::new(width, height, obstacles, agents).expect("valid random state");
        let joint = JointAction::new((0..k).map(|_| ACTIONS[rng.random_range(0..ACTIONS.len())]).collect());
        return (state, joint);
    }
}

/// Agents packed into a small open grid so that interactions are common.
pub fn dense_instance(rng: &mut impl Rng, k: usize) -> (GridState, JointAction) {
    let side = rng.random_range(3..=6).max((k as f64).sqrt().ceil() as i32 + 1);
    let mut cells: Vec<Cell> = (0..side).flat_map(|y| (0..side).map(move |x| Cell::new(x, y))).collect();
    cells.shuffle(rng);
    let state = GridState::new(side, side, [], cells[..k].to_vec()).expect("valid dense state");
    let joint = JointAction::new((0..k).map(|_| ACTIONS[rng.random_range(0..ACTIONS.len())]).collect());
    (state, joint)
}

pub fn stay_mdr(k: usize) -> (MdrProfile, Vec<Action>) {
    (MdrProfile::stay(k), vec![Action::STAY; k])
}
