//! Search for grid layouts and joint actions that reproduce a target set of
//! tier structures, solo-influence sets and Shapley ranks.
//!
//! The bundled fixtures were reconstructed with this tool. Usage:
//!
//!     cargo run --release -p fear-core --example fixture_search -- <target> [seed] [restarts] [steps] [w h]
//!     cargo run --release -p fear-core --example fixture_search -- show <fixture.json>
//!
//! Targets: `fig3`, `fig4`, `s1`. The search is parallel tempering over
//! positions, actions and (with `WALLS=1`) obstacles. `INIT=<fixture.json>`
//! seeds the even-numbered restarts from an existing layout and `T0` sets
//! the hottest temperature (default 1.5). Improvements are logged to stderr;
//! the best layout is printed as fixture JSON with its remaining mismatch
//! score. `show` prints the tiers and Shapley ranks of a fixture.

use std::collections::BTreeMap;

use fear_core::fear::build_games;
use fear_core::fixture::Fixture;
use fear_core::influence::tiering_with;
use fear_core::ranking::{make_ranks, shapley_with, RankInput, RankSource};
use fear_core::{Action, AgentId, AgentSet, Cell, FearConfig, GridState, JointAction, MdrProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct AffectedTarget {
    affected: usize,
    /// Tiers as written, e.g. "6|2,3;4;5,7".
    tiers: Option<&'static str>,
    /// Shapley ranks of assertive actors, e.g. "8:1,2:2,5:2,6:4".
    shapley: Option<&'static str>,
}

struct Target {
    agents: usize,
    width: i32,
    height: i32,
    obstacles: Vec<Cell>,
    affected: Vec<AffectedTarget>,
    /// Exact extra relations: (description, predicate).
    extra: Vec<(&'static str, fn(&Eval) -> bool)>,
}

struct Eval {
    games: Vec<fear_core::GroupFearGame>,
}

impl Eval {
    fn raw(&self, group: &[usize], j: usize) -> f64 {
        let g: AgentSet = group.iter().map(|&i| AgentId(i)).collect();
        self.games[j - 1].raw(g)
    }

    fn reduction(&self, group: &[usize], j: usize) -> i64 {
        let g: AgentSet = group.iter().map(|&i| AgentId(i)).collect();
        let game = &self.games[j - 1];
        game.count(g) as i64 - game.actual_count() as i64
    }
}

fn parse_tiers(s: &str) -> Vec<Vec<AgentSet>> {
    s.split(';')
        .map(|tier| {
            tier.split('|')
                .map(|g| g.split(',').map(|i| AgentId(i.trim().parse().unwrap())).collect())
                .collect()
        })
        .collect()
}

fn parse_ranks(s: &str) -> BTreeMap<usize, u32> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, r) = p.split_once(':').unwrap();
            (a.trim().parse().unwrap(), r.trim().parse().unwrap())
        })
        .collect()
}

fn score(target: &Target, state: &GridState, joint: &JointAction) -> f64 {
    let cfg = FearConfig::default();
    let mdr = MdrProfile::stay(target.agents);
    let games = build_games(state, joint, &mdr, &cfg).unwrap();
    let k = target.agents;
    let mut penalty = 0.0;
    for t in &target.affected {
        let game = &games[t.affected - 1];
        let before = penalty;
        if let Some(spec) = t.tiers {
            let want = parse_tiers(spec);
            let got = tiering_with(game).tiers;
            // tier index and group of every actor
            let locate = |tiers: &Vec<Vec<AgentSet>>, a: AgentId| -> (usize, AgentSet) {
                for (n, tier) in tiers.iter().enumerate() {
                    for g in tier {
                        if g.contains(a) {
                            return (n + 1, *g);
                        }
                    }
                }
                (0, AgentSet::EMPTY)
            };
            for a in (1..=k).map(AgentId).filter(|a| a.0 != t.affected) {
                let (wn, wg) = locate(&want, a);
                let (gn, gg) = locate(&got, a);
                if wn != gn {
                    penalty += 1.0;
                }
                if wg != gg {
                    penalty += 1.0;
                }
            }
            if want != got {
                penalty += 0.5;
            }
        }
        // Shapley ranks only refine a matching tier structure.
        if penalty > before && t.shapley.is_some() {
            penalty += 1.0;
        } else if let Some(spec) = t.shapley {
            let want = parse_ranks(spec);
            let sh = shapley_with(game).unwrap();
            let rv = make_ranks(RankInput::Shapley(&sh), RankSource::Shapley, k, &cfg).unwrap();
            for &(a, r) in &rv.ranks {
                let w = want.get(&a.0).copied().unwrap_or(k as u32 + 1);
                if w != r {
                    penalty += 0.7;
                }
            }
        }
    }
    let eval = Eval { games };
    for (_, pred) in &target.extra {
        if !pred(&eval) {
            penalty += 1.0;
        }
    }
    penalty
}

#[derive(Clone)]
struct Layout {
    cells: Vec<Cell>,
    actions: Vec<Action>,
    obstacles: Vec<Cell>,
}

impl Layout {
    fn build(&self, t: &Target) -> Option<(GridState, JointAction)> {
        let state = GridState::new(t.width, t.height, self.obstacles.iter().copied(), self.cells.clone()).ok()?;
        Some((state, JointAction::new(self.actions.clone())))
    }

    fn score(&self, t: &Target) -> Option<f64> {
        let (s, j) = self.build(t)?;
        // walls are cheap but should not be used gratuitously
        Some(score(t, &s, &j) + 0.01 * self.obstacles.len() as f64)
    }
}

fn all_cells(t: &Target) -> Vec<Cell> {
    (0..t.height).flat_map(|y| (0..t.width).map(move |x| Cell::new(x, y))).collect()
}

fn random_action(rng: &mut ChaCha8Rng) -> Action {
    fear_core::grid::ACTIONS[rng.random_range(0..17)]
}

fn initial(t: &Target, seed: u64, rng: &mut ChaCha8Rng) -> Layout {
    if let Ok(path) = std::env::var("INIT") {
        if seed % 2 == 0 {
            let f = fear_core::build_fixture(&path).unwrap();
            return Layout {
                cells: f.state.agents().to_vec(),
                actions: f.joint.as_slice().to_vec(),
                obstacles: f.state.obstacles().collect(),
            };
        }
    }
    let cells = all_cells(t);
    let idx = rand::seq::index::sample(rng, cells.len(), t.agents);
    Layout {
        cells: idx.into_iter().map(|i| cells[i]).collect(),
        actions: (0..t.agents).map(|_| random_action(rng)).collect(),
        obstacles: t.obstacles.clone(),
    }
}

fn t0() -> f64 {
    std::env::var("T0").ok().and_then(|v| v.parse().ok()).unwrap_or(1.5)
}

fn mutate(t: &Target, layout: &Layout, cells: &[Cell], walls: bool, rng: &mut ChaCha8Rng) -> Layout {
    let mut next = layout.clone();
    let a = rng.random_range(0..t.agents);
    match rng.random_range(0..if walls { 6 } else { 4 }) {
        0 => next.actions[a] = random_action(rng),
        1 => next.cells[a] = cells[rng.random_range(0..cells.len())],
        2 => {
            let d = fear_core::Direction::MOVES[rng.random_range(0..4)].delta();
            next.cells[a] = next.cells[a].offset(d.0, d.1);
        }
        3 => {
            next.cells[a] = cells[rng.random_range(0..cells.len())];
            next.actions[a] = random_action(rng);
        }
        _ => {
            let c = cells[rng.random_range(0..cells.len())];
            if let Some(pos) = next.obstacles.iter().position(|&o| o == c) {
                next.obstacles.swap_remove(pos);
            } else {
                next.obstacles.push(c);
            }
        }
    }
    next
}

/// Parallel tempering: one Metropolis chain per temperature, with swaps
/// between neighbouring temperatures.
fn anneal(t: &Target, seed: u64, steps: usize) -> (f64, Layout) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = all_cells(t);
    let walls = std::env::var("WALLS").is_ok();
    let temps: Vec<f64> = (0..8).map(|i| 0.1 * (t0() / 0.1f64).powf(i as f64 / 7.0)).collect();
    let mut chains: Vec<(f64, Layout)> = temps
        .iter()
        .map(|_| {
            let l = initial(t, seed, &mut rng);
            (l.score(t).unwrap(), l)
        })
        .collect();
    let mut best = chains[0].clone();
    for step in 0..steps / temps.len() {
        if best.0 < 0.5 {
            break;
        }
        for (c, &temp) in chains.iter_mut().zip(&temps) {
            let next = mutate(t, &c.1, &cells, walls, &mut rng);
            let Some(sc) = next.score(t) else { continue };
            if sc <= c.0 || rng.random::<f64>() < ((c.0 - sc) / temp).exp() {
                *c = (sc, next);
                if sc < best.0 {
                    best = c.clone();
                    if let Ok((state, joint)) = best.1.build(t).ok_or(()) {
                        let f = Fixture { description: None, state, joint, mdr: MdrProfile::stay(t.agents) };
                        eprintln!("{seed} step {step}: {:.2} {}", best.0, serde_json::to_string(&f.to_file()).unwrap());
                    }
                }
            }
        }
        if step % 10 == 0 {
            let i = rng.random_range(0..temps.len() - 1);
            let delta = (chains[i].0 - chains[i + 1].0) * (1.0 / temps[i] - 1.0 / temps[i + 1]);
            if delta >= 0.0 || rng.random::<f64>() < delta.exp() {
                chains.swap(i, i + 1);
            }
        }
    }
    best
}

fn target(name: &str) -> Target {
    match name {
        "fig3" => Target {
            agents: 3,
            width: 7,
            height: 3,
            obstacles: vec![],
            affected: vec![
                AffectedTarget { affected: 1, tiers: Some("2"), shapley: None },
                AffectedTarget { affected: 2, tiers: Some("1;3"), shapley: None },
                AffectedTarget { affected: 3, tiers: Some("1,2"), shapley: None },
            ],
            extra: vec![
                ("FeAR_{2,3},1 == FeAR_2,1", |e| e.raw(&[2, 3], 1) == e.raw(&[2], 1)),
                ("FeAR_3,1 == 0", |e| e.raw(&[3], 1) == 0.0),
                ("FeAR_3,2 == 0", |e| e.raw(&[3], 2) == 0.0),
                ("FeAR_1,3 == 0", |e| e.raw(&[1], 3) == 0.0),
                ("FeAR_2,3 == 0", |e| e.raw(&[2], 3) == 0.0),
                ("1 removes one action of 2", |e| e.reduction(&[1], 2) == 1),
                ("{1,3} removes two actions of 2", |e| e.reduction(&[1, 3], 2) == 2),
            ],
        },
        "fig4" => Target {
            agents: 7,
            width: 8,
            height: 6,
            obstacles: vec![],
            affected: vec![AffectedTarget { affected: 1, tiers: Some("6|2,3;4;5,7"), shapley: None }],
            extra: vec![],
        },
        "s1" => Target {
            agents: 8,
            width: 9,
            height: 6,
            obstacles: vec![],
            affected: vec![
                AffectedTarget { affected: 1, tiers: Some("5,7"), shapley: Some("5:1,7:1") },
                AffectedTarget { affected: 2, tiers: Some("1|5,7"), shapley: Some("1:1,5:2,7:2") },
                AffectedTarget { affected: 3, tiers: Some("5"), shapley: Some("5:1") },
                AffectedTarget { affected: 4, tiers: Some("3|5;2"), shapley: Some("3:1,5:2,2:3") },
                AffectedTarget { affected: 5, tiers: Some("4|2,7"), shapley: Some("2:1,7:1,4:3") },
                AffectedTarget { affected: 6, tiers: Some("4|5;2,7"), shapley: Some("4:1,5:1,2:3,7:3") },
                AffectedTarget { affected: 7, tiers: Some("8|2,5;6"), shapley: Some("8:1,2:2,5:2,6:4") },
                AffectedTarget { affected: 8, tiers: Some("2,5"), shapley: Some("2:1,5:1") },
            ],
            extra: vec![
                ("1 removes two actions of 2", |e| e.reduction(&[1], 2) == 2),
                ("5 alone has no influence on 2", |e| e.raw(&[5], 2) == 0.0),
                ("{5,7} removes two actions of 2", |e| e.reduction(&[5, 7], 2) == 2),
            ],
        },
        other => panic!("unknown target {other}"),
    }
}

fn show(path: &str) {
    let f = fear_core::build_fixture(path).unwrap();
    let cfg = FearConfig::default();
    let k = f.state.agent_count();
    for game in build_games(&f.state, &f.joint, &f.mdr, &cfg).unwrap() {
        let ts = tiering_with(&game);
        let tiers: Vec<String> = ts
            .tiers
            .iter()
            .map(|t| t.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        let sh = shapley_with(&game).unwrap();
        let rv = make_ranks(RankInput::Shapley(&sh), RankSource::Shapley, k, &cfg).unwrap();
        let ranks: Vec<String> = rv.ranks.iter().filter(|r| r.1 <= k as u32).map(|(a, r)| format!("{a}:{r}")).collect();
        println!(
            "affected {}: n={} courteous={} tiers=[{}] shapley=[{}]",
            game.affected(),
            game.actual_count(),
            ts.courteous,
            tiers.join(" ; "),
            ranks.join(",")
        );
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("fig3");
    if name == "show" {
        show(&args[2]);
        return;
    }
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let restarts: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(64);
    let steps: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let mut t = target(name);
    if let (Some(w), Some(h)) = (args.get(5), args.get(6)) {
        t.width = w.parse().unwrap();
        t.height = h.parse().unwrap();
    }
    let results: Vec<_> = (0..restarts).into_par_iter().map(|r| anneal(&t, seed * 1000 + r, steps)).collect();
    let best = results.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    eprintln!("best score {}", best.0);
    let (state, joint) = best.1.build(&t).unwrap();
    let fixture = Fixture { description: None, state, joint, mdr: MdrProfile::stay(t.agents) };
    println!("{}", serde_json::to_string(&fixture.to_file()).unwrap());
}
