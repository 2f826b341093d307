//! Plain-text rendering of a case analysis.

use std::fmt::Write;

use fear_core::{AffectedAnalysis, AgentId, CaseResult, Fixture, RankVector};

fn fmt_tau(t: Option<f64>) -> String {
    t.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

fn fmt_ranks(r: &RankVector) -> String {
    r.ranks
        .iter()
        .map(|&(a, rank)| if rank == r.nonassertive_rank { format!("{a}:.") } else { format!("{a}:{rank}") })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn matrix_table(result: &CaseResult) -> String {
    let k = result.matrix.agent_count();
    let mut out = String::new();
    let _ = writeln!(out, "FeAR matrix (raw; rows act on columns)");
    let _ = write!(out, "{:>8}", "");
    for j in 1..=k {
        let _ = write!(out, "{:>9}", j);
    }
    out.push('\n');
    for i in 1..=k {
        let _ = write!(out, "{:>8}", i);
        for j in 1..=k {
            let v = result.matrix.raw(AgentId(i), AgentId(j));
            let cell = if v.abs() >= 1e3 { format!("{v:.2e}") } else { format!("{v:.4}") };
            let _ = write!(out, "{cell:>9}");
        }
        out.push('\n');
    }
    if !result.matrix.degenerate_self().is_empty() {
        let ids: Vec<String> = result.matrix.degenerate_self().iter().map(|a| a.to_string()).collect();
        let _ = writeln!(out, "degenerate self-term for: {}", ids.join(", "));
    }
    out
}

pub fn affected_block(a: &AffectedAnalysis) -> String {
    let mut out = String::new();
    let m = &a.metrics;
    let _ = writeln!(
        out,
        "Affected {}  Δ={}  assertive: iFeAR {} / gFeAR {}  median distance {:.1}",
        a.affected, m.delta_assertive, m.n_assertive_ifear, m.n_assertive_gfear, m.median_manhattan
    );
    if !a.tiers.courteous.is_empty() {
        let _ = writeln!(out, "  courteous: {}", a.tiers.courteous);
    }
    if a.tiers.tiers.is_empty() {
        let _ = writeln!(out, "  tiers: none");
    }
    for (n, tier) in a.tiers.tiers.iter().enumerate() {
        let groups: Vec<String> = tier.iter().map(|g| g.to_string()).collect();
        let _ = writeln!(out, "  tier {}: {}  (FeAR of R{} = {:.4})", n + 1, groups.join(" "), n + 1, a.tiers.fear_at_tier[n]);
    }
    for rec in &a.influences {
        let _ = writeln!(out, "  {rec}");
    }
    let shap: Vec<String> = a.shapley.values.iter().map(|(i, v)| format!("{i}:{v:.4}")).collect();
    let _ = writeln!(out, "  Shapley: {}", shap.join(" "));
    let _ = writeln!(out, "  ranks iFeAR   {}", fmt_ranks(&a.ranks.ifear));
    let _ = writeln!(out, "  ranks Tier    {}", fmt_ranks(&a.ranks.tier));
    let _ = writeln!(out, "  ranks Shapley {}", fmt_ranks(&a.ranks.shapley));
    let _ = writeln!(
        out,
        "  tau iFeAR-Tier {}  iFeAR-Shapley {}  Tier-Shapley {}",
        fmt_tau(m.taus.ifear_tier),
        fmt_tau(m.taus.ifear_shapley),
        fmt_tau(m.taus.tier_shapley)
    );
    out
}

pub fn report(origin: &str, fixture: &Fixture, result: &CaseResult, only: Option<AgentId>) -> String {
    let mut out = String::new();
    let s = &fixture.state;
    let _ = writeln!(out, "{origin}: {} agents on a {}x{} grid", s.agent_count(), s.width(), s.height());
    if let Some(d) = &fixture.description {
        let _ = writeln!(out, "{d}");
    }
    let actions: Vec<String> = fixture.joint.iter().map(|(i, a)| format!("{i}:{a}")).collect();
    let _ = writeln!(out, "actions: {}\n", actions.join(" "));
    out.push_str(&matrix_table(result));
    for a in result.affected.iter().filter(|a| only.is_none_or(|j| j == a.affected)) {
        out.push('\n');
        out.push_str(&affected_block(a));
    }
    out
}
