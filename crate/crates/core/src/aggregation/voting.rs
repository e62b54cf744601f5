use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};
use crate::exec::Execution;

/// Largest number of profiles `check_axioms` will enumerate.
pub const ENUMERATION_CAP: u128 = 400_000;

/// Strict rankings of a shared alternative set, best first. Alternatives are
/// referred to by index into `alternatives`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceProfile {
    alternatives: Vec<String>,
    rankings: Vec<Vec<usize>>,
}

impl PreferenceProfile {
    pub fn new(alternatives: Vec<String>, rankings: Vec<Vec<usize>>) -> Result<Self> {
        let m = alternatives.len();
        for (i, name) in alternatives.iter().enumerate() {
            if name.is_empty() || alternatives[..i].contains(name) {
                return Err(CoordError::Malformed(format!("bad or duplicate alternative `{name}`")));
            }
        }
        for (agent, ranking) in rankings.iter().enumerate() {
            if !is_permutation(ranking, m) {
                return Err(CoordError::Malformed(format!(
                    "ranking of agent {agent} is not a total order over {m} alternatives"
                )));
            }
        }
        Ok(PreferenceProfile { alternatives, rankings })
    }

    /// Profile over alternatives labelled `A`, `B`, ... from index rankings.
    pub fn lettered(rankings: Vec<Vec<usize>>) -> Result<Self> {
        let m = rankings.first().map_or(0, Vec::len);
        if m > 26 {
            return Err(CoordError::invalid("alternatives", "at most 26 lettered alternatives"));
        }
        let names = (0..m).map(|i| char::from(b'A' + i as u8).to_string()).collect();
        PreferenceProfile::new(names, rankings)
    }

    /// The three-agent cyclic profile `A>B>C`, `B>C>A`, `C>A>B`.
    pub fn condorcet() -> Self {
        PreferenceProfile::lettered(vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]).expect("static profile is valid")
    }

    pub fn alternatives(&self) -> &[String] {
        &self.alternatives
    }

    pub fn rankings(&self) -> &[Vec<usize>] {
        &self.rankings
    }

    pub fn agents(&self) -> usize {
        self.rankings.len()
    }

    pub fn format_order(&self, order: &[usize]) -> String {
        order
            .iter()
            .map(|&a| self.alternatives[a].as_str())
            .collect::<Vec<_>>()
            .join(">")
    }
}

/// One ranking per line, e.g. `A>B>C`. Blank lines and `#` comments are
/// skipped. Alternatives are indexed in sorted name order.
impl FromStr for PreferenceProfile {
    type Err = CoordError;

    fn from_str(text: &str) -> Result<Self> {
        let lines: Vec<Vec<&str>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.split('>').map(str::trim).collect())
            .collect();
        let first = lines
            .first()
            .ok_or_else(|| CoordError::Malformed("profile has no rankings".into()))?;
        let mut alternatives: Vec<String> = first.iter().map(|s| s.to_string()).collect();
        alternatives.sort();
        let rankings = lines
            .iter()
            .enumerate()
            .map(|(n, line)| {
                line.iter()
                    .map(|name| {
                        alternatives.iter().position(|a| a == name).ok_or_else(|| {
                            CoordError::Malformed(format!("line {}: unknown alternative `{name}`", n + 1))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        PreferenceProfile::new(alternatives, rankings)
    }
}

impl fmt::Display for PreferenceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rankings {
            writeln!(f, "{}", self.format_order(r))?;
        }
        Ok(())
    }
}

fn is_permutation(ranking: &[usize], m: usize) -> bool {
    let mut seen = vec![false; m];
    ranking.len() == m && ranking.iter().all(|&a| a < m && !std::mem::replace(&mut seen[a], true))
}

fn positions(ranking: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; ranking.len()];
    for (p, &a) in ranking.iter().enumerate() {
        pos[a] = p;
    }
    pos
}

/// Pairwise majority relation of a profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityRelation {
    /// `margins[a][b]`: agents preferring `a` to `b` minus those preferring `b` to `a`.
    pub margins: Vec<Vec<i64>>,
    /// Unordered pairs with zero margin.
    pub ties: Vec<(usize, usize)>,
    /// A directed cycle in the strict-majority digraph, if any.
    pub cycle: Option<Vec<usize>>,
}

impl MajorityRelation {
    pub fn beats(&self, a: usize, b: usize) -> bool {
        self.margins[a][b] > 0
    }

    pub fn has_cycle(&self) -> bool {
        self.cycle.is_some()
    }

    /// The complete strict order, when there are neither ties nor cycles.
    pub fn order(&self) -> Option<Vec<usize>> {
        if !self.ties.is_empty() || self.has_cycle() {
            return None;
        }
        let m = self.margins.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&a| std::cmp::Reverse((0..m).filter(|&b| self.beats(a, b)).count()));
        Some(order)
    }
}

fn margins(rankings: &[Vec<usize>], m: usize) -> Vec<Vec<i64>> {
    let mut margins = vec![vec![0i64; m]; m];
    for ranking in rankings {
        let pos = positions(ranking);
        for a in 0..m {
            for b in 0..m {
                if a != b && pos[a] < pos[b] {
                    margins[a][b] += 1;
                    margins[b][a] -= 1;
                }
            }
        }
    }
    margins
}

/// Majority margins for every pair plus a depth-first search for a cycle in
/// the strict-majority digraph. The reported cycle starts at its smallest
/// alternative.
pub fn pairwise_majority(profile: &PreferenceProfile) -> Result<MajorityRelation> {
    let m = profile.alternatives.len();
    if profile.agents() < 2 {
        return Err(CoordError::TooFewAgents {
            needed: 2,
            got: profile.agents(),
        });
    }
    if m < 3 {
        return Err(CoordError::invalid(
            "alternatives",
            "at least 3 alternatives are required",
        ));
    }
    let margins = margins(&profile.rankings, m);
    let ties = (0..m)
        .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
        .filter(|&(a, b)| margins[a][b] == 0)
        .collect();
    let cycle = find_cycle(&margins);
    Ok(MajorityRelation { margins, ties, cycle })
}

fn find_cycle(margins: &[Vec<i64>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(v: usize, margins: &[Vec<i64>], marks: &mut [Mark], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        marks[v] = Mark::Active;
        stack.push(v);
        for w in 0..margins.len() {
            if margins[v][w] <= 0 {
                continue;
            }
            match marks[w] {
                Mark::Active => {
                    let start = stack.iter().position(|&x| x == w).expect("active node is on the stack");
                    return Some(stack[start..].to_vec());
                }
                Mark::New => {
                    if let Some(c) = visit(w, margins, marks, stack) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks[v] = Mark::Done;
        None
    }

    let mut marks = vec![Mark::New; margins.len()];
    for v in 0..margins.len() {
        if marks[v] == Mark::New {
            if let Some(mut cycle) = visit(v, margins, &mut marks, &mut Vec::new()) {
                let min = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
                cycle.rotate_left(min);
                return Some(cycle);
            }
        }
    }
    None
}

/// Discrete ranking-aggregation rules for the axiom checker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationRule {
    /// Copies agent 0's ranking.
    Dictator,
    /// Pairwise majority with ties broken toward the lower index. Fails when
    /// the resulting relation is intransitive.
    PairwiseMajorityLex,
    /// Borda count with ties broken toward the lower index.
    Borda,
}

impl AggregationRule {
    pub const ALL: [AggregationRule; 3] = [
        AggregationRule::Dictator,
        AggregationRule::PairwiseMajorityLex,
        AggregationRule::Borda,
    ];

    /// Aggregated ranking, or `None` when the rule produces no total order.
    pub fn apply(self, rankings: &[Vec<usize>], m: usize) -> Option<Vec<usize>> {
        match self {
            AggregationRule::Dictator => rankings.first().cloned(),
            AggregationRule::PairwiseMajorityLex => {
                let margins = margins(rankings, m);
                let prefers = |a: usize, b: usize| margins[a][b] > 0 || (margins[a][b] == 0 && a < b);
                let wins: Vec<usize> = (0..m)
                    .map(|a| (0..m).filter(|&b| b != a && prefers(a, b)).count())
                    .collect();
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by_key(|&a| std::cmp::Reverse(wins[a]));
                let transitive = order
                    .iter()
                    .enumerate()
                    .all(|(i, &a)| order[i + 1..].iter().all(|&b| prefers(a, b)));
                transitive.then_some(order)
            }
            AggregationRule::Borda => {
                let mut score = vec![0usize; m];
                for r in rankings {
                    for (p, &a) in r.iter().enumerate() {
                        score[a] += m - 1 - p;
                    }
                }
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by_key(|&a| std::cmp::Reverse(score[a]));
                Some(order)
            }
        }
    }
}

impl FromStr for AggregationRule {
    type Err = CoordError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dictator" => Ok(AggregationRule::Dictator),
            "pairwise-majority-lex" | "majority" => Ok(AggregationRule::PairwiseMajorityLex),
            "borda" => Ok(AggregationRule::Borda),
            other => Err(CoordError::Malformed(format!("unknown aggregation rule `{other}`"))),
        }
    }
}

/// A profile on which an axiom fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub profile: Vec<Vec<usize>>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomOutcome {
    pub violations: u64,
    /// The first few violating profiles in enumeration order.
    pub counterexamples: Vec<Counterexample>,
}

impl AxiomOutcome {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub rule: AggregationRule,
    pub alternatives: usize,
    pub agents: usize,
    pub profiles_checked: u64,
    pub anonymity: AxiomOutcome,
    pub unanimity: AxiomOutcome,
    /// Profiles where the rule produced no total order.
    pub failures: AxiomOutcome,
}

const KEPT_COUNTEREXAMPLES: usize = 5;

/// Every permutation of `0..m` in lexicographic order.
pub fn all_rankings(m: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, m: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for a in 0..m {
            if !prefix.contains(&a) {
                prefix.push(a);
                extend(prefix, m, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(m), m, &mut out);
    out
}

/// Number of profiles with `agents` strict rankings over `alternatives` items.
pub fn profile_count(alternatives: usize, agents: usize) -> u128 {
    let orders: u128 = (1..=alternatives as u128).product();
    (0..agents).fold(1u128, |acc, _| acc.saturating_mul(orders))
}

/// Decodes profile number `index` of the enumeration (agent 0 varies slowest).
pub fn nth_profile(index: u64, orders: &[Vec<usize>], agents: usize) -> Vec<Vec<usize>> {
    let k = orders.len() as u64;
    let mut rest = index;
    let mut profile = vec![Vec::new(); agents];
    for slot in profile.iter_mut().rev() {
        *slot = orders[(rest % k) as usize].clone();
        rest /= k;
    }
    profile
}

/// Checks anonymity (invariance under every adjacent swap of agents) and
/// unanimity (every pair ranked the same way by all agents keeps that order)
/// over all profiles of the given size.
pub fn check_axioms(rule: AggregationRule, alternatives: usize, agents: usize, exec: Execution) -> Result<AxiomReport> {
    if !(1..=4).contains(&alternatives) || !(1..=4).contains(&agents) {
        return Err(CoordError::InstanceTooLarge {
            count: profile_count(alternatives, agents),
            cap: ENUMERATION_CAP,
        });
    }
    let count = profile_count(alternatives, agents);
    if count > ENUMERATION_CAP {
        return Err(CoordError::InstanceTooLarge {
            count,
            cap: ENUMERATION_CAP,
        });
    }
    let orders = all_rankings(alternatives);
    let m = alternatives;
    let per_profile = exec.map_range(0, count as u64, |i| {
        let profile = nth_profile(i, &orders, agents);
        let out = rule.apply(&profile, m);
        let mut anonymity = None;
        let mut unanimity = None;
        let failure = out.is_none().then(|| "no total order".to_string());
        if let Some(out) = &out {
            for j in 0..agents.saturating_sub(1) {
                let mut swapped = profile.clone();
                swapped.swap(j, j + 1);
                if rule.apply(&swapped, m).as_ref() != Some(out) {
                    anonymity = Some(format!("swapping agents {j} and {} changes the outcome", j + 1));
                    break;
                }
            }
            let pos = positions(out);
            'pairs: for a in 0..m {
                for b in 0..m {
                    let all_prefer = a != b && profile.iter().all(|r| positions(r)[a] < positions(r)[b]);
                    if all_prefer && pos[a] > pos[b] {
                        unanimity = Some(format!("all agents rank {a} above {b} but the outcome does not"));
                        break 'pairs;
                    }
                }
            }
        }
        (anonymity, unanimity, failure)
    });

    let mut report = AxiomReport {
        rule,
        alternatives,
        agents,
        profiles_checked: count as u64,
        anonymity: AxiomOutcome::default(),
        unanimity: AxiomOutcome::default(),
        failures: AxiomOutcome::default(),
    };
    for (i, (anon, unan, fail)) in per_profile.into_iter().enumerate() {
        let record = |outcome: &mut AxiomOutcome, detail: Option<String>| {
            if let Some(detail) = detail {
                outcome.violations += 1;
                if outcome.counterexamples.len() < KEPT_COUNTEREXAMPLES {
                    outcome.counterexamples.push(Counterexample {
                        profile: nth_profile(i as u64, &orders, agents),
                        detail,
                    });
                }
            }
        };
        record(&mut report.anonymity, anon);
        record(&mut report.unanimity, unan);
        record(&mut report.failures, fail);
    }
    Ok(report)
}
