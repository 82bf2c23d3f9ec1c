//! Exact shadowing decisions.
//!
//! A delta-pseudo-orbit is a bi-infinite sequence with every step landing
//! strictly within `delta` of the true image; a point `eps`-shadows it when
//! the true orbit stays strictly within `eps` at every time. Both shift
//! spaces are presented by finite graphs:
//!
//! - the pseudo-orbit graph has an edge `x -> y` iff `d(f x, y) < delta`;
//! - the tube automaton accepts the sequences shadowed by some point. Its
//!   states are the pairs (orbit, phase); since the phase-`k` state of `z`
//!   acts exactly like the point `f^k z`, the automaton reduces to one state
//!   per point with successor `f` and acceptance `d(state, symbol) < eps`.
//!
//! After trimming both presentations to their bi-essential cores, inclusion
//! of the two-sided shift spaces is equivalent to inclusion of their finite
//! block languages, which the subset construction decides exactly. A
//! counterexample is a finite trimmed walk rejected by the determinized
//! tube; it extends to a genuine pseudo-orbit no point shadows.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansivity;
use crate::quotients::{self, QuotientSystem};
use crate::rational::Rational;
use crate::system::FiniteMetricSystem;

/// Iteratively deletes nodes with zero in-degree or zero out-degree until a
/// fixpoint; returns the surviving-node mask. The survivors carry exactly
/// the bi-infinite walks of the original graph, and every finite path of
/// the core extends to one.
pub fn trim_bi_essential(out: &[Vec<usize>]) -> Vec<bool> {
    let n = out.len();
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        let mut in_deg = vec![0usize; n];
        let mut out_deg = vec![0usize; n];
        for v in 0..n {
            if !alive[v] {
                continue;
            }
            for &w in &out[v] {
                if alive[w] {
                    out_deg[v] += 1;
                    in_deg[w] += 1;
                }
            }
        }
        for v in 0..n {
            if alive[v] && (in_deg[v] == 0 || out_deg[v] == 0) {
                alive[v] = false;
                changed = true;
            }
        }
        if !changed {
            return alive;
        }
    }
}

/// A set of allowed sequences, presented as a node-labeled graph whose
/// bi-infinite walks (read through the labels) are the members.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestrictionGraph {
    pub nodes: Vec<String>,
    /// Point identifier carried by each node.
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl RestrictionGraph {
    pub fn from_json(source: &str) -> Result<Self> {
        let graph: RestrictionGraph =
            serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        if graph.labels.len() != graph.nodes.len() {
            return Err(Error::Parse(format!(
                "restriction graph has {} nodes but {} labels",
                graph.nodes.len(),
                graph.labels.len()
            )));
        }
        if let Some(&(i, j)) = graph
            .edges
            .iter()
            .find(|&&(i, j)| i >= graph.nodes.len() || j >= graph.nodes.len())
        {
            return Err(Error::Parse(format!(
                "restriction edge ({i},{j}) out of range"
            )));
        }
        Ok(graph)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("restriction serialization cannot fail")
    }
}

/// Graph presentation of the delta-pseudo-orbit shift space, possibly
/// intersected with a restriction, trimmed to its bi-essential core.
#[derive(Debug, Clone)]
pub struct PseudoOrbitGraph {
    pub delta: Rational,
    /// Point index carried by each node.
    pub labels: Vec<usize>,
    /// Node names when the graph came from a restriction.
    pub names: Option<Vec<String>>,
    pub out: Vec<Vec<usize>>,
    /// Bi-essential core mask.
    pub alive: Vec<bool>,
}

impl PseudoOrbitGraph {
    /// All delta-pseudo-orbits: one node per point.
    pub fn build(sys: &FiniteMetricSystem, delta: &Rational) -> Self {
        let n = sys.len();
        let out: Vec<Vec<usize>> = (0..n)
            .map(|x| {
                (0..n)
                    .filter(|&y| sys.dist(sys.apply(x), y) < delta)
                    .collect()
            })
            .collect();
        let alive = trim_bi_essential(&out);
        PseudoOrbitGraph {
            delta: delta.clone(),
            labels: (0..n).collect(),
            names: None,
            out,
            alive,
        }
    }

    /// Product with a restriction graph: keeps a restriction edge only when
    /// the pseudo-orbit condition holds between its labels.
    pub fn build_restricted(
        sys: &FiniteMetricSystem,
        delta: &Rational,
        restriction: &RestrictionGraph,
    ) -> Result<Self> {
        let labels: Vec<usize> = restriction
            .labels
            .iter()
            .map(|name| {
                sys.index_of(name)
                    .ok_or_else(|| Error::Parse(format!("unknown point {name:?} in restriction")))
            })
            .collect::<Result<_>>()?;
        let m = restriction.nodes.len();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); m];
        for &(i, j) in &restriction.edges {
            if sys.dist(sys.apply(labels[i]), labels[j]) < delta {
                out[i].push(j);
            }
        }
        for targets in &mut out {
            targets.sort_unstable();
            targets.dedup();
        }
        let alive = trim_bi_essential(&out);
        Ok(PseudoOrbitGraph {
            delta: delta.clone(),
            labels,
            names: Some(restriction.nodes.clone()),
            out,
            alive,
        })
    }

    pub fn is_core_empty(&self) -> bool {
        !self.alive.iter().any(|&a| a)
    }
}

/// Finite-state presentation of the sequences `eps`-shadowed by some point.
///
/// The canonical states are pairs (orbit point `z`, phase `k`); the pair
/// acts exactly like the point `f^k z`, so one state per point suffices:
/// successor `f`, and state `p` accepts symbol `x` iff `d(p, x) < eps`.
/// Phase shifts realize every time alignment because `f^k z` ranges over
/// the whole orbit of `z`. Every state lies on a cycle, so the automaton is
/// already bi-essential.
#[derive(Debug, Clone)]
pub struct TubeAutomaton {
    pub epsilon: Rational,
    succ: Vec<usize>,
    accepts: Vec<Vec<bool>>,
}

impl TubeAutomaton {
    pub fn build(sys: &FiniteMetricSystem, epsilon: &Rational) -> Self {
        let n = sys.len();
        let accepts = (0..n)
            .map(|p| (0..n).map(|x| sys.dist(p, x) < epsilon).collect())
            .collect();
        TubeAutomaton {
            epsilon: epsilon.clone(),
            succ: sys.map().to_vec(),
            accepts,
        }
    }

    pub fn state_count(&self) -> usize {
        self.succ.len()
    }

    pub fn accepts(&self, state: usize, symbol: usize) -> bool {
        self.accepts[state][symbol]
    }

    pub fn successor(&self, state: usize) -> usize {
        self.succ[state]
    }
}

/// Subset of tube states, packed into 64-bit blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct StateSet(Vec<u64>);

impl StateSet {
    fn full(n: usize) -> Self {
        let mut blocks = vec![u64::MAX; n.div_ceil(64)];
        if !n.is_multiple_of(64) {
            *blocks.last_mut().unwrap() = (1u64 << (n % 64)) - 1;
        }
        StateSet(blocks)
    }

    fn empty(n: usize) -> Self {
        StateSet(vec![0; n.div_ceil(64)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(b, &word)| {
            (0..64).filter_map(move |k| ((word >> k) & 1 == 1).then_some(b * 64 + k))
        })
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

/// Consumes one symbol: keep the states accepting it, then advance them.
fn subset_step(tube: &TubeAutomaton, set: &StateSet, symbol: usize) -> StateSet {
    let mut next = StateSet::empty(tube.state_count());
    for state in set.iter() {
        if tube.accepts(state, symbol) {
            next.insert(tube.successor(state));
        }
    }
    next
}

/// How the allowed sequence set was specified.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RestrictionDescriptor {
    /// All bi-infinite sequences.
    All,
    /// Walks of a supplied node-labeled graph.
    Graph { nodes: usize },
}

/// Outcome of an exact shadowing decision.
#[derive(Debug, Clone, Serialize)]
pub struct ShadowingCertificate {
    pub epsilon: Rational,
    pub delta: Rational,
    pub restriction: RestrictionDescriptor,
    pub holds: bool,
    /// Point labels of the shortest rejected pseudo-orbit chain.
    pub counterexample: Option<Vec<String>>,
    /// Node names of that chain when a restriction was supplied.
    pub counterexample_nodes: Option<Vec<String>>,
}

/// Decides the `eps-delta` shadowing property exactly, over all
/// pseudo-orbits or over the walks of a restriction graph.
///
/// The subset construction may create exponentially many subsets in the
/// worst case; `subset_cap` bounds the number of explored product states
/// and exceeding it fails loudly rather than degrading to sampling.
pub fn decide_shadowing(
    sys: &FiniteMetricSystem,
    epsilon: &Rational,
    delta: &Rational,
    restriction: Option<&RestrictionGraph>,
    subset_cap: usize,
) -> Result<ShadowingCertificate> {
    if !epsilon.is_positive() || !delta.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need epsilon, delta > 0, got epsilon = {epsilon}, delta = {delta}"
        )));
    }
    let graph = match restriction {
        Some(r) => PseudoOrbitGraph::build_restricted(sys, delta, r)?,
        None => PseudoOrbitGraph::build(sys, delta),
    };
    let descriptor = match restriction {
        Some(r) => RestrictionDescriptor::Graph {
            nodes: r.nodes.len(),
        },
        None => RestrictionDescriptor::All,
    };
    let tube = TubeAutomaton::build(sys, epsilon);

    // BFS over (node, subset-after-consuming-the-node-label) product
    // states; the first empty subset yields the shortest counterexample.
    struct Search {
        states: Vec<(usize, StateSet)>,
        parent: Vec<Option<usize>>,
        queue: VecDeque<usize>,
        seen: HashMap<(usize, StateSet), ()>,
        cap: usize,
    }

    impl Search {
        fn push(
            &mut self,
            node: usize,
            set: StateSet,
            from: Option<usize>,
        ) -> Result<Option<Vec<usize>>> {
            if set.is_empty() {
                let mut path = vec![node];
                let mut cursor = from;
                while let Some(idx) = cursor {
                    path.push(self.states[idx].0);
                    cursor = self.parent[idx];
                }
                path.reverse();
                return Ok(Some(path));
            }
            let key = (node, set);
            if self.seen.contains_key(&key) {
                return Ok(None);
            }
            if self.states.len() >= self.cap {
                return Err(Error::ResourceLimit(format!(
                    "subset construction exceeded {} product states",
                    self.cap
                )));
            }
            self.seen.insert(key.clone(), ());
            self.states.push(key);
            self.parent.push(from);
            self.queue.push_back(self.states.len() - 1);
            Ok(None)
        }
    }

    let mut search = Search {
        states: Vec::new(),
        parent: Vec::new(),
        queue: VecDeque::new(),
        seen: HashMap::new(),
        cap: subset_cap,
    };
    let full = StateSet::full(tube.state_count());

    let mut counterexample: Option<Vec<usize>> = None;
    'search: {
        for node in 0..graph.out.len() {
            if !graph.alive[node] {
                continue;
            }
            let set = subset_step(&tube, &full, graph.labels[node]);
            if let Some(path) = search.push(node, set, None)? {
                counterexample = Some(path);
                break 'search;
            }
        }
        while let Some(idx) = search.queue.pop_front() {
            let node = search.states[idx].0;
            for i in 0..graph.out[node].len() {
                let next = graph.out[node][i];
                if !graph.alive[next] {
                    continue;
                }
                let set = subset_step(&tube, &search.states[idx].1, graph.labels[next]);
                if let Some(path) = search.push(next, set, Some(idx))? {
                    counterexample = Some(path);
                    break 'search;
                }
            }
        }
    }

    let holds = counterexample.is_none();
    let (labels, names) = match counterexample {
        None => (None, None),
        Some(path) => {
            let labels = path
                .iter()
                .map(|&v| sys.point_name(graph.labels[v]).to_string())
                .collect();
            let names = graph
                .names
                .as_ref()
                .map(|names| path.iter().map(|&v| names[v].clone()).collect());
            (Some(labels), names)
        }
    };
    Ok(ShadowingCertificate {
        epsilon: epsilon.clone(),
        delta: delta.clone(),
        restriction: descriptor,
        holds,
        counterexample: labels,
        counterexample_nodes: names,
    })
}

/// Replays a failed certificate: the stored chain must be a walk of the
/// trimmed pseudo-orbit graph that the determinized tube automaton rejects.
pub fn verify_shadowing_counterexample(
    sys: &FiniteMetricSystem,
    cert: &ShadowingCertificate,
    restriction: Option<&RestrictionGraph>,
) -> Result<bool> {
    let Some(labels) = &cert.counterexample else {
        return Err(Error::BadParameters(
            "certificate holds; there is no counterexample to verify".into(),
        ));
    };
    let graph = match restriction {
        Some(r) => PseudoOrbitGraph::build_restricted(sys, &cert.delta, r)?,
        None => PseudoOrbitGraph::build(sys, &cert.delta),
    };
    let walk: Vec<usize> = match (&graph.names, &cert.counterexample_nodes) {
        (Some(names), Some(stored)) => {
            let mut walk = Vec::with_capacity(stored.len());
            for name in stored {
                match names.iter().position(|n| n == name) {
                    Some(v) => walk.push(v),
                    None => return Ok(false),
                }
            }
            walk
        }
        (None, None) => {
            let mut walk = Vec::with_capacity(labels.len());
            for label in labels {
                match sys.index_of(label) {
                    Some(p) => walk.push(p),
                    None => return Ok(false),
                }
            }
            walk
        }
        _ => return Ok(false),
    };
    if walk.is_empty() || walk.len() != labels.len() {
        return Ok(false);
    }
    for (i, &v) in walk.iter().enumerate() {
        if !graph.alive[v] {
            return Ok(false);
        }
        if sys.point_name(graph.labels[v]) != labels[i] {
            return Ok(false);
        }
        if i + 1 < walk.len() && !graph.out[v].contains(&walk[i + 1]) {
            return Ok(false);
        }
    }
    let tube = TubeAutomaton::build(sys, &cert.epsilon);
    let mut set = StateSet::full(tube.state_count());
    for &v in &walk {
        set = subset_step(&tube, &set, graph.labels[v]);
    }
    Ok(set.is_empty())
}

/// Outcome of the independent periodic oracle.
#[derive(Debug, Clone)]
pub struct PeriodicOracleOutcome {
    pub holds: bool,
    /// A periodic delta-chain no point shadows, when one exists.
    pub failing_cycle: Option<Vec<String>>,
    pub cycles_checked: u64,
}

/// Brute-force cross-check for [`decide_shadowing`]: enumerates every
/// periodic delta-pseudo-orbit of period at most `max_period` (closed walks
/// of the pseudo-orbit graph, each rotation class once) and tests each
/// against every candidate shadowing point over one full common period.
///
/// Sound as a necessary condition: if some periodic chain fails, shadowing
/// fails. Deliberately free of automata machinery.
pub fn periodic_shadowing_oracle(
    sys: &FiniteMetricSystem,
    epsilon: &Rational,
    delta: &Rational,
    max_period: usize,
) -> PeriodicOracleOutcome {
    if epsilon > sys.diameter() {
        // Every point shadows everything.
        return PeriodicOracleOutcome {
            holds: true,
            failing_cycle: None,
            cycles_checked: 0,
        };
    }
    let n = sys.len();
    let edge: Vec<Vec<bool>> = (0..n)
        .map(|x| (0..n).map(|y| sys.dist(sys.apply(x), y) < delta).collect())
        .collect();
    let close: Vec<Vec<bool>> = (0..n)
        .map(|p| (0..n).map(|x| sys.dist(p, x) < epsilon).collect())
        .collect();
    let orbit_of: Vec<Vec<usize>> = (0..n)
        .map(|z| {
            let mut orbit = Vec::with_capacity(sys.period_of(z) as usize);
            let mut p = z;
            for _ in 0..sys.period_of(z) {
                orbit.push(p);
                p = sys.apply(p);
            }
            orbit
        })
        .collect();

    let shadowed = |cycle: &[usize]| -> bool {
        let p = cycle.len() as u64;
        (0..n).any(|z| {
            let common = num_integer::lcm(p, sys.period_of(z)) as usize;
            (0..common).all(|i| close[orbit_of[z][i % orbit_of[z].len()]][cycle[i % cycle.len()]])
        })
    };

    fn dfs(
        start: usize,
        stack: &mut Vec<usize>,
        max_period: usize,
        edge: &[Vec<bool>],
        shadowed: &dyn Fn(&[usize]) -> bool,
        cycles_checked: &mut u64,
    ) -> Option<Vec<usize>> {
        let last = *stack.last().unwrap();
        if edge[last][start] {
            *cycles_checked += 1;
            if !shadowed(stack) {
                return Some(stack.clone());
            }
        }
        if stack.len() == max_period {
            return None;
        }
        // Extending only with nodes >= start makes the start the least
        // node, so each rotation class appears once.
        for next in start..edge.len() {
            if edge[last][next] {
                stack.push(next);
                if let Some(cycle) = dfs(start, stack, max_period, edge, shadowed, cycles_checked) {
                    return Some(cycle);
                }
                stack.pop();
            }
        }
        None
    }

    let mut cycles_checked = 0u64;
    let mut stack: Vec<usize> = Vec::with_capacity(max_period);
    for start in 0..n {
        stack.clear();
        stack.push(start);
        if let Some(cycle) = dfs(
            start,
            &mut stack,
            max_period,
            &edge,
            &shadowed,
            &mut cycles_checked,
        ) {
            return PeriodicOracleOutcome {
                holds: false,
                failing_cycle: Some(
                    cycle
                        .iter()
                        .map(|&x| sys.point_name(x).to_string())
                        .collect(),
                ),
                cycles_checked,
            };
        }
    }
    PeriodicOracleOutcome {
        holds: true,
        failing_cycle: None,
        cycles_checked,
    }
}

/// The supremal shadowing step size at a fixed tube radius.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShadowingModulus {
    /// Shadowing holds for every positive delta.
    Infinite,
    Finite {
        sup_delta: Rational,
        attained: bool,
    },
}

impl ShadowingModulus {
    pub fn is_positive(&self) -> bool {
        match self {
            ShadowingModulus::Infinite => true,
            ShadowingModulus::Finite { sup_delta, .. } => sup_delta.is_positive(),
        }
    }

    /// The supremum when finite, `cap` otherwise.
    pub fn min_with(&self, cap: &Rational) -> Rational {
        match self {
            ShadowingModulus::Infinite => cap.clone(),
            ShadowingModulus::Finite { sup_delta, .. } => std::cmp::min(sup_delta, cap).clone(),
        }
    }
}

/// Exact supremum of `delta` such that `eps-delta` shadowing holds.
///
/// The pseudo-orbit graph only changes when `delta` crosses a metric value,
/// so the decision is scanned over that finite grid; the top of a passing
/// interval is its right endpoint, hence attainment.
pub fn shadowing_modulus(
    sys: &FiniteMetricSystem,
    epsilon: &Rational,
    subset_cap: usize,
) -> Result<ShadowingModulus> {
    if !epsilon.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need epsilon > 0, got epsilon = {epsilon}"
        )));
    }
    let beyond = sys.diameter() + &Rational::one();
    if decide_shadowing(sys, epsilon, &beyond, None, subset_cap)?.holds {
        return Ok(ShadowingModulus::Infinite);
    }
    let mut best: Option<Rational> = None;
    for value in sys.metric_values() {
        if !value.is_positive() {
            continue;
        }
        if decide_shadowing(sys, epsilon, &value, None, subset_cap)?.holds {
            best = Some(value);
        } else {
            break;
        }
    }
    let sup_delta = best.expect("true orbits are always shadowed by their own points");
    let attained = decide_shadowing(sys, epsilon, &sup_delta, None, subset_cap)?.holds;
    Ok(ShadowingModulus::Finite {
        sup_delta,
        attained,
    })
}

/// Outcome of the pair pseudo-orbit separation check.
#[derive(Debug, Clone)]
pub struct PairExpansiveness {
    pub holds: bool,
    /// A surviving pair at distance `>= eps`.
    pub witness: Option<(String, String)>,
}

/// Checks that every pair of delta-pseudo-orbits staying within `alpha` of
/// each other at all times actually stays strictly within `eps`: builds the
/// pair graph on `{(x,y) : d(x,y) <= alpha}` with componentwise
/// pseudo-orbit edges, trims it, and inspects the survivors.
pub fn pair_pseudo_orbit_expansiveness(
    sys: &FiniteMetricSystem,
    epsilon: &Rational,
    alpha: &Rational,
    delta: &Rational,
) -> PairExpansiveness {
    let n = sys.len();
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if sys.dist(x, y) <= alpha {
                nodes.push((x, y));
            }
        }
    }
    let step_ok: Vec<Vec<bool>> = (0..n)
        .map(|x| (0..n).map(|y| sys.dist(sys.apply(x), y) < delta).collect())
        .collect();
    let out: Vec<Vec<usize>> = nodes
        .iter()
        .map(|&(x, y)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(_, &(x2, y2))| step_ok[x][x2] && step_ok[y][y2])
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let alive = trim_bi_essential(&out);
    let witness = nodes
        .iter()
        .enumerate()
        .find(|&(i, &(x, y))| alive[i] && sys.dist(x, y) >= epsilon)
        .map(|(_, &(x, y))| (sys.point_name(x).to_string(), sys.point_name(y).to_string()));
    PairExpansiveness {
        holds: witness.is_none(),
        witness,
    }
}

/// Which requirement blocked a semi-Anosov certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingCondition {
    Expansiveness,
    Shadowing,
}

/// A semi-Anosov certificate at `alpha`: the largest `delta` in
/// `(0, alpha/4]` such that the system is `[delta/4, alpha]`-expansive and
/// has the `alpha/4 - delta` shadowing property.
#[derive(Debug, Clone, Serialize)]
pub struct SemiAnosovCertificate {
    pub alpha: Rational,
    pub certified: bool,
    pub delta: Option<Rational>,
    /// `delta/4`, the certified expansiveness radius.
    pub expansive_eps: Option<Rational>,
    /// `alpha/4`, the tube radius of the shadowing half.
    pub shadow_eps: Rational,
    pub binding: Option<BindingCondition>,
}

/// Searches the critical grid for the largest certified `delta`.
///
/// Expansiveness wants `delta` large (`delta/4` must exceed every distance
/// realized by pairs with `D <= alpha`) while shadowing wants it small, so
/// the feasible set is an interval whose top is
/// `min(alpha/4, shadowing modulus at alpha/4)`.
pub fn certify_semi_anosov(
    sys: &FiniteMetricSystem,
    alpha: &Rational,
    subset_cap: usize,
) -> Result<SemiAnosovCertificate> {
    if !alpha.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need alpha > 0, got alpha = {alpha}"
        )));
    }
    let shadow_eps = alpha.half().half();
    // Largest distance realized by a pair whose orbits stay within alpha.
    let mut spread = Rational::zero();
    for x in 0..sys.len() {
        for y in x..sys.len() {
            if sys.orbit_sup_distance(x, y) <= *alpha && *sys.dist(x, y) > spread {
                spread = sys.dist(x, y).clone();
            }
        }
    }
    let needed = &Rational::integer(4) * &spread;
    let modulus = shadowing_modulus(sys, &shadow_eps, subset_cap)?;
    let delta = modulus.min_with(&shadow_eps);
    if delta > needed {
        debug_assert!(
            expansivity::raw_violation(sys, &delta.half().half(), alpha).is_none()
                && decide_shadowing(sys, &shadow_eps, &delta, None, subset_cap)?.holds
        );
        Ok(SemiAnosovCertificate {
            alpha: alpha.clone(),
            certified: true,
            expansive_eps: Some(delta.half().half()),
            delta: Some(delta),
            shadow_eps,
            binding: None,
        })
    } else {
        let binding = if needed >= shadow_eps {
            BindingCondition::Expansiveness
        } else {
            BindingCondition::Shadowing
        };
        Ok(SemiAnosovCertificate {
            alpha: alpha.clone(),
            certified: false,
            delta: None,
            expansive_eps: None,
            shadow_eps,
            binding: Some(binding),
        })
    }
}

/// Forward pipeline report: the quotient of a semi-Anosov system is
/// expansive with positive shadowing moduli across the critical grid.
#[derive(Debug, Clone)]
pub struct AnosovQuotientReport {
    pub certificate: SemiAnosovCertificate,
    pub quotient: QuotientSystem,
    /// Least orbit separation of the quotient; `None` for a single class.
    pub quotient_expansivity_sup: Option<Rational>,
    /// Shadowing modulus of the quotient at each critical tube radius.
    pub quotient_moduli: Vec<(Rational, ShadowingModulus)>,
}

/// From a semi-Anosov certificate at `alpha`, builds the quotient by orbit
/// closeness and verifies it behaves like an expansive shadowing system:
/// positive expansivity bound and positive shadowing modulus at every
/// critical tube radius.
pub fn anosov_quotient_pipeline(
    sys: &FiniteMetricSystem,
    alpha: &Rational,
    subset_cap: usize,
) -> Result<AnosovQuotientReport> {
    let certificate = certify_semi_anosov(sys, alpha, subset_cap)?;
    if !certificate.certified {
        return Err(Error::NotSemiAnosov {
            alpha: alpha.clone(),
            reason: match certificate.binding {
                Some(BindingCondition::Expansiveness) => {
                    "no delta <= alpha/4 makes the system [delta/4, alpha]-expansive".into()
                }
                _ => "no positive delta gives the alpha/4 - delta shadowing property".into(),
            },
        });
    }
    let relation = quotients::lewowicz_relation(sys, alpha)?;
    let quotient = quotients::build_quotient(sys, &relation.partition)?;
    let quotient_expansivity_sup = quotient.quotient.expansivity_sup();
    let mut quotient_moduli = Vec::new();
    for eps_r in quotient.quotient.metric_values() {
        if !eps_r.is_positive() {
            continue;
        }
        let modulus = shadowing_modulus(&quotient.quotient, &eps_r, subset_cap)?;
        quotient_moduli.push((eps_r, modulus));
    }
    Ok(AnosovQuotientReport {
        certificate,
        quotient,
        quotient_expansivity_sup,
        quotient_moduli,
    })
}

/// Reverse pipeline report: the rescaled metric re-certifies semi-Anosov.
#[derive(Debug, Clone)]
pub struct AnosovReverseReport {
    /// Step size with which the quotient `alpha/8`-shadows.
    pub delta: Rational,
    /// `delta / (4 diam(base) + 1)`.
    pub k: Rational,
    pub d1: Vec<Vec<Rational>>,
    pub certificate: SemiAnosovCertificate,
}

/// From a quotient that is expansive at `alpha` and shadows, rebuilds a
/// metric `d1 = d_R + K d` with `K = delta / (4 diam + 1)` under which the
/// base is `alpha`-semi-Anosov, and re-certifies it.
pub fn anosov_reverse(
    q: &QuotientSystem,
    alpha: &Rational,
    subset_cap: usize,
) -> Result<AnosovReverseReport> {
    if !alpha.is_positive() {
        return Err(Error::BadThresholds(format!(
            "need alpha > 0, got alpha = {alpha}"
        )));
    }
    if let Some(sup) = q.quotient.expansivity_sup() {
        if *alpha >= sup {
            return Err(Error::AlphaTooLarge {
                alpha: alpha.clone(),
                reason: format!(
                    "quotient is expansive only below {sup}, its least orbit separation"
                ),
            });
        }
    }
    let modulus = shadowing_modulus(&q.quotient, &alpha.half().half().half(), subset_cap)?;
    let delta = modulus.min_with(&alpha.half().half());
    let k = &delta / &(&(&Rational::integer(4) * q.base.diameter()) + &Rational::one());
    let n = q.base.len();
    let mut d1 = vec![vec![Rational::zero(); n]; n];
    for x in 0..n {
        for y in 0..n {
            d1[x][y] = q.quotient.dist(q.project(x), q.project(y)) + &(&k * q.base.dist(x, y));
        }
    }
    let rescaled = q.base.with_metric(d1.clone())?;
    let certificate = certify_semi_anosov(&rescaled, alpha, subset_cap)?;
    Ok(AnosovReverseReport {
        delta,
        k,
        d1,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::quotients::Partition;
    use crate::rational::ratio;

    const CAP: usize = 100_000;

    #[test]
    fn trim_examples() {
        // A 3-cycle survives unchanged.
        let cycle = vec![vec![1], vec![2], vec![0]];
        assert_eq!(trim_bi_essential(&cycle), vec![true; 3]);

        // A path with no cycle peels away completely.
        let path = vec![vec![1], vec![2], vec![]];
        assert_eq!(trim_bi_essential(&path), vec![false; 3]);

        // A cycle with a dangling tail keeps only the cycle.
        let tailed = vec![vec![1], vec![0], vec![0]];
        assert_eq!(trim_bi_essential(&tailed), vec![true, true, false]);
    }

    #[test]
    fn trim_keeps_exactly_the_cycle_connected_nodes() {
        // Alive nodes are exactly those that reach a cycle and are reached
        // from one: the carriers of bi-infinite walks.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let n = rng.gen_range(2..7);
            let out: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..n).filter(|_| rng.gen_bool(0.3)).collect())
                .collect();
            let alive = trim_bi_essential(&out);

            let reachable_from = |v: usize, forward: bool| -> Vec<bool> {
                let mut seen = vec![false; n];
                let mut stack = vec![v];
                while let Some(u) = stack.pop() {
                    for w in 0..n {
                        let connected = if forward {
                            out[u].contains(&w)
                        } else {
                            out[w].contains(&u)
                        };
                        if connected && !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                }
                seen
            };
            let on_cycle: Vec<bool> = (0..n).map(|v| reachable_from(v, true)[v]).collect();
            for v in 0..n {
                let fwd = reachable_from(v, true);
                let bwd = reachable_from(v, false);
                let expected = (0..n).any(|c| on_cycle[c] && (fwd[c] || c == v && on_cycle[v]))
                    && (0..n).any(|c| on_cycle[c] && (bwd[c] || c == v && on_cycle[v]));
                assert_eq!(alive[v], expected, "node {v} of {out:?}");
            }
        }
    }

    #[test]
    fn decide_examples_on_c3() {
        let c3 = fixtures::cycle(3);

        // Only true orbits qualify at delta = 1/2; each shadows itself.
        let cert = decide_shadowing(&c3, &ratio(1, 2), &ratio(1, 2), None, CAP).unwrap();
        assert!(cert.holds);

        // The constant chain at 0 defeats every tube.
        let cert = decide_shadowing(&c3, &ratio(1, 2), &ratio(3, 2), None, CAP).unwrap();
        assert!(!cert.holds);
        let path = cert.counterexample.clone().unwrap();
        assert!(path.iter().all(|p| p == "0"));
        assert!(verify_shadowing_counterexample(&c3, &cert, None).unwrap());

        // Above the diameter every point shadows everything.
        let cert = decide_shadowing(&c3, &ratio(3, 2), &ratio(3, 2), None, CAP).unwrap();
        assert!(cert.holds);

        assert!(matches!(
            decide_shadowing(&c3, &Rational::zero(), &ratio(1, 2), None, CAP).unwrap_err(),
            Error::BadThresholds(_)
        ));
    }

    #[test]
    fn restriction_limits_the_sequence_set() {
        let c3 = fixtures::cycle(3);
        // Walks of this graph are exactly the true orbit of 0.
        let restriction = RestrictionGraph {
            nodes: vec!["a".into(), "b".into(), "c".into()],
            labels: vec!["0".into(), "1".into(), "2".into()],
            edges: vec![(0, 1), (1, 2), (2, 0)],
        };
        assert!(
            !decide_shadowing(&c3, &ratio(1, 2), &ratio(3, 2), None, CAP)
                .unwrap()
                .holds
        );
        let cert =
            decide_shadowing(&c3, &ratio(1, 2), &ratio(3, 2), Some(&restriction), CAP).unwrap();
        assert!(cert.holds);
        assert!(matches!(
            cert.restriction,
            RestrictionDescriptor::Graph { nodes: 3 }
        ));

        // A restriction whose only walk is the constant chain at 0 fails,
        // and the counterexample replays through the restriction.
        let constant = RestrictionGraph {
            nodes: vec!["still".into()],
            labels: vec!["0".into()],
            edges: vec![(0, 0)],
        };
        let cert = decide_shadowing(&c3, &ratio(1, 2), &ratio(3, 2), Some(&constant), CAP).unwrap();
        assert!(!cert.holds);
        assert!(verify_shadowing_counterexample(&c3, &cert, Some(&constant)).unwrap());
    }

    #[test]
    fn subset_cap_fails_loudly() {
        let sys = fixtures::random(6, 2);
        let big = sys.diameter() + &Rational::one();
        let err = decide_shadowing(&sys, &ratio(1, 100), &big, None, 2).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
    }

    #[test]
    fn oracle_examples() {
        let c3 = fixtures::cycle(3);
        assert!(periodic_shadowing_oracle(&c3, &ratio(1, 2), &ratio(1, 2), 6).holds);

        let outcome = periodic_shadowing_oracle(&c3, &ratio(1, 2), &ratio(3, 2), 1);
        assert!(!outcome.holds);
        assert_eq!(outcome.failing_cycle, Some(vec!["0".into()]));

        // Above the diameter the oracle short-circuits.
        let outcome = periodic_shadowing_oracle(&c3, &Rational::integer(2), &ratio(99, 1), 8);
        assert!(outcome.holds);
        assert_eq!(outcome.cycles_checked, 0);
    }

    #[test]
    fn decide_agrees_with_oracle_on_random_triples() {
        for seed in 0..60 {
            let sys = fixtures::random(2 + (seed as usize % 4), seed);
            let values = sys.metric_values();
            for epsilon in values.iter().filter(|v| v.is_positive()).take(3) {
                for delta in values.iter().filter(|v| v.is_positive()).take(3) {
                    let cert = decide_shadowing(&sys, epsilon, delta, None, CAP).unwrap();
                    let oracle = periodic_shadowing_oracle(&sys, epsilon, delta, 8);
                    if cert.holds {
                        assert!(
                            oracle.holds,
                            "decide holds but oracle found {:?}",
                            oracle.failing_cycle
                        );
                    } else {
                        assert!(
                            verify_shadowing_counterexample(&sys, &cert, None).unwrap(),
                            "counterexample failed to replay"
                        );
                    }
                }
            }
        }
    }

    /// A word is a tube block iff some point, at some phase, stays within
    /// eps of it throughout. Direct check, no automata.
    fn is_tube_block(sys: &FiniteMetricSystem, epsilon: &Rational, word: &[usize]) -> bool {
        (0..sys.len()).any(|z| {
            (0..sys.period_of(z)).any(|phase| {
                let mut p = sys.apply_pow(z, phase as i64);
                word.iter().all(|&x| {
                    let close = sys.dist(p, x) < epsilon;
                    p = sys.apply(p);
                    close
                })
            })
        })
    }

    #[test]
    fn counterexamples_are_shortest_missing_blocks() {
        // The BFS counterexample must be a pseudo-orbit block that no tube
        // covers, and no strictly shorter block may be missing. Verified by
        // brute-force word enumeration, independent of the subset
        // construction.
        for seed in 0..40 {
            let sys = fixtures::random(2 + (seed as usize % 3), seed + 90);
            let values: Vec<Rational> = sys
                .metric_values()
                .into_iter()
                .filter(|v| v.is_positive())
                .collect();
            for epsilon in values.iter().take(2) {
                for delta in values.iter().rev().take(2) {
                    let cert = decide_shadowing(&sys, epsilon, delta, None, CAP).unwrap();
                    let Some(path) = &cert.counterexample else {
                        continue;
                    };
                    let word: Vec<usize> = path.iter().map(|p| sys.index_of(p).unwrap()).collect();
                    assert!(!is_tube_block(&sys, epsilon, &word));

                    let graph = PseudoOrbitGraph::build(&sys, delta);
                    // Every strictly shorter walk of the trimmed graph is
                    // still covered by some tube.
                    let mut frontier: Vec<Vec<usize>> = (0..sys.len())
                        .filter(|&v| graph.alive[v])
                        .map(|v| vec![v])
                        .collect();
                    for _ in 1..word.len() {
                        for walk in &frontier {
                            assert!(
                                is_tube_block(&sys, epsilon, walk),
                                "shorter missing block {walk:?} (seed {seed})"
                            );
                        }
                        frontier = frontier
                            .iter()
                            .flat_map(|walk| {
                                graph.out[*walk.last().unwrap()]
                                    .iter()
                                    .filter(|&&w| graph.alive[w])
                                    .map(|&w| {
                                        let mut next = walk.clone();
                                        next.push(w);
                                        next
                                    })
                                    .collect::<Vec<_>>()
                            })
                            .collect();
                    }
                }
            }
        }
    }

    #[test]
    fn shadowing_is_monotone() {
        for seed in 0..15 {
            let sys = fixtures::random(4, seed + 10);
            let values = sys.metric_values();
            let positives: Vec<_> = values.iter().filter(|v| v.is_positive()).collect();
            for eps in &positives {
                for delta in &positives {
                    if !decide_shadowing(&sys, eps, delta, None, CAP).unwrap().holds {
                        continue;
                    }
                    for eps2 in &positives {
                        for delta2 in &positives {
                            if eps2 >= eps && delta2 <= delta {
                                assert!(
                                    decide_shadowing(&sys, eps2, delta2, None, CAP)
                                        .unwrap()
                                        .holds
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn modulus_examples() {
        let c3 = fixtures::cycle(3);
        match shadowing_modulus(&c3, &ratio(1, 2), CAP).unwrap() {
            ShadowingModulus::Finite {
                sup_delta,
                attained,
            } => {
                assert_eq!(sup_delta, Rational::one());
                assert!(attained);
            }
            other => panic!("expected finite modulus, got {other:?}"),
        }

        assert!(matches!(
            shadowing_modulus(&c3, &ratio(3, 2), CAP).unwrap(),
            ShadowingModulus::Infinite
        ));

        let l4 = fixtures::line(4, &Rational::one());
        match shadowing_modulus(&l4, &ratio(1, 2), CAP).unwrap() {
            ShadowingModulus::Finite {
                sup_delta,
                attained,
            } => {
                assert_eq!(sup_delta, Rational::one());
                assert!(attained);
            }
            other => panic!("expected finite modulus, got {other:?}"),
        }
    }

    #[test]
    fn pair_expansiveness_examples() {
        let c3 = fixtures::cycle(3);
        let result = pair_pseudo_orbit_expansiveness(&c3, &ratio(1, 7), &ratio(1, 2), &ratio(1, 2));
        assert!(result.holds);

        let result =
            pair_pseudo_orbit_expansiveness(&c3, &Rational::one(), &Rational::one(), &ratio(3, 2));
        assert!(!result.holds);
        assert_eq!(result.witness, Some(("0".into(), "1".into())));

        let one = fixtures::cycle(1);
        let result =
            pair_pseudo_orbit_expansiveness(&one, &ratio(1, 9), &ratio(1, 9), &ratio(1, 9));
        assert!(result.holds);
    }

    #[test]
    fn pair_check_degenerates_to_orbit_expansiveness_for_tiny_delta() {
        for seed in 0..15 {
            let sys = fixtures::random(5, seed + 30);
            // At or below the least positive step distance only exact orbit
            // steps survive as edges.
            let tiny = sys
                .metric_values()
                .into_iter()
                .find(|v| v.is_positive())
                .unwrap();
            for alpha in sys.orbit_sup_values() {
                if !alpha.is_positive() {
                    continue;
                }
                for epsilon in sys.metric_values() {
                    if !epsilon.is_positive() {
                        continue;
                    }
                    let pair = pair_pseudo_orbit_expansiveness(&sys, &epsilon, &alpha, &tiny);
                    let direct = expansivity::raw_violation(&sys, &epsilon, &alpha).is_none();
                    assert_eq!(pair.holds, direct, "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn semi_anosov_examples() {
        let c3 = fixtures::cycle(3);
        let cert = certify_semi_anosov(&c3, &ratio(1, 2), CAP).unwrap();
        assert!(cert.certified);
        assert_eq!(cert.delta, Some(ratio(1, 8)));
        assert_eq!(cert.expansive_eps, Some(ratio(1, 32)));

        let cert = certify_semi_anosov(&c3, &Rational::integer(4), CAP).unwrap();
        assert!(!cert.certified);
        assert_eq!(cert.binding, Some(BindingCondition::Expansiveness));

        let one = fixtures::cycle(1);
        assert!(
            certify_semi_anosov(&one, &ratio(7, 3), CAP)
                .unwrap()
                .certified
        );
    }

    #[test]
    fn anosov_pipeline_on_c3() {
        let c3 = fixtures::cycle(3);
        let report = anosov_quotient_pipeline(&c3, &ratio(1, 2), CAP).unwrap();
        assert_eq!(report.quotient.quotient.len(), 3);
        assert_eq!(report.quotient_expansivity_sup, Some(Rational::one()));
        assert!(!report.quotient_moduli.is_empty());
        for (eps_r, modulus) in &report.quotient_moduli {
            assert!(modulus.is_positive(), "modulus at {eps_r} not positive");
        }

        assert!(matches!(
            anosov_quotient_pipeline(&c3, &Rational::integer(4), CAP).unwrap_err(),
            Error::NotSemiAnosov { .. }
        ));

        let one = fixtures::cycle(1);
        let report = anosov_quotient_pipeline(&one, &Rational::one(), CAP).unwrap();
        assert_eq!(report.quotient.quotient.len(), 1);
        assert!(report.quotient_moduli.is_empty());
    }

    #[test]
    fn anosov_reverse_on_c3_singletons() {
        let c3 = fixtures::cycle(3);
        let q = quotients::build_quotient(&c3, &Partition::singletons(3)).unwrap();
        let report = anosov_reverse(&q, &ratio(1, 2), CAP).unwrap();
        assert_eq!(report.delta, ratio(1, 8));
        assert_eq!(report.k, ratio(1, 40));
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(report.d1[x][y], &ratio(41, 40) * c3.dist(x, y));
            }
        }
        assert!(report.certificate.certified);

        assert!(matches!(
            anosov_reverse(&q, &Rational::integer(2), CAP).unwrap_err(),
            Error::AlphaTooLarge { .. }
        ));
    }
}
