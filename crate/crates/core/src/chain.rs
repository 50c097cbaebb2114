//! The global Markov chain of a product game closed under two controllers,
//! its recurrence structure, and satisfaction probabilities.

use serde::Serialize;

use crate::controller::{Agent, Fsc};
use crate::graph::{tarjan, Digraph, Sccs};
use crate::posg::Row;
use crate::product::{AcceptancePair, ProductPosg};
use crate::report::{ValidationReport, Violation, STOCHASTIC_TOLERANCE};
use crate::{Error, Result};

/// Pivots smaller than this make the absorption system singular.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Largest transient block solved densely.
pub const MAX_DENSE_STATES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalChain {
    product_states: usize,
    def_nodes: usize,
    adv_nodes: usize,
    initial: usize,
    rows: Vec<Row>,
    pairs: Vec<AcceptancePair>,
}

impl GlobalChain {
    /// A chain given directly by its rows; every state is its own product
    /// state and both controllers have one node.
    pub fn from_rows(rows: Vec<Row>, initial: usize, pairs: Vec<AcceptancePair>) -> Result<Self> {
        let n = rows.len();
        if initial >= n {
            return Err(Error::DanglingState {
                index: initial,
                count: n,
                context: "chain initial state".into(),
            });
        }
        for row in &rows {
            if let Some(&(t, _)) = row.iter().find(|&&(t, _)| t >= n) {
                return Err(Error::DanglingState {
                    index: t,
                    count: n,
                    context: "chain transition target".into(),
                });
            }
        }
        if pairs.iter().any(|p| p.finite.len() != n || p.infinite.len() != n) {
            return Err(Error::Dimension("acceptance pair size".into()));
        }
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.retain(|&(_, p)| p != 0.0);
                r.sort_by_key(|&(t, _)| t);
                r
            })
            .collect();
        Ok(GlobalChain {
            product_states: n,
            def_nodes: 1,
            adv_nodes: 1,
            initial,
            rows,
            pairs,
        })
    }

    pub fn states(&self) -> usize {
        self.rows.len()
    }

    pub fn product_states(&self) -> usize {
        self.product_states
    }

    pub fn def_nodes(&self) -> usize {
        self.def_nodes
    }

    pub fn adv_nodes(&self) -> usize {
        self.adv_nodes
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn index(&self, sp: usize, g_def: usize, g_adv: usize) -> usize {
        (sp * self.def_nodes + g_def) * self.adv_nodes + g_adv
    }

    /// `(product state, defender node, adversary node)` of a chain state.
    pub fn decode(&self, m: usize) -> (usize, usize, usize) {
        (
            m / (self.def_nodes * self.adv_nodes),
            m / self.adv_nodes % self.def_nodes,
            m % self.adv_nodes,
        )
    }

    pub fn row(&self, m: usize) -> &[(usize, f64)] {
        &self.rows[m]
    }

    pub fn prob(&self, m: usize, m2: usize) -> f64 {
        let row = &self.rows[m];
        match row.binary_search_by_key(&m2, |&(t, _)| t) {
            Ok(i) => row[i].1,
            Err(_) => 0.0,
        }
    }

    /// Rabin pairs lifted to chain states.
    pub fn pairs(&self) -> &[AcceptancePair] {
        &self.pairs
    }

    /// Edge `m → m'` iff `T(m' | m) > edge_eps`.
    pub fn digraph(&self, edge_eps: f64) -> Digraph {
        Digraph::from_adjacency(
            self.rows
                .iter()
                .map(|r| r.iter().filter(|&&(_, p)| p > edge_eps).map(|&(t, _)| t).collect())
                .collect(),
        )
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (m, row) in self.rows.iter().enumerate() {
            let sum: f64 = row.iter().map(|&(_, p)| p).sum();
            let out_of_range = row
                .iter()
                .any(|&(_, p)| !(0.0..=1.0 + STOCHASTIC_TOLERANCE).contains(&p));
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE || out_of_range {
                report.push(Violation::ChainRow { state: m, sum });
            }
        }
        report
    }
}

fn check_controller(c: &Fsc, agent: Agent, observations: usize, actions: usize) -> Result<()> {
    let st = c.structure();
    if st.agent() != agent {
        return Err(Error::Dimension(format!(
            "expected a {agent} controller, got a {}",
            st.agent()
        )));
    }
    if st.observations() != observations || st.actions() != actions {
        return Err(Error::Dimension(format!(
            "{agent} controller has {} observations and {} actions, game has {observations} and {actions}",
            st.observations(),
            st.actions()
        )));
    }
    Ok(())
}

/// Close the product under both controllers:
///
/// `T(s', g'_d, g'_a | s, g_d, g_a) = Σ_{o_d, o_a, u_d, u_a}
///   O_def(o_d|s) O_adv(o_a|s) μ_def(g'_d, u_d|g_d, o_d) μ_adv(g'_a, u_a|g_a, o_a) T(s'|s, u_d, u_a)`.
pub fn compose_gmc(p: &ProductPosg, c_def: &Fsc, c_adv: &Fsc) -> Result<GlobalChain> {
    let game = p.game();
    let (nod, noa) = (game.def_observations().len(), game.adv_observations().len());
    let (nud, nua) = (game.def_actions().len(), game.adv_actions().len());
    check_controller(c_def, Agent::Defender, nod, nud)?;
    check_controller(c_adv, Agent::Adversary, noa, nua)?;
    let (gd_n, ga_n) = (c_def.structure().nodes(), c_adv.structure().nodes());
    let n = p.states() * gd_n * ga_n;
    let index = |sp: usize, gd: usize, ga: usize| (sp * gd_n + gd) * ga_n + ga;

    let mut acc = vec![0.0; n];
    let mut touched = Vec::new();
    let mut rows = Vec::with_capacity(n);
    for sp in 0..p.states() {
        for gd in 0..gd_n {
            for ga in 0..ga_n {
                for od in 0..nod {
                    let w_od = game.obs_def(sp, od);
                    if w_od == 0.0 {
                        continue;
                    }
                    for oa in 0..noa {
                        let w_oa = w_od * game.obs_adv(sp, oa);
                        if w_oa == 0.0 {
                            continue;
                        }
                        let mu_d = c_def.row(gd, od);
                        let mu_a = c_adv.row(ga, oa);
                        for (jd, &pd) in mu_d.iter().enumerate().filter(|(_, &x)| x > 0.0) {
                            let (gd2, ud) = (jd / nud, jd % nud);
                            for (ja, &pa) in mu_a.iter().enumerate().filter(|(_, &x)| x > 0.0) {
                                let (ga2, ua) = (ja / nua, ja % nua);
                                let w = w_oa * pd * pa;
                                for &(sp2, t) in game.row(sp, ud, ua) {
                                    let m2 = index(sp2, gd2, ga2);
                                    if acc[m2] == 0.0 {
                                        touched.push(m2);
                                    }
                                    acc[m2] += w * t;
                                }
                            }
                        }
                    }
                }
                touched.sort_unstable();
                let row: Row = touched.iter().map(|&m2| (m2, acc[m2])).collect();
                for &m2 in &touched {
                    acc[m2] = 0.0;
                }
                touched.clear();
                rows.push(row);
            }
        }
    }
    let lift = |mask: &[bool]| (0..n).map(|m| mask[m / (gd_n * ga_n)]).collect();
    let pairs = p
        .pairs()
        .iter()
        .map(|pair| AcceptancePair {
            finite: lift(&pair.finite),
            infinite: lift(&pair.infinite),
        })
        .collect();
    Ok(GlobalChain {
        product_states: p.states(),
        def_nodes: gd_n,
        adv_nodes: ga_n,
        initial: index(game.initial(), c_def.structure().initial(), c_adv.structure().initial()),
        rows,
        pairs,
    })
}

/// Smallest pair index `i` with `K(i) ∩ class ≠ ∅` and `L(i) ∩ class = ∅`.
pub fn feasibility_witness(class: &[usize], pairs: &[AcceptancePair]) -> Option<usize> {
    pairs
        .iter()
        .position(|p| class.iter().any(|&m| p.infinite[m]) && class.iter().all(|&m| !p.finite[m]))
}

/// SCCs of a chain digraph and its recurrent classes (sink SCCs).
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceAnalysis {
    graph: Digraph,
    sccs: Sccs,
    /// Recurrent classes, each ascending, ordered by smallest state.
    classes: Vec<Vec<usize>>,
    class_of: Vec<Option<usize>>,
    witness: Vec<Option<usize>>,
}

impl RecurrenceAnalysis {
    pub fn new(graph: Digraph, pairs: &[AcceptancePair]) -> RecurrenceAnalysis {
        let sccs = tarjan(&graph);
        let mut classes: Vec<Vec<usize>> = (0..sccs.count())
            .filter(|&c| sccs.is_sink(&graph, c))
            .map(|c| sccs.members[c].clone())
            .collect();
        classes.sort_by_key(|c| c[0]);
        let mut class_of = vec![None; graph.nodes()];
        for (k, class) in classes.iter().enumerate() {
            for &m in class {
                class_of[m] = Some(k);
            }
        }
        let witness = classes.iter().map(|c| feasibility_witness(c, pairs)).collect();
        RecurrenceAnalysis {
            graph,
            sccs,
            classes,
            class_of,
            witness,
        }
    }

    pub fn of_chain(chain: &GlobalChain, edge_eps: f64) -> RecurrenceAnalysis {
        RecurrenceAnalysis::new(chain.digraph(edge_eps), chain.pairs())
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn sccs(&self) -> &Sccs {
        &self.sccs
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, m: usize) -> Option<usize> {
        self.class_of[m]
    }

    pub fn is_recurrent(&self, m: usize) -> bool {
        self.class_of[m].is_some()
    }

    /// Witnessing pair of class `k`, if it is feasible.
    pub fn witness(&self, k: usize) -> Option<usize> {
        self.witness[k]
    }

    pub fn is_feasible(&self, k: usize) -> bool {
        self.witness[k].is_some()
    }
}

/// Feasible recurrent classes with their witnessing pair.
pub fn phi_feasible_sets(analysis: &RecurrenceAnalysis) -> Vec<(usize, usize)> {
    (0..analysis.classes.len())
        .filter_map(|k| analysis.witness[k].map(|i| (k, i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QualitativeWitness {
    pub pair: usize,
    pub class: usize,
}

/// Qualitative satisfaction check, scoped to a single recurrent class: some
/// pair `i` and a class `R` reachable from the initial state such that `R`
/// meets the lifted `K(i)` and avoids the lifted `L(i)`.
///
/// Returns the first witness in (pair, class) order.
pub fn qualitative_witness(chain: &GlobalChain, analysis: &RecurrenceAnalysis) -> Option<QualitativeWitness> {
    let reach = analysis.graph.reachable_from(&[chain.initial()]);
    (0..chain.pairs().len()).find_map(|pair| {
        let p = &chain.pairs()[pair];
        analysis
            .classes
            .iter()
            .position(|class| {
                reach[class[0]] && class.iter().any(|&m| p.infinite[m]) && class.iter().all(|&m| !p.finite[m])
            })
            .map(|class| QualitativeWitness { pair, class })
    })
}

/// Solve `A X = B` in place by Gaussian elimination with partial pivoting.
/// `a` is `n × n` row-major, `b` is `n × k` row-major.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize, k: usize) -> Result<()> {
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if pivot < PIVOT_TOLERANCE {
            return Err(Error::Singular { pivot });
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            for j in 0..k {
                b.swap(col * k + j, pivot_row * k + j);
            }
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            for j in 0..k {
                b[r * k + j] -= f * b[col * k + j];
            }
        }
    }
    for col in (0..n).rev() {
        let d = a[col * n + col];
        for j in 0..k {
            let mut v = b[col * k + j];
            for c in col + 1..n {
                v -= a[col * n + c] * b[c * k + j];
            }
            b[col * k + j] = v / d;
        }
    }
    Ok(())
}

/// Probability of ending in each recurrent class, from every state in
/// `starts`. Row `i` of the result belongs to `starts[i]`.
pub fn absorption_from(chain: &GlobalChain, analysis: &RecurrenceAnalysis, starts: &[usize]) -> Result<Vec<Vec<f64>>> {
    let k = analysis.classes.len();
    let transient: Vec<usize> = {
        let reach = analysis.graph.reachable_from(starts);
        (0..chain.states())
            .filter(|&m| reach[m] && !analysis.is_recurrent(m))
            .collect()
    };
    let n = transient.len();
    if n > MAX_DENSE_STATES {
        return Err(Error::TooLarge(format!(
            "{n} transient states exceed the dense solver limit of {MAX_DENSE_STATES}"
        )));
    }
    let mut pos = vec![usize::MAX; chain.states()];
    for (i, &m) in transient.iter().enumerate() {
        pos[m] = i;
    }
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * k];
    for (i, &m) in transient.iter().enumerate() {
        a[i * n + i] += 1.0;
        for &(t, p) in chain.row(m) {
            if !analysis.graph.has_edge(m, t) {
                continue;
            }
            match analysis.class_of[t] {
                Some(c) => b[i * k + c] += p,
                None => a[i * n + pos[t]] -= p,
            }
        }
    }
    solve_dense(&mut a, &mut b, n, k)?;
    Ok(starts
        .iter()
        .map(|&m| match analysis.class_of[m] {
            Some(c) => (0..k).map(|j| if j == c { 1.0 } else { 0.0 }).collect(),
            None => b[pos[m] * k..(pos[m] + 1) * k].to_vec(),
        })
        .collect())
}

/// Probability of ending in each recurrent class from the initial state.
pub fn absorption_probabilities(chain: &GlobalChain, analysis: &RecurrenceAnalysis) -> Result<Vec<f64>> {
    Ok(absorption_from(chain, analysis, &[chain.initial()])?.remove(0))
}

/// Sum of absorption probabilities into feasible classes.
pub fn satisfaction_probability(chain: &GlobalChain, analysis: &RecurrenceAnalysis) -> Result<f64> {
    let absorption = absorption_probabilities(chain, analysis)?;
    Ok(phi_feasible_sets(analysis)
        .into_iter()
        .map(|(k, _)| absorption[k])
        .sum())
}

/// Everything computed for one controller pair.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub chain: GlobalChain,
    pub analysis: RecurrenceAnalysis,
    pub absorption: Vec<f64>,
    pub satisfaction: f64,
}

pub fn evaluate(p: &ProductPosg, c_def: &Fsc, c_adv: &Fsc, edge_eps: f64) -> Result<Evaluation> {
    let chain = compose_gmc(p, c_def, c_adv)?;
    let analysis = RecurrenceAnalysis::of_chain(&chain, edge_eps);
    let absorption = absorption_probabilities(&chain, &analysis)?;
    let satisfaction = phi_feasible_sets(&analysis)
        .into_iter()
        .map(|(k, _)| absorption[k])
        .sum();
    Ok(Evaluation {
        chain,
        analysis,
        absorption,
        satisfaction,
    })
}

/// Satisfaction probability of `p` under the two controllers.
pub fn satisfaction(p: &ProductPosg, c_def: &Fsc, c_adv: &Fsc) -> Result<f64> {
    Ok(evaluate(p, c_def, c_adv, 0.0)?.satisfaction)
}
