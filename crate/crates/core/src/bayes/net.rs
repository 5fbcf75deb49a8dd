//! Discrete Bayesian network: named nodes, CPTs, and structural validation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::factor::Factor;
use crate::error::{Error, Result};

/// Tolerance for CPT rows summing to one.
pub const CPT_ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesNode {
    pub name: String,
    pub states: Vec<String>,
    /// Indices of parent nodes, in the order the CPT rows are keyed.
    pub parents: Vec<usize>,
    /// Conditional probability table, row-major: one row of `states.len()`
    /// probabilities per parent configuration, with the first parent most
    /// significant in the row index.
    pub cpt: Vec<f64>,
}

impl BayesNode {
    pub fn card(&self) -> usize {
        self.states.len()
    }
}

/// A validated discrete Bayesian network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetData", into = "NetData")]
pub struct DiscreteBayesNet {
    nodes: Vec<BayesNode>,
}

/// Raw serde image of a network; conversion re-runs full validation so that
/// hand-edited or corrupted files cannot produce an invalid net.
#[derive(Serialize, Deserialize)]
struct NetData {
    nodes: Vec<BayesNode>,
}

impl TryFrom<NetData> for DiscreteBayesNet {
    type Error = Error;
    fn try_from(data: NetData) -> Result<Self> {
        DiscreteBayesNet::new(data.nodes)
    }
}

impl From<DiscreteBayesNet> for NetData {
    fn from(net: DiscreteBayesNet) -> Self {
        NetData { nodes: net.nodes }
    }
}

impl DiscreteBayesNet {
    pub fn new(nodes: Vec<BayesNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyInput("network nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.states.len() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "node '{}' needs at least 2 states",
                    node.name
                )));
            }
            if nodes.iter().skip(i + 1).any(|other| other.name == node.name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate node name '{}'",
                    node.name
                )));
            }
            for &p in &node.parents {
                if p >= nodes.len() {
                    return Err(Error::UnknownNode(format!(
                        "node '{}' references parent index {p} out of range",
                        node.name
                    )));
                }
                if p == i {
                    return Err(Error::GraphCycle(format!(
                        "node '{}' lists itself as a parent",
                        node.name
                    )));
                }
            }
            let rows: usize = node.parents.iter().map(|&p| nodes[p].card()).product();
            if node.cpt.len() != rows * node.card() {
                return Err(Error::DimensionMismatch {
                    expected: rows * node.card(),
                    actual: node.cpt.len(),
                });
            }
            for (r, row) in node.cpt.chunks(node.card()).enumerate() {
                if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::NonFinite(format!(
                        "CPT row {r} of node '{}'",
                        node.name
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > CPT_ROW_SUM_TOLERANCE {
                    return Err(Error::InvalidParameter(format!(
                        "CPT row {r} of node '{}' sums to {sum}, expected 1",
                        node.name
                    )));
                }
            }
        }
        let net = DiscreteBayesNet { nodes };
        net.topological_order()?; // rejects cycles
        Ok(net)
    }

    pub fn nodes(&self) -> &[BayesNode] {
        &self.nodes
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn state_index(&self, node: usize, state: &str) -> Result<usize> {
        self.nodes[node]
            .states
            .iter()
            .position(|s| s == state)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "node '{}' has no state '{state}' (states: {:?})",
                    self.nodes[node].name, self.nodes[node].states
                ))
            })
    }

    /// Kahn's algorithm; ties resolved by node index for determinism.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.nodes.len();
        let mut remaining_parents: Vec<usize> = self.nodes.iter().map(|x| x.parents.len()).collect();
        let mut order = Vec::with_capacity(n);
        let mut done = vec![false; n];
        for _ in 0..n {
            let Some(next) = (0..n).find(|&i| !done[i] && remaining_parents[i] == 0) else {
                let stuck: Vec<&str> = (0..n)
                    .filter(|&i| !done[i])
                    .map(|i| self.nodes[i].name.as_str())
                    .collect();
                return Err(Error::GraphCycle(format!(
                    "nodes {stuck:?} form a dependency cycle"
                )));
            };
            done[next] = true;
            order.push(next);
            for (i, node) in self.nodes.iter().enumerate() {
                if !done[i] && node.parents.contains(&next) {
                    remaining_parents[i] -=
                        node.parents.iter().filter(|&&p| p == next).count();
                }
            }
        }
        Ok(order)
    }

    /// CPT entry `P(node = state | parents = parent_states)`.
    pub fn cpt_entry(&self, node: usize, parent_states: &[usize], state: usize) -> f64 {
        let n = &self.nodes[node];
        debug_assert_eq!(parent_states.len(), n.parents.len());
        let mut row = 0;
        for (&p, &s) in n.parents.iter().zip(parent_states) {
            row = row * self.nodes[p].card() + s;
        }
        n.cpt[row * n.card() + state]
    }

    /// Joint probability of one full assignment (a state per node).
    ///
    /// This is the chain-rule product over local CPTs; exponential-time
    /// callers (like the enumeration reference in inference) build on it.
    pub fn joint_probability(&self, assignment: &[usize]) -> Result<f64> {
        if assignment.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes.len(),
                actual: assignment.len(),
            });
        }
        for (i, (&state, node)) in assignment.iter().zip(&self.nodes).enumerate() {
            if state >= node.card() {
                return Err(Error::InvalidParameter(format!(
                    "state {state} out of range for node {i} '{}'",
                    node.name
                )));
            }
        }
        let mut p = 1.0;
        for (i, node) in self.nodes.iter().enumerate() {
            let parent_states: Vec<usize> =
                node.parents.iter().map(|&q| assignment[q]).collect();
            p *= self.cpt_entry(i, &parent_states, assignment[i]);
        }
        Ok(p)
    }

    /// The node's CPT as a factor over `parents + {node}`.
    pub(crate) fn cpt_factor(&self, node: usize) -> Factor {
        let n = &self.nodes[node];
        let mut vars: Vec<usize> = n.parents.clone();
        vars.push(node);
        let mut sorted = vars.clone();
        sorted.sort_unstable();
        let cards: Vec<usize> = sorted.iter().map(|&v| self.nodes[v].card()).collect();

        let total: usize = cards.iter().product();
        let mut values = vec![0.0; total];
        // Enumerate assignments in the factor's (sorted) layout and pull the
        // matching CPT entry.
        let mut assignment = vec![0usize; sorted.len()];
        let node_pos = sorted.binary_search(&node).expect("node present");
        let parent_pos: Vec<usize> = n
            .parents
            .iter()
            .map(|p| sorted.binary_search(p).expect("parent present"))
            .collect();
        for slot in values.iter_mut() {
            let parent_states: Vec<usize> =
                parent_pos.iter().map(|&p| assignment[p]).collect();
            *slot = self.cpt_entry(node, &parent_states, assignment[node_pos]);
            for d in (0..sorted.len()).rev() {
                assignment[d] += 1;
                if assignment[d] < cards[d] {
                    break;
                }
                assignment[d] = 0;
            }
        }
        Factor::new(sorted, cards, values).expect("CPT factor is valid by construction")
    }
}

/// Generates a random valid network for validation and benchmarking.
///
/// Node `i` may only have parents among nodes `0..i`, which guarantees a
/// DAG; rows are independent draws normalized to one.
pub fn random_net(seed: u64, n_nodes: usize, max_states: usize, max_parents: usize) -> DiscreteBayesNet {
    assert!(n_nodes >= 1 && max_states >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<BayesNode> = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let card = rng.random_range(2..=max_states);
        let states: Vec<String> = (0..card).map(|s| format!("s{s}")).collect();
        let mut parents = Vec::new();
        if i > 0 {
            let want = rng.random_range(0..=max_parents.min(i).min(3));
            let mut pool: Vec<usize> = (0..i).collect();
            for _ in 0..want {
                let at = rng.random_range(0..pool.len());
                parents.push(pool.swap_remove(at));
            }
            parents.sort_unstable();
        }
        let rows: usize = parents.iter().map(|&p| nodes[p].card()).product();
        let mut cpt = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            let mut row: Vec<f64> = (0..card).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
            cpt.extend(row);
        }
        nodes.push(BayesNode {
            name: format!("n{i}"),
            states,
            parents,
            cpt,
        });
    }
    DiscreteBayesNet::new(nodes).expect("construction keeps the net valid")
}
