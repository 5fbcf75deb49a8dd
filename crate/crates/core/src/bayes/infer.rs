//! Posterior queries by variable elimination, with an exhaustive
//! enumeration reference for validation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::factor::Factor;
use super::net::DiscreteBayesNet;
use crate::error::{Error, Result};

/// Posterior distribution over one node's states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub node: String,
    pub states: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl Posterior {
    /// Probability of one named state.
    pub fn probability_of(&self, state: &str) -> Result<f64> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.probabilities[i])
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "posterior over '{}' has no state '{state}'",
                    self.node
                ))
            })
    }
}

fn resolve_query(
    net: &DiscreteBayesNet,
    query: &str,
    evidence: &BTreeMap<String, String>,
) -> Result<(usize, BTreeMap<usize, usize>)> {
    let query_idx = net.node_index(query)?;
    let mut resolved = BTreeMap::new();
    for (name, state) in evidence {
        let node = net.node_index(name)?;
        if node == query_idx {
            return Err(Error::InvalidParameter(format!(
                "query node '{query}' cannot also carry evidence"
            )));
        }
        resolved.insert(node, net.state_index(node, state)?);
    }
    Ok((query_idx, resolved))
}

fn zero_evidence_error(evidence: &BTreeMap<String, String>) -> Error {
    let assignment: Vec<String> = evidence
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    Error::ZeroProbabilityEvidence(format!(
        "evidence {{{}}} has probability zero under the model",
        assignment.join(", ")
    ))
}

/// Posterior `P(query | evidence)` by variable elimination.
///
/// Evidence is applied by reducing every factor first; hidden variables are
/// then summed out in min-weight order (the variable whose elimination
/// builds the smallest intermediate table goes first, ties to the lowest
/// node index). Inconsistent evidence yields
/// [`Error::ZeroProbabilityEvidence`] naming the assignment.
pub fn posterior(
    net: &DiscreteBayesNet,
    query: &str,
    evidence: &BTreeMap<String, String>,
) -> Result<Posterior> {
    let (query_idx, resolved) = resolve_query(net, query, evidence)?;

    let mut factors: Vec<Factor> = Vec::with_capacity(net.nodes().len());
    for node in 0..net.nodes().len() {
        let mut f = net.cpt_factor(node);
        for (&ev_node, &ev_state) in &resolved {
            if f.vars.binary_search(&ev_node).is_ok() {
                f = f.reduce(ev_node, ev_state)?;
            }
        }
        factors.push(f);
    }

    let mut hidden: Vec<usize> = (0..net.nodes().len())
        .filter(|i| *i != query_idx && !resolved.contains_key(i))
        .collect();

    while !hidden.is_empty() {
        // Min-weight heuristic: cost of eliminating v is the size of the
        // factor produced by multiplying everything that mentions v.
        let (at, _) = hidden
            .iter()
            .enumerate()
            .map(|(at, &v)| {
                let mut vars: Vec<usize> = Vec::new();
                for f in factors.iter().filter(|f| f.vars.contains(&v)) {
                    for &u in &f.vars {
                        if u != v && !vars.contains(&u) {
                            vars.push(u);
                        }
                    }
                }
                let weight: usize = vars.iter().map(|&u| net.nodes()[u].card()).product();
                (at, weight)
            })
            .min_by_key(|&(at, weight)| (weight, hidden[at]))
            .expect("hidden not empty");
        let v = hidden.remove(at);

        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        let mut product = Factor::constant(1.0);
        for f in &touching {
            product = product.product(f)?;
        }
        factors.push(product.marginalize(v)?);
    }

    let mut result = Factor::constant(1.0);
    for f in &factors {
        result = result.product(f)?;
    }
    result
        .normalize()
        .map_err(|_| zero_evidence_error(evidence))?;

    let node = &net.nodes()[query_idx];
    Ok(Posterior {
        node: node.name.clone(),
        states: node.states.clone(),
        probabilities: result.values,
    })
}

/// Posterior by brute-force enumeration of every full assignment.
///
/// Exponential in the node count; it exists as an independent reference for
/// validating [`posterior`] on small networks, not for production queries.
pub fn posterior_by_enumeration(
    net: &DiscreteBayesNet,
    query: &str,
    evidence: &BTreeMap<String, String>,
) -> Result<Posterior> {
    let (query_idx, resolved) = resolve_query(net, query, evidence)?;
    let n = net.nodes().len();
    let cards: Vec<usize> = net.nodes().iter().map(|x| x.card()).collect();
    let mut totals = vec![0.0f64; cards[query_idx]];
    let mut assignment = vec![0usize; n];
    let total_assignments: usize = cards.iter().product();
    for _ in 0..total_assignments {
        let consistent = resolved
            .iter()
            .all(|(&node, &state)| assignment[node] == state);
        if consistent {
            totals[assignment[query_idx]] += net.joint_probability(&assignment)?;
        }
        for d in (0..n).rev() {
            assignment[d] += 1;
            if assignment[d] < cards[d] {
                break;
            }
            assignment[d] = 0;
        }
    }
    let mass: f64 = totals.iter().sum();
    if !(mass > 0.0) {
        return Err(zero_evidence_error(evidence));
    }
    totals.iter_mut().for_each(|v| *v /= mass);
    let node = &net.nodes()[query_idx];
    Ok(Posterior {
        node: node.name.clone(),
        states: node.states.clone(),
        probabilities: totals,
    })
}
