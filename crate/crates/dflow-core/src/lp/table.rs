//! Solved forwarding tables and their typed feasibility checks.

use super::{LpProblem, LpSolution, VarKey, CLIP_TOL, RESIDUAL_TOL};
use crate::net::{Capacity, LinkId, NodeId, PacketTypeSpec, SelfLoopView};
use serde::{Deserialize, Serialize};

/// Stationary forwarding variables `f[type][age][link]` plus the objective
/// they achieved.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardingTable {
    pub epsilon: f64,
    pub objective: f64,
    /// `values[j][age][link]`, age running 0..=d_j.
    values: Vec<Vec<Vec<f64>>>,
}

impl ForwardingTable {
    pub fn zeros(view: &SelfLoopView, types: &[PacketTypeSpec], epsilon: f64) -> Self {
        let values = types
            .iter()
            .map(|t| vec![vec![0.0; view.link_count()]; t.deadline as usize + 1])
            .collect();
        ForwardingTable {
            epsilon,
            objective: 0.0,
            values,
        }
    }

    pub fn from_solution(
        problem: &LpProblem,
        solution: &LpSolution,
        view: &SelfLoopView,
        types: &[PacketTypeSpec],
        epsilon: f64,
    ) -> Self {
        let mut table = Self::zeros(view, types, epsilon);
        table.objective = solution.objective;
        for (i, key) in problem.keys().iter().enumerate() {
            if let VarKey::Flow { ptype, link, age } = *key {
                table.values[ptype][age as usize][link] = solution.values[i];
            }
        }
        table
    }

    pub fn get(&self, ptype: usize, link: LinkId, age: u32) -> f64 {
        self.values[ptype][age as usize][link.0]
    }

    pub fn set(&mut self, ptype: usize, link: LinkId, age: u32, value: f64) {
        self.values[ptype][age as usize][link.0] = value;
    }

    pub fn type_count(&self) -> usize {
        self.values.len()
    }

    pub fn ages(&self, ptype: usize) -> usize {
        self.values[ptype].len()
    }

    /// Sum of age-`tau` values over `links`.
    pub fn sum_over(&self, ptype: usize, age: u32, links: &[LinkId]) -> f64 {
        links.iter().map(|&l| self.get(ptype, l, age)).sum()
    }

    /// Expected traffic `sum_j sum_tau lambda_j f` on one link.
    pub fn link_load(&self, link: LinkId, rates: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(rates)
            .map(|(ages, &rate)| ages.iter().map(|row| rate * row[link.0]).sum::<f64>())
            .sum()
    }

    pub fn to_json(&self, view: &SelfLoopView) -> serde_json::Value {
        let mut entries = Vec::new();
        for (j, ages) in self.values.iter().enumerate() {
            for (age, row) in ages.iter().enumerate() {
                for (l, &v) in row.iter().enumerate() {
                    if v >= CLIP_TOL {
                        entries.push(TableEntry {
                            ptype: j,
                            link: [
                                view.base().node_name(view.tail(LinkId(l))).to_string(),
                                view.base().node_name(view.head(LinkId(l))).to_string(),
                            ],
                            age: age as u32,
                            slot: None,
                            value: v,
                        });
                    }
                }
            }
        }
        serde_json::json!({
            "epsilon": self.epsilon,
            "objective": self.objective,
            "entries": entries,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TableEntry {
    #[serde(rename = "type")]
    ptype: usize,
    link: [String; 2],
    age: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    slot: Option<usize>,
    value: f64,
}

/// Time-varying forwarding variables `f[type][arrival slot][age][link]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingForwardingTable {
    pub epsilon: f64,
    pub objective: f64,
    pub horizon: usize,
    values: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TimeVaryingForwardingTable {
    pub fn zeros(
        view: &SelfLoopView,
        types: &[PacketTypeSpec],
        horizon: usize,
        epsilon: f64,
    ) -> Self {
        let values = types
            .iter()
            .map(|t| {
                vec![vec![vec![0.0; view.link_count()]; t.deadline as usize + 1]; horizon]
            })
            .collect();
        TimeVaryingForwardingTable {
            epsilon,
            objective: 0.0,
            horizon,
            values,
        }
    }

    pub fn from_solution(
        problem: &LpProblem,
        solution: &LpSolution,
        view: &SelfLoopView,
        types: &[PacketTypeSpec],
        horizon: usize,
        epsilon: f64,
    ) -> Self {
        let mut table = Self::zeros(view, types, horizon, epsilon);
        table.objective = solution.objective;
        for (i, key) in problem.keys().iter().enumerate() {
            if let VarKey::TimedFlow { ptype, link, age, slot } = *key {
                table.values[ptype][slot - 1][age as usize][link] = solution.values[i];
            }
        }
        table
    }

    /// `f` for a packet of `ptype` that arrived at `arrival_slot` (1-based).
    /// Zero outside the horizon by convention.
    pub fn get(&self, ptype: usize, arrival_slot: usize, link: LinkId, age: u32) -> f64 {
        if arrival_slot == 0 || arrival_slot > self.horizon {
            return 0.0;
        }
        self.values[ptype][arrival_slot - 1][age as usize][link.0]
    }

    /// The stationary slice for packets arriving at one slot.
    pub fn slice_at(
        &self,
        arrival_slot: usize,
        view: &SelfLoopView,
        types: &[PacketTypeSpec],
    ) -> ForwardingTable {
        let mut t = ForwardingTable::zeros(view, types, self.epsilon);
        if arrival_slot >= 1 && arrival_slot <= self.horizon {
            for (j, per_type) in self.values.iter().enumerate() {
                for (age, row) in per_type[arrival_slot - 1].iter().enumerate() {
                    for (l, &v) in row.iter().enumerate() {
                        t.set(j, LinkId(l), age as u32, v);
                    }
                }
            }
        }
        t
    }

    pub fn to_json(&self, view: &SelfLoopView) -> serde_json::Value {
        let mut entries = Vec::new();
        for (j, per_type) in self.values.iter().enumerate() {
            for (slot0, ages) in per_type.iter().enumerate() {
                for (age, row) in ages.iter().enumerate() {
                    for (l, &v) in row.iter().enumerate() {
                        if v >= CLIP_TOL {
                            entries.push(TableEntry {
                                ptype: j,
                                link: [
                                    view.base().node_name(view.tail(LinkId(l))).to_string(),
                                    view.base().node_name(view.head(LinkId(l))).to_string(),
                                ],
                                age: age as u32,
                                slot: Some(slot0 + 1),
                                value: v,
                            });
                        }
                    }
                }
            }
        }
        serde_json::json!({
            "epsilon": self.epsilon,
            "objective": self.objective,
            "horizon": self.horizon,
            "entries": entries,
        })
    }
}

/// Verifies the typed invariants of a stationary table: nonnegativity, admit
/// sums, exact boundary zeros, flow conservation at every node and age, and
/// shrunk capacity on real links. Returns the list of violations.
pub fn check_forwarding_table(
    table: &ForwardingTable,
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    rates: &[f64],
) -> Result<(), Vec<String>> {
    let mut bad = Vec::new();
    for (j, t) in types.iter().enumerate() {
        let d = t.deadline;
        for age in 0..=d {
            for l in 0..view.link_count() {
                let v = table.get(j, LinkId(l), age);
                if v < 0.0 {
                    bad.push(format!("type {j} age {age} link {l}: negative value {v}"));
                }
            }
        }
        let admit = table.sum_over(j, 0, view.out_links(t.source));
        if admit > 1.0 + RESIDUAL_TOL {
            bad.push(format!("type {j}: admit sum {admit} exceeds 1"));
        }
        // boundary zeros are exact
        for l in 0..view.link_count() {
            let link = LinkId(l);
            if view.tail(link) != t.source && table.get(j, link, 0) != 0.0 {
                bad.push(format!("type {j}: nonzero age-0 value off the source on link {l}"));
            }
            if view.head(link) != t.dest && table.get(j, link, d) != 0.0 {
                bad.push(format!(
                    "type {j}: nonzero age-{d} value not entering the destination on link {l}"
                ));
            }
        }
        for age in 1..=d {
            for v in 0..view.node_count() {
                let node = NodeId(v);
                let inflow = table.sum_over(j, age - 1, view.in_links(node));
                let outflow = table.sum_over(j, age, view.out_links(node));
                if (inflow - outflow).abs() > RESIDUAL_TOL {
                    bad.push(format!(
                        "type {j} node {v} age {age}: conservation residual {}",
                        inflow - outflow
                    ));
                }
            }
        }
    }
    for l in 0..view.base_link_count() {
        let link = LinkId(l);
        let load = table.link_load(link, rates);
        let cap = match view.capacity(link) {
            Capacity::Finite(c) => f64::from(c),
            Capacity::Unbounded => continue,
        };
        let bound = cap / (1.0 + table.epsilon);
        if load > bound + RESIDUAL_TOL {
            bad.push(format!("link {l}: load {load} exceeds shrunk capacity {bound}"));
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad)
    }
}

/// Per-slot analogue of [`check_forwarding_table`] for time-varying tables.
/// `rates[t-1][j]` is the arrival rate of type `j` at slot `t`.
pub fn check_time_varying_table(
    table: &TimeVaryingForwardingTable,
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    rates: &[Vec<f64>],
) -> Result<(), Vec<String>> {
    let mut bad = Vec::new();
    let horizon = table.horizon;
    let d_max = types.iter().map(|t| t.deadline).max().unwrap_or(0);
    for (j, t) in types.iter().enumerate() {
        let d = t.deadline;
        for slot in 1..=horizon {
            let admit: f64 = view
                .out_links(t.source)
                .iter()
                .map(|&l| table.get(j, slot, l, 0))
                .sum();
            if admit > 1.0 + RESIDUAL_TOL {
                bad.push(format!("type {j} slot {slot}: admit sum {admit} exceeds 1"));
            }
            for l in 0..view.link_count() {
                let link = LinkId(l);
                for age in 0..=d {
                    let v = table.get(j, slot, link, age);
                    if v < 0.0 {
                        bad.push(format!(
                            "type {j} slot {slot} age {age} link {l}: negative value {v}"
                        ));
                    }
                }
                if view.tail(link) != t.source && table.get(j, slot, link, 0) != 0.0 {
                    bad.push(format!("type {j} slot {slot}: nonzero age-0 value on link {l}"));
                }
                if view.head(link) != t.dest && table.get(j, slot, link, d) != 0.0 {
                    bad.push(format!("type {j} slot {slot}: nonzero age-{d} value on link {l}"));
                }
            }
            for age in 1..=d {
                for v in 0..view.node_count() {
                    let node = NodeId(v);
                    let inflow: f64 = view
                        .in_links(node)
                        .iter()
                        .map(|&l| table.get(j, slot, l, age - 1))
                        .sum();
                    let outflow: f64 = view
                        .out_links(node)
                        .iter()
                        .map(|&l| table.get(j, slot, l, age))
                        .sum();
                    if (inflow - outflow).abs() > RESIDUAL_TOL {
                        bad.push(format!(
                            "type {j} slot {slot} node {v} age {age}: conservation residual {}",
                            inflow - outflow
                        ));
                    }
                }
            }
        }
    }
    for l in 0..view.base_link_count() {
        let link = LinkId(l);
        let cap = match view.capacity(link) {
            Capacity::Finite(c) => f64::from(c),
            Capacity::Unbounded => continue,
        };
        let bound = cap / (1.0 + table.epsilon);
        for t in 1..=(horizon + d_max as usize) {
            let mut load = 0.0;
            for age in 0..=d_max.min(t as u32 - 1) {
                let arrival = t - age as usize;
                if arrival > horizon {
                    continue;
                }
                for (j, ty) in types.iter().enumerate() {
                    if age <= ty.deadline {
                        load += rates[arrival - 1][j] * table.get(j, arrival, link, age);
                    }
                }
            }
            if load > bound + RESIDUAL_TOL {
                bad.push(format!(
                    "link {l} slot {t}: load {load} exceeds shrunk capacity {bound}"
                ));
            }
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad)
    }
}
