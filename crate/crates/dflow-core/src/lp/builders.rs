//! Builders for the flow programs.
//!
//! `build_fs` is the production path: stationary forwarding variables with
//! the capacity shrink `C/(1+eps)`. The route-indexed programs (`build_es`,
//! `build_ei`) enumerate route-schedules and exist as small-instance
//! cross-checks and oracle upper bounds. `build_fns` and `build_fnsp` are the
//! time-varying and periodic extensions.

use super::{LpProblem, Relation, RowTag, VarKey};
use crate::error::{LpError, NetError};
use crate::net::{
    enumerate_route_schedules, Capacity, LinkId, PacketTypeSpec, RouteSchedule, SelfLoopView,
};

fn shrunk_bound(cap: Capacity, eps: f64) -> Option<f64> {
    match cap {
        Capacity::Finite(c) => Some(f64::from(c) / (1.0 + eps)),
        Capacity::Unbounded => None,
    }
}

/// Whether a stationary flow variable exists: age-0 flow leaves the source
/// and deadline-age flow enters the destination; everything else is a
/// structural zero.
fn flow_var_exists(view: &SelfLoopView, t: &PacketTypeSpec, link: LinkId, age: u32) -> bool {
    if age == 0 && view.tail(link) != t.source {
        return false;
    }
    if age == t.deadline && view.head(link) != t.dest {
        return false;
    }
    true
}

/// The stationary flow program: maximize expected admitted reward per slot
/// subject to admit bounds, per-age conservation, boundary zeros, and real
/// link capacities shrunk by `1/(1+eps)`.
pub fn build_fs(
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    rates: &[f64],
    eps: f64,
) -> LpProblem {
    assert_eq!(types.len(), rates.len());
    let mut p = LpProblem::new();
    for (j, t) in types.iter().enumerate() {
        for age in 0..=t.deadline {
            for l in 0..view.link_count() {
                let link = LinkId(l);
                if flow_var_exists(view, t, link, age) {
                    p.var(VarKey::Flow { ptype: j, link: l, age });
                }
            }
        }
    }
    for (j, t) in types.iter().enumerate() {
        // objective + admit bound over the source's out-links
        let mut admit_terms = Vec::new();
        for &l in view.out_links(t.source) {
            if let Some(v) = p.lookup(VarKey::Flow { ptype: j, link: l.0, age: 0 }) {
                p.add_objective(v, t.weight * rates[j]);
                admit_terms.push((v, 1.0));
            }
        }
        if !admit_terms.is_empty() {
            p.add_constraint(admit_terms, Relation::Le, 1.0, RowTag::Admit { ptype: j, slot: 0 });
        }
        // conservation: inflow at age-1 equals outflow at age, at every node
        for age in 1..=t.deadline {
            for v in 0..view.node_count() {
                let node = crate::net::NodeId(v);
                let mut terms = Vec::new();
                for &l in view.in_links(node) {
                    if let Some(var) = p.lookup(VarKey::Flow { ptype: j, link: l.0, age: age - 1 }) {
                        terms.push((var, 1.0));
                    }
                }
                for &l in view.out_links(node) {
                    if let Some(var) = p.lookup(VarKey::Flow { ptype: j, link: l.0, age }) {
                        terms.push((var, -1.0));
                    }
                }
                if !terms.is_empty() {
                    p.add_constraint(
                        terms,
                        Relation::Eq,
                        0.0,
                        RowTag::Conservation { ptype: j, node: v, age, slot: 0 },
                    );
                }
            }
        }
    }
    // capacity on real links only
    for l in 0..view.base_link_count() {
        let link = LinkId(l);
        let Some(bound) = shrunk_bound(view.capacity(link), eps) else {
            continue;
        };
        let mut terms = Vec::new();
        for (j, t) in types.iter().enumerate() {
            for age in 0..=t.deadline {
                if let Some(var) = p.lookup(VarKey::Flow { ptype: j, link: l, age }) {
                    terms.push((var, rates[j]));
                }
            }
        }
        if !terms.is_empty() {
            p.add_constraint(terms, Relation::Le, bound, RowTag::Capacity { link: l, slot: 0 });
        }
    }
    p
}

/// Route-schedules for every type, enumerated with a shared cap.
pub fn enumerate_all_routes(
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    cap: usize,
) -> Result<Vec<Vec<RouteSchedule>>, NetError> {
    types
        .iter()
        .enumerate()
        .map(|(j, t)| enumerate_route_schedules(j, t, view, cap))
        .collect()
}

/// The stationary program over explicit route-schedules. Equivalent to
/// `build_fs` at the optimum; kept as a small-instance cross-check.
pub fn build_es(
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    rates: &[f64],
    eps: f64,
    route_cap: usize,
) -> Result<(LpProblem, Vec<Vec<RouteSchedule>>), LpError> {
    let routes = enumerate_all_routes(view, types, route_cap)?;
    let mut p = LpProblem::new();
    for (j, t) in types.iter().enumerate() {
        let mut admit = Vec::new();
        for k in 0..routes[j].len() {
            let v = p.var(VarKey::Route { ptype: j, route: k, slot: 0 });
            p.add_objective(v, t.weight * rates[j]);
            admit.push((v, 1.0));
        }
        if !admit.is_empty() {
            p.add_constraint(admit, Relation::Le, 1.0, RowTag::Admit { ptype: j, slot: 0 });
        }
    }
    for l in 0..view.base_link_count() {
        let link = LinkId(l);
        let Some(bound) = shrunk_bound(view.capacity(link), eps) else {
            continue;
        };
        let mut terms = Vec::new();
        for (j, type_routes) in routes.iter().enumerate() {
            for (k, r) in type_routes.iter().enumerate() {
                let uses = r.links.iter().filter(|&&x| x == link).count();
                if uses > 0 {
                    let v = p.var(VarKey::Route { ptype: j, route: k, slot: 0 });
                    terms.push((v, rates[j] * uses as f64));
                }
            }
        }
        if !terms.is_empty() {
            p.add_constraint(terms, Relation::Le, bound, RowTag::Capacity { link: l, slot: 0 });
        }
    }
    Ok((p, routes))
}

/// The expected instance over a finite horizon: route-schedule probabilities
/// per arrival slot with windowed capacity constraints at full `C` (no
/// shrink). Upper-bounds the expected optimum of the random instance.
pub fn build_ei(
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    rates_per_slot: &[Vec<f64>],
    route_cap: usize,
) -> Result<(LpProblem, Vec<Vec<RouteSchedule>>), LpError> {
    let t_len = rates_per_slot.len();
    let d_max = types.iter().map(|t| t.deadline).max().unwrap_or(0) as usize;
    let routes = enumerate_all_routes(view, types, route_cap)?;
    let mut p = LpProblem::new();
    for (j, t) in types.iter().enumerate() {
        for slot in 1..=t_len {
            let rate = rates_per_slot[slot - 1][j];
            let mut admit = Vec::new();
            for k in 0..routes[j].len() {
                let v = p.var(VarKey::Route { ptype: j, route: k, slot });
                p.add_objective(v, t.weight * rate);
                admit.push((v, 1.0));
            }
            if !admit.is_empty() {
                p.add_constraint(admit, Relation::Le, 1.0, RowTag::Admit { ptype: j, slot });
            }
        }
    }
    for l in 0..view.base_link_count() {
        let link = LinkId(l);
        let Some(cap) = shrunk_bound(view.capacity(link), 0.0) else {
            continue;
        };
        for t in 1..=(t_len + d_max) {
            let mut terms = Vec::new();
            for arrival in t.saturating_sub(d_max).max(1)..=t.min(t_len) {
                let age = (t - arrival) as u32;
                for (j, ty) in types.iter().enumerate() {
                    if age > ty.deadline {
                        continue;
                    }
                    let rate = rates_per_slot[arrival - 1][j];
                    for (k, r) in routes[j].iter().enumerate() {
                        if r.links[age as usize] == link {
                            let v = p.var(VarKey::Route { ptype: j, route: k, slot: arrival });
                            terms.push((v, rate));
                        }
                    }
                }
            }
            if !terms.is_empty() {
                p.add_constraint(terms, Relation::Le, cap, RowTag::Capacity { link: l, slot: t });
            }
        }
    }
    Ok((p, routes))
}

/// The time-varying flow program over a horizon of `rates_per_slot.len()`
/// slots: one forwarding table per arrival slot, coupled through per-(link,
/// slot) capacity rows with the `1/(1+eps)` shrink.
pub fn build_fns(
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    rates_per_slot: &[Vec<f64>],
    eps: f64,
) -> LpProblem {
    let t_len = rates_per_slot.len();
    let d_max = types.iter().map(|t| t.deadline).max().unwrap_or(0) as usize;
    let mut p = LpProblem::new();
    for (j, t) in types.iter().enumerate() {
        for slot in 1..=t_len {
            for age in 0..=t.deadline {
                for l in 0..view.link_count() {
                    let link = LinkId(l);
                    if flow_var_exists(view, t, link, age) {
                        p.var(VarKey::TimedFlow { ptype: j, link: l, age, slot });
                    }
                }
            }
        }
    }
    for (j, t) in types.iter().enumerate() {
        for slot in 1..=t_len {
            let rate = rates_per_slot[slot - 1][j];
            let mut admit = Vec::new();
            for &l in view.out_links(t.source) {
                if let Some(v) = p.lookup(VarKey::TimedFlow { ptype: j, link: l.0, age: 0, slot }) {
                    p.add_objective(v, t.weight * rate);
                    admit.push((v, 1.0));
                }
            }
            if !admit.is_empty() {
                p.add_constraint(admit, Relation::Le, 1.0, RowTag::Admit { ptype: j, slot });
            }
            for age in 1..=t.deadline {
                for v in 0..view.node_count() {
                    let node = crate::net::NodeId(v);
                    let mut terms = Vec::new();
                    for &l in view.in_links(node) {
                        if let Some(var) =
                            p.lookup(VarKey::TimedFlow { ptype: j, link: l.0, age: age - 1, slot })
                        {
                            terms.push((var, 1.0));
                        }
                    }
                    for &l in view.out_links(node) {
                        if let Some(var) =
                            p.lookup(VarKey::TimedFlow { ptype: j, link: l.0, age, slot })
                        {
                            terms.push((var, -1.0));
                        }
                    }
                    if !terms.is_empty() {
                        p.add_constraint(
                            terms,
                            Relation::Eq,
                            0.0,
                            RowTag::Conservation { ptype: j, node: v, age, slot },
                        );
                    }
                }
            }
        }
    }
    for l in 0..view.base_link_count() {
        let link = LinkId(l);
        let Some(bound) = shrunk_bound(view.capacity(link), eps) else {
            continue;
        };
        for t in 1..=(t_len + d_max) {
            let mut terms = Vec::new();
            for age in 0..=d_max.min(t - 1) {
                let arrival = t - age;
                if arrival > t_len {
                    continue;
                }
                for (j, ty) in types.iter().enumerate() {
                    if age as u32 > ty.deadline {
                        continue;
                    }
                    if let Some(var) = p.lookup(VarKey::TimedFlow {
                        ptype: j,
                        link: l,
                        age: age as u32,
                        slot: arrival,
                    }) {
                        terms.push((var, rates_per_slot[arrival - 1][j]));
                    }
                }
            }
            if !terms.is_empty() {
                p.add_constraint(terms, Relation::Le, bound, RowTag::Capacity { link: l, slot: t });
            }
        }
    }
    p
}

/// The periodic flow program: tables indexed by the slot within a period of
/// `rates_per_period.len()` slots, with wrap-around capacity coupling.
pub fn build_fnsp(
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    rates_per_period: &[Vec<f64>],
    eps: f64,
) -> LpProblem {
    let period = rates_per_period.len();
    assert!(period >= 1);
    let d_max = types.iter().map(|t| t.deadline).max().unwrap_or(0) as usize;
    let wrap = |x: isize| -> usize {
        let p = period as isize;
        (((x - 1).rem_euclid(p)) + 1) as usize
    };
    let mut p = LpProblem::new();
    for (j, t) in types.iter().enumerate() {
        for slot in 1..=period {
            for age in 0..=t.deadline {
                for l in 0..view.link_count() {
                    let link = LinkId(l);
                    if flow_var_exists(view, t, link, age) {
                        p.var(VarKey::TimedFlow { ptype: j, link: l, age, slot });
                    }
                }
            }
        }
    }
    for (j, t) in types.iter().enumerate() {
        for slot in 1..=period {
            let rate = rates_per_period[slot - 1][j];
            let mut admit = Vec::new();
            for &l in view.out_links(t.source) {
                if let Some(v) = p.lookup(VarKey::TimedFlow { ptype: j, link: l.0, age: 0, slot }) {
                    p.add_objective(v, t.weight * rate);
                    admit.push((v, 1.0));
                }
            }
            if !admit.is_empty() {
                p.add_constraint(admit, Relation::Le, 1.0, RowTag::Admit { ptype: j, slot });
            }
            for age in 1..=t.deadline {
                for v in 0..view.node_count() {
                    let node = crate::net::NodeId(v);
                    let mut terms = Vec::new();
                    for &l in view.in_links(node) {
                        if let Some(var) =
                            p.lookup(VarKey::TimedFlow { ptype: j, link: l.0, age: age - 1, slot })
                        {
                            terms.push((var, 1.0));
                        }
                    }
                    for &l in view.out_links(node) {
                        if let Some(var) =
                            p.lookup(VarKey::TimedFlow { ptype: j, link: l.0, age, slot })
                        {
                            terms.push((var, -1.0));
                        }
                    }
                    if !terms.is_empty() {
                        p.add_constraint(
                            terms,
                            Relation::Eq,
                            0.0,
                            RowTag::Conservation { ptype: j, node: v, age, slot },
                        );
                    }
                }
            }
        }
    }
    for l in 0..view.base_link_count() {
        let link = LinkId(l);
        let Some(bound) = shrunk_bound(view.capacity(link), eps) else {
            continue;
        };
        for t in 1..=period {
            // accumulate coefficients; distinct ages can wrap onto the same
            // arrival slot
            let mut coeffs: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
            for age in 0..=d_max {
                let arrival = wrap(t as isize - age as isize);
                for (j, ty) in types.iter().enumerate() {
                    if age as u32 > ty.deadline {
                        continue;
                    }
                    if let Some(var) = p.lookup(VarKey::TimedFlow {
                        ptype: j,
                        link: l,
                        age: age as u32,
                        slot: arrival,
                    }) {
                        *coeffs.entry(var).or_insert(0.0) += rates_per_period[arrival - 1][j];
                    }
                }
            }
            if !coeffs.is_empty() {
                p.add_constraint(
                    coeffs.into_iter().collect(),
                    Relation::Le,
                    bound,
                    RowTag::Capacity { link: l, slot: t },
                );
            }
        }
    }
    p
}
