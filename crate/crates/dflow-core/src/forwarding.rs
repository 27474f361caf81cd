//! Forwarding tables as per-packet randomized decisions and as explicit
//! route-schedule distributions.
//!
//! The hop-by-hop path samples the next link from the table at each age. The
//! route-distribution path strips maximum-bottleneck paths off the
//! time-expanded graph: each iteration zeroes at least one arc, so a type
//! with deadline `d` decomposes into at most `(d+1) * |links|` routes.

use crate::error::ForwardingError;
use crate::lp::ForwardingTable;
use crate::net::{LinkId, NodeId, PacketTypeSpec, RouteSchedule, SelfLoopView};
use serde::Serialize;

/// Normalizers below this are treated as an empty (certain-drop) support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Residual admit mass below this ends the decomposition.
pub const STRIP_TOL: f64 = 1e-10;
/// Negative residuals above this magnitude are conservation errors.
pub const NEG_TOL: f64 = 1e-9;

/// Total probability that an arriving packet of type `j` is attempted at
/// all: the age-0 mass leaving its source, clipped into [0, 1].
pub fn admit_probability(table: &ForwardingTable, view: &SelfLoopView, types: &[PacketTypeSpec], j: usize) -> f64 {
    table
        .sum_over(j, 0, view.out_links(types[j].source))
        .clamp(0.0, 1.0)
}

/// One packet-step distribution: candidate links with probabilities plus
/// residual drop mass.
#[derive(Debug, Clone, PartialEq)]
pub struct HopDistribution {
    pub options: Vec<(LinkId, f64)>,
    pub drop: f64,
    /// Set when the node carries no flow at this age; the packet is off the
    /// table's support and the distribution is a certain drop.
    pub off_support: bool,
}

impl HopDistribution {
    fn certain_drop(off_support: bool) -> Self {
        HopDistribution {
            options: Vec::new(),
            drop: 1.0,
            off_support,
        }
    }

    /// Samples a link (or a drop) with one uniform draw.
    pub fn sample(&self, u: f64) -> Option<LinkId> {
        let mut acc = 0.0;
        for (l, p) in &self.options {
            acc += p;
            if u < acc {
                return Some(*l);
            }
        }
        None
    }
}

/// The decision law at `(type, age, node)`: raw age-0 values with residual
/// drop mass at the source, normalized values afterwards, certain drop on an
/// empty support.
pub fn hop_distribution(
    table: &ForwardingTable,
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    j: usize,
    age: u32,
    node: NodeId,
) -> HopDistribution {
    let t = &types[j];
    debug_assert!(age <= t.deadline);
    if age == 0 {
        if node != t.source {
            return HopDistribution::certain_drop(true);
        }
        let mut options = Vec::new();
        let mut total = 0.0;
        for &l in view.out_links(node) {
            let f = table.get(j, l, 0);
            if f > 0.0 {
                options.push((l, f));
                total += f;
            }
        }
        if total <= SUPPORT_TOL {
            return HopDistribution::certain_drop(false);
        }
        if total > 1.0 {
            // tolerate solver noise just over the admit bound
            for (_, p) in options.iter_mut() {
                *p /= total;
            }
            total = 1.0;
        }
        return HopDistribution {
            options,
            drop: (1.0 - total).max(0.0),
            off_support: false,
        };
    }
    let mut options = Vec::new();
    let mut norm = 0.0;
    for &l in view.out_links(node) {
        let f = table.get(j, l, age);
        if f > 0.0 {
            options.push((l, f));
            norm += f;
        }
    }
    if norm < SUPPORT_TOL {
        return HopDistribution::certain_drop(true);
    }
    for (_, p) in options.iter_mut() {
        *p /= norm;
    }
    HopDistribution {
        options,
        drop: 0.0,
        off_support: false,
    }
}

/// A finite route-schedule distribution with residual drop mass.
#[derive(Debug, Clone, Serialize)]
pub struct RouteDistribution {
    pub type_index: usize,
    pub routes: Vec<WeightedRoute>,
    pub drop: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedRoute {
    pub links: Vec<LinkId>,
    pub probability: f64,
}

/// Strips maximum-bottleneck paths from the table's time-expanded flow until
/// the residual admit mass is spent. Ties between equal-bottleneck paths
/// break to the lexicographically smallest link sequence.
pub fn decompose(
    table: &ForwardingTable,
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
    j: usize,
) -> Result<RouteDistribution, ForwardingError> {
    let t = &types[j];
    let d = t.deadline as usize;
    let links = view.link_count();
    // residual[age][link]
    let mut residual = vec![vec![0.0f64; links]; d + 1];
    for (age, row) in residual.iter_mut().enumerate() {
        for (l, slot) in row.iter_mut().enumerate() {
            let v = table.get(j, LinkId(l), age as u32);
            if v < -NEG_TOL {
                return Err(ForwardingError::ConservationViolated {
                    link: l,
                    age: age as u32,
                    residual: v,
                });
            }
            *slot = v.max(0.0);
        }
    }
    let route_bound = (d + 1) * links;
    let mut routes = Vec::new();
    loop {
        let admit: f64 = view
            .out_links(t.source)
            .iter()
            .map(|&l| residual[0][l.0])
            .sum();
        if admit < STRIP_TOL {
            break;
        }
        // cap[age][v]: best bottleneck from (v at age) into the destination
        // layer, using links at ages age..=d
        let nodes = view.node_count();
        let mut cap = vec![vec![0.0f64; nodes]; d + 2];
        for (v, c) in cap[d + 1].iter_mut().enumerate() {
            *c = if v == t.dest.0 { f64::INFINITY } else { 0.0 };
        }
        for age in (0..=d).rev() {
            for v in 0..nodes {
                let mut best = 0.0f64;
                for &l in view.out_links(NodeId(v)) {
                    let through = residual[age][l.0].min(cap[age + 1][view.head(l).0]);
                    best = best.max(through);
                }
                cap[age][v] = best;
            }
        }
        let bottleneck = cap[0][t.source.0];
        if bottleneck < STRIP_TOL {
            // admit mass that cannot reach the destination: conservation is
            // broken beyond numerical noise
            return Err(ForwardingError::ConservationViolated {
                link: usize::MAX,
                age: 0,
                residual: admit,
            });
        }
        // lexicographically-first path attaining the bottleneck
        let mut path = Vec::with_capacity(d + 1);
        let mut node = t.source;
        for (age, residual_row) in residual.iter().enumerate() {
            let chosen = view
                .out_links(node)
                .iter()
                .copied()
                .find(|&l| {
                    residual_row[l.0].min(cap[age + 1][view.head(l).0]) >= bottleneck
                })
                .expect("bottleneck path exists by construction");
            path.push(chosen);
            node = view.head(chosen);
        }
        debug_assert_eq!(node, t.dest);
        for (age, &l) in path.iter().enumerate() {
            residual[age][l.0] -= bottleneck;
            if residual[age][l.0] < -NEG_TOL {
                return Err(ForwardingError::ConservationViolated {
                    link: l.0,
                    age: age as u32,
                    residual: residual[age][l.0],
                });
            }
            residual[age][l.0] = residual[age][l.0].max(0.0);
        }
        routes.push(WeightedRoute {
            links: path,
            probability: bottleneck,
        });
        if routes.len() > route_bound {
            return Err(ForwardingError::ConservationViolated {
                link: usize::MAX,
                age: 0,
                residual: admit,
            });
        }
    }
    let total: f64 = routes.iter().map(|r| r.probability).sum();
    Ok(RouteDistribution {
        type_index: j,
        routes,
        drop: (1.0 - total).max(0.0),
    })
}

/// Rebuilds the table slice of one type from a route distribution:
/// `f[link][age] = sum of probabilities of routes using the link at the age`.
pub fn recompose(
    dist: &RouteDistribution,
    view: &SelfLoopView,
    types: &[PacketTypeSpec],
) -> ForwardingTable {
    let j = dist.type_index;
    let mut table = ForwardingTable::zeros(view, types, 0.0);
    for r in &dist.routes {
        for (age, &l) in r.links.iter().enumerate() {
            let cur = table.get(j, l, age as u32);
            table.set(j, l, age as u32, cur + r.probability);
        }
    }
    table
}

/// Routes as [`RouteSchedule`] values, validity-checkable against the view.
pub fn distribution_schedules(dist: &RouteDistribution) -> Vec<(RouteSchedule, f64)> {
    dist.routes
        .iter()
        .map(|r| {
            (
                RouteSchedule {
                    type_index: dist.type_index,
                    links: r.links.clone(),
                },
                r.probability,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::example_cycle_network;
    use crate::lp::{build_fs, solve, ForwardingTable};
    use crate::net::{build_self_loop_view, validate_route_schedule};
    use crate::traffic::ArrivalProcess;

    fn example() -> (SelfLoopView, Vec<PacketTypeSpec>) {
        let view = build_self_loop_view(example_cycle_network());
        let u = view.base().node_by_name("u").unwrap();
        let v = view.base().node_by_name("v").unwrap();
        let types = vec![PacketTypeSpec::new(
            u,
            v,
            2,
            1.0,
            ArrivalProcess::Bernoulli { rate: 0.5 },
        )
        .unwrap()];
        (view, types)
    }

    fn feasible_table(view: &SelfLoopView, types: &[PacketTypeSpec]) -> ForwardingTable {
        let mut t = ForwardingTable::zeros(view, types, 0.0);
        let ua = LinkId(0);
        let av = LinkId(1);
        let lu = view.loop_of(view.base().node_by_name("u").unwrap());
        let la = view.loop_of(view.base().node_by_name("a").unwrap());
        let lv = view.loop_of(view.base().node_by_name("v").unwrap());
        t.set(0, ua, 0, 0.7);
        t.set(0, lu, 0, 0.3);
        t.set(0, av, 1, 0.5);
        t.set(0, la, 1, 0.2);
        t.set(0, ua, 1, 0.3);
        t.set(0, av, 2, 0.5);
        t.set(0, lv, 2, 0.5);
        t
    }

    #[test]
    fn admit_probability_sums_age_zero_mass() {
        let (view, types) = example();
        let table = feasible_table(&view, &types);
        assert!((admit_probability(&table, &view, &types, 0) - 1.0).abs() < 1e-12);
        let zero = ForwardingTable::zeros(&view, &types, 0.0);
        assert_eq!(admit_probability(&zero, &view, &types, 0), 0.0);
        let mut single = ForwardingTable::zeros(&view, &types, 0.0);
        single.set(0, LinkId(0), 0, 0.4);
        assert!((admit_probability(&single, &view, &types, 0) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn hop_distribution_normalizes_past_age_zero() {
        let (view, types) = example();
        let mut table = ForwardingTable::zeros(&view, &types, 0.0);
        let a = view.base().node_by_name("a").unwrap();
        let av = LinkId(1);
        let la = view.loop_of(a);
        table.set(0, av, 1, 0.3);
        table.set(0, la, 1, 0.1);
        let d = hop_distribution(&table, &view, &types, 0, 1, a);
        assert_eq!(d.drop, 0.0);
        let p: std::collections::HashMap<usize, f64> =
            d.options.iter().map(|(l, p)| (l.0, *p)).collect();
        assert!((p[&av.0] - 0.75).abs() < 1e-12);
        assert!((p[&la.0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn hop_distribution_age_zero_keeps_residual_drop() {
        let (view, types) = example();
        let mut table = ForwardingTable::zeros(&view, &types, 0.0);
        table.set(0, LinkId(0), 0, 0.7);
        let u = types[0].source;
        let d = hop_distribution(&table, &view, &types, 0, 0, u);
        assert!((d.drop - 0.3).abs() < 1e-12);
        assert!(!d.off_support);
    }

    #[test]
    fn hop_distribution_zero_normalizer_drops() {
        let (view, types) = example();
        let table = ForwardingTable::zeros(&view, &types, 0.0);
        let b = view.base().node_by_name("b").unwrap();
        let d = hop_distribution(&table, &view, &types, 0, 1, b);
        assert_eq!(d.drop, 1.0);
        assert!(d.off_support);
        assert!(d.sample(0.5).is_none());
    }

    #[test]
    fn decompose_example_has_at_most_three_routes() {
        let (view, types) = example();
        let table = feasible_table(&view, &types);
        let dist = decompose(&table, &view, &types, 0).unwrap();
        assert!(dist.routes.len() <= 3, "routes {}", dist.routes.len());
        let total: f64 = dist.routes.iter().map(|r| r.probability).sum();
        assert!((total + dist.drop - 1.0).abs() < 1e-9);
        for (rs, _) in distribution_schedules(&dist) {
            assert!(validate_route_schedule(&rs, &view, &types[0]));
        }
    }

    #[test]
    fn decompose_single_path_table() {
        let (view, types) = example();
        let mut table = ForwardingTable::zeros(&view, &types, 0.0);
        table.set(0, LinkId(0), 0, 0.4);
        table.set(0, LinkId(1), 1, 0.4);
        let lv = view.loop_of(types[0].dest);
        table.set(0, lv, 2, 0.4);
        let dist = decompose(&table, &view, &types, 0).unwrap();
        assert_eq!(dist.routes.len(), 1);
        assert!((dist.routes[0].probability - 0.4).abs() < 1e-12);
        assert!((dist.drop - 0.6).abs() < 1e-12);
    }

    #[test]
    fn decompose_zero_table() {
        let (view, types) = example();
        let table = ForwardingTable::zeros(&view, &types, 0.0);
        let dist = decompose(&table, &view, &types, 0).unwrap();
        assert!(dist.routes.is_empty());
        assert_eq!(dist.drop, 1.0);
    }

    #[test]
    fn recompose_inverts_decompose_on_solved_table() {
        let (view, types) = example();
        let p = build_fs(&view, &types, &[0.5], 0.0);
        let sol = solve(&p).unwrap();
        let table = ForwardingTable::from_solution(&p, &sol, &view, &types, 0.0);
        let dist = decompose(&table, &view, &types, 0).unwrap();
        let back = recompose(&dist, &view, &types);
        for age in 0..=2u32 {
            for l in 0..view.link_count() {
                let diff = (table.get(0, LinkId(l), age) - back.get(0, LinkId(l), age)).abs();
                assert!(diff <= 1e-9, "link {l} age {age}: diff {diff}");
            }
        }
    }

    #[test]
    fn recompose_empty_and_unit_distributions() {
        let (view, types) = example();
        let empty = RouteDistribution {
            type_index: 0,
            routes: vec![],
            drop: 1.0,
        };
        let z = recompose(&empty, &view, &types);
        for l in 0..view.link_count() {
            for age in 0..=2 {
                assert_eq!(z.get(0, LinkId(l), age), 0.0);
            }
        }
        let unit = RouteDistribution {
            type_index: 0,
            routes: vec![WeightedRoute {
                links: vec![LinkId(0), LinkId(1), view.loop_of(types[0].dest)],
                probability: 1.0,
            }],
            drop: 0.0,
        };
        let t = recompose(&unit, &view, &types);
        assert_eq!(t.get(0, LinkId(0), 0), 1.0);
        assert_eq!(t.get(0, LinkId(1), 1), 1.0);
    }

    #[test]
    fn stripping_never_creates_load() {
        let (view, types) = example();
        let p = build_fs(&view, &types, &[0.5], 0.0);
        let sol = solve(&p).unwrap();
        let table = ForwardingTable::from_solution(&p, &sol, &view, &types, 0.0);
        let dist = decompose(&table, &view, &types, 0).unwrap();
        // per-(link, age) mass from routes stays within the table's values
        let back = recompose(&dist, &view, &types);
        for age in 0..=2u32 {
            for l in 0..view.link_count() {
                assert!(
                    back.get(0, LinkId(l), age) <= table.get(0, LinkId(l), age) + 1e-9
                );
            }
        }
    }
}
