//! Network, packet-type, and route-schedule representations.
//!
//! Node and link identifiers are dense integers assigned at construction;
//! every tie-break elsewhere in the crate uses these indices. The base graph
//! forbids self-loops and parallel links; self-loops are added by
//! [`SelfLoopView`] with unbounded capacity, encoding "hold at node".

use crate::error::NetError;
use crate::traffic::ArrivalProcess;
use serde::{Deserialize, Serialize};

/// Dense node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// Dense link index into a [`SelfLoopView`] (base links first, then one loop
/// link per node).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

/// Per-link capacity. Loop links are unbounded; a sentinel keeps capacity
/// arithmetic away from fake large numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    Finite(u32),
    Unbounded,
}

impl Capacity {
    pub fn is_finite(self) -> bool {
        matches!(self, Capacity::Finite(_))
    }

    /// Finite value, panicking on the loop sentinel.
    pub fn finite(self) -> u32 {
        match self {
            Capacity::Finite(c) => c,
            Capacity::Unbounded => panic!("loop links have no finite capacity"),
        }
    }
}

#[derive(Debug, Clone)]
struct BaseLink {
    tail: NodeId,
    head: NodeId,
    capacity: u32,
}

/// A directed graph with positive integer link capacities.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    node_names: Vec<String>,
    links: Vec<BaseLink>,
}

/// On-disk form: `{ "nodes": ["u", ...], "links": [{"tail": "u", "head": "a", "capacity": 1}, ...] }`.
#[derive(Debug, Serialize, Deserialize)]
pub struct NetworkFile {
    pub nodes: Vec<String>,
    pub links: Vec<NetworkFileLink>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NetworkFileLink {
    pub tail: String,
    pub head: String,
    pub capacity: u32,
}

impl NetworkSpec {
    /// Builds a network from node names and `(tail, head, capacity)` triples.
    /// Names are mapped to dense indices in the order given.
    pub fn new(nodes: Vec<String>, links: Vec<(String, String, u32)>) -> Result<Self, NetError> {
        let index_of = |name: &str| -> Result<NodeId, NetError> {
            nodes
                .iter()
                .position(|n| n == name)
                .map(NodeId)
                .ok_or_else(|| NetError::UnknownNode(name.to_string()))
        };
        let mut out = Vec::with_capacity(links.len());
        for (tail, head, capacity) in &links {
            if capacity == &0 {
                return Err(NetError::BadCapacity(u64::from(*capacity)));
            }
            if tail == head {
                return Err(NetError::SelfLoop(tail.clone()));
            }
            let t = index_of(tail)?;
            let h = index_of(head)?;
            if out.iter().any(|l: &BaseLink| l.tail == t && l.head == h) {
                return Err(NetError::DuplicateLink(tail.clone(), head.clone()));
            }
            out.push(BaseLink {
                tail: t,
                head: h,
                capacity: *capacity,
            });
        }
        Ok(NetworkSpec {
            node_names: nodes,
            links: out,
        })
    }

    pub fn from_file_spec(file: &NetworkFile) -> Result<Self, NetError> {
        Self::new(
            file.nodes.clone(),
            file.links
                .iter()
                .map(|l| (l.tail.clone(), l.head.clone(), l.capacity))
                .collect(),
        )
    }

    /// Convenience constructor with indexed nodes `n0..n{count-1}`.
    pub fn with_indexed_nodes(count: usize, links: Vec<(usize, usize, u32)>) -> Result<Self, NetError> {
        let nodes: Vec<String> = (0..count).map(|i| format!("n{i}")).collect();
        let named = links
            .into_iter()
            .map(|(t, h, c)| (nodes[t].clone(), nodes[h].clone(), c))
            .collect();
        Self::new(nodes, named)
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.node_names[v.0]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name).map(NodeId)
    }
}

/// The base network plus one loop link per node.
///
/// Link indices `0..L` are the base links in construction order; link
/// `L + v` is the loop at node `v`. Immutable after construction and safe to
/// share across threads.
#[derive(Debug, Clone)]
pub struct SelfLoopView {
    base: NetworkSpec,
    out_links: Vec<Vec<LinkId>>,
    in_links: Vec<Vec<LinkId>>,
}

/// Adds a loop link of unbounded capacity at every node; base links are
/// unchanged.
pub fn build_self_loop_view(net: NetworkSpec) -> SelfLoopView {
    let nodes = net.node_count();
    let base_links = net.link_count();
    let mut out_links = vec![Vec::new(); nodes];
    let mut in_links = vec![Vec::new(); nodes];
    for (i, l) in net.links.iter().enumerate() {
        out_links[l.tail.0].push(LinkId(i));
        in_links[l.head.0].push(LinkId(i));
    }
    for v in 0..nodes {
        out_links[v].push(LinkId(base_links + v));
        in_links[v].push(LinkId(base_links + v));
    }
    SelfLoopView {
        base: net,
        out_links,
        in_links,
    }
}

impl SelfLoopView {
    pub fn base(&self) -> &NetworkSpec {
        &self.base
    }

    pub fn node_count(&self) -> usize {
        self.base.node_count()
    }

    /// Number of base links (loop links are indexed after these).
    pub fn base_link_count(&self) -> usize {
        self.base.link_count()
    }

    /// Total links including loops: |L| + |V|.
    pub fn link_count(&self) -> usize {
        self.base.link_count() + self.base.node_count()
    }

    pub fn is_loop(&self, l: LinkId) -> bool {
        l.0 >= self.base.link_count()
    }

    pub fn loop_of(&self, v: NodeId) -> LinkId {
        LinkId(self.base.link_count() + v.0)
    }

    pub fn tail(&self, l: LinkId) -> NodeId {
        if self.is_loop(l) {
            NodeId(l.0 - self.base.link_count())
        } else {
            self.base.links[l.0].tail
        }
    }

    pub fn head(&self, l: LinkId) -> NodeId {
        if self.is_loop(l) {
            NodeId(l.0 - self.base.link_count())
        } else {
            self.base.links[l.0].head
        }
    }

    pub fn capacity(&self, l: LinkId) -> Capacity {
        if self.is_loop(l) {
            Capacity::Unbounded
        } else {
            Capacity::Finite(self.base.links[l.0].capacity)
        }
    }

    /// Outgoing links of `v`, loop included, ascending by index.
    pub fn out_links(&self, v: NodeId) -> &[LinkId] {
        &self.out_links[v.0]
    }

    /// Incoming links of `v`, loop included, ascending by index.
    pub fn in_links(&self, v: NodeId) -> &[LinkId] {
        &self.in_links[v.0]
    }

    pub fn link_label(&self, l: LinkId) -> String {
        format!(
            "({},{})",
            self.base.node_name(self.tail(l)),
            self.base.node_name(self.head(l))
        )
    }
}

/// One flow: source, destination, hard deadline in slots, reward weight, and
/// the arrival process generating its packets.
#[derive(Debug, Clone)]
pub struct PacketTypeSpec {
    pub source: NodeId,
    pub dest: NodeId,
    pub deadline: u32,
    pub weight: f64,
    pub process: ArrivalProcess,
}

impl PacketTypeSpec {
    pub fn new(
        source: NodeId,
        dest: NodeId,
        deadline: u32,
        weight: f64,
        process: ArrivalProcess,
    ) -> Result<Self, NetError> {
        if source == dest {
            return Err(NetError::SourceIsDestination(format!("node {}", source.0)));
        }
        Ok(PacketTypeSpec {
            source,
            dest,
            deadline,
            weight,
            process,
        })
    }
}

/// Maximum deadline over the given types.
pub fn max_deadline(types: &[PacketTypeSpec]) -> u32 {
    types.iter().map(|t| t.deadline).max().unwrap_or(0)
}

/// Maximum route length: every route-schedule of type `j` has exactly
/// `d_j + 1` entries, so the bound is `max_j (d_j + 1)`.
pub fn max_route_len(types: &[PacketTypeSpec]) -> u32 {
    types.iter().map(|t| t.deadline + 1).max().unwrap_or(1)
}

/// A timed directed walk assigning the packet a link (possibly a loop) for
/// each slot after arrival: entry `tau` is the link used at age `tau`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteSchedule {
    pub type_index: usize,
    pub links: Vec<LinkId>,
}

/// True iff `rs` is a valid route-schedule for `ptype`: length exactly
/// `d_j + 1`, starting out of the source, ending into the destination, and
/// chained head-to-tail.
pub fn validate_route_schedule(
    rs: &RouteSchedule,
    view: &SelfLoopView,
    ptype: &PacketTypeSpec,
) -> bool {
    let len = ptype.deadline as usize + 1;
    if rs.links.len() != len {
        return false;
    }
    if rs.links.iter().any(|l| l.0 >= view.link_count()) {
        return false;
    }
    if view.tail(rs.links[0]) != ptype.source {
        return false;
    }
    if view.head(rs.links[len - 1]) != ptype.dest {
        return false;
    }
    rs.links
        .windows(2)
        .all(|w| view.head(w[0]) == view.tail(w[1]))
}

/// Enumerates all valid route-schedules for one type, in lexicographic
/// link-index order. Intended for tiny instances only: errors with
/// [`NetError::EnumerationOverflow`] once more than `cap` schedules exist.
pub fn enumerate_route_schedules(
    type_index: usize,
    ptype: &PacketTypeSpec,
    view: &SelfLoopView,
    cap: usize,
) -> Result<Vec<RouteSchedule>, NetError> {
    let len = ptype.deadline as usize + 1;
    let mut found = Vec::new();
    let mut stack: Vec<LinkId> = Vec::with_capacity(len);
    // Reachability pruning: can_reach[tau][v] = destination reachable from v
    // in exactly (len - tau) steps.
    let nodes = view.node_count();
    let mut can_reach = vec![vec![false; nodes]; len + 1];
    can_reach[len][ptype.dest.0] = true;
    for tau in (0..len).rev() {
        for v in 0..nodes {
            can_reach[tau][v] = view
                .out_links(NodeId(v))
                .iter()
                .any(|&l| can_reach[tau + 1][view.head(l).0]);
        }
    }
    fn dfs(
        view: &SelfLoopView,
        type_index: usize,
        len: usize,
        node: NodeId,
        can_reach: &[Vec<bool>],
        stack: &mut Vec<LinkId>,
        found: &mut Vec<RouteSchedule>,
        cap: usize,
    ) -> Result<(), NetError> {
        let tau = stack.len();
        if tau == len {
            if found.len() >= cap {
                return Err(NetError::EnumerationOverflow { cap });
            }
            found.push(RouteSchedule {
                type_index,
                links: stack.clone(),
            });
            return Ok(());
        }
        for &l in view.out_links(node) {
            let h = view.head(l);
            if !can_reach[tau + 1][h.0] {
                continue;
            }
            stack.push(l);
            dfs(view, type_index, len, h, can_reach, stack, found, cap)?;
            stack.pop();
        }
        Ok(())
    }
    if can_reach[0][ptype.source.0] {
        dfs(
            view,
            type_index,
            len,
            ptype.source,
            &can_reach,
            &mut stack,
            &mut found,
            cap,
        )?;
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::ArrivalProcess;

    use crate::gen::example_cycle_network as cycle_net;

    fn bern(rate: f64) -> ArrivalProcess {
        ArrivalProcess::Bernoulli { rate }
    }

    #[test]
    fn self_loop_view_of_example_network() {
        let view = build_self_loop_view(cycle_net());
        assert_eq!(view.link_count(), 8);
        assert_eq!(view.base_link_count(), 4);
        for v in 0..4 {
            let v = NodeId(v);
            assert!(view.out_links(v).contains(&view.loop_of(v)));
            assert!(view.in_links(v).contains(&view.loop_of(v)));
            assert_eq!(view.capacity(view.loop_of(v)), Capacity::Unbounded);
        }
    }

    #[test]
    fn self_loop_view_single_node() {
        let net = NetworkSpec::new(vec!["x".into()], vec![]).unwrap();
        let view = build_self_loop_view(net);
        assert_eq!(view.link_count(), 1);
        assert!(view.is_loop(LinkId(0)));
    }

    #[test]
    fn self_loop_view_line() {
        let net = NetworkSpec::new(
            vec!["u".into(), "a".into(), "v".into()],
            vec![("u".into(), "a".into(), 1), ("a".into(), "v".into(), 1)],
        )
        .unwrap();
        let view = build_self_loop_view(net);
        assert_eq!(view.link_count(), 5);
        let a = view.base().node_by_name("a").unwrap();
        let out: Vec<String> = view.out_links(a).iter().map(|&l| view.link_label(l)).collect();
        assert_eq!(out, vec!["(a,v)".to_string(), "(a,a)".to_string()]);
    }

    #[test]
    fn construction_rejects_bad_graphs() {
        assert!(matches!(
            NetworkSpec::new(vec!["u".into()], vec![("u".into(), "u".into(), 1)]),
            Err(NetError::SelfLoop(_))
        ));
        assert!(matches!(
            NetworkSpec::new(
                vec!["u".into(), "v".into()],
                vec![("u".into(), "v".into(), 1), ("u".into(), "v".into(), 2)]
            ),
            Err(NetError::DuplicateLink(_, _))
        ));
        assert!(matches!(
            NetworkSpec::new(vec!["u".into(), "v".into()], vec![("u".into(), "v".into(), 0)]),
            Err(NetError::BadCapacity(0))
        ));
    }

    #[test]
    fn validates_example_route_schedules() {
        let view = build_self_loop_view(cycle_net());
        let u = view.base().node_by_name("u").unwrap();
        let a = view.base().node_by_name("a").unwrap();
        let v = view.base().node_by_name("v").unwrap();
        let t1 = PacketTypeSpec::new(u, v, 2, 1.0, bern(0.5)).unwrap();
        let t2 = PacketTypeSpec::new(a, v, 1, 1.0, bern(0.5)).unwrap();
        // k = [(u,u), (u,a), (a,v)]
        let k = RouteSchedule {
            type_index: 0,
            links: vec![view.loop_of(u), LinkId(0), LinkId(1)],
        };
        assert!(validate_route_schedule(&k, &view, &t1));
        // k' = [(a,v), (v,v)]
        let kp = RouteSchedule {
            type_index: 1,
            links: vec![LinkId(1), view.loop_of(v)],
        };
        assert!(validate_route_schedule(&kp, &view, &t2));
        // wrong length: two links for d = 2
        let bad = RouteSchedule {
            type_index: 0,
            links: vec![LinkId(0), LinkId(1)],
        };
        assert!(!validate_route_schedule(&bad, &view, &t1));
    }

    #[test]
    fn enumerates_exactly_three_schedules_on_example() {
        let view = build_self_loop_view(cycle_net());
        let u = view.base().node_by_name("u").unwrap();
        let v = view.base().node_by_name("v").unwrap();
        let t = PacketTypeSpec::new(u, v, 2, 1.0, bern(0.5)).unwrap();
        let routes = enumerate_route_schedules(0, &t, &view, 100).unwrap();
        let labels: Vec<Vec<String>> = routes
            .iter()
            .map(|r| r.links.iter().map(|&l| view.link_label(l)).collect())
            .collect();
        let expect = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(
            labels,
            vec![
                expect(&["(u,a)", "(a,v)", "(v,v)"]),
                expect(&["(u,a)", "(a,a)", "(a,v)"]),
                expect(&["(u,u)", "(u,a)", "(a,v)"]),
            ]
        );
        for r in &routes {
            assert!(validate_route_schedule(r, &view, &t));
        }
    }

    #[test]
    fn enumerates_single_direct_link_deadline_zero() {
        let net = NetworkSpec::new(
            vec!["s".into(), "z".into()],
            vec![("s".into(), "z".into(), 1)],
        )
        .unwrap();
        let view = build_self_loop_view(net);
        let t = PacketTypeSpec::new(NodeId(0), NodeId(1), 0, 1.0, bern(1.0)).unwrap();
        let routes = enumerate_route_schedules(0, &t, &view, 10).unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(routes[0].links, vec![LinkId(0)]);
    }

    #[test]
    fn enumerates_empty_when_no_direct_link() {
        let net = NetworkSpec::new(
            vec!["s".into(), "m".into(), "z".into()],
            vec![("s".into(), "m".into(), 1), ("m".into(), "z".into(), 1)],
        )
        .unwrap();
        let view = build_self_loop_view(net);
        let t = PacketTypeSpec::new(NodeId(0), NodeId(2), 0, 1.0, bern(1.0)).unwrap();
        let routes = enumerate_route_schedules(0, &t, &view, 10).unwrap();
        assert!(routes.is_empty());
    }

    #[test]
    fn enumeration_cap_overflows() {
        let view = build_self_loop_view(cycle_net());
        let u = view.base().node_by_name("u").unwrap();
        let v = view.base().node_by_name("v").unwrap();
        let t = PacketTypeSpec::new(u, v, 2, 1.0, bern(0.5)).unwrap();
        assert!(matches!(
            enumerate_route_schedules(0, &t, &view, 2),
            Err(NetError::EnumerationOverflow { cap: 2 })
        ));
    }

    #[test]
    fn enumeration_is_duplicate_free() {
        let view = build_self_loop_view(cycle_net());
        let u = view.base().node_by_name("u").unwrap();
        let v = view.base().node_by_name("v").unwrap();
        for d in 0..5u32 {
            let t = PacketTypeSpec::new(u, v, d, 1.0, bern(0.5)).unwrap();
            let routes = enumerate_route_schedules(0, &t, &view, 10_000).unwrap();
            let mut seen = std::collections::HashSet::new();
            for r in &routes {
                assert!(seen.insert(r.links.clone()));
                assert!(validate_route_schedule(r, &view, &t));
            }
        }
    }
}
