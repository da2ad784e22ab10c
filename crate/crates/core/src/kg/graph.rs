use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ConceptId, Edge, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub(crate) u32);

/// Which adjacency lists a neighbor query reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Outgoing edges (`c` is the start).
    Forward,
    /// Incoming edges (`c` is the end).
    Reverse,
    Both,
}

/// How an edge was walked: `start -> end` or `end -> start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Traversal {
    WithEdge,
    AgainstEdge,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum RelationFilter {
    #[default]
    All,
    Only(Vec<Relation>),
}

impl RelationFilter {
    pub fn allows(&self, rel: &Relation) -> bool {
        match self {
            RelationFilter::All => true,
            RelationFilter::Only(list) => list.contains(rel),
        }
    }
}

/// Per-graph bitmap of admitted relation ids.
#[derive(Debug, Clone)]
pub struct RelationMask(Vec<bool>);

impl RelationMask {
    #[inline]
    pub fn admits(&self, rel: u16) -> bool {
        self.0[rel as usize]
    }
}

/// Row accounting from a dump load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub rows: u64,
    pub accepted: u64,
    pub non_english: u64,
    pub non_positive_weight: u64,
    pub relation_filtered: u64,
    pub malformed: u64,
    pub duplicates_collapsed: u64,
}

impl LoadStats {
    /// Well-formed rows dropped by the language, weight or relation filters.
    pub fn filtered(&self) -> u64 {
        self.non_english + self.non_positive_weight + self.relation_filtered
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphMetadata {
    /// Hex SHA-256 of the source the graph was built from.
    pub source_digest: String,
    pub node_count: u64,
    pub edge_count: u64,
    /// Seconds since the Unix epoch.
    pub built_at: u64,
    pub stats: LoadStats,
    /// Line numbers of the first malformed rows (capped).
    pub malformed_lines: Vec<u64>,
    /// Set when the index is checked against a dump whose digest differs.
    #[serde(default)]
    pub digest_warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EdgeRecord {
    pub start: u32,
    pub end: u32,
    pub rel: u16,
    pub weight: f64,
}

/// Borrowed view of one edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgeRef<'g> {
    pub id: EdgeId,
    pub start: &'g ConceptId,
    pub end: &'g ConceptId,
    pub relation: &'g Relation,
    pub weight: f64,
}

impl EdgeRef<'_> {
    pub fn to_edge(&self) -> Edge {
        Edge {
            start: self.start.clone(),
            end: self.end.clone(),
            relation: self.relation.clone(),
            weight: self.weight,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Neighbor<'g> {
    pub edge: EdgeRef<'g>,
    pub traversal: Traversal,
}

impl<'g> Neighbor<'g> {
    /// The endpoint reached by walking the edge.
    pub fn other(&self) -> &'g ConceptId {
        match self.traversal {
            Traversal::WithEdge => self.edge.end,
            Traversal::AgainstEdge => self.edge.start,
        }
    }
}

/// Immutable weighted directed multigraph with mirrored forward and reverse
/// adjacency. Node ids follow label order and relation ids follow name
/// order, so integer comparisons reproduce the label/name tiebreaks.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    pub(crate) nodes: Vec<ConceptId>,
    lookup: HashMap<ConceptId, u32>,
    pub(crate) relations: Vec<Relation>,
    /// Sorted by (start, end, rel).
    pub(crate) edges: Vec<EdgeRecord>,
    fwd_offsets: Vec<u32>,
    fwd: Vec<u32>,
    rev_offsets: Vec<u32>,
    rev: Vec<u32>,
    pub(crate) meta: GraphMetadata,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.same_structure(other) && self.meta == other.meta
    }
}

impl KnowledgeGraph {
    /// Builds a graph directly from edges; duplicates collapse to the max weight.
    pub fn from_edges<I: IntoIterator<Item = Edge>>(edges: I) -> KnowledgeGraph {
        let mut b = GraphBuilder::new();
        for e in edges {
            b.add_edge(e);
        }
        b.build(String::new(), 0, LoadStats::default(), Vec::new())
    }

    pub(crate) fn from_parts(
        nodes: Vec<ConceptId>,
        relations: Vec<Relation>,
        mut edges: Vec<EdgeRecord>,
        mut meta: GraphMetadata,
    ) -> KnowledgeGraph {
        edges.sort_by(|a, b| (a.start, a.end, a.rel).cmp(&(b.start, b.end, b.rel)));
        let n = nodes.len();

        let mut fwd_lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut rev_lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            fwd_lists[e.start as usize].push(i as u32);
            rev_lists[e.end as usize].push(i as u32);
        }
        let (fwd_offsets, fwd) = pack(fwd_lists, |id| {
            let e = &edges[id as usize];
            (e.weight, e.rel, e.end)
        });
        let (rev_offsets, rev) = pack(rev_lists, |id| {
            let e = &edges[id as usize];
            (e.weight, e.rel, e.start)
        });

        let lookup = nodes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i as u32))
            .collect();
        meta.node_count = n as u64;
        meta.edge_count = edges.len() as u64;
        KnowledgeGraph {
            nodes,
            lookup,
            relations,
            edges,
            fwd_offsets,
            fwd,
            rev_offsets,
            rev,
            meta,
        }
    }

    pub fn metadata(&self) -> &GraphMetadata {
        &self.meta
    }

    pub(crate) fn metadata_mut(&mut self) -> &mut GraphMetadata {
        &mut self.meta
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn concepts(&self) -> &[ConceptId] {
        &self.nodes
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn contains(&self, c: &ConceptId) -> bool {
        self.lookup.contains_key(c)
    }

    pub fn node_id(&self, c: &ConceptId) -> Option<NodeId> {
        self.lookup.get(c).map(|&i| NodeId(i))
    }

    pub fn concept(&self, id: NodeId) -> &ConceptId {
        &self.nodes[id.0 as usize]
    }

    pub fn relation_id(&self, rel: &Relation) -> Option<u16> {
        self.relations
            .binary_search_by(|r| r.name().cmp(rel.name()))
            .ok()
            .map(|i| i as u16)
    }

    pub fn edge(&self, id: EdgeId) -> EdgeRef<'_> {
        let e = &self.edges[id.0 as usize];
        EdgeRef {
            id,
            start: &self.nodes[e.start as usize],
            end: &self.nodes[e.end as usize],
            relation: &self.relations[e.rel as usize],
            weight: e.weight,
        }
    }

    pub(crate) fn record(&self, id: EdgeId) -> &EdgeRecord {
        &self.edges[id.0 as usize]
    }

    /// Iterates all edges in canonical (start, end, relation) order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRef<'_>> + '_ {
        (0..self.edges.len() as u32).map(move |i| self.edge(EdgeId(i)))
    }

    /// Looks up the edge `start -relation-> end`.
    pub fn find_edge(&self, start: &ConceptId, relation: &Relation, end: &ConceptId) -> Option<EdgeRef<'_>> {
        let s = self.node_id(start)?.0;
        let t = self.node_id(end)?.0;
        let r = self.relation_id(relation)?;
        self.edges
            .binary_search_by(|e| (e.start, e.end, e.rel).cmp(&(s, t, r)))
            .ok()
            .map(|i| self.edge(EdgeId(i as u32)))
    }

    pub fn relation_mask(&self, filter: &RelationFilter) -> RelationMask {
        RelationMask(self.relations.iter().map(|r| filter.allows(r)).collect())
    }

    /// Outgoing edge ids of `node`, heaviest first.
    pub fn outgoing(&self, node: NodeId) -> &[u32] {
        slice(&self.fwd_offsets, &self.fwd, node.0)
    }

    /// Incoming edge ids of `node`, heaviest first.
    pub fn incoming(&self, node: NodeId) -> &[u32] {
        slice(&self.rev_offsets, &self.rev, node.0)
    }

    /// Adjacent edges of `node` in canonical neighbor order: weight
    /// descending, then relation name, then other-endpoint label, then
    /// with-edge before against-edge.
    pub fn adjacent(&self, node: NodeId, direction: Direction) -> Adjacent<'_> {
        let (fwd, rev): (&[u32], &[u32]) = match direction {
            Direction::Forward => (self.outgoing(node), &[]),
            Direction::Reverse => (&[], self.incoming(node)),
            Direction::Both => (self.outgoing(node), self.incoming(node)),
        };
        Adjacent {
            graph: self,
            fwd,
            rev,
        }
    }

    /// Neighbors of `c` in canonical order. Unknown concepts have none.
    pub fn neighbors(
        &self,
        c: &ConceptId,
        direction: Direction,
        relation_filter: Option<&RelationFilter>,
    ) -> Vec<Neighbor<'_>> {
        let Some(node) = self.node_id(c) else {
            return Vec::new();
        };
        let mask = relation_filter.map(|f| self.relation_mask(f));
        self.adjacent(node, direction)
            .filter(|&(eid, _)| {
                mask.as_ref()
                    .is_none_or(|m| m.admits(self.edges[eid.0 as usize].rel))
            })
            .map(|(eid, traversal)| Neighbor {
                edge: self.edge(eid),
                traversal,
            })
            .collect()
    }

    /// Same nodes, relations, edges and source digest; ignores build time
    /// and runtime warnings.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.relations == other.relations
            && self.edges == other.edges
            && self.meta.source_digest == other.meta.source_digest
    }
}

fn slice<'a>(offsets: &[u32], ids: &'a [u32], node: u32) -> &'a [u32] {
    let lo = offsets[node as usize] as usize;
    let hi = offsets[node as usize + 1] as usize;
    &ids[lo..hi]
}

fn pack<F>(lists: Vec<Vec<u32>>, key: F) -> (Vec<u32>, Vec<u32>)
where
    F: Fn(u32) -> (f64, u16, u32),
{
    let mut offsets = Vec::with_capacity(lists.len() + 1);
    let mut flat = Vec::with_capacity(lists.iter().map(Vec::len).sum());
    offsets.push(0);
    for mut list in lists {
        list.sort_by(|&a, &b| neighbor_order(key(a), key(b)));
        flat.extend(list);
        offsets.push(flat.len() as u32);
    }
    (offsets, flat)
}

#[inline]
fn neighbor_order(a: (f64, u16, u32), b: (f64, u16, u32)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.cmp(&b.2))
}

/// Merge of the outgoing and incoming lists of one node.
pub struct Adjacent<'g> {
    graph: &'g KnowledgeGraph,
    fwd: &'g [u32],
    rev: &'g [u32],
}

impl Iterator for Adjacent<'_> {
    type Item = (EdgeId, Traversal);

    fn next(&mut self) -> Option<Self::Item> {
        let take_fwd = match (self.fwd.first(), self.rev.first()) {
            (None, None) => return None,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(&f), Some(&r)) => {
                let ef = &self.graph.edges[f as usize];
                let er = &self.graph.edges[r as usize];
                neighbor_order((ef.weight, ef.rel, ef.end), (er.weight, er.rel, er.start))
                    != Ordering::Greater
            }
        };
        if take_fwd {
            let id = self.fwd[0];
            self.fwd = &self.fwd[1..];
            Some((EdgeId(id), Traversal::WithEdge))
        } else {
            let id = self.rev[0];
            self.rev = &self.rev[1..];
            Some((EdgeId(id), Traversal::AgainstEdge))
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.fwd.len() + self.rev.len();
        (n, Some(n))
    }
}

/// Accumulates edges, collapsing repeated (start, end, relation) triples to
/// their maximum weight, then freezes into a [`KnowledgeGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    concepts: HashMap<ConceptId, u32>,
    names: Vec<ConceptId>,
    rels: HashMap<Relation, u16>,
    rel_names: Vec<Relation>,
    edges: HashMap<(u32, u32, u16), f64>,
    duplicates: u64,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, c: ConceptId) -> u32 {
        if let Some(&id) = self.concepts.get(&c) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(c.clone());
        self.concepts.insert(c, id);
        id
    }

    fn add_relation(&mut self, r: Relation) -> u16 {
        if let Some(&id) = self.rels.get(&r) {
            return id;
        }
        let id = u16::try_from(self.rel_names.len()).expect("more than 65535 relation types");
        self.rel_names.push(r.clone());
        self.rels.insert(r, id);
        id
    }

    /// Adds an edge; returns false when it duplicated an existing triple.
    pub fn add_edge(&mut self, e: Edge) -> bool {
        let s = self.add_node(e.start);
        let t = self.add_node(e.end);
        let r = self.add_relation(e.relation);
        match self.edges.entry((s, t, r)) {
            std::collections::hash_map::Entry::Occupied(mut slot) => {
                self.duplicates += 1;
                if e.weight > *slot.get() {
                    slot.insert(e.weight);
                }
                false
            }
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(e.weight);
                true
            }
        }
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn build(
        self,
        source_digest: String,
        built_at: u64,
        mut stats: LoadStats,
        malformed_lines: Vec<u64>,
    ) -> KnowledgeGraph {
        let node_remap = sorted_remap(&self.names);
        let rel_remap = sorted_remap(&self.rel_names);

        let mut nodes = self.names;
        nodes.sort();
        let mut relations = self.rel_names;
        relations.sort();

        let edges = self
            .edges
            .into_iter()
            .map(|((s, t, r), w)| EdgeRecord {
                start: node_remap[s as usize],
                end: node_remap[t as usize],
                rel: rel_remap[r as usize] as u16,
                weight: w,
            })
            .collect();

        stats.duplicates_collapsed = self.duplicates;
        let meta = GraphMetadata {
            source_digest,
            built_at,
            stats,
            malformed_lines,
            ..GraphMetadata::default()
        };
        KnowledgeGraph::from_parts(nodes, relations, edges, meta)
    }
}

/// Maps insertion-order ids to sorted-order ids.
fn sorted_remap<T: Ord>(items: &[T]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..items.len() as u32).collect();
    order.sort_by(|&a, &b| items[a as usize].cmp(&items[b as usize]));
    let mut remap = vec![0u32; items.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old as usize] = new as u32;
    }
    remap
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str, r: Relation, t: &str, w: f64) -> Edge {
        Edge::new(s, r, t, w).unwrap()
    }

    fn c(s: &str) -> ConceptId {
        ConceptId::new(s).unwrap()
    }

    fn fixture() -> KnowledgeGraph {
        KnowledgeGraph::from_edges([
            e("food", Relation::AtLocation, "kitchen", 7.21),
            e("fruit", Relation::AtLocation, "kitchen", 3.0),
            e("refrigerator", Relation::AtLocation, "kitchen", 1.2),
            e("kitchen", Relation::PartOf, "house", 2.0),
            e("oven", Relation::AtLocation, "kitchen", 2.0),
            e("food", Relation::AtLocation, "kitchen", 1.0),
        ])
    }

    #[test]
    fn reverse_neighbors_sorted_by_weight() {
        let g = fixture();
        let filter = RelationFilter::Only(vec![Relation::AtLocation]);
        let got: Vec<(String, f64)> = g
            .neighbors(&c("kitchen"), Direction::Reverse, Some(&filter))
            .iter()
            .map(|n| (n.other().to_string(), n.edge.weight))
            .collect();
        // Sorted by hand from the fixture; food's duplicate collapsed to 7.21.
        assert_eq!(
            got,
            vec![
                ("food".to_string(), 7.21),
                ("fruit".to_string(), 3.0),
                ("oven".to_string(), 2.0),
                ("refrigerator".to_string(), 1.2),
            ]
        );
        assert!(g
            .neighbors(&c("kitchen"), Direction::Reverse, Some(&filter))
            .iter()
            .all(|n| n.traversal == Traversal::AgainstEdge));
    }

    #[test]
    fn equal_weight_tiebreak_relation_then_label() {
        let g = fixture();
        let got: Vec<(String, String)> = g
            .neighbors(&c("kitchen"), Direction::Both, None)
            .iter()
            .map(|n| (n.edge.relation.to_string(), n.other().to_string()))
            .collect();
        // Weight 2.0 appears on AtLocation(oven) and PartOf(house): AtLocation < PartOf.
        assert_eq!(
            got,
            vec![
                ("AtLocation".into(), "food".into()),
                ("AtLocation".into(), "fruit".into()),
                ("AtLocation".into(), "oven".into()),
                ("PartOf".into(), "house".into()),
                ("AtLocation".into(), "refrigerator".into()),
            ]
        );
    }

    #[test]
    fn unknown_concept_has_no_neighbors() {
        let g = fixture();
        assert!(g.neighbors(&c("zzz_unknown"), Direction::Both, None).is_empty());
    }

    #[test]
    fn duplicates_collapse_to_max() {
        let g = fixture();
        assert_eq!(g.edge_count(), 5);
        assert_eq!(g.metadata().stats.duplicates_collapsed, 1);
        let food = g
            .find_edge(&c("food"), &Relation::AtLocation, &c("kitchen"))
            .unwrap();
        assert_eq!(food.weight, 7.21);
    }

    #[test]
    fn mirror_property() {
        let g = fixture();
        let mut fwd_total = 0;
        for (i, node) in g.concepts().iter().enumerate() {
            let id = NodeId(i as u32);
            for &eid in g.outgoing(id) {
                fwd_total += 1;
                let e = g.edge(EdgeId(eid));
                assert_eq!(e.start, node);
                let end = g.node_id(e.end).unwrap();
                assert!(g.incoming(end).contains(&eid));
            }
        }
        assert_eq!(fwd_total as u64, g.metadata().edge_count);
        let rev_total: usize = (0..g.node_count())
            .map(|i| g.incoming(NodeId(i as u32)).len())
            .sum();
        assert_eq!(rev_total, g.edge_count());
    }
}
