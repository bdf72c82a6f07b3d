//! Feynman multigraph topologies of the truncated theory and their
//! superficial degree of divergence, computed two ways: directly from
//! propagator and vertex momentum weights, and from the closed form in the
//! loop number and external leg count.  The two must agree on every graph;
//! the enumeration makes that an executable statement.
//!
//! Graphs are typed multigraphs: gauge vertices of valence 3..=n carrying up
//! to n - i derivatives, and ghost-gauge vertices with one gauge slot and an
//! oriented ghost line (in and out slot) carrying up to n - 3 derivatives.
//! External legs count unpaired half-edges; vacuum topologies (no external
//! legs) carry no Green's-function content and are excluded from the
//! enumeration.

mod canon;
mod enumerate;

pub use canon::isomorphic;
pub use enumerate::enumerate_graphs;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PowError {
    #[error("invalid vertex: {0}")]
    InvalidVertex(String),
    #[error("malformed graph: {0}")]
    MalformedGraph(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("vertex valence {valence} exceeds truncation order {n}")]
    ValenceTooLarge { valence: u32, n: u32 },
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    /// Pure gauge self-interaction of the stated valence.
    Gauge,
    /// Antighost-gauge-ghost vertex: one gauge slot plus an oriented ghost
    /// line through the vertex.
    GhostGauge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct VertexSpec {
    pub kind: VertexKind,
    pub valence: u32,
    /// Largest number of derivatives the interaction can carry; this is the
    /// weight used in the direct divergence count.
    pub max_derivatives: u32,
}

impl VertexSpec {
    pub fn gauge(valence: u32, n: u32) -> Result<Self, PowError> {
        if valence < 3 || valence > n {
            return Err(PowError::InvalidVertex(format!(
                "gauge vertex valence must lie in 3..={n}, got {valence}"
            )));
        }
        Ok(VertexSpec {
            kind: VertexKind::Gauge,
            valence,
            max_derivatives: n - valence,
        })
    }

    pub fn ghost_gauge(n: u32) -> Result<Self, PowError> {
        if n < 3 {
            return Err(PowError::InvalidVertex(format!(
                "truncation order {n} cannot host a ghost-gauge vertex"
            )));
        }
        Ok(VertexSpec {
            kind: VertexKind::GhostGauge,
            valence: 3,
            max_derivatives: n - 3,
        })
    }

    /// Number of gauge half-edge slots at this vertex.
    pub fn gauge_slots(&self) -> u32 {
        match self.kind {
            VertexKind::Gauge => self.valence,
            VertexKind::GhostGauge => 1,
        }
    }
}

/// A connected typed multigraph of the truncated theory.
///
/// Gauge edges are unordered vertex pairs (stored with u <= v; u == v is a
/// tadpole loop); ghost edges are ordered antighost-to-ghost pairs.  External
/// legs are recorded per vertex.  The constructor checks that every slot is
/// used exactly once and asserts the global half-edge balance identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeynmanGraph {
    pub vertices: Vec<VertexSpec>,
    pub gauge_edges: Vec<(usize, usize)>,
    pub ghost_edges: Vec<(usize, usize)>,
    pub external_gauge: Vec<u32>,
    pub external_ghost_out: Vec<u32>,
    pub external_ghost_in: Vec<u32>,
}

impl FeynmanGraph {
    pub fn new(
        vertices: Vec<VertexSpec>,
        mut gauge_edges: Vec<(usize, usize)>,
        ghost_edges: Vec<(usize, usize)>,
        external_gauge: Vec<u32>,
        external_ghost_out: Vec<u32>,
        external_ghost_in: Vec<u32>,
    ) -> Result<Self, PowError> {
        let v = vertices.len();
        if v == 0 {
            return Err(PowError::MalformedGraph("graph needs at least one vertex".into()));
        }
        if external_gauge.len() != v || external_ghost_out.len() != v || external_ghost_in.len() != v
        {
            return Err(PowError::MalformedGraph(
                "external leg vectors must have one entry per vertex".into(),
            ));
        }
        for e in gauge_edges.iter_mut() {
            if e.0 >= v || e.1 >= v {
                return Err(PowError::MalformedGraph(format!("gauge edge {e:?} out of range")));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        for e in &ghost_edges {
            if e.0 >= v || e.1 >= v {
                return Err(PowError::MalformedGraph(format!("ghost edge {e:?} out of range")));
            }
        }
        gauge_edges.sort_unstable();
        let mut gauge_degree = vec![0u32; v];
        for &(a, b) in &gauge_edges {
            gauge_degree[a] += 1;
            gauge_degree[b] += 1;
        }
        let mut ghost_out = vec![0u32; v];
        let mut ghost_in = vec![0u32; v];
        for &(a, b) in &ghost_edges {
            ghost_out[a] += 1;
            ghost_in[b] += 1;
        }
        for (j, spec) in vertices.iter().enumerate() {
            let want = spec.gauge_slots();
            let have = gauge_degree[j] + external_gauge[j];
            if have != want {
                return Err(PowError::MalformedGraph(format!(
                    "vertex {j} fills {have} of {want} gauge slots"
                )));
            }
            match spec.kind {
                VertexKind::Gauge => {
                    if ghost_out[j] + ghost_in[j] + external_ghost_out[j] + external_ghost_in[j] > 0
                    {
                        return Err(PowError::MalformedGraph(format!(
                            "gauge vertex {j} touches ghost lines"
                        )));
                    }
                }
                VertexKind::GhostGauge => {
                    if ghost_out[j] + external_ghost_out[j] != 1
                        || ghost_in[j] + external_ghost_in[j] != 1
                    {
                        return Err(PowError::MalformedGraph(format!(
                            "ghost vertex {j} must use its ghost line exactly once each way"
                        )));
                    }
                }
            }
        }
        let graph = FeynmanGraph {
            vertices,
            gauge_edges,
            ghost_edges,
            external_gauge,
            external_ghost_out,
            external_ghost_in,
        };
        // Half-edge balance, counted two ways; holds by construction and is
        // asserted rather than assumed.
        let gauge_slot_total: i64 = graph.vertices.iter().map(|s| s.gauge_slots() as i64).sum();
        assert_eq!(2 * graph.internal_gauge() + graph.external_gauge_total(), gauge_slot_total);
        let ghost_vertices = 2 * graph.ghost_vertex_count();
        assert_eq!(2 * graph.internal_ghost() + graph.external_ghost_total(), ghost_vertices);
        Ok(graph)
    }

    /// Number of internal gauge edges I.
    pub fn internal_gauge(&self) -> i64 {
        self.gauge_edges.len() as i64
    }

    /// Number of internal ghost edges.
    pub fn internal_ghost(&self) -> i64 {
        self.ghost_edges.len() as i64
    }

    /// Number of external gauge half-edges E.
    pub fn external_gauge_total(&self) -> i64 {
        self.external_gauge.iter().map(|&x| x as i64).sum()
    }

    /// Number of external ghost half-edges.
    pub fn external_ghost_total(&self) -> i64 {
        self.external_ghost_out.iter().map(|&x| x as i64).sum::<i64>()
            + self.external_ghost_in.iter().map(|&x| x as i64).sum::<i64>()
    }

    pub fn vertex_count(&self) -> i64 {
        self.vertices.len() as i64
    }

    pub fn ghost_vertex_count(&self) -> i64 {
        self.vertices.iter().filter(|s| s.kind == VertexKind::GhostGauge).count() as i64
    }

    pub fn gauge_valences(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .vertices
            .iter()
            .filter(|s| s.kind == VertexKind::Gauge)
            .map(|s| s.valence)
            .collect();
        out.sort_unstable();
        out
    }

    fn internal_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.gauge_edges
            .iter()
            .copied()
            .chain(self.ghost_edges.iter().map(|&(a, b)| (a.min(b), a.max(b))))
    }

    pub fn is_connected(&self) -> bool {
        let mut dsu = Dsu::new(self.vertices.len());
        for (a, b) in self.internal_pairs() {
            dsu.union(a, b);
        }
        dsu.component_count() == 1
    }

    /// One-particle irreducibility: the graph stays connected after deleting
    /// any single internal edge.
    pub fn is_one_pi(&self) -> bool {
        if !self.is_connected() {
            return false;
        }
        let pairs: Vec<(usize, usize)> = self.internal_pairs().collect();
        let mut multiplicity = std::collections::BTreeMap::new();
        for &p in &pairs {
            *multiplicity.entry(p).or_insert(0u32) += 1;
        }
        for (&(a, b), &count) in &multiplicity {
            if a == b || count >= 2 {
                // A tadpole loop never disconnects; a doubled connection
                // survives the removal of one copy.
                continue;
            }
            let mut dsu = Dsu::new(self.vertices.len());
            for &p in pairs.iter().filter(|&&p| p != (a, b)) {
                dsu.union(p.0, p.1);
            }
            if dsu.component_count() != 1 {
                return false;
            }
        }
        true
    }
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    pub(crate) fn component_count(&mut self) -> usize {
        let n = self.parent.len();
        let mut roots = std::collections::BTreeSet::new();
        for x in 0..n {
            let r = self.find(x);
            roots.insert(r);
        }
        roots.len()
    }
}

/// First Betti number L = I + Itilde - V + 1 of a connected multigraph.
pub fn loop_number(g: &FeynmanGraph) -> Result<i64, PowError> {
    if !g.is_connected() {
        return Err(PowError::Disconnected);
    }
    Ok(g.internal_gauge() + g.internal_ghost() - g.vertex_count() + 1)
}

fn check_order(n: u32) -> Result<(), PowError> {
    if n < 6 || n % 2 != 0 {
        return Err(PowError::Domain(format!(
            "truncation order must be even and at least 6, got {n}"
        )));
    }
    Ok(())
}

/// Superficial degree of divergence from propagator and vertex momentum
/// weights:
///
/// ```text
/// omega = 4L - I(n-2) - Itilde(n-2) + sum_i v_i (n-i) + vtilde (n-3)
/// ```
///
/// Every vertex is charged its maximum derivative weight, the conservative
/// worst case.
pub fn omega_direct(g: &FeynmanGraph, n: u32) -> Result<i64, PowError> {
    check_order(n)?;
    for spec in &g.vertices {
        if spec.valence > n {
            return Err(PowError::ValenceTooLarge { valence: spec.valence, n });
        }
    }
    let l = loop_number(g)?;
    let propagator_weight = (g.internal_gauge() + g.internal_ghost()) * (n as i64 - 2);
    let vertex_weight: i64 = g
        .vertices
        .iter()
        .map(|s| match s.kind {
            VertexKind::Gauge => n as i64 - s.valence as i64,
            VertexKind::GhostGauge => n as i64 - 3,
        })
        .sum();
    Ok(4 * l - propagator_weight + vertex_weight)
}

/// Closed form omega = (4 - n)(L - 1) + 4 - (E + Etilde).
pub fn omega_closed(l: i64, e: i64, e_tilde: i64, n: u32) -> i64 {
    (4 - n as i64) * (l - 1) + 4 - (e + e_tilde)
}

/// Per-graph entry of a divergence report.
#[derive(Debug, Clone, Serialize)]
pub struct GraphEntry {
    pub id: usize,
    pub gauge_valences: Vec<u32>,
    pub ghost_vertices: i64,
    pub l: i64,
    pub i: i64,
    pub i_tilde: i64,
    pub e: i64,
    pub e_tilde: i64,
    pub omega_direct: i64,
    pub omega_closed: i64,
}

/// A divergent class of graphs sharing loop order and external leg counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DivergentClass {
    pub l: i64,
    pub e: i64,
    pub e_tilde: i64,
    pub omega: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub n: u32,
    pub lmax: u32,
    pub per_graph: Vec<GraphEntry>,
    pub divergent_classes: Vec<DivergentClass>,
    /// True when every graph beyond one loop converges and the one-loop
    /// divergent classes all have at most four external legs.
    pub verdict: bool,
    /// Loop-number convention used throughout the report.
    pub euler_formula: String,
}

/// Enumerates all 1PI topologies with at most `MAX_EXTERNAL_DEFAULT`
/// external legs up to `lmax` loops and computes both divergence counts for
/// each.
pub fn classify(n: u32, lmax: u32) -> Result<DivergenceReport, PowError> {
    classify_with(n, lmax, 6, true)
}

/// As [`classify`], with explicit external-leg cap and 1PI/connected mode.
pub fn classify_with(
    n: u32,
    lmax: u32,
    max_external: u32,
    one_pi_only: bool,
) -> Result<DivergenceReport, PowError> {
    check_order(n)?;
    if !(1..=2).contains(&lmax) {
        return Err(PowError::Domain(format!("loop cap must be 1 or 2, got {lmax}")));
    }
    let mut per_graph = Vec::new();
    let mut divergent = std::collections::BTreeSet::new();
    let mut verdict = true;
    let mut id = 0;
    for l in 1..=lmax {
        let graphs = enumerate_graphs(n, l, max_external, one_pi_only)?;
        for g in graphs {
            let loops = loop_number(&g)?;
            let e = g.external_gauge_total();
            let e_tilde = g.external_ghost_total();
            let direct = omega_direct(&g, n)?;
            let closed = omega_closed(loops, e, e_tilde, n);
            if direct >= 0 {
                divergent.insert(DivergentClass { l: loops, e, e_tilde, omega: direct });
                if loops >= 2 || e + e_tilde > 4 {
                    verdict = false;
                }
            }
            per_graph.push(GraphEntry {
                id,
                gauge_valences: g.gauge_valences(),
                ghost_vertices: g.ghost_vertex_count(),
                l: loops,
                i: g.internal_gauge(),
                i_tilde: g.internal_ghost(),
                e,
                e_tilde,
                omega_direct: direct,
                omega_closed: closed,
            });
            id += 1;
        }
    }
    Ok(DivergenceReport {
        n,
        lmax,
        per_graph,
        divergent_classes: divergent.into_iter().collect(),
        verdict,
        euler_formula: "L = I + Itilde - V + 1 (first Betti number of a connected multigraph)"
            .into(),
    })
}
