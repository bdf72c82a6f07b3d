//! Canonical form for typed multigraphs, used to deduplicate isomorphic
//! topologies.  Vertices are first partitioned by local attributes, the
//! partition is refined by neighbour colors until stable, and the remaining
//! symmetry is broken by brute force within color classes, keeping the
//! lexicographically least edge encoding.

use super::{FeynmanGraph, VertexKind};

/// Orbit-invariant vertex attributes: kind, valence, and external leg counts.
type Attr = (u8, u32, u32, u32, u32);

/// Canonical key: vertex attributes in canonical order, then gauge and ghost
/// edge lists relabelled to the canonical order and sorted.
pub(crate) type CanonKey = (Vec<Attr>, Vec<(usize, usize)>, Vec<(usize, usize)>);

fn attrs(g: &FeynmanGraph) -> Vec<Attr> {
    g.vertices
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let kind = match s.kind {
                VertexKind::Gauge => 0u8,
                VertexKind::GhostGauge => 1u8,
            };
            (kind, s.valence, g.external_gauge[j], g.external_ghost_out[j], g.external_ghost_in[j])
        })
        .collect()
}

/// Weisfeiler-Leman style color refinement seeded by vertex attributes.
/// Returns a stable coloring; equal colors imply equal attributes.
fn refine(g: &FeynmanGraph, attr: &[Attr]) -> Vec<usize> {
    let v = g.vertices.len();
    let mut sorted: Vec<&Attr> = attr.iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut color: Vec<usize> =
        attr.iter().map(|a| sorted.binary_search(&a).expect("attr present")).collect();
    loop {
        // Incidence signature per vertex: edge type code paired with the
        // neighbour color.  Tadpole loops get their own code so they are not
        // confused with doubled edges to a like-colored neighbour.
        let mut sig: Vec<(usize, Vec<(u8, usize)>)> = (0..v).map(|j| (color[j], Vec::new())).collect();
        for &(a, b) in &g.gauge_edges {
            if a == b {
                sig[a].1.push((3, color[a]));
            } else {
                sig[a].1.push((0, color[b]));
                sig[b].1.push((0, color[a]));
            }
        }
        for &(a, b) in &g.ghost_edges {
            sig[a].1.push((1, color[b]));
            sig[b].1.push((2, color[a]));
        }
        for s in sig.iter_mut() {
            s.1.sort_unstable();
        }
        let mut distinct: Vec<&(usize, Vec<(u8, usize)>)> = sig.iter().collect();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> =
            sig.iter().map(|s| distinct.binary_search(&s).expect("sig present")).collect();
        if next == color {
            return color;
        }
        color = next;
    }
}

fn encode(g: &FeynmanGraph, perm: &[usize]) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut gauge: Vec<(usize, usize)> = g
        .gauge_edges
        .iter()
        .map(|&(a, b)| {
            let (pa, pb) = (perm[a], perm[b]);
            (pa.min(pb), pa.max(pb))
        })
        .collect();
    gauge.sort_unstable();
    let mut ghost: Vec<(usize, usize)> =
        g.ghost_edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
    ghost.sort_unstable();
    (gauge, ghost)
}

/// Enumerate permutations that respect the color classes (vertices may only
/// map to positions reserved for their class) and keep the least encoding.
fn minimize(
    g: &FeynmanGraph,
    classes: &[Vec<usize>],
    class_offsets: &[usize],
    class_idx: usize,
    perm: &mut Vec<usize>,
    best: &mut Option<(Vec<(usize, usize)>, Vec<(usize, usize)>)>,
) {
    if class_idx == classes.len() {
        let enc = encode(g, perm);
        match best {
            None => *best = Some(enc),
            Some(b) => {
                if enc < *b {
                    *best = Some(enc);
                }
            }
        }
        return;
    }
    let members = &classes[class_idx];
    let offset = class_offsets[class_idx];
    // Assign canonical positions offset..offset+len to the members in every
    // order.
    fn assign(
        g: &FeynmanGraph,
        classes: &[Vec<usize>],
        class_offsets: &[usize],
        class_idx: usize,
        members: &[usize],
        offset: usize,
        slot: usize,
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut Option<(Vec<(usize, usize)>, Vec<(usize, usize)>)>,
    ) {
        if slot == members.len() {
            minimize(g, classes, class_offsets, class_idx + 1, perm, best);
            return;
        }
        for (k, &m) in members.iter().enumerate() {
            if used[k] {
                continue;
            }
            used[k] = true;
            perm[m] = offset + slot;
            assign(g, classes, class_offsets, class_idx, members, offset, slot + 1, perm, used, best);
            used[k] = false;
        }
    }
    let mut used = vec![false; members.len()];
    assign(g, classes, class_offsets, class_idx, members, offset, 0, perm, &mut used, best);
}

pub(crate) fn canonical_key(g: &FeynmanGraph) -> CanonKey {
    let attr = attrs(g);
    let color = refine(g, &attr);
    let v = g.vertices.len();
    // Group vertices by refined color; class order follows the color rank,
    // which itself is ordered by the (attribute, signature) data, so the
    // canonical attribute vector is permutation independent.
    let ncolors = color.iter().max().map(|&c| c + 1).unwrap_or(0);
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); ncolors];
    for j in 0..v {
        classes[color[j]].push(j);
    }
    classes.retain(|c| !c.is_empty());
    let mut class_offsets = Vec::with_capacity(classes.len());
    let mut off = 0;
    for c in &classes {
        class_offsets.push(off);
        off += c.len();
    }
    let canon_attrs: Vec<Attr> = {
        let mut out = vec![attr[0]; v];
        for (ci, c) in classes.iter().enumerate() {
            for (k, &m) in c.iter().enumerate() {
                out[class_offsets[ci] + k] = attr[m];
            }
        }
        out
    };
    let mut perm = vec![0usize; v];
    let mut best = None;
    minimize(g, &classes, &class_offsets, 0, &mut perm, &mut best);
    let (gauge, ghost) = best.expect("at least one labelling");
    (canon_attrs, gauge, ghost)
}

/// True when the two graphs are isomorphic as typed multigraphs with
/// external legs.
pub fn isomorphic(a: &FeynmanGraph, b: &FeynmanGraph) -> bool {
    canonical_key(a) == canonical_key(b)
}
