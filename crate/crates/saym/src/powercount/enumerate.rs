//! Exhaustive generation of connected topologies at fixed loop order.
//!
//! The loop order, external leg budget and half-edge balance pin down every
//! admissible combination of vertex content and internal edge counts, so the
//! search space factorizes: choose gauge vertex valences, choose how many
//! ghost lines start or end on external legs, distribute external gauge legs,
//! then enumerate internal gauge multigraphs (symmetric multiplicity
//! matrices) and ghost line wirings (bijections between free out and in
//! slots).  Isomorphic duplicates are removed through the canonical key, and
//! the result is returned in canonical key order, so the output is
//! deterministic regardless of thread scheduling.
//!
//! Interchangeable vertices (same kind, valence and external data) would
//! produce large numbers of relabelled duplicates; external legs are
//! therefore distributed in non-increasing blocks within each group of
//! identical vertices, which loses no isomorphism class.

use super::canon::{canonical_key, CanonKey};
use super::{check_order, FeynmanGraph, PowError, VertexSpec};
use itertools::Itertools;
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
struct Seed {
    /// Gauge vertex valences, non-increasing.
    valences: Vec<u32>,
    /// Ghost vertex counts by external pattern: both legs external, only the
    /// outgoing leg, only the incoming leg, fully internal.
    n_both: u32,
    n_out: u32,
    n_in: u32,
    n_internal: u32,
    /// External gauge legs.
    e: u32,
    /// Internal gauge edge count implied by the loop order.
    i_internal: i64,
}

impl Seed {
    fn ghost_count(&self) -> u32 {
        self.n_both + self.n_out + self.n_in + self.n_internal
    }
}

/// Partitions of `total` into exactly `count` parts, each in 3..=max_part,
/// non-increasing.
fn valence_multisets(total: i64, count: i64, max_part: u32) -> Vec<Vec<u32>> {
    fn rec(total: i64, count: i64, max_part: i64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if count == 0 {
            if total == 0 {
                out.push(cur.clone());
            }
            return;
        }
        // Bounds: each remaining part at least 3, at most max_part.
        let lo = ((total - (count - 1) * max_part).max(3)).max(3);
        let hi = (total - 3 * (count - 1)).min(max_part);
        let mut part = hi;
        while part >= lo {
            cur.push(part as u32);
            rec(total - part, count - 1, part, cur, out);
            cur.pop();
            part -= 1;
        }
    }
    let mut out = Vec::new();
    if count == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, count, max_part as i64, &mut Vec::new(), &mut out);
    out
}

/// Distributes `e` external gauge legs over vertex groups; within a group of
/// identical vertices the per-vertex counts are non-increasing.
fn distributions(
    groups: &[(usize, usize, u32)],
    idx: usize,
    e_left: u32,
    ext: &mut Vec<u32>,
    sink: &mut dyn FnMut(&[u32]),
) {
    if idx == groups.len() {
        if e_left == 0 {
            sink(ext);
        }
        return;
    }
    let capacity_left: u32 =
        groups[idx..].iter().map(|&(_, len, cap)| len as u32 * cap).sum();
    if e_left > capacity_left {
        return;
    }
    let (start, len, cap) = groups[idx];
    fn fill(
        groups: &[(usize, usize, u32)],
        idx: usize,
        start: usize,
        len: usize,
        pos: usize,
        prev: u32,
        e_left: u32,
        ext: &mut Vec<u32>,
        sink: &mut dyn FnMut(&[u32]),
    ) {
        if pos == len {
            distributions(groups, idx + 1, e_left, ext, sink);
            return;
        }
        let hi = prev.min(e_left);
        for val in (0..=hi).rev() {
            ext[start + pos] = val;
            fill(groups, idx, start, len, pos + 1, val, e_left - val, ext, sink);
        }
        ext[start + pos] = 0;
    }
    fill(groups, idx, start, len, 0, cap, e_left, ext, sink);
}

/// Enumerates symmetric multiplicity matrices with prescribed row sums
/// (internal gauge multigraphs with tadpole loops), row by row.
fn gauge_matchings(
    r: &mut [i64],
    a: usize,
    b: usize,
    edges: &mut Vec<(usize, usize)>,
    sink: &mut dyn FnMut(&[(usize, usize)]),
) {
    let v = r.len();
    if a == v {
        sink(edges);
        return;
    }
    if b == v {
        if r[a] != 0 {
            return;
        }
        gauge_matchings(r, a + 1, a + 1, edges, sink);
        return;
    }
    // Prune: vertex a can absorb at most this much from the remaining pairs
    // of its row.
    let mut reachable: i64 = r[a + 1..].iter().sum();
    if b == a {
        reachable += 2 * (r[a] / 2);
    } else {
        reachable -= r[a + 1..b].iter().sum::<i64>();
    }
    if r[a] > reachable {
        return;
    }
    let m_max = if a == b { r[a] / 2 } else { r[a].min(r[b]) };
    for m in 0..=m_max {
        if m > 0 {
            let take = if a == b { 2 * m } else { m };
            r[a] -= take;
            if a != b {
                r[b] -= m;
            }
            for _ in 0..m {
                edges.push((a, b));
            }
        }
        gauge_matchings(r, a, b + 1, edges, sink);
        if m > 0 {
            let take = if a == b { 2 * m } else { m };
            r[a] += take;
            if a != b {
                r[b] += m;
            }
            for _ in 0..m {
                edges.pop();
            }
        }
    }
}

fn expand(seed: &Seed, n: u32, one_pi_only: bool) -> Vec<(CanonKey, FeynmanGraph)> {
    let v = seed.valences.len();
    let vt = seed.ghost_count() as usize;
    let total = v + vt;
    let mut vertices = Vec::with_capacity(total);
    for &val in &seed.valences {
        vertices.push(VertexSpec::gauge(val, n).expect("seed valence in range"));
    }
    for _ in 0..vt {
        vertices.push(VertexSpec::ghost_gauge(n).expect("ghost vertex"));
    }
    let (n_both, n_out, n_in) =
        (seed.n_both as usize, seed.n_out as usize, seed.n_in as usize);
    let mut ext_ghost_out = vec![0u32; total];
    let mut ext_ghost_in = vec![0u32; total];
    for j in 0..n_both {
        ext_ghost_out[v + j] = 1;
        ext_ghost_in[v + j] = 1;
    }
    for j in 0..n_out {
        ext_ghost_out[v + n_both + j] = 1;
    }
    for j in 0..n_in {
        ext_ghost_in[v + n_both + n_out + j] = 1;
    }
    // Free ghost slots: out slots not used externally, in slots likewise.
    let free_outs: Vec<usize> = (v + n_both + n_out..total).collect();
    let free_ins: Vec<usize> =
        (v + n_both..v + n_both + n_out).chain(v + n_both + n_out + n_in..total).collect();
    assert_eq!(free_outs.len(), free_ins.len());
    let wirings: Vec<Vec<usize>> = if free_ins.is_empty() {
        vec![Vec::new()]
    } else {
        free_ins.iter().copied().permutations(free_ins.len()).collect()
    };
    // Vertex groups for external gauge distribution: runs of equal valence,
    // then the four ghost blocks.
    let mut groups: Vec<(usize, usize, u32)> = Vec::new();
    let mut j = 0;
    while j < v {
        let mut k = j;
        while k < v && seed.valences[k] == seed.valences[j] {
            k += 1;
        }
        groups.push((j, k - j, seed.valences[j]));
        j = k;
    }
    for (start, len) in [
        (v, n_both),
        (v + n_both, n_out),
        (v + n_both + n_out, n_in),
        (v + n_both + n_out + n_in, seed.n_internal as usize),
    ] {
        if len > 0 {
            groups.push((start, len, 1));
        }
    }
    let caps: Vec<u32> = vertices.iter().map(|s| s.gauge_slots()).collect();
    let mut found = Vec::new();
    let mut ext = vec![0u32; total];
    distributions(&groups, 0, seed.e, &mut ext, &mut |ext| {
        let mut r: Vec<i64> = (0..total).map(|j| caps[j] as i64 - ext[j] as i64).collect();
        debug_assert_eq!(r.iter().sum::<i64>(), 2 * seed.i_internal);
        let mut edges = Vec::new();
        gauge_matchings(&mut r, 0, 0, &mut edges, &mut |gauge_edges| {
            for wiring in &wirings {
                let ghost_edges: Vec<(usize, usize)> =
                    free_outs.iter().copied().zip(wiring.iter().copied()).collect();
                let graph = FeynmanGraph::new(
                    vertices.clone(),
                    gauge_edges.to_vec(),
                    ghost_edges,
                    ext.to_vec(),
                    ext_ghost_out.clone(),
                    ext_ghost_in.clone(),
                )
                .expect("enumerated graph is well-formed");
                if !graph.is_connected() {
                    continue;
                }
                if one_pi_only && !graph.is_one_pi() {
                    continue;
                }
                found.push((canonical_key(&graph), graph));
            }
        });
    });
    found
}

/// Enumerates all connected topologies of the order-n truncation at the given
/// loop order with at most `max_external` external legs, one representative
/// per isomorphism class.  Vacuum topologies are excluded.  With
/// `one_pi_only` the result is restricted to graphs that stay connected after
/// removing any single internal line.
pub fn enumerate_graphs(
    n: u32,
    loops: u32,
    max_external: u32,
    one_pi_only: bool,
) -> Result<Vec<FeynmanGraph>, PowError> {
    check_order(n)?;
    if !(1..=2).contains(&loops) {
        return Err(PowError::Domain(format!(
            "loop order must be 1 or 2 at desk scale, got {loops}"
        )));
    }
    if max_external > 6 {
        return Err(PowError::Domain(format!(
            "external leg budget capped at 6, got {max_external}"
        )));
    }
    let mut seeds: Vec<Seed> = Vec::new();
    let l = loops as i64;
    for e_tilde in (0..=max_external).step_by(2) {
        let paths = (e_tilde / 2) as i64;
        for vt in (e_tilde / 2)..=(2 * loops + max_external) {
            let vt_i = vt as i64;
            for e in 0..=(max_external - e_tilde) {
                if e + e_tilde == 0 {
                    continue;
                }
                let e_i = e as i64;
                // Gauge slot balance fixes the total gauge valence once the
                // gauge vertex count v is chosen:
                //   sum_val = 2L - 2 + Etilde + 2v + E - vtilde,
                // and sum_val >= 3v bounds v.
                let v_max = 2 * l - 2 + e_tilde as i64 + e_i - vt_i;
                for v in 0..=v_max {
                    let sum_val = 2 * l - 2 + e_tilde as i64 + 2 * v + e_i - vt_i;
                    if sum_val < 0 || (v == 0 && sum_val != 0) {
                        continue;
                    }
                    if v > 0 && (sum_val < 3 * v || sum_val > n as i64 * v) {
                        continue;
                    }
                    if v == 0 && vt == 0 {
                        continue;
                    }
                    let i_internal = l - 1 + paths + v;
                    for valences in valence_multisets(sum_val, v, n) {
                        let n_both_min = (2 * paths - vt_i).max(0);
                        for n_both in n_both_min..=paths {
                            seeds.push(Seed {
                                valences: valences.clone(),
                                n_both: n_both as u32,
                                n_out: (paths - n_both) as u32,
                                n_in: (paths - n_both) as u32,
                                n_internal: (vt_i - 2 * paths + n_both) as u32,
                                e,
                                i_internal,
                            });
                        }
                    }
                }
            }
        }
    }
    let batches: Vec<Vec<(CanonKey, FeynmanGraph)>> =
        seeds.par_iter().map(|s| expand(s, n, one_pi_only)).collect();
    let mut unique: BTreeMap<CanonKey, FeynmanGraph> = BTreeMap::new();
    for batch in batches {
        for (key, graph) in batch {
            unique.entry(key).or_insert(graph);
        }
    }
    Ok(unique.into_values().collect())
}
