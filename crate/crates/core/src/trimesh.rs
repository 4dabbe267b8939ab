//! Closed oriented 3-manifold triangulations and Pachner moves.
//!
//! Edges carry explicit ids. A 2-3 move on the 5-cell joins two vertices
//! that are already joined elsewhere, so after one move an edge is no longer
//! determined by its endpoints. Faces are identified by their three edge
//! ids, tetrahedra by their four vertices plus six edge ids.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Local vertex pairs of a tetrahedron, in the order edges are stored.
pub const LOCAL_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Index into [`LOCAL_PAIRS`] of the local pair {i, j}.
pub fn local_pair_index(i: usize, j: usize) -> usize {
    let (a, b) = (i.min(j), i.max(j));
    LOCAL_PAIRS
        .iter()
        .position(|&p| p == (a, b))
        .expect("distinct local vertices")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tetrahedron {
    pub vertices: [usize; 4],
    /// Orientation sign: +1 if the listed vertex order is positively oriented.
    pub sign: i8,
    /// Edge ids for the local pairs in [`LOCAL_PAIRS`] order.
    pub edges: [usize; 6],
}

impl Tetrahedron {
    pub fn edge(&self, i: usize, j: usize) -> usize {
        self.edges[local_pair_index(i, j)]
    }

    pub fn local_of(&self, v: usize) -> Option<usize> {
        self.vertices.iter().position(|&x| x == v)
    }

    /// Face opposite local vertex `k`, as its sorted edge ids.
    pub fn face_key(&self, k: usize) -> FaceKey {
        let o = others(k);
        let mut e = [
            self.edge(o[0], o[1]),
            self.edge(o[0], o[2]),
            self.edge(o[1], o[2]),
        ];
        e.sort_unstable();
        FaceKey(e)
    }

    /// Orientation induced on the face opposite local vertex `k`, expressed
    /// relative to the ascending order of the face's global vertex ids.
    pub fn induced_orientation(&self, k: usize) -> i8 {
        let o = others(k);
        let verts = o.map(|i| self.vertices[i]);
        let mut s = self.sign * if k.is_multiple_of(2) { 1 } else { -1 };
        s *= permutation_parity(&verts);
        s
    }
}

fn others(k: usize) -> [usize; 3] {
    let mut o = [0; 3];
    let mut n = 0;
    for i in 0..4 {
        if i != k {
            o[n] = i;
            n += 1;
        }
    }
    o
}

/// +1 or −1 according to the parity of the permutation sorting `xs`.
fn permutation_parity(xs: &[usize]) -> i8 {
    let mut inv = 0;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if xs[i] > xs[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A triangle, identified by its sorted edge ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceKey(pub [usize; 3]);

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A face not shared by exactly two tetrahedra.
    FaceMultiplicity {
        vertices: [usize; 3],
        count: usize,
    },
    /// The tetrahedra around an edge do not form a single cycle.
    EdgeStar {
        edge: usize,
        ends: [usize; 2],
        cycles: usize,
    },
    EulerCharacteristic {
        chi: i64,
    },
    /// A face induced with the same orientation by both its tetrahedra.
    Orientation {
        vertices: [usize; 3],
    },
    UnusedVertex {
        vertex: usize,
    },
    UnusedEdge {
        edge: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Triangulation {
    name: String,
    labels: Vec<String>,
    edges: Vec<[usize; 2]>,
    tets: Vec<Tetrahedron>,
}

/// Counts (v, e, f, t).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub tetrahedra: usize,
}

impl Counts {
    pub fn tuple(&self) -> (usize, usize, usize, usize) {
        (self.vertices, self.edges, self.faces, self.tetrahedra)
    }
}

impl Triangulation {
    /// Builds a triangulation whose edges are determined by vertex pairs.
    pub fn from_simplicial(
        name: &str,
        labels: Vec<String>,
        tets: &[([usize; 4], i8)],
    ) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (vs, _) in tets {
            for &(i, j) in &LOCAL_PAIRS {
                let (a, b) = (vs[i].min(vs[j]), vs[i].max(vs[j]));
                pairs.insert((a, b), 0usize);
            }
        }
        let mut edges = Vec::with_capacity(pairs.len());
        for (k, (p, id)) in pairs.iter_mut().enumerate() {
            *id = k;
            edges.push([p.0, p.1]);
        }
        let tets = tets
            .iter()
            .map(|&(vs, sign)| Tetrahedron {
                vertices: vs,
                sign,
                edges: LOCAL_PAIRS.map(|(i, j)| pairs[&(vs[i].min(vs[j]), vs[i].max(vs[j]))]),
            })
            .collect();
        Self::new(name, labels, edges, tets)
    }

    /// Builds a triangulation from explicit edges; checks structural
    /// well-formedness (indices, distinct vertices, edge endpoints, signs).
    pub fn new(
        name: &str,
        labels: Vec<String>,
        edges: Vec<[usize; 2]>,
        tets: Vec<Tetrahedron>,
    ) -> Result<Self> {
        let nv = labels.len();
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate vertex label {l:?}")));
            }
        }
        for (id, e) in edges.iter().enumerate() {
            if e[0] >= nv || e[1] >= nv || e[0] == e[1] {
                return Err(Error::InvalidInput(format!(
                    "edge {id} has invalid endpoints {e:?}"
                )));
            }
        }
        for (ti, t) in tets.iter().enumerate() {
            if t.sign != 1 && t.sign != -1 {
                return Err(Error::InvalidInput(format!(
                    "tetrahedron {ti}: sign must be ±1"
                )));
            }
            for (k, &v) in t.vertices.iter().enumerate() {
                if v >= nv {
                    return Err(Error::InvalidInput(format!(
                        "tetrahedron {ti}: vertex {v} out of range"
                    )));
                }
                if t.vertices[..k].contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "tetrahedron {ti}: repeated vertex {v}"
                    )));
                }
            }
            for (p, &(i, j)) in LOCAL_PAIRS.iter().enumerate() {
                let id = t.edges[p];
                let Some(e) = edges.get(id) else {
                    return Err(Error::InvalidInput(format!(
                        "tetrahedron {ti}: edge id {id} out of range"
                    )));
                };
                let (a, b) = (t.vertices[i], t.vertices[j]);
                if *e != [a.min(b), a.max(b)] {
                    return Err(Error::InvalidInput(format!(
                        "tetrahedron {ti}: edge {id} joins {e:?}, not ({a},{b})"
                    )));
                }
            }
            let mut es = t.edges;
            es.sort_unstable();
            if es.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!(
                    "tetrahedron {ti}: repeated edge id"
                )));
            }
        }
        Ok(Triangulation {
            name: name.to_string(),
            labels,
            edges: edges
                .into_iter()
                .map(|[a, b]| [a.min(b), a.max(b)])
                .collect(),
            tets,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn tetrahedra(&self) -> &[Tetrahedron] {
        &self.tets
    }

    /// Edge endpoints, indexed by edge id.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_tetrahedra(&self) -> usize {
        self.tets.len()
    }

    /// Each face with its incidences (tetrahedron index, local opposite vertex).
    pub fn faces(&self) -> BTreeMap<FaceKey, Vec<(usize, usize)>> {
        let mut m: BTreeMap<FaceKey, Vec<(usize, usize)>> = BTreeMap::new();
        for (ti, t) in self.tets.iter().enumerate() {
            for k in 0..4 {
                m.entry(t.face_key(k)).or_default().push((ti, k));
            }
        }
        m
    }

    pub fn counts(&self) -> Counts {
        Counts {
            vertices: self.num_vertices(),
            edges: self.num_edges(),
            faces: self.faces().len(),
            tetrahedra: self.num_tetrahedra(),
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        let c = self.counts();
        c.vertices as i64 - c.edges as i64 + c.faces as i64 - c.tetrahedra as i64
    }

    /// True when no two edges share both endpoints.
    pub fn is_simplicial(&self) -> bool {
        let mut seen = HashSet::new();
        self.edges.iter().all(|e| seen.insert(*e))
    }

    /// Ids of all edges joining `u` and `v`.
    pub fn edges_between(&self, u: usize, v: usize) -> Vec<usize> {
        let key = [u.min(v), u.max(v)];
        (0..self.edges.len())
            .filter(|&i| self.edges[i] == key)
            .collect()
    }

    /// The unique edge joining `u` and `v`.
    pub fn edge_between(&self, u: usize, v: usize) -> Result<usize> {
        match self.edges_between(u, v).as_slice() {
            [e] => Ok(*e),
            [] => Err(Error::InvalidInput(format!(
                "no edge joins vertices {u} and {v}"
            ))),
            es => Err(Error::InvalidInput(format!(
                "vertices {u} and {v} are joined by {} edges; name the edge by id",
                es.len()
            ))),
        }
    }

    /// Global vertices of a face, ascending.
    pub fn face_vertices(&self, f: &FaceKey) -> [usize; 3] {
        let mut vs: Vec<usize> = f.0.iter().flat_map(|&e| self.edges[e]).collect();
        vs.sort_unstable();
        vs.dedup();
        [vs[0], vs[1], vs[2]]
    }

    /// Faces whose vertex set is {u, v, w}.
    pub fn faces_with_vertices(&self, u: usize, v: usize, w: usize) -> Vec<FaceKey> {
        let mut want = [u, v, w];
        want.sort_unstable();
        self.faces()
            .keys()
            .filter(|f| self.face_vertices(f) == want)
            .copied()
            .collect()
    }

    /// Tetrahedra whose vertex set equals `vs`.
    pub fn tets_with_vertices(&self, vs: [usize; 4]) -> Vec<usize> {
        let mut want = vs;
        want.sort_unstable();
        (0..self.tets.len())
            .filter(|&i| {
                let mut v = self.tets[i].vertices;
                v.sort_unstable();
                v == want
            })
            .collect()
    }

    /// Lists every violated manifold invariant; empty iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let faces = self.faces();
        for (f, inc) in &faces {
            if inc.len() != 2 {
                out.push(Violation::FaceMultiplicity {
                    vertices: self.face_vertices(f),
                    count: inc.len(),
                });
            } else {
                let (t0, k0) = inc[0];
                let (t1, k1) = inc[1];
                if self.tets[t0].induced_orientation(k0) == self.tets[t1].induced_orientation(k1) {
                    out.push(Violation::Orientation {
                        vertices: self.face_vertices(f),
                    });
                }
            }
        }
        let closed = out
            .iter()
            .all(|v| !matches!(v, Violation::FaceMultiplicity { .. }));
        let mut used_v = vec![false; self.labels.len()];
        let mut used_e = vec![false; self.edges.len()];
        for t in &self.tets {
            t.vertices.iter().for_each(|&v| used_v[v] = true);
            t.edges.iter().for_each(|&e| used_e[e] = true);
        }
        for (v, u) in used_v.iter().enumerate() {
            if !u {
                out.push(Violation::UnusedVertex { vertex: v });
            }
        }
        for (e, u) in used_e.iter().enumerate() {
            if !u {
                out.push(Violation::UnusedEdge { edge: e });
            }
        }
        if closed {
            for e in 0..self.edges.len() {
                if !used_e[e] {
                    continue;
                }
                let cycles = self.star_cycles(e, &faces).len();
                if cycles != 1 {
                    out.push(Violation::EdgeStar {
                        edge: e,
                        ends: self.edges[e],
                        cycles,
                    });
                }
            }
        }
        let chi = self.euler_characteristic();
        if chi != 0 {
            out.push(Violation::EulerCharacteristic { chi });
        }
        out
    }

    /// Cycles of tetrahedra around edge `e`; consecutive entries share a face
    /// containing `e`. Assumes every face has two incidences.
    fn star_cycles(
        &self,
        e: usize,
        faces: &BTreeMap<FaceKey, Vec<(usize, usize)>>,
    ) -> Vec<Vec<usize>> {
        let around: Vec<usize> = (0..self.tets.len())
            .filter(|&i| self.tets[i].edges.contains(&e))
            .collect();
        // For each tetrahedron around e, the two faces containing e.
        let faces_of = |ti: usize| -> [FaceKey; 2] {
            let t = &self.tets[ti];
            let p = t.edges.iter().position(|&x| x == e).unwrap();
            let (i, j) = LOCAL_PAIRS[p];
            let rest: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
            [t.face_key(rest[0]), t.face_key(rest[1])]
        };
        let neighbour = |ti: usize, f: &FaceKey| -> usize {
            let inc = &faces[f];
            if inc[0].0 == ti {
                inc[1].0
            } else {
                inc[0].0
            }
        };
        let mut visited = HashSet::new();
        let mut cycles = Vec::new();
        for &start in &around {
            if visited.contains(&start) {
                continue;
            }
            let mut cyc = vec![start];
            visited.insert(start);
            let mut prev_face = faces_of(start)[0];
            let mut cur = start;
            loop {
                let fs = faces_of(cur);
                let next_face = if fs[0] == prev_face { fs[1] } else { fs[0] };
                let nxt = neighbour(cur, &next_face);
                if nxt == start || !visited.insert(nxt) {
                    break;
                }
                cyc.push(nxt);
                prev_face = next_face;
                cur = nxt;
            }
            cycles.push(cyc);
        }
        cycles
    }

    /// The tetrahedra around edge `e` in cyclic order, with their signs.
    pub fn edge_star(&self, e: usize) -> Result<Vec<(usize, i8)>> {
        if e >= self.edges.len() {
            return Err(Error::InvalidInput(format!("edge {e} out of range")));
        }
        let faces = self.faces();
        if faces.values().any(|inc| inc.len() != 2) {
            return Err(Error::Manifold("triangulation is not closed".into()));
        }
        let cycles = self.star_cycles(e, &faces);
        if cycles.len() != 1 {
            return Err(Error::Manifold(format!(
                "star of edge {e} {:?} has {} cycles",
                self.edges[e],
                cycles.len()
            )));
        }
        Ok(cycles[0].iter().map(|&t| (t, self.tets[t].sign)).collect())
    }

    /// Vertex degree in tetrahedra and in edges.
    fn vertex_incidence(&self, v: usize) -> (Vec<usize>, Vec<usize>) {
        let tets = (0..self.tets.len())
            .filter(|&i| self.tets[i].vertices.contains(&v))
            .collect();
        let edges = (0..self.edges.len())
            .filter(|&i| self.edges[i].contains(&v))
            .collect();
        (tets, edges)
    }

    /// Drops vertices and edges not referenced by any tetrahedron and renumbers.
    fn compacted(self) -> (Self, Vec<Option<usize>>, Vec<Option<usize>>) {
        let mut vmap = vec![None; self.labels.len()];
        let mut emap = vec![None; self.edges.len()];
        for t in &self.tets {
            t.vertices.iter().for_each(|&v| vmap[v] = Some(0));
            t.edges.iter().for_each(|&e| emap[e] = Some(0));
        }
        let mut labels = Vec::new();
        for (v, m) in vmap.iter_mut().enumerate() {
            if m.is_some() {
                *m = Some(labels.len());
                labels.push(self.labels[v].clone());
            }
        }
        let mut edges = Vec::new();
        for (e, m) in emap.iter_mut().enumerate() {
            if m.is_some() {
                *m = Some(edges.len());
                let [a, b] = self.edges[e];
                edges.push([vmap[a].unwrap(), vmap[b].unwrap()]);
            }
        }
        let tets = self
            .tets
            .iter()
            .map(|t| Tetrahedron {
                vertices: t.vertices.map(|v| vmap[v].unwrap()),
                sign: t.sign,
                edges: t.edges.map(|e| emap[e].unwrap()),
            })
            .collect();
        let t = Triangulation {
            name: self.name,
            labels,
            edges: edges
                .into_iter()
                .map(|[a, b]| [a.min(b), a.max(b)])
                .collect(),
            tets,
        };
        (t, vmap, emap)
    }

    fn checked(self, what: &str) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::RejectedMove(format!(
                "{what}: result is not a valid triangulation: {v:?}"
            )))
        }
    }

    /// Sign making `t`'s face opposite local `k` induced like `reference`.
    fn orient(mut t: Tetrahedron, k: usize, reference: i8) -> Tetrahedron {
        t.sign = 1;
        if t.induced_orientation(k) != reference {
            t.sign = -1;
        }
        t
    }

    /// 2-3 move on the face `face`.
    pub fn pachner_23(&self, face: FaceKey) -> Result<(Triangulation, MoveRecord)> {
        let faces = self.faces();
        let what = || format!("2-3 on face {:?}", self.face_vertices(&face));
        let inc = faces
            .get(&face)
            .ok_or_else(|| Error::RejectedMove(format!("2-3: no face with edges {:?}", face.0)))?;
        if inc.len() != 2 || inc[0].0 == inc[1].0 {
            return Err(Error::RejectedMove(format!(
                "{}: face must be shared by exactly two distinct tetrahedra (found {})",
                what(),
                inc.len()
            )));
        }
        let (ta, ka) = inc[0];
        let (tb, kb) = inc[1];
        let (ta_t, tb_t) = (&self.tets[ta], &self.tets[tb]);
        let a = ta_t.vertices[ka];
        let b = tb_t.vertices[kb];
        if a == b {
            return Err(Error::RejectedMove(format!(
                "{}: both apexes are vertex {a}",
                what()
            )));
        }
        let fv = self.face_vertices(&face);
        let new_edge = self.edges.len();
        let mut edges = self.edges.clone();
        edges.push([a.min(b), a.max(b)]);

        let la = |v: usize| ta_t.local_of(v).unwrap();
        let lb = |v: usize| tb_t.local_of(v).unwrap();
        let mut created = Vec::new();
        for omit in 0..3 {
            let [u, v] = match omit {
                0 => [fv[1], fv[2]],
                1 => [fv[0], fv[2]],
                _ => [fv[0], fv[1]],
            };
            // Local order (a, u, v, b).
            let es = [
                ta_t.edge(la(a), la(u)),
                ta_t.edge(la(a), la(v)),
                new_edge,
                ta_t.edge(la(u), la(v)),
                tb_t.edge(lb(u), lb(b)),
                tb_t.edge(lb(v), lb(b)),
            ];
            let tet = Tetrahedron {
                vertices: [a, u, v, b],
                sign: 1,
                edges: es,
            };
            // Face (a, u, v) is inherited from the first old tetrahedron,
            // where it lies opposite the omitted face vertex.
            let reference = ta_t.induced_orientation(la(fv[omit]));
            created.push(Self::orient(tet, 3, reference));
        }
        let mut tets: Vec<Tetrahedron> = self
            .tets
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != ta && i != tb)
            .map(|(_, t)| t.clone())
            .collect();
        let first_new = tets.len();
        tets.extend(created.iter().cloned());
        let out = Triangulation {
            name: self.name.clone(),
            labels: self.labels.clone(),
            edges,
            tets,
        }
        .checked(&what())?;
        let rec = MoveRecord {
            kind: MoveKind::TwoThree,
            target: format!("face {:?}", fv),
            removed_tetrahedra: vec![ta_t.vertices, tb_t.vertices],
            created_tetrahedra: created.iter().map(|t| t.vertices).collect(),
            created_edges: vec![[a.min(b), a.max(b)]],
            removed_edges: vec![],
            created_vertex: None,
            removed_vertex: None,
            inverse: Move::ThreeTwo { edge: new_edge },
        };
        debug_assert_eq!(out.tets.len(), first_new + 3);
        Ok((out, rec))
    }

    /// 3-2 move removing edge `e`, which must have exactly three distinct
    /// tetrahedra around it.
    pub fn pachner_32(&self, e: usize) -> Result<(Triangulation, MoveRecord)> {
        let what = format!("3-2 on edge {e}");
        let star = self
            .edge_star(e)
            .map_err(|err| Error::RejectedMove(format!("{what}: {err}")))?;
        if star.len() != 3 {
            return Err(Error::RejectedMove(format!(
                "{what}: edge has degree {}, not 3",
                star.len()
            )));
        }
        let [a, b] = self.edges[e];
        let mut link_v = Vec::new();
        let mut link_e = Vec::new();
        for &(ti, _) in &star {
            let t = &self.tets[ti];
            let rest: Vec<usize> = (0..4)
                .filter(|&k| t.vertices[k] != a && t.vertices[k] != b)
                .collect();
            link_e.push(t.edge(rest[0], rest[1]));
            link_v.extend(rest.iter().map(|&k| t.vertices[k]));
        }
        link_v.sort_unstable();
        link_v.dedup();
        let mut le = link_e.clone();
        le.sort_unstable();
        le.dedup();
        if link_v.len() != 3 || le.len() != 3 || link_v.contains(&a) || link_v.contains(&b) {
            return Err(Error::RejectedMove(format!(
                "{what}: link of the edge is not a triangle"
            )));
        }
        let new_face = FaceKey([le[0], le[1], le[2]]);
        let faces = self.faces();
        if faces.contains_key(&new_face) {
            return Err(Error::RejectedMove(format!(
                "{what}: the face {:?} already exists",
                link_v
            )));
        }
        let (x, y, z) = (link_v[0], link_v[1], link_v[2]);
        // Edge between two vertices of the star, read off any star tet holding both.
        let edge_of = |p: usize, q: usize| -> usize {
            star.iter()
                .find_map(|&(ti, _)| {
                    let t = &self.tets[ti];
                    Some(t.edge(t.local_of(p)?, t.local_of(q)?))
                })
                .expect("both vertices lie in the star")
        };
        let mut created = Vec::new();
        for (apex, other) in [(a, b), (b, a)] {
            let es = [
                edge_of(apex, x),
                edge_of(apex, y),
                edge_of(apex, z),
                edge_of(x, y),
                edge_of(x, z),
                edge_of(y, z),
            ];
            let tet = Tetrahedron {
                vertices: [apex, x, y, z],
                sign: 1,
                edges: es,
            };
            // Face (apex, x, y) came from the star tet containing x and y,
            // where it lies opposite `other`.
            let (ti, _) = star
                .iter()
                .copied()
                .find(|&(ti, _)| {
                    let t = &self.tets[ti];
                    t.local_of(x).is_some() && t.local_of(y).is_some()
                })
                .unwrap();
            let old = &self.tets[ti];
            let reference = old.induced_orientation(old.local_of(other).unwrap());
            created.push(Self::orient(tet, 3, reference));
        }
        let removed: Vec<usize> = star.iter().map(|s| s.0).collect();
        let mut tets: Vec<Tetrahedron> = self
            .tets
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, t)| t.clone())
            .collect();
        tets.extend(created.iter().cloned());
        let (out, _, emap) = Triangulation {
            name: self.name.clone(),
            labels: self.labels.clone(),
            edges: self.edges.clone(),
            tets,
        }
        .compacted();
        let out = out.checked(&what)?;
        let nf = FaceKey({
            let mut k = new_face.0.map(|e| emap[e].unwrap());
            k.sort_unstable();
            k
        });
        let rec = MoveRecord {
            kind: MoveKind::ThreeTwo,
            target: format!("edge {e} {:?}", [a, b]),
            removed_tetrahedra: removed.iter().map(|&i| self.tets[i].vertices).collect(),
            created_tetrahedra: created.iter().map(|t| t.vertices).collect(),
            created_edges: vec![],
            removed_edges: vec![[a, b]],
            created_vertex: None,
            removed_vertex: None,
            inverse: Move::TwoThree { face: nf },
        };
        Ok((out, rec))
    }

    /// 1-4 move: cone a new vertex over tetrahedron `ti`.
    pub fn pachner_14(&self, ti: usize) -> Result<(Triangulation, MoveRecord)> {
        let t = self
            .tets
            .get(ti)
            .ok_or_else(|| Error::RejectedMove(format!("1-4: no tetrahedron {ti}")))?
            .clone();
        let v = self.labels.len();
        let mut n = v;
        let label = loop {
            let l = n.to_string();
            if !self.labels.contains(&l) {
                break l;
            }
            n += 1;
        };
        let mut labels = self.labels.clone();
        labels.push(label);
        let mut edges = self.edges.clone();
        let spoke: [usize; 4] = std::array::from_fn(|k| {
            edges.push([t.vertices[k].min(v), t.vertices[k].max(v)]);
            edges.len() - 1
        });
        let mut created = Vec::new();
        for k in 0..4 {
            let mut vs = t.vertices;
            vs[k] = v;
            let es = LOCAL_PAIRS.map(|(i, j)| {
                if i == k {
                    spoke[j]
                } else if j == k {
                    spoke[i]
                } else {
                    t.edge(i, j)
                }
            });
            created.push(Tetrahedron {
                vertices: vs,
                sign: t.sign,
                edges: es,
            });
        }
        let mut tets: Vec<Tetrahedron> = self
            .tets
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != ti)
            .map(|(_, x)| x.clone())
            .collect();
        tets.extend(created.iter().cloned());
        let what = format!("1-4 on tetrahedron {:?}", t.vertices);
        let out = Triangulation {
            name: self.name.clone(),
            labels,
            edges,
            tets,
        }
        .checked(&what)?;
        let rec = MoveRecord {
            kind: MoveKind::OneFour,
            target: format!("tetrahedron {:?}", t.vertices),
            removed_tetrahedra: vec![t.vertices],
            created_tetrahedra: created.iter().map(|x| x.vertices).collect(),
            created_edges: spoke.iter().map(|&e| out.edges[e]).collect(),
            removed_edges: vec![],
            created_vertex: Some(v),
            removed_vertex: None,
            inverse: Move::FourOne { vertex: v },
        };
        Ok((out, rec))
    }

    /// 4-1 move removing vertex `v`, which must lie in exactly four
    /// tetrahedra and four edges.
    pub fn pachner_41(&self, v: usize) -> Result<(Triangulation, MoveRecord)> {
        let what = format!("4-1 on vertex {v}");
        if v >= self.labels.len() {
            return Err(Error::RejectedMove(format!("{what}: no such vertex")));
        }
        let (around, spokes) = self.vertex_incidence(v);
        if around.len() != 4 || spokes.len() != 4 {
            return Err(Error::RejectedMove(format!(
                "{what}: vertex lies in {} tetrahedra and {} edges, need 4 and 4",
                around.len(),
                spokes.len()
            )));
        }
        let mut link: Vec<usize> = around
            .iter()
            .flat_map(|&ti| self.tets[ti].vertices)
            .filter(|&x| x != v)
            .collect();
        link.sort_unstable();
        link.dedup();
        if link.len() != 4 {
            return Err(Error::RejectedMove(format!(
                "{what}: link is not a tetrahedron boundary"
            )));
        }
        let t0 = &self.tets[around[0]];
        let p = t0.local_of(v).unwrap();
        let missing = *link.iter().find(|x| !t0.vertices.contains(x)).unwrap();
        let mut vs = t0.vertices;
        vs[p] = missing;
        let link_edge = |x: usize, y: usize| -> Option<usize> {
            around.iter().find_map(|&ti| {
                let t = &self.tets[ti];
                match (t.local_of(x), t.local_of(y)) {
                    (Some(i), Some(j)) => Some(t.edge(i, j)),
                    _ => None,
                }
            })
        };
        let mut es = [0; 6];
        for (k, &(i, j)) in LOCAL_PAIRS.iter().enumerate() {
            es[k] = link_edge(vs[i], vs[j]).ok_or_else(|| {
                Error::RejectedMove(format!("{what}: link is not a tetrahedron boundary"))
            })?;
        }
        let created = Tetrahedron {
            vertices: vs,
            sign: t0.sign,
            edges: es,
        };
        let mut tets: Vec<Tetrahedron> = self
            .tets
            .iter()
            .enumerate()
            .filter(|(i, _)| !around.contains(i))
            .map(|(_, t)| t.clone())
            .collect();
        tets.push(created.clone());
        let (out, _, _) = Triangulation {
            name: self.name.clone(),
            labels: self.labels.clone(),
            edges: self.edges.clone(),
            tets,
        }
        .compacted();
        let out = out.checked(&what)?;
        let new_index = out.tets.len() - 1;
        let rec = MoveRecord {
            kind: MoveKind::FourOne,
            target: format!("vertex {v} ({})", self.labels[v]),
            removed_tetrahedra: around.iter().map(|&i| self.tets[i].vertices).collect(),
            created_tetrahedra: vec![created.vertices],
            created_edges: vec![],
            removed_edges: spokes.iter().map(|&e| self.edges[e]).collect(),
            created_vertex: None,
            removed_vertex: Some(v),
            inverse: Move::OneFour { tet: new_index },
        };
        Ok((out, rec))
    }

    pub fn apply(&self, m: &Move) -> Result<(Triangulation, MoveRecord)> {
        match *m {
            Move::TwoThree { face } => self.pachner_23(face),
            Move::ThreeTwo { edge } => self.pachner_32(edge),
            Move::OneFour { tet } => self.pachner_14(tet),
            Move::FourOne { vertex } => self.pachner_41(vertex),
        }
    }

    /// Every move whose preconditions hold.
    pub fn legal_moves(&self) -> Vec<Move> {
        let mut out = Vec::new();
        let faces = self.faces();
        for (f, inc) in &faces {
            if inc.len() == 2
                && inc[0].0 != inc[1].0
                && self.tets[inc[0].0].vertices[inc[0].1] != self.tets[inc[1].0].vertices[inc[1].1]
            {
                out.push(Move::TwoThree { face: *f });
            }
        }
        for e in 0..self.edges.len() {
            if self.pachner_32(e).is_ok() {
                out.push(Move::ThreeTwo { edge: e });
            }
        }
        for t in 0..self.tets.len() {
            out.push(Move::OneFour { tet: t });
        }
        for v in 0..self.labels.len() {
            if self.pachner_41(v).is_ok() {
                out.push(Move::FourOne { vertex: v });
            }
        }
        out
    }

    /// nb[t][k] = (t', gluing): gluing[i] is the local vertex of t' matched
    /// with local vertex i of t across the face opposite k (and gluing[k]
    /// is the apex of t' opposite that face).
    fn gluings(&self) -> Vec<[(usize, [usize; 4]); 4]> {
        let faces = self.faces();
        let mut nb = vec![[(0usize, [0usize; 4]); 4]; self.tets.len()];
        for inc in faces.values() {
            if inc.len() != 2 {
                continue;
            }
            for s in 0..2 {
                let (t, k) = inc[s];
                let (u, ku) = inc[1 - s];
                let mut g = [0; 4];
                for i in 0..4 {
                    g[i] = if i == k {
                        ku
                    } else {
                        self.tets[u].local_of(self.tets[t].vertices[i]).unwrap()
                    };
                }
                nb[t][k] = (u, g);
            }
        }
        nb
    }

    /// Canonical description of the face gluings, independent of vertex,
    /// edge and tetrahedron numbering. Two connected triangulations are
    /// combinatorially isomorphic iff their signatures are equal.
    pub fn isomorphism_signature(&self) -> Vec<usize> {
        let nb = self.gluings();
        let mut best: Option<Vec<usize>> = None;
        for start in 0..self.tets.len() {
            for p in all_perms4() {
                let sig = bfs_signature(&nb, start, p);
                if best.as_ref().is_none_or(|b| sig < *b) {
                    best = Some(sig);
                }
            }
        }
        let mut out = vec![self.tets.len()];
        out.extend(best.unwrap_or_default());
        out
    }

    pub fn is_isomorphic(&self, other: &Triangulation) -> bool {
        self.counts() == other.counts()
            && self.isomorphism_signature() == other.isomorphism_signature()
    }

    /// An explicit isomorphism onto `other`, if one exists: the images of
    /// every vertex, edge and tetrahedron id. Both must be connected.
    pub fn isomorphism_to(&self, other: &Triangulation) -> Option<Isomorphism> {
        if self.counts() != other.counts() || self.tets.is_empty() {
            return None;
        }
        let (na, nb) = (self.gluings(), other.gluings());
        for u in 0..other.tets.len() {
            for p in all_perms4() {
                if let Some(iso) = self.extend_isomorphism(other, &na, &nb, u, p) {
                    return Some(iso);
                }
            }
        }
        None
    }

    /// Grow the map tetrahedron 0 ↦ `u` (local i ↦ p[i]) along the gluings
    /// and check it is a bijection on vertices, edges and tetrahedra.
    fn extend_isomorphism(
        &self,
        other: &Triangulation,
        na: &[[(usize, [usize; 4]); 4]],
        nb: &[[(usize, [usize; 4]); 4]],
        u: usize,
        p: [usize; 4],
    ) -> Option<Isomorphism> {
        let n = self.tets.len();
        let mut image: Vec<Option<(usize, [usize; 4])>> = vec![None; n];
        let mut used = vec![false; n];
        image[0] = Some((u, p));
        used[u] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(t) = queue.pop_front() {
            let (ut, pt) = image[t].unwrap();
            for k in 0..4 {
                let (t2, g) = na[t][k];
                let (u2, g2) = nb[ut][pt[k]];
                let mut p2 = [0; 4];
                for i in 0..4 {
                    p2[g[i]] = g2[pt[i]];
                }
                match image[t2] {
                    None => {
                        if used[u2] {
                            return None;
                        }
                        used[u2] = true;
                        image[t2] = Some((u2, p2));
                        queue.push_back(t2);
                    }
                    Some(existing) if existing != (u2, p2) => return None,
                    Some(_) => {}
                }
            }
        }
        let mut vertices = vec![usize::MAX; self.labels.len()];
        let mut edges = vec![usize::MAX; self.edges.len()];
        let mut tetrahedra = Vec::with_capacity(n);
        for (t, img) in image.iter().enumerate() {
            let (ut, pt) = (*img)?;
            tetrahedra.push(ut);
            let (a, b) = (&self.tets[t], &other.tets[ut]);
            for i in 0..4 {
                let v = &mut vertices[a.vertices[i]];
                let w = b.vertices[pt[i]];
                if *v != usize::MAX && *v != w {
                    return None;
                }
                *v = w;
            }
            for &(i, j) in &LOCAL_PAIRS {
                let e = &mut edges[a.edge(i, j)];
                let f = b.edge(pt[i], pt[j]);
                if *e != usize::MAX && *e != f {
                    return None;
                }
                *e = f;
            }
        }
        let bijective = |m: &[usize], len: usize| {
            let mut seen = vec![false; len];
            m.iter()
                .all(|&x| x < len && !std::mem::replace(&mut seen[x], true))
        };
        (bijective(&vertices, other.labels.len()) && bijective(&edges, other.edges.len()))
            .then_some(Isomorphism {
                vertices,
                edges,
                tetrahedra,
            })
    }

    pub fn to_json(&self) -> Result<String> {
        let explicit = !self.is_simplicial();
        let file = TriangulationFile {
            name: self.name.clone(),
            vertices: self.labels.clone(),
            tetrahedra: self
                .tets
                .iter()
                .map(|t| TetFile {
                    vertices: t.vertices,
                    sign: t.sign,
                    edges: explicit.then_some(t.edges),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: TriangulationFile = serde_json::from_str(s)?;
        let with_edges = f.tetrahedra.iter().filter(|t| t.edges.is_some()).count();
        if with_edges == 0 {
            let tets: Vec<([usize; 4], i8)> =
                f.tetrahedra.iter().map(|t| (t.vertices, t.sign)).collect();
            return Self::from_simplicial(&f.name, f.vertices, &tets);
        }
        if with_edges != f.tetrahedra.len() {
            return Err(Error::InvalidInput(
                "either every tetrahedron lists its edges or none does".into(),
            ));
        }
        // Edge labels are arbitrary integers; renumber densely in label order.
        let mut ids: BTreeMap<usize, usize> = f
            .tetrahedra
            .iter()
            .flat_map(|t| t.edges.unwrap())
            .map(|e| (e, 0))
            .collect();
        for (n, id) in ids.values_mut().enumerate() {
            *id = n;
        }
        let mut edges = vec![None; ids.len()];
        let mut tets = Vec::new();
        for (ti, t) in f.tetrahedra.iter().enumerate() {
            let raw = t.edges.unwrap();
            let es = raw.map(|e| ids[&e]);
            for (k, &(i, j)) in LOCAL_PAIRS.iter().enumerate() {
                let (a, b) = (t.vertices[i], t.vertices[j]);
                let ends = [a.min(b), a.max(b)];
                match edges[es[k]] {
                    None => edges[es[k]] = Some(ends),
                    Some(prev) if prev != ends => {
                        return Err(Error::InvalidInput(format!(
                            "tetrahedron {ti}: edge label {} joins {prev:?} elsewhere",
                            raw[k]
                        )))
                    }
                    _ => {}
                }
            }
            tets.push(Tetrahedron {
                vertices: t.vertices,
                sign: t.sign,
                edges: es,
            });
        }
        Self::new(
            &f.name,
            f.vertices,
            edges.into_iter().map(Option::unwrap).collect(),
            tets,
        )
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

fn all_perms4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut s = p;
                    s.sort_unstable();
                    if s == [0, 1, 2, 3] {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn perm_code(p: &[usize; 4]) -> usize {
    p[0] * 64 + p[1] * 16 + p[2] * 4 + p[3]
}

/// BFS relabelling from `start` with local order `p` (new local i = old p[i]).
fn bfs_signature(nb: &[[(usize, [usize; 4]); 4]], start: usize, p: [usize; 4]) -> Vec<usize> {
    let n = nb.len();
    let mut index = vec![usize::MAX; n];
    let mut perm = vec![[0usize; 4]; n];
    let mut queue = VecDeque::new();
    index[start] = 0;
    perm[start] = p;
    queue.push_back(start);
    let mut next = 1;
    let mut sig = Vec::with_capacity(8 * n);
    while let Some(t) = queue.pop_front() {
        let pt = perm[t];
        for f in 0..4 {
            let (u, g) = nb[t][pt[f]];
            // image[i]: old-local vertex of u glued to new-local vertex i of t.
            let image = pt.map(|x| g[x]);
            if index[u] == usize::MAX {
                index[u] = next;
                next += 1;
                perm[u] = image;
                queue.push_back(u);
            }
            // Gluing in new coordinates: new-local i of t ↦ new-local of u.
            let pu = perm[u];
            let inv = |x: usize| pu.iter().position(|&y| y == x).unwrap();
            let glue = image.map(inv);
            sig.push(index[u]);
            sig.push(perm_code(&glue));
        }
    }
    sig
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MoveKind {
    #[serde(rename = "2-3")]
    TwoThree,
    #[serde(rename = "3-2")]
    ThreeTwo,
    #[serde(rename = "1-4")]
    OneFour,
    #[serde(rename = "4-1")]
    FourOne,
}

/// A move addressed by ids of the triangulation it applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum Move {
    TwoThree { face: FaceKey },
    ThreeTwo { edge: usize },
    OneFour { tet: usize },
    FourOne { vertex: usize },
}

impl Move {
    /// The same move addressed through an isomorphism.
    pub fn transport(&self, iso: &Isomorphism) -> Move {
        match *self {
            Move::TwoThree { face } => {
                let mut k = face.0.map(|e| iso.edges[e]);
                k.sort_unstable();
                Move::TwoThree { face: FaceKey(k) }
            }
            Move::ThreeTwo { edge } => Move::ThreeTwo {
                edge: iso.edges[edge],
            },
            Move::OneFour { tet } => Move::OneFour {
                tet: iso.tetrahedra[tet],
            },
            Move::FourOne { vertex } => Move::FourOne {
                vertex: iso.vertices[vertex],
            },
        }
    }
}

/// Id maps of a combinatorial isomorphism between triangulations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isomorphism {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub tetrahedra: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MoveRecord {
    pub kind: MoveKind,
    pub target: String,
    pub removed_tetrahedra: Vec<[usize; 4]>,
    pub created_tetrahedra: Vec<[usize; 4]>,
    pub created_edges: Vec<[usize; 2]>,
    pub removed_edges: Vec<[usize; 2]>,
    pub created_vertex: Option<usize>,
    pub removed_vertex: Option<usize>,
    /// The move undoing this one, addressed in the resulting triangulation.
    pub inverse: Move,
}

#[derive(Serialize, Deserialize)]
struct TriangulationFile {
    name: String,
    vertices: Vec<String>,
    tetrahedra: Vec<TetFile>,
}

#[derive(Serialize, Deserialize)]
struct TetFile {
    vertices: [usize; 4],
    sign: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<[usize; 6]>,
}

/// Boundary of the 4-simplex on vertices 0..4: the minimal triangulation of S³.
pub fn fivecell() -> Triangulation {
    let labels = (0..5).map(|i| i.to_string()).collect();
    let tets: Vec<([usize; 4], i8)> = (0..5)
        .map(|omit| {
            let vs: Vec<usize> = (0..5).filter(|&v| v != omit).collect();
            (
                [vs[0], vs[1], vs[2], vs[3]],
                if omit % 2 == 0 { 1 } else { -1 },
            )
        })
        .collect();
    Triangulation::from_simplicial("fivecell", labels, &tets).expect("5-cell is well formed")
}

/// The 5-cell after a 2-3 move on face (1,2,3).
pub fn fivecell_23() -> Triangulation {
    let t = fivecell();
    let f = t.faces_with_vertices(1, 2, 3)[0];
    t.pachner_23(f)
        .expect("legal move")
        .0
        .with_name("fivecell_23")
}

/// The 5-cell after a 1-4 move on tetrahedron (0,1,2,3).
pub fn fivecell_14() -> Triangulation {
    let t = fivecell();
    let ti = t.tets_with_vertices([0, 1, 2, 3])[0];
    t.pachner_14(ti)
        .expect("legal move")
        .0
        .with_name("fivecell_14")
}

/// The bundled example triangulations as (file name, triangulation).
pub fn bundled_corpus() -> Vec<(&'static str, Triangulation)> {
    vec![
        ("fivecell.json", fivecell()),
        ("fivecell_23.json", fivecell_23()),
        ("fivecell_14.json", fivecell_14()),
    ]
}

/// Vertex-label lookup.
pub fn label_index(t: &Triangulation) -> HashMap<&str, usize> {
    t.labels()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect()
}
