//! 2D coordinate generation in bond-length units.
//!
//! Ring systems are built from regular-polygon templates (fused rings are
//! reflected across the shared edge, spiro rings hang off the shared atom),
//! chains zig-zag at 120°, and the molecule grows breadth-first from its
//! largest ring system. Crowding is then reduced by flipping subtrees across
//! acyclic bonds and, if needed, by a capped repulsion pass.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chem::{BondOrder, MoleculeGraph};

pub type Point = [f64; 2];

/// Closest allowed approach of two atoms after repair.
pub const MIN_ATOM_DISTANCE: f64 = 0.25;
/// Non-bonded pairs closer than this are considered crowded.
const CROWDED: f64 = 0.7;
pub const REPAIR_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LayoutError {
    #[error("molecule graph is not connected")]
    Disconnected,
    #[error("atoms {a} and {b} remain {distance:.3} bond lengths apart after repair")]
    LayoutFailure { a: usize, b: usize, distance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub coords: Vec<Point>,
}

impl Layout {
    /// `(min, max)` corners; a zero box at the origin for an empty layout.
    pub fn bounding_box(&self) -> (Point, Point) {
        if self.coords.is_empty() {
            return ([0.0; 2], [0.0; 2]);
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.coords {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn mean_bond_length(&self, g: &MoleculeGraph) -> Option<f64> {
        if g.bond_count() == 0 {
            return None;
        }
        let total: f64 = g
            .bonds()
            .iter()
            .map(|b| dist(self.coords[b.a], self.coords[b.b]))
            .sum();
        Some(total / g.bond_count() as f64)
    }

    /// Closest pair of atoms, if there are at least two.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.coords.len() {
            for j in i + 1..self.coords.len() {
                let d = dist(self.coords[i], self.coords[j]);
                if best.is_none_or(|b| d < b.2) {
                    best = Some((i, j, d));
                }
            }
        }
        best
    }

    /// Rotates by `quarter_turns` × 90° counter-clockwise about the origin.
    pub fn rotated_quarter_turns(&self, quarter_turns: u8) -> Layout {
        let coords = self
            .coords
            .iter()
            .map(|&[x, y]| match quarter_turns % 4 {
                0 => [x, y],
                1 => [-y, x],
                2 => [-x, -y],
                _ => [y, -x],
            })
            .collect();
        Layout { coords }
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

fn norm(a: Point) -> Point {
    let l = (a[0] * a[0] + a[1] * a[1]).sqrt();
    if l < 1e-12 {
        [1.0, 0.0]
    } else {
        [a[0] / l, a[1] / l]
    }
}

fn angle(a: Point) -> f64 {
    a[1].atan2(a[0])
}

fn unit(theta: f64) -> Point {
    [theta.cos(), theta.sin()]
}

fn centroid(points: impl IntoIterator<Item = Point>) -> Point {
    let mut c = [0.0; 2];
    let mut n = 0.0;
    for p in points {
        c = add(c, p);
        n += 1.0;
    }
    if n == 0.0 {
        c
    } else {
        scale(c, 1.0 / n)
    }
}

/// Reflects `p` across the line through `a` and `b`.
fn reflect(p: Point, a: Point, b: Point) -> Point {
    let d = norm(sub(b, a));
    let v = sub(p, a);
    let t = v[0] * d[0] + v[1] * d[1];
    let foot = add(a, scale(d, t));
    sub(scale(foot, 2.0), p)
}

/// Ring systems: groups of rings connected through shared atoms.
fn ring_systems(g: &MoleculeGraph) -> Vec<Vec<usize>> {
    let rings = &g.ring_info().rings;
    let mut parent: Vec<usize> = (0..rings.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for i in 0..rings.len() {
        for j in i + 1..rings.len() {
            if rings[i].iter().any(|a| rings[j].contains(a)) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; rings.len()];
    for i in 0..rings.len() {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

/// Places every atom of one ring system in local coordinates.
fn ring_system_template(g: &MoleculeGraph, ring_ids: &[usize]) -> Vec<(usize, Point)> {
    let rings = &g.ring_info().rings;
    let n = g.atom_count();
    let mut pos: Vec<Option<Point>> = vec![None; n];
    let mut ring_centers: Vec<Option<Point>> = vec![None; rings.len()];
    let mut order: Vec<usize> = ring_ids.to_vec();
    order.sort_by_key(|&r| (std::cmp::Reverse(rings[r].len()), rings[r].iter().min().copied()));
    let first = order[0];
    place_polygon_centered(&rings[first], [0.0, 0.0], 0.0, &mut pos);
    ring_centers[first] = Some([0.0, 0.0]);
    let mut done = vec![first];
    let mut pending: Vec<usize> = order[1..].to_vec();

    while !pending.is_empty() {
        // Prefer a ring fused through an edge, then spiro, then bridged.
        let mut pick: Option<(usize, usize)> = None;
        for (k, &r) in pending.iter().enumerate() {
            let placed = rings[r].iter().filter(|&&a| pos[a].is_some()).count();
            if placed == 0 {
                continue;
            }
            let class = if placed == 2 && shares_edge(&rings[r], &pos) {
                0
            } else if placed == 1 {
                1
            } else {
                2
            };
            if pick.is_none_or(|(_, c)| class < c) {
                pick = Some((k, class));
            }
        }
        let (k, class) = pick.expect("ring system is connected");
        let r = pending.remove(k);
        let cycle = &rings[r];
        match class {
            0 => {
                let c = place_fused(cycle, &done, &ring_centers, rings, &mut pos);
                ring_centers[r] = Some(c);
            }
            1 => {
                let s = *cycle.iter().find(|&&a| pos[a].is_some()).expect("one placed");
                let sys_c = centroid(pos.iter().flatten().copied());
                let out = norm(sub(pos[s].unwrap(), sys_c));
                let rad = circumradius(cycle.len());
                let c = add(pos[s].unwrap(), scale(out, rad));
                let theta0 = angle(sub(pos[s].unwrap(), c));
                let i0 = cycle.iter().position(|&a| a == s).unwrap();
                place_polygon_from(cycle, i0, c, theta0, &mut pos);
                ring_centers[r] = Some(c);
            }
            _ => {
                place_bridged(cycle, &mut pos);
                ring_centers[r] = Some(centroid(cycle.iter().map(|&a| pos[a].unwrap())));
            }
        }
        done.push(r);
    }
    let mut atoms: Vec<usize> = ring_ids.iter().flat_map(|&r| rings[r].iter().copied()).collect();
    atoms.sort_unstable();
    atoms.dedup();
    atoms.into_iter().map(|a| (a, pos[a].expect("ring atom placed"))).collect()
}

fn circumradius(n: usize) -> f64 {
    0.5 / (PI / n as f64).sin()
}

fn apothem(n: usize) -> f64 {
    0.5 / (PI / n as f64).tan()
}

fn shares_edge(cycle: &[usize], pos: &[Option<Point>]) -> bool {
    let n = cycle.len();
    (0..n).any(|i| pos[cycle[i]].is_some() && pos[cycle[(i + 1) % n]].is_some())
}

fn place_polygon_centered(cycle: &[usize], c: Point, theta0: f64, pos: &mut [Option<Point>]) {
    let n = cycle.len();
    let rad = circumradius(n);
    for (i, &a) in cycle.iter().enumerate() {
        pos[a] = Some(add(c, scale(unit(theta0 + 2.0 * PI * i as f64 / n as f64), rad)));
    }
}

/// Places the cycle's unplaced atoms on a regular polygon around `c`, walking
/// from index `i0` (already placed at angle `theta0`).
fn place_polygon_from(cycle: &[usize], i0: usize, c: Point, theta0: f64, pos: &mut [Option<Point>]) {
    let n = cycle.len();
    let rad = circumradius(n);
    for k in 1..n {
        let a = cycle[(i0 + k) % n];
        if pos[a].is_none() {
            pos[a] = Some(add(c, scale(unit(theta0 + 2.0 * PI * k as f64 / n as f64), rad)));
        }
    }
}

fn place_fused(
    cycle: &[usize],
    done: &[usize],
    centers: &[Option<Point>],
    rings: &[Vec<usize>],
    pos: &mut [Option<Point>],
) -> Point {
    let n = cycle.len();
    let i = (0..n)
        .find(|&i| pos[cycle[i]].is_some() && pos[cycle[(i + 1) % n]].is_some())
        .expect("shared edge");
    let (u, v) = (cycle[i], cycle[(i + 1) % n]);
    let (pu, pv) = (pos[u].unwrap(), pos[v].unwrap());
    // The neighbouring ring's center sits on the far side of the edge.
    let other = done
        .iter()
        .find(|&&r| rings[r].contains(&u) && rings[r].contains(&v))
        .and_then(|&r| centers[r])
        .unwrap_or_else(|| centroid(pos.iter().flatten().copied()));
    let mid = scale(add(pu, pv), 0.5);
    let mirrored = reflect(other, pu, pv);
    let dir = norm(sub(mirrored, mid));
    let c = add(mid, scale(dir, apothem(n)));
    // Walk from v away from u: u sits at k = n-1 relative to v.
    // Walk from v away from u; u sits one step behind v.
    let theta_v = angle(sub(pv, c));
    let theta_u = angle(sub(pu, c));
    let step = 2.0 * PI / n as f64;
    let fwd = if wrap(theta_u - theta_v + step).abs() < 1e-6 { 1.0 } else { -1.0 };
    let rad = circumradius(n);
    for k in 1..n - 1 {
        let a = cycle[(i + 1 + k) % n];
        if pos[a].is_none() {
            pos[a] = Some(add(c, scale(unit(theta_v + fwd * step * k as f64), rad)));
        }
    }
    c
}

fn wrap(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    } else if y < -PI {
        y += 2.0 * PI;
    }
    y
}

/// Unplaced runs between placed atoms go on an outward-bulging arc.
fn place_bridged(cycle: &[usize], pos: &mut [Option<Point>]) {
    let n = cycle.len();
    let sys_c = centroid(pos.iter().flatten().copied());
    let Some(start) = (0..n).find(|&i| pos[cycle[i]].is_some()) else {
        return;
    };
    let mut i = start;
    loop {
        let j = (i + 1) % n;
        if pos[cycle[j]].is_none() {
            let mut run = Vec::new();
            let mut k = j;
            while pos[cycle[k]].is_none() {
                run.push(cycle[k]);
                k = (k + 1) % n;
            }
            let (p, q) = (pos[cycle[i]].unwrap(), pos[cycle[k]].unwrap());
            let mid = scale(add(p, q), 0.5);
            let mut out = sub(mid, sys_c);
            if out[0].abs() + out[1].abs() < 1e-9 {
                let d = sub(q, p);
                out = [-d[1], d[0]];
            }
            let out = norm(out);
            let m = run.len() as f64 + 1.0;
            let bulge = 0.5 * run.len() as f64;
            for (t, &a) in run.iter().enumerate() {
                let f = (t as f64 + 1.0) / m;
                let base = add(p, scale(sub(q, p), f));
                let h = bulge * (PI * f).sin();
                pos[a] = Some(add(base, scale(out, h)));
            }
            i = k;
        } else {
            i = j;
        }
        if i == start {
            break;
        }
    }
}

/// Straight-through geometry for sp atoms (a triple bond or two double bonds).
fn is_linear(g: &MoleculeGraph, a: usize) -> bool {
    let mut doubles = 0;
    for &(_, bi) in g.neighbors(a) {
        match g.bond(bi).order {
            BondOrder::Triple => return true,
            BondOrder::Double => doubles += 1,
            _ => {}
        }
    }
    doubles >= 2
}

struct Builder<'a> {
    g: &'a MoleculeGraph,
    pos: Vec<Option<Point>>,
    /// Zig-zag side for chain continuation.
    side: Vec<f64>,
    system_of: Vec<Option<usize>>,
    systems: Vec<Vec<usize>>,
    queue: VecDeque<usize>,
}

impl Builder<'_> {
    fn place_system(&mut self, sys: usize, attach: Option<(usize, usize, Point)>) {
        let template = ring_system_template(self.g, &self.systems[sys]);
        let placed: Vec<(usize, Point)> = match attach {
            None => template,
            Some((anchor, atom, target)) => {
                let tc = centroid(template.iter().map(|t| t.1));
                let local = template.iter().find(|t| t.0 == atom).unwrap().1;
                // Outward direction of the attachment atom within its system,
                // taken from the rings that contain it.
                let rings = &self.g.ring_info().rings;
                let own = centroid(
                    self.systems[sys]
                        .iter()
                        .filter(|&&r| rings[r].contains(&atom))
                        .flat_map(|&r| rings[r].iter())
                        .map(|&a| template.iter().find(|t| t.0 == a).unwrap().1),
                );
                let mut out = sub(local, own);
                if out[0].abs() + out[1].abs() < 1e-9 {
                    out = sub(local, tc);
                }
                let want = sub(self.pos[anchor].unwrap(), target);
                let rot = angle(want) - angle(out);
                let (s, c) = rot.sin_cos();
                template
                    .iter()
                    .map(|&(a, p)| {
                        let d = sub(p, local);
                        let r = [d[0] * c - d[1] * s, d[0] * s + d[1] * c];
                        (a, add(target, r))
                    })
                    .collect()
            }
        };
        for (a, p) in placed {
            self.pos[a] = Some(p);
            self.queue.push_back(a);
        }
    }

    fn grow(&mut self) {
        let g = self.g;
        while let Some(a) = self.queue.pop_front() {
            let pa = self.pos[a].unwrap();
            let mut new: Vec<usize> = g
                .neighbors(a)
                .iter()
                .map(|&(w, _)| w)
                .filter(|&w| self.pos[w].is_none())
                .collect();
            if new.is_empty() {
                continue;
            }
            new.sort_unstable();
            let mut placed_dirs: Vec<f64> = g
                .neighbors(a)
                .iter()
                .filter_map(|&(w, _)| self.pos[w].map(|p| angle(sub(p, pa))))
                .collect();
            let ring_count = placed_dirs.len();
            // Ring interiors count as occupied so substituents point outwards.
            for ring in g.ring_info().rings.iter().filter(|r| r.contains(&a)) {
                if ring.iter().all(|&r| self.pos[r].is_some()) {
                    let c = centroid(ring.iter().map(|&r| self.pos[r].unwrap()));
                    placed_dirs.push(angle(sub(c, pa)));
                }
            }
            let dirs: Vec<f64> = if placed_dirs.is_empty() {
                match new.len() {
                    1 => vec![0.0],
                    2 => vec![PI / 6.0, 5.0 * PI / 6.0],
                    k => (0..k).map(|i| 2.0 * PI * i as f64 / k as f64).collect(),
                }
            } else if ring_count == 1 && placed_dirs.len() == 1 && new.len() == 1 {
                let back = placed_dirs[0];
                if is_linear(g, a) {
                    vec![back + PI]
                } else {
                    vec![back + self.side[a] * 2.0 * PI / 3.0]
                }
            } else {
                gap_directions(&placed_dirs, new.len())
            };
            for (&w, &theta) in new.iter().zip(&dirs) {
                if self.pos[w].is_some() {
                    continue;
                }
                let target = add(pa, unit(theta));
                match self.system_of[w] {
                    Some(sys) => self.place_system(sys, Some((a, w, target))),
                    None => {
                        self.pos[w] = Some(target);
                        self.side[w] = -self.side[a];
                        self.queue.push_back(w);
                    }
                }
            }
        }
    }
}

/// Spreads `k` new bond directions evenly across the widest angular gap.
fn gap_directions(existing: &[f64], k: usize) -> Vec<f64> {
    let mut angs: Vec<f64> = existing.iter().map(|&t| t.rem_euclid(2.0 * PI)).collect();
    angs.sort_by(f64::total_cmp);
    let mut best = (0.0, 0.0);
    for i in 0..angs.len() {
        let start = angs[i];
        let end = if i + 1 < angs.len() { angs[i + 1] } else { angs[0] + 2.0 * PI };
        if end - start > best.1 - best.0 + 1e-9 {
            best = (start, end);
        }
    }
    let width = best.1 - best.0;
    (1..=k)
        .map(|i| best.0 + width * i as f64 / (k + 1) as f64)
        .collect()
}

fn crowding(g: &MoleculeGraph, pos: &[Point]) -> f64 {
    let n = pos.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(pos[i], pos[j]);
            if d < CROWDED && g.bond_between(i, j).is_none() {
                s += (CROWDED - d).powi(2);
            }
        }
    }
    s
}

/// Atoms reachable from `start` without crossing bond `cut`.
fn side_of(g: &MoleculeGraph, start: usize, cut: usize) -> Vec<usize> {
    let mut seen = vec![false; g.atom_count()];
    seen[start] = true;
    let mut stack = vec![start];
    let mut out = vec![start];
    while let Some(a) = stack.pop() {
        for &(w, bi) in g.neighbors(a) {
            if bi != cut && !seen[w] {
                seen[w] = true;
                out.push(w);
                stack.push(w);
            }
        }
    }
    out
}

fn flip_repair(g: &MoleculeGraph, pos: &mut [Point]) {
    let mut score = crowding(g, pos);
    if score == 0.0 {
        return;
    }
    let candidates: Vec<(usize, Vec<usize>)> = (0..g.bond_count())
        .filter(|&bi| !g.bond_in_ring(bi))
        .map(|bi| {
            let b = g.bond(bi);
            let left = side_of(g, b.b, bi);
            let right = side_of(g, b.a, bi);
            (bi, if left.len() <= right.len() { left } else { right })
        })
        .filter(|(_, s)| s.len() > 1)
        .collect();
    for _ in 0..3 {
        let mut improved = false;
        for (bi, side) in &candidates {
            let b = g.bond(*bi);
            let (pa, pb) = (pos[b.a], pos[b.b]);
            let saved: Vec<Point> = side.iter().map(|&a| pos[a]).collect();
            for &a in side {
                pos[a] = reflect(pos[a], pa, pb);
            }
            let s = crowding(g, pos);
            if s + 1e-12 < score {
                score = s;
                improved = true;
            } else {
                for (&a, &p) in side.iter().zip(&saved) {
                    pos[a] = p;
                }
            }
            if score == 0.0 {
                return;
            }
        }
        if !improved {
            break;
        }
    }
}

fn repel(g: &MoleculeGraph, pos: &mut [Point], rng: &mut ChaCha8Rng) {
    let n = pos.len();
    for _ in 0..REPAIR_STEPS {
        if crowding(g, pos) == 0.0 {
            return;
        }
        let mut force = vec![[0.0f64; 2]; n];
        for i in 0..n {
            for j in i + 1..n {
                let l = dist(pos[i], pos[j]);
                let dir = if l < 1e-6 {
                    unit(rng.random_range(0.0..2.0 * PI))
                } else {
                    scale(sub(pos[i], pos[j]), 1.0 / l)
                };
                let f = if g.bond_between(i, j).is_some() {
                    0.5 * (1.0 - l)
                } else if l < CROWDED + 0.1 {
                    0.25 * (CROWDED + 0.1 - l)
                } else {
                    0.0
                };
                force[i] = add(force[i], scale(dir, f));
                force[j] = sub(force[j], scale(dir, f));
            }
        }
        for i in 0..n {
            pos[i] = add(pos[i], force[i]);
        }
    }
}

/// Rotates so the principal axis is horizontal and centers on the origin.
fn orient(pos: &mut [Point]) {
    let c = centroid(pos.iter().copied());
    for p in pos.iter_mut() {
        *p = sub(*p, c);
    }
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pos.iter() {
        sxx += p[0] * p[0];
        syy += p[1] * p[1];
        sxy += p[0] * p[1];
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (s, c) = (-theta).sin_cos();
    for p in pos.iter_mut() {
        *p = [p[0] * c - p[1] * s, p[0] * s + p[1] * c];
        // Avoid signed zeros so equal layouts compare bitwise.
        for v in p.iter_mut() {
            if *v == 0.0 {
                *v = 0.0;
            }
        }
    }
}

/// Deterministic 2D layout; `seed` only drives tie-breaking jitter in the
/// repulsion pass.
pub fn layout_2d(g: &MoleculeGraph, seed: u64) -> Result<Layout, LayoutError> {
    let n = g.atom_count();
    if n == 0 {
        return Ok(Layout { coords: Vec::new() });
    }
    if !g.is_connected() {
        return Err(LayoutError::Disconnected);
    }
    let systems: Vec<Vec<usize>> = ring_systems(g);
    let rings = &g.ring_info().rings;
    let mut system_of = vec![None; n];
    for (s, ids) in systems.iter().enumerate() {
        for &r in ids {
            for &a in &rings[r] {
                system_of[a] = Some(s);
            }
        }
    }
    let mut b = Builder {
        g,
        pos: vec![None; n],
        side: vec![1.0; n],
        system_of,
        systems,
        queue: VecDeque::new(),
    };
    let largest = (0..b.systems.len()).max_by_key(|&s| {
        let atoms: usize = b.systems[s].iter().map(|&r| rings[r].len()).sum();
        (atoms, std::cmp::Reverse(s))
    });
    match largest {
        Some(s) => b.place_system(s, None),
        None => {
            b.pos[0] = Some([0.0, 0.0]);
            b.queue.push_back(0);
        }
    }
    b.grow();
    let mut pos: Vec<Point> = b.pos.into_iter().map(|p| p.expect("connected graph fully placed")).collect();

    flip_repair(g, &mut pos);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    repel(g, &mut pos, &mut rng);

    if g.bond_count() > 0 {
        let mean: f64 = g.bonds().iter().map(|bd| dist(pos[bd.a], pos[bd.b])).sum::<f64>()
            / g.bond_count() as f64;
        for p in pos.iter_mut() {
            *p = scale(*p, 1.0 / mean);
        }
    }
    orient(&mut pos);
    let layout = Layout { coords: pos };
    if let Some((a, b, d)) = layout.closest_pair() {
        if d < MIN_ATOM_DISTANCE {
            return Err(LayoutError::LayoutFailure { a, b, distance: d });
        }
    }
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn lay(s: &str) -> (MoleculeGraph, Layout) {
        let g = parse_smiles(s).unwrap();
        let l = layout_2d(&g, 0).unwrap();
        (g, l)
    }

    #[test]
    fn single_atom_at_origin() {
        let (_, l) = lay("C");
        assert_eq!(l.coords, vec![[0.0, 0.0]]);
    }

    #[test]
    fn benzene_is_a_regular_hexagon() {
        let (g, l) = lay("c1ccccc1");
        for b in g.bonds() {
            let d = dist(l.coords[b.a], l.coords[b.b]);
            assert!((d - 1.0).abs() < 0.05, "{d}");
        }
        let c = centroid(l.coords.iter().copied());
        for p in &l.coords {
            assert!((dist(*p, c) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fused_and_spiro_systems_keep_unit_bonds() {
        for s in ["c1ccc2ccccc2c1", "c1ccc2[nH]ccc2c1", "C1CCC2(CC1)CCC2", "c1ccc2cc3ccccc3cc2c1"] {
            let (g, l) = lay(s);
            for b in g.bonds() {
                let d = dist(l.coords[b.a], l.coords[b.b]);
                assert!((d - 1.0).abs() < 0.05, "{s}: {d}");
            }
        }
    }

    #[test]
    fn chains_zig_zag() {
        let (_, l) = lay("CCCC");
        // 120° angles give a 1-3 distance of sqrt(3).
        assert!((dist(l.coords[0], l.coords[2]) - 3f64.sqrt()).abs() < 1e-6);
        assert!((dist(l.coords[0], l.coords[3]) - 7f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn deterministic() {
        let g = parse_smiles("CC(C)(C)c1ccc(cc1)C(=O)NC1CCN(CC1)c1ncccn1").unwrap();
        let a = layout_2d(&g, 3).unwrap();
        let b = layout_2d(&g, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disconnected_rejected() {
        let g = MoleculeGraph::new(
            vec![crate::chem::Atom::new(crate::chem::Element::C); 2],
            vec![],
        )
        .unwrap();
        assert_eq!(layout_2d(&g, 0), Err(LayoutError::Disconnected));
    }
}
