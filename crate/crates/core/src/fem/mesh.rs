//! Conforming P1 triangulations of the disk, graded toward the boundary,
//! with exact-arclength boundary data, a uniform-bin point locator, and a
//! plain-text exchange format.

use crate::error::{Error, Result};
use std::io::{BufRead, Write};
use std::path::Path;

/// Growth factor of the radial ring spacing away from the boundary.
const GRADING: f64 = 1.45;

/// A boundary edge between two consecutive boundary vertices, with the exact
/// curve arclengths of its endpoints (s_j > s_i; the closing edge ends at the
/// full period rather than wrapping to 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub i: usize,
    pub j: usize,
    pub s_i: f64,
    pub s_j: f64,
}

/// Triangulation with positively oriented triangles. Boundary vertices carry
/// their curve arclength; interior vertices carry `None`.
#[derive(Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    pub vertex_s: Vec<Option<f64>>,
    bins: BinGrid,
}

#[derive(Debug)]
struct BinGrid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl BinGrid {
    fn build(vertices: &[[f64; 2]], triangles: &[[usize; 3]], cell: f64) -> Self {
        let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
        let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in vertices {
            xmin = xmin.min(v[0]);
            xmax = xmax.max(v[0]);
            ymin = ymin.min(v[1]);
            ymax = ymax.max(v[1]);
        }
        let pad = cell * 0.5;
        let (x0, y0) = (xmin - pad, ymin - pad);
        let nx = (((xmax - xmin) + 2.0 * pad) / cell).ceil().max(1.0) as usize;
        let ny = (((ymax - ymin) + 2.0 * pad) / cell).ceil().max(1.0) as usize;

        let cell_of = |x: f64, y: f64| -> (usize, usize) {
            let cx = (((x - x0) / cell) as usize).min(nx - 1);
            let cy = (((y - y0) / cell) as usize).min(ny - 1);
            (cx, cy)
        };

        // Two passes: count, then fill.
        let mut count = vec![0u32; nx * ny + 1];
        let ranges: Vec<(usize, usize, usize, usize)> = triangles
            .iter()
            .map(|t| {
                let (mut bx0, mut by0) = (f64::INFINITY, f64::INFINITY);
                let (mut bx1, mut by1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for &v in t {
                    bx0 = bx0.min(vertices[v][0]);
                    bx1 = bx1.max(vertices[v][0]);
                    by0 = by0.min(vertices[v][1]);
                    by1 = by1.max(vertices[v][1]);
                }
                let (cx0, cy0) = cell_of(bx0, by0);
                let (cx1, cy1) = cell_of(bx1, by1);
                (cx0, cy0, cx1, cy1)
            })
            .collect();
        for &(cx0, cy0, cx1, cy1) in &ranges {
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    count[cy * nx + cx + 1] += 1;
                }
            }
        }
        for k in 1..count.len() {
            count[k] += count[k - 1];
        }
        let start = count.clone();
        let mut cursor = start.clone();
        let mut items = vec![0u32; *start.last().unwrap() as usize];
        for (tri, &(cx0, cy0, cx1, cy1)) in ranges.iter().enumerate() {
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    let slot = cursor[cy * nx + cx];
                    items[slot as usize] = tri as u32;
                    cursor[cy * nx + cx] += 1;
                }
            }
        }
        BinGrid { x0, y0, cell, nx, ny, start, items }
    }

    fn cell_index(&self, p: [f64; 2]) -> (isize, isize) {
        (
            ((p[0] - self.x0) / self.cell).floor() as isize,
            ((p[1] - self.y0) / self.cell).floor() as isize,
        )
    }

    fn candidates(&self, cx: isize, cy: isize, ring: isize, out: &mut Vec<u32>) {
        let push = |out: &mut Vec<u32>, x: isize, y: isize, grid: &BinGrid| {
            if x < 0 || y < 0 || x >= grid.nx as isize || y >= grid.ny as isize {
                return;
            }
            let c = y as usize * grid.nx + x as usize;
            let (a, b) = (grid.start[c] as usize, grid.start[c + 1] as usize);
            out.extend_from_slice(&grid.items[a..b]);
        };
        if ring == 0 {
            push(out, cx, cy, self);
            return;
        }
        for x in (cx - ring)..=(cx + ring) {
            push(out, x, cy - ring, self);
            push(out, x, cy + ring, self);
        }
        for y in (cy - ring + 1)..(cy + ring) {
            push(out, cx - ring, y, self);
            push(out, cx + ring, y, self);
        }
    }
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Twice the signed area of triangle t.
    pub fn double_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| 0.5 * self.double_area(t)).sum()
    }

    /// Barycentric coordinates of p in triangle t (may be negative outside).
    pub fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let d = self.double_area(t);
        let l0 = ((pb[0] - p[0]) * (pc[1] - p[1]) - (pb[1] - p[1]) * (pc[0] - p[0])) / d;
        let l1 = ((pc[0] - p[0]) * (pa[1] - p[1]) - (pc[1] - p[1]) * (pa[0] - p[0])) / d;
        [l0, l1, 1.0 - l0 - l1]
    }

    /// Find the triangle containing p (or nearest, for points a hair outside
    /// the polygonal boundary, where barycentric extrapolation is accepted
    /// down to -0.1). Returns the triangle index and barycentric coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let (cx, cy) = self.bins.cell_index(p);
        let mut cand = Vec::with_capacity(32);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for ring in 0..3isize {
            cand.clear();
            self.bins.candidates(cx, cy, ring, &mut cand);
            for &t in &cand {
                let lam = self.barycentric(t as usize, p);
                let min = lam[0].min(lam[1]).min(lam[2]);
                if min >= -1e-12 {
                    return Some((t as usize, lam));
                }
                if best.map_or(true, |(_, _, m)| min > m) {
                    best = Some((t as usize, lam, min));
                }
            }
            // A strictly interior hit can only be in ring 0 or 1; keep going
            // one extra ring only to improve the extrapolation candidate.
            if ring >= 1 {
                if let Some((t, lam, min)) = best {
                    if min >= -0.1 {
                        return Some((t, lam));
                    }
                }
            }
        }
        None
    }

    /// Boundary vertices in curve order (by the edge list).
    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.boundary.iter().map(|e| e.i).collect()
    }

    /// Median arclength spacing of boundary vertices (the near-boundary
    /// resolution scale of the mesh).
    pub fn boundary_spacing(&self) -> f64 {
        let mut lengths: Vec<f64> = self.boundary.iter().map(|e| e.s_j - e.s_i).collect();
        lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lengths.get(lengths.len() / 2).copied().unwrap_or(0.0)
    }

    fn rebuild_bins(&mut self, cell: f64) {
        self.bins = BinGrid::build(&self.vertices, &self.triangles, cell);
    }

    /// Structural validation: positive areas, conforming edges, boundary
    /// edges exactly the once-used ones and matching the boundary list.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.n_triangles() {
            if self.double_area(t) <= 0.0 {
                return Err(Error::Mesh(format!(
                    "triangle {t} has non-positive area {}",
                    0.5 * self.double_area(t)
                )));
            }
        }
        use std::collections::HashMap;
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        let mut once = 0usize;
        for (&(a, b), &count) in &edges {
            if count > 2 {
                return Err(Error::Mesh(format!("edge ({a}, {b}) used {count} times")));
            }
            if count == 1 {
                once += 1;
            }
        }
        if once != self.boundary.len() {
            return Err(Error::Mesh(format!(
                "{} once-used edges vs {} boundary edges",
                once,
                self.boundary.len()
            )));
        }
        for e in &self.boundary {
            let key = (e.i.min(e.j), e.i.max(e.j));
            if edges.get(&key) != Some(&1) {
                return Err(Error::Mesh(format!(
                    "boundary edge ({}, {}) is not a once-used mesh edge",
                    e.i, e.j
                )));
            }
            if !(e.s_j > e.s_i) {
                return Err(Error::Mesh(format!(
                    "boundary edge ({}, {}) has non-increasing arclength",
                    e.i, e.j
                )));
            }
        }
        Ok(())
    }

    /// Write the mesh in the plain-text exchange format.
    pub fn write_text<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "vertices {} triangles {} boundary {}",
            self.n_vertices(),
            self.n_triangles(),
            self.boundary.len()
        )?;
        for (v, s) in self.vertices.iter().zip(self.vertex_s.iter()) {
            match s {
                Some(s) => writeln!(out, "{:.17e} {:.17e} {:.17e}", v[0], v[1], s)?,
                None => writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?,
            }
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        for e in &self.boundary {
            writeln!(out, "{} {} {:.17e} {:.17e}", e.i, e.j, e.s_i, e.s_j)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_text(&mut f)
    }

    /// Read a mesh written by `write_text`. The point-location grid is
    /// rebuilt from the median boundary edge length.
    pub fn read_text<R: BufRead>(input: R) -> Result<Mesh> {
        let mut lines = input.lines().enumerate();
        let parse_err = |line: usize, msg: String| Error::Mesh(format!("line {}: {msg}", line + 1));

        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::Mesh("empty mesh file".into()))?;
        let header = header?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "vertices" || h[2] != "triangles" || h[4] != "boundary" {
            return Err(parse_err(ln, format!("bad header '{header}'")));
        }
        let nv: usize = h[1].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
        let nt: usize = h[3].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
        let nb: usize = h[5].parse().map_err(|e| parse_err(ln, format!("{e}")))?;

        let mut vertices = Vec::with_capacity(nv);
        let mut vertex_s = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::Mesh("truncated vertex section".into()))?;
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 && f.len() != 3 {
                return Err(parse_err(ln, format!("expected 'x y [s]', got '{line}'")));
            }
            let x: f64 = f[0].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
            let y: f64 = f[1].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
            vertices.push([x, y]);
            vertex_s.push(match f.get(2) {
                Some(v) => Some(v.parse().map_err(|e| parse_err(ln, format!("{e}")))?),
                None => None,
            });
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::Mesh("truncated triangle section".into()))?;
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(ln, format!("expected 'i j k', got '{line}'")));
            }
            let mut t = [0usize; 3];
            for (slot, v) in t.iter_mut().zip(f.iter()) {
                *slot = v.parse().map_err(|e| parse_err(ln, format!("{e}")))?;
                if *slot >= nv {
                    return Err(parse_err(ln, format!("vertex index {slot} out of range")));
                }
            }
            triangles.push(t);
        }
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::Mesh("truncated boundary section".into()))?;
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(parse_err(ln, format!("expected 'i j s_i s_j', got '{line}'")));
            }
            let i: usize = f[0].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
            let j: usize = f[1].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
            let s_i: f64 = f[2].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
            let s_j: f64 = f[3].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
            if i >= nv || j >= nv {
                return Err(parse_err(ln, "boundary vertex index out of range".into()));
            }
            boundary.push(BoundaryEdge { i, j, s_i, s_j });
        }

        let mut cell_lengths: Vec<f64> = boundary.iter().map(|e| e.s_j - e.s_i).collect();
        cell_lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cell = cell_lengths.get(cell_lengths.len() / 2).copied().unwrap_or(0.1).max(1e-6);
        let bins = BinGrid::build(&vertices, &triangles, cell);
        let mesh = Mesh { vertices, triangles, boundary, vertex_s, bins };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn load(path: &Path) -> Result<Mesh> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Mesh::read_text(f)
    }
}

/// Graded triangulation of the disk of the given radius: boundary vertices
/// exactly on the circle with exact arclengths, near-boundary element
/// diameter at most `h_boundary`, coarsening geometrically to `h_interior`.
pub fn generate_disk_mesh(radius: f64, h_interior: f64, h_boundary: f64) -> Result<Mesh> {
    if !(h_boundary > 0.0 && h_boundary <= h_interior) {
        return Err(Error::Config(format!(
            "need 0 < h_boundary <= h_interior, got {h_boundary} and {h_interior}"
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::Config(format!("radius must be positive, got {radius}")));
    }
    let period = 2.0 * std::f64::consts::PI * radius;
    // Right-triangle legs h/sqrt(2) give hypotenuse (= element diameter) h.
    let leg_b = h_boundary / std::f64::consts::SQRT_2;
    let leg_i = h_interior / std::f64::consts::SQRT_2;
    let n0 = (period / leg_b).ceil() as usize;
    if n0 > 2_000_000 {
        return Err(Error::Config(format!(
            "h_boundary {h_boundary} needs {n0} boundary vertices; sizing infeasible"
        )));
    }
    if radius < 3.0 * leg_b {
        return Err(Error::Config(
            "radius too small relative to h_boundary for a graded ring mesh".into(),
        ));
    }

    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut vertex_s: Vec<Option<f64>> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();

    // Ring plan: (radius, vertex count, angular offset). The first interior
    // ring copies the boundary count with a half-step stagger, so every
    // boundary-touching triangle is isoceles with diameter <= 1.12 * leg_b.
    let mut rings: Vec<(f64, usize, f64)> = Vec::new();
    rings.push((radius, n0, 0.0));
    rings.push((radius - leg_b, n0, std::f64::consts::PI / n0 as f64));
    let mut r = radius - leg_b;
    let mut d = (leg_b * GRADING).min(leg_i);
    loop {
        let r_next = r - d;
        if r_next <= 1.25 * (d * GRADING).min(leg_i) {
            break;
        }
        let n = ((2.0 * std::f64::consts::PI * r_next / d).ceil() as usize).max(8);
        let offset = if rings.len() % 2 == 1 {
            std::f64::consts::PI / n as f64
        } else {
            0.0
        };
        rings.push((r_next, n, offset));
        r = r_next;
        d = (d * GRADING).min(leg_i);
    }

    // Vertex coordinates ring by ring; boundary ring gets exact arclengths.
    let mut ring_first: Vec<usize> = Vec::with_capacity(rings.len());
    for (k, &(rk, nk, offset)) in rings.iter().enumerate() {
        ring_first.push(vertices.len());
        for j in 0..nk {
            let theta = offset + 2.0 * std::f64::consts::PI * j as f64 / nk as f64;
            vertices.push([rk * theta.cos(), rk * theta.sin()]);
            vertex_s.push(if k == 0 {
                Some(period * j as f64 / nk as f64)
            } else {
                None
            });
        }
    }
    let center = vertices.len();
    vertices.push([0.0, 0.0]);
    vertex_s.push(None);

    // Stitch consecutive rings with a two-pointer angular merge.
    for k in 0..rings.len() - 1 {
        let (n_out, off_out) = (rings[k].1, rings[k].2);
        let (n_in, off_in) = (rings[k + 1].1, rings[k + 1].2);
        let (base_out, base_in) = (ring_first[k], ring_first[k + 1]);
        zipper(
            &mut triangles,
            base_out,
            n_out,
            off_out,
            base_in,
            n_in,
            off_in,
        );
    }

    // Fan from the innermost ring to the center.
    let (n_last, _) = (rings.last().unwrap().1, ());
    let base_last = *ring_first.last().unwrap();
    for j in 0..n_last {
        triangles.push([base_last + j, base_last + (j + 1) % n_last, center]);
    }

    let boundary = (0..n0)
        .map(|j| BoundaryEdge {
            i: j,
            j: (j + 1) % n0,
            s_i: period * j as f64 / n0 as f64,
            s_j: period * (j + 1) as f64 / n0 as f64,
        })
        .collect();

    let bins = BinGrid::build(&vertices, &triangles, h_boundary.max(radius / 512.0));
    let mut mesh = Mesh { vertices, triangles, boundary, vertex_s, bins };
    mesh.validate()?;
    // Bin cell tuned to the finest sizing for O(1) strip-node lookups.
    mesh.rebuild_bins(h_boundary.max(radius / 512.0));
    Ok(mesh)
}

/// Triangulate the annulus between two concentric vertex rings (uniform
/// angular spacing each) by advancing whichever ring has the smaller next
/// angle. Produces n_out + n_in positively oriented triangles.
#[allow(clippy::too_many_arguments)]
fn zipper(
    triangles: &mut Vec<[usize; 3]>,
    base_out: usize,
    n_out: usize,
    off_out: f64,
    base_in: usize,
    n_in: usize,
    off_in: f64,
) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let step_out = two_pi / n_out as f64;
    let step_in = two_pi / n_in as f64;
    // Inner start: the vertex whose angle is nearest to the outer start.
    let mut j0 = 0usize;
    let mut best = f64::INFINITY;
    for j in 0..n_in {
        let mut diff = (off_in + j as f64 * step_in) - off_out;
        diff -= (diff / two_pi).round() * two_pi;
        if diff.abs() < best {
            best = diff.abs();
            j0 = j;
        }
    }
    let phi0 = {
        let mut diff = (off_in + j0 as f64 * step_in) - off_out;
        diff -= (diff / two_pi).round() * two_pi;
        off_out + diff
    };

    let out_v = |i: usize| base_out + i % n_out;
    let in_v = |j: usize| base_in + (j0 + j) % n_in;
    let out_angle = |i: usize| off_out + i as f64 * step_out;
    let in_angle = |j: usize| phi0 + j as f64 * step_in;

    let (mut i, mut j) = (0usize, 0usize);
    while i < n_out || j < n_in {
        let advance_out = if j == n_in {
            true
        } else if i == n_out {
            false
        } else {
            out_angle(i + 1) <= in_angle(j + 1)
        };
        if advance_out {
            triangles.push([out_v(i), out_v(i + 1), in_v(j)]);
            i += 1;
        } else {
            triangles.push([out_v(i), in_v(j + 1), in_v(j)]);
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn coarse_disk_is_valid() {
        let mesh = generate_disk_mesh(1.0, 0.3, 0.15).unwrap();
        mesh.validate().unwrap();
        assert!(mesh.n_vertices() > 50);
        // Boundary vertices exactly on the circle.
        for e in &mesh.boundary {
            let v = mesh.vertices[e.i];
            assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-12);
        }
        // Exact arclengths telescope to the full perimeter.
        let total: f64 = mesh.boundary.iter().map(|e| e.s_j - e.s_i).sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn area_and_perimeter_converge_quadratically() {
        let coarse = generate_disk_mesh(1.0, 0.2, 0.1).unwrap();
        let fine = generate_disk_mesh(1.0, 0.1, 0.05).unwrap();
        let err_c = (PI - coarse.total_area()).abs();
        let err_f = (PI - fine.total_area()).abs();
        assert!(err_c < 0.05 && err_f < err_c);
        let ratio = err_c / err_f;
        assert!(ratio > 2.5 && ratio < 6.5, "area error ratio {ratio}");

        let chord = |m: &Mesh| -> f64 {
            m.boundary
                .iter()
                .map(|e| {
                    let (a, b) = (m.vertices[e.i], m.vertices[e.j]);
                    (a[0] - b[0]).hypot(a[1] - b[1])
                })
                .sum()
        };
        let perr_c = 2.0 * PI - chord(&coarse);
        let perr_f = 2.0 * PI - chord(&fine);
        assert!(perr_c > 0.0 && perr_f > 0.0);
        let pratio = perr_c / perr_f;
        assert!(pratio > 2.5 && pratio < 6.5, "perimeter error ratio {pratio}");
    }

    #[test]
    fn near_boundary_elements_are_small() {
        let h_b = 0.05;
        let mesh = generate_disk_mesh(1.0, 0.2, h_b).unwrap();
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangles[t];
            let touches_boundary = tri.iter().any(|&v| mesh.vertex_s[v].is_some());
            if touches_boundary {
                let mut diam: f64 = 0.0;
                for a in 0..3 {
                    for b in (a + 1)..3 {
                        let (pa, pb) = (mesh.vertices[tri[a]], mesh.vertices[tri[b]]);
                        diam = diam.max((pa[0] - pb[0]).hypot(pa[1] - pb[1]));
                    }
                }
                assert!(diam <= h_b * (1.0 + 1e-12), "diameter {diam} > {h_b}");
            }
        }
    }

    #[test]
    fn locate_interior_and_sliver_points() {
        let mesh = generate_disk_mesh(1.0, 0.2, 0.1).unwrap();
        // Interior points on a spiral.
        for k in 0..200 {
            let r = 0.97 * k as f64 / 200.0;
            let a = 0.37 * k as f64;
            let p = [r * a.cos(), r * a.sin()];
            let (t, lam) = mesh.locate(p).unwrap_or_else(|| panic!("missed {p:?}"));
            // Reconstruct the point from barycentric coordinates.
            let tri = mesh.triangles[t];
            let mut q = [0.0, 0.0];
            for (l, &v) in lam.iter().zip(tri.iter()) {
                q[0] += l * mesh.vertices[v][0];
                q[1] += l * mesh.vertices[v][1];
            }
            assert!((q[0] - p[0]).abs() + (q[1] - p[1]).abs() < 1e-10);
        }
        // Arc midpoints lie slightly outside the chord polygon and must be
        // accepted by extrapolation.
        for e in mesh.boundary.iter().step_by(7) {
            let s_mid = 0.5 * (e.s_i + e.s_j);
            let p = [s_mid.cos(), s_mid.sin()];
            let (_, lam) = mesh.locate(p).expect("sliver point missed");
            let min = lam[0].min(lam[1]).min(lam[2]);
            assert!(min > -0.05, "barycentric defect {min}");
        }
        assert!(mesh.locate([2.0, 0.0]).is_none());
    }

    #[test]
    fn text_round_trip() {
        let mesh = generate_disk_mesh(1.0, 0.35, 0.2).unwrap();
        let mut buf = Vec::new();
        mesh.write_text(&mut buf).unwrap();
        let back = Mesh::read_text(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(mesh.n_vertices(), back.n_vertices());
        assert_eq!(mesh.triangles, back.triangles);
        assert_eq!(mesh.boundary.len(), back.boundary.len());
        for (a, b) in mesh.vertices.iter().zip(back.vertices.iter()) {
            assert_eq!(a, b);
        }
        for (a, b) in mesh.vertex_s.iter().zip(back.vertex_s.iter()) {
            assert_eq!(a, b);
        }
        // Re-serialization is byte-identical.
        let mut buf2 = Vec::new();
        back.write_text(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn read_rejects_malformed_input() {
        assert!(Mesh::read_text(std::io::Cursor::new("nonsense")).is_err());
        let bad = "vertices 1 triangles 1 boundary 0\n0.0 0.0\n0 0 5\n";
        assert!(Mesh::read_text(std::io::Cursor::new(bad)).is_err());
    }

    #[test]
    fn rejects_bad_sizing() {
        assert!(generate_disk_mesh(1.0, 0.1, 0.2).is_err());
        assert!(generate_disk_mesh(1.0, 0.1, 0.0).is_err());
    }
}
