//! Lattice geometry: the bowtie tiling of corner-sharing triangles, custom
//! entanglement graphs, per-site initialization assignments, and the
//! superlattice potential whose wells realize the geometry.
//!
//! Lengths are measured in units of the underlying spacing `a`. Triangle
//! side length is 2/sqrt(3) so that a triangle of wells inscribes in a
//! hexagonal plaquette of unit "radius".

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::SiteInit;

/// Height unit: half the vertical side spacing, 1/sqrt(3).
const H: f64 = 0.577_350_269_189_625_8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub label: usize,
    pub x: f64,
    pub y: f64,
}

/// A set of labeled sites together with the triangles that receive the
/// three-site entangler and the pairs that receive the two-site one.
/// Labels are contiguous from 1 so they double as register sites.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeGraph {
    sites: Vec<Site>,
    triangles: Vec<[usize; 3]>,
    links: Vec<[usize; 2]>,
}

#[derive(Deserialize)]
struct GraphDump {
    sites: Vec<Site>,
    triangles: Vec<[usize; 3]>,
    links: Vec<[usize; 2]>,
}

impl LatticeGraph {
    /// Validates and normalizes a hand-built graph: labels must cover
    /// 1..=N exactly once, triangles and links must name existing distinct
    /// sites, repeats are rejected, and no link may duplicate a triangle
    /// edge.
    pub fn custom(
        sites: Vec<Site>,
        triangles: Vec<[usize; 3]>,
        links: Vec<[usize; 2]>,
    ) -> Result<Self> {
        let n = sites.len();
        if n == 0 {
            return Err(Error::config("graph needs at least one site"));
        }
        let mut seen = vec![false; n + 1];
        for s in &sites {
            if s.label == 0 || s.label > n {
                return Err(Error::config(format!(
                    "site labels must cover 1..={n}, got {}",
                    s.label
                )));
            }
            if seen[s.label] {
                return Err(Error::DuplicateSite(vec![s.label]));
            }
            seen[s.label] = true;
        }
        let mut sites = sites;
        sites.sort_by_key(|s| s.label);

        let mut tri_norm = Vec::with_capacity(triangles.len());
        let mut tri_seen = BTreeSet::new();
        let mut tri_edges = BTreeSet::new();
        for t in &triangles {
            let mut t = *t;
            t.sort_unstable();
            if t[0] == t[1] || t[1] == t[2] {
                return Err(Error::DuplicateSite(t.to_vec()));
            }
            if t[0] == 0 || t[2] > n {
                return Err(Error::config(format!("triangle {t:?} names unknown sites")));
            }
            if !tri_seen.insert(t) {
                return Err(Error::config(format!("triangle {t:?} listed twice")));
            }
            tri_edges.insert([t[0], t[1]]);
            tri_edges.insert([t[0], t[2]]);
            tri_edges.insert([t[1], t[2]]);
            tri_norm.push(t);
        }
        let mut link_norm = Vec::with_capacity(links.len());
        let mut link_seen = BTreeSet::new();
        for l in &links {
            let mut l = *l;
            l.sort_unstable();
            if l[0] == l[1] {
                return Err(Error::DuplicateSite(l.to_vec()));
            }
            if l[0] == 0 || l[1] > n {
                return Err(Error::config(format!("link {l:?} names unknown sites")));
            }
            if !link_seen.insert(l) {
                return Err(Error::config(format!("link {l:?} listed twice")));
            }
            if tri_edges.contains(&l) {
                return Err(Error::config(format!(
                    "link {l:?} duplicates a triangle edge"
                )));
            }
            link_norm.push(l);
        }
        Ok(LatticeGraph {
            sites,
            triangles: tri_norm,
            links: link_norm,
        })
    }

    /// The bowtie tiling with `rows` x `cols` cells, each cell a pair of
    /// triangles sharing one central site. Cells in a row form a zigzag
    /// chain (odd columns shifted up), neighboring cells share one corner
    /// site, and vertically adjacent cells share one corner as well, so the
    /// whole patch is connected through shared vertices. Labels are assigned
    /// in first-visit order, scanning rows then columns.
    pub fn bowtie(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::config("bowtie needs at least one row and column"));
        }
        let mut labels: BTreeMap<(i64, i64), usize> = BTreeMap::new();
        let mut sites = Vec::new();
        let mut triangles = Vec::new();
        for r in 0..rows as i64 {
            for c in 0..cols as i64 {
                let ix = 2 * c;
                let iy = 2 * (r + (c & 1));
                let corners = [
                    (ix - 1, iy + 1),
                    (ix - 1, iy - 1),
                    (ix, iy),
                    (ix + 1, iy + 1),
                    (ix + 1, iy - 1),
                ];
                let mut ids = [0usize; 5];
                for (slot, &(px, py)) in corners.iter().enumerate() {
                    let next = labels.len() + 1;
                    let id = *labels.entry((px, py)).or_insert(next);
                    if id == next {
                        sites.push(Site {
                            label: id,
                            x: px as f64,
                            y: py as f64 * H,
                        });
                    }
                    ids[slot] = id;
                }
                let mut left = [ids[0], ids[1], ids[2]];
                let mut right = [ids[2], ids[3], ids[4]];
                left.sort_unstable();
                right.sort_unstable();
                triangles.push(left);
                triangles.push(right);
            }
        }
        LatticeGraph::custom(sites, triangles, Vec::new())
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn links(&self) -> &[[usize; 2]] {
        &self.links
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, label: usize) -> Option<&Site> {
        self.sites.get(label.checked_sub(1)?)
    }

    /// Whether every site can reach every other through triangles and links.
    pub fn is_connected(&self) -> bool {
        let n = self.sites.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(parent, a - 1), find(parent, b - 1));
            parent[ra] = rb;
        };
        for t in &self.triangles {
            union(&mut parent, t[0], t[1]);
            union(&mut parent, t[0], t[2]);
        }
        for l in &self.links {
            union(&mut parent, l[0], l[1]);
        }
        let root = find(&mut parent, 0);
        (0..n).all(|i| find(&mut parent, i) == root)
    }

    /// Labels of all sites within distance `w0` of `(cx, cy)`: the footprint
    /// a focused removal beam of that waist would empty.
    pub fn sites_within(&self, cx: f64, cy: f64, w0: f64) -> Result<Vec<usize>> {
        if w0.is_nan() || w0 < 0.0 || !cx.is_finite() || !cy.is_finite() {
            return Err(Error::config("removal spot needs finite center and waist"));
        }
        Ok(self
            .sites
            .iter()
            .filter(|s| {
                let (dx, dy) = (s.x - cx, s.y - cy);
                dx * dx + dy * dy <= w0 * w0
            })
            .map(|s| s.label)
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: GraphDump =
            serde_json::from_str(text).map_err(|e| Error::config(format!("bad graph JSON: {e}")))?;
        LatticeGraph::custom(dump.sites, dump.triangles, dump.links)
    }
}

/// Which state each site starts in before the global entangling step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitAssignment {
    map: BTreeMap<usize, SiteInit>,
}

impl InitAssignment {
    /// Builds an assignment directly. Sites left out are understood to carry
    /// externally supplied states.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, SiteInit)>) -> Self {
        InitAssignment {
            map: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, label: usize) -> Option<SiteInit> {
        self.map.get(&label).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, SiteInit)> + '_ {
        self.map.iter().map(|(&l, &i)| (l, i))
    }

    /// Ordered `(site, init)` pairs ready for state preparation.
    pub fn to_inits(&self) -> Vec<(usize, SiteInit)> {
        self.iter().collect()
    }
}

/// Marks `path` sites active (|+>), `ones` sites as pass-through pair
/// couplers (|1>), and every remaining site as decoupled (|0>). A site may
/// not appear in both lists.
pub fn assignment_from_path(
    graph: &LatticeGraph,
    path: &[usize],
    ones: &[usize],
) -> Result<InitAssignment> {
    let mut map: BTreeMap<usize, SiteInit> = graph
        .sites()
        .iter()
        .map(|s| (s.label, SiteInit::Zero))
        .collect();
    for &p in path {
        if graph.site(p).is_none() {
            return Err(Error::config(format!("path names unknown site {p}")));
        }
        map.insert(p, SiteInit::Plus);
    }
    for &o in ones {
        if graph.site(o).is_none() {
            return Err(Error::config(format!("ones list names unknown site {o}")));
        }
        if path.contains(&o) {
            return Err(Error::config(format!(
                "site {o} cannot be both on the path and a pass-through"
            )));
        }
        map.insert(o, SiteInit::One);
    }
    Ok(InitAssignment { map })
}

/// The two-beam superlattice `V(x, y) = (V1 + V2) - V1 cos(2 pi y / L)
/// + V2 cos(2 pi sqrt(3) x / L)` with wavelength `L` in units of the
/// spacing. Minima arrange in triangles; `V1` controls the barrier along y
/// and `V2` the corrugation along x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    pub v1: f64,
    pub v2: f64,
    pub wavelength: f64,
}

impl PotentialField {
    pub fn new(v1: f64, v2: f64, wavelength: f64) -> Result<Self> {
        if [v1, v2, wavelength].iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::config(
                "potential depths and wavelength must be positive",
            ));
        }
        Ok(PotentialField { v1, v2, wavelength })
    }

    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let tau = std::f64::consts::TAU;
        self.v1 + self.v2 - self.v1 * (tau * y / self.wavelength).cos()
            + self.v2 * (tau * 3f64.sqrt() * x / self.wavelength).cos()
    }

    /// Samples the field on a regular grid, `nx` by `ny` points spanning the
    /// closed rectangle. Both resolutions must be at least 2.
    pub fn grid(&self, x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<PotentialGrid> {
        if nx < 2 || ny < 2 {
            return Err(Error::config("grid needs at least 2 points per axis"));
        }
        if [x0, x1, y0, y1].iter().any(|v| !v.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(Error::config("grid ranges must be increasing"));
        }
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            let y = y0 + (y1 - y0) * iy as f64 / (ny - 1) as f64;
            for ix in 0..nx {
                let x = x0 + (x1 - x0) * ix as f64 / (nx - 1) as f64;
                values.push(self.sample(x, y));
            }
        }
        Ok(PotentialGrid {
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
            values,
        })
    }
}

/// Row-major samples of the potential, rows running from `y0` to `y1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialGrid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl PotentialGrid {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,V\n");
        for iy in 0..self.ny {
            let y = self.y0 + (self.y1 - self.y0) * iy as f64 / (self.ny - 1) as f64;
            for ix in 0..self.nx {
                let x = self.x0 + (self.x1 - self.x0) * ix as f64 / (self.nx - 1) as f64;
                out.push_str(&format!(
                    "{:.12},{:.12},{:.12}\n",
                    x,
                    y,
                    self.value(ix, iy)
                ));
            }
        }
        out
    }

    /// Plain-text grayscale image (P2), depth linearly rescaled to 0..=255
    /// with the grid minimum mapped to 0.
    pub fn to_pgm(&self) -> String {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = format!("P2\n{} {}\n255\n", self.nx, self.ny);
        for iy in 0..self.ny {
            let row: Vec<String> = (0..self.nx)
                .map(|ix| {
                    let v = (self.value(ix, iy) - lo) / span;
                    format!("{}", (v * 255.0).round() as u32)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_has_five_sites_and_two_triangles() {
        let g = LatticeGraph::bowtie(1, 1).unwrap();
        assert_eq!(g.site_count(), 5);
        assert_eq!(g.triangles().len(), 2);
        let shared: Vec<usize> = g.triangles()[0]
            .iter()
            .filter(|l| g.triangles()[1].contains(l))
            .copied()
            .collect();
        assert_eq!(shared.len(), 1, "the two triangles share exactly one site");
    }

    #[test]
    fn neighboring_cells_share_one_corner() {
        let g = LatticeGraph::bowtie(1, 2).unwrap();
        assert_eq!(g.site_count(), 9);
        assert_eq!(g.triangles().len(), 4);
        let g = LatticeGraph::bowtie(2, 2).unwrap();
        assert_eq!(g.triangles().len(), 8);
        assert!(g.is_connected());
    }

    #[test]
    fn patches_up_to_six_by_six_are_well_formed() {
        for rows in 1..=6 {
            for cols in 1..=6 {
                let g = LatticeGraph::bowtie(rows, cols).unwrap();
                assert!(g.is_connected(), "{rows}x{cols} disconnected");
                assert_eq!(g.triangles().len(), 2 * rows * cols);
                let mut seen = BTreeSet::new();
                for t in g.triangles() {
                    assert!(seen.insert(*t), "duplicate triangle in {rows}x{cols}");
                }
                let mut coords = BTreeSet::new();
                for s in g.sites() {
                    let key = ((s.x * 64.0).round() as i64, (s.y * 64.0).round() as i64);
                    assert!(coords.insert(key), "coincident sites in {rows}x{cols}");
                }
                let side = 2.0 / 3f64.sqrt();
                for t in g.triangles() {
                    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                        let sa = g.site(t[a]).unwrap();
                        let sb = g.site(t[b]).unwrap();
                        let d = ((sa.x - sb.x).powi(2) + (sa.y - sb.y).powi(2)).sqrt();
                        assert!((d - side).abs() < 1e-12, "triangle side {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn custom_graph_rejects_malformed_input() {
        let site = |label, x, y| Site { label, x, y };
        let sites = vec![site(1, 0.0, 0.0), site(2, 1.0, 0.0), site(3, 0.5, 1.0)];
        assert!(LatticeGraph::custom(sites.clone(), vec![[1, 2, 2]], vec![]).is_err());
        assert!(LatticeGraph::custom(sites.clone(), vec![[1, 2, 4]], vec![]).is_err());
        assert!(
            LatticeGraph::custom(sites.clone(), vec![[1, 2, 3], [3, 2, 1]], vec![]).is_err(),
            "same triangle twice"
        );
        assert!(
            LatticeGraph::custom(sites.clone(), vec![[1, 2, 3]], vec![[1, 2]]).is_err(),
            "link duplicating a triangle edge"
        );
        assert!(LatticeGraph::custom(
            vec![site(1, 0.0, 0.0), site(3, 1.0, 0.0)],
            vec![],
            vec![]
        )
        .is_err());
        assert!(LatticeGraph::custom(sites, vec![[1, 2, 3]], vec![]).is_ok());
    }

    #[test]
    fn graph_json_round_trip() {
        let g = LatticeGraph::bowtie(1, 2).unwrap();
        let back = LatticeGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn path_assignment_marks_the_rest_decoupled() {
        let g = LatticeGraph::bowtie(1, 1).unwrap();
        let a = assignment_from_path(&g, &[1, 3], &[5]).unwrap();
        assert_eq!(a.get(1), Some(SiteInit::Plus));
        assert_eq!(a.get(3), Some(SiteInit::Plus));
        assert_eq!(a.get(5), Some(SiteInit::One));
        assert_eq!(a.get(2), Some(SiteInit::Zero));
        assert_eq!(a.to_inits().len(), 5);
        assert!(assignment_from_path(&g, &[1], &[1]).is_err());
        assert!(assignment_from_path(&g, &[9], &[]).is_err());
    }

    #[test]
    fn potential_hits_its_pinned_corner_values() {
        let f = PotentialField::new(1.0, 1.0, 2.0).unwrap();
        assert!((f.sample(0.0, 0.0) - 2.0 * f.v2).abs() < 1e-12);
        assert!((f.sample(0.0, f.wavelength / 2.0) - (2.0 * f.v1 + 2.0 * f.v2)).abs() < 1e-12);
        let f = PotentialField::new(3.0, 0.5, 2.0).unwrap();
        assert!((f.sample(0.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((f.sample(0.0, 1.0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn potential_is_periodic_in_both_directions() {
        let f = PotentialField::new(1.3, 0.7, 2.0).unwrap();
        let px = f.wavelength / 3f64.sqrt();
        let py = f.wavelength;
        for &(x, y) in &[(0.1, 0.2), (0.7, -0.4), (-1.3, 2.2)] {
            assert!((f.sample(x, y) - f.sample(x + px, y)).abs() < 1e-9);
            assert!((f.sample(x, y) - f.sample(x, y + py)).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_sampling_and_pgm_shape() {
        let f = PotentialField::new(1.0, 1.0, 2.0).unwrap();
        let g = f.grid(0.0, 1.0, 0.0, 1.0, 3, 2).unwrap();
        assert_eq!(g.values.len(), 6);
        assert!((g.value(0, 0) - f.sample(0.0, 0.0)).abs() < 1e-12);
        assert!((g.value(2, 1) - f.sample(1.0, 1.0)).abs() < 1e-12);
        let pgm = g.to_pgm();
        let mut lines = pgm.lines();
        assert_eq!(lines.next(), Some("P2"));
        assert_eq!(lines.next(), Some("3 2"));
        assert_eq!(lines.next(), Some("255"));
        assert_eq!(pgm.lines().count(), 5);
        assert!(f.grid(0.0, 1.0, 0.0, 1.0, 1, 5).is_err());
        let csv = g.to_csv();
        assert!(csv.starts_with("x,y,V\n"));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn removal_footprint_collects_nearby_sites() {
        let g = LatticeGraph::bowtie(1, 1).unwrap();
        // Center on the shared site: only it falls inside a tight waist.
        let m = g.site(3).unwrap().clone();
        let hit = g.sites_within(m.x, m.y, 0.5).unwrap();
        assert_eq!(hit, vec![3]);
        let all = g.sites_within(m.x, m.y, 10.0).unwrap();
        assert_eq!(all.len(), 5);
        assert!(g.sites_within(0.0, 0.0, -1.0).is_err());
    }
}
