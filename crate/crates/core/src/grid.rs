//! Uniform cell-centered rectangular grid with tagged boundary segments.
//!
//! Cells are numbered row-major, `id = j * nx + i`, with `i` along x and `j`
//! along y. All areas and volumes are per unit thickness in the third
//! direction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Edge::Left => [-1.0, 0.0],
            Edge::Right => [1.0, 0.0],
            Edge::Bottom => [0.0, -1.0],
            Edge::Top => [0.0, 1.0],
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Edge::Left => "left",
            Edge::Right => "right",
            Edge::Bottom => "bottom",
            Edge::Top => "top",
        };
        f.write_str(s)
    }
}

/// Condition carried by a boundary segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    /// Prescribed water pressure (Pa).
    Pressure { pressure: f64 },
    /// Prescribed total inflow velocity `q` (m/s, positive into the domain)
    /// together with the saturation and particle concentration of the
    /// injected fluid.
    Flux {
        inflow: f64,
        saturation: f64,
        concentration: f64,
    },
    NoFlow,
}

impl BoundaryCondition {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Pressure { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySegment {
    pub edge: Edge,
    /// Half-open range of cell indices along the edge; `None` is the whole edge.
    pub range: Option<(usize, usize)>,
    pub condition: BoundaryCondition,
}

impl BoundarySegment {
    pub fn whole(edge: Edge, condition: BoundaryCondition) -> Self {
        BoundarySegment {
            edge,
            range: None,
            condition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub owner: usize,
    pub neighbor: Option<usize>,
    /// Face length (m, per unit thickness).
    pub area: f64,
    /// Unit normal pointing out of the owner cell.
    pub normal: [f64; 2],
    /// Distance from the owner center to the neighbor center, or to the face
    /// for boundary faces.
    pub distance: f64,
    /// Index into the grid's segment list for boundary faces.
    pub segment: Option<usize>,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.neighbor.is_some()
    }

    /// 0 for faces normal to x, 1 for faces normal to y.
    pub fn axis(&self) -> usize {
        if self.normal[0] != 0.0 {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone)]
pub struct StructuredGrid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
    faces: Vec<Face>,
    segments: Vec<BoundarySegment>,
    cell_faces: Vec<Vec<usize>>,
}

impl StructuredGrid2D {
    /// Builds the grid and assigns every boundary face to exactly one segment.
    pub fn new(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        segments: Vec<BoundarySegment>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::config(format!(
                "grid needs at least one cell per direction, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::config(format!(
                "grid extents must be positive, got {lx} x {ly}"
            )));
        }

        let edge_len = |e: Edge| match e {
            Edge::Left | Edge::Right => ny,
            Edge::Bottom | Edge::Top => nx,
        };

        // owner segment per (edge, index)
        let mut cover: Vec<Vec<Option<usize>>> =
            Edge::ALL.iter().map(|&e| vec![None; edge_len(e)]).collect();
        for (s, seg) in segments.iter().enumerate() {
            let len = edge_len(seg.edge);
            let (a, b) = seg.range.unwrap_or((0, len));
            if a >= b || b > len {
                return Err(Error::config(format!(
                    "boundary segment on {} edge has invalid range {a}..{b} (edge has {len} faces)",
                    seg.edge
                )));
            }
            let slot = &mut cover[edge_slot(seg.edge)];
            for k in a..b {
                if let Some(prev) = slot[k] {
                    return Err(Error::config(format!(
                        "boundary segments {prev} and {s} overlap on {} edge at face {k}",
                        seg.edge
                    )));
                }
                slot[k] = Some(s);
            }
        }
        for e in Edge::ALL {
            if let Some(k) = cover[edge_slot(e)].iter().position(Option::is_none) {
                return Err(Error::config(format!(
                    "{e} edge is not fully covered by boundary segments (face {k} unassigned)"
                )));
            }
        }

        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let mut faces = Vec::with_capacity(nx * (ny + 1) + ny * (nx + 1));
        let seg_of = |e: Edge, k: usize| cover[edge_slot(e)][k];

        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if i == 0 {
                    faces.push(Face {
                        owner: c,
                        neighbor: None,
                        area: dy,
                        normal: Edge::Left.normal(),
                        distance: 0.5 * dx,
                        segment: seg_of(Edge::Left, j),
                    });
                }
                if j == 0 {
                    faces.push(Face {
                        owner: c,
                        neighbor: None,
                        area: dx,
                        normal: Edge::Bottom.normal(),
                        distance: 0.5 * dy,
                        segment: seg_of(Edge::Bottom, i),
                    });
                }
                faces.push(if i + 1 < nx {
                    Face {
                        owner: c,
                        neighbor: Some(c + 1),
                        area: dy,
                        normal: [1.0, 0.0],
                        distance: dx,
                        segment: None,
                    }
                } else {
                    Face {
                        owner: c,
                        neighbor: None,
                        area: dy,
                        normal: Edge::Right.normal(),
                        distance: 0.5 * dx,
                        segment: seg_of(Edge::Right, j),
                    }
                });
                faces.push(if j + 1 < ny {
                    Face {
                        owner: c,
                        neighbor: Some(c + nx),
                        area: dx,
                        normal: [0.0, 1.0],
                        distance: dy,
                        segment: None,
                    }
                } else {
                    Face {
                        owner: c,
                        neighbor: None,
                        area: dx,
                        normal: Edge::Top.normal(),
                        distance: 0.5 * dy,
                        segment: seg_of(Edge::Top, i),
                    }
                });
            }
        }

        let mut cell_faces = vec![Vec::with_capacity(4); nx * ny];
        for (f, face) in faces.iter().enumerate() {
            cell_faces[face.owner].push(f);
            if let Some(n) = face.neighbor {
                cell_faces[n].push(f);
            }
        }

        Ok(StructuredGrid2D {
            nx,
            ny,
            lx,
            ly,
            dx,
            dy,
            faces,
            segments,
            cell_faces,
        })
    }

    /// Grid with every edge closed.
    pub fn closed(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let segs = Edge::ALL
            .iter()
            .map(|&e| BoundarySegment::whole(e, BoundaryCondition::NoFlow))
            .collect();
        Self::new(nx, ny, lx, ly, segs)
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_id(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_ij(&self, id: usize) -> (usize, usize) {
        (id % self.nx, id / self.nx)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn cell_center(&self, id: usize) -> [f64; 2] {
        let (i, j) = self.cell_ij(id);
        [(i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn segments(&self) -> &[BoundarySegment] {
        &self.segments
    }

    pub fn segment_of(&self, face: &Face) -> Option<&BoundarySegment> {
        face.segment.map(|s| &self.segments[s])
    }

    /// Faces touching a cell, in ascending face index.
    pub fn faces_of(&self, cell: usize) -> &[usize] {
        &self.cell_faces[cell]
    }

    /// Interior faces as `(face index, owner, neighbor)`, row-major by owner
    /// and then x before y.
    pub fn interior_faces(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.faces
            .iter()
            .enumerate()
            .filter_map(|(f, face)| face.neighbor.map(|n| (f, face.owner, n)))
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = (usize, &Face)> + '_ {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, face)| face.neighbor.is_none())
    }

    /// Midpoint of a face.
    pub fn face_center(&self, face: &Face) -> [f64; 2] {
        let c = self.cell_center(face.owner);
        let h = if face.axis() == 0 { 0.5 * self.dx } else { 0.5 * self.dy };
        [c[0] + face.normal[0] * h, c[1] + face.normal[1] * h]
    }

    /// Total length of boundary faces whose segment condition satisfies `pred`.
    pub fn boundary_length(&self, pred: impl Fn(&BoundaryCondition) -> bool) -> f64 {
        self.boundary_faces()
            .filter(|(_, f)| self.segment_of(f).is_some_and(|s| pred(&s.condition)))
            .map(|(_, f)| f.area)
            .sum()
    }

    /// Cell ordering that numbers the shorter direction fastest, for banded
    /// factorizations. `perm[new] = old`.
    pub fn narrow_band_ordering(&self) -> Vec<usize> {
        if self.nx <= self.ny {
            (0..self.num_cells()).collect()
        } else {
            let mut perm = Vec::with_capacity(self.num_cells());
            for i in 0..self.nx {
                for j in 0..self.ny {
                    perm.push(self.cell_id(i, j));
                }
            }
            perm
        }
    }

    /// Index of the cell mirrored across the horizontal midline.
    pub fn mirror_y(&self, id: usize) -> usize {
        let (i, j) = self.cell_ij(id);
        self.cell_id(i, self.ny - 1 - j)
    }
}

fn edge_slot(e: Edge) -> usize {
    match e {
        Edge::Left => 0,
        Edge::Right => 1,
        Edge::Bottom => 2,
        Edge::Top => 3,
    }
}
