//! Lattice of null links in 1+1 dimensions, periodic in space.
//!
//! Vertices sit on rows above an initial spatial surface.  Row `r` holds the
//! vertices reached after `r` light-crossing steps; column `c` runs around the
//! spatial circle, so column arithmetic is mod `width`.  Every vertex has two
//! ingoing links (one left-going, one right-going) and two outgoing links.
//! The left-going link out of `(r, c)` feeds `(r+1, c)`; the right-going one
//! feeds `(r+1, c+1 mod width)`.
//!
//! A spatial surface always carries `2 * width` links.  Each link lives in a
//! fixed *slot*: evolving over a vertex replaces its two ingoing links by the
//! two outgoing ones in the same two slots.  Slots double as qubit indices in
//! the state vectors built on top of this module.

use crate::error::{Error, Result};

/// Orientation of a null link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Right,
}

/// Vertex identifier, 1-based in row-major order (row by row, columns left to
/// right). This numbering is fixed by the geometry; evolution orders are
/// separate [`NaturalLabelling`] values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

/// A link, named either by its slot on the initial surface or as one of the
/// two outgoing links of a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkId {
    Initial(usize),
    Out(VertexId, Direction),
}

/// Width (spatial extent) and depth (how many vertices will ever be evolved
/// over) of a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub width: usize,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: VertexId,
    /// Row above the initial surface, 1-based.
    pub row: usize,
    /// Column around the circle, 0-based.
    pub col: usize,
    pub left_in: LinkId,
    pub right_in: LinkId,
    /// Slot of the left-going ingoing link; the left-going outgoing link
    /// takes over the same slot.
    pub left_slot: usize,
    /// Same for the right-going pair.
    pub right_slot: usize,
}

/// The fixed part of a model: vertices, adjacency, slots and causal order.
#[derive(Debug, Clone)]
pub struct LatticeGeometry {
    spec: LatticeSpec,
    vertices: Vec<Vertex>,
    /// Strict causal order as a dense matrix: `reach[i * depth + j]` is true
    /// when vertex `i + 1` precedes vertex `j + 1` through a directed link
    /// path.
    reach: Vec<bool>,
}

pub fn build_lattice(spec: LatticeSpec) -> Result<LatticeGeometry> {
    if spec.width == 0 || spec.depth == 0 {
        return Err(Error::InvalidLatticeSpec {
            width: spec.width,
            depth: spec.depth,
        });
    }
    let n = spec.width;
    let mut vertices: Vec<Vertex> = Vec::with_capacity(spec.depth);
    for k in 0..spec.depth {
        let row = k / n + 1;
        let col = k % n;
        let right_col = (col + n - 1) % n;
        let (left_in, left_slot) = if row == 1 {
            (LinkId::Initial(2 * col), 2 * col)
        } else {
            let above = &vertices[k - n];
            (LinkId::Out(above.id, Direction::Left), above.left_slot)
        };
        let (right_in, right_slot) = if row == 1 {
            (LinkId::Initial(2 * right_col + 1), 2 * right_col + 1)
        } else {
            let src = &vertices[(row - 2) * n + right_col];
            (LinkId::Out(src.id, Direction::Right), src.right_slot)
        };
        vertices.push(Vertex {
            id: VertexId(k + 1),
            row,
            col,
            left_in,
            right_in,
            left_slot,
            right_slot,
        });
    }

    // Transitive closure over the two-predecessor adjacency.
    let d = spec.depth;
    let mut reach = vec![false; d * d];
    for k in 0..d {
        for link in [vertices[k].left_in, vertices[k].right_in] {
            if let LinkId::Out(VertexId(p), _) = link {
                reach[(p - 1) * d + k] = true;
            }
        }
    }
    for mid in 0..d {
        for a in 0..d {
            if reach[a * d + mid] {
                for b in 0..d {
                    if reach[mid * d + b] {
                        reach[a * d + b] = true;
                    }
                }
            }
        }
    }

    Ok(LatticeGeometry {
        spec,
        vertices,
        reach,
    })
}

impl LatticeGeometry {
    pub fn width(&self) -> usize {
        self.spec.width
    }

    pub fn depth(&self) -> usize {
        self.spec.depth
    }

    /// Number of slots on every spatial surface.
    pub fn num_slots(&self) -> usize {
        2 * self.spec.width
    }

    pub fn vertex(&self, id: VertexId) -> Result<&Vertex> {
        if id.0 == 0 || id.0 > self.vertices.len() {
            return Err(Error::VertexOutOfRange {
                id: id.0,
                depth: self.spec.depth,
            });
        }
        Ok(&self.vertices[id.0 - 1])
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Strict causal precedence through directed link paths.
    pub fn precedes(&self, a: VertexId, b: VertexId) -> bool {
        let d = self.spec.depth;
        debug_assert!(a.0 >= 1 && a.0 <= d && b.0 >= 1 && b.0 <= d);
        self.reach[(a.0 - 1) * d + (b.0 - 1)]
    }

    pub fn spacelike(&self, a: VertexId, b: VertexId) -> bool {
        a != b && !self.precedes(a, b) && !self.precedes(b, a)
    }

    /// Slot occupied by a link. Initial links own their slot; an outgoing
    /// link inherits the slot of the ingoing link it replaces.
    pub fn slot_of(&self, link: LinkId) -> Result<usize> {
        match link {
            LinkId::Initial(k) => {
                if k >= self.num_slots() {
                    return Err(Error::SlotOutOfRange {
                        slot: k,
                        slots: self.num_slots(),
                    });
                }
                Ok(k)
            }
            LinkId::Out(v, dir) => {
                let v = self.vertex(v)?;
                Ok(match dir {
                    Direction::Left => v.left_slot,
                    Direction::Right => v.right_slot,
                })
            }
        }
    }

    /// The default evolution order: vertices as numbered.
    pub fn row_major_labelling(&self) -> NaturalLabelling {
        NaturalLabelling {
            order: (1..=self.spec.depth).map(VertexId).collect(),
        }
    }
}

/// A linear extension of the causal order: the order in which vertices are
/// evolved over. Position `i` (1-based) holds the vertex evolved at step `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaturalLabelling {
    order: Vec<VertexId>,
}

/// Checks that `order` is a permutation of all vertices respecting the causal
/// order, scanning pairs `(i, j)` with `i < j` and reporting the first pair
/// where the vertex at the later position precedes the vertex at the earlier
/// one.
pub fn validate_labelling(geometry: &LatticeGeometry, order: &[usize]) -> Result<NaturalLabelling> {
    let depth = geometry.depth();
    if order.len() != depth {
        return Err(Error::LabellingWrongLength {
            got: order.len(),
            expected: depth,
        });
    }
    let mut seen = vec![false; depth + 1];
    for &id in order {
        if id == 0 || id > depth {
            return Err(Error::VertexOutOfRange { id, depth });
        }
        if seen[id] {
            return Err(Error::LabellingDuplicate { id });
        }
        seen[id] = true;
    }
    for j in 0..depth {
        for i in 0..j {
            if geometry.precedes(VertexId(order[j]), VertexId(order[i])) {
                return Err(Error::LabellingOrderViolation {
                    i: i + 1,
                    j: j + 1,
                    vertex_i: order[i],
                    vertex_j: order[j],
                });
            }
        }
    }
    Ok(NaturalLabelling {
        order: order.iter().map(|&id| VertexId(id)).collect(),
    })
}

impl NaturalLabelling {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Vertex evolved at step `i`, 1-based.
    pub fn vertex_at_step(&self, i: usize) -> VertexId {
        self.order[i - 1]
    }

    pub fn order(&self) -> &[VertexId] {
        &self.order
    }

    /// The link carrying label `a` under this labelling: labels `2i - 1` and
    /// `2i` name the left and right outgoing links of the step-`i` vertex.
    pub fn link(&self, a: usize) -> LinkId {
        let step = (a + 1) / 2;
        let v = self.vertex_at_step(step);
        if a % 2 == 1 {
            LinkId::Out(v, Direction::Left)
        } else {
            LinkId::Out(v, Direction::Right)
        }
    }

    /// Label of an outgoing link under this labelling, if its source vertex
    /// appears in the order.
    pub fn label_of(&self, link: LinkId) -> Option<usize> {
        match link {
            LinkId::Initial(_) => None,
            LinkId::Out(v, dir) => {
                let step = self.order.iter().position(|&w| w == v)? + 1;
                Some(match dir {
                    Direction::Left => 2 * step - 1,
                    Direction::Right => 2 * step,
                })
            }
        }
    }
}

/// The 2N links crossed by a spatial surface, indexed by slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialSurface {
    step: usize,
    links: Vec<LinkId>,
}

impl SpatialSurface {
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    pub fn link_at_slot(&self, slot: usize) -> Result<LinkId> {
        self.links
            .get(slot)
            .copied()
            .ok_or(Error::SlotOutOfRange {
                slot,
                slots: self.links.len(),
            })
    }
}

/// Surface after evolving over the first `n` vertices of the labelling.
pub fn surface_at(
    geometry: &LatticeGeometry,
    labelling: &NaturalLabelling,
    n: usize,
) -> Result<SpatialSurface> {
    if n > geometry.depth() {
        return Err(Error::StepOutOfRange {
            step: n,
            depth: geometry.depth(),
        });
    }
    let mut links: Vec<LinkId> = (0..geometry.num_slots()).map(LinkId::Initial).collect();
    for i in 1..=n {
        let v = geometry.vertex(labelling.vertex_at_step(i))?;
        debug_assert_eq!(links[v.left_slot], v.left_in, "left ingoing link missing");
        debug_assert_eq!(links[v.right_slot], v.right_in, "right ingoing link missing");
        links[v.left_slot] = LinkId::Out(v.id, Direction::Left);
        links[v.right_slot] = LinkId::Out(v.id, Direction::Right);
    }
    Ok(SpatialSurface { step: n, links })
}
