//! Dense state vectors over the links of a spatial surface, and the small
//! operators that act on them.
//!
//! A surface with `2N` slots carries one two-valued field per slot, so states
//! live in dimension `2^(2N)`. Basis index bit `k` is the field value on slot
//! `k` (slot 0 is the least significant bit). Two-slot operators use the
//! local basis `|b_second, b_first>` with index `b_first + 2 * b_second`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, VertexId};

/// Tolerance for the structural checks in this module (unitarity, norms).
pub const OPERATOR_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Measurement strength. 0 is a projective measurement of every link field,
/// 1 switches the measurements off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling(f64);

impl Coupling {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::CouplingOutOfRange { value });
        }
        Ok(Coupling(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `x^d` with the convention `x^0 = 1` even at `x = 0`.
    pub fn pow(self, d: usize) -> f64 {
        if d == 0 {
            1.0
        } else {
            self.0.powi(d as i32)
        }
    }
}

/// State of the field on one spatial surface. Not necessarily normalized:
/// conditioning on field outcomes shrinks the norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceState {
    amps: Vec<Complex64>,
}

impl SurfaceState {
    /// Wraps an amplitude vector. The length must be a power of four, one
    /// two-valued field per slot on a surface of `2N` slots.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        let ok = dim >= 4 && dim.is_power_of_two() && dim.trailing_zeros() % 2 == 0;
        if !ok {
            return Err(Error::NotSurfaceDimension { dim });
        }
        Ok(SurfaceState { amps })
    }

    /// Basis state with the field on slot `k` given by bit `k` of `bits`.
    pub fn basis(num_links: usize, bits: u64) -> Result<Self> {
        if num_links == 0 || num_links % 2 != 0 || num_links > 32 {
            return Err(Error::NotSurfaceDimension {
                dim: 1usize.checked_shl(num_links as u32).unwrap_or(usize::MAX),
            });
        }
        if bits >> num_links != 0 {
            return Err(Error::BitsOutOfRange {
                bits,
                extent: num_links,
            });
        }
        let mut amps = vec![ZERO; 1 << num_links];
        amps[bits as usize] = ONE;
        Ok(SurfaceState { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn num_links(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, c: Complex64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }
}

/// `<a|b>`, conjugate-linear in the first argument.
pub fn inner_product(a: &SurfaceState, b: &SurfaceState) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::WrongDimension {
            got: b.dim(),
            expected: a.dim(),
        });
    }
    Ok(dot(&a.amps, &b.amps))
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// A 2x2 operator aimed at a single slot: projectors and Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkOperator {
    m: [[Complex64; 2]; 2],
}

impl LinkOperator {
    pub fn new(m: [[Complex64; 2]; 2]) -> Self {
        LinkOperator { m }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }
}

/// Projector onto field value `value` on one link.
pub fn projector(value: u8) -> LinkOperator {
    debug_assert!(value <= 1);
    let mut m = [[ZERO; 2]; 2];
    m[value as usize][value as usize] = ONE;
    LinkOperator::new(m)
}

/// Kraus operator for reading `value` off one link at strength `x`:
/// diag(1, x) / sqrt(1 + x^2) for value 0 and diag(x, 1) / sqrt(1 + x^2)
/// for value 1. The two together resolve the identity.
pub fn make_kraus(value: u8, x: Coupling) -> LinkOperator {
    debug_assert!(value <= 1);
    let s = (1.0 + x.value() * x.value()).sqrt();
    let hit = Complex64::new(1.0 / s, 0.0);
    let miss = Complex64::new(x.value() / s, 0.0);
    let mut m = [[ZERO; 2]; 2];
    m[0][0] = if value == 0 { hit } else { miss };
    m[1][1] = if value == 1 { hit } else { miss };
    LinkOperator::new(m)
}

/// A 4x4 unitary applied at a vertex, coupling the two ingoing link fields to
/// the two outgoing ones. Local basis: left slot is the low bit.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexUnitary {
    m: [[Complex64; 4]; 4],
}

impl VertexUnitary {
    /// Accepts any matrix that is unitary within [`OPERATOR_TOL`].
    pub fn new(m: [[Complex64; 4]; 4]) -> Result<Self> {
        let defect = unitarity_defect(&m);
        if defect > OPERATOR_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(VertexUnitary { m })
    }

    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        VertexUnitary { m }
    }

    /// Exchanges the two field values.
    pub fn swap() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for col in 0..4 {
            let row = (col >> 1) | ((col & 1) << 1);
            m[row][col] = ONE;
        }
        VertexUnitary { m }
    }

    /// Independent real rotations of the left and right field, by `theta_l`
    /// and `theta_r`.
    pub fn rotation_pair(theta_l: f64, theta_r: f64) -> Self {
        let r = |t: f64| {
            [
                [Complex64::new(t.cos(), 0.0), Complex64::new(-t.sin(), 0.0)],
                [Complex64::new(t.sin(), 0.0), Complex64::new(t.cos(), 0.0)],
            ]
        };
        let (rl, rr) = (r(theta_l), r(theta_r));
        let mut m = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = rl[i & 1][j & 1] * rr[i >> 1][j >> 1];
            }
        }
        VertexUnitary { m }
    }

    /// Seeded random unitary: Gram-Schmidt on a random complex matrix.
    /// The same seed always gives the same matrix.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        loop {
            let mut cols = [[ZERO; 4]; 4];
            for col in &mut cols {
                for e in col.iter_mut() {
                    *e = Complex64::new(
                        2.0 * rng.random::<f64>() - 1.0,
                        2.0 * rng.random::<f64>() - 1.0,
                    );
                }
            }
            if let Some(m) = gram_schmidt(cols) {
                return VertexUnitary { m };
            }
        }
    }

    pub fn matrix(&self) -> &[[Complex64; 4]; 4] {
        &self.m
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.m)
    }
}

/// Orthonormalizes the columns; `None` if the input was near-singular.
fn gram_schmidt(cols: [[Complex64; 4]; 4]) -> Option<[[Complex64; 4]; 4]> {
    let mut q: Vec<[Complex64; 4]> = Vec::with_capacity(4);
    for c in 0..4 {
        let mut v = [ZERO; 4];
        for r in 0..4 {
            v[r] = cols[c][r];
        }
        // Two passes of re-orthogonalization keep the defect near machine eps.
        for _ in 0..2 {
            for prev in &q {
                let ov = dot(prev, &v);
                for r in 0..4 {
                    v[r] -= ov * prev[r];
                }
            }
        }
        let n = dot(&v, &v).re.sqrt();
        if n < 1e-8 {
            return None;
        }
        for e in &mut v {
            *e /= n;
        }
        q.push(v);
    }
    let mut m = [[ZERO; 4]; 4];
    for (c, col) in q.iter().enumerate() {
        for r in 0..4 {
            m[r][c] = col[r];
        }
    }
    Some(m)
}

pub(crate) fn unitarity_defect(m: &[[Complex64; 4]; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += m[k][i].conj() * m[k][j];
            }
            let want = if i == j { ONE } else { ZERO };
            worst = worst.max((acc - want).norm());
        }
    }
    worst
}

/// The 4x4 unitary entangling one link field (low bit) with a fresh
/// environment qubit (high bit) at strength `x`:
///
/// ```text
/// |f, 0>  ->  ( x^(f != 0) |f, 0> + x^(f != 1) |f, 1> ) / sqrt(1 + x^2)
/// |f, 1>  ->  ( x^(f != 1) |f, 0> - x^(f != 0) |f, 1> ) / sqrt(1 + x^2)
/// ```
///
/// The field value passes through untouched; only the environment turns.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMeasurementUnitary {
    m: [[Complex64; 4]; 4],
}

pub fn make_partial_measurement(x: Coupling) -> PartialMeasurementUnitary {
    let s = (1.0 + x.value() * x.value()).sqrt();
    let a = Complex64::new(1.0 / s, 0.0);
    let b = Complex64::new(x.value() / s, 0.0);
    let mut m = [[ZERO; 4]; 4];
    // Columns indexed by (field, env in), rows by (field, env out).
    m[0][0] = a; // |0,0> -> |0,0> + x |0,1>
    m[2][0] = b;
    m[1][1] = b; // |1,0> -> x |1,0> + |1,1>
    m[3][1] = a;
    m[0][2] = b; // |0,1> -> x |0,0> - |0,1>
    m[2][2] = -a;
    m[1][3] = a; // |1,1> -> |1,0> - x |1,1>
    m[3][3] = -b;
    PartialMeasurementUnitary { m }
}

impl PartialMeasurementUnitary {
    pub fn matrix(&self) -> &[[Complex64; 4]; 4] {
        &self.m
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.m)
    }
}

/// Applies a 2x2 operator to bit position `bit` of a raw amplitude vector.
pub(crate) fn apply_one_bit(amps: &mut [Complex64], bit: usize, m: &[[Complex64; 2]; 2]) {
    let mask = 1usize << bit;
    for i in 0..amps.len() {
        if i & mask == 0 {
            let (a0, a1) = (amps[i], amps[i | mask]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// Applies a 4x4 operator to bit positions (`bit_a`, `bit_b`) of a raw
/// amplitude vector; `bit_a` is the low bit of the local index.
pub(crate) fn apply_two_bit(
    amps: &mut [Complex64],
    bit_a: usize,
    bit_b: usize,
    m: &[[Complex64; 4]; 4],
) {
    debug_assert_ne!(bit_a, bit_b);
    let ma = 1usize << bit_a;
    let mb = 1usize << bit_b;
    for i in 0..amps.len() {
        if i & ma == 0 && i & mb == 0 {
            let idx = [i, i | ma, i | mb, i | ma | mb];
            let old = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for (r, &target) in idx.iter().enumerate() {
                let mut acc = ZERO;
                for c in 0..4 {
                    acc += m[r][c] * old[c];
                }
                amps[target] = acc;
            }
        }
    }
}

/// Applies `op` to the field on slot `slot`.
pub fn apply_link_operator(state: &mut SurfaceState, slot: usize, op: &LinkOperator) -> Result<()> {
    if slot >= state.num_links() {
        return Err(Error::SlotOutOfRange {
            slot,
            slots: state.num_links(),
        });
    }
    apply_one_bit(state.amps_mut(), slot, &op.m);
    Ok(())
}

/// Applies the vertex unitary of `vertex` to the two slots its ingoing links
/// occupy (left slot low).
pub fn apply_vertex_unitary(
    state: &mut SurfaceState,
    geometry: &LatticeGeometry,
    vertex: VertexId,
    u: &VertexUnitary,
) -> Result<()> {
    if state.num_links() != geometry.num_slots() {
        return Err(Error::WrongDimension {
            got: state.dim(),
            expected: 1usize << geometry.num_slots(),
        });
    }
    let v = geometry.vertex(vertex)?;
    apply_two_bit(state.amps_mut(), v.left_slot, v.right_slot, &u.m);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_lattice, LatticeSpec};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mat_mul(a: &[[Complex64; 4]; 4], b: &[[Complex64; 4]; 4]) -> [[Complex64; 4]; 4] {
        let mut out = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn kraus_at_half_strength() {
        let x = Coupling::new(0.5).unwrap();
        let j0 = make_kraus(0, x);
        assert_relative_eq!(j0.matrix()[0][0].re, 0.894427, max_relative = 1e-6);
        assert_relative_eq!(j0.matrix()[1][1].re, 0.447214, max_relative = 1e-6);
        assert_eq!(j0.matrix()[0][1], ZERO);
    }

    #[test]
    fn kraus_pair_resolves_identity() {
        for &xv in &[0.0, 0.3, 0.7, 1.0] {
            let x = Coupling::new(xv).unwrap();
            let (j0, j1) = (make_kraus(0, x), make_kraus(1, x));
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = ZERO;
                    for k in 0..2 {
                        acc += j0.matrix()[k][i].conj() * j0.matrix()[k][j];
                        acc += j1.matrix()[k][i].conj() * j1.matrix()[k][j];
                    }
                    let want = if i == j { ONE } else { ZERO };
                    assert!((acc - want).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn kraus_at_zero_strength_is_a_projector() {
        let x = Coupling::new(0.0).unwrap();
        assert_eq!(make_kraus(0, x), projector(0));
        assert_eq!(make_kraus(1, x), projector(1));
    }

    #[test]
    fn coupling_range_is_enforced() {
        assert!(Coupling::new(-0.1).is_err());
        assert!(Coupling::new(1.1).is_err());
        assert!(Coupling::new(f64::NAN).is_err());
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        let x = Coupling::new(0.0).unwrap();
        assert_eq!(x.pow(0), 1.0);
        assert_eq!(x.pow(3), 0.0);
    }

    #[test]
    fn swap_exchanges_basis_bits() {
        let mut st = SurfaceState::basis(2, 0b01).unwrap();
        apply_two_bit(st.amps_mut(), 0, 1, VertexUnitary::swap().matrix());
        assert_eq!(st.amplitudes()[0b10], ONE);
        assert_eq!(st.amplitudes()[0b01], ZERO);
    }

    #[test]
    fn rotation_pair_touches_only_its_factor() {
        let u = VertexUnitary::rotation_pair(0.3, 0.0);
        let mut st = SurfaceState::basis(2, 0b00).unwrap();
        apply_two_bit(st.amps_mut(), 0, 1, u.matrix());
        assert_relative_eq!(st.amplitudes()[0b00].re, 0.3f64.cos(), epsilon = 1e-15);
        assert_relative_eq!(st.amplitudes()[0b01].re, 0.3f64.sin(), epsilon = 1e-15);
        assert_eq!(st.amplitudes()[0b10], ZERO);
        assert_eq!(st.amplitudes()[0b11], ZERO);
    }

    #[test]
    fn random_unitary_is_seeded_and_unitary() {
        let a = VertexUnitary::random(42);
        let b = VertexUnitary::random(42);
        let other = VertexUnitary::random(43);
        assert_eq!(a, b);
        assert_ne!(a, other);
        assert!(a.unitarity_defect() < 1e-12);
        assert!(other.unitarity_defect() < 1e-12);
    }

    #[test]
    fn explicit_matrices_are_checked() {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = c(1.1, 0.0);
        }
        assert!(matches!(
            VertexUnitary::new(m),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn partial_measurement_is_unitary_and_copies_at_full_strength() {
        for &xv in &[0.0, 0.3, 0.7, 1.0] {
            let u = make_partial_measurement(Coupling::new(xv).unwrap());
            assert!(u.unitarity_defect() < 1e-12);
        }
        // x = 0: environment records the field exactly.
        let u = make_partial_measurement(Coupling::new(0.0).unwrap());
        assert_eq!(u.matrix()[0][0], ONE); // |0,0> -> |0,0>
        assert_eq!(u.matrix()[3][1], ONE); // |1,0> -> |1,1>
    }

    #[test]
    fn partial_measurement_commutes_with_field_projectors() {
        for &xv in &[0.0, 0.3, 1.0] {
            let u = make_partial_measurement(Coupling::new(xv).unwrap());
            for v in 0..2u8 {
                // P(v) on the field factor, identity on the environment.
                let mut p = [[ZERO; 4]; 4];
                for i in 0..4 {
                    if (i & 1) as u8 == v {
                        p[i][i] = ONE;
                    }
                }
                let pu = mat_mul(&p, u.matrix());
                let up = mat_mul(u.matrix(), &p);
                for i in 0..4 {
                    for j in 0..4 {
                        assert!((pu[i][j] - up[i][j]).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_the_first_slot() {
        let a = SurfaceState::from_amplitudes(vec![c(0.0, 1.0), ZERO, ZERO, ZERO]).unwrap();
        let b = SurfaceState::from_amplitudes(vec![ONE, ZERO, ZERO, ZERO]).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap(), c(0.0, -1.0));
        assert_eq!(inner_product(&b, &a).unwrap(), c(0.0, 1.0));
    }

    #[test]
    fn dimension_checks() {
        assert!(SurfaceState::from_amplitudes(vec![ONE; 8]).is_err());
        assert!(SurfaceState::from_amplitudes(vec![ONE; 2]).is_err());
        let a = SurfaceState::basis(2, 0).unwrap();
        let b = SurfaceState::basis(4, 0).unwrap();
        assert!(inner_product(&a, &b).is_err());
    }

    #[test]
    fn vertex_unitary_lands_on_the_vertex_slots() {
        let g = build_lattice(LatticeSpec { width: 2, depth: 4 }).unwrap();
        // v2 has slots (2, 1): swapping moves slot-2 excitation to slot 1.
        let mut st = SurfaceState::basis(4, 0b0100).unwrap();
        apply_vertex_unitary(&mut st, &g, VertexId(2), &VertexUnitary::swap()).unwrap();
        assert_eq!(st.amplitudes()[0b0010], ONE);
    }

    #[test]
    fn unitaries_preserve_norm() {
        let u = VertexUnitary::random(7);
        let mut st = SurfaceState::from_amplitudes(vec![
            c(0.5, 0.0),
            c(0.0, 0.5),
            c(-0.5, 0.0),
            c(0.0, -0.5),
        ])
        .unwrap();
        apply_two_bit(st.amps_mut(), 0, 1, u.matrix());
        assert_relative_eq!(st.norm(), 1.0, epsilon = 1e-12);
    }
}
