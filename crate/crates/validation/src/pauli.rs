//! Matrix representation of Cl(3,0) used as an independent product oracle.
//!
//! `e1, e2, e3` map to the Pauli matrices, so every element becomes a 2×2
//! complex matrix and the geometric product becomes matrix multiplication.

use hopfsim::ga::Multivector;

type C = (f64, f64);
type M = [[C; 2]; 2];

fn cmul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cadd(a: C, b: C) -> C {
    (a.0 + b.0, a.1 + b.1)
}

fn mmul(a: &M, b: &M) -> M {
    let mut out = [[(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j] = cadd(out[i][j], cmul(a[i][k], b[k][j]));
            }
        }
    }
    out
}

/// `a0 1 + a1 σ1 + a2 σ2 + a3 σ3` for complex `a_k`.
fn from_pauli(a: [C; 4]) -> M {
    let [a0, a1, a2, a3] = a;
    [
        [cadd(a0, a3), cadd(a1, cmul((0.0, -1.0), a2))],
        [cadd(a1, cmul((0.0, 1.0), a2)), cadd(a0, (-a3.0, -a3.1))],
    ]
}

fn to_pauli(m: &M) -> [C; 4] {
    let half = |c: C| (c.0 / 2.0, c.1 / 2.0);
    let a0 = half(cadd(m[0][0], m[1][1]));
    let a3 = half(cadd(m[0][0], (-m[1][1].0, -m[1][1].1)));
    let a1 = half(cadd(m[0][1], m[1][0]));
    // m01 = a1 - i a2, m10 = a1 + i a2  =>  a2 = (m10 - m01) / (2i)
    let d = cadd(m[1][0], (-m[0][1].0, -m[0][1].1));
    let a2 = (d.1 / 2.0, -d.0 / 2.0);
    [a0, a1, a2, a3]
}

/// Slots `1, e1, e2, e3, e23, e31, e12, e123`; `e23 = iσ1`, `e31 = iσ2`,
/// `e12 = iσ3`, `e123 = i`.
pub fn to_matrix(x: &Multivector) -> M {
    let c = x.0;
    from_pauli([(c[0], c[7]), (c[1], c[4]), (c[2], c[5]), (c[3], c[6])])
}

pub fn from_matrix(m: &M) -> Multivector {
    let [a0, a1, a2, a3] = to_pauli(m);
    Multivector([a0.0, a1.0, a2.0, a3.0, a1.1, a2.1, a3.1, a0.1])
}

pub fn matrix_gp(a: &Multivector, b: &Multivector) -> Multivector {
    from_matrix(&mmul(&to_matrix(a), &to_matrix(b)))
}
