//! Brute-force blade-by-blade product, independent of the fast kernel.
//!
//! Blades are bitmasks over `{e1, e2, e3}`; the sign of a product comes from
//! counting the transpositions needed to bring the concatenated factors into
//! ascending order. Every basis vector squares to `+1`.

use super::Multivector;

/// `(bitmask, sign)` of each storage slot relative to the ascending blade.
/// `e31 = -e13` is the only slot stored against ascending order.
pub const SLOTS: [(u8, f64); 8] = [
    (0b000, 1.0),
    (0b001, 1.0),
    (0b010, 1.0),
    (0b100, 1.0),
    (0b110, 1.0),
    (0b101, -1.0),
    (0b011, 1.0),
    (0b111, 1.0),
];

fn reorder_sign(a: u8, b: u8) -> f64 {
    let mut a = a >> 1;
    let mut swaps = 0;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn slot_of(mask: u8) -> usize {
    SLOTS.iter().position(|&(m, _)| m == mask).unwrap()
}

pub fn reference_gp(a: &Multivector, b: &Multivector) -> Multivector {
    let mut out = [0.0; 8];
    for (i, &(ma, sa)) in SLOTS.iter().enumerate() {
        for (j, &(mb, sb)) in SLOTS.iter().enumerate() {
            let coef = a.0[i] * b.0[j];
            if coef == 0.0 {
                continue;
            }
            let mask = ma ^ mb;
            let k = slot_of(mask);
            out[k] += coef * sa * sb * reorder_sign(ma, mb) * SLOTS[k].1;
        }
    }
    Multivector(out)
}
