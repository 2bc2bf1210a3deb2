//! Aaronson-Gottesman stabilizer tableau, used as the noiseless reference and
//! as an independent oracle for frame propagation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::Bits;
use crate::circuit::{Gate1, Injection, Op, PhysicalCircuit};
use crate::sim::noise::Pauli;

/// Rows `0..n` are destabilizers, `n..2n` stabilizers, row `2n` is scratch.
#[derive(Clone, Debug)]
pub struct CliffordTableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

impl CliffordTableau {
    /// The all-|0> state.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        let rows = 2 * n + 1;
        let mut t = CliffordTableau {
            n,
            words,
            x: vec![0; rows * words],
            z: vec![0; rows * words],
            r: vec![false; rows],
        };
        for q in 0..n {
            t.x[q * words + q / 64] |= 1 << (q % 64);
            t.z[(n + q) * words + q / 64] |= 1 << (q % 64);
        }
        t
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn bit(v: &[u64], words: usize, row: usize, q: usize) -> bool {
        (v[row * words + q / 64] >> (q % 64)) & 1 == 1
    }

    #[inline]
    fn xb(&self, row: usize, q: usize) -> bool {
        Self::bit(&self.x, self.words, row, q)
    }

    #[inline]
    fn zb(&self, row: usize, q: usize) -> bool {
        Self::bit(&self.z, self.words, row, q)
    }

    pub fn h(&mut self, q: usize) {
        let (w, m) = (q / 64, 1u64 << (q % 64));
        for row in 0..2 * self.n {
            let i = row * self.words + w;
            let (xv, zv) = (self.x[i] & m, self.z[i] & m);
            if xv != 0 && zv != 0 {
                self.r[row] ^= true;
            }
            self.x[i] = (self.x[i] & !m) | zv;
            self.z[i] = (self.z[i] & !m) | xv;
        }
    }

    pub fn cx(&mut self, c: usize, t: usize) {
        for row in 0..2 * self.n {
            let (xc, zc, xt, zt) = (self.xb(row, c), self.zb(row, c), self.xb(row, t), self.zb(row, t));
            if xc && zt && (xt == zc) {
                self.r[row] ^= true;
            }
            if xc {
                self.x[row * self.words + t / 64] ^= 1 << (t % 64);
            }
            if zt {
                self.z[row * self.words + c / 64] ^= 1 << (c % 64);
            }
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        self.h(b);
        self.cx(a, b);
        self.h(b);
    }

    pub fn pauli(&mut self, q: usize, p: Pauli) {
        for row in 0..2 * self.n {
            let flip = (p.has_x() && self.zb(row, q)) ^ (p.has_z() && self.xb(row, q));
            self.r[row] ^= flip;
        }
    }

    /// Left-multiplies row `h` by row `i`, tracking the phase.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.words;
        let mut sum: i64 = 2 * (self.r[h] as i64) + 2 * (self.r[i] as i64);
        for k in 0..w {
            let (x1, z1) = (self.x[i * w + k], self.z[i * w + k]);
            let (x2, z2) = (self.x[h * w + k], self.z[h * w + k]);
            let y1 = x1 & z1;
            let xo = x1 & !z1;
            let zo = !x1 & z1;
            let plus = (y1 & z2 & !x2) | (xo & z2 & x2) | (zo & x2 & !z2);
            let minus = (y1 & x2 & !z2) | (xo & z2 & !x2) | (zo & x2 & z2);
            sum += plus.count_ones() as i64 - minus.count_ones() as i64;
            self.x[h * w + k] = x1 ^ x2;
            self.z[h * w + k] = z1 ^ z2;
        }
        self.r[h] = sum.rem_euclid(4) == 2;
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        let w = self.words;
        self.x.copy_within(src * w..(src + 1) * w, dst * w);
        self.z.copy_within(src * w..(src + 1) * w, dst * w);
        self.r[dst] = self.r[src];
    }

    fn clear_row(&mut self, row: usize) {
        let w = self.words;
        self.x[row * w..(row + 1) * w].fill(0);
        self.z[row * w..(row + 1) * w].fill(0);
        self.r[row] = false;
    }

    /// Z-basis measurement. Returns `(outcome, was_random)`; random outcomes
    /// are drawn from `rng`.
    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> (bool, bool) {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&row| self.xb(row, q)) {
            for row in 0..2 * n {
                if row != p && self.xb(row, q) {
                    self.rowsum(row, p);
                }
            }
            self.copy_row(p - n, p);
            self.clear_row(p);
            self.z[p * self.words + q / 64] |= 1 << (q % 64);
            let outcome: bool = rng.random();
            self.r[p] = outcome;
            (outcome, true)
        } else {
            let scratch = 2 * n;
            self.clear_row(scratch);
            for row in 0..n {
                if self.xb(row, q) {
                    self.rowsum(scratch, row + n);
                }
            }
            (self.r[scratch], false)
        }
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) {
        let (outcome, _) = self.measure(q, rng);
        if outcome {
            self.pauli(q, Pauli::X);
        }
    }

    /// Every destabilizer anticommutes with exactly its paired stabilizer and
    /// commutes with all other rows.
    pub fn is_valid(&self) -> bool {
        let n = self.n;
        let symplectic = |a: usize, b: usize| -> bool {
            let w = self.words;
            let mut acc = 0u32;
            for k in 0..w {
                acc += ((self.x[a * w + k] & self.z[b * w + k]) ^ (self.z[a * w + k] & self.x[b * w + k]))
                    .count_ones();
            }
            acc % 2 == 1
        };
        for a in 0..2 * n {
            for b in 0..2 * n {
                let expected = a != b && (a % n == b % n) && (a < n) != (b < n);
                if symplectic(a, b) != expected {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableauRecord {
    pub outcomes: Bits,
    /// Which measurement events were random given the preceding circuit.
    pub random: Bits,
}

/// Noiseless execution. Noise sites and flip probabilities are ignored;
/// random outcomes come from a stream seeded with `seed`.
pub fn tableau_run(circuit: &PhysicalCircuit, seed: u64) -> TableauRecord {
    tableau_run_injected(circuit, seed, &[])
}

/// As [`tableau_run`], with explicit Pauli gates applied after the given
/// instructions.
pub fn tableau_run_injected(circuit: &PhysicalCircuit, seed: u64, injections: &[Injection]) -> TableauRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tab = CliffordTableau::new(circuit.num_qubits);
    let mut outcomes = Bits::zeros(circuit.num_measurements);
    let mut random = Bits::zeros(circuit.num_measurements);
    let mut event = 0;
    let mut pending = injections.to_vec();
    pending.sort_by_key(|inj| inj.after_op);
    let mut next_inj = 0;

    for (idx, op) in circuit.ops.iter().enumerate() {
        match *op {
            Op::Gate1(Gate1::H, q) => tab.h(q),
            Op::Gate1(g, q) => {
                if let Some(p) = g.pauli() {
                    tab.pauli(q, p);
                }
            }
            Op::Cx(c, t) => tab.cx(c, t),
            Op::Cz(a, b) => tab.cz(a, b),
            Op::Reset { q, .. } => tab.reset(q, &mut rng),
            Op::Measure { q, .. } => {
                let (bit, was_random) = tab.measure(q, &mut rng);
                outcomes.set(event, bit);
                random.set(event, was_random);
                event += 1;
            }
            Op::Noise1 { .. } | Op::Noise2 { .. } => {}
        }
        while next_inj < pending.len() && pending[next_inj].after_op == idx {
            let inj = pending[next_inj];
            tab.pauli(inj.qubit, inj.pauli);
            next_inj += 1;
        }
    }
    TableauRecord { outcomes, random }
}
