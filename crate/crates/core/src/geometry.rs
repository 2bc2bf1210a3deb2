//! Rotated surface code layout.
//!
//! Data qubits sit on a `d x d` grid at integer positions `(row, col)`.
//! Ancillas sit on plaquette corners `(i, j)` with `0 <= i, j <= d`; a corner
//! touches the data qubits `(i-1, j-1)`, `(i-1, j)`, `(i, j-1)` and `(i, j)`
//! that lie inside the grid. Bulk corners alternate basis by `(i + j) % 2`,
//! the top and bottom edges carry weight-2 Z checks and the left and right
//! edges carry weight-2 X checks.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn flipped(self) -> Basis {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }
}

/// A stabilizer plaquette. `corner` is the plaquette center in corner units,
/// i.e. the half-integer position `(corner.0 - 0.5, corner.1 - 0.5)` in data
/// coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ancilla {
    pub corner: (usize, usize),
    pub basis: Basis,
    /// Data-qubit indices in `[NW, NE, SW, SE]` order; `None` where the
    /// plaquette is cut by a boundary.
    pub corners: [Option<usize>; 4],
}

impl Ancilla {
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.corners.iter().flatten().copied()
    }

    pub fn weight(&self) -> usize {
        self.support().count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeLayout {
    pub d: usize,
    pub data_qubits: Vec<(usize, usize)>,
    /// Canonical order: Z-basis plaquettes first, then X, each row-major by corner.
    pub ancillas: Vec<Ancilla>,
    pub logical_z_support: Vec<usize>,
    pub logical_x_support: Vec<usize>,
}

fn corner_basis(i: usize, j: usize) -> Basis {
    if (i + j) % 2 == 0 {
        Basis::Z
    } else {
        Basis::X
    }
}

impl CodeLayout {
    pub fn new(d: usize) -> Result<Self> {
        if d < 3 || d % 2 == 0 {
            return Err(Error::InvalidDistance(d));
        }
        let data_qubits = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).collect();
        let data_index = |r: isize, c: isize| -> Option<usize> {
            (r >= 0 && c >= 0 && (r as usize) < d && (c as usize) < d)
                .then(|| r as usize * d + c as usize)
        };

        let mut ancillas = Vec::with_capacity(d * d - 1);
        for i in 0..=d {
            for j in 0..=d {
                let basis = corner_basis(i, j);
                let on_row_edge = i == 0 || i == d;
                let on_col_edge = j == 0 || j == d;
                let keep = match (on_row_edge, on_col_edge) {
                    (false, false) => true,
                    (true, false) => basis == Basis::Z,
                    (false, true) => basis == Basis::X,
                    (true, true) => false,
                };
                if !keep {
                    continue;
                }
                let (r, c) = (i as isize, j as isize);
                let corners = [
                    data_index(r - 1, c - 1),
                    data_index(r - 1, c),
                    data_index(r, c - 1),
                    data_index(r, c),
                ];
                ancillas.push(Ancilla {
                    corner: (i, j),
                    basis,
                    corners,
                });
            }
        }
        ancillas.sort_by_key(|a| (a.basis, a.corner));

        let layout = CodeLayout {
            d,
            data_qubits,
            ancillas,
            logical_z_support: (0..d).map(|r| r * d).collect(),
            logical_x_support: (0..d).collect(),
        };
        debug_assert!(layout.check_commutation());
        Ok(layout)
    }

    pub fn num_data(&self) -> usize {
        self.data_qubits.len()
    }

    pub fn num_ancillas(&self) -> usize {
        self.ancillas.len()
    }

    /// Number of stabilizers of each basis, `(d^2 - 1) / 2`.
    pub fn half(&self) -> usize {
        self.ancillas.len() / 2
    }

    pub fn ancilla_at(&self, corner: (usize, usize)) -> Option<usize> {
        self.ancillas.iter().position(|a| a.corner == corner)
    }

    /// Quarter-turn of the lattice. Swaps the basis of every plaquette, which
    /// is how a transversal H is absorbed into the labelling.
    pub fn rotate_data(&self, q: usize) -> usize {
        let (r, c) = self.data_qubits[q];
        c * self.d + (self.d - 1 - r)
    }

    pub fn rotate_ancilla(&self, a: usize) -> usize {
        let (i, j) = self.ancillas[a].corner;
        self.ancilla_at((j, self.d - i))
            .expect("quarter-turn maps plaquettes onto plaquettes")
    }

    /// True iff the layout satisfies all stabilizer-code invariants.
    pub fn check_commutation(&self) -> bool {
        let d = self.d;
        if self.data_qubits.len() != d * d || self.ancillas.len() + 1 != d * d {
            return false;
        }
        let n_z = self.ancillas.iter().filter(|a| a.basis == Basis::Z).count();
        if 2 * n_z != self.ancillas.len() {
            return false;
        }
        let supports: Vec<Vec<usize>> = self.ancillas.iter().map(|a| a.support().collect()).collect();
        if supports.iter().any(|s| s.len() != 2 && s.len() != 4) {
            return false;
        }
        let overlap = |a: &[usize], b: &[usize]| a.iter().filter(|q| b.contains(q)).count();
        for (ia, a) in self.ancillas.iter().enumerate() {
            for (ib, b) in self.ancillas.iter().enumerate() {
                if a.basis != b.basis && overlap(&supports[ia], &supports[ib]) % 2 == 1 {
                    return false;
                }
            }
        }
        let (lz, lx) = (&self.logical_z_support, &self.logical_x_support);
        if lz.len() != d || lx.len() != d || overlap(lz, lx) % 2 == 0 {
            return false;
        }
        self.ancillas.iter().zip(&supports).all(|(a, s)| match a.basis {
            Basis::X => overlap(lz, s) % 2 == 0,
            Basis::Z => overlap(lx, s) % 2 == 0,
        })
    }
}

/// Builds the layout for odd distance `d >= 3`.
pub fn build_layout(d: usize) -> Result<CodeLayout> {
    CodeLayout::new(d)
}
