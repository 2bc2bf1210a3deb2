//! A single LSTM layer with hand-written reverse mode.
//!
//! Gate blocks are stacked in the order input, forget, cell, output, each
//! `hidden` rows tall, in both weight matrices and both bias vectors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayer {
    pub w_ih: DMatrix<f64>,
    pub w_hh: DMatrix<f64>,
    pub b_ih: DVector<f64>,
    pub b_hh: DVector<f64>,
}

/// `(c, h)` of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct CellState {
    pub c: DVector<f64>,
    pub h: DVector<f64>,
}

impl CellState {
    pub fn zeros(hidden: usize) -> Self {
        CellState {
            c: DVector::zeros(hidden),
            h: DVector::zeros(hidden),
        }
    }

    pub fn concat(a: &CellState, b: &CellState) -> CellState {
        CellState {
            c: concat(&a.c, &b.c),
            h: concat(&a.h, &b.h),
        }
    }

    /// Splits into the first and second half along the hidden dimension.
    pub fn split(&self) -> (CellState, CellState) {
        let (c0, c1) = split(&self.c);
        let (h0, h1) = split(&self.h);
        (CellState { c: c0, h: h0 }, CellState { c: c1, h: h1 })
    }

    pub fn add_assign(&mut self, other: &CellState) {
        self.c += &other.c;
        self.h += &other.h;
    }
}

pub fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

pub fn split(v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = v.len() / 2;
    (v.rows(0, n).into_owned(), v.rows(n, v.len() - n).into_owned())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Everything the backward pass needs from one forward step.
#[derive(Clone, Debug)]
pub struct LayerCache {
    x: DVector<f64>,
    prev: CellState,
    i: DVector<f64>,
    f: DVector<f64>,
    g: DVector<f64>,
    o: DVector<f64>,
    tanh_c: DVector<f64>,
}

impl LayerCache {
    pub fn gates(&self) -> [&DVector<f64>; 4] {
        [&self.i, &self.f, &self.g, &self.o]
    }
}

impl LstmLayer {
    pub fn zeros(in_size: usize, hidden: usize) -> Self {
        LstmLayer {
            w_ih: DMatrix::zeros(4 * hidden, in_size),
            w_hh: DMatrix::zeros(4 * hidden, hidden),
            b_ih: DVector::zeros(4 * hidden),
            b_hh: DVector::zeros(4 * hidden),
        }
    }

    /// Uniform in `(-1/sqrt(hidden), 1/sqrt(hidden))`.
    pub fn random<R: Rng + ?Sized>(in_size: usize, hidden: usize, rng: &mut R) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        let mut u = || rng.random_range(-k..k);
        LstmLayer {
            w_ih: DMatrix::from_fn(4 * hidden, in_size, |_, _| u()),
            w_hh: DMatrix::from_fn(4 * hidden, hidden, |_, _| u()),
            b_ih: DVector::from_fn(4 * hidden, |_, _| u()),
            b_hh: DVector::from_fn(4 * hidden, |_, _| u()),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn in_size(&self) -> usize {
        self.w_ih.ncols()
    }

    pub fn forward(&self, x: &DVector<f64>, state: &CellState) -> CellState {
        self.forward_cached(x, state).0
    }

    pub fn forward_cached(&self, x: &DVector<f64>, state: &CellState) -> (CellState, LayerCache) {
        let n = self.hidden();
        let mut pre = self.b_ih.clone();
        pre += &self.b_hh;
        pre.gemv(1.0, &self.w_ih, x, 1.0);
        pre.gemv(1.0, &self.w_hh, &state.h, 1.0);
        let i = pre.rows(0, n).map(sigmoid);
        let f = pre.rows(n, n).map(sigmoid);
        let g = pre.rows(2 * n, n).map(f64::tanh);
        let o = pre.rows(3 * n, n).map(sigmoid);
        let c = f.component_mul(&state.c) + i.component_mul(&g);
        let tanh_c = c.map(f64::tanh);
        let h = o.component_mul(&tanh_c);
        let cache = LayerCache {
            x: x.clone(),
            prev: state.clone(),
            i,
            f,
            g,
            o,
            tanh_c,
        };
        (CellState { c, h }, cache)
    }

    /// Accumulates parameter gradients into `grad` and returns
    /// `(d_input, d_previous_state)` given the gradient on the new state.
    pub fn backward(&self, cache: &LayerCache, d_out: &CellState, grad: &mut LstmLayer) -> (DVector<f64>, CellState) {
        let n = self.hidden();
        let LayerCache { x, prev, i, f, g, o, tanh_c } = cache;
        let d_o = d_out.h.component_mul(tanh_c);
        let dc = &d_out.c + d_out.h.component_mul(o).component_mul(&tanh_c.map(|t| 1.0 - t * t));
        let mut d_pre = DVector::zeros(4 * n);
        for k in 0..n {
            d_pre[k] = dc[k] * g[k] * i[k] * (1.0 - i[k]);
            d_pre[n + k] = dc[k] * prev.c[k] * f[k] * (1.0 - f[k]);
            d_pre[2 * n + k] = dc[k] * i[k] * (1.0 - g[k] * g[k]);
            d_pre[3 * n + k] = d_o[k] * o[k] * (1.0 - o[k]);
        }
        grad.w_ih.ger(1.0, &d_pre, x, 1.0);
        grad.w_hh.ger(1.0, &d_pre, &prev.h, 1.0);
        grad.b_ih += &d_pre;
        grad.b_hh += &d_pre;
        let mut dx = DVector::zeros(self.in_size());
        dx.gemv_tr(1.0, &self.w_ih, &d_pre, 0.0);
        let mut dh = DVector::zeros(n);
        dh.gemv_tr(1.0, &self.w_hh, &d_pre, 0.0);
        let d_prev = CellState {
            c: dc.component_mul(f),
            h: dh,
        };
        (dx, d_prev)
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [self.w_ih.as_slice(), self.w_hh.as_slice(), self.b_ih.as_slice(), self.b_hh.as_slice()]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w_ih.as_mut_slice(),
            self.w_hh.as_mut_slice(),
            self.b_ih.as_mut_slice(),
            self.b_hh.as_mut_slice(),
        ]
    }
}
