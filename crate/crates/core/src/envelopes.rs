//! Convex constraint builders: SOC forms of the SINR constraints, the
//! phase-interval envelope of the non-anchor multicast SINR sets, the
//! McCormick envelope of the backhaul products and the perspective form of
//! the on/off power constraints.
//!
//! All builders expect channels whitened by the noise standard deviation,
//! so that `g_k(w) = sum_{i>=1} |h_k^H w_i|^2 + 1`.
//!
//! Complex beamformers are lowered to real coordinates through
//! [`BeamLayout`]: all real parts first, then all imaginary parts.

use std::f64::consts::PI;

use crate::conic::{Affine, ConicProgram, Constraint};
use crate::error::{Error, Result};
use crate::model::{Dims, C64};

/// Location of the real beamformer coordinates inside a program.
#[derive(Clone, Copy, Debug)]
pub struct BeamLayout {
    pub base: usize,
    pub dims: Dims,
}

impl BeamLayout {
    pub fn new(base: usize, dims: Dims) -> Self {
        BeamLayout { base, dims }
    }

    /// Number of real coordinates, `2 (K + 1) N L`.
    pub fn len(&self) -> usize {
        2 * self.dims.n_messages() * self.dims.vector_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn re(&self, k: usize, c: usize) -> usize {
        self.base + k * self.dims.vector_len() + c
    }

    pub fn im(&self, k: usize, c: usize) -> usize {
        self.base + (self.dims.n_messages() + k) * self.dims.vector_len() + c
    }

    /// Real coordinates of the block `w_{k,n}`, real parts then imaginary.
    pub fn block_coords(&self, k: usize, n: usize) -> Vec<usize> {
        let l = self.dims.n_antennas;
        let range = n * l..(n + 1) * l;
        range.clone().map(|c| self.re(k, c)).chain(range.map(|c| self.im(k, c))).collect()
    }

    /// `Re{h^H w_k}` as an affine function.
    pub fn inner_re(&self, h: &[C64], k: usize) -> Affine {
        let mut e = Affine::default();
        for (c, hc) in h.iter().enumerate() {
            e.add_term(self.re(k, c), hc.re);
            e.add_term(self.im(k, c), hc.im);
        }
        e
    }

    /// `Im{h^H w_k}` as an affine function.
    pub fn inner_im(&self, h: &[C64], k: usize) -> Affine {
        let mut e = Affine::default();
        for (c, hc) in h.iter().enumerate() {
            e.add_term(self.re(k, c), -hc.im);
            e.add_term(self.im(k, c), hc.re);
        }
        e
    }

    /// Entries whose Euclidean norm is `sqrt(g_k(w))`: real and imaginary
    /// parts of `h^H w_i` for every unicast message, then the unit noise.
    pub fn interference_plus_noise(&self, h: &[C64]) -> Vec<Affine> {
        let mut v = Vec::with_capacity(2 * self.dims.n_users + 1);
        for i in 1..=self.dims.n_users {
            v.push(self.inner_re(h, i));
            v.push(self.inner_im(h, i));
        }
        v.push(Affine::constant(1.0));
        v
    }

    /// Reads the complex beamformers back from a primal point.
    pub fn extract(&self, x: &[f64]) -> Vec<Vec<C64>> {
        (0..self.dims.n_messages())
            .map(|k| (0..self.dims.vector_len()).map(|c| C64::new(x[self.re(k, c)], x[self.im(k, c)])).collect())
            .collect()
    }

    /// Writes complex beamformers into a primal point.
    pub fn write(&self, w: &[Vec<C64>], x: &mut [f64]) {
        for (k, wk) in w.iter().enumerate() {
            for (c, v) in wk.iter().enumerate() {
                x[self.re(k, c)] = v.re;
                x[self.im(k, c)] = v.im;
            }
        }
    }
}

/// A batch of convex rows ready to be appended to a program.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnvelopeConstraints {
    pub rows: Vec<Constraint>,
}

impl EnvelopeConstraints {
    pub fn apply(self, program: &mut ConicProgram) {
        for r in self.rows {
            program.add(r);
        }
    }
}

fn scaled(v: &[Affine], c: f64) -> Vec<Affine> {
    v.iter().map(|e| e.clone().scaled(c)).collect()
}

/// `sqrt((2^r - 1) / 2^r)`.
pub fn unicast_coefficient(r_lo: f64) -> f64 {
    let p = r_lo.exp2();
    ((p - 1.0) / p).max(0.0).sqrt()
}

/// `sqrt(2^r - 1)`.
pub fn multicast_coefficient(r_lo: f64) -> f64 {
    (r_lo.exp2() - 1.0).max(0.0).sqrt()
}

/// `Re{h_k^H w_k} >= sqrt((2^r - 1)/2^r) sqrt(g_k(w))` and
/// `Im{h_k^H w_k} = 0`.
pub fn unicast_soc(layout: &BeamLayout, h: &[C64], k: usize, r_lo: f64) -> EnvelopeConstraints {
    let coef = unicast_coefficient(r_lo);
    EnvelopeConstraints {
        rows: vec![
            Constraint::Soc { bound: layout.inner_re(h, k), norm: scaled(&layout.interference_plus_noise(h), coef) },
            Constraint::Eq(layout.inner_im(h, k)),
        ],
    }
}

/// Anchor row for the last user:
/// `Re{h_K^H w_0} >= sqrt(2^r - 1) sqrt(g_K(w))` and `Im{h_K^H w_0} = 0`.
pub fn multicast_soc_anchor(layout: &BeamLayout, h_last: &[C64], r_lo: f64) -> EnvelopeConstraints {
    let coef = multicast_coefficient(r_lo);
    EnvelopeConstraints {
        rows: vec![
            Constraint::Soc {
                bound: layout.inner_re(h_last, 0),
                norm: scaled(&layout.interference_plus_noise(h_last), coef),
            },
            Constraint::Eq(layout.inner_im(h_last, 0)),
        ],
    }
}

/// Interval `[lo, hi]` for the argument of `h_k^H w_0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseInterval {
    pub lo: f64,
    pub hi: f64,
}

impl PhaseInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 2.0 * PI) {
            return Err(Error::InvalidArgument(format!("phase interval [{lo}, {hi}] outside [0, 2pi]")));
        }
        Ok(PhaseInterval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Midpoint of the chord between the two endpoint directions.
    pub fn chord_center(&self) -> (f64, f64) {
        ((self.lo.cos() + self.hi.cos()) / 2.0, (self.lo.sin() + self.hi.sin()) / 2.0)
    }

    pub fn contains(&self, angle: f64) -> bool {
        self.lo <= angle && angle <= self.hi
    }
}

/// Convex envelope of `{w : |h_k^H w_0| >= sqrt(2^r - 1) sqrt(g_k(w))}`
/// restricted to `arg(h_k^H w_0)` in the interval, or `None` when the
/// interval is wider than `pi` and the constraint is dropped.
pub fn multicast_envelope(
    layout: &BeamLayout,
    h: &[C64],
    r_lo: f64,
    interval: PhaseInterval,
) -> Option<EnvelopeConstraints> {
    if interval.width() > PI {
        return None;
    }
    let re = layout.inner_re(h, 0);
    let im = layout.inner_im(h, 0);
    let (x, y) = interval.chord_center();
    let (slo, clo) = interval.lo.sin_cos();
    let (shi, chi) = interval.hi.sin_cos();
    let mut rows = vec![
        // sin(lo) Re - cos(lo) Im <= 0
        Constraint::Le(re.clone().scaled(slo).add(&im.clone().scaled(-clo))),
        // sin(hi) Re - cos(hi) Im >= 0
        Constraint::Le(re.clone().scaled(-shi).add(&im.clone().scaled(chi))),
    ];
    let rho = x * x + y * y;
    if rho > 1e-12 {
        let coef = rho * multicast_coefficient(r_lo);
        rows.push(Constraint::Soc {
            bound: re.scaled(x).add(&im.scaled(y)),
            norm: scaled(&layout.interference_plus_noise(h), coef),
        });
    }
    Some(EnvelopeConstraints { rows })
}

/// Slacks of the three envelope rows for a given value `z = h_k^H w_0` and
/// `sqrt_g = sqrt(g_k(w))`; each is nonnegative when the row holds. The
/// third entry is `None` when that row is not emitted.
pub fn multicast_envelope_slacks(
    z: C64,
    sqrt_g: f64,
    r_lo: f64,
    interval: PhaseInterval,
) -> Option<[Option<f64>; 3]> {
    if interval.width() > PI {
        return None;
    }
    let (x, y) = interval.chord_center();
    let (slo, clo) = interval.lo.sin_cos();
    let (shi, chi) = interval.hi.sin_cos();
    let rho = x * x + y * y;
    let soc = (rho > 1e-12).then(|| x * z.re + y * z.im - rho * multicast_coefficient(r_lo) * sqrt_g);
    Some([Some(-(slo * z.re - clo * z.im)), Some(shi * z.re - chi * z.im), soc])
}

/// Convex envelope of the product `x * y` over a box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McCormick {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl McCormick {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        if !(x_lo <= x_hi && y_lo <= y_hi) {
            return Err(Error::InvalidArgument(format!(
                "McCormick box [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}] is empty"
            )));
        }
        Ok(McCormick { x_lo, x_hi, y_lo, y_hi })
    }

    /// `max{y_lo x + x_lo y - x_lo y_lo, y_hi x + x_hi y - x_hi y_hi}`.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let a = self.y_lo * x + self.x_lo * y - self.x_lo * self.y_lo;
        let b = self.y_hi * x + self.x_hi * y - self.x_hi * self.y_hi;
        a.max(b)
    }

    /// The two rows `minorant_i(x, y) - z <= 0` that make `z` an epigraph
    /// variable of the envelope.
    pub fn epigraph_rows(&self, x: usize, y: usize, z: usize) -> [Constraint; 2] {
        let lo = Affine::term(x, self.y_lo).with_term(y, self.x_lo).with_term(z, -1.0).plus(-self.x_lo * self.y_lo);
        let hi = Affine::term(x, self.y_hi).with_term(y, self.x_hi).with_term(z, -1.0).plus(-self.x_hi * self.y_hi);
        [Constraint::Le(lo), Constraint::Le(hi)]
    }
}

/// Perspective form of the power and cluster-link rows of BS `n`:
/// `sum_k v_{k,n} <= P_n` and `||w_{k,n}||^2 <= s_{k,n} v_{k,n}`.
///
/// `s_vars[k]` and `v_vars[k]` index the relaxed indicator and soft power
/// of message `k`; the caller keeps `v >= 0` through variable bounds.
pub fn perspective_power(
    layout: &BeamLayout,
    n: usize,
    s_vars: &[usize],
    v_vars: &[usize],
    p_n: f64,
) -> EnvelopeConstraints {
    let mut total = Affine::constant(-p_n);
    let mut rows = Vec::new();
    for k in 0..layout.dims.n_messages() {
        total.add_term(v_vars[k], 1.0);
        let block: Vec<Affine> = layout.block_coords(k, n).into_iter().map(Affine::var).collect();
        let s = Affine::var(s_vars[k]);
        let v = Affine::var(v_vars[k]);
        let half_diff = s.clone().scaled(0.5).add(&v.clone().scaled(-0.5));
        let half_sum = s.scaled(0.5).add(&v.scaled(0.5));
        let mut norm = block;
        norm.push(half_diff);
        rows.push(Constraint::Soc { bound: half_sum, norm });
    }
    rows.push(Constraint::Le(total));
    EnvelopeConstraints { rows }
}
