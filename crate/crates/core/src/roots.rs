//! Grid bracketing and bisection on a bounded open interval.

use std::sync::OnceLock;

/// Half-width of the logit grid. `expit(-28) ≈ 6.9e-13`, so the outermost
/// grid points sit just inside the default probability guard.
const LOGIT_SPAN: f64 = 28.0;

fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

const CACHED_POINTS: usize = 2048;

/// `expit` of the abscissae for the default grid size, computed once.
fn unit_grid(points: usize) -> Option<&'static [f64]> {
    static UNIT: OnceLock<Vec<f64>> = OnceLock::new();
    (points == CACHED_POINTS).then(|| {
        UNIT.get_or_init(|| {
            let g = LogitGrid::new(1.0, CACHED_POINTS);
            (0..CACHED_POINTS).map(|k| expit(g.abscissa(k))).collect()
        })
        .as_slice()
    })
}

/// Grid over `(lower, upper)` that is uniform in
/// `logit((p - lower) / (upper - lower))`, giving log spacing towards both
/// endpoints.
#[derive(Debug, Clone, Copy)]
pub struct LogitGrid {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl LogitGrid {
    pub fn new(upper: f64, points: usize) -> Self {
        Self::between(0.0, upper, points)
    }

    pub fn between(lower: f64, upper: f64, points: usize) -> Self {
        assert!(points >= 3, "grid needs at least three points");
        assert!(lower < upper, "empty interval ({lower}, {upper})");
        LogitGrid { lower, upper, points }
    }

    fn abscissa(&self, k: usize) -> f64 {
        -LOGIT_SPAN + 2.0 * LOGIT_SPAN * k as f64 / (self.points - 1) as f64
    }

    #[inline]
    fn at(&self, x: f64) -> f64 {
        self.lower + (self.upper - self.lower) * expit(x)
    }

    #[cfg(test)]
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |k| self.at(self.abscissa(k)))
    }

    /// Roots of `f` in `(lower, upper)`.
    ///
    /// Sign changes between neighbouring grid points are bisected. A grid
    /// point where `|f|` has a local minimum without a sign change is
    /// refined by golden-section search, which recovers pairs of roots
    /// closer together than the grid spacing. Bisection stops once the
    /// bracket is narrower than `tol` relative to the root.
    pub fn roots<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Vec<f64> {
        let xs: Vec<f64> = (0..self.points).map(|k| self.abscissa(k)).collect();
        let width = self.upper - self.lower;
        let fs: Vec<f64> = match unit_grid(self.points) {
            Some(unit) => unit.iter().map(|&u| f(self.lower + width * u)).collect(),
            None => xs.iter().map(|&x| f(self.at(x))).collect(),
        };
        let mut roots = Vec::new();
        for k in 0..self.points {
            if !fs[k].is_finite() {
                continue;
            }
            if fs[k] == 0.0 {
                roots.push(self.at(xs[k]));
                continue;
            }
            if k + 1 < self.points && fs[k + 1].is_finite() && fs[k + 1] != 0.0 && (fs[k] < 0.0) != (fs[k + 1] < 0.0) {
                roots.push(self.bisect(&f, xs[k], fs[k], xs[k + 1], tol));
            }
            if k > 0 && k + 1 < self.points {
                let (a, b) = (fs[k - 1], fs[k + 1]);
                let same_sign = |v: f64| v.is_finite() && v != 0.0 && (v < 0.0) == (fs[k] < 0.0);
                if same_sign(a) && same_sign(b) && fs[k].abs() < a.abs() && fs[k].abs() <= b.abs() {
                    roots.extend(self.split_extremum(&f, xs[k - 1], xs[k], xs[k + 1], fs[k], tol));
                }
            }
        }
        roots
    }

    /// Golden-section search for the point of smallest `|f|` around `mid`;
    /// bisects both sides if `f` changes sign there.
    fn split_extremum<F: Fn(f64) -> f64>(&self, f: &F, lo: f64, mid: f64, hi: f64, f_mid: f64, tol: f64) -> Vec<f64> {
        let sign = f_mid.signum();
        let g = |x: f64| sign * f(self.at(x));
        const PHI: f64 = 0.618_033_988_749_894_8;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - PHI * (b - a);
        let mut d = a + PHI * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        let mut best = (mid, sign * f_mid);
        for _ in 0..200 {
            for (x, v) in [(c, gc), (d, gd)] {
                if v < best.1 {
                    best = (x, v);
                }
            }
            if best.1 <= 0.0 || (b - a) < 1e-15 {
                break;
            }
            if gc < gd {
                b = d;
                d = c;
                gd = gc;
                c = b - PHI * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + PHI * (b - a);
                gd = g(d);
            }
        }
        let (x_min, v_min) = best;
        if v_min > 0.0 {
            return Vec::new();
        }
        if v_min == 0.0 {
            return vec![self.at(x_min)];
        }
        let v_lo = sign * g(lo);
        vec![
            self.bisect(f, lo, v_lo, x_min, tol),
            self.bisect(f, x_min, -sign * v_min.abs(), hi, tol),
        ]
    }

    fn bisect<F: Fn(f64) -> f64>(&self, f: &F, mut lo: f64, f_lo: f64, mut hi: f64, tol: f64) -> f64 {
        let lo_neg = f_lo < 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (p_lo, p_hi) = (self.at(lo), self.at(hi));
            if (p_hi - p_lo).abs() <= tol * p_lo.abs().max(p_hi.abs()) {
                break;
            }
            let fm = f(self.at(mid));
            if fm == 0.0 {
                return self.at(mid);
            }
            if (fm < 0.0) == lo_neg {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.at(0.5 * (lo + hi))
    }
}
