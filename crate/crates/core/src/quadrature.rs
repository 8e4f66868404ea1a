//! Adaptive Gauss-Kronrod (7/15) integration over finite or infinite ranges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integral estimate with its error estimate.
#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over the finite interval `[a, b]` to within
/// `max(abs_tol, rel_tol * |I|)`.
fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    const MAX_SEGMENTS: usize = 4000;
    if a == b {
        return Quad { value: 0.0, error: 0.0 };
    }
    let (v, e) = kronrod(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) && heap.len() < MAX_SEGMENTS {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = kronrod(f, seg.a, mid);
        let (v2, e2) = kronrod(f, mid, seg.b);
        total += v1 + v2 - seg.value;
        err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    Quad {
        value: segs.iter().map(|s| s.value).sum(),
        error: segs.iter().map(|s| s.error).sum(),
    }
}

/// Integrates `f` over `[a, b]`, where either end may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    if a > b {
        let q = integrate(f, b, a, abs_tol, rel_tol);
        return Quad {
            value: -q.value,
            error: q.error,
        };
    }
    let guard = |y: f64| if y.is_finite() { y } else { 0.0 };
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&|x| guard(f(x)), a, b, abs_tol, rel_tol),
        (true, false) => {
            // x = a + t / (1 - t), t in [0, 1)
            let g = |t: f64| {
                let d = 1.0 - t;
                guard(f(a + t / d) / (d * d))
            };
            adaptive(&g, 0.0, 1.0, abs_tol, rel_tol)
        }
        (false, true) => {
            let g = |t: f64| {
                let d = 1.0 - t;
                guard(f(b - t / d) / (d * d))
            };
            adaptive(&g, 0.0, 1.0, abs_tol, rel_tol)
        }
        (false, false) => {
            // x = t / (1 - t^2), t in (-1, 1)
            let g = |t: f64| {
                let d = 1.0 - t * t;
                guard(f(t / d) * (1.0 + t * t) / (d * d))
            };
            adaptive(&g, -1.0, 1.0, abs_tol, rel_tol)
        }
    }
}

/// Integrates over `[a, b]` split at the given interior breakpoints, which
/// helps when `f` has kinks or peaks there.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Quad {
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let pieces = (edges.len() - 1) as f64;
    let mut out = Quad { value: 0.0, error: 0.0 };
    for w in edges.windows(2) {
        let q = integrate(&f, w[0], w[1], abs_tol / pieces, rel_tol);
        out.value += q.value;
        out.error += q.error;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_and_gaussian() {
        let q = integrate(|x| x * x, 0.0, 3.0, 1e-14, 1e-14);
        assert!((q.value - 9.0).abs() < 1e-12);
        let q = integrate(|x| (-x * x / 2.0).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-14, 1e-14);
        assert!((q.value - (2.0 * PI).sqrt()).abs() < 1e-12);
        let q = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-14, 1e-14);
        assert!((q.value - 1.0).abs() < 1e-12);
        let q = integrate(|x| x.exp(), f64::NEG_INFINITY, 0.0, 1e-14, 1e-14);
        assert!((q.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // int_0^1 x^{-1/2} = 2
        let q = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-10, 1e-10);
        assert!((q.value - 2.0).abs() < 1e-7, "{}", q.value);
    }

    #[test]
    fn heavy_tail_and_breaks() {
        let q = integrate(
            |x| 1.0 / (PI * (1.0 + x * x)),
            f64::NEG_INFINITY,
            f64::INFINITY,
            1e-13,
            1e-13,
        );
        assert!((q.value - 1.0).abs() < 1e-10);
        let q = integrate_with_breaks(|x: f64| (-x.abs()).exp(), -40.0, 40.0, &[0.0], 1e-14, 1e-14);
        assert!((q.value - 2.0).abs() < 1e-12);
        let q = integrate(|x| x, 2.0, 0.0, 1e-14, 1e-14);
        assert!((q.value + 2.0).abs() < 1e-14);
    }
}
