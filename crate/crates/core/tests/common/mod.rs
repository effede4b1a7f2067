#![allow(dead_code)]

use coop_relay_prd::analytic::AnalyticParams;
use coop_relay_prd::channel::{Emitter, InterferenceModel, RngFading};
use coop_relay_prd::geometry::{sample_ppp, Point, Window};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const XK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XK[j];
        let s = f(c - x) + f(c + x);
        kron += WK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature on `[a, b]` to absolute error
/// `tol`.
pub fn adaptive(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(f, a, b, tol, 40)
}

/// Iterated adaptive quadrature of `f(x, y)` over a rectangle.
pub fn adaptive_2d(f: impl Fn(f64, f64) -> f64, x: (f64, f64), y: (f64, f64), tol: f64) -> f64 {
    let inner_tol = tol / (x.1 - x.0).max(1.0);
    let mut outer = |xv: f64| adaptive(&mut |yv: f64| f(xv, yv), y.0, y.1, inner_tol);
    adaptive(&mut outer, x.0, x.1, tol)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CCDF.
pub fn ks_distance(samples: &mut [f64], ccdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let cdf = 1.0 - ccdf(s);
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// `S = SIR r^alpha` at the origin from a transmitter at distance 1, with a
/// PPP of interferers of intensity `lambda p` summed exactly within
/// `radius` and by its mean beyond.
pub fn sample_s(lambda: f64, p: f64, alpha: f64, n: usize, seed: u64) -> Vec<f64> {
    let radius = 60.0;
    let window = Window::new(-radius, radius, -radius, radius).unwrap();
    let model = InterferenceModel::with_far_field(alpha, lambda * p, radius).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = Point { x: 0.0, y: 0.0 };
    (0..n)
        .map(|_| {
            let nodes = sample_ppp(lambda * p, &window, &mut rng).unwrap();
            let emitters: Vec<Emitter> = nodes
                .positions()
                .iter()
                .enumerate()
                .map(|(id, &pos)| Emitter { id, pos })
                .collect();
            let desired = Emitter {
                id: emitters.len(),
                pos: Point { x: 1.0, y: 0.0 },
            };
            model
                .sir(origin, desired, &emitters, &mut RngFading(&mut rng))
                .unwrap()
                .value()
        })
        .collect()
}

/// `exp(-pi lambda p G s^delta)`, the success law of a Rayleigh link in a
/// Poisson field of Rayleigh interferers.
pub fn rayleigh_field_ccdf(s: f64, params: &AnalyticParams) -> f64 {
    if s < 0.0 {
        1.0
    } else {
        (-std::f64::consts::PI * params.a * s.powf(params.delta)).exp()
    }
}
