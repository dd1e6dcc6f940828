//! Root isolation for violation ranges.

/// Sub-ranges of `[lo, hi]` where a fail-amount function is positive.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ranges {
    /// Every maximal range where the function is above zero.
    pub raw: Vec<(f64, f64)>,
    /// The ranges whose peak exceeds the tolerance.
    pub pieces: Vec<(f64, f64)>,
}

/// Roots of `a·x² + b·x + c` in increasing order.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    // avoids cancellation between -b and the root of the discriminant
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = if q == 0.0 { vec![0.0] } else { vec![q / a, c / q] };
    r.sort_by(f64::total_cmp);
    r
}

fn finish(raw: Vec<(f64, f64)>, peak: &dyn Fn(f64, f64) -> f64, eps: f64) -> Ranges {
    let pieces = raw.iter().copied().filter(|(a, b)| peak(*a, *b) > eps).collect();
    Ranges { raw, pieces }
}

/// Ranges of `[lo, hi]` where `f > 0`, keeping in `pieces` those whose
/// maximum exceeds `eps`. With `degree <= 2` the function is treated as a
/// polynomial and its roots are exact; otherwise it is sampled with step
/// `h` and sign changes are bisected.
pub fn locate_ranges(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, degree: Option<u32>, eps: f64, h: f64) -> Ranges {
    if hi < lo {
        return Ranges::default();
    }
    if hi == lo {
        let v = f(lo);
        let raw = if v > 0.0 { vec![(lo, hi)] } else { vec![] };
        let pieces = if v > eps { raw.clone() } else { vec![] };
        return Ranges { raw, pieces };
    }
    match degree {
        Some(d) if d <= 2 => polynomial(f, lo, hi, eps),
        _ => sampled(f, lo, hi, eps, h),
    }
}

fn polynomial(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, eps: f64) -> Ranges {
    let m = 0.5 * (hi - lo);
    let (f0, f1, f2) = (f(lo), f(lo + m), f(hi));
    let scale = f0.abs().max(f1.abs()).max(f2.abs()).max(1.0);
    let mut a = (f2 - 2.0 * f1 + f0) / (2.0 * m * m);
    if (a * 4.0 * m * m).abs() <= 1e-12 * scale {
        a = 0.0;
    }
    let mut b = (f1 - f0 - a * m * m) / m;
    if (b * 2.0 * m).abs() <= 1e-14 * scale && a == 0.0 {
        b = 0.0;
    }
    let p = move |x: f64| {
        let u = x - lo;
        (a * u + b) * u + f0
    };
    let mut cuts = vec![lo];
    cuts.extend(quadratic_roots(a, b, f0).into_iter().map(|r| r + lo).filter(|r| *r > lo && *r < hi));
    cuts.push(hi);
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        if w[1] <= w[0] || p(0.5 * (w[0] + w[1])) <= 0.0 {
            continue;
        }
        match raw.last_mut() {
            Some(last) if last.1 >= w[0] => last.1 = w[1],
            _ => raw.push((w[0], w[1])),
        }
    }
    let peak = move |x: f64, y: f64| {
        let mut v = p(x).max(p(y));
        if a != 0.0 {
            let vx = lo - b / (2.0 * a);
            if vx > x && vx < y {
                v = v.max(p(vx));
            }
        }
        v
    };
    finish(raw, &peak, eps)
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    // invariant: f(a) and f(b) are on opposite sides of zero
    let fa_pos = f(a) > 0.0;
    for _ in 0..100 {
        if b - a <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == fa_pos {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn scan(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (Vec<(f64, f64)>, Vec<f64>) {
    let step = (hi - lo) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + step * i as f64 }).collect();
    let vs: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
    let mut raw = Vec::new();
    let mut peaks = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for i in 0..=n {
        let pos = vs[i] > 0.0;
        match (&mut open, pos) {
            (None, true) => {
                let start = if i == 0 { lo } else { bisect(f, xs[i - 1], xs[i]) };
                open = Some((start, vs[i]));
            }
            (Some((_, pk)), true) => *pk = pk.max(vs[i]),
            (Some((start, pk)), false) => {
                raw.push((*start, bisect(f, xs[i - 1], xs[i])));
                peaks.push(*pk);
                open = None;
            }
            (None, false) => {}
        }
    }
    if let Some((start, pk)) = open {
        raw.push((start, hi));
        peaks.push(pk);
    }
    (raw, peaks)
}

fn sampled(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, eps: f64, h: f64) -> Ranges {
    const MAX_SAMPLES: usize = 1 << 22;
    let mut h = h.max(1e-9);
    let count = |h: f64| (((hi - lo) / h).ceil() as usize).clamp(2, MAX_SAMPLES);
    let mut cur = scan(f, lo, hi, count(h));
    // halve the step until the number of sign changes stabilises
    while h > 1e-6 && count(h) < MAX_SAMPLES {
        let finer = scan(f, lo, hi, count(h / 2.0));
        let stable = finer.0.len() == cur.0.len();
        cur = finer;
        h /= 2.0;
        if stable {
            break;
        }
    }
    let (raw, peaks) = cur;
    let pieces = raw.iter().zip(&peaks).filter(|(_, p)| **p > eps).map(|(r, _)| *r).collect();
    Ranges { raw, pieces }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overfill_margin_roots() {
        let g = |t: f64| 87.5 + 3.0 * t - 0.16 * t * t - 100.0;
        let r = locate_ranges(&g, 0.0, 12.5, Some(2), 1e-6, 1e-3);
        assert_eq!(r.pieces.len(), 1);
        assert!((r.pieces[0].0 - 6.25).abs() < 1e-9, "{r:?}");
        assert!((r.pieces[0].1 - 12.5).abs() < 1e-9);
    }

    #[test]
    fn constant_positive_margin_is_clean() {
        // fail amount is negative: the condition holds everywhere
        let r = locate_ranges(&|_| -3.0, 0.0, 10.0, Some(0), 1e-6, 1e-3);
        assert!(r.raw.is_empty() && r.pieces.is_empty());
    }

    #[test]
    fn linear_crossing() {
        let g = |t: f64| 2.0 * t - 3.0;
        let r = locate_ranges(&g, 0.0, 5.0, Some(1), 1e-6, 1e-3);
        assert!((r.pieces[0].0 - 1.5).abs() < 1e-12);
        let s = locate_ranges(&g, 0.0, 5.0, None, 1e-6, 1e-3);
        assert!((s.pieces[0].0 - 1.5).abs() < 1e-6, "{s:?}");
    }

    #[test]
    fn tiny_bumps_are_filtered_but_kept_raw() {
        let g = |t: f64| 1e-9 - (t - 1.0) * (t - 1.0);
        let r = locate_ranges(&g, 0.0, 2.0, Some(2), 1e-6, 1e-3);
        assert_eq!(r.raw.len(), 1);
        assert!(r.pieces.is_empty());
    }

    #[test]
    fn sampled_matches_exact_on_a_sine() {
        let g = |t: f64| t.sin();
        let r = locate_ranges(&g, 0.5, 10.0, None, 1e-6, 1e-2);
        let pi = std::f64::consts::PI;
        assert_eq!(r.pieces.len(), 2);
        assert!((r.pieces[0].1 - pi).abs() < 1e-9);
        assert!((r.pieces[1].0 - 2.0 * pi).abs() < 1e-9);
        assert!((r.pieces[1].1 - 3.0 * pi).abs() < 1e-9);
    }
}
