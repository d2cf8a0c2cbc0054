//! Local extrema of sampled curves.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub location: f64,
    pub height: f64,
    pub kind: PeakKind,
    /// Position among the peaks of the same curve, by ascending location.
    pub index: usize,
}

/// Vertex of the parabola through three points, if it lies between the outer two.
fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if curv == 0.0 {
        return None;
    }
    // y = y1 + s (x - x1) + curv (x - x1)^2 with slope s at x1
    let s = d1 + curv * (x[1] - x[0]);
    let xv = x[1] - s / (2.0 * curv);
    (xv > x[0] && xv < x[2]).then(|| (xv, y[1] - s * s / (4.0 * curv)))
}

/// Golden-section search for an extremum of `f` inside `[a, b]`.
pub fn golden_section(
    f: &dyn Fn(f64) -> Option<f64>,
    mut a: f64,
    mut b: f64,
    kind: PeakKind,
    tol: f64,
) -> Option<(f64, f64)> {
    let sign = match kind {
        PeakKind::Maximum => -1.0,
        PeakKind::Minimum => 1.0,
    };
    let g = |x: f64| f(x).map(|v| sign * v);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (g(c)?, g(d)?);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Some((x, f(x)?))
}

/// All strict interior extrema of the samples, ordered by location.
///
/// Absent samples break the curve: an extremum needs both neighbours. Each
/// candidate gets a parabolic estimate; with `model` supplied it is then
/// polished by golden-section search on the bracket formed by its neighbours.
pub fn find_peaks(
    grid: &[f64],
    values: &[Option<f64>],
    model: Option<&dyn Fn(f64) -> Option<f64>>,
    tol: f64,
) -> Vec<Peak> {
    let mut out = Vec::new();
    if grid.len() < 3 || values.len() != grid.len() {
        return out;
    }
    for i in 1..grid.len() - 1 {
        let (Some(l), Some(c), Some(r)) = (values[i - 1], values[i], values[i + 1]) else { continue };
        let kind = if c > l && c >= r {
            PeakKind::Maximum
        } else if c < l && c <= r {
            PeakKind::Minimum
        } else {
            continue;
        };
        let x = [grid[i - 1], grid[i], grid[i + 1]];
        let (mut loc, mut height) = parabolic_vertex(x, [l, c, r]).unwrap_or((x[1], c));
        if let Some(f) = model {
            if let Some((xl, yl)) = golden_section(f, x[0], x[2], kind, tol) {
                let better = match kind {
                    PeakKind::Maximum => yl >= c,
                    PeakKind::Minimum => yl <= c,
                };
                if better {
                    loc = xl;
                    height = yl;
                }
            }
        }
        out.push(Peak { location: loc, height, kind, index: 0 });
    }
    out.sort_by(|a, b| a.location.total_cmp(&b.location));
    for (k, p) in out.iter_mut().enumerate() {
        p.index = k;
    }
    out
}

/// Drops pairs of neighbouring opposite extrema whose heights differ by less
/// than `min_prominence`, smallest pair first. Sampling noise on a flat stretch
/// shows up as exactly such pairs; genuine peaks stand well clear of them.
pub fn suppress_noise(mut peaks: Vec<Peak>, min_prominence: f64) -> Vec<Peak> {
    loop {
        let worst = peaks
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0].kind != w[1].kind)
            .map(|(i, w)| (i, (w[0].height - w[1].height).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((i, d)) if d < min_prominence => {
                peaks.drain(i..i + 2);
            }
            _ => break,
        }
    }
    for (k, p) in peaks.iter_mut().enumerate() {
        p.index = k;
    }
    peaks
}

/// Re-polishes a peak on `[location - half_width, location + half_width]`.
pub fn refine_peak(peak: &Peak, model: &dyn Fn(f64) -> Option<f64>, half_width: f64, tol: f64) -> Option<Peak> {
    let (loc, height) = golden_section(model, peak.location - half_width, peak.location + half_width, peak.kind, tol)?;
    Some(Peak { location: loc, height, ..*peak })
}
