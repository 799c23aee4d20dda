use crate::image::ImagePlane;
use crate::scene::ObjectModel;

/// Samples below this fraction of the peak end the PSF fitting window.
const PSF_WINDOW_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageMetrics {
    /// Standard deviation of the main peak along x (moment fit).
    pub psf_sigma: f64,
    /// Dip contrast between the object's features; `None` without features.
    pub visibility: Option<f64>,
    /// Normalized cross-correlation with the reference image.
    pub ncc: Option<f64>,
    /// Intensity-weighted mean position `(x, y)`; `y = 0` in 1-D.
    pub centroid: (f64, f64),
    /// Position of the brightest sample along x.
    pub peak_position: f64,
}

/// Measures `image`. In 2-D the x-profile used for the PSF and visibility is
/// the row nearest the object center (or the brightest row without one).
pub fn measure_image(
    image: &ImagePlane,
    reference: Option<&ImagePlane>,
    object: Option<&ObjectModel>,
) -> ImageMetrics {
    let gx = image.grid().x();
    let row = profile_row(image, object);
    let xs: Vec<f64> = gx.coords().collect();
    let profile = image.row(row);
    let peak = argmax(profile);
    ImageMetrics {
        psf_sigma: peak_sigma(&xs, profile, peak),
        visibility: object.and_then(|o| visibility(&xs, profile, &o.feature_centers())),
        ncc: reference.and_then(|r| ncc(image.values(), r.values())),
        centroid: centroid(image),
        peak_position: xs[peak],
    }
}

fn profile_row(image: &ImagePlane, object: Option<&ObjectModel>) -> usize {
    let grid = image.grid();
    if grid.dims() == 1 {
        return 0;
    }
    let gy = grid.axes()[1];
    if let Some(iy) = object.and_then(|o| gy.nearest(o.center().1)) {
        return iy;
    }
    argmax(image.values()) / grid.x().n()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) },
        )
        .0
}

/// Moment fit over the contiguous region around `peak` above a small floor.
pub fn peak_sigma(xs: &[f64], profile: &[f64], peak: usize) -> f64 {
    let floor = PSF_WINDOW_FLOOR * profile[peak];
    let mut lo = peak;
    while lo > 0 && profile[lo - 1] > floor {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < profile.len() && profile[hi + 1] > floor {
        hi += 1;
    }
    let w: f64 = profile[lo..=hi].iter().sum();
    if w <= 0.0 {
        return 0.0;
    }
    let mean = (lo..=hi).map(|i| xs[i] * profile[i]).sum::<f64>() / w;
    let var = (lo..=hi)
        .map(|i| (xs[i] - mean).powi(2) * profile[i])
        .sum::<f64>()
        / w;
    var.sqrt()
}

/// Contrast `(peak − dip)/(peak + dip)` for each adjacent pair of features,
/// where `peak` is the weaker of the two local maxima (searched within a
/// quarter spacing of each feature) and `dip` the minimum over the gap
/// between those search windows.
/// Returns the worst pair, clamped to `[0, 1]`.
pub fn visibility(xs: &[f64], profile: &[f64], features: &[f64]) -> Option<f64> {
    if features.len() < 2 {
        return None;
    }
    let mut f = features.to_vec();
    f.sort_by(f64::total_cmp);
    let spacing = f.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let window_max = |lo: f64, hi: f64| {
        xs.iter()
            .zip(profile)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(_, v)| *v)
            .reduce(f64::max)
    };
    let window_min = |lo: f64, hi: f64| {
        xs.iter()
            .zip(profile)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(_, v)| *v)
            .reduce(f64::min)
    };
    let mut worst: Option<f64> = None;
    for pair in f.windows(2) {
        let q = 0.25 * spacing;
        let p1 = window_max(pair[0] - q, pair[0] + q)?;
        let p2 = window_max(pair[1] - q, pair[1] + q)?;
        let dip = window_min(pair[0] + q, pair[1] - q)?;
        let peak = p1.min(p2);
        if peak + dip <= 0.0 {
            return None;
        }
        let v = ((peak - dip) / (peak + dip)).clamp(0.0, 1.0);
        worst = Some(worst.map_or(v, |w| w.min(v)));
    }
    worst
}

/// Pearson correlation after mean removal; `None` on length mismatch or a
/// constant input.
pub fn ncc(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

pub fn centroid(image: &ImagePlane) -> (f64, f64) {
    let total: f64 = image.values().iter().sum();
    if total <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for ((x, y), v) in image.grid().positions().zip(image.values()) {
        sx += x * v;
        sy += y * v;
    }
    (sx / total, sy / total)
}

/// Relative L2 distance `‖a − b‖ / ‖b‖` after scaling both to peak 1.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let pa = a.iter().cloned().fold(0.0, f64::max);
    let pb = b.iter().cloned().fold(0.0, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x / pa, y / pb);
        num += (x - y).powi(2);
        den += y * y;
    }
    (num / den).sqrt()
}
