//! Corruption families for small single-channel grids, five severity levels
//! each.
//!
//! Strength tables are in pixel units of the synthetic inputs (class
//! patterns have unit per-pixel spread, sample noise is added on top). The
//! binding contract is that the mean squared deviation from the clean input
//! grows strictly with severity. Weather kinds are structured overlays, not
//! photographic renderings, and `jpeg` is 4x4 block-DCT quantization.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::{Modality, RawInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    GaussianNoise,
    ShotNoise,
    ImpulseNoise,
    DefocusBlur,
    GlassBlur,
    MotionBlur,
    ZoomBlur,
    Snow,
    Frost,
    Fog,
    Brightness,
    Contrast,
    Elastic,
    Pixelate,
    Jpeg,
}

use CorruptionKind::*;

impl CorruptionKind {
    pub const VISUAL: [CorruptionKind; 15] = [
        GaussianNoise,
        ShotNoise,
        ImpulseNoise,
        DefocusBlur,
        GlassBlur,
        MotionBlur,
        ZoomBlur,
        Snow,
        Frost,
        Fog,
        Brightness,
        Contrast,
        Elastic,
        Pixelate,
        Jpeg,
    ];

    pub const TACTILE: [CorruptionKind; 7] = [
        GaussianNoise,
        ImpulseNoise,
        DefocusBlur,
        MotionBlur,
        Brightness,
        Contrast,
        Elastic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GaussianNoise => "gaussian_noise",
            ShotNoise => "shot_noise",
            ImpulseNoise => "impulse_noise",
            DefocusBlur => "defocus_blur",
            GlassBlur => "glass_blur",
            MotionBlur => "motion_blur",
            ZoomBlur => "zoom_blur",
            Snow => "snow",
            Frost => "frost",
            Fog => "fog",
            Brightness => "brightness",
            Contrast => "contrast",
            Elastic => "elastic",
            Pixelate => "pixelate",
            Jpeg => "jpeg",
        }
    }

    pub fn allowed_for(self, m: Modality) -> bool {
        match m {
            Modality::Vision => true,
            Modality::Touch => Self::TACTILE.contains(&self),
        }
    }

    /// Strength at which the kind leaves its input unchanged.
    pub fn neutral_strength(self) -> f64 {
        match self {
            Contrast => 1.0,
            Pixelate => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::VISUAL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownCorruption(s.to_string()))
    }
}

/// Strength parameter per kind for severities 1 through 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionTables {
    /// Noise standard deviation.
    pub gaussian_noise: [f64; 5],
    /// Scale of signal-dependent noise `s·sqrt(|x| + 1)`.
    pub shot_noise: [f64; 5],
    /// Fraction of pixels replaced by saturated values.
    pub impulse_noise: [f64; 5],
    /// Disk radius in pixels.
    pub defocus_blur: [f64; 5],
    /// Maximum jitter in pixels after a light blur.
    pub glass_blur: [f64; 5],
    /// Streak length in pixels.
    pub motion_blur: [f64; 5],
    /// Maximum zoom factor.
    pub zoom_blur: [f64; 5],
    /// Flake probability per pixel.
    pub snow: [f64; 5],
    /// Blend weight of the frost texture.
    pub frost: [f64; 5],
    /// Blend weight of the fog field.
    pub fog: [f64; 5],
    /// Additive offset.
    pub brightness: [f64; 5],
    /// Contrast factor around the mean (decreasing).
    pub contrast: [f64; 5],
    /// Displacement amplitude in pixels.
    pub elastic: [f64; 5],
    /// Block side in pixels.
    pub pixelate: [f64; 5],
    /// Base quantization step of 4x4 DCT coefficients.
    pub jpeg: [f64; 5],
}

impl Default for CorruptionTables {
    fn default() -> Self {
        Self {
            gaussian_noise: [3.0, 5.0, 8.0, 12.0, 18.0],
            shot_noise: [1.5, 2.5, 4.0, 6.0, 9.0],
            impulse_noise: [0.03, 0.06, 0.09, 0.17, 0.27],
            defocus_blur: [1.0, 1.5, 2.0, 2.5, 3.0],
            glass_blur: [0.5, 1.0, 1.5, 2.5, 4.0],
            motion_blur: [2.0, 3.0, 4.0, 6.0, 8.0],
            zoom_blur: [1.1, 1.2, 1.3, 1.45, 1.6],
            snow: [0.05, 0.1, 0.15, 0.22, 0.3],
            frost: [0.2, 0.3, 0.4, 0.5, 0.6],
            fog: [0.2, 0.35, 0.5, 0.65, 0.8],
            brightness: [2.0, 4.0, 6.0, 8.0, 10.0],
            contrast: [0.7, 0.55, 0.4, 0.25, 0.1],
            elastic: [0.5, 1.0, 1.5, 2.0, 2.5],
            pixelate: [2.0, 4.0, 6.0, 8.0, 16.0],
            jpeg: [2.0, 4.0, 6.0, 9.0, 13.0],
        }
    }
}

impl CorruptionTables {
    pub fn row(&self, kind: CorruptionKind) -> &[f64; 5] {
        match kind {
            GaussianNoise => &self.gaussian_noise,
            ShotNoise => &self.shot_noise,
            ImpulseNoise => &self.impulse_noise,
            DefocusBlur => &self.defocus_blur,
            GlassBlur => &self.glass_blur,
            MotionBlur => &self.motion_blur,
            ZoomBlur => &self.zoom_blur,
            Snow => &self.snow,
            Frost => &self.frost,
            Fog => &self.fog,
            Brightness => &self.brightness,
            Contrast => &self.contrast,
            Elastic => &self.elastic,
            Pixelate => &self.pixelate,
            Jpeg => &self.jpeg,
        }
    }

    /// Strength for `level` in `0..=5`; level 0 is the neutral strength.
    pub fn strength(&self, kind: CorruptionKind, level: u8) -> Result<f64> {
        match level {
            0 => Ok(kind.neutral_strength()),
            1..=5 => Ok(self.row(kind)[level as usize - 1]),
            _ => Err(Error::Config(format!("severity {level} outside 1..=5"))),
        }
    }
}

/// Applies `kind` at `severity` (1..=5).
pub fn apply_corruption<R: Rng>(
    x: &RawInput,
    kind: CorruptionKind,
    severity: u8,
    tables: &CorruptionTables,
    rng: &mut R,
) -> Result<RawInput> {
    if !(1..=5).contains(&severity) {
        return Err(Error::Config(format!("severity {severity} outside 1..=5")));
    }
    Ok(apply_strength(x, kind, tables.strength(kind, severity)?, rng))
}

/// Applies `kind` at an explicit strength. The kind's neutral strength
/// returns `x` unchanged.
pub fn apply_strength<R: Rng>(x: &RawInput, kind: CorruptionKind, s: f64, rng: &mut R) -> RawInput {
    if s == kind.neutral_strength() {
        return x.clone();
    }
    let n = x.side();
    let v = x.data();
    let out = match kind {
        GaussianNoise => v.iter().map(|p| p + s * rng.sample::<f64, _>(StandardNormal)).collect(),
        ShotNoise => v
            .iter()
            .map(|p| p + s * (p.abs() + 1.0).sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        ImpulseNoise => {
            let m = v.iter().fold(0.0f64, |a, p| a.max(p.abs())) + 1.0;
            v.iter()
                .map(|&p| {
                    let u: f64 = rng.random();
                    let up: bool = rng.random();
                    match (u < s, up) {
                        (true, true) => m,
                        (true, false) => -m,
                        _ => p,
                    }
                })
                .collect()
        }
        DefocusBlur => gaussian_blur(&disk_blur(v, n, s), n, 0.5),
        GlassBlur => {
            let g = gaussian_blur(v, n, 0.5);
            let mut out = vec![0.0; n * n];
            for r in 0..n {
                for c in 0..n {
                    let dy = rng.random_range(-s..=s);
                    let dx = rng.random_range(-s..=s);
                    out[r * n + c] = bilinear(&g, n, r as f64 + dy, c as f64 + dx);
                }
            }
            out
        }
        MotionBlur => {
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            let steps = s.ceil() as usize + 1;
            let mut out = vec![0.0; n * n];
            for k in 0..steps {
                let t = s * k as f64 / (steps - 1) as f64;
                let (dy, dx) = (t * theta.sin(), t * theta.cos());
                for r in 0..n {
                    for c in 0..n {
                        out[r * n + c] += bilinear(v, n, r as f64 + dy, c as f64 + dx);
                    }
                }
            }
            out.iter().map(|o| o / steps as f64).collect()
        }
        ZoomBlur => {
            let steps = 7;
            let centre = (n as f64 - 1.0) / 2.0;
            let mut out = v.to_vec();
            for k in 1..steps {
                let z = 1.0 + (s - 1.0) * k as f64 / (steps - 1) as f64;
                for r in 0..n {
                    for c in 0..n {
                        let y = centre + (r as f64 - centre) / z;
                        let x = centre + (c as f64 - centre) / z;
                        out[r * n + c] += bilinear(v, n, y, x);
                    }
                }
            }
            out.iter().map(|o| o / steps as f64).collect()
        }
        Snow => {
            const FLAKE: f64 = 10.0;
            v.iter()
                .map(|&p| {
                    let u: f64 = rng.random();
                    if u < s {
                        FLAKE
                    } else {
                        p + 2.0 * s
                    }
                })
                .collect()
        }
        Frost => {
            let tex = smooth_field(rng, n, 0.8, 6.0, 2.0);
            v.iter().zip(&tex).map(|(p, f)| (1.0 - s) * p + s * f).collect()
        }
        Fog => {
            let field = smooth_field(rng, n, 3.0, 6.0, 3.0);
            v.iter().zip(&field).map(|(p, f)| (1.0 - s) * p + s * f).collect()
        }
        Brightness => v.iter().map(|p| p + s).collect(),
        Contrast => {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|p| mean + s * (p - mean)).collect()
        }
        Elastic => {
            let dy = smooth_field(rng, n, 2.0, s, 0.0);
            let dx = smooth_field(rng, n, 2.0, s, 0.0);
            let mut out = vec![0.0; n * n];
            for r in 0..n {
                for c in 0..n {
                    let i = r * n + c;
                    out[i] = bilinear(v, n, r as f64 + dy[i], c as f64 + dx[i]);
                }
            }
            out
        }
        Pixelate => pixelate(v, n, s.round().max(1.0) as usize),
        Jpeg => block_dct_quantize(v, n, s),
    };
    x.with_data(out)
}

fn clamp_idx(i: i64, n: usize) -> usize {
    i.clamp(0, n as i64 - 1) as usize
}

fn bilinear(v: &[f64], n: usize, y: f64, x: f64) -> f64 {
    let max = (n - 1) as f64;
    let (y, x) = (y.clamp(0.0, max), x.clamp(0.0, max));
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(n - 1), (x0 + 1).min(n - 1));
    let (fy, fx) = (y - y0 as f64, x - x0 as f64);
    let top = v[y0 * n + x0] * (1.0 - fx) + v[y0 * n + x1] * fx;
    let bot = v[y1 * n + x0] * (1.0 - fx) + v[y1 * n + x1] * fx;
    top * (1.0 - fy) + bot * fy
}

/// Separable Gaussian blur with clamped edges.
fn gaussian_blur(v: &[f64], n: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return v.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|k| k / total).collect();
    let pass = |src: &[f64], horizontal: bool| {
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for (j, k) in kernel.iter().enumerate() {
                    let d = j as i64 - radius;
                    let (rr, cc) = if horizontal {
                        (r, clamp_idx(c as i64 + d, n))
                    } else {
                        (clamp_idx(r as i64 + d, n), c)
                    };
                    acc += k * src[rr * n + cc];
                }
                out[r * n + c] = acc;
            }
        }
        out
    };
    pass(&pass(v, true), false)
}

fn disk_blur(v: &[f64], n: usize, radius: f64) -> Vec<f64> {
    let reach = radius.ceil() as i64;
    let offsets: Vec<(i64, i64)> = (-reach..=reach)
        .flat_map(|dy| (-reach..=reach).map(move |dx| (dy, dx)))
        .filter(|(dy, dx)| ((dy * dy + dx * dx) as f64) <= radius * radius)
        .collect();
    let w = 1.0 / offsets.len() as f64;
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = offsets
                .iter()
                .map(|(dy, dx)| v[clamp_idx(r as i64 + dy, n) * n + clamp_idx(c as i64 + dx, n)])
                .sum::<f64>()
                * w;
        }
    }
    out
}

/// Blurred white noise rescaled to the given spread and mean.
fn smooth_field<R: Rng>(rng: &mut R, n: usize, sigma: f64, spread: f64, mean: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let blurred = gaussian_blur(&raw, n, sigma);
    let mu = blurred.iter().sum::<f64>() / blurred.len() as f64;
    let sd = (blurred.iter().map(|b| (b - mu).powi(2)).sum::<f64>() / blurred.len() as f64)
        .sqrt()
        .max(1e-12);
    blurred.iter().map(|b| mean + spread * (b - mu) / sd).collect()
}

fn pixelate(v: &[f64], n: usize, block: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for br in (0..n).step_by(block) {
        for bc in (0..n).step_by(block) {
            let (re, ce) = ((br + block).min(n), (bc + block).min(n));
            let cells = ((re - br) * (ce - bc)) as f64;
            let mean = (br..re)
                .flat_map(|r| (bc..ce).map(move |c| (r, c)))
                .map(|(r, c)| v[r * n + c])
                .sum::<f64>()
                / cells;
            for r in br..re {
                for c in bc..ce {
                    out[r * n + c] = mean;
                }
            }
        }
    }
    out
}

const DCT_N: usize = 4;

fn dct_basis() -> [[f64; DCT_N]; DCT_N] {
    let mut b = [[0.0; DCT_N]; DCT_N];
    for (k, row) in b.iter_mut().enumerate() {
        let scale = if k == 0 {
            (1.0 / DCT_N as f64).sqrt()
        } else {
            (2.0 / DCT_N as f64).sqrt()
        };
        for (i, x) in row.iter_mut().enumerate() {
            *x = scale
                * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * DCT_N) as f64).cos();
        }
    }
    b
}

/// Orthonormal 4x4 DCT per block; coefficient (u, v) is quantized with step
/// `q · (1 + (u + v) / 2)`. Partial edge blocks are left as they are.
fn block_dct_quantize(v: &[f64], n: usize, q: f64) -> Vec<f64> {
    let basis = dct_basis();
    let mut out = v.to_vec();
    for br in (0..n.saturating_sub(DCT_N - 1)).step_by(DCT_N) {
        for bc in (0..n.saturating_sub(DCT_N - 1)).step_by(DCT_N) {
            let mut coef = [[0.0; DCT_N]; DCT_N];
            for (u, row) in coef.iter_mut().enumerate() {
                for (w, cf) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for i in 0..DCT_N {
                        for j in 0..DCT_N {
                            acc += basis[u][i] * basis[w][j] * v[(br + i) * n + bc + j];
                        }
                    }
                    let step = q * (1.0 + (u + w) as f64 / 2.0);
                    *cf = step * (acc / step).round();
                }
            }
            for i in 0..DCT_N {
                for j in 0..DCT_N {
                    let mut acc = 0.0;
                    for (u, row) in coef.iter().enumerate() {
                        for (w, cf) in row.iter().enumerate() {
                            acc += basis[u][i] * basis[w][j] * cf;
                        }
                    }
                    out[(br + i) * n + bc + j] = acc;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn probe_inputs(count: usize) -> Vec<RawInput> {
        let p = crate::bench::generate_prototypes(10, 32, 16, 5).unwrap();
        let mut rng = rng_from_seed(77);
        (0..count)
            .map(|i| {
                let pat = &p.vision_patterns[i % 10];
                let data = pat
                    .data()
                    .iter()
                    .map(|x| x + 4.0 * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                RawInput::new(Modality::Vision, 16, data).unwrap()
            })
            .collect()
    }

    fn msd(a: &RawInput, b: &RawInput) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.data().len() as f64
    }

    #[test]
    fn kind_sets() {
        assert_eq!(CorruptionKind::VISUAL.len(), 15);
        assert_eq!(CorruptionKind::TACTILE.len(), 7);
        assert!(CorruptionKind::TACTILE.iter().all(|k| CorruptionKind::VISUAL.contains(k)));
        assert!(!Snow.allowed_for(Modality::Touch));
        assert!(Snow.allowed_for(Modality::Vision));
        assert_eq!("motion_blur".parse::<CorruptionKind>().unwrap(), MotionBlur);
        assert!(matches!("hail".parse::<CorruptionKind>(), Err(Error::UnknownCorruption(_))));
    }

    #[test]
    fn level_zero_is_identity() {
        let tables = CorruptionTables::default();
        let x = &probe_inputs(1)[0];
        for kind in CorruptionKind::VISUAL {
            let s = tables.strength(kind, 0).unwrap();
            assert_eq!(&apply_strength(x, kind, s, &mut rng_from_seed(1)), x, "{kind}");
        }
    }

    #[test]
    fn severity_outside_range_is_rejected() {
        let x = &probe_inputs(1)[0];
        let t = CorruptionTables::default();
        assert!(apply_corruption(x, Fog, 0, &t, &mut rng_from_seed(0)).is_err());
        assert!(apply_corruption(x, Fog, 6, &t, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn brightness_offsets_grow() {
        let x = &probe_inputs(1)[0];
        let t = CorruptionTables::default();
        let lo = apply_corruption(x, Brightness, 1, &t, &mut rng_from_seed(0)).unwrap();
        let hi = apply_corruption(x, Brightness, 5, &t, &mut rng_from_seed(0)).unwrap();
        for ((a, b), c) in x.data().iter().zip(lo.data()).zip(hi.data()) {
            assert!(c - a > b - a && b - a > 0.0);
        }
    }

    #[test]
    fn gaussian_noise_variance_matches_table() {
        let t = CorruptionTables::default();
        let x = &probe_inputs(1)[0];
        let mut rng = rng_from_seed(2024);
        let mut acc = 0.0;
        for _ in 0..1000 {
            acc += msd(&apply_corruption(x, GaussianNoise, 3, &t, &mut rng).unwrap(), x);
        }
        let est = acc / 1000.0;
        let sigma2 = t.gaussian_noise[2].powi(2);
        assert!((est - sigma2).abs() / sigma2 < 0.10, "{est} vs {sigma2}");
    }

    #[test]
    fn deterministic_given_rng() {
        let t = CorruptionTables::default();
        let x = &probe_inputs(1)[0];
        for kind in CorruptionKind::VISUAL {
            let a = apply_corruption(x, kind, 3, &t, &mut rng_from_seed(9)).unwrap();
            let b = apply_corruption(x, kind, 3, &t, &mut rng_from_seed(9)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn deviation_strictly_increases_with_severity() {
        let t = CorruptionTables::default();
        let probes = probe_inputs(16);
        for kind in CorruptionKind::VISUAL {
            let mut prev = 0.0;
            for sev in 1..=5u8 {
                let mean = probes
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let y = apply_corruption(x, kind, sev, &t, &mut rng_from_seed(i as u64)).unwrap();
                        msd(&y, x)
                    })
                    .sum::<f64>()
                    / probes.len() as f64;
                assert!(mean > prev, "{kind}: severity {sev} deviation {mean} <= {prev}");
                prev = mean;
            }
        }
    }

    #[test]
    fn outputs_stay_finite() {
        let t = CorruptionTables::default();
        for x in probe_inputs(4) {
            for kind in CorruptionKind::VISUAL {
                let y = apply_corruption(&x, kind, 5, &t, &mut rng_from_seed(3)).unwrap();
                assert!(y.data().iter().all(|v| v.is_finite()));
            }
        }
    }
}
