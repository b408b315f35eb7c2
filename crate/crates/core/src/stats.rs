//! Estimators for stationary PDFs, power spectral densities and power-law
//! exponents.
//!
//! Exponents are reported positive: a density `p(x) ~ x^-lambda` yields
//! `lambda`, a spectrum `S(f) ~ f^-beta` yields `beta`.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{HerdError, Result};

/// Density estimate on log-spaced bins.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramEstimate {
    /// `n_bins + 1` increasing edges.
    pub edges: Vec<f64>,
    /// Probability per unit value, relative to all samples passed in.
    pub densities: Vec<f64>,
    pub counts: Vec<u64>,
    pub sample_count: usize,
}

impl HistogramEstimate {
    /// Geometric bin centres paired with densities, skipping empty bins.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.edges
            .windows(2)
            .zip(&self.densities)
            .filter(|(_, &d)| d > 0.0)
            .map(|(e, &d)| ((e[0] * e[1]).sqrt(), d))
            .collect()
    }

    /// Probability mass covered by the bins.
    pub fn mass(&self) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.densities)
            .map(|(e, d)| d * (e[1] - e[0]))
            .sum()
    }
}

/// Log-binned density over the range of the positive samples.
pub fn pdf_log_binned(samples: &[f64], n_bins: usize) -> Result<HistogramEstimate> {
    let (lo, hi) = samples
        .iter()
        .filter(|&&x| x > 0.0 && x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(lo < hi) {
        if lo.is_finite() {
            return Err(HerdError::Degenerate("all samples are equal".into()));
        }
        return Err(HerdError::InsufficientData("no positive samples".into()));
    }
    pdf_log_binned_in(samples, n_bins, lo, hi)
}

/// Log-binned density over `[lo, hi]`; samples outside the range count
/// toward the normalization but not toward any bin.
pub fn pdf_log_binned_in(samples: &[f64], n_bins: usize, lo: f64, hi: f64) -> Result<HistogramEstimate> {
    if samples.len() < 1000 {
        return Err(HerdError::InsufficientData(format!(
            "{} samples, at least 1000 required",
            samples.len()
        )));
    }
    if n_bins == 0 || !(lo > 0.0 && hi > lo) {
        return Err(HerdError::config("histogram", "need n_bins > 0 and 0 < lo < hi"));
    }
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let step = (log_hi - log_lo) / n_bins as f64;
    let mut edges: Vec<f64> = (0..=n_bins).map(|i| (log_lo + i as f64 * step).exp()).collect();
    edges[0] = lo;
    edges[n_bins] = hi;
    let mut counts = vec![0u64; n_bins];
    for &x in samples {
        if x >= lo && x <= hi {
            let mut i = (((x.ln() - log_lo) / step) as usize).min(n_bins - 1);
            // Rounding in ln/exp can misplace values sitting on an edge.
            while i > 0 && x < edges[i] {
                i -= 1;
            }
            while i + 1 < n_bins && x >= edges[i + 1] {
                i += 1;
            }
            counts[i] += 1;
        }
    }
    let total = samples.len() as f64;
    let densities = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| c as f64 / total / (e[1] - e[0]))
        .collect();
    Ok(HistogramEstimate {
        edges,
        densities,
        counts,
        sample_count: samples.len(),
    })
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    /// `k / (L dt)` for `k = 1..=L/2`, with `L` the segment length.
    pub frequencies: Vec<f64>,
    pub psd: Vec<f64>,
    pub segments: usize,
    pub dt: f64,
}

impl SpectrumEstimate {
    /// Integral of the PSD over frequency; equals the signal variance.
    pub fn total_power(&self) -> f64 {
        let df = self.frequencies.first().copied().unwrap_or(0.0);
        self.psd.iter().sum::<f64>() * df
    }

    /// Averages the spectrum over log-spaced frequency bins; each point is
    /// `(geometric mean frequency, mean PSD)`.
    pub fn log_binned(&self, bins_per_decade: usize) -> Vec<(f64, f64)> {
        let Some(&f0) = self.frequencies.first() else {
            return Vec::new();
        };
        let width = std::f64::consts::LN_10 / bins_per_decade.max(1) as f64;
        let mut out = Vec::new();
        let mut current: Option<usize> = None;
        let (mut log_f, mut sum_s, mut n) = (0.0, 0.0, 0usize);
        for (&f, &s) in self.frequencies.iter().zip(&self.psd) {
            let bin = ((f / f0).ln() / width + 1e-9).floor() as usize;
            if current != Some(bin) {
                if n > 0 {
                    out.push(((log_f / n as f64).exp(), sum_s / n as f64));
                }
                current = Some(bin);
                (log_f, sum_s, n) = (0.0, 0.0, 0);
            }
            log_f += f.ln();
            sum_s += s;
            n += 1;
        }
        if n > 0 {
            out.push(((log_f / n as f64).exp(), sum_s / n as f64));
        }
        out
    }
}

/// Segment-averaged periodogram.
///
/// The series is cut into `segment_count` non-overlapping segments; each has
/// its mean removed and is transformed without a taper. The result is
/// normalized so that its integral over `(0, Nyquist]` equals the mean
/// segment variance.
pub fn psd_welch(values: &[f64], dt: f64, segment_count: usize) -> Result<SpectrumEstimate> {
    if segment_count == 0 || values.len() < 2 * segment_count * 16 {
        return Err(HerdError::InsufficientData(format!(
            "{} samples are too few for {segment_count} segments",
            values.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(HerdError::config("dt", "must be positive"));
    }
    let len = values.len() / segment_count;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let half = len / 2;
    let mut acc = vec![0.0; half];
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for seg in values.chunks_exact(len).take(segment_count) {
        let mean = seg.iter().sum::<f64>() / len as f64;
        for (b, &v) in buf.iter_mut().zip(seg) {
            *b = Complex::new(v - mean, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k + 1].norm_sqr();
        }
    }
    let norm = dt / (len as f64 * segment_count as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            // Every bin but Nyquist (even length) stands for +f and -f.
            let fold = if len.is_multiple_of(2) && k + 1 == half { 1.0 } else { 2.0 };
            fold * a * norm
        })
        .collect();
    let frequencies = (1..=half).map(|k| k as f64 / (len as f64 * dt)).collect();
    Ok(SpectrumEstimate {
        frequencies,
        psd,
        segments: segment_count,
        dt,
    })
}

/// Least-squares power law in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    /// Negated log-log slope.
    pub exponent: f64,
    pub std_error: f64,
    /// `(lo, hi)` x-range actually used.
    pub range: (f64, f64),
    /// RMS of the log-log residuals.
    pub rms_residual: f64,
    pub n_points: usize,
}

/// Fits `y ~ x^-exponent` to the positive points with `x` in `x_range`.
pub fn fit_power_law(points: &[(f64, f64)], x_range: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = x_range;
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x >= lo && *x <= hi && *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len();
    if n < 5 {
        return Err(HerdError::InsufficientData(format!(
            "{n} points in [{lo}, {hi}], at least 5 required"
        )));
    }
    let nf = n as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(HerdError::InsufficientData("all points share one x".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let used_lo = logs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).exp();
    let used_hi = logs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).exp();
    Ok(PowerLawFit {
        exponent: -slope,
        std_error: (rss / (nf - 2.0) / sxx).sqrt(),
        range: (used_lo, used_hi),
        rms_residual: (rss / nf).sqrt(),
        n_points: n,
    })
}

/// Linear-interpolated quantile of `sorted` (ascending).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = samples.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Default PDF tail range `[3 * median, 99.9th percentile]`.
pub fn default_pdf_fit_range(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(HerdError::InsufficientData("no samples".into()));
    }
    let sorted = sorted_copy(samples);
    Ok((3.0 * quantile_sorted(&sorted, 0.5), quantile_sorted(&sorted, 0.999)))
}

/// Hill estimate of the tail, reported both as the CCDF index and as the
/// PDF exponent (index + 1).
#[derive(Debug, Clone, PartialEq)]
pub struct HillEstimate {
    /// Density exponent: `p(x) ~ x^-pdf_exponent`.
    pub pdf_exponent: f64,
    /// CCDF index: `P(X > x) ~ x^-tail_index`.
    pub tail_index: f64,
    /// `tail_index / sqrt(k)`.
    pub std_error: f64,
    pub k: usize,
    /// PDF exponent at `k/4`, `k/2` and `k`.
    pub profile: Vec<(usize, f64)>,
}

impl HillEstimate {
    /// Relative change of the PDF exponent between `k/4` and `k`.
    pub fn relative_drift(&self) -> f64 {
        let first = self.profile.first().map_or(self.pdf_exponent, |p| p.1);
        (first - self.pdf_exponent) / self.pdf_exponent
    }

    /// A power-law tail gives estimates that stay put as `k` varies; a
    /// lighter tail drifts steadily with the threshold.
    pub fn is_stable(&self, tolerance: f64) -> bool {
        self.relative_drift().abs() <= tolerance
    }
}

fn hill_index(desc: &[f64], k: usize) -> f64 {
    let threshold = desc[k];
    let mean_log = desc[..k].iter().map(|&x| (x / threshold).ln()).sum::<f64>() / k as f64;
    1.0 / mean_log
}

/// Hill estimator over the top `k` order statistics of the positive samples.
pub fn hill_tail_exponent(samples: &[f64], k: usize) -> Result<HillEstimate> {
    let mut desc: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0 && x.is_finite()).collect();
    if k < 4 || k * 10 >= desc.len() {
        return Err(HerdError::InsufficientData(format!(
            "k = {k} needs 4 <= k < n/10 with n = {}",
            desc.len()
        )));
    }
    desc.sort_by(|a, b| b.total_cmp(a));
    let profile: Vec<(usize, f64)> = [k / 4, k / 2, k].iter().map(|&j| (j, hill_index(&desc, j) + 1.0)).collect();
    let tail_index = hill_index(&desc, k);
    Ok(HillEstimate {
        pdf_exponent: tail_index + 1.0,
        tail_index,
        std_error: tail_index / (k as f64).sqrt(),
        k,
        profile,
    })
}

/// Kolmogorov-Smirnov statistic of `samples` against the CDF `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < 100 {
        return Err(HerdError::InsufficientData(format!(
            "{} samples, at least 100 required",
            samples.len()
        )));
    }
    let sorted = sorted_copy(samples);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Kolmogorov-Smirnov statistic for data living on the lattice `k * spacing`.
///
/// Lattice point `k` stands for the cell `[(k - 1/2), (k + 1/2)) * spacing`,
/// so the empirical CDF at `k` is compared with `cdf((k + 1/2) * spacing)`.
/// Without this correction an atom at a boundary where the continuous law
/// has an integrable singularity dominates the statistic.
pub fn ks_distance_lattice<F: Fn(f64) -> f64>(samples: &[f64], spacing: f64, cdf: F) -> Result<f64> {
    if samples.len() < 100 {
        return Err(HerdError::InsufficientData(format!(
            "{} samples, at least 100 required",
            samples.len()
        )));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(HerdError::config("spacing", "lattice spacing must be positive"));
    }
    let mut cells: Vec<i64> = samples.iter().map(|&x| (x / spacing).round() as i64).collect();
    cells.sort_unstable();
    let n = cells.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < cells.len() {
        let k = cells[i];
        let below = i as f64 / n;
        while i < cells.len() && cells[i] == k {
            i += 1;
        }
        let f_lo = cdf((k as f64 - 0.5) * spacing).clamp(0.0, 1.0);
        let f_hi = cdf((k as f64 + 0.5) * spacing).clamp(0.0, 1.0);
        d = d.max((below - f_lo).abs()).max((i as f64 / n - f_hi).abs());
    }
    Ok(d)
}
