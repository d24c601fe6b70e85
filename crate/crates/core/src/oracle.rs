//! Monte Carlo ground truth for the posterior of mutual information.
//!
//! Each draw samples a chance matrix from the Dirichlet posterior (via
//! normalised unit-scale gamma variates) and evaluates its mutual
//! information exactly. Draws are grouped in fixed-size chunks and every
//! chunk gets its own ChaCha stream derived from `(seed, chunk index)`, so
//! the result is bit-identical for any number of worker threads.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::DistApprox;
use crate::error::{Error, Result};
use crate::info::{i_max, mi_from_parts};
use crate::tables::PosteriorCounts;

/// Draws per independent random stream.
pub const CHUNK: usize = 8192;
/// Above this many draws the samples are binned instead of stored.
pub const SORTED_LIMIT: u64 = 10_000_000;
pub const HISTOGRAM_BINS: usize = 10_000;
/// Hard ceiling on the number of draws in one call.
pub const MAX_SAMPLES: u64 = 10_000_000_000;

/// Empirical distribution of the sampled values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Empirical {
    Sorted(Vec<f64>),
    /// Fixed-width bins on `[0, upper]`.
    Histogram { counts: Vec<u64>, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub sample_count: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub mean_std_error: f64,
    pub seed: u64,
    pub i_max: f64,
    pub empirical: Empirical,
}

impl McSummary {
    pub fn sorted_samples(&self) -> Option<&[f64]> {
        match &self.empirical {
            Empirical::Sorted(v) => Some(v),
            Empirical::Histogram { .. } => None,
        }
    }

    /// Fraction of draws strictly above `eps` (exact for stored samples,
    /// bin-resolution for histograms).
    pub fn exceedance(&self, eps: f64) -> f64 {
        match &self.empirical {
            Empirical::Sorted(v) => {
                let below = v.partition_point(|&x| x <= eps);
                (v.len() - below) as f64 / v.len() as f64
            }
            Empirical::Histogram { counts, upper } => {
                let width = upper / counts.len() as f64;
                let first = ((eps / width).floor().max(0.0) as usize + 1).min(counts.len());
                counts[first..].iter().sum::<u64>() as f64 / self.sample_count as f64
            }
        }
    }
}

/// Samples chance matrices from `Dirichlet(n_11, ..., n_rs)`.
#[derive(Debug, Clone)]
pub struct DirichletSampler {
    rows: usize,
    cols: usize,
    gammas: Vec<Gamma<f64>>,
}

impl DirichletSampler {
    pub fn new(pc: &PosteriorCounts) -> Result<Self> {
        pc.require_positive()?;
        let gammas = pc
            .cells()
            .iter()
            .map(|&shape| {
                Gamma::new(shape, 1.0)
                    .map_err(|e| Error::Domain(format!("gamma shape {shape}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            rows: pc.rows(),
            cols: pc.cols(),
            gammas,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Writes one simplex point into `out` (row-major, length `r*s`).
    pub fn sample_into<R: rand::Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut sum = 0.0;
        for (o, g) in out.iter_mut().zip(&self.gammas) {
            *o = g.sample(rng);
            sum += *o;
        }
        if sum > 0.0 {
            out.iter_mut().for_each(|o| *o /= sum);
        }
    }
}

/// The random stream used for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn fill_chunk(sampler: &DirichletSampler, seed: u64, chunk: u64, out: &mut [f64]) {
    let mut rng = chunk_rng(seed, chunk);
    let (r, s) = (sampler.rows, sampler.cols);
    let mut pi = vec![0.0; r * s];
    let mut rows = vec![0.0; r];
    let mut cols = vec![0.0; s];
    for slot in out.iter_mut() {
        sampler.sample_into(&mut rng, &mut pi);
        rows.iter_mut().for_each(|x| *x = 0.0);
        cols.iter_mut().for_each(|x| *x = 0.0);
        for (k, &p) in pi.iter().enumerate() {
            rows[k / s] += p;
            cols[k % s] += p;
        }
        let total: f64 = rows.iter().sum();
        *slot = if total > 0.0 {
            mi_from_parts(&pi, &rows, &cols, total)
        } else {
            0.0
        };
    }
}

fn check_count(sample_count: u64) -> Result<()> {
    if sample_count == 0 || sample_count > MAX_SAMPLES {
        return Err(Error::Config(format!(
            "sample count must lie in 1..={MAX_SAMPLES}, got {sample_count}"
        )));
    }
    Ok(())
}

/// Mutual information of `sample_count` posterior draws, in draw order.
pub fn sample_raw(pc: &PosteriorCounts, sample_count: u64, seed: u64) -> Result<Vec<f64>> {
    check_count(sample_count)?;
    if sample_count > SORTED_LIMIT {
        return Err(Error::Config(format!(
            "raw samples are kept only up to {SORTED_LIMIT} draws"
        )));
    }
    let sampler = DirichletSampler::new(pc)?;
    let mut out = vec![0.0; sample_count as usize];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| fill_chunk(&sampler, seed, c as u64, chunk));
    Ok(out)
}

/// Running `(count, mean, sum of squared deviations)`.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn of(xs: &[f64]) -> Self {
        let mut m = Moments::default();
        for &x in xs {
            m.n += 1.0;
            let d = x - m.mean;
            m.mean += d / m.n;
            m.m2 += d * (x - m.mean);
        }
        m
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }
}

/// Draws `sample_count` values of I from the posterior and summarises them.
pub fn sample_mi(pc: &PosteriorCounts, sample_count: u64, seed: u64) -> Result<McSummary> {
    check_count(sample_count)?;
    let upper = i_max(pc.rows(), pc.cols());
    let (moments, empirical) = if sample_count <= SORTED_LIMIT {
        let mut samples = sample_raw(pc, sample_count, seed)?;
        let m = samples
            .chunks(CHUNK)
            .map(Moments::of)
            .fold(Moments::default(), Moments::merge);
        samples.sort_unstable_by(f64::total_cmp);
        (m, Empirical::Sorted(samples))
    } else {
        binned(pc, sample_count, seed, upper)?
    };
    let variance = if moments.n > 1.0 {
        moments.m2 / (moments.n - 1.0)
    } else {
        0.0
    };
    Ok(McSummary {
        sample_count,
        mean: moments.mean,
        variance,
        mean_std_error: (variance / sample_count as f64).sqrt(),
        seed,
        i_max: upper,
        empirical,
    })
}

fn binned(pc: &PosteriorCounts, sample_count: u64, seed: u64, upper: f64) -> Result<(Moments, Empirical)> {
    const BATCH: u64 = 64;
    let sampler = DirichletSampler::new(pc)?;
    let chunks = sample_count.div_ceil(CHUNK as u64);
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    let mut moments = Moments::default();
    let bin_of = |x: f64| {
        if upper > 0.0 {
            ((x / upper * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
        } else {
            0
        }
    };
    for start in (0..chunks).step_by(BATCH as usize) {
        let end = (start + BATCH).min(chunks);
        let parts: Vec<(Moments, Vec<u32>)> = (start..end)
            .into_par_iter()
            .map(|c| {
                let len = (sample_count - c * CHUNK as u64).min(CHUNK as u64) as usize;
                let mut buf = vec![0.0; len];
                fill_chunk(&sampler, seed, c, &mut buf);
                let bins = buf.iter().map(|&x| bin_of(x) as u32).collect();
                (Moments::of(&buf), bins)
            })
            .collect();
        for (m, bins) in parts {
            moments = moments.merge(m);
            for b in bins {
                counts[b as usize] += 1;
            }
        }
    }
    Ok((moments, Empirical::Histogram { counts, upper }))
}

/// Kolmogorov-Smirnov distance between the sampled distribution and `d`.
///
/// For binned summaries the edge-evaluated distance is widened by the
/// largest probability `d` puts in a single bin, so the value is an upper
/// bound on the exact distance.
pub fn ks_distance(summary: &McSummary, d: &DistApprox) -> f64 {
    match &summary.empirical {
        Empirical::Sorted(xs) => {
            let n = xs.len() as f64;
            let mut sup = 0.0_f64;
            let mut a = 0;
            while a < xs.len() {
                let x = xs[a];
                let mut b = a + 1;
                while b < xs.len() && xs[b] == x {
                    b += 1;
                }
                sup = sup
                    .max((d.cdf_below(x) - a as f64 / n).abs())
                    .max((d.cdf(x) - b as f64 / n).abs());
                a = b;
            }
            sup.min(1.0)
        }
        Empirical::Histogram { counts, upper } => {
            let n = summary.sample_count as f64;
            let width = upper / counts.len() as f64;
            let mut cum = 0u64;
            let mut sup = d.cdf_below(0.0).abs();
            let mut widest = 0.0_f64;
            let mut prev = d.cdf_below(0.0);
            for (k, &c) in counts.iter().enumerate() {
                cum += c;
                let edge = (k + 1) as f64 * width;
                let f = d.cdf(edge);
                sup = sup.max((f - cum as f64 / n).abs());
                widest = widest.max(f - prev);
                prev = f;
            }
            (sup + widest).min(1.0)
        }
    }
}

/// Which end of the support a tail fit looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Lower,
    Upper,
}

/// Minimum stored draws for a tail fit.
pub const TAIL_MIN_SAMPLES: usize = 100_000;
/// Minimum draws inside the fitted window.
pub const TAIL_MIN_WINDOW: usize = 1000;
const TAIL_BINS: usize = 20;

/// Least-squares slope of log density against log distance to the chosen
/// end of the support, over log-spaced bins covering the quantile window
/// `(q_lo, q_hi)` of that tail (both below 0.2).
pub fn tail_slope(summary: &McSummary, side: Tail, window: (f64, f64)) -> Result<f64> {
    let xs = summary
        .sorted_samples()
        .ok_or_else(|| Error::Config("tail slopes need stored samples".into()))?;
    let (q_lo, q_hi) = window;
    if !(q_lo > 0.0 && q_lo < q_hi && q_hi < 0.2) {
        return Err(Error::Config(format!(
            "tail window must satisfy 0 < lo < hi < 0.2, got ({q_lo}, {q_hi})"
        )));
    }
    if xs.len() < TAIL_MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples, need at least {TAIL_MIN_SAMPLES}",
            xs.len()
        )));
    }
    let n = xs.len();
    let dist: Vec<f64> = match side {
        Tail::Lower => xs.iter().take((q_hi * n as f64).ceil() as usize + 1).copied().collect(),
        Tail::Upper => xs
            .iter()
            .rev()
            .take((q_hi * n as f64).ceil() as usize + 1)
            .map(|&x| summary.i_max - x)
            .collect(),
    };
    let at = |q: f64| dist[((q * n as f64) as usize).min(dist.len() - 1)];
    let (d_lo, d_hi) = (at(q_lo), at(q_hi));
    if !(d_lo > 0.0 && d_hi > d_lo) {
        return Err(Error::InsufficientData(format!(
            "window ({q_lo}, {q_hi}) does not span a positive distance range"
        )));
    }
    let ratio = (d_hi / d_lo).ln() / TAIL_BINS as f64;
    let mut counts = [0usize; TAIL_BINS];
    let mut inside = 0;
    for &d in &dist {
        if d >= d_lo && d < d_hi {
            let k = (((d / d_lo).ln() / ratio) as usize).min(TAIL_BINS - 1);
            counts[k] += 1;
            inside += 1;
        }
    }
    if inside < TAIL_MIN_WINDOW {
        return Err(Error::InsufficientData(format!(
            "{inside} samples in the tail window, need {TAIL_MIN_WINDOW}"
        )));
    }
    let points: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| {
            let left = d_lo * (ratio * k as f64).exp();
            let right = d_lo * (ratio * (k + 1) as f64).exp();
            let density = c as f64 / (n as f64 * (right - left));
            ((left * right).sqrt().ln(), density.ln())
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData("fewer than 3 occupied tail bins".into()));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Writes values as consecutive little-endian IEEE-754 doubles.
pub fn write_samples_le(path: &Path, samples: &[f64]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for x in samples {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}
