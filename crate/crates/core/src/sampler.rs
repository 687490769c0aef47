//! Monte-Carlo draws from the s-iterated distribution.
//!
//! For `s ≥ 2` the s-iterate has the law of `B·X*` where `B ~ Beta(1, s-1)`
//! and `X*` has density `t^{s-1} f(t) / E X^{s-1}`, because
//! `P(B X* > x) = E(1 - x/X*)_+^{s-1} = E(X-x)_+^{s-1} / E X^{s-1}`.
//! `X*` is `Gamma(α+s-1, θ)` for a Gamma base and `λ Y^{1/α}` with
//! `Y ~ Gamma(1+(s-1)/α, 1)` for a Weibull base.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Weibull};
use rayon::prelude::*;

use crate::csv::{format_number, write_csv, CsvRecord};
use crate::dist::{ln_tail, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::iterate::{iterated_density, iterated_tail, IterationIndex, Method};

/// Draws per RNG stream; stream `c` produces values `c·CHUNK ..`.
const CHUNK: usize = 8192;
const TABLE_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub spec: DistributionSpec,
    pub s: IterationIndex,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl SampleBatch {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.count() as f64
    }

    /// Standard error of [`SampleBatch::mean`].
    pub fn std_error(&self) -> f64 {
        let n = self.count() as f64;
        let m = self.mean();
        let var = self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }

    /// Fraction of values strictly above `x`.
    pub fn empirical_tail(&self, x: f64) -> f64 {
        self.values.iter().filter(|&&v| v > x).count() as f64 / self.count() as f64
    }

    /// Single-column CSV with `#` lines for spec, s and seed.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let meta = [
            ("spec", self.spec.to_string()),
            ("s", self.s.to_string()),
            ("seed", self.seed.to_string()),
        ];
        let rows: Vec<SampleRow> = self.values.iter().map(|&v| SampleRow(v)).collect();
        write_csv(out, &meta, &rows)
    }
}

struct SampleRow(f64);

impl CsvRecord for SampleRow {
    fn header() -> &'static [&'static str] {
        &["value"]
    }

    fn fields(&self) -> Vec<String> {
        vec![format_number(self.0)]
    }
}

enum Law {
    Gamma(Gamma<f64>),
    Exp(Exp<f64>),
    Weibull(Weibull<f64>),
    /// `scale · Y^{1/shape}`
    PoweredGamma { y: Gamma<f64>, scale: f64, inv_shape: f64 },
}

impl Law {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Law::Gamma(d) => d.sample(rng),
            Law::Exp(d) => d.sample(rng),
            Law::Weibull(d) => d.sample(rng),
            Law::PoweredGamma { y, scale, inv_shape } => scale * y.sample(rng).powf(*inv_shape),
        }
    }
}

fn distribution_error(e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("sampler: {e}"))
}

/// The law of `X` for `s = 1`, else of the size-biased `X*`.
fn size_biased_law(spec: &DistributionSpec, s: u32) -> Result<Law> {
    let r = (s - 1) as f64;
    let (shape, scale) = (spec.shape(), spec.scale());
    Ok(match spec.family() {
        Family::Exponential if s == 1 => Law::Exp(Exp::new(spec.rate()).map_err(distribution_error)?),
        Family::Gamma | Family::Exponential => {
            Law::Gamma(Gamma::new(shape + r, scale).map_err(distribution_error)?)
        }
        Family::Weibull if s == 1 => Law::Weibull(Weibull::new(scale, shape).map_err(distribution_error)?),
        Family::Weibull => Law::PoweredGamma {
            y: Gamma::new(1.0 + r / shape, 1.0).map_err(distribution_error)?,
            scale,
            inv_shape: 1.0 / shape,
        },
    })
}

/// `count` draws from the s-iterate of `spec`. Identical for identical
/// `(spec, s, count, seed)` whatever the thread count.
pub fn sample_iterated(
    spec: &DistributionSpec,
    s: IterationIndex,
    count: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let law = size_biased_law(spec, s.get())?;
    let beta_exponent = (s.get() > 1).then(|| 1.0 / (s.get() - 1) as f64);
    let chunks = count.div_ceil(CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            let law = &law;
            (0..len)
                .map(move |_| {
                    let x = law.sample(&mut rng);
                    match beta_exponent {
                        // Beta(1, s-1) by inversion: 1 - U^{1/(s-1)}.
                        Some(p) => {
                            let u: f64 = rng.random();
                            -(p * (1.0 - u).ln()).exp_m1() * x
                        }
                        None => x,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(SampleBatch {
        spec: *spec,
        s,
        seed,
        values,
    })
}

/// `T̄_s` for repeated evaluation: exact when cheap, otherwise cubic Hermite
/// interpolation of tabulated values and derivatives (`T̄_s' = -f_s`).
#[derive(Debug, Clone)]
pub struct TailTable {
    spec: DistributionSpec,
    s: IterationIndex,
    exact: bool,
    xs: Vec<f64>,
    tails: Vec<f64>,
    slopes: Vec<f64>,
}

impl TailTable {
    pub fn new(spec: &DistributionSpec, s: IterationIndex) -> Result<Self> {
        let probe = iterated_tail(spec, s, spec.scale())?;
        let exact = s.get() == 1 || probe.method == Method::ClosedFormGamma;
        let mut table = Self {
            spec: *spec,
            s,
            exact,
            xs: Vec::new(),
            tails: Vec::new(),
            slopes: Vec::new(),
        };
        if exact {
            return Ok(table);
        }
        let mut end = spec.scale();
        while iterated_tail(spec, s, end)?.log_value > -30.0 {
            end *= 1.5;
        }
        // Quadratic spacing concentrates points near zero.
        let xs: Vec<f64> = (0..=TABLE_POINTS)
            .map(|i| end * (i as f64 / TABLE_POINTS as f64).powi(2))
            .collect();
        let pairs = xs
            .par_iter()
            .map(|&x| {
                let t = iterated_tail(spec, s, x)?.value_or_zero();
                let d = iterated_density(spec, s, x)?.value_or_zero();
                Ok((t, -d))
            })
            .collect::<Result<Vec<_>>>()?;
        table.tails = pairs.iter().map(|p| p.0).collect();
        table.slopes = pairs.iter().map(|p| p.1).collect();
        table.xs = xs;
        Ok(table)
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn s(&self) -> IterationIndex {
        self.s
    }

    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if self.exact {
            return if self.s.get() == 1 {
                ln_tail(&self.spec, x).map(f64::exp).unwrap_or(0.0)
            } else {
                iterated_tail(&self.spec, self.s, x).map(|e| e.value_or_zero()).unwrap_or(0.0)
            };
        }
        let last = self.xs.len() - 1;
        if x >= self.xs[last] {
            return 0.0;
        }
        let i = self.xs.partition_point(|&p| p <= x) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * self.tails[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.tails[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1];
        v.clamp(0.0, 1.0)
    }
}

/// `sup |F_n(x) - (1 - T̄_s(x))|` over the batch.
pub fn ks_distance(batch: &SampleBatch) -> Result<f64> {
    Ok(ks_distance_with(batch, &TailTable::new(&batch.spec, batch.s)?))
}

/// [`ks_distance`] against a prebuilt table, for repeated batches of one law.
pub fn ks_distance_with(batch: &SampleBatch, table: &TailTable) -> f64 {
    let mut sorted = batch.values.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let cdf = 1.0 - table.tail(v);
            (i as f64 + 1.0 - n * cdf).max(n * cdf - i as f64) / n
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iterate::{iterated_mean, reference_iterated_tail};

    fn idx(s: u32) -> IterationIndex {
        IterationIndex::new(s).unwrap()
    }

    #[test]
    fn seed_determinism_across_thread_counts() {
        let spec = DistributionSpec::weibull(0.5, 2.0).unwrap();
        let a = sample_iterated(&spec, idx(3), 50_000, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_iterated(&spec, idx(3), 50_000, 11).unwrap());
        assert_eq!(a, b);
        let c = sample_iterated(&spec, idx(3), 50_000, 12).unwrap();
        assert_ne!(a.values, c.values);
        // A prefix of a longer batch is the shorter batch.
        let d = sample_iterated(&spec, idx(3), 20_000, 11).unwrap();
        assert_eq!(d.values[..], a.values[..20_000]);
    }

    #[test]
    fn empirical_tail_examples() {
        let cases = [
            (DistributionSpec::exponential(1.0).unwrap(), 7, 1.0, (-1.0f64).exp()),
            (DistributionSpec::erlang(2, 1.0).unwrap(), 4, 2.0, 0.203_002_924_854_919_5),
        ];
        for (spec, s, x, expected) in cases {
            let b = sample_iterated(&spec, idx(s), 1_000_000, 5).unwrap();
            let se = (expected * (1.0 - expected) / 1e6).sqrt();
            assert!((b.empirical_tail(x) - expected).abs() < 3.0 * se, "{spec}");
        }
    }

    #[test]
    fn representation_matches_recursion_at_low_s() {
        for spec in [
            DistributionSpec::gamma(0.5, 1.0).unwrap(),
            DistributionSpec::weibull(0.5, 1.0).unwrap(),
            DistributionSpec::weibull(2.0, 1.0).unwrap(),
        ] {
            for s in [2, 3] {
                let b = sample_iterated(&spec, idx(s), 200_000, 3).unwrap();
                let it = crate::iterate::ReferenceIteration::build(&spec, idx(s)).unwrap();
                for &x in &[0.2, 1.0, 3.0] {
                    let t = it.tail(x).unwrap().value_or_zero();
                    let se = (t * (1.0 - t) / 2e5).sqrt().max(1e-6);
                    assert!((b.empirical_tail(x) - t).abs() < 4.0 * se, "{spec} s={s} x={x}");
                }
                assert!((reference_iterated_tail(&spec, idx(s), 1.0).unwrap().log_value
                    - iterated_tail(&spec, idx(s), 1.0).unwrap().log_value)
                    .abs()
                    < 1e-8);
            }
        }
    }

    #[test]
    fn batch_mean_matches_iterated_mean() {
        for (spec, s) in [
            (DistributionSpec::gamma(0.5, 1.0).unwrap(), 3),
            (DistributionSpec::weibull(2.0, 1.0).unwrap(), 3),
            (DistributionSpec::gamma(3.7, 2.0).unwrap(), 6),
        ] {
            let b = sample_iterated(&spec, idx(s), 200_000, 9).unwrap();
            let mu = iterated_mean(&spec, idx(s));
            assert!((b.mean() - mu).abs() < 4.0 * b.std_error(), "{spec}");
        }
    }

    #[test]
    fn ks_examples() {
        let spec = DistributionSpec::gamma(0.5, 1.0).unwrap();
        let b = sample_iterated(&spec, idx(3), 100_000, 1).unwrap();
        assert!(ks_distance(&b).unwrap() < 1.63 / (1e5f64).sqrt());
        let constant = SampleBatch {
            values: vec![1.0; 1000],
            ..b.clone()
        };
        assert!(ks_distance(&constant).unwrap() >= 0.5);
        let e = DistributionSpec::exponential(2.0).unwrap();
        for s in [1, 5] {
            let b = sample_iterated(&e, idx(s), 100_000, 2).unwrap();
            assert!(ks_distance(&b).unwrap() < 1.63 / (1e5f64).sqrt());
        }
    }

    #[test]
    fn tail_table_interpolates_accurately() {
        let spec = DistributionSpec::weibull(0.5, 1.0).unwrap();
        let t = TailTable::new(&spec, idx(3)).unwrap();
        for &x in &[1e-4, 0.013, 0.5, 2.7, 40.0] {
            let exact = iterated_tail(&spec, idx(3), x).unwrap().value_or_zero();
            assert!((t.tail(x) - exact).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn csv_export() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let b = sample_iterated(&spec, idx(2), 3, 42).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# spec: exp(rate=1)");
        assert_eq!(lines[1], "# s: 2");
        assert_eq!(lines[2], "# seed: 42");
        assert_eq!(lines[3], "value");
        assert_eq!(lines.len(), 7);
    }
}
