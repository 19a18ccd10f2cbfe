//! Link-budget composition for the two-code SIC scheme.
//!
//! The first code sees the derated SNR `(1−α²)·SNR`, the second code the
//! full SNR. Each is characterized by an AWGN frame-error table; the
//! composite frame fails if either constituent frame fails.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capacity::{awgn_bits, c_compound};
use crate::channel::{PdlClass, SnrSpec};
use crate::error::{domain, Error, Result};

/// Table rows closer than this to a query are used directly. Published
/// tables are transcribed at 0.01 dB precision.
pub const SNAP_TOL_DB: f64 = 0.005;

const HEADER: [&str; 4] = ["snr_db", "fer", "rate_bits_per_real_dim", "label"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerRecord {
    pub snr_db: f64,
    pub fer: f64,
    pub rate_bits_per_real_dim: f64,
    pub label: String,
}

/// AWGN frame-error characteristic of one coded-modulation scheme.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FerTable {
    pub entries: Vec<FerRecord>,
    pub source: String,
}

/// Result of a table query.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FerLookup {
    pub snr_db: f64,
    pub fer: f64,
    pub rate_bits_per_real_dim: f64,
    pub label: String,
}

impl FerTable {
    pub fn new(entries: Vec<FerRecord>, source: impl Into<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Format("table has no rows".into()));
        }
        for (i, r) in entries.iter().enumerate() {
            if !r.snr_db.is_finite() {
                return Err(Error::Format(format!("row {}: snr_db is not finite", i + 1)));
            }
            if !(0.0..=1.0).contains(&r.fer) {
                return Err(Error::Format(format!("row {}: fer {} not in [0, 1]", i + 1, r.fer)));
            }
            if !(r.rate_bits_per_real_dim > 0.0) || !r.rate_bits_per_real_dim.is_finite() {
                return Err(Error::Format(format!(
                    "row {}: rate {} must be positive",
                    i + 1,
                    r.rate_bits_per_real_dim
                )));
            }
        }
        if let Some(w) = entries.windows(2).position(|w| !(w[1].snr_db > w[0].snr_db)) {
            return Err(Error::Format(format!(
                "rows {} and {}: snr_db must be strictly increasing",
                w + 1,
                w + 2
            )));
        }
        Ok(Self {
            entries,
            source: source.into(),
        })
    }

    /// Parses CSV with header `snr_db,fer,rate_bits_per_real_dim,label`.
    pub fn from_reader<R: std::io::Read>(reader: R, source: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().ne(HEADER.iter().copied()) {
            return Err(Error::Format(format!(
                "expected header `{}`, got `{}`",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<FerRecord>().enumerate() {
            let row = row.map_err(|e| Error::Format(format!("row {}: {e}", i + 1)))?;
            entries.push(row);
        }
        Self::new(entries, source)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, path.display().to_string())
    }

    pub fn min_db(&self) -> f64 {
        self.entries[0].snr_db
    }

    pub fn max_db(&self) -> f64 {
        self.entries[self.entries.len() - 1].snr_db
    }

    /// FER and rate at `snr_db`. Between rows `log10(FER)` is interpolated
    /// linearly in dB (linear FER when a bracketing row has FER 0); the rate
    /// is interpolated linearly. Queries outside the span are errors.
    pub fn lookup(&self, snr_db: f64) -> Result<FerLookup> {
        if let Some(r) = self
            .entries
            .iter()
            .find(|r| (r.snr_db - snr_db).abs() <= SNAP_TOL_DB)
        {
            return Ok(FerLookup {
                snr_db,
                fer: r.fer,
                rate_bits_per_real_dim: r.rate_bits_per_real_dim,
                label: r.label.clone(),
            });
        }
        if !(snr_db >= self.min_db() && snr_db <= self.max_db()) {
            return Err(Error::OutOfRange {
                required_db: snr_db,
                min_db: self.min_db(),
                max_db: self.max_db(),
            });
        }
        let k = self.entries.partition_point(|r| r.snr_db <= snr_db);
        let (lo, hi) = (&self.entries[k - 1], &self.entries[k]);
        let t = (snr_db - lo.snr_db) / (hi.snr_db - lo.snr_db);
        let fer = if lo.fer > 0.0 && hi.fer > 0.0 {
            10f64.powf(lo.fer.log10() + t * (hi.fer.log10() - lo.fer.log10()))
        } else {
            lo.fer + t * (hi.fer - lo.fer)
        };
        let rate = lo.rate_bits_per_real_dim
            + t * (hi.rate_bits_per_real_dim - lo.rate_bits_per_real_dim);
        let label = if lo.label == hi.label {
            lo.label.clone()
        } else {
            format!("{} / {}", lo.label, hi.label)
        };
        Ok(FerLookup {
            snr_db,
            fer,
            rate_bits_per_real_dim: rate,
            label,
        })
    }
}

fn check_gap(g_db: f64) -> Result<()> {
    if !(g_db >= 0.0) || !g_db.is_finite() {
        return Err(domain(format!("gap must be a finite non-negative dB value, got {g_db}")));
    }
    Ok(())
}

/// Overall gap of the two-code scheme: the mean of the gaps in dB.
pub fn compose_gap(g1_db: f64, g2_db: f64) -> Result<f64> {
    check_gap(g1_db)?;
    check_gap(g2_db)?;
    Ok(0.5 * (g1_db + g2_db))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComposedFer {
    /// `f₁ + f₂ − f₁·f₂` for independent frame errors.
    pub exact: f64,
    /// Union bound `min(f₁ + f₂, 1)`.
    pub bound: f64,
}

pub fn compose_fer(fer1: f64, fer2: f64) -> Result<ComposedFer> {
    for f in [fer1, fer2] {
        if !(0.0..=1.0).contains(&f) {
            return Err(domain(format!("FER must lie in [0, 1], got {f}")));
        }
    }
    Ok(ComposedFer {
        exact: fer1 + fer2 - fer1 * fer2,
        bound: (fer1 + fer2).min(1.0),
    })
}

/// Rates of codes operating at gaps `g1_db`, `g2_db` from the first
/// (derated) and second sub-channel capacities.
pub fn rate_split(alpha: f64, snr: f64, g1_db: f64, g2_db: f64) -> Result<(f64, f64)> {
    let class = PdlClass::new(alpha)?;
    SnrSpec::new(snr)?;
    check_gap(g1_db)?;
    check_gap(g2_db)?;
    let a = class.alpha();
    let g1 = 10f64.powf(g1_db / 10.0);
    let g2 = 10f64.powf(g2_db / 10.0);
    Ok((awgn_bits((1.0 - a * a) * snr / g1), awgn_bits(snr / g2)))
}

/// Gap in dB at which a code of `rate` operates on a scalar AWGN channel
/// of linear SNR `snr`. Negative when the rate exceeds capacity.
pub fn implied_gap_db(rate: f64, snr: f64) -> f64 {
    let needed = (2.0 * rate).exp2() - 1.0;
    10.0 * (snr / needed).log10()
}

/// Linear SNR at which `c_compound(alpha, ·)` reaches `rate`.
pub fn compound_snr_for_rate(alpha: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(domain(format!("rate must be positive, got {rate}")));
    }
    let f = |s: f64| c_compound(alpha, s);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? < rate {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(domain("rate is unreachable"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodePoint {
    pub label: String,
    pub rate: f64,
    /// SNR at which the table was queried.
    pub query_snr_db: f64,
    pub fer: f64,
    pub gap_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub alpha: f64,
    pub snr: SnrSpec,
    pub code1: CodePoint,
    pub code2: CodePoint,
    pub total_rate: f64,
    pub composed_gap_db: f64,
    pub fer_bound: f64,
    pub fer_exact: f64,
    /// The frame-error bound also bounds the bit-error rate.
    pub ber_bound: f64,
    pub c_compound: f64,
    /// `SNR_dB − SNR*_dB` where `c_compound(α, SNR*) = total_rate`.
    pub gap_to_compound_db: f64,
}

pub fn evaluate_operating_point(
    alpha: f64,
    snr: SnrSpec,
    table1: &FerTable,
    table2: &FerTable,
) -> Result<OperatingPoint> {
    let class = PdlClass::new(alpha)?;
    let s = snr.linear();
    let derated = (1.0 - alpha * alpha) * s;
    let derated_db = 10.0 * derated.log10();
    let l1 = table1.lookup(derated_db)?;
    let l2 = table2.lookup(snr.db())?;
    let code1 = CodePoint {
        gap_db: implied_gap_db(l1.rate_bits_per_real_dim, derated),
        label: l1.label,
        rate: l1.rate_bits_per_real_dim,
        query_snr_db: derated_db,
        fer: l1.fer,
    };
    let code2 = CodePoint {
        gap_db: implied_gap_db(l2.rate_bits_per_real_dim, s),
        label: l2.label,
        rate: l2.rate_bits_per_real_dim,
        query_snr_db: snr.db(),
        fer: l2.fer,
    };
    let fer = compose_fer(code1.fer, code2.fer)?;
    let total_rate = 0.5 * (code1.rate + code2.rate);
    let needed = compound_snr_for_rate(class.alpha(), total_rate)?;
    Ok(OperatingPoint {
        alpha,
        snr,
        composed_gap_db: 0.5 * (code1.gap_db + code2.gap_db),
        code1,
        code2,
        total_rate,
        fer_bound: fer.bound,
        fer_exact: fer.exact,
        ber_bound: fer.bound,
        c_compound: c_compound(alpha, s)?,
        gap_to_compound_db: snr.db() - 10.0 * needed.log10(),
    })
}
