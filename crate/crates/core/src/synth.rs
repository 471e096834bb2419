//! Synthetic hourly consumption with daily and weekly seasonality, weather
//! coupling and injected anomalies with known positions.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{SplitBoundaries, SplitFractions, TimeSeriesRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Number of hourly records.
    pub length: usize,
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    pub base_load: f64,
    pub noise_sd: f64,
    /// kWh per °C of deviation from the 15 °C reference temperature.
    pub weather_coupling: f64,
    pub seed: u64,
    pub start: NaiveDateTime,
    /// Window geometry the series must support twice over.
    pub window_length: usize,
    pub horizon: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            length: 8760,
            daily_amplitude: 3.0,
            weekly_amplitude: 1.0,
            base_load: 10.0,
            noise_sd: 0.5,
            weather_coupling: 0.15,
            seed: 0,
            start: NaiveDate::from_ymd_opt(2003, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
            window_length: 48,
            horizon: 24,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.base_load <= 0.0 {
            return Err(Error::Parameter("base_load must be positive".into()));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::Parameter("noise_sd must be non-negative".into()));
        }
        let min = 2 * (self.window_length + self.horizon);
        if self.length < min {
            return Err(Error::Sizing(format!(
                "series of {} hours is shorter than the minimum {min}",
                self.length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyKind {
    /// One hour raised by the magnitude.
    Spike,
    /// Consumption drops by the magnitude for `duration` hours (clipped at 0).
    LevelShift,
    /// Consumption raised by the magnitude for `duration` hours.
    Sustained,
}

/// Where anomalies may be placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyRegion {
    /// Anywhere a window target can land.
    Anywhere,
    /// Only inside the test split.
    TestOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnomalySpec {
    pub count: usize,
    /// Size in units of the series noise SD.
    pub magnitude_sigmas: f64,
    pub kind: AnomalyKind,
    /// Minimum distance in hours between anomaly starts.
    pub min_separation: usize,
    /// Hours affected by level-shift and sustained anomalies.
    pub duration: usize,
    pub region: AnomalyRegion,
}

impl Default for AnomalySpec {
    fn default() -> Self {
        Self {
            count: 30,
            magnitude_sigmas: 8.0,
            kind: AnomalyKind::Spike,
            min_separation: 48,
            duration: 6,
            region: AnomalyRegion::Anywhere,
        }
    }
}

/// Split and window geometry used to keep anomalies out of the first I + h
/// hours of the test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesLayout {
    pub window_length: usize,
    pub horizon: usize,
    pub fractions: SplitFractions,
}

impl Default for SeriesLayout {
    fn default() -> Self {
        Self {
            window_length: 48,
            horizon: 24,
            fractions: SplitFractions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub kind: AnomalyKind,
    pub magnitude: f64,
    /// Row index of each anomaly start.
    pub positions: Vec<usize>,
    pub timestamps: Vec<NaiveDateTime>,
}

pub fn generate_series(cfg: &SynthConfig) -> Result<Vec<TimeSeriesRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");

    // smoothed weather noise: AR(1) processes
    let mut temp_noise = 0.0;
    let mut hum_noise = 0.0;
    let mut wind_noise = 0.0;

    let mut out = Vec::with_capacity(cfg.length);
    for t in 0..cfg.length {
        let ts = cfg.start + chrono::Duration::hours(t as i64);
        let hour = ts.hour() as f64;
        let doy = ts.ordinal() as f64;
        let hours_into_week = ts.weekday().num_days_from_monday() as f64 * 24.0 + hour;

        temp_noise = 0.95 * temp_noise + 0.6 * std_normal.sample(&mut rng);
        hum_noise = 0.9 * hum_noise + 2.0 * std_normal.sample(&mut rng);
        wind_noise = 0.9 * wind_noise + 1.5 * std_normal.sample(&mut rng);

        let temperature = 12.0
            + 10.0 * (2.0 * PI * (doy - 110.0) / 365.25).sin()
            + 4.0 * (2.0 * PI * (hour - 9.0) / 24.0).sin()
            + temp_noise;
        let humidity = (65.0 - 1.5 * (temperature - 12.0) + hum_noise).clamp(5.0, 100.0);
        let wind_speed = (12.0 + 3.0 * (2.0 * PI * doy / 365.25).cos() + wind_noise).max(0.0);

        let energy = cfg.base_load
            + cfg.daily_amplitude * (2.0 * PI * (hour - 8.0) / 24.0).sin()
            + cfg.weekly_amplitude * (2.0 * PI * hours_into_week / 168.0).sin()
            + cfg.weather_coupling * (temperature - 15.0)
            + cfg.noise_sd * std_normal.sample(&mut rng);

        out.push(TimeSeriesRecord {
            timestamp: ts,
            energy: energy.max(0.0),
            temperature: Some(temperature),
            humidity: Some(humidity),
            wind_speed: Some(wind_speed),
        });
    }
    Ok(out)
}

/// Places `spec.count` anomalies with pairwise start gaps of at least
/// `spec.min_separation` hours and applies them. Positions are drawn
/// uniformly over all feasible arrangements.
pub fn inject_anomalies(
    records: &[TimeSeriesRecord],
    spec: &AnomalySpec,
    layout: &SeriesLayout,
    noise_sd: f64,
    seed: u64,
) -> Result<(Vec<TimeSeriesRecord>, GroundTruth)> {
    let magnitude = spec.magnitude_sigmas * noise_sd;
    let mut out = records.to_vec();
    if spec.count == 0 {
        return Ok((
            out,
            GroundTruth {
                kind: spec.kind,
                magnitude,
                positions: vec![],
                timestamps: vec![],
            },
        ));
    }
    let span = match spec.kind {
        AnomalyKind::Spike => 1,
        _ => spec.duration.max(1),
    };
    if spec.min_separation < span {
        return Err(Error::Parameter(format!(
            "min_separation {} is shorter than the anomaly duration {span}",
            spec.min_separation
        )));
    }

    let allowed = allowed_positions(records.len(), spec, layout, span)?;
    let positions = place(&allowed, spec.count, spec.min_separation, seed)?;

    for &p in &positions {
        for r in &mut out[p..p + span] {
            r.energy = match spec.kind {
                AnomalyKind::Spike | AnomalyKind::Sustained => (r.energy + magnitude).max(0.0),
                AnomalyKind::LevelShift => (r.energy - magnitude).max(0.0),
            };
        }
    }
    let timestamps = positions.iter().map(|&p| records[p].timestamp).collect();
    Ok((
        out,
        GroundTruth {
            kind: spec.kind,
            magnitude,
            positions,
            timestamps,
        },
    ))
}

fn allowed_positions(
    total: usize,
    spec: &AnomalySpec,
    layout: &SeriesLayout,
    span: usize,
) -> Result<Vec<usize>> {
    let bounds = SplitBoundaries::compute(total, layout.fractions)?;
    let guard = layout.window_length + layout.horizon;
    let test_start = bounds.test.0;
    let first = match spec.region {
        AnomalyRegion::Anywhere => layout.window_length,
        AnomalyRegion::TestOnly => test_start + guard,
    };
    // The last window's first target hour is `total - horizon`.
    let last = total.saturating_sub(span.max(layout.horizon));
    Ok((first..=last)
        .filter(|&p| !(p + span > test_start && p < test_start + guard))
        .collect())
}

// Uniform placement of `count` points with minimum gap `sep` over the
// compressed index space `allowed` (stars and bars). Gaps in compressed
// coordinates never exceed the gaps in real coordinates.
fn place(allowed: &[usize], count: usize, sep: usize, seed: u64) -> Result<Vec<usize>> {
    let needed = (count - 1) * sep + 1;
    if allowed.len() < needed {
        return Err(Error::Placement(format!(
            "{count} anomalies {sep} hours apart need {needed} candidate hours, only {} available",
            allowed.len()
        )));
    }
    let slack = allowed.len() - needed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets: Vec<usize> = (0..count).map(|_| rng.gen_range(0..=slack)).collect();
    offsets.sort_unstable();
    Ok(offsets
        .iter()
        .enumerate()
        .map(|(k, &u)| allowed[u + k * sep])
        .collect())
}
