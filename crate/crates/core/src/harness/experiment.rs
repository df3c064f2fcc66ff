use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use crate::error::{Error, Result};
use crate::fisher::{
    analytic_cobb_douglas, generate_market, reference_descent, run_mbrd, EquilibriumCertificate, FisherMarket,
    MarketSpec, MarketState, MbrdConfig, ReferenceDescentOptions, UtilityClass,
};
use crate::projection::{ProjectionMode, ProjectionOptions};

use super::plot::emit_plot;

/// Environment variable that replaces `master_seed` when loading a config.
pub const SEED_ENV: &str = "STACKGDA_SEED";

/// Horizon, step sizes and log shift used for one utility class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSettings {
    pub horizon: usize,
    pub eta_price: f64,
    pub eta_alloc: f64,
    pub delta: f64,
}

impl ClassSettings {
    pub fn defaults(class: UtilityClass) -> Self {
        match class {
            UtilityClass::Linear => Self {
                horizon: 1000,
                eta_price: 3.0,
                eta_alloc: 0.1,
                delta: 1e-3,
            },
            UtilityClass::CobbDouglas => Self {
                horizon: 500,
                eta_price: 3.0,
                eta_alloc: 1.0,
                delta: 0.0,
            },
            UtilityClass::Leontief => Self {
                horizon: 500,
                eta_price: 3.0,
                eta_alloc: 1.0,
                delta: 1e-3,
            },
        }
    }
}

/// A batch of MBRD runs on random markets, one batch per utility class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub utility_classes: Vec<UtilityClass>,
    pub num_markets: usize,
    pub n: usize,
    pub m: usize,
    pub budget_range: (f64, f64),
    pub valuation_range: (f64, f64),
    pub price_init_range: (f64, f64),
    pub linear: ClassSettings,
    pub cobb_douglas: ClassSettings,
    pub leontief: ClassSettings,
    pub master_seed: u64,
    /// Worker threads; `None` uses every core. Results do not depend on it,
    /// so it is read but never written out.
    #[serde(skip_serializing)]
    pub parallelism: Option<usize>,
    pub projection: ProjectionMode,
    pub lagged_constraint: bool,
    /// Exploitability is evaluated every `eval_stride` iterations and at `T`.
    pub eval_stride: usize,
    pub oracle_iterations: usize,
    /// Relative duality gap a reference equilibrium must reach to be used.
    pub oracle_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let spec = MarketSpec::default();
        Self {
            utility_classes: UtilityClass::ALL.to_vec(),
            num_markets: 50,
            n: spec.n,
            m: spec.m,
            budget_range: spec.budget_range,
            valuation_range: spec.valuation_range,
            price_init_range: (5.0, 15.0),
            linear: ClassSettings::defaults(UtilityClass::Linear),
            cobb_douglas: ClassSettings::defaults(UtilityClass::CobbDouglas),
            leontief: ClassSettings::defaults(UtilityClass::Leontief),
            master_seed: 0,
            parallelism: None,
            projection: ProjectionMode::Dykstra,
            lagged_constraint: false,
            eval_stride: 1,
            oracle_iterations: 200_000,
            oracle_tol: 1e-5,
        }
    }
}

impl ExperimentConfig {
    /// 500 markets per class.
    pub fn paper_scale(mut self) -> Self {
        self.num_markets = 500;
        self
    }

    pub fn settings(&self, class: UtilityClass) -> &ClassSettings {
        match class {
            UtilityClass::Linear => &self.linear,
            UtilityClass::CobbDouglas => &self.cobb_douglas,
            UtilityClass::Leontief => &self.leontief,
        }
    }

    pub fn settings_mut(&mut self, class: UtilityClass) -> &mut ClassSettings {
        match class {
            UtilityClass::Linear => &mut self.linear,
            UtilityClass::CobbDouglas => &mut self.cobb_douglas,
            UtilityClass::Leontief => &mut self.leontief,
        }
    }

    pub fn market_spec(&self) -> MarketSpec {
        MarketSpec {
            n: self.n,
            m: self.m,
            budget_range: self.budget_range,
            valuation_range: self.valuation_range,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_markets == 0 {
            return bad("num_markets must be at least 1".into());
        }
        if self.utility_classes.is_empty() {
            return bad("no utility classes selected".into());
        }
        if self.eval_stride == 0 || self.oracle_iterations == 0 {
            return bad("eval_stride and oracle_iterations must be at least 1".into());
        }
        if self.parallelism == Some(0) {
            return bad("parallelism must be at least 1".into());
        }
        let (lo, hi) = self.price_init_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("price_init_range {:?} must be positive and ordered", self.price_init_range));
        }
        for class in &self.utility_classes {
            let s = self.settings(*class);
            if s.horizon == 0 || !(s.eta_price > 0.0) || !(s.eta_alloc > 0.0) || !(s.delta >= 0.0) {
                return bad(format!("{class}: horizon and rates must be positive, delta nonnegative"));
            }
        }
        // surfaces range errors before any work starts
        generate_market(0, &self.market_spec(), UtilityClass::Linear)?;
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(s)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a JSON config; `STACKGDA_SEED`, when set, replaces `master_seed`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut config = Self::from_json_str(&fs::read_to_string(path)?)?;
        config.apply_env()?;
        Ok(config)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.master_seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={raw} is not an unsigned integer")))?;
        }
        Ok(())
    }

    /// Git blob hash of the canonical JSON encoding.
    pub fn content_hash(&self) -> Result<String> {
        let body = serde_json::to_vec(self)?;
        let mut h = Sha1::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(&body);
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// What a derived seed is used for.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum SeedPurpose {
    Market = 0,
    InitialPrices = 1,
    Selection = 2,
}

/// Counter-based seed for market `index`: the same value no matter which
/// worker computes it or in what order.
pub fn derive_seed(master: u64, index: u64, purpose: SeedPurpose) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index * 4 + purpose as u64);
    rng.random()
}

/// Outcome of one market in a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketRun {
    pub index: usize,
    pub market: FisherMarket,
    pub initial_prices: Vec<f64>,
    pub certificate: EquilibriumCertificate,
    /// Exploitability of the average price at each evaluated iteration.
    pub exploitability: Vec<f64>,
}

impl MarketRun {
    pub fn included(&self) -> bool {
        self.certificate.certified
    }
}

/// One line of the per-market summary in `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSummary {
    pub index: usize,
    pub seed: u64,
    pub f_star: f64,
    pub duality_gap: f64,
    pub clearing_residual: f64,
    pub certified: bool,
    pub final_exploitability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: UtilityClass,
    pub horizon: usize,
    pub eval_stride: usize,
    /// Iterations at which the series are evaluated.
    pub t: Vec<usize>,
    pub mean_exploitability: Vec<f64>,
    /// `mean_exploitability(t) * sqrt(t)`.
    pub normalized_exploitability: Vec<f64>,
    pub markets_used: usize,
    pub markets_excluded: usize,
    pub markets: Vec<MarketSummary>,
    #[serde(skip)]
    pub runs: Vec<MarketRun>,
}

impl ClassReport {
    /// Mean exploitability at the evaluated iteration closest to `t`.
    pub fn mean_at(&self, t: usize) -> f64 {
        let k = self.t.partition_point(|s| *s < t).min(self.t.len() - 1);
        self.mean_exploitability[k]
    }

    pub fn final_normalized(&self) -> f64 {
        *self.normalized_exploitability.last().expect("series are nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub input_hash: String,
    pub classes: Vec<ClassReport>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl RunReport {
    pub fn class(&self, class: UtilityClass) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.class == class)
    }
}

fn eval_points(horizon: usize, stride: usize) -> Vec<usize> {
    let mut t: Vec<usize> = (1..=horizon).filter(|t| t.is_multiple_of(stride)).collect();
    if t.last() != Some(&horizon) {
        t.push(horizon);
    }
    t
}

fn run_market(config: &ExperimentConfig, class: UtilityClass, index: usize) -> Result<MarketRun> {
    let settings = config.settings(class);
    let idx = index as u64;
    let market = generate_market(
        derive_seed(config.master_seed, idx, SeedPurpose::Market),
        &config.market_spec(),
        class,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.master_seed, idx, SeedPurpose::InitialPrices));
    let (lo, hi) = config.price_init_range;
    let initial_prices: Vec<f64> = (0..config.m).map(|_| rng.random_range(lo..=hi)).collect();

    let certificate = match class {
        UtilityClass::CobbDouglas => analytic_cobb_douglas(&market, config.oracle_tol)?,
        _ => reference_descent(
            &market,
            &ReferenceDescentOptions {
                iterations: config.oracle_iterations,
                step_scale: None,
                tol: config.oracle_tol,
            },
        )?,
    };

    let mbrd = MbrdConfig {
        delta: settings.delta,
        projection: ProjectionOptions {
            mode: config.projection,
            ..Default::default()
        },
        lagged_constraint: config.lagged_constraint,
        seed: derive_seed(config.master_seed, idx, SeedPurpose::Selection),
        record_every: config.eval_stride,
        ..MbrdConfig::new(settings.horizon, settings.eta_price, settings.eta_alloc)
    };
    let start = MarketState::equal_spending(&market, initial_prices.clone())?;
    let out = run_mbrd(&market, &start, &mbrd)?;
    let mut exploitability = out.average_price_exploitability(&market, certificate.f_star)?;
    // drop the initial point; the series starts at t = 1
    exploitability.remove(0);
    Ok(MarketRun {
        index,
        market,
        initial_prices,
        certificate,
        exploitability,
    })
}

/// Runs MBRD on `num_markets` random markets per class and reduces the
/// exploitability of the average prices to a mean series.
///
/// Markets whose reference equilibrium is not certified are excluded from
/// the mean and reported in `warnings`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut classes = Vec::new();
    let mut warnings = Vec::new();
    for &class in &config.utility_classes {
        let runs: Vec<MarketRun> = pool.install(|| {
            (0..config.num_markets)
                .into_par_iter()
                .map(|k| run_market(config, class, k))
                .collect::<Result<_>>()
        })?;
        let settings = config.settings(class);
        let t = eval_points(settings.horizon, config.eval_stride);
        let used: Vec<&MarketRun> = runs.iter().filter(|r| r.included()).collect();
        for r in runs.iter().filter(|r| !r.included()) {
            warnings.push(format!(
                "{class} market {} excluded: reference equilibrium gap {:e}",
                r.index, r.certificate.duality_gap
            ));
        }
        let mean_exploitability: Vec<f64> = (0..t.len())
            .map(|k| {
                let total: f64 = used.iter().map(|r| r.exploitability[k]).sum();
                if used.is_empty() { f64::NAN } else { total / used.len() as f64 }
            })
            .collect();
        let normalized_exploitability = t
            .iter()
            .zip(&mean_exploitability)
            .map(|(t, e)| e * (*t as f64).sqrt())
            .collect();
        let markets = runs
            .iter()
            .map(|r| MarketSummary {
                index: r.index,
                seed: r.market.seed.unwrap_or_default(),
                f_star: r.certificate.f_star,
                duality_gap: r.certificate.duality_gap,
                clearing_residual: r.certificate.clearing_residual,
                certified: r.certificate.certified,
                final_exploitability: *r.exploitability.last().expect("horizon is positive"),
            })
            .collect();
        classes.push(ClassReport {
            class,
            horizon: settings.horizon,
            eval_stride: config.eval_stride,
            t,
            mean_exploitability,
            normalized_exploitability,
            markets_used: used.len(),
            markets_excluded: runs.len() - used.len(),
            markets,
            runs,
        });
    }
    Ok(RunReport {
        config: config.clone(),
        input_hash: config.content_hash()?,
        classes,
        warnings,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// Header of `series.csv`.
pub const SERIES_HEADER: [&str; 4] = ["class", "t", "mean_exploitability", "normalized_exploitability"];

pub fn write_series_csv<W: std::io::Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for c in &report.classes {
        for k in 0..c.t.len() {
            w.write_record([
                c.class.to_string(),
                c.t[k].to_string(),
                c.mean_exploitability[k].to_string(),
                c.normalized_exploitability[k].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Writes `config.json`, `markets/*.json`, `series.csv`, `report.json` and
/// `plot.svg` under `dir`, plus a `meta.json` sidecar holding the only
/// run-dependent values (wall clock and finish time).
pub fn write_report(report: &RunReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let markets = dir.join("markets");
    fs::create_dir_all(&markets)?;
    write_json(&dir.join("config.json"), &report.config)?;
    for c in &report.classes {
        for r in &c.runs {
            write_json(&markets.join(format!("{}-{:04}.json", c.class, r.index)), r)?;
        }
    }
    write_series_csv(report, fs::File::create(dir.join("series.csv"))?)?;
    write_json(&dir.join("report.json"), report)?;
    emit_plot(report, dir.join("plot.svg"))?;
    let finished = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    write_json(
        &dir.join("meta.json"),
        &serde_json::json!({
            "wall_clock_secs": report.wall_clock_secs,
            "finished_unix": finished,
            "input_hash": report.input_hash,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            utility_classes: vec![UtilityClass::CobbDouglas, UtilityClass::Linear],
            num_markets: 3,
            n: 2,
            m: 3,
            linear: ClassSettings {
                horizon: 40,
                eta_price: 0.3,
                eta_alloc: 0.01,
                delta: 1e-3,
            },
            cobb_douglas: ClassSettings {
                horizon: 30,
                eta_price: 1.0,
                eta_alloc: 0.01,
                delta: 0.0,
            },
            oracle_iterations: 20_000,
            oracle_tol: 1e-3,
            ..Default::default()
        }
    }

    #[test]
    fn defaults_follow_the_reference_protocol() {
        let c = ExperimentConfig::default();
        assert_eq!((c.num_markets, c.n, c.m), (50, 5, 8));
        assert_eq!(c.clone().paper_scale().num_markets, 500);
        assert_eq!((c.linear.horizon, c.cobb_douglas.horizon, c.leontief.horizon), (1000, 500, 500));
        assert_eq!((c.linear.eta_price, c.linear.eta_alloc), (3.0, 0.1));
        assert_eq!((c.leontief.eta_price, c.leontief.eta_alloc), (3.0, 1.0));
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let zero = ExperimentConfig {
            num_markets: 0,
            ..Default::default()
        };
        assert!(matches!(zero.validate(), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_json_str(r#"{"num_markets": 0}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"typo_field": 1}"#).is_err());
        let partial = ExperimentConfig::from_json_str(r#"{"num_markets": 7, "master_seed": 3}"#).unwrap();
        assert_eq!((partial.num_markets, partial.master_seed, partial.m), (7, 3, 8));
    }

    #[test]
    fn seeds_are_counter_based() {
        assert_eq!(derive_seed(1, 5, SeedPurpose::Market), derive_seed(1, 5, SeedPurpose::Market));
        assert_ne!(derive_seed(1, 5, SeedPurpose::Market), derive_seed(1, 6, SeedPurpose::Market));
        assert_ne!(derive_seed(1, 5, SeedPurpose::Market), derive_seed(1, 5, SeedPurpose::Selection));
        assert_ne!(derive_seed(1, 5, SeedPurpose::Market), derive_seed(2, 5, SeedPurpose::Market));
    }

    #[test]
    fn reports_are_reproducible_and_consistent() {
        let cfg = tiny();
        let a = run_experiment(&cfg).unwrap();
        let serial = run_experiment(&ExperimentConfig {
            parallelism: Some(1),
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(a.classes, serial.classes);
        let cd = a.class(UtilityClass::CobbDouglas).unwrap();
        assert_eq!(cd.t.len(), 30);
        assert_eq!(cd.normalized_exploitability.len(), 30);
        for (k, mean) in cd.mean_exploitability.iter().enumerate() {
            let recomputed: f64 = cd.runs.iter().map(|r| r.exploitability[k]).sum::<f64>() / 3.0;
            assert!((recomputed - mean).abs() < 1e-12);
            assert!(*mean >= -1e-9);
        }
        assert_eq!(a.input_hash.len(), 40);
    }

    #[test]
    fn strided_evaluation_ends_at_the_horizon() {
        assert_eq!(eval_points(10, 4), vec![4, 8, 10]);
        assert_eq!(eval_points(3, 1), vec![1, 2, 3]);
    }

    #[test]
    fn artifacts_are_written() {
        let report = run_experiment(&tiny()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(&report, dir.path()).unwrap();
        for f in ["config.json", "series.csv", "report.json", "plot.svg", "meta.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert_eq!(fs::read_dir(dir.path().join("markets")).unwrap().count(), 6);
        let series = fs::read_to_string(dir.path().join("series.csv")).unwrap();
        assert!(series.starts_with("class,t,mean_exploitability,normalized_exploitability\n"));
        let back: ExperimentConfig =
            serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
        assert_eq!(back, report.config);
        let threaded = ExperimentConfig {
            parallelism: Some(3),
            ..report.config.clone()
        };
        assert_eq!(threaded.content_hash().unwrap(), report.input_hash);
    }
}
