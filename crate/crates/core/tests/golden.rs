//! Frozen outputs of our own runs. Set `UPDATE_GOLDEN=1` to rewrite them.

use std::fs;
use std::path::PathBuf;

use stackgda::fisher::UtilityClass;
use stackgda::harness::{run_experiment, write_series_csv, ClassSettings, ExperimentConfig};

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(want == actual, "{name} no longer matches its golden file");
}

fn series(config: &ExperimentConfig) -> (stackgda::harness::RunReport, String) {
    let report = run_experiment(config).unwrap();
    let mut buf = Vec::new();
    write_series_csv(&report, &mut buf).unwrap();
    (report, String::from_utf8(buf).unwrap())
}

fn single_cd_market(settings: ClassSettings) -> ExperimentConfig {
    ExperimentConfig {
        utility_classes: vec![UtilityClass::CobbDouglas],
        num_markets: 1,
        master_seed: 2024,
        cobb_douglas: settings,
        ..Default::default()
    }
}

#[test]
fn single_cobb_douglas_market_converges() {
    // the allocation rate is lowered from 1 to 0.01; at 1 the dynamics diverge
    let (report, csv) = series(&single_cd_market(ClassSettings {
        eta_alloc: 0.01,
        ..ClassSettings::defaults(UtilityClass::CobbDouglas)
    }));
    let cd = report.class(UtilityClass::CobbDouglas).unwrap();
    let (first, last) = (cd.mean_exploitability[0], *cd.mean_exploitability.last().unwrap());
    assert_eq!(cd.t.len(), 500);
    assert!(last < 0.05 * first, "{first} -> {last}");
    check("cd_single_market_series.csv", &csv);
}

#[test]
fn single_cobb_douglas_market_at_default_rates() {
    let (_, csv) = series(&single_cd_market(ClassSettings::defaults(UtilityClass::CobbDouglas)));
    check("cd_single_market_default_rates_series.csv", &csv);
}

#[test]
fn desk_scale_exploitability_series() {
    let (report, csv) = series(&ExperimentConfig::default());
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    check("desk_scale_series.csv", &csv);
}
