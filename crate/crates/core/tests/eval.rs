use hrr_core::config::RunConfig;
use hrr_core::eval::{default_scenarios, run_scenario, sweep, Acquisition, Scenario};

fn scenario(name: &str) -> Scenario {
    default_scenarios(&RunConfig::default()).into_iter().find(|s| s.name == name).unwrap()
}

#[test]
fn two_scenarios_archive_six_reports() {
    let table = sweep(&[scenario("recovery_152_120"), scenario("clean_constant")]).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.archived_reports(), 6);

    let dir = tempfile::tempdir().unwrap();
    table.write_archive(dir.path()).unwrap();
    for s in ["recovery_152_120", "clean_constant"] {
        for k in 0..3 {
            let rep = dir.path().join(s).join(format!("rep_{k}"));
            for f in ["trace.csv", "trace.csv.meta", "hr.csv", "report.txt", "report.json", "modes.csv", "labels.csv", "config.txt"] {
                assert!(rep.join(f).is_file(), "{}", rep.join(f).display());
            }
        }
    }
    let csv = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
    assert_eq!(csv, table.to_csv());
}

#[test]
fn aggregates_match_the_written_values() {
    let row = run_scenario(&scenario("recovery_152_120")).unwrap();
    let csv = hrr_core::eval::ScoreTable { rows: vec![row.clone()] }.to_csv();
    let line = csv.lines().nth(1).unwrap();
    let cells: Vec<&str> = line.split(',').collect();
    let values: Vec<f64> = cells[5].split(';').map(|v| v.parse().unwrap()).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    assert_eq!(cells[3].parse::<f64>().unwrap(), mean);
    assert!((cells[4].parse::<f64>().unwrap() - var.sqrt()).abs() < 1e-12);
    assert!(mean <= 3.5, "{line}");
}

#[test]
fn lost_tracking_is_a_failed_cell() {
    let mut cfg = RunConfig::default();
    cfg.noise_floor = 1e4;
    let s = Scenario::new("buried", cfg, Acquisition::Radar { second_target: None });
    let row = run_scenario(&s).unwrap();
    assert_eq!(row.failed(), 3);
    assert_eq!(row.mean(), None);
    for rep in &row.repetitions {
        assert!(rep.result.as_ref().unwrap_err().contains("tracking lost"));
        assert!(rep.files.iter().any(|(n, _)| n == "error.txt"));
    }
    let csv = hrr_core::eval::ScoreTable { rows: vec![row] }.to_csv();
    assert!(csv.ends_with("buried,3,3,NaN,NaN,failed;failed;failed\n"), "{csv}");
}

#[test]
fn easy_scenarios_meet_their_targets() {
    for (name, target) in [("clean_constant", 2.0), ("zero_noise_no_harmonics", 1.0), ("recovery_152_120", 3.5)] {
        let row = run_scenario(&scenario(name)).unwrap();
        assert_eq!(row.failed(), 0, "{name}");
        assert!(row.mean().unwrap() <= target, "{name}: {:?}", row.mean());
    }
}

#[test]
fn coincidence_scenario_exercises_the_rule() {
    let row = run_scenario(&scenario("harmonic_coincidence")).unwrap();
    assert!(row.repetitions.iter().all(|r| r.coincidence_windows > 0));
}
