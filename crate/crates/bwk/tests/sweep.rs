use bwk::config::ExperimentConfig;
use bwk::sweep::{run_sweep, write_csv, SweepOptions, CSV_HEADER};
use bwk::trace::{read_trace, replay, write_trace};

fn config() -> ExperimentConfig {
    ExperimentConfig::from_toml(
        r#"
spec_version = 1
b_grid = [200.0, 800.0]
reps = 5
seed = 21

[instance]
case = "case2"
[instance.scenario]
name = "sensors"
rewards = [0.3, 0.5, 0.6, 0.8]
energy = [0.2, 0.5, 0.4, 0.9]
battery_ratios = [0.1, 0.2, 0.15, 0.3]

[[policies]]
id = "ucb-simplex"
kind = "ucb-simplex"

[[policies]]
id = "ucb1"
kind = "ucb1"

[[policies]]
id = "adaptive-lp"
kind = "adaptive-lp"
"#,
    )
    .unwrap()
}

fn csv_bytes(cfg: &ExperimentConfig, jobs: Option<usize>) -> Vec<u8> {
    let r = run_sweep(
        cfg,
        &SweepOptions {
            jobs,
            ..Default::default()
        },
    )
    .unwrap();
    let mut buf = Vec::new();
    write_csv(&r, &mut buf).unwrap();
    buf
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = config();
    let a = csv_bytes(&cfg, None);
    assert_eq!(a, csv_bytes(&cfg, None));
    assert_eq!(a, csv_bytes(&cfg, Some(1)));
    assert_eq!(a, csv_bytes(&cfg, Some(5)));
}

#[test]
fn csv_layout() {
    let text = String::from_utf8(csv_bytes(&config(), Some(1))).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.len());
        for f in &fields[3..] {
            if !f.is_empty() {
                let (mantissa, exp) = f.split_once('e').expect("scientific notation");
                assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{f}");
                exp.parse::<i32>().unwrap();
            }
        }
    }
}

#[test]
fn trace_round_trip_and_replay() {
    let cfg = config();
    let r = run_sweep(
        &cfg,
        &SweepOptions {
            record_trace: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.episodes.len(), 3 * 2 * 5);
    let mut buf = Vec::new();
    write_trace(&cfg, &r.episodes, &mut buf).unwrap();
    let lines = read_trace(buf.as_slice()).unwrap();
    let total: usize = r
        .episodes
        .iter()
        .map(|(_, e)| e.trace.as_ref().unwrap().len())
        .sum();
    assert_eq!(lines.len(), total);
    let rebuilt = replay(&lines, 4, 5);
    for (cell, ep) in &r.episodes {
        let est = &rebuilt[&(cell.policy, cell.budget, cell.rep)];
        assert!(est.counter_distance(&ep.estimator) <= 1e-12);
    }
}

#[test]
fn malformed_trace_lines_are_reported() {
    let err = read_trace("{\"policy_id\": 3}\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains("line 1"));
}

#[test]
fn growth_needs_three_points() {
    let mut cfg = config();
    let r = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert!(r.growth.iter().all(|(_, g)| g.is_none()));
    cfg.b_grid = vec![200.0, 400.0, 800.0];
    let r = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert!(r.growth.iter().all(|(_, g)| g.is_some()));
}
