use magnongate::config::{parse_config, RunConfig, Spacing, SweepGrid};
use magnongate::model::GateKind;
use magnongate::output::{sweep_csv, CSV_HEADER, CSV_SCHEMA};
use magnongate::sweep::{find_optimum, run_dynamics, run_sweep, PointError, SweepRow};
use proptest::prelude::*;

fn local_extrema(values: &[f64]) -> usize {
    values.windows(3).filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0).count()
}

#[test]
fn cz_sweep_oscillates_at_low_magnon_frequency() {
    let rows = run_sweep(&RunConfig::defaults(GateKind::Cz)).unwrap();
    assert_eq!(rows.len(), 60);
    let low: Vec<f64> = rows.iter().filter(|r| r.is_ok() && r.omega_m_ratio < 0.05).map(|r| r.avg_fidelity).collect();
    let n = local_extrema(&low);
    assert!(n >= 3, "{n} local extrema below ratio 0.05 in {low:?}");
    // Points below the dispersive limit are kept as failed rows.
    let failed: Vec<&SweepRow> = rows.iter().filter(|r| !r.is_ok()).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|r| r.omega_m_ratio < 0.013 && r.error.as_ref().unwrap().kind == "regime"));
}

#[test]
fn icnot_sweep_peaks_near_097() {
    let rows = run_sweep(&RunConfig::defaults(GateKind::Icnot)).unwrap();
    let best = find_optimum(&rows).unwrap();
    assert!((0.95..=0.99).contains(&best.omega_m_ratio), "optimum at {}", best.omega_m_ratio);
}

#[test]
fn iswap_trace_crosses_near_half_gate_time() {
    let cfg = RunConfig::defaults(GateKind::Iswap);
    let table = run_dynamics(&cfg, "|10>", None).unwrap();
    let cross = table.rows.windows(2).find(|w| w[0].values[0] > w[0].values[1] && w[1].values[0] <= w[1].values[1]);
    let t = cross.expect("populations never cross")[1].t;
    assert!((t / table.t_gate_s - 0.5).abs() < 0.1, "crossing at {:.3} T_S", t / table.t_gate_s);
    for r in &table.rows {
        assert!((r.trace - 1.0).abs() < 1e-8);
    }
}

#[test]
fn cz_flips_the_target_phase() {
    let cfg = parse_config("gate = \"cz\"\n").unwrap();
    let table = run_dynamics(&cfg, "|1+>", None).unwrap();
    let first = &table.rows[0];
    let last = table.rows.last().unwrap();
    assert!((first.values[3] - 1.0).abs() < 1e-12);
    assert!((last.values[3] + 1.0).abs() <= 0.03, "<sx_q2>(T_Z) = {}", last.values[3]);
}

#[test]
fn icnot_control_loses_some_excitation() {
    let cfg = parse_config("gate = \"icnot\"\ndynamics.points = 3\n").unwrap();
    let table = run_dynamics(&cfg, "|10>", None).unwrap();
    let n_q1 = table.rows.last().unwrap().values[0];
    assert!(n_q1 > 0.8 && n_q1 < 1.0, "control population {n_q1}");
}

#[test]
fn csv_layout_and_failed_points() {
    let mut cfg = RunConfig::defaults(GateKind::Iswap);
    cfg.sweep = SweepGrid::List(vec![0.9, 0.999]);
    let rows = run_sweep(&cfg).unwrap();
    let csv = sweep_csv(&rows, &cfg);
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with(&format!("# {CSV_SCHEMA} gate=iswap")));
    assert_eq!(lines[1], CSV_HEADER);
    let cols = CSV_HEADER.split(',').count();
    assert!(lines[2..4].iter().all(|l| l.split(',').count() == cols));
    assert!(lines[3].starts_with("0.999,") && lines[3].contains(",,"));
    assert!(lines[4].starts_with("# error omega_m_ratio=0.999 kind=regime"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grids_are_increasing_and_hit_their_endpoints(
        start in 0.01f64..0.5,
        span in 0.01f64..0.49,
        points in 2usize..200,
        log in any::<bool>(),
    ) {
        let stop = start + span;
        let spacing = if log { Spacing::Log } else { Spacing::Linear };
        let grid = SweepGrid::Range { start, stop, points, spacing };
        prop_assert!(grid.validate().is_ok());
        let r = grid.ratios();
        prop_assert_eq!(r.len(), points);
        prop_assert!((r[0] - start).abs() <= 1e-12 * start);
        prop_assert!((r[points - 1] - stop).abs() <= 1e-12 * stop);
        prop_assert!(r.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn optimum_is_the_best_successful_row(values in prop::collection::vec(prop::option::of(0.0f64..1.0), 3..40)) {
        let rows: Vec<SweepRow> = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let ratio = 0.5 + 0.01 * i as f64;
                SweepRow {
                    omega_m_ratio: ratio,
                    omega_m_hz: 6e9 * ratio,
                    e_r: f64::NAN,
                    n_th: f64::NAN,
                    kappa_hz: f64::NAN,
                    coupling_hz: f64::NAN,
                    t_gate_s: f64::NAN,
                    avg_fidelity: v.unwrap_or(f64::NAN),
                    leakage: f64::NAN,
                    wall_time_s: 0.0,
                    error: match v {
                        Some(_) => None,
                        None => Some(PointError { kind: "regime".into(), message: "outside the dispersive regime".into() }),
                    },
                }
            })
            .collect();
        match find_optimum(&rows) {
            Ok(best) => {
                prop_assert!(best.is_ok());
                prop_assert!(rows.iter().filter(|r| r.is_ok()).all(|r| r.avg_fidelity <= best.avg_fidelity));
            }
            Err(_) => prop_assert!(values.iter().all(|v| v.is_none())),
        }
    }
}
