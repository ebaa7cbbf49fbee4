use std::path::PathBuf;

use magnongate::config::{load_config, parse_config, IxSource, MagnonInitConfig, RunConfig, SweepGrid};
use magnongate::error::Error;
use magnongate::geometry::PotentialVariant;
use magnongate::lindblad::MagnonInit;
use magnongate::model::GateKind;

fn sample(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn every_sample_config_loads() {
    let dir = sample("");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap();
            n += 1;
        }
    }
    assert!(n >= 3);
}

#[test]
fn explicit_iswap_sample_spells_out_the_defaults() {
    let cfg = load_config(&sample("iswap_derived.toml")).unwrap();
    let mut want = RunConfig::defaults(GateKind::Iswap);
    want.seed = 1;
    want.output.csv = Some("iswap_sweep.csv".into());
    want.output.svg = Some("iswap_sweep.svg".into());
    assert_eq!(cfg.sweep.ratios(), want.sweep.ratios());
    assert_eq!(cfg.device, want.device);
    assert_eq!(cfg.dims, want.dims);
    assert_eq!(cfg.output, want.output);
    assert!(!cfg.direct && cfg.parallel);
}

#[test]
fn thermal_cz_sample() {
    let cfg = load_config(&sample("cz_thermal.toml")).unwrap();
    assert_eq!(cfg.gate, GateKind::Cz);
    assert!(cfg.direct);
    assert_eq!(cfg.dims, [3, 3, 12]);
    assert_eq!(cfg.magnon_init, MagnonInitConfig::Thermal(Some(0.99)));
    assert_eq!(cfg.magnon_init.resolve(1.013), MagnonInit::Thermal(0.99));
    assert_eq!(cfg.sweep, SweepGrid::List(vec![0.027]));
    assert_eq!(cfg.dynamics_ratio(), 0.027);
    assert!(cfg.overrides_for(GateKind::Cz).coupling.is_some());
}

#[test]
fn geometry_sample_resolves_i_x() {
    let cfg = load_config(&sample("icnot_geometry.toml")).unwrap();
    assert_eq!(cfg.i_x_source, IxSource::Model(PotentialVariant::EllipsoidExact));
    let i_x = cfg.resolved_device().unwrap().magnet.i_x;
    assert!((i_x * 1e-6 + 0.1201).abs() < 1e-3, "I_x = {} /um", i_x * 1e-6);
    assert_eq!(cfg.sweep.ratios().len(), 10);
}

#[test]
fn malformed_files_report_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("dup.toml", "seed = 1\nseed = 2\n", 2),
        ("syntax.toml", "gate = \"cz\"\n[dims\nmagnon = 4\n", 2),
        ("type.toml", "[magnon]\ninit = 3\n", 2),
    ];
    for (name, text, line) in cases {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        match load_config(&p) {
            Err(Error::Parse { line: got, message }) => assert_eq!(got, line, "{name}: {message}"),
            other => panic!("{name}: expected a parse error, got {other:?}"),
        }
    }
}

#[test]
fn out_of_range_values_name_the_key() {
    for (text, key) in [
        ("[dims]\nmagnon = 1\n", "dims.magnon"),
        ("[device.env]\nt1_s = -1.0\n", "device"),
        ("[sweep]\nratios = [0.5, 0.0]\n", "sweep"),
        ("[sweep]\nratios = [0.5]\npoints = 4\n", "sweep"),
        ("[dynamics]\npoints = 1\n", "dynamics.points"),
        ("[magnon]\nn_th = 0.5\n", "magnon.n_th"),
    ] {
        match parse_config(text) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with(key), "{text}: {path}"),
            other => panic!("{text}: expected a config error, got {other:?}"),
        }
    }
}
