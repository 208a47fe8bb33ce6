use feyncoh_cli::config::{parse_str, to_toml, Experiment, Mode};
use feyncoh_cli::presets::PRESETS;

const MINIMAL_HBT: &str = r#"
name = "hbt"
experiment = "hbt"

[[sources]]
kind = "thermal"
spectrum = "rectangular"
omega0 = "3e15 rad/s"
delta_omega = "1 THz"
"#;

#[test]
fn minimal_thermal_hbt_parses() {
    let cfg = parse_str(MINIMAL_HBT).unwrap();
    assert_eq!(cfg.experiment, Experiment::Hbt);
    assert_eq!(cfg.mode, Mode::Both);
    assert_eq!(cfg.sources.len(), 1);
    assert_eq!(cfg.sources[0].delta_omega, Some(2.0 * std::f64::consts::PI * 1e12));
}

#[test]
fn every_preset_parses_and_round_trips() {
    for (name, text) in PRESETS {
        let cfg = parse_str(text).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert_eq!(&cfg.name, name);
        let again = parse_str(&to_toml(&cfg)).unwrap_or_else(|e| panic!("{name} reparse: {e:?}"));
        assert_eq!(cfg, again, "{name}");
    }
}

#[test]
fn negative_width_names_the_key() {
    let text = MINIMAL_HBT.replace("\"1 THz\"", "\"-1 GHz\"");
    let errs = parse_str(&text).unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].key, "sources[0].delta_omega");
    assert!(errs[0].message.contains("> 0"), "{}", errs[0].message);
    assert_eq!(errs[0].line, Some(9));
}

#[test]
fn laser_with_random_phase_is_rejected() {
    let text = r#"
name = "bad"
experiment = "hbt"

[[sources]]
kind = "laser"
omega0 = "3e15 rad/s"
phase_model = "random"
"#;
    let errs = parse_str(text).unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].key, "sources[0].phase_model");
    assert!(errs[0].message.contains("phase"), "{}", errs[0].message);
    assert_eq!(errs[0].line, Some(8));
}

#[test]
fn all_errors_are_reported_with_lines() {
    let text = r#"
name = "bad"
experiment = "hbt"
mode = "sometimes"
colour = "red"

[grid]
half_span = "3 kg"

[[sources]]
kind = "thermal"
omega0 = "3e15"
extent = "-1 mm"
"#;
    let errs = parse_str(text).unwrap_err();
    let keys: Vec<&str> = errs.iter().map(|e| e.key.as_str()).collect();
    for k in ["mode", "colour", "grid.half_span", "sources[0].omega0", "sources[0].extent"] {
        assert!(keys.contains(&k), "missing {k} in {keys:?}");
    }
    assert!(errs.iter().all(|e| e.line.is_some()), "{errs:?}");
    let unknown = errs.iter().find(|e| e.key == "colour").unwrap();
    assert_eq!(unknown.line, Some(5));
    assert!(unknown.message.contains("unknown key"));
}

#[test]
fn missing_required_keys() {
    let errs = parse_str("seed = 3\n").unwrap_err();
    let keys: Vec<&str> = errs.iter().map(|e| e.key.as_str()).collect();
    assert!(keys.contains(&"name") && keys.contains(&"experiment"), "{keys:?}");
}

#[test]
fn syntax_error_has_a_line() {
    let errs = parse_str("name = \"x\"\nexperiment = \n").unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].line, Some(2));
}
