//! Fuzz entry points for the text decoders. Each function must return
//! without panicking for any input; accepted inputs are checked for
//! internal consistency.

use tmor::io::{read_matrix_market, write_dense_matrix_market};
use tmor::scenario::ScenarioConfig;

/// Parses a TOML scenario; accepted configs must validate and survive a
/// serialize/parse round trip.
pub fn config_toml(text: &str) {
    if let Ok(cfg) = ScenarioConfig::from_toml_str(text) {
        check_config(&cfg);
    }
}

/// Parses a JSON scenario with the same checks as [`config_toml`].
pub fn config_json(text: &str) {
    if let Ok(cfg) = ScenarioConfig::from_json_str(text) {
        check_config(&cfg);
    }
}

fn check_config(cfg: &ScenarioConfig) {
    let _ = cfg.validate();
    let _ = cfg.methods();
    let _ = cfg.transient_modes();
    let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string())
        .expect("serialized config parses");
    assert_eq!(again.to_toml_string(), cfg.to_toml_string());
}

/// Reads a Matrix Market file; accepted matrices must have in-range
/// entries and a bitwise dense round trip.
pub fn matrix_market(text: &str) {
    let Ok(m) = read_matrix_market(text) else {
        return;
    };
    if m.nrows.saturating_mul(m.ncols) > 1 << 16 {
        return;
    }
    let d = m.to_dense();
    let mut buf = Vec::new();
    write_dense_matrix_market(&mut buf, &d).expect("write to memory");
    let back = read_matrix_market(std::str::from_utf8(&buf).expect("ascii output"))
        .expect("written matrix parses");
    let d2 = back.to_dense();
    for j in 0..d.ncols() {
        for i in 0..d.nrows() {
            assert_eq!(d[(i, j)].to_bits(), d2[(i, j)].to_bits());
        }
    }
}
