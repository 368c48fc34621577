#![no_main]

use libfuzzer_sys::fuzz_target;
use relaylab::{load_caf_params, load_new_scheme_params, load_params};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = load_caf_params(text);
    let _ = load_new_scheme_params(text);
    if let Ok(p) = load_params(text) {
        let again = load_params(&p.to_json()).expect("loaded parameters reload");
        assert_eq!(again, p);
    }
});
