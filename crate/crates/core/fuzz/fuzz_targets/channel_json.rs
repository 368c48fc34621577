#![no_main]

use libfuzzer_sys::fuzz_target;
use relaylab::load_channel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ch) = load_channel(text) {
        let again = load_channel(&ch.to_json()).expect("a loaded channel reloads");
        assert_eq!(again.sizes(), ch.sizes());
        assert_eq!(again.kernel().probs(), ch.kernel().probs());
    }
});
