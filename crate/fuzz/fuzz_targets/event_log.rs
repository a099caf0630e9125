//! Fuzz the detection-event log parser.
//!
//! Arbitrary bytes must never panic, and any log that parses must
//! survive a write/parse round trip unchanged: the writer emits a
//! canonical form of exactly the data the parser accepted.

#![no_main]

use libfuzzer_sys::fuzz_target;
use qseal::logfmt::{parse_event_log, write_event_log};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(log) = parse_event_log(text) else {
        return;
    };
    let mut rewritten = Vec::new();
    write_event_log(&mut rewritten, &log.events, log.has_origins).unwrap();
    let reparsed = parse_event_log(std::str::from_utf8(&rewritten).unwrap()).unwrap();
    assert_eq!(log, reparsed);
});
