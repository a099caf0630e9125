//! Fuzz the run-report and link-report parsers.
//!
//! The two formats share the strict line-oriented style, so one target
//! feeds the same bytes to both. Nothing may panic, and any document
//! that parses must survive a write/parse round trip unchanged. Link
//! ids are the one caveat: the parser can accept an id (empty, or with
//! a stray carriage return) that the writer refuses to emit.

#![no_main]

use libfuzzer_sys::fuzz_target;
use qseal::logfmt::{
    parse_link_reports, parse_report, write_link_reports, write_report, LogError,
};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };

    if let Ok(doc) = parse_report(text) {
        let mut rewritten = Vec::new();
        write_report(&mut rewritten, &doc).unwrap();
        let reparsed = parse_report(std::str::from_utf8(&rewritten).unwrap()).unwrap();
        assert_eq!(doc, reparsed);
    }

    if let Ok(reports) = parse_link_reports(text) {
        let mut rewritten = Vec::new();
        match write_link_reports(&mut rewritten, &reports) {
            Ok(()) => {
                let reparsed =
                    parse_link_reports(std::str::from_utf8(&rewritten).unwrap()).unwrap();
                assert_eq!(reports, reparsed);
            }
            Err(LogError::IdUnwritable(id)) => {
                assert!(id.is_empty() || id.contains('\r'));
            }
            Err(other) => panic!("unexpected write failure: {other}"),
        }
    }
});
