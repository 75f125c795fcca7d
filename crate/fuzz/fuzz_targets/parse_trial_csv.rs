#![no_main]

use eprb::sim::{read_csv, write_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_csv(data) {
        let mut buf = Vec::new();
        write_csv(records.iter().copied(), &mut buf).expect("write to memory");
        assert_eq!(read_csv(buf.as_slice()).expect("round trip"), records);
    }
});
