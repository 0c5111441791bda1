#![no_main]

use libfuzzer_sys::fuzz_target;
use lotusfilter::CutoffTable;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = CutoffTable::from_bytes(data) {
        assert_eq!(table.to_bytes(), data);
        for (n, list) in table.lists().enumerate() {
            assert!(list.windows(2).all(|w| w[0] < w[1]));
            assert!(!list.contains(&(n as u32)));
        }
    }
});
