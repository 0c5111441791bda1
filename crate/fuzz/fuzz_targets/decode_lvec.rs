#![no_main]

use libfuzzer_sys::fuzz_target;
use lotusfilter::VectorDataset;

fuzz_target!(|data: &[u8]| {
    // The format has exactly one encoding per dataset.
    if let Ok(ds) = VectorDataset::from_bytes(data) {
        assert_eq!(ds.to_bytes(), data);
    }
});
