#![no_main]

use labeldeconv::labels::{ElemWidth, HopLabelStack};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(stack) = HopLabelStack::decode(bytes) {
        // Widening to f64 is lossless, so a second pass must be a fixed point.
        let wide = stack.encode(ElemWidth::F64);
        let again = HopLabelStack::decode(&wide).unwrap();
        assert_eq!(wide, again.encode(ElemWidth::F64));
    }
});
