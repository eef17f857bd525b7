#![no_main]

use labeldeconv::nn::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(ckpt) = Checkpoint::decode(bytes) {
        let encoded = ckpt.encode();
        assert_eq!(encoded, Checkpoint::decode(&encoded).unwrap().encode());
    }
});
