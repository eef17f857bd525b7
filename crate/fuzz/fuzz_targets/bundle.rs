#![no_main]

use labeldeconv::bundle::{BundleFiles, Dataset};
use libfuzzer_sys::fuzz_target;

/// Input is seven sections (manifest, edges, attrs, labels, train, val,
/// test), each a little-endian u32 length followed by that many bytes.
fn split(mut data: &[u8]) -> Option<Vec<&[u8]>> {
    let mut parts = Vec::with_capacity(7);
    for _ in 0..7 {
        let len = u32::from_le_bytes(data.get(..4)?.try_into().ok()?) as usize;
        parts.push(data.get(4..4 + len)?);
        data = &data[4 + len..];
    }
    Some(parts)
}

fuzz_target!(|data: &[u8]| {
    let Some(p) = split(data) else { return };
    let (Ok(manifest), Ok(edges)) = (std::str::from_utf8(p[0]), std::str::from_utf8(p[1])) else {
        return;
    };
    let files = BundleFiles {
        manifest: manifest.to_owned(),
        edges: edges.to_owned(),
        attrs: p[2].to_vec(),
        labels: p[3].to_vec(),
        splits: [p[4].to_vec(), p[5].to_vec(), p[6].to_vec()],
    };
    if let Ok(ds) = Dataset::decode(&files) {
        ds.validate().unwrap();
        ds.encode().unwrap();
    }
});
