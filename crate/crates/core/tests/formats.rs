use poswise_core::data::{
    cifar10_from_bytes, encode_cifar10_bin, load_cifar10_bin, load_mnist_idx, mnist_from_idx_bytes,
    write_mnist_idx, CIFAR_RECORD_BYTES, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
use poswise_core::Error;
use proptest::prelude::*;

fn idx_bytes(rows: usize, cols: usize, pixels: &[u8], labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let n = labels.len() as u32;
    let mut images = Vec::new();
    for v in [IDX_IMAGES_MAGIC, n, rows as u32, cols as u32] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    images.extend_from_slice(pixels);
    let mut lbl = Vec::new();
    lbl.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lbl.extend_from_slice(&n.to_be_bytes());
    lbl.extend_from_slice(labels);
    (images, lbl)
}

fn idx_case() -> impl Strategy<Value = (usize, usize, Vec<u8>, Vec<u8>)> {
    (1usize..5, 1usize..5, 1usize..6).prop_flat_map(|(rows, cols, n)| {
        (
            Just(rows),
            Just(cols),
            proptest::collection::vec(any::<u8>(), rows * cols * n),
            proptest::collection::vec(0u8..10, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn idx_files_round_trip(case in idx_case()) {
        let (rows, cols, pixels, labels) = case;
        let (images, lbl) = idx_bytes(rows, cols, &pixels, &labels);
        let dir = tempfile::tempdir().unwrap();
        let ds = mnist_from_idx_bytes(&images, &lbl, "images", "labels").unwrap();
        prop_assert_eq!(ds.len(), labels.len());
        prop_assert_eq!(ds.features(), rows * cols);

        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        write_mnist_idx(&ds, rows, cols, &ip, &lp).unwrap();
        prop_assert_eq!(std::fs::read(&ip).unwrap(), images);
        prop_assert_eq!(std::fs::read(&lp).unwrap(), lbl);
        prop_assert_eq!(load_mnist_idx(&ip, &lp).unwrap(), ds);
    }

    #[test]
    fn cifar_files_round_trip(records in proptest::collection::vec((0u8..10, any::<u8>()), 1..4)) {
        let mut bytes = Vec::new();
        for (r, (label, seed)) in records.iter().enumerate() {
            bytes.push(*label);
            bytes.extend((0..3072u32).map(|i| (i.wrapping_mul(u32::from(*seed) + 1) + r as u32) as u8));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data_batch_1.bin");
        std::fs::write(&path, &bytes).unwrap();
        let ds = load_cifar10_bin(&[&path]).unwrap();
        prop_assert_eq!(ds.len(), records.len());
        prop_assert_eq!(encode_cifar10_bin(&ds).unwrap(), bytes);
    }

    #[test]
    fn cifar_rejects_partial_records(extra in 1usize..CIFAR_RECORD_BYTES) {
        let bytes = vec![0u8; CIFAR_RECORD_BYTES + extra];
        match cifar10_from_bytes(&bytes, "batch") {
            Err(Error::Format { offset, .. }) => prop_assert_eq!(offset, CIFAR_RECORD_BYTES as u64),
            other => prop_assert!(false, "expected a format error, got {:?}", other.map(|d| d.len())),
        }
    }
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_mnist_idx(dir.path().join("nope"), dir.path().join("nope2")).unwrap_err();
    assert!(matches!(err, Error::Io(_)), "{err:?}");
}

#[test]
fn label_outside_ten_classes_is_rejected() {
    let (images, labels) = idx_bytes(1, 1, &[9], &[10]);
    assert!(mnist_from_idx_bytes(&images, &labels, "i", "l").is_err());
}
