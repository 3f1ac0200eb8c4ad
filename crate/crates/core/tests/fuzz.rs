use std::io::Write;

use fpcc::io;
use fpcc::Error;
use proptest::prelude::*;

fn structured(e: &Error) -> bool {
    matches!(e, Error::Parse(_) | Error::InvalidInput(_) | Error::OutOfRange { .. })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn parsers_never_panic_on_text(text in "(?s).{0,400}") {
        for r in [io::parse_scene_str(&text).err(), io::parse_embeddings_str(&text).err(), io::parse_segmentation_str(&text).err()].into_iter().flatten() {
            prop_assert!(structured(&r));
        }
    }

    #[test]
    fn parsers_never_panic_on_number_soup(
        lines in prop::collection::vec(
            prop::collection::vec(prop_oneof![
                Just("d_max".to_string()), Just("center".to_string()), Just("dim".to_string()),
                Just("centers".to_string()), Just("-1".to_string()), Just("nan".to_string()),
                any::<i64>().prop_map(|v| v.to_string()), any::<f64>().prop_map(|v| v.to_string()),
                (0u32..5).prop_map(|v| v.to_string()),
            ], 0..6).prop_map(|t| t.join(" ")),
            0..30)
    ) {
        let text = lines.join("\n");
        for r in [io::parse_scene_str(&text).err(), io::parse_embeddings_str(&text).err(), io::parse_segmentation_str(&text).err()].into_iter().flatten() {
            prop_assert!(structured(&r));
        }
    }
}

#[test]
fn corrupt_gzip_is_an_io_or_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.fpcc-scene.gz");
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(&[0x1f, 0x8b, 8, 0, 0, 0, 0, 0, 0, 3, 0xde, 0xad, 0xbe, 0xef]).unwrap();
    drop(f);
    let e = io::read_scene(&path).unwrap_err();
    assert!(matches!(e, Error::Io { .. } | Error::Parse(_)), "{e:?}");
}

#[test]
fn binary_garbage_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.fpcc-seg");
    std::fs::write(&path, [0xffu8, 0xfe, 0, 1, 2, 0x80]).unwrap();
    assert!(io::read_segmentation(&path).is_err());
}
