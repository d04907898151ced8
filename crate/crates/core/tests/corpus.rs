//! The shipped corpus files match the constructors in `gcba_core::corpus`.
//! Set GCBA_REGEN_CORPUS=1 to rewrite them.

use gcba_core::complex::MetricComplex;
use gcba_core::corpus;
use gcba_core::json::to_canonical_string;
use std::path::PathBuf;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn corpus_files_match_constructors() {
    let dir = corpus_dir();
    let regen = std::env::var_os("GCBA_REGEN_CORPUS").is_some();
    for (name, c) in corpus::named() {
        let path = dir.join(format!("{name}.json"));
        let text = to_canonical_string(&c.to_file()).unwrap() + "\n";
        if regen {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &text).unwrap();
        }
        let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(on_disk, text, "{name}");
        let back = MetricComplex::load(&path).unwrap();
        assert_eq!(back.volumes_by_dim(), c.volumes_by_dim(), "{name}");
        assert_eq!(back.face_classes().len(), c.face_classes().len(), "{name}");
    }
}
