use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("cbindgen.toml");
    let bindings = cbindgen::generate_with_config(&dir, config).expect("header generation");
    let header = dir.join("include").join("magnongate.h");
    std::fs::create_dir_all(header.parent().unwrap()).unwrap();
    // Rewrites only on change so the header's mtime stays stable.
    bindings.write_to_file(&header);
}
