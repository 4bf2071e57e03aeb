fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR is set");
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("BERGMAN_EXTREMAL_H".to_string()),
        header: Some(
            "/* C interface to the Bergman kernel / extremal function laboratory.\n\
             \x20* Generated by the crate build script; do not edit by hand. */"
                .to_string(),
        ),
        cpp_compat: true,
        documentation: true,
        ..cbindgen::Config::default()
    };
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation")
        .write_to_file(format!("{crate_dir}/include/bergman_extremal.h"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=build.rs");
}
