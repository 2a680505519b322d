fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(cbindgen::Config {
            language: cbindgen::Language::C,
            cpp_compat: true,
            include_guard: Some("ISOVAR_H".into()),
            documentation_style: cbindgen::DocumentationStyle::C,
            enumeration: cbindgen::EnumConfig { prefix_with_name: true, ..Default::default() },
            ..Default::default()
        })
        .generate()
        .expect("unable to generate bindings")
        .write_to_file(format!("{crate_dir}/include/isovar.h"));
}
