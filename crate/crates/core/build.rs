fn main() {
    // Dense symmetric eigensolvers and matrix products come from the system
    // OpenBLAS (which bundles LAPACK). See src/linalg.rs for the bindings.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
