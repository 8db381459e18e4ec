// LAPACK (?heevr) and CBLAS (gemm behind ndarray's `blas` feature) both come
// from the system OpenBLAS.
fn main() {
    let lib = std::env::var("GRM_BLAS_LIB").unwrap_or_else(|_| "openblas".to_string());
    if let Ok(dir) = std::env::var("GRM_BLAS_DIR") {
        println!("cargo:rustc-link-search=native={dir}");
    }
    println!("cargo:rustc-link-lib=dylib={lib}");
    println!("cargo:rerun-if-env-changed=GRM_BLAS_LIB");
    println!("cargo:rerun-if-env-changed=GRM_BLAS_DIR");
}
