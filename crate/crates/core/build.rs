fn main() {
    // Dense eigensolves go through the system LAPACKE C interface backed by
    // OpenBLAS; both ship as shared libraries on the target platform.
    println!("cargo:rustc-link-lib=lapacke");
    println!("cargo:rustc-link-lib=openblas");
}
