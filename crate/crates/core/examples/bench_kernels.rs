//! Times the three numerical kernels at small sizes and prints the CSV table
//! (`holonerf bench` runs the full-size version).
//!
//!     cargo run --release --example bench_kernels

use holonerf::pipeline::{bench_csv, run_bench, BenchOp};

fn main() -> holonerf::Result<()> {
    let rows = run_bench(&BenchOp::ALL, &[(128, 128), (256, 256), (480, 270)], 3, 0)?;
    print!("{}", bench_csv(&rows)?);
    Ok(())
}
