//! Communication-efficiency accounting: key bits per expended qubit.
//!
//! ```bash
//! cargo run -p ghzkd --example efficiency
//! ```

use ghzkd::analysis::efficiency;

fn main() {
    println!("{:>8} {:>6} {:>10} {:>10} {:>12} {:>10}", "n", "tau", "key bits", "qubits", "(src+re)", "CE");
    for (n, tau) in [(1u64, 1u64), (16, 2), (96, 4), (1024, 8), (1_000_000, 1)] {
        let e = efficiency(n, tau);
        println!(
            "{:>8} {:>6} {:>10} {:>10} {:>12} {:>10.6}",
            e.n,
            e.tau,
            e.lk,
            e.lq,
            format!("{}+{}", e.lq_source, e.lq_reprepared),
            e.ce
        );
    }
    println!("\nCE = 3n / (32(n+tau)); as n grows it approaches 3/32 = {}", 3.0 / 32.0);
    println!("No classical bits are spent outside the security checks, so LC = 0.");
}
