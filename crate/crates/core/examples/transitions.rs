//! Transition frequencies of both computational systems across a field scan.
//!
//!     cargo run --example transitions

use nvdd::hamiltonian::{mw_transition, transition_table};
use nvdd::{NvParams, System};

fn main() {
    let base = NvParams::default();
    for system in [System::A, System::B] {
        println!("system {system} at {} G", base.b_field);
        for entry in transition_table(&base, system) {
            println!("  {:<4} {:>14.6} MHz", entry.label, entry.frequency_hz / 1e6);
        }
    }
    println!("\nB (G)   MW line (MHz)");
    for b in [0.0, 25.0, 50.0, 87.0, 120.0] {
        let p = NvParams { b_field: b, ..base.clone() };
        println!("{b:>5.0}   {:>12.4}", mw_transition(&p) / 1e6);
    }
}
