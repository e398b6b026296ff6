//! Dumps the angular-momentum tables the pumping model is built on: the
//! normalized dipole strength of every ground-to-excited channel per
//! polarization, and the decay branching of each excited level back to
//! the two ground levels. Pure table output; the seed only appears in the
//! echo for uniformity.

use serde::Serialize;
use std::path::Path;

use fountain_core::angular::{branching_fraction, strength_table, ExcitedSublevel, HalfInt};

use crate::config::ExperimentKind;
use crate::output::{float_cell, out_path, write_csv, write_echo};
use crate::CliError;

#[derive(Serialize)]
struct Params {}

pub fn run(seed: u64, out: &Path) -> Result<(), CliError> {
    let strength_rows: Vec<Vec<String>> = strength_table()
        .iter()
        .map(|row| {
            vec![
                row.ground.f().to_string(),
                row.ground.m().to_string(),
                row.q.to_string(),
                row.excited.f().to_string(),
                row.excited.m().to_string(),
                float_cell(row.strength),
            ]
        })
        .collect();
    write_csv(
        &out_path(out, "_strengths.csv"),
        &["f", "m_f", "q", "f_prime", "m_f_prime", "strength"],
        &strength_rows,
    )?;

    let mut branching_rows = Vec::new();
    for fp in 2..=5 {
        let e = ExcitedSublevel::new(fp, 0).expect("m = 0 exists for every F'");
        for f in [3, 4] {
            branching_rows.push(vec![
                fp.to_string(),
                f.to_string(),
                float_cell(branching_fraction(e, HalfInt::from_int(f))),
            ]);
        }
    }
    write_csv(
        &out_path(out, "_branching.csv"),
        &["f_prime", "f", "fraction"],
        &branching_rows,
    )?;

    write_echo(out, ExperimentKind::Strengths, seed, Params {})
}
