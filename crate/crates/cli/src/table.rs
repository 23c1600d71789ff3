//! CSV serializers. Floats are written with 17 significant digits so that
//! parsing a cell returns the simulated value exactly.

use std::fmt::Write;

use coverage_core::sim::{EpochRecord, TrajectoryLog};

fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String cannot fail");
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for prefix in ["phi", "px", "py", "m"] {
        cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    cols.extend(["V", "J", "H"].map(String::from));
    cols
}

/// `t, phi_1..N, px_1..N, py_1..N, m_1..N, V, J, H`, one row per record.
pub fn trajectory_csv(log: &TrajectoryLog) -> String {
    let n = log.agent_count();
    let mut out = trajectory_header(n).join(",");
    out.push('\n');
    for r in &log.records {
        let mut cells = vec![r.t];
        cells.extend(&r.phases);
        cells.extend(r.positions.iter().map(|p| p.x));
        cells.extend(r.positions.iter().map(|p| p.y));
        cells.extend(&r.workloads);
        cells.extend([r.v, r.j, r.h]);
        for (k, v) in cells.into_iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            num(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// `k, anchor, J, gossip_rounds`; the anchor is reported one-based.
pub fn epochs_csv(epochs: &[EpochRecord]) -> String {
    let mut out = String::from("k,anchor,J,gossip_rounds\n");
    for e in epochs {
        write!(out, "{},{},", e.k, e.anchor + 1).expect("infallible");
        num(&mut out, e.j);
        writeln!(out, ",{}", e.gossip_rounds).expect("infallible");
    }
    out
}
