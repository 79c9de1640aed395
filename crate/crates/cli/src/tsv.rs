//! Plot-ready TSV reports.

use std::io::Write;
use std::path::Path;

use anyhow::Result;

use streamcart::RoundReport;

use crate::sweep::SweepRow;

fn secs(d: std::time::Duration) -> String {
    format!("{:.6}", d.as_secs_f64())
}

/// Columns: round, records, splits, evaluations, elapsed_s, map_s, reduce_s,
/// decide_s.
pub fn write_rounds(path: &Path, reports: &[RoundReport]) -> Result<()> {
    let mut out = String::from("round\trecords\tsplits\tevaluations\telapsed_s\tmap_s\treduce_s\tdecide_s\n");
    for r in reports {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.round,
            r.records,
            r.splits,
            r.evaluations,
            secs(r.elapsed),
            secs(r.map_elapsed),
            secs(r.reduce_elapsed),
            secs(r.decide_elapsed),
        ));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

/// Columns: axis, value, accuracy_pct, elapsed_s, split_evals, depth, nodes,
/// leaves.
pub fn write_sweep(path: &Path, axis: &str, rows: &[SweepRow]) -> Result<()> {
    let mut out =
        String::from("axis\tvalue\taccuracy_pct\telapsed_s\tsplit_evals\tdepth\tnodes\tleaves\n");
    for row in rows {
        out.push_str(&format!(
            "{}\t{}\t{:.2}\t{}\t{}\t{}\t{}\t{}\n",
            axis,
            row.value,
            row.accuracy.percent(),
            format!("{:.6}", row.elapsed.as_secs_f64()),
            row.split_evals,
            row.metrics.depth,
            row.metrics.node_count,
            row.metrics.leaf_count,
        ));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}
