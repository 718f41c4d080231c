//! Tabular reports: CSV is canonical, TSV and an aligned text form are
//! renderings of the same table. Column names are fixed by the
//! `*_COLUMNS` constants.

use cddp_core::cluster::BoundOption;
use cddp_core::testbed::InstanceSummary;
use cddp_core::ModelDims;
use thiserror::Error;

use crate::bounds::BoundRun;
use crate::scs4b::{gap_percent, Scs4bReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Tsv,
    Pretty,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row} has {found} cells, expected {expected}")]
    Width { row: usize, found: usize, expected: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn cell(&self, row: usize, name: &str) -> Option<&str> {
        Some(self.rows.get(row)?.get(self.column(name)?)?.as_str())
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.delimited(b','),
            Format::Tsv => self.delimited(b'\t'),
            Format::Pretty => self.pretty(),
        }
    }

    fn delimited(&self, delimiter: u8) -> String {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        for rec in std::iter::once(&self.headers).chain(&self.rows) {
            w.write_record(rec).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("cells are UTF-8")
    }

    fn pretty(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| -> String {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&rule.join("  "));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Table, ReportError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != headers.len() {
                return Err(ReportError::Width { row: i + 1, found: rec.len(), expected: headers.len() });
            }
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Table { headers, rows })
    }
}

/// Shortest text that reads back to the same value.
pub fn raw(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v}"))
}

pub fn fixed(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(String::new, |v| format!("{v:.decimals$}"))
}

fn seconds(v: f64, times: bool) -> String {
    if times {
        format!("{v:.3}")
    } else {
        String::new()
    }
}

pub const SUMMARY_COLUMNS: [&str; 6] = ["instance", "scenarios", "strip_doors", "stack_doors", "origins", "destinations"];

pub fn summary_table(rows: &[(String, InstanceSummary)]) -> Table {
    let mut t = Table::new(&SUMMARY_COLUMNS);
    let range = |r: (usize, usize)| format!("{}-{}", r.0, r.1);
    for (name, s) in rows {
        t.push(vec![
            name.clone(),
            s.scenarios.to_string(),
            s.strip_doors.to_string(),
            s.stack_doors.to_string(),
            range(s.origins),
            range(s.destinations),
        ]);
    }
    t
}

pub const DIMS_COLUMNS: [&str; 11] =
    ["instance", "m", "n01", "nc", "nz", "clusters", "largest_cluster", "m_c", "n01_c", "nc_c", "nz_c"];

/// Full model dimensions, with the cluster count and largest-cluster model
/// when a decomposition is given.
pub struct DimsRow {
    pub instance: String,
    pub full: ModelDims,
    pub cluster: Option<(usize, usize, ModelDims)>,
}

pub fn dims_table(rows: &[DimsRow]) -> Table {
    let mut t = Table::new(&DIMS_COLUMNS);
    for r in rows {
        let d = r.full;
        let mut row =
            vec![r.instance.clone(), d.n_rows.to_string(), d.n_binary.to_string(), d.n_continuous.to_string(), d.n_nonzeros.to_string()];
        match r.cluster {
            Some((count, largest, c)) => row.extend([
                count.to_string(),
                largest.to_string(),
                c.n_rows.to_string(),
                c.n_binary.to_string(),
                c.n_continuous.to_string(),
                c.n_nonzeros.to_string(),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        t.push(row);
    }
    t
}

pub const BOUNDS_COLUMNS: [&str; 10] =
    ["cluster", "scenarios", "weight", "part", "status", "incumbent", "bound", "nodes", "time", "rows"];

/// One line per submodel, then an `aggregate` line.
pub fn bounds_table(run: &BoundRun, scenario_lists: &[Vec<usize>], times: bool) -> Table {
    let mut t = Table::new(&BOUNDS_COLUMNS);
    for (c, members) in run.clusters.iter().zip(scenario_lists) {
        let names: Vec<String> = members.iter().map(|w| (w + 1).to_string()).collect();
        for p in &c.parts {
            t.push(vec![
                (c.cluster + 1).to_string(),
                names.join(" "),
                raw(Some(c.weight)),
                p.part.as_str().into(),
                p.status.as_str().into(),
                raw(p.incumbent),
                raw(p.bound),
                p.nodes.to_string(),
                seconds(p.wall_time, times),
                p.dims.n_rows.to_string(),
            ]);
        }
    }
    let status = match run.aggregate.status {
        cddp_core::cluster::BoundStatus::Exact => "exact",
        cddp_core::cluster::BoundStatus::Relaxed => "relaxed",
        cddp_core::cluster::BoundStatus::Invalid => "invalid",
    };
    t.push(vec![
        "aggregate".into(),
        String::new(),
        "1".into(),
        option_name(run.option).into(),
        status.into(),
        String::new(),
        raw(run.aggregate.value),
        run.clusters.iter().flat_map(|c| &c.parts).map(|p| p.nodes).sum::<u64>().to_string(),
        seconds(run.wall_time, times),
        String::new(),
    ]);
    t
}

pub fn option_name(option: BoundOption) -> &'static str {
    match option {
        BoundOption::Full => "1",
        BoundOption::Split => "2",
    }
}

pub const SCS4B_COLUMNS: [&str; 20] = [
    "instance",
    "status",
    "scenarios",
    "removed",
    "clusters",
    "option",
    "lb_split",
    "t_lb_split",
    "lb_full",
    "t_lb_full",
    "solver",
    "ub",
    "tt_ub",
    "gap_pct",
    "reference",
    "gr",
    "out",
    "trials",
    "z_star",
    "gap_star_pct",
];

/// One row per run. `gap_pct` and `gr` are the only derived columns; both
/// follow from the raw columns in the same row. `z_star` is an exact
/// optimum when one was computed.
pub fn scs4b_row(table: &mut Table, instance: &str, rep: &Scs4bReport, option: BoundOption, z_star: Option<f64>, times: bool) {
    let bound = |o: BoundOption| rep.bound(o).and_then(|b| b.value);
    let btime = |o: BoundOption| rep.bound(o).map_or(String::new(), |b| seconds(b.time, times));
    let solver: Vec<&str> = rep.omega_methods.iter().copied().collect();
    table.push(vec![
        instance.into(),
        rep.status.as_str().into(),
        rep.kept.len().to_string(),
        rep.removed.len().to_string(),
        rep.clusters.as_ref().map_or(0, |c| c.clusters.len()).to_string(),
        option_name(option).into(),
        raw(bound(BoundOption::Split)),
        btime(BoundOption::Split),
        raw(bound(BoundOption::Full)),
        btime(BoundOption::Full),
        solver.join("&"),
        raw(rep.incumbent),
        seconds(rep.wall_time, times),
        fixed(rep.gap(), 4),
        raw(rep.reference_value),
        fixed(rep.goodness(), 4),
        rep.out().to_string(),
        rep.trials.len().to_string(),
        raw(z_star),
        fixed(rep.incumbent.zip(z_star).map(|(u, z)| gap_percent(u, z)), 4),
    ]);
}

pub fn scs4b_table() -> Table {
    Table::new(&SCS4B_COLUMNS)
}

pub const TRIAL_COLUMNS: [&str; 10] =
    ["cluster", "scenario", "source", "round", "strip_levels", "stack_levels", "out", "install_cost", "value", "decision"];

fn levels(sets: &[cddp_core::model::LevelSet]) -> String {
    let parts: Vec<String> = sets.iter().map(|s| s.level().map_or("-".into(), |k| k.to_string())).collect();
    parts.join(" ")
}

/// Trial log; scenario numbers refer to the kept scenarios.
pub fn trials_table(rep: &Scs4bReport) -> Table {
    let mut t = Table::new(&TRIAL_COLUMNS);
    for tr in &rep.trials {
        t.push(vec![
            (tr.cluster + 1).to_string(),
            tr.scenario.map_or(String::new(), |w| (rep.kept[w] + 1).to_string()),
            tr.source.as_str().into(),
            tr.round.to_string(),
            levels(&tr.design.strip),
            levels(&tr.design.stack),
            tr.out.to_string(),
            raw(Some(tr.install_cost)),
            raw(Some(tr.value)),
            tr.decision.as_str().into(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_pretty_alignment() {
        let mut t = Table::new(&["a", "long_name"]);
        t.push(vec!["1".into(), "x, y".into()]);
        t.push(vec!["22".into(), String::new()]);
        assert_eq!(Table::parse_csv(&t.render(Format::Csv)).unwrap(), t);
        assert_eq!(t.render(Format::Tsv), "a\tlong_name\n1\tx, y\n22\t\n");
        let pretty = t.render(Format::Pretty);
        let lines: Vec<&str> = pretty.lines().collect();
        assert_eq!(lines[0], " a  long_name");
        assert_eq!(lines[2], " 1       x, y");
    }
}
