//! Line counts and line diffs between specs and between generated bundles.
//!
//! Lines are compared after dropping blank lines. The diff picks, among all
//! longest-common-subsequence alignments, one that pairs as many removed
//! lines with inserted lines as possible; paired lines count as modified.

use crate::codegen::{self, Bundle};
use crate::lang::{self, SymboleoSpec};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct DiffStat {
    pub added: usize,
    pub modified: usize,
    pub deleted: usize,
}

impl DiffStat {
    pub fn total(&self) -> usize {
        self.added + self.modified + self.deleted
    }

    pub fn swapped(self) -> Self {
        DiffStat {
            added: self.deleted,
            modified: self.modified,
            deleted: self.added,
        }
    }
}

pub fn lines(text: &str) -> Vec<&str> {
    text.lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .collect()
}

/// Non-blank line count.
pub fn loc(text: &str) -> usize {
    lines(text).len()
}

pub fn diff_lines(base: &str, refined: &str) -> DiffStat {
    diff(&lines(base), &lines(refined))
}

/// Line diff of two sequences.
///
/// Cost model: matches are maximised first; then the number of edit
/// operations is minimised, where a substitution costs one. Within a gap of
/// `d` removed and `i` inserted lines that cost is `max(d, i)`, so the
/// minimum picks the alignment with the most substitutions.
pub fn diff<T: PartialEq>(base: &[T], refined: &[T]) -> DiffStat {
    let (n, m) = (base.len(), refined.len());
    // strip common prefix/suffix; they are matched in every optimal alignment
    let pre = base.iter().zip(refined).take_while(|(a, b)| a == b).count();
    let suf = base[pre..]
        .iter()
        .rev()
        .zip(refined[pre..].iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    let a = &base[pre..n - suf];
    let b = &refined[pre..m - suf];
    let (n, m) = (a.len(), b.len());
    let w = m + 1;

    // best[i][j] over suffixes a[i..], b[j..]: (matches, -edits)
    let mut best = vec![(0u32, 0i32); (n + 1) * w];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            let v = if i == n {
                (0, -((m - j) as i32))
            } else if j == m {
                (0, -((n - i) as i32))
            } else {
                let sub = {
                    let (k, e) = best[(i + 1) * w + j + 1];
                    if a[i] == b[j] {
                        (k + 1, e)
                    } else {
                        (k, e - 1)
                    }
                };
                let del = {
                    let (k, e) = best[(i + 1) * w + j];
                    (k, e - 1)
                };
                let ins = {
                    let (k, e) = best[i * w + j + 1];
                    (k, e - 1)
                };
                sub.max(del).max(ins)
            };
            best[i * w + j] = v;
        }
    }
    let (l, neg_edits) = best[0];
    let (l, edits) = (l as usize, (-neg_edits) as usize);
    let modified = n + m - 2 * l - edits;
    DiffStat {
        added: m - l - modified,
        modified,
        deleted: n - l - modified,
    }
}

pub fn diff_bundles(base: &Bundle, refined: &Bundle) -> DiffStat {
    diff_files(&base.files, &refined.files)
}

/// Per-path line diffs summed over the union of paths. A file on one side
/// only counts entirely as added (or deleted); a renamed file is a delete
/// plus an add.
pub fn diff_files(base: &BTreeMap<String, String>, refined: &BTreeMap<String, String>) -> DiffStat {
    let paths: BTreeSet<&String> = base.keys().chain(refined.keys()).collect();
    paths.into_iter().fold(DiffStat::default(), |acc, p| {
        let get = |m: &BTreeMap<String, String>| m.get(p).map_or("", String::as_str).to_owned();
        let d = diff_lines(&get(base), &get(refined));
        DiffStat {
            added: acc.added + d.added,
            modified: acc.modified + d.modified,
            deleted: acc.deleted + d.deleted,
        }
    })
}

/// `100 * changed / total`, rounded to one decimal.
pub fn percent_changed(d: DiffStat, total_loc: usize) -> f64 {
    if total_loc == 0 {
        return 0.0;
    }
    round1(100.0 * d.total() as f64 / total_loc as f64)
}

pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportColumn {
    pub label: String,
    pub spec_loc: usize,
    pub spec_diff: Option<DiffStat>,
    pub sc_files: usize,
    pub sc_loc: usize,
    pub sc_diff: Option<DiffStat>,
    pub sc_changed_pct: Option<f64>,
    pub ratio: f64,
}

/// Side-by-side impact of a set of refinements on a base spec.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementReport {
    pub columns: Vec<ReportColumn>,
}

impl RefinementReport {
    pub fn build(base: &SymboleoSpec, refined: &[(String, SymboleoSpec)]) -> Self {
        let base_text = lang::print(base);
        let base_bundle = codegen::generate(base);
        let column = |label: &str, text: &str, bundle: &Bundle, diffs: Option<(DiffStat, DiffStat)>| {
            let spec_loc = loc(text);
            let sc_loc = bundle.loc();
            ReportColumn {
                label: label.to_owned(),
                spec_loc,
                spec_diff: diffs.map(|d| d.0),
                sc_files: bundle.files.len(),
                sc_loc,
                sc_diff: diffs.map(|d| d.1),
                sc_changed_pct: diffs.map(|d| percent_changed(d.1, sc_loc)),
                ratio: sc_loc as f64 / spec_loc.max(1) as f64,
            }
        };
        let mut columns = vec![column("Init", &base_text, &base_bundle, None)];
        for (label, spec) in refined {
            let text = lang::print(spec);
            let bundle = codegen::generate(spec);
            let d = (diff_lines(&base_text, &text), diff_bundles(&base_bundle, &bundle));
            columns.push(column(label, &text, &bundle, Some(d)));
        }
        RefinementReport { columns }
    }

    fn rows(&self) -> Vec<(&'static str, Vec<String>)> {
        let opt = |v: Option<usize>| v.map_or_else(String::new, |v| v.to_string());
        let get = |f: &dyn Fn(&ReportColumn) -> String| self.columns.iter().map(f).collect::<Vec<_>>();
        vec![
            ("Spec LOC", get(&|c| c.spec_loc.to_string())),
            ("Spec lines added", get(&|c| opt(c.spec_diff.map(|d| d.added)))),
            ("Spec lines modified", get(&|c| opt(c.spec_diff.map(|d| d.modified)))),
            ("Spec lines deleted", get(&|c| opt(c.spec_diff.map(|d| d.deleted)))),
            ("SC files", get(&|c| c.sc_files.to_string())),
            ("SC LOC", get(&|c| c.sc_loc.to_string())),
            ("SC lines added", get(&|c| opt(c.sc_diff.map(|d| d.added)))),
            ("SC lines modified", get(&|c| opt(c.sc_diff.map(|d| d.modified)))),
            ("SC lines deleted", get(&|c| opt(c.sc_diff.map(|d| d.deleted)))),
            (
                "SC % changed",
                get(&|c| c.sc_changed_pct.map_or_else(String::new, |p| format!("{p:.1}"))),
            ),
            ("SC/Spec LOC ratio", get(&|c| format!("{:.1}", c.ratio))),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for c in &self.columns {
            let _ = write!(out, ",{}", c.label);
        }
        out.push('\n');
        for (name, cells) in self.rows() {
            out.push_str(name);
            for c in cells {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let rows = self.rows();
        let first = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                rows.iter()
                    .map(|r| r.1[i].len())
                    .chain([c.label.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = format!("{:first$}", "");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", c.label);
        }
        out.push('\n');
        for (name, cells) in rows {
            let _ = write!(out, "{name:first$}");
            for (c, w) in cells.iter().zip(&widths) {
                let _ = write!(out, "  {c:>w$}");
            }
            out.push('\n');
        }
        out
    }
}
