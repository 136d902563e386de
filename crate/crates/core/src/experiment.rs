//! End-to-end comparison runs: build a dynamic stream, feed every method in
//! one pass, score tracked pairs at checkpoints, and time updates.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use crate::baselines::REGISTER_BITS;
use crate::error::{Error, Result};
use crate::hashing::mix64;
use crate::method::{build_method, MethodKind, MethodParams, SimilarityMethod};
use crate::metrics::{Checkpoint, PairRecord};
use crate::oracle::{ExactState, PairTruth};
use crate::stream::{self, CommunityGraph, DynConfig, ItemId, StreamElement, UserId};
use crate::vos::default_m;

/// Where the base insertions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    EdgeList(PathBuf),
    Synthetic { users: u64, items: u64, edges: usize },
    Communities(CommunityGraph),
    Edges(Vec<(UserId, ItemId)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: Input,
    pub methods: Vec<MethodKind>,
    /// Baseline register count.
    pub k: usize,
    /// VOS sketch length as a multiple of one baseline sketch's memory in bits.
    pub lambda: usize,
    /// Explicit VOS sketch length, overriding `lambda * 32 * k`.
    pub k_vos: Option<usize>,
    /// VOS array size; defaults to `32 * k * |U|`.
    pub m_bits: Option<u64>,
    pub q: f64,
    pub d: f64,
    pub seed: u64,
    pub recycle: bool,
    pub delete_after: Vec<usize>,
    /// Elements between checkpoints; defaults to a tenth of the stream.
    pub checkpoint_every: Option<usize>,
    pub top_n: usize,
    /// Measure per-update time; when off the timing column is written as 0.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let dyn_cfg = DynConfig::default();
        Self {
            input: Input::Synthetic {
                users: 1_000,
                items: 5_000,
                edges: 50_000,
            },
            methods: MethodKind::ALL.to_vec(),
            k: 100,
            lambda: 2,
            k_vos: None,
            m_bits: None,
            q: dyn_cfg.q,
            d: dyn_cfg.d,
            seed: 0,
            recycle: false,
            delete_after: Vec::new(),
            checkpoint_every: None,
            top_n: 100,
            record_timing: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.lambda == 0 {
            return Err(Error::InvalidConfig("lambda must be at least 1".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::InvalidConfig("checkpoint interval must be positive".into()));
        }
        self.dyn_config().validate()
    }

    /// VOS odd-sketch length: `lambda` times the bits of one baseline sketch.
    pub fn k_vos(&self) -> usize {
        self.k_vos.unwrap_or(self.lambda * REGISTER_BITS as usize * self.k)
    }

    pub fn dyn_config(&self) -> DynConfig {
        DynConfig {
            q: self.q,
            d: self.d,
            seed: mix64(self.seed ^ 2),
            recycle: self.recycle,
            delete_after: self.delete_after.clone(),
        }
    }

    fn hash_seed(&self) -> u64 {
        mix64(self.seed ^ 1)
    }

    /// Base insertions in stream order.
    pub fn load_base(&self) -> Result<Vec<(UserId, ItemId)>> {
        match &self.input {
            Input::EdgeList(path) => Ok(stream::load_edges(path)?.edges),
            &Input::Synthetic { users, items, edges } => {
                stream::synthetic_edges(users, items, edges, mix64(self.seed ^ 4))
            }
            Input::Communities(graph) => graph.edges(mix64(self.seed ^ 4)),
            Input::Edges(edges) => Ok(edges.clone()),
        }
    }

    /// The fully dynamic stream this config describes.
    pub fn build_stream(&self) -> Result<Vec<StreamElement>> {
        stream::synthesize_dynamic(&self.load_base()?, &self.dyn_config())
    }
}

/// One CSV row: one method at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t: u64,
    pub method: MethodKind,
    pub k: usize,
    pub memory_bits: u64,
    pub aape: Option<f64>,
    pub armse: Option<f64>,
    pub excluded_pairs: usize,
    pub mean_update_ns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub pairs: usize,
    pub users: usize,
    pub stream_len: usize,
    /// Bits spent on the per-user set-size counters shared by every method.
    pub counter_bits: u64,
}

pub const CSV_HEADER: &str = "t,method,k,memory_bits,aape,armse,excluded_pairs,mean_update_ns";

fn fmt_metric(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), |v| v.to_string())
}

impl Report {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{:.1}",
                r.t,
                r.method,
                r.k,
                r.memory_bits,
                fmt_metric(r.aape),
                fmt_metric(r.armse),
                r.excluded_pairs,
                r.mean_update_ns
            )?;
        }
        w.flush()
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Rows of the last checkpoint.
    pub fn final_rows(&self) -> impl Iterator<Item = &ReportRow> {
        let last = self.rows.last().map(|r| r.t);
        self.rows.iter().filter(move |r| Some(r.t) == last)
    }
}

/// Stream positions (1-based, inclusive) after which a checkpoint is taken.
pub fn checkpoint_positions(len: usize, every: Option<usize>) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let every = every.unwrap_or((len / 10).max(1));
    let mut out: Vec<usize> = (1..=len / every).map(|c| c * every).collect();
    if out.last() != Some(&len) {
        out.push(len);
    }
    out
}

fn score(method: &dyn SimilarityMethod, oracle: &ExactState, pairs: &[(UserId, UserId)], t: u64) -> Result<Checkpoint> {
    let mut records = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        // pairs come from the whole base graph, so a user may not have arrived yet
        let truth = if oracle.contains_user(u) && oracle.contains_user(v) {
            oracle.pair(u, v)?
        } else {
            PairTruth::default()
        };
        let est = method.estimate(u, v, oracle.size(u) as u64, oracle.size(v) as u64)?;
        records.push(PairRecord {
            s_true: truth.s as f64,
            s_hat: est.s_hat,
            j_true: truth.j,
            j_hat: est.j_hat,
        });
    }
    Ok(Checkpoint::new(t, records))
}

/// Runs every configured method over the same stream and scores the pairs
/// selected from the static graph (the base insertions) at each checkpoint.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let base = cfg.load_base()?;
    let stream = stream::synthesize_dynamic(&base, &cfg.dyn_config())?;
    run_on_stream(cfg, &base, &stream)
}

/// As [`run_experiment`], for an already materialized stream. Pairs are
/// selected from the graph formed by `base`.
pub fn run_on_stream(cfg: &ExperimentConfig, base: &[(UserId, ItemId)], stream: &[StreamElement]) -> Result<Report> {
    cfg.validate()?;
    let mut static_graph = ExactState::default();
    for (t, &(u, i)) in base.iter().enumerate() {
        // repeated base edges are skipped by the stream synthesizer as well
        let _ = static_graph.apply(&StreamElement::insert(t as u64 + 1, u, i));
    }
    let pairs = if static_graph.user_count() >= 2 {
        stream::select_pairs(&static_graph, cfg.top_n)?
    } else {
        Vec::new()
    };
    if pairs.is_empty() {
        log::warn!("no user pairs share an item; metrics will be undefined");
    }
    let users = static_graph.user_count() as u64;
    drop(static_graph);

    let k_vos = cfg.k_vos();
    let m = cfg.m_bits.unwrap_or_else(|| default_m(32 * cfg.k as u64 * users));
    let params = MethodParams {
        k: cfg.k,
        k_vos,
        m,
        seed: cfg.hash_seed(),
    };
    let mut methods: Vec<Box<dyn SimilarityMethod>> = Vec::new();
    for &kind in &cfg.methods {
        let mut p = params;
        if kind == MethodKind::Rp {
            p.seed = mix64(cfg.seed ^ 3);
        }
        methods.push(build_method(kind, &p)?);
    }
    let mut elapsed_ns = vec![0u128; methods.len()];

    let checkpoints = checkpoint_positions(stream.len(), cfg.checkpoint_every);
    let mut next_cp = checkpoints.iter().peekable();
    let mut oracle = ExactState::default();
    let mut rows = Vec::new();

    for (idx, e) in stream.iter().enumerate() {
        let size_after = oracle.apply(e)? as u64;
        for (method, ns) in methods.iter_mut().zip(elapsed_ns.iter_mut()) {
            if cfg.record_timing {
                let start = Instant::now();
                method.update(e, size_after)?;
                *ns += start.elapsed().as_nanos();
            } else {
                method.update(e, size_after)?;
            }
        }
        if next_cp.peek() == Some(&&(idx + 1)) {
            next_cp.next();
            for (method, &ns) in methods.iter().zip(&elapsed_ns) {
                let cp = score(method.as_ref(), &oracle, &pairs, e.t)?;
                rows.push(ReportRow {
                    t: e.t,
                    method: method.kind(),
                    k: method.k(),
                    memory_bits: method.memory_bits(users),
                    aape: cp.aape().ok(),
                    armse: cp.armse().ok(),
                    excluded_pairs: cp.excluded_pairs(),
                    mean_update_ns: ns as f64 / (idx + 1) as f64,
                });
            }
        }
    }

    Ok(Report {
        rows,
        pairs: pairs.len(),
        users: users as usize,
        stream_len: stream.len(),
        counter_bits: 64 * users,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: MethodKind,
    pub k: usize,
    pub elements: usize,
    pub mean_update_ns: f64,
}

pub const TIMING_CSV_HEADER: &str = "method,k,elements,mean_update_ns";

pub fn timing_csv(rows: &[TimingRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{TIMING_CSV_HEADER}").unwrap();
    for r in rows {
        writeln!(out, "{},{},{},{:.2}", r.method, r.k, r.elements, r.mean_update_ns).unwrap();
    }
    out
}

/// Smallest stream [`run_timing`] accepts.
pub const MIN_TIMING_ELEMENTS: usize = 100_000;

/// Mean per-element update time of each method at each sketch size.
///
/// All methods use the given `k` directly (VOS included) and VOS keeps the
/// same `m` across sizes. The first tenth of the stream is a warm-up and is
/// not timed.
pub fn run_timing(cfg: &ExperimentConfig, k_values: &[usize]) -> Result<Vec<TimingRow>> {
    if k_values.is_empty() {
        return Err(Error::InvalidConfig("no k values to time".into()));
    }
    cfg.validate()?;
    let stream = cfg.build_stream()?;
    if stream.len() < MIN_TIMING_ELEMENTS {
        return Err(Error::InvalidConfig(format!(
            "timing stream has {} elements, need at least {MIN_TIMING_ELEMENTS}",
            stream.len()
        )));
    }
    let mut oracle = ExactState::default();
    let sizes: Vec<u64> = stream
        .iter()
        .map(|e| oracle.apply(e).map(|n| n as u64))
        .collect::<Result<_>>()?;
    let max_k = *k_values.iter().max().unwrap() as u64;
    let m = cfg.m_bits.unwrap_or(1 << 22).max(max_k);
    let warmup = stream.len() / 10;

    let mut rows = Vec::new();
    for &kind in &cfg.methods {
        for &k in k_values {
            let params = MethodParams {
                k,
                k_vos: k,
                m,
                seed: cfg.hash_seed(),
            };
            let mut method = build_method(kind, &params)?;
            for (e, &n) in stream[..warmup].iter().zip(&sizes) {
                method.update(e, n)?;
            }
            let start = Instant::now();
            for (e, &n) in stream[warmup..].iter().zip(&sizes[warmup..]) {
                method.update(std::hint::black_box(e), n)?;
            }
            let elapsed = start.elapsed();
            let timed = stream.len() - warmup;
            rows.push(TimingRow {
                method: kind,
                k,
                elements: timed,
                mean_update_ns: elapsed.as_nanos() as f64 / timed as f64,
            });
        }
    }
    Ok(rows)
}

/// Best sketch size per method and metric over a sweep of final checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepBest {
    pub method: MethodKind,
    pub best_k_aape: Option<(usize, f64)>,
    pub best_k_armse: Option<(usize, f64)>,
}

/// Picks, for each method, the `k` minimizing AAPE and ARMSE at the final
/// checkpoint. `reports` pairs each swept `k` with its run.
pub fn sweep_argmin(reports: &[(usize, Report)]) -> Vec<SweepBest> {
    let mut kinds: Vec<MethodKind> = reports
        .iter()
        .flat_map(|(_, r)| r.final_rows().map(|row| row.method))
        .collect();
    kinds.sort_unstable();
    kinds.dedup();
    let argmin = |kind: MethodKind, pick: fn(&ReportRow) -> Option<f64>| {
        reports
            .iter()
            .filter_map(|(k, r)| {
                r.final_rows()
                    .find(|row| row.method == kind)
                    .and_then(pick)
                    .filter(|v| v.is_finite())
                    .map(|v| (*k, v))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
    };
    kinds
        .into_iter()
        .map(|kind| SweepBest {
            method: kind,
            best_k_aape: argmin(kind, |r| r.aape),
            best_k_armse: argmin(kind, |r| r.armse),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_schedule() {
        assert!(checkpoint_positions(0, None).is_empty());
        assert_eq!(checkpoint_positions(5, None), vec![1, 2, 3, 4, 5]);
        assert_eq!(
            checkpoint_positions(100, None),
            (1..=10).map(|c| c * 10).collect::<Vec<_>>()
        );
        assert_eq!(checkpoint_positions(25, Some(10)), vec![10, 20, 25]);
        assert_eq!(checkpoint_positions(20, Some(10)), vec![10, 20]);
    }

    #[test]
    fn vos_length_defaults_to_lambda_baseline_sketches() {
        let cfg = ExperimentConfig {
            k: 50,
            lambda: 3,
            ..ExperimentConfig::default()
        };
        assert_eq!(cfg.k_vos(), 3 * 32 * 50);
        assert_eq!(ExperimentConfig { k_vos: Some(7), ..cfg }.k_vos(), 7);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            ExperimentConfig {
                methods: vec![],
                ..ExperimentConfig::default()
            },
            ExperimentConfig {
                k: 0,
                ..ExperimentConfig::default()
            },
            ExperimentConfig {
                d: 1.5,
                ..ExperimentConfig::default()
            },
            ExperimentConfig {
                checkpoint_every: Some(0),
                ..ExperimentConfig::default()
            },
        ];
        for cfg in bad {
            assert!(run_experiment(&cfg).is_err(), "{cfg:?}");
        }
        assert!(run_timing(&ExperimentConfig::default(), &[]).is_err());
    }

    #[test]
    fn argmin_prefers_lowest_error() {
        let row = |t, method, aape, armse| ReportRow {
            t,
            method,
            k: 0,
            memory_bits: 0,
            aape,
            armse,
            excluded_pairs: 0,
            mean_update_ns: 0.0,
        };
        let report = |aape, armse| Report {
            rows: vec![
                row(1, MethodKind::Vos, Some(9.0), Some(9.0)),
                row(2, MethodKind::Vos, aape, armse),
            ],
            pairs: 1,
            users: 2,
            stream_len: 2,
            counter_bits: 128,
        };
        let best = sweep_argmin(&[
            (10, report(Some(0.5), Some(0.1))),
            (20, report(Some(0.2), Some(0.3))),
            (40, report(None, Some(0.2))),
        ]);
        assert_eq!(
            best,
            vec![SweepBest {
                method: MethodKind::Vos,
                best_k_aape: Some((20, 0.2)),
                best_k_armse: Some((10, 0.1)),
            }]
        );
    }
}
