use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::cache::Cache;
use super::config::{CampaignConfig, CampaignKind, Cell};
use super::report::{Provenance, ReportRow, Status, SCHEMA_VERSION};
use crate::arch::{
    arch_match, constructive_instance, random_family_pair, verify_vitali_output, vitali_variant, ArchMatchStatus,
    Field, InstanceKind, VitaliParams,
};
use crate::field::PrimeModulus;
use crate::matcher::{brute_force_verify, hypothesis_violation_search, weakened_modulus_scan, ScanReport};
use crate::pss::{random_clustered_roots, verify_pss_equality, verify_self_ref};
use crate::sqfn::{verify_sf_batch, Ensemble};
use crate::symmetric::{elementary_symmetric, newton_power_to_elementary, power_sums, SymTuple};
use crate::{LabError, Result};

pub const CODE_VERSION: &str = concat!("momentlab-", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// `None` disables the cache.
    pub cache: Option<Cache>,
    pub code_version: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            cache: Some(Cache::from_env()),
            code_version: CODE_VERSION.to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub rows: Vec<ReportRow>,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

impl CampaignOutcome {
    pub fn count(&self, status: Status) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }

    /// 0 if every row passed, 1 on any failure, 3 if rows were only flagged.
    pub fn exit_code(&self) -> i32 {
        match self.rows.iter().map(|r| r.status).max() {
            Some(Status::Fail) => 1,
            Some(Status::Flagged) => 3,
            _ => 0,
        }
    }
}

/// Mixes the campaign seed with stream indices into an independent 64-bit seed.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

fn rng_for(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

/// Stable identifier of the cell within the campaign, used to seed its streams.
fn cell_stream(cell: &Cell) -> u64 {
    let digest = Cache::digest(&json!(cell));
    u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

pub fn run_campaign(config: &CampaignConfig, opts: &RunOptions) -> Result<CampaignOutcome> {
    config.validate().map_err(|e| LabError::InvalidInput(e.to_string()))?;
    let kind = config.kind().map_err(|e| LabError::InvalidInput(e.to_string()))?;
    let workers = config.workers.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::InvalidInput(e.to_string()))?;
    let campaign = format!(
        "{}-{}",
        kind.name(),
        &Cache::digest(&json!({"config": config.fingerprint(), "grid": config.grid}))[..12]
    );
    let provenance = Provenance {
        code_version: opts.code_version.clone(),
        seed: config.seed,
        workers,
    };

    let mut outcome = CampaignOutcome {
        rows: Vec::new(),
        cache_hits: 0,
        cache_misses: 0,
    };
    for cell in config.cells().map_err(|e| LabError::InvalidInput(e.to_string()))? {
        let key = json!({
            "cell": cell,
            "config": config.fingerprint(),
            "code_version": opts.code_version,
        });
        if let Some(rows) = opts.cache.as_ref().and_then(|c| c.lookup(&key)) {
            outcome.cache_hits += 1;
            outcome.rows.extend(rows);
            continue;
        }
        outcome.cache_misses += 1;
        let start = Instant::now();
        let drafts = pool.install(|| run_cell(kind, config, &cell))?;
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3 / drafts.len().max(1) as f64;
        let rows: Vec<ReportRow> = drafts
            .into_iter()
            .map(|d| ReportRow {
                schema_version: SCHEMA_VERSION,
                campaign: campaign.clone(),
                kind: kind.name().to_string(),
                params: d.params,
                status: d.status,
                metrics: d.metrics,
                witness: d.witness,
                runtime_ms,
                provenance: provenance.clone(),
            })
            .collect();
        if let Some(cache) = &opts.cache {
            if let Err(e) = cache.store(&key, &rows) {
                log::warn!("cannot write cache entry: {e}");
            }
        }
        outcome.rows.extend(rows);
    }
    Ok(outcome)
}

struct Draft {
    params: BTreeMap<String, Value>,
    status: Status,
    metrics: BTreeMap<String, Value>,
    witness: Option<Value>,
}

impl Draft {
    fn new(cell: &Cell) -> Self {
        Self {
            params: cell.clone(),
            status: Status::Pass,
            metrics: BTreeMap::new(),
            witness: None,
        }
    }

    fn metric(&mut self, name: &str, value: impl Into<Value>) {
        self.metrics.insert(name.to_string(), value.into());
    }
}

fn uint(cell: &Cell, key: &str) -> u64 {
    cell[key].as_u64().expect("validated integer axis")
}

fn float(cell: &Cell, key: &str) -> f64 {
    cell[key].as_f64().expect("validated numeric axis")
}

fn run_cell(kind: CampaignKind, cfg: &CampaignConfig, cell: &Cell) -> Result<Vec<Draft>> {
    match kind {
        CampaignKind::Sf => sf_cell(cfg, cell),
        CampaignKind::Vinogradov => scan_cell(cfg, cell, false).map(|d| vec![d]),
        CampaignKind::ViolationSearch => scan_cell(cfg, cell, true).map(|d| vec![d]),
        CampaignKind::Pss => pss_cell(cfg, cell).map(|d| vec![d]),
        CampaignKind::Newton => newton_cell(cfg, cell).map(|d| vec![d]),
        CampaignKind::Vitali => vitali_cell(cfg, cell).map(|d| vec![d]),
        CampaignKind::ArchMatch => arch_cell(cfg, cell).map(|d| vec![d]),
    }
}

fn sf_cell(cfg: &CampaignConfig, cell: &Cell) -> Result<Vec<Draft>> {
    let (p, n, alpha) = (uint(cell, "p"), uint(cell, "n") as u32, uint(cell, "alpha") as u32);
    let resolution = alpha * n;
    let seed = cfg.seed.expect("validated");
    let stream = cell_stream(cell);
    let mut labels: Vec<String> = Vec::new();
    let mut fs = (0..cfg.ensemble.count)
        .into_par_iter()
        .map(|i| Ensemble::Gaussian.sample(p, resolution, alpha, &mut rng_for(seed, &[stream, i as u64])))
        .collect::<Result<Vec<_>>>()?;
    labels.extend((0..fs.len()).map(|i| format!("gaussian-{i}")));
    if cfg.ensemble.adversarial {
        let mut rng = rng_for(seed, &[stream, u64::MAX]);
        for e in Ensemble::ADVERSARIAL {
            fs.push(e.sample(p, resolution, alpha, &mut rng)?);
            labels.push(e.name().to_string());
        }
    }
    let ms: Vec<u32> = if cfg.grid.m.is_empty() {
        (1..=n).collect()
    } else {
        cfg.grid.m.iter().copied().filter(|&m| m <= n).collect()
    };
    let reports = verify_sf_batch(&fs, n, alpha)?;
    let tol = &cfg.tolerance;
    let mut drafts = Vec::new();
    for (label, per_m) in labels.iter().zip(&reports) {
        for &m in &ms {
            let r = &per_m[m as usize - 1];
            let mut d = Draft::new(cell);
            d.params.insert("m".into(), json!(m));
            d.params.insert("f".into(), json!(label));
            d.metric("lhs", r.lhs);
            d.metric("rhs", r.rhs);
            d.metric("constant", r.constant);
            d.metric("ratio", r.ratio);
            let orthogonal = m != 1 || (r.ratio - 1.0).abs() <= tol.orthogonality;
            d.status = if r.hypothesis_violated {
                Status::Flagged
            } else if r.holds(tol.ratio) && orthogonal {
                Status::Pass
            } else {
                d.witness = Some(json!({"f": label, "ratio": r.ratio}));
                Status::Fail
            };
            drafts.push(d);
        }
    }
    Ok(drafts)
}

fn scan_metrics(d: &mut Draft, r: &ScanReport) {
    d.metric("total_pairs", r.total_pairs.to_string());
    d.metric("scanned_pairs", r.scanned_pairs.to_string());
    d.metric("satisfying_pairs", r.satisfying_pairs);
    d.metric("matched", r.matched);
    d.metric("failures", r.failures);
    d.metric("sampled", r.sampled);
}

fn scan_cell(cfg: &CampaignConfig, cell: &Cell, exploratory: bool) -> Result<Draft> {
    let (p, n, a) = (uint(cell, "p"), uint(cell, "n") as usize, uint(cell, "a") as u32);
    let budget = Some(cfg.budget() as u128);
    let seed = derive_seed(cfg.seed.unwrap_or(0), &[cell_stream(cell)]);
    let mut d = Draft::new(cell);
    if exploratory {
        let r = hypothesis_violation_search(p, n, a, budget, seed)?;
        scan_metrics(&mut d, &r);
        if a == 1 {
            let weak = weakened_modulus_scan(p, n)?;
            d.metric("weakened_satisfying_pairs", weak.satisfying_pairs);
            d.metric("weakened_failures", weak.failures);
        }
        if !r.witnesses.is_empty() {
            d.witness = Some(json!(r.witnesses));
        }
        // Findings are data here, not failures.
        d.status = if r.sampled { Status::Flagged } else { Status::Pass };
    } else {
        let r = brute_force_verify(p, n, a, budget, seed)?;
        scan_metrics(&mut d, &r);
        d.status = if !r.zero_failures() {
            d.witness = Some(json!(r.witnesses));
            Status::Fail
        } else if r.sampled {
            Status::Flagged
        } else {
            Status::Pass
        };
    }
    Ok(d)
}

fn pss_cell(cfg: &CampaignConfig, cell: &Cell) -> Result<Draft> {
    let (p, n, e) = (uint(cell, "p"), uint(cell, "n") as usize, uint(cell, "e") as u32);
    let modulus = PrimeModulus::new(p, e)?;
    let seed = cfg.seed.expect("validated");
    let stream = cell_stream(cell);
    let results = (0..cfg.ensemble.count)
        .into_par_iter()
        .map(|i| {
            let xi = random_clustered_roots(&mut rng_for(seed, &[stream, i as u64]), modulus, n)?;
            let eq = verify_pss_equality(&xi, e)?.holds();
            let sr = verify_self_ref(&xi, e)?;
            Ok((xi.roots().iter().map(|r| r.rep()).collect::<Vec<_>>(), eq, sr))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d = Draft::new(cell);
    let eq_fail: Vec<_> = results.iter().filter(|r| !r.1).map(|r| &r.0).collect();
    let sr_fail: Vec<_> = results.iter().filter(|r| !r.2).map(|r| &r.0).collect();
    d.metric("tuples", results.len());
    d.metric("equality_failures", eq_fail.len());
    d.metric("self_ref_failures", sr_fail.len());
    if let Some(w) = eq_fail.first().or(sr_fail.first()) {
        d.witness = Some(json!(w));
        d.status = Status::Fail;
    }
    Ok(d)
}

fn newton_cell(cfg: &CampaignConfig, cell: &Cell) -> Result<Draft> {
    let (p, n, precision) = (uint(cell, "p"), uint(cell, "n") as usize, uint(cell, "e") as u32);
    let modulus = PrimeModulus::new(p, precision)?;
    let seed = cfg.seed.expect("validated");
    let stream = cell_stream(cell);
    let failures = (0..cfg.ensemble.count)
        .into_par_iter()
        .map(|i| {
            use rand::Rng;
            let mut rng = rng_for(seed, &[stream, i as u64]);
            let reps: Vec<i128> = (0..n).map(|_| rng.random_range(0..modulus.modulus()) as i128).collect();
            let x = SymTuple::from_ints(modulus, &reps)?;
            let ok = newton_power_to_elementary(&power_sums(&x))? == elementary_symmetric(&x);
            Ok((!ok).then_some(reps))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let mut d = Draft::new(cell);
    d.metric("tuples", cfg.ensemble.count);
    d.metric("failures", failures.len());
    if let Some(w) = failures.first() {
        d.witness = Some(json!(w.iter().map(|v| v.to_string()).collect::<Vec<_>>()));
        d.status = Status::Fail;
    }
    Ok(d)
}

fn vitali_cell(cfg: &CampaignConfig, cell: &Cell) -> Result<Draft> {
    let (n, dim, lambda) = (uint(cell, "n") as usize, uint(cell, "d") as usize, float(cell, "lambda"));
    let params = VitaliParams::new(n, dim, lambda)?;
    let seed = cfg.seed.expect("validated");
    let stream = cell_stream(cell);
    let tol = cfg.tolerance.geometry;
    let results = (0..cfg.ensemble.count)
        .into_par_iter()
        .map(|i| {
            let (bx, by) = random_family_pair(&mut rng_for(seed, &[stream, i as u64]), n, dim, lambda);
            let out = vitali_variant(&bx, &by, lambda)?;
            let v = verify_vitali_output(&bx, &by, &out.pairs, out.r, tol);
            let ok = v.holds() && out.r.log10() <= params.log10_r_envelope;
            Ok((i, ok, out.r, out.separation.rounds, !out.precondition.ballwise))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d = Draft::new(cell);
    let max_r = results.iter().map(|r| r.2).fold(0.0, f64::max);
    d.metric("families", results.len());
    d.metric("failures", results.iter().filter(|r| !r.1).count());
    d.metric("max_log10_r", if max_r > 0.0 { max_r.log10() } else { 0.0 });
    d.metric("log10_r_envelope", params.log10_r_envelope);
    d.metric("max_rounds", results.iter().map(|r| r.3).max().unwrap_or(0));
    d.metric("sampled_preconditions", results.iter().filter(|r| r.4).count());
    if let Some(bad) = results.iter().find(|r| !r.1) {
        d.witness = Some(json!({"family_index": bad.0}));
        d.status = Status::Fail;
    }
    Ok(d)
}

fn arch_cell(cfg: &CampaignConfig, cell: &Cell) -> Result<Draft> {
    let field: Field = serde_json::from_value(cell["field"].clone()).expect("validated field");
    let (n, big_n, rho) = (uint(cell, "n") as usize, float(cell, "N"), float(cell, "rho"));
    let seed = cfg.seed.expect("validated");
    let stream = cell_stream(cell);
    let results = (0..cfg.ensemble.count)
        .into_par_iter()
        .map(|i| {
            let inst = constructive_instance(&mut rng_for(seed, &[stream, i as u64]), field, n, big_n)?;
            let m = arch_match(&inst.x, &inst.y, big_n, rho)?;
            let recovered =
                m.status == ArchMatchStatus::Matched && m.realised <= big_n * inst.planted_bound * (1.0 + 1e-12);
            Ok((i, recovered, m.realised, inst.kind == InstanceKind::Perturbed, inst.rejected))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d = Draft::new(cell);
    d.metric("instances", results.len());
    d.metric("recovered", results.iter().filter(|r| r.1).count());
    d.metric("max_realised", results.iter().map(|r| r.2).fold(0.0, f64::max));
    d.metric("perturbed_fallbacks", results.iter().filter(|r| r.3).count());
    d.metric("rejected_draws", results.iter().map(|r| r.4 as u64).sum::<u64>());
    if let Some(bad) = results.iter().find(|r| !r.1) {
        d.witness = Some(json!({"instance_index": bad.0}));
        d.status = Status::Fail;
    }
    Ok(d)
}
