use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arch::Field;
use crate::field::{checked_pow, is_prime};

/// Largest `n` any campaign accepts.
pub const N_CAP: u32 = 8;
/// Default cap on enumerated tuples (or tuple pairs) per grid cell.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CampaignKind {
    Sf,
    Vinogradov,
    Pss,
    Newton,
    Vitali,
    ArchMatch,
    ViolationSearch,
}

impl CampaignKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sf => "sf",
            Self::Vinogradov => "vinogradov",
            Self::Pss => "pss",
            Self::Newton => "newton",
            Self::Vitali => "vitali",
            Self::ArchMatch => "arch-match",
            Self::ViolationSearch => "violation-search",
        }
    }

    pub fn randomised(&self) -> bool {
        !matches!(self, Self::Vinogradov | Self::ViolationSearch)
    }
}

/// Parameter axes; a campaign runs over the product of the axes its kind uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub p: Vec<u64>,
    pub n: Vec<u32>,
    /// Moment orders for `sf`; empty means every `m ≤ n`.
    pub m: Vec<u32>,
    pub alpha: Vec<u32>,
    pub a: Vec<u32>,
    /// Sublevel exponent for `pss`, precision for `newton`.
    pub e: Vec<u32>,
    pub d: Vec<usize>,
    pub lambda: Vec<f64>,
    #[serde(rename = "N")]
    pub big_n: Vec<f64>,
    pub rho: Vec<f64>,
    pub field: Vec<Field>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            p: Vec::new(),
            n: Vec::new(),
            m: Vec::new(),
            alpha: Vec::new(),
            a: Vec::new(),
            e: Vec::new(),
            d: Vec::new(),
            lambda: Vec::new(),
            big_n: Vec::new(),
            rho: vec![2.0],
            field: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub count: usize,
    pub distribution: String,
    /// Adds the single-interval, two-interval and all-ones functions to `sf` runs.
    pub adversarial: bool,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            count: 0,
            distribution: "gaussian".into(),
            adversarial: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ratio: f64,
    pub orthogonality: f64,
    pub geometry: f64,
    pub scaling: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ratio: 1e-9,
            orthogonality: 1e-10,
            geometry: 1e-9,
            scaling: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub kind: Option<CampaignKind>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub tolerance: Tolerances,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// One point of the parameter grid.
pub type Cell = BTreeMap<String, Value>;

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// The grid used when no config file is given.
    pub fn builtin(kind: CampaignKind) -> Self {
        let mut grid = Grid::default();
        let mut ensemble = EnsembleSpec::default();
        match kind {
            CampaignKind::Sf => {
                grid.p = vec![5];
                grid.n = vec![2];
                grid.alpha = vec![1];
                ensemble.count = 100;
            }
            CampaignKind::Vinogradov => {
                grid.p = vec![3];
                grid.n = vec![2];
                grid.a = vec![1];
            }
            CampaignKind::ViolationSearch => {
                grid.p = vec![2];
                grid.n = vec![2];
                grid.a = vec![1];
            }
            CampaignKind::Pss => {
                grid.p = vec![5, 7];
                grid.n = vec![3];
                grid.e = vec![4];
                ensemble.count = 100;
            }
            CampaignKind::Newton => {
                grid.p = vec![5, 7, 11];
                grid.n = vec![3];
                grid.e = vec![6];
                ensemble.count = 1000;
            }
            CampaignKind::Vitali => {
                grid.n = vec![4];
                grid.d = vec![2];
                grid.lambda = vec![2.0];
                ensemble.count = 100;
            }
            CampaignKind::ArchMatch => {
                grid.field = vec![Field::Real, Field::Complex];
                grid.n = vec![3];
                grid.big_n = vec![1e3];
                ensemble.count = 100;
            }
        }
        Self {
            kind: Some(kind),
            seed: None,
            workers: None,
            budget: None,
            grid,
            ensemble,
            tolerance: Tolerances::default(),
        }
    }

    pub fn kind(&self) -> Result<CampaignKind, ConfigError> {
        self.kind
            .ok_or_else(|| ConfigError::Invalid("campaign kind is not set".into()))
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }

    /// Grid cells in deterministic order.
    pub fn cells(&self) -> Result<Vec<Cell>, ConfigError> {
        let kind = self.kind()?;
        let g = &self.grid;
        let axes: Vec<(&str, Vec<Value>)> = match kind {
            CampaignKind::Sf => vec![("p", vals(&g.p)), ("n", vals(&g.n)), ("alpha", vals(&g.alpha))],
            CampaignKind::Vinogradov | CampaignKind::ViolationSearch => {
                vec![("p", vals(&g.p)), ("n", vals(&g.n)), ("a", vals(&g.a))]
            }
            CampaignKind::Pss | CampaignKind::Newton => {
                vec![("p", vals(&g.p)), ("n", vals(&g.n)), ("e", vals(&g.e))]
            }
            CampaignKind::Vitali => vec![("n", vals(&g.n)), ("d", vals(&g.d)), ("lambda", vals(&g.lambda))],
            CampaignKind::ArchMatch => vec![
                ("field", vals(&g.field)),
                ("n", vals(&g.n)),
                ("N", vals(&g.big_n)),
                ("rho", vals(&g.rho)),
            ],
        };
        let mut cells: Vec<Cell> = vec![Cell::new()];
        for (name, values) in axes {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut next = c.clone();
                        next.insert(name.to_string(), v.clone());
                        next
                    })
                })
                .collect();
        }
        Ok(cells)
    }

    /// Checks caps and required fields before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind()?;
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if kind.randomised() && self.seed.is_none() {
            return bad(format!("a seed is required for {} campaigns", kind.name()));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        let g = &self.grid;
        if let Some(&n) = g.n.iter().find(|&&n| n == 0 || n > N_CAP) {
            return bad(format!("n = {n} is outside 1..={N_CAP}"));
        }
        if let Some(&p) = g.p.iter().find(|&&p| !is_prime(p)) {
            return bad(format!("{p} is not prime"));
        }
        let budget = self.budget();
        for cell in self.cells()? {
            let get = |k: &str| cell.get(k).and_then(Value::as_u64).unwrap_or(0);
            let (p, n) = (get("p"), get("n"));
            let scale = get("a").max(get("alpha"));
            if p > 0 && scale > 0 {
                let fits = checked_pow(p, (n * scale) as u32).is_some_and(|v| v <= budget);
                if !fits {
                    return bad(format!("p^(n·{scale}) for p = {p}, n = {n} exceeds the budget {budget}"));
                }
            }
            match kind {
                CampaignKind::Vinogradov | CampaignKind::Newton if p <= n => {
                    return bad(format!("{} needs p > n (p = {p}, n = {n})", kind.name()));
                }
                CampaignKind::ViolationSearch if p > n => {
                    return bad(format!("violation search targets p ≤ n (p = {p}, n = {n})"));
                }
                CampaignKind::Pss | CampaignKind::Newton if get("e") == 0 => {
                    return bad("e must be at least 1".into());
                }
                CampaignKind::Vitali => {
                    let d = get("d");
                    let lambda = cell.get("lambda").and_then(Value::as_f64).unwrap_or(0.0);
                    if d == 0 || lambda < 1.0 {
                        return bad(format!("vitali needs d ≥ 1 and λ ≥ 1 (d = {d}, λ = {lambda})"));
                    }
                }
                CampaignKind::ArchMatch => {
                    let big_n = cell.get("N").and_then(Value::as_f64).unwrap_or(0.0);
                    if big_n < 1.0 {
                        return bad(format!("N = {big_n} must be at least 1"));
                    }
                }
                _ => {}
            }
        }
        if kind == CampaignKind::Sf {
            if let Some(&m) = g.m.iter().find(|&&m| m == 0) {
                return bad(format!("m = {m} must be positive"));
            }
            if self.ensemble.distribution != "gaussian" {
                return bad(format!("unknown distribution {}", self.ensemble.distribution));
            }
        }
        Ok(())
    }

    /// Canonical JSON of everything that determines a cell's rows, minus the cell itself.
    pub fn fingerprint(&self) -> Value {
        json!({
            "kind": self.kind,
            "seed": self.seed,
            "budget": self.budget(),
            "m": self.grid.m,
            "ensemble": self.ensemble,
            "tolerance": self.tolerance,
        })
    }
}

fn vals<T: Serialize>(v: &[T]) -> Vec<Value> {
    v.iter().map(|x| serde_json::to_value(x).expect("serialisable")).collect()
}
