//! Flat `key = value` experiment configuration.
//!
//! Keys are sectioned as `system.*`, `observable.*`, `folner.*` and `run.*`.
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated; an integer item may be an inclusive range `a..b`.
//! Window elements are separated by `;`, their coordinates by `,`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::density::{build_partition, Partition};
use crate::dynamics::{independence_window, Observable, SystemDescriptor};
use crate::error::{Error, Result};
use crate::folner::{FolnerSequence, SizeMap};
use crate::group::{FiniteSubset, GroupDescriptor, GroupElement};
use crate::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Bernoulli {
        group: GroupDescriptor,
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
    Rotation {
        theta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    /// Value of the identity coordinate.
    Coordinate,
    Indicator { symbol: usize },
    AllEqual { window: Vec<Vec<i64>>, symbol: usize },
    Table { window: Vec<Vec<i64>>, table: Vec<f64> },
    Constant { value: f64 },
    Arc { start: Rational, end: Rational },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FolnerSpec {
    Interval,
    Box { dim: usize },
    Jump { base: u64, sizes: SizeMap },
}

impl SystemSpec {
    fn from_entries(e: &mut Entries) -> Result<Self> {
        let kind = e.take("system.kind")?.unwrap_or_else(|| (0, "bernoulli".into()));
        let system = match kind.1.as_str() {
            "bernoulli" => {
                let group = match e.take("system.group")? {
                    Some((line, g)) => GroupDescriptor::parse(&g).map_err(|err| config_err(line, err))?,
                    None => GroupDescriptor::integer_line(),
                };
                let values = e.floats("system.values")?.unwrap_or_else(|| vec![0.0, 1.0]);
                let probabilities = match e.floats("system.probabilities")? {
                    Some(p) => p,
                    None => vec![1.0 / values.len() as f64; values.len()],
                };
                SystemSpec::Bernoulli {
                    group,
                    values,
                    probabilities,
                }
            }
            "rotation" => SystemSpec::Rotation {
                theta: e.float("system.theta")?.unwrap_or(std::f64::consts::SQRT_2 - 1.0),
            },
            other => return Err(config_err(kind.0, format!("unknown system.kind `{other}`"))),
        };
        Ok(system)
    }

    pub fn build(&self) -> Result<SystemDescriptor> {
        match self {
            SystemSpec::Bernoulli {
                group,
                values,
                probabilities,
            } => SystemDescriptor::bernoulli(*group, values.clone(), probabilities.clone()),
            SystemSpec::Rotation { theta } => SystemDescriptor::rotation(*theta),
        }
    }
}

impl ObservableSpec {
    fn from_entries(e: &mut Entries) -> Result<Self> {
        let kind = e.take("observable.kind")?.unwrap_or_else(|| (0, "coordinate".into()));
        let observable = match kind.1.as_str() {
            "coordinate" => ObservableSpec::Coordinate,
            "indicator" => ObservableSpec::Indicator {
                symbol: e.int("observable.symbol")?.unwrap_or(1) as usize,
            },
            "all_equal" => ObservableSpec::AllEqual {
                window: e.window("observable.window")?.ok_or_else(|| missing("observable.window"))?,
                symbol: e.int("observable.symbol")?.unwrap_or(1) as usize,
            },
            "table" => ObservableSpec::Table {
                window: e.window("observable.window")?.ok_or_else(|| missing("observable.window"))?,
                table: e.floats("observable.table")?.ok_or_else(|| missing("observable.table"))?,
            },
            "constant" => ObservableSpec::Constant {
                value: e.float("observable.value")?.ok_or_else(|| missing("observable.value"))?,
            },
            "arc" => ObservableSpec::Arc {
                start: e.rational("observable.start")?.unwrap_or(Rational::from_integer(0)),
                end: e.rational("observable.end")?.unwrap_or(Rational::new(1, 2)),
            },
            other => return Err(config_err(kind.0, format!("unknown observable.kind `{other}`"))),
        };
        Ok(observable)
    }

    pub fn build(&self, sys: &SystemDescriptor) -> Result<Observable> {
        let window = |rows: &[Vec<i64>]| -> Result<FiniteSubset> {
            let elems = rows
                .iter()
                .map(|c| GroupElement::new(c))
                .collect::<Result<Vec<_>>>()?;
            FiniteSubset::from_elements(sys.group(), elems)
        };
        match self {
            ObservableSpec::Coordinate => Observable::coordinate_value(sys),
            ObservableSpec::Indicator { symbol } => Observable::symbol_indicator(sys, *symbol),
            ObservableSpec::AllEqual { window: w, symbol } => Observable::all_equal(sys, window(w)?, *symbol),
            ObservableSpec::Table { window: w, table } => Observable::cylinder(sys, window(w)?, table.clone()),
            ObservableSpec::Constant { value } => Observable::constant(sys, *value),
            ObservableSpec::Arc { start, end } => Observable::arc(sys, *start, *end),
        }
    }
}

/// A system and an observable on their own, in the `system.*` and
/// `observable.*` keys of the config format.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableFile {
    pub system: SystemSpec,
    pub observable: ObservableSpec,
}

impl ObservableFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let file = ObservableFile {
            system: SystemSpec::from_entries(&mut e)?,
            observable: ObservableSpec::from_entries(&mut e)?,
        };
        e.finish()?;
        Ok(file)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<(SystemDescriptor, Observable)> {
        let sys = self.system.build()?;
        let f = self.observable.build(&sys)?;
        Ok((sys, f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    Paper,
    Derived,
    Both,
    /// Observation only: no theoretical bounds.
    None,
}

impl BoundVariant {
    pub fn includes_paper(self) -> bool {
        matches!(self, BoundVariant::Paper | BoundVariant::Both)
    }

    pub fn includes_derived(self) -> bool {
        matches!(self, BoundVariant::Derived | BoundVariant::Both)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::Paper => "paper",
            BoundVariant::Derived => "derived",
            BoundVariant::Both => "both",
            BoundVariant::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub observable: ObservableSpec,
    pub folner: FolnerSpec,
    /// Strictly increasing indices `n`.
    pub schedule: Vec<u64>,
    pub eps: Vec<f64>,
    pub samples: u64,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub use_partition: bool,
    pub bounds: BoundVariant,
    /// Run a rotation in observation-only mode instead of refusing.
    pub force: bool,
    /// Number of leading samples whose Doob paths are written out.
    pub doob_samples: u64,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Entries::parse(text)?;
        let cfg = Self::from_entries(&mut entries)?;
        entries.finish()?;
        Ok(cfg)
    }

    fn from_entries(e: &mut Entries) -> Result<Self> {
        let system = SystemSpec::from_entries(e)?;
        let observable = ObservableSpec::from_entries(e)?;

        let kind = e.take("folner.kind")?.unwrap_or_else(|| (0, "interval".into()));
        let folner = match kind.1.as_str() {
            "interval" => FolnerSpec::Interval,
            "box" => FolnerSpec::Box {
                dim: e.int("folner.dim")?.ok_or_else(|| missing("folner.dim"))? as usize,
            },
            "jump" => {
                let base = e.int("folner.base")?.unwrap_or(4);
                let sizes = match e.take("folner.sizes")? {
                    None => SizeMap::Power(2),
                    Some((line, s)) => parse_size_map(&s).map_err(|m| config_err(line, m))?,
                };
                FolnerSpec::Jump { base, sizes }
            }
            other => return Err(config_err(kind.0, format!("unknown folner.kind `{other}`"))),
        };

        let schedule = e.ints("run.schedule")?.ok_or_else(|| missing("run.schedule"))?;
        let eps = e.floats("run.eps")?.ok_or_else(|| missing("run.eps"))?;
        let samples = e.int("run.samples")?.unwrap_or(1000);
        let master_seed = e.int("run.seed")?.unwrap_or(0);
        let out = e.take("run.out")?.map(|(_, s)| PathBuf::from(s));
        let use_partition = e.boolean("run.use_partition")?.unwrap_or(true);
        let bounds = match e.take("run.bounds")? {
            None => BoundVariant::Both,
            Some((line, s)) => match s.as_str() {
                "paper" => BoundVariant::Paper,
                "derived" => BoundVariant::Derived,
                "both" => BoundVariant::Both,
                "none" => BoundVariant::None,
                other => return Err(config_err(line, format!("unknown run.bounds `{other}`"))),
            },
        };
        let force = e.boolean("run.force")?.unwrap_or(false);
        let doob_samples = e.int("run.doob_samples")?.unwrap_or(0);
        let cfg = ExperimentConfig {
            system,
            observable,
            folner,
            schedule,
            eps,
            samples,
            master_seed,
            out,
            use_partition,
            bounds,
            force,
            doob_samples,
        };
        cfg.check_shape()?;
        Ok(cfg)
    }

    /// Checks that do not need the constructed observable.
    fn check_shape(&self) -> Result<()> {
        if self.schedule.is_empty() || self.schedule[0] == 0 {
            return Err(Error::invalid("run.schedule needs positive indices"));
        }
        if let Some(w) = self.schedule.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "run.schedule must strictly increase, found {} then {}",
                w[0], w[1]
            )));
        }
        if self.samples == 0 {
            return Err(Error::invalid("run.samples must be at least 1"));
        }
        if self.eps.is_empty() {
            return Err(Error::invalid("run.eps needs at least one value"));
        }
        Ok(())
    }

    /// Structural checks plus `eps in (0, 2 ||f||)`.
    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        let sys = self.build_system()?;
        let f = self.build_observable(&sys)?;
        let seq = self.build_folner()?;
        if seq.group() != sys.group() {
            return Err(Error::invalid(format!(
                "Følner sequence lives on a group of dimension {}, system on dimension {}",
                seq.group().dim(),
                sys.group().dim()
            )));
        }
        let top = 2.0 * f.sup_norm();
        if let Some(eps) = self.eps.iter().find(|&&eps| !(eps > 0.0 && eps < top)) {
            return Err(Error::invalid(format!("eps {eps} outside (0, 2 ||f||) = (0, {top})")));
        }
        Ok(())
    }

    pub fn build_system(&self) -> Result<SystemDescriptor> {
        self.system.build()
    }

    pub fn build_observable(&self, sys: &SystemDescriptor) -> Result<Observable> {
        self.observable.build(sys)
    }

    pub fn build_folner(&self) -> Result<FolnerSequence> {
        match &self.folner {
            FolnerSpec::Interval => Ok(FolnerSequence::interval()),
            FolnerSpec::Box { dim } => FolnerSequence::boxes(*dim),
            FolnerSpec::Jump { base, sizes } => FolnerSequence::jump_shifted(*base, sizes.clone()),
        }
    }

    /// `delta = eps / (7 ||f||)` for the smallest configured `eps`.
    pub fn delta(&self, sup_norm: f64) -> f64 {
        let eps = self.eps.iter().copied().fold(f64::INFINITY, f64::min);
        eps / (7.0 * sup_norm)
    }

    /// The separating set `K = W^{-1} W` and the partition used by the run.
    pub fn build_partition(&self, f: &Observable, group: GroupDescriptor) -> Result<(FiniteSubset, Partition)> {
        let k = independence_window(f)?;
        let p = if self.use_partition {
            build_partition(&k, self.delta(f.sup_norm()), group)?
        } else {
            Partition::trivial(group)
        };
        Ok((k, p))
    }
}

fn missing(key: &str) -> Error {
    Error::invalid(format!("missing required key `{key}`"))
}

fn config_err(line: usize, message: impl ToString) -> Error {
    Error::Config {
        line,
        message: message.to_string(),
    }
}

fn parse_size_map(s: &str) -> std::result::Result<SizeMap, String> {
    if let Some(p) = s.strip_prefix("power:") {
        return p
            .trim()
            .parse()
            .map(SizeMap::Power)
            .map_err(|_| format!("bad exponent in `{s}`"));
    }
    if s == "square" {
        return Ok(SizeMap::Power(2));
    }
    parse_int_list(s).map(SizeMap::Table)
}

fn parse_int_list(s: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad range start in `{item}`"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad range end in `{item}`"))?;
            if b < a {
                return Err(format!("empty range `{item}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| format!("`{item}` is not a nonnegative integer"))?);
        }
    }
    Ok(out)
}

/// Raw entries with their line numbers; every key must be consumed.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(config_err(line, "empty key"));
            }
            if let Some((first, _)) = map.insert(key.clone(), (line, value)) {
                return Err(config_err(line, format!("duplicate key `{key}` (first on line {first})")));
            }
        }
        Ok(Entries { map })
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().min_by_key(|(_, (line, _))| *line) {
            None => Ok(()),
            Some((key, (line, _))) => Err(config_err(line, format!("unknown or unused key `{key}`"))),
        }
    }

    fn take(&mut self, key: &str) -> Result<Option<(usize, String)>> {
        Ok(self.map.remove(key))
    }

    fn parsed<T>(&mut self, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.take(key)? {
            None => Ok(None),
            Some((line, v)) => f(&v).map(Some).map_err(|m| config_err(line, format!("{key}: {m}"))),
        }
    }

    fn int(&mut self, key: &str) -> Result<Option<u64>> {
        self.parsed(key, |v| v.parse().map_err(|_| format!("`{v}` is not a nonnegative integer")))
    }

    fn ints(&mut self, key: &str) -> Result<Option<Vec<u64>>> {
        self.parsed(key, parse_int_list)
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>> {
        self.parsed(key, |v| v.parse().map_err(|_| format!("`{v}` is not a number")))
    }

    fn floats(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.parsed(key, |v| {
            v.split(',')
                .map(|x| x.trim().parse().map_err(|_| format!("`{x}` is not a number")))
                .collect()
        })
    }

    fn rational(&mut self, key: &str) -> Result<Option<Rational>> {
        self.parsed(key, |v| v.parse().map_err(|_| format!("`{v}` is not a rational")))
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>> {
        self.parsed(key, |v| match v {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(format!("`{v}` is not a boolean")),
        })
    }

    fn window(&mut self, key: &str) -> Result<Option<Vec<Vec<i64>>>> {
        self.parsed(key, |v| {
            v.split(';')
                .map(|elem| {
                    elem.split(',')
                        .map(|c| c.trim().parse().map_err(|_| format!("`{c}` is not an integer")))
                        .collect()
                })
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INTERVAL: &str = "\
# tempered baseline
system.kind = bernoulli
system.values = 0, 1
system.probabilities = 0.5, 0.5
observable.kind = coordinate
folner.kind = interval
run.schedule = 64, 128, 256, 512, 1024, 2048, 4096
run.eps = 0.05
run.samples = 2000
run.seed = 7
";

    #[test]
    fn parses_interval_example() {
        let cfg = ExperimentConfig::parse(INTERVAL).unwrap();
        assert_eq!(cfg.schedule.len(), 7);
        assert_eq!(cfg.samples, 2000);
        assert_eq!(cfg.bounds, BoundVariant::Both);
        assert!(cfg.use_partition);
        cfg.validate().unwrap();
    }

    #[test]
    fn parses_ranges_windows_and_jump() {
        let text = "\
system.group = z
observable.kind = all_equal
observable.window = 0; 1; 3
folner.kind = jump
folner.base = 4
folner.sizes = power:2
run.schedule = 4..20
run.eps = 0.1, 0.5
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.schedule, (4..=20).collect::<Vec<_>>());
        assert_eq!(
            cfg.observable,
            ObservableSpec::AllEqual {
                window: vec![vec![0], vec![1], vec![3]],
                symbol: 1
            }
        );
        assert_eq!(cfg.folner, FolnerSpec::Jump { base: 4, sizes: SizeMap::Power(2) });
        cfg.validate().unwrap();
    }

    #[test]
    fn reports_line_numbers() {
        let err = ExperimentConfig::parse("run.schedule = 1,2\nrun.eps = 0.1\nrun.bogus = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        let err = ExperimentConfig::parse("run.schedule = 1,x\nrun.eps = 0.1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }), "{err}");
        let err = ExperimentConfig::parse("run.eps = 0.1\nrun.eps = 0.2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        assert!(ExperimentConfig::parse("just words\n").is_err());
    }

    #[test]
    fn rejects_invalid_runs() {
        assert!(ExperimentConfig::parse("run.schedule = 3, 2\nrun.eps = 0.1\n").is_err());
        assert!(ExperimentConfig::parse("run.schedule = 1\nrun.eps = 0.1\nrun.samples = 0\n").is_err());
        let big_eps = ExperimentConfig::parse("run.schedule = 1\nrun.eps = 2.5\n").unwrap();
        assert!(big_eps.validate().is_err());
        let mismatch = ExperimentConfig::parse("system.group = z2\nrun.schedule = 1\nrun.eps = 0.1\n").unwrap();
        assert!(mismatch.validate().is_err());
    }

    #[test]
    fn observable_file_builds_table() {
        let text = "system.probabilities = 0.7, 0.3\nobservable.kind = table\nobservable.window = 0; 2\nobservable.table = 0, 1, 2, 3\n";
        let file = ObservableFile::parse(text).unwrap();
        let (_, f) = file.build().unwrap();
        // mean = 1*(.7*.3) + 2*(.3*.7) + 3*(.3*.3)
        assert!((f.exact_mean() - 0.9).abs() < 1e-12);
        let err = ObservableFile::parse("observable.kind = coordinate\nrun.eps = 0.1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    }
}
