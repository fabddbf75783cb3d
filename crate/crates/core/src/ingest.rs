//! Turns external two-category streams into observation logs.
//!
//! An [`ObservationLog`] is an event stream whose items carry external keys.
//! Items are re-keyed to dense ids in order of first appearance (agent order
//! within a step), which is exactly how the simulator numbers colors, so a
//! simulated log read back from CSV is identical to the original.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::model::ColorId;
use crate::simulator::{rng_for, DrawEvent};
use crate::stats::EventSource;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationLog {
    n_agents: usize,
    events: Vec<DrawEvent>,
    /// External key of every item id.
    dictionary: Vec<String>,
}

impl EventSource for ObservationLog {
    fn n_agents(&self) -> usize {
        self.n_agents
    }

    fn events(&self) -> &[DrawEvent] {
        &self.events
    }

    fn item_label(&self, color: ColorId) -> String {
        self.dictionary[color].clone()
    }
}

/// One observed draw: `(t, agent, item)` with `t` and `agent` 1-based, plus
/// the input line it came from (0 if unknown).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub t: u64,
    pub agent: usize,
    pub item: String,
    pub line: usize,
}

impl ObservationLog {
    /// Validates and canonicalizes a set of records.
    ///
    /// Every `(t, agent)` with `1 ≤ t ≤ T` and `1 ≤ agent ≤ n_agents` must
    /// occur exactly once. An item first appearing for two agents at the
    /// same step is an error unless `drop_colliding` is set, in which case
    /// the whole step is removed and later steps move up by one.
    pub fn from_records(n_agents: usize, records: Vec<Record>, drop_colliding: bool) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::Domain("log has no agents".into()));
        }
        let horizon = records.iter().map(|r| r.t).max().unwrap_or(0);
        if horizon as u128 * n_agents as u128 > 2 * records.len() as u128 + 16 {
            let r = records.iter().find(|r| r.t == horizon).expect("non-empty");
            return Err(Error::Malformed {
                line: r.line,
                message: format!("t={horizon} is far beyond the {} rows given", records.len()),
            });
        }
        let mut grid: Vec<Option<Record>> = vec![None; horizon as usize * n_agents];
        for r in records {
            if r.t == 0 || r.agent == 0 || r.agent > n_agents {
                return Err(Error::Malformed {
                    line: r.line,
                    message: format!(
                        "t={} agent={} outside 1..=T and 1..={n_agents}",
                        r.t, r.agent
                    ),
                });
            }
            let slot = &mut grid[(r.t as usize - 1) * n_agents + r.agent - 1];
            if let Some(prev) = slot {
                return Err(Error::Malformed {
                    line: r.line,
                    message: format!(
                        "duplicate row for t={}, agent={} (first at line {})",
                        r.t, r.agent, prev.line
                    ),
                });
            }
            *slot = Some(r);
        }
        if let Some(i) = grid.iter().position(Option::is_none) {
            return Err(Error::Missing {
                t: (i / n_agents) as u64 + 1,
                agent: i % n_agents + 1,
            });
        }

        let mut ids: HashMap<String, ColorId> = HashMap::new();
        let mut dictionary: Vec<String> = Vec::new();
        let mut adopted: Vec<Vec<bool>> = Vec::new();
        let mut events = Vec::with_capacity(grid.len());
        let mut t_out = 0u64;
        for step in grid.chunks_exact(n_agents) {
            let step: Vec<&Record> = step.iter().map(|r| r.as_ref().expect("checked")).collect();
            let mut fresh: Vec<&str> = Vec::new();
            let mut collision = None;
            for r in &step {
                if !ids.contains_key(&r.item) {
                    if fresh.contains(&r.item.as_str()) {
                        collision = Some(r);
                        break;
                    }
                    fresh.push(&r.item);
                }
            }
            if let Some(r) = collision {
                if drop_colliding {
                    continue;
                }
                return Err(Error::Simultaneity {
                    t: r.t,
                    item: r.item.clone(),
                });
            }
            t_out += 1;
            for (h, r) in step.iter().enumerate() {
                let (color, new_system) = match ids.get(&r.item) {
                    Some(&c) => (c, false),
                    None => {
                        let c = dictionary.len();
                        ids.insert(r.item.clone(), c);
                        dictionary.push(r.item.clone());
                        adopted.push(vec![false; n_agents]);
                        (c, true)
                    }
                };
                events.push(DrawEvent {
                    t: t_out,
                    agent: h,
                    color,
                    new_system,
                    new_agent: !adopted[color][h],
                });
            }
            // Adoption flags read the pre-step state, like the simulator.
            for (h, r) in step.iter().enumerate() {
                adopted[ids[&r.item]][h] = true;
            }
        }
        Ok(Self {
            n_agents,
            events,
            dictionary,
        })
    }

    /// Copies any event source, naming items by [`EventSource::item_label`].
    pub fn from_source<S: EventSource + ?Sized>(source: &S) -> Result<Self> {
        Self::from_records(source.n_agents(), records_of(source), false)
    }

    pub fn dictionary(&self) -> &[String] {
        &self.dictionary
    }

    pub fn horizon(&self) -> u64 {
        EventSource::horizon(self)
    }

    /// The same observations with agents `a` and `b` (0-based) exchanged.
    pub fn swapped(&self, a: usize, b: usize) -> Result<Self> {
        let swap = |h: usize| {
            if h == a {
                b
            } else if h == b {
                a
            } else {
                h
            }
        };
        let records = records_of(self)
            .into_iter()
            .map(|r| Record {
                agent: swap(r.agent - 1) + 1,
                ..r
            })
            .collect();
        Self::from_records(self.n_agents, records, false)
    }
}

fn records_of<S: EventSource + ?Sized>(source: &S) -> Vec<Record> {
    source
        .events()
        .iter()
        .enumerate()
        .map(|(i, e)| Record {
            t: e.t,
            agent: e.agent + 1,
            item: source.item_label(e.color),
            line: i + 2,
        })
        .collect()
}

/// Reads a headed CSV with at least the columns `t,agent,item`. Other
/// columns (such as the simulator's novelty flags) are ignored and rederived.
pub fn read_csv<R: std::io::Read>(reader: R, drop_colliding: bool) -> Result<ObservationLog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Malformed {
            line: 1,
            message: format!("missing column `{name}` (header must contain t,agent,item)"),
        })
    };
    let (ct, ca, ci) = (column("t")?, column("agent")?, column("item")?);
    let mut records = Vec::new();
    let mut n_agents = 0;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| row.get(i).unwrap_or("");
        let parse = |i: usize, name: &str| {
            field(i).parse::<u64>().map_err(|_| Error::Malformed {
                line,
                message: format!("{name} = `{}` is not a non-negative integer", field(i)),
            })
        };
        let t = parse(ct, "t")?;
        let agent = parse(ca, "agent")? as usize;
        n_agents = n_agents.max(agent);
        records.push(Record {
            t,
            agent,
            item: field(ci).to_string(),
            line,
        });
    }
    if records.is_empty() {
        return Err(Error::Malformed {
            line: 2,
            message: "no observations".into(),
        });
    }
    ObservationLog::from_records(n_agents, records, drop_colliding)
}

/// Where observations come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputFormat<'a> {
    /// A `t,agent,item` CSV.
    Csv(&'a Path),
    /// Two one-item-per-line files of equal length, agent 1 then agent 2.
    Parallel(&'a Path, &'a Path),
}

fn with_path(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into()
}

pub fn load_observations(format: &InputFormat<'_>, drop_colliding: bool) -> Result<ObservationLog> {
    match format {
        InputFormat::Csv(path) => read_csv(std::fs::File::open(path).map_err(with_path(path))?, drop_colliding),
        InputFormat::Parallel(a, b) => {
            let read = |p: &Path| -> Result<Vec<String>> {
                Ok(std::fs::read_to_string(p).map_err(with_path(p))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect())
            };
            pair_streams(&read(a)?, &read(b)?, drop_colliding)
        }
    }
}

/// Step `t` pairs `a[t−1]` (agent 1) with `b[t−1]` (agent 2).
pub fn pair_streams<S: AsRef<str>>(a: &[S], b: &[S], drop_colliding: bool) -> Result<ObservationLog> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "streams have lengths {} and {}; equalize them first",
            a.len(),
            b.len()
        )));
    }
    let records = a
        .iter()
        .zip(b)
        .enumerate()
        .flat_map(|(i, (x, y))| {
            let t = i as u64 + 1;
            [(1, x), (2, y)].map(|(agent, item)| Record {
                t,
                agent,
                item: item.as_ref().to_string(),
                line: i + 1,
            })
        })
        .collect();
    ObservationLog::from_records(2, records, drop_colliding)
}

/// Randomly removes elements of the longer stream until both have the same
/// length. Survivors keep their order; the shorter stream is untouched.
pub fn equalize<T: Clone>(a: &[T], b: &[T], seed: u64) -> (Vec<T>, Vec<T>) {
    let thin = |long: &[T], keep: usize| -> Vec<T> {
        let mut idx = sample(&mut rng_for(seed), long.len(), keep).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| long[i].clone()).collect()
    };
    match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Equal => (a.to_vec(), b.to_vec()),
        std::cmp::Ordering::Greater => (thin(a, b.len()), b.to_vec()),
        std::cmp::Ordering::Less => (a.to_vec(), thin(b, a.len())),
    }
}

#[derive(Clone, Debug)]
pub struct TokenizeOptions {
    /// Tokens with fewer characters are dropped.
    pub min_len: usize,
    /// Treat digits as separators rather than word characters.
    pub strip_numbers: bool,
    /// Applied to each surviving token, e.g. a Porter stemmer.
    pub stemmer: Option<fn(&str) -> String>,
}

impl Default for TokenizeOptions {
    fn default() -> Self {
        Self {
            min_len: 3,
            strip_numbers: true,
            stemmer: None,
        }
    }
}

/// Lowercases `text` and splits it on everything that is not a letter
/// (or digit, when numbers are kept).
pub fn tokenize(text: &str, options: &TokenizeOptions) -> Vec<String> {
    let is_word = |c: char| c.is_alphabetic() || (!options.strip_numbers && c.is_numeric());
    text.split(|c: char| !is_word(c))
        .filter(|w| w.chars().count() >= options.min_len)
        .map(|w| {
            let w = w.to_lowercase();
            match options.stemmer {
                Some(stem) => stem(&w),
                None => w,
            }
        })
        .collect()
}
