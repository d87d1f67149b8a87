//! Seeded generator for synthetic flight-departure corpora.
//!
//! Routes fall into two groups with disjoint weather vocabularies and
//! different label rules, so domains in the same group overlap more and share
//! what a model learns. The knowledge base carries airport, carrier and hub
//! facts plus a song titled `LAX` that clashes with the airport.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::domain::{split_indices, write_lso, Lso, DATE_KEY};
use crate::error::{Error, Result};
use crate::ontology::ABoxAxiom;
use crate::transfer::job_rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Carrier {
    pub code: &'static str,
    pub name: &'static str,
    pub major: bool,
    pub hub: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Airport {
    pub code: &'static str,
    pub name: &'static str,
    pub state: &'static str,
    pub city: &'static str,
}

pub const CARRIERS: &[Carrier] = &[
    Carrier {
        code: "AA",
        name: "American Airlines",
        major: true,
        hub: "ORD",
    },
    Carrier {
        code: "AS",
        name: "Alaska Airlines",
        major: false,
        hub: "SEA",
    },
    Carrier {
        code: "B6",
        name: "JetBlue",
        major: false,
        hub: "JFK",
    },
    Carrier {
        code: "DL",
        name: "Delta Air Lines",
        major: true,
        hub: "ATL",
    },
    Carrier {
        code: "F9",
        name: "Frontier Airlines",
        major: false,
        hub: "DEN",
    },
    Carrier {
        code: "NK",
        name: "Spirit Airlines",
        major: false,
        hub: "LAS",
    },
    Carrier {
        code: "UA",
        name: "United Airlines",
        major: true,
        hub: "DEN",
    },
    Carrier {
        code: "WN",
        name: "Southwest Airlines",
        major: true,
        hub: "LAS",
    },
];

pub const AIRPORTS: &[Airport] = &[
    Airport {
        code: "ATL",
        name: "Hartsfield Jackson Atlanta International",
        state: "GA",
        city: "Atlanta",
    },
    Airport {
        code: "BOS",
        name: "Logan International",
        state: "MA",
        city: "Boston",
    },
    Airport {
        code: "DEN",
        name: "Denver International",
        state: "CO",
        city: "Denver",
    },
    Airport {
        code: "DFW",
        name: "Dallas Fort Worth International",
        state: "TX",
        city: "Dallas",
    },
    Airport {
        code: "JFK",
        name: "John F Kennedy International",
        state: "NY",
        city: "NYC",
    },
    Airport {
        code: "LAS",
        name: "Harry Reid International",
        state: "NV",
        city: "LasVegas",
    },
    Airport {
        code: "LAX",
        name: "Los Angeles International",
        state: "CA",
        city: "LA",
    },
    Airport {
        code: "ORD",
        name: "O Hare International",
        state: "IL",
        city: "Chicago",
    },
    Airport {
        code: "SAN",
        name: "San Diego International",
        state: "CA",
        city: "SanDiego",
    },
    Airport {
        code: "SEA",
        name: "Seattle Tacoma International",
        state: "WA",
        city: "Seattle",
    },
    Airport {
        code: "SFO",
        name: "San Francisco International",
        state: "CA",
        city: "SF",
    },
];

/// Weather concepts per group; the first one drives the label.
pub const WEATHER: [[&str; 8]; 2] = [
    ["Fog", "Haze", "Drizzle", "Wind", "Mist", "Smoke", "Dust", "Rain"],
    [
        "Snow", "Ice", "Sleet", "Thunder", "Hail", "Blizzard", "Frost", "Freezing",
    ],
];

const TIMES: [&str; 3] = ["MorningDep", "EveningDep", "NightDep"];

pub const TBOX: &str = "\
SubClassOf(And(Dep Some(hasDelMin Nom(Pos))) DelayedDep)
SubClassOf(And(Dep Some(hasDelMin Nom(Neg))) OnTimeDep)
RoleChain(hasCarrier hasCarHub hasDepHub)
RoleChain(hasNebApt hasRecDep hasRecNebDep)
SubClassOf(And(Dep Some(hasOri Nom(CA)) Some(hasDes Nom(CA))) Some(withIn Nom(CA)))
SubClassOf(Some(withIn Top) InStateDep)
SubClassOf(Departure Dep)
SubClassOf(Airport Location)
RoleChain(hasDes locatedIn desIn)
RoleChain(hasOri locatedIn oriIn)
SubClassOf(And(Departure Some(hasCarrier BigCar)) BigCarDep)
SubClassOf(Fog LowVis)
SubClassOf(Haze LowVis)
SubClassOf(Mist LowVis)
SubClassOf(Smoke LowVis)
SubClassOf(Dust LowVis)
SubClassOf(Drizzle Wet)
SubClassOf(Rain Wet)
SubClassOf(Snow Winter)
SubClassOf(Ice Winter)
SubClassOf(Sleet Winter)
SubClassOf(Hail Winter)
SubClassOf(Blizzard Winter)
SubClassOf(Frost Winter)
SubClassOf(Freezing Winter)
SubClassOf(Wind Storm)
SubClassOf(Thunder Storm)
SubClassOf(And(Departure Some(hasWea LowVis)) LowVisDep)
SubClassOf(And(Departure Some(hasWea Winter)) WinterDep)
SubClassOf(And(Departure Some(hasWea Storm)) StormDep)
";

pub const CONSTRAINTS: &str = "SubClassOf(And(Location Song) Bottom)\n";

pub const MAPPING: &str = "\
type Airport -> Airport
type Airline -> Carrier
type MajorAirline -> BigCar
type Song -> Song
prop state -> locatedIn
prop city -> serveCity
prop hub -> hasCarHub
drop-unmapped true
";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub carrier: &'static str,
    pub origin: &'static str,
    pub destination: &'static str,
}

impl Route {
    pub fn id(&self) -> String {
        format!("{}-{}-{}", self.carrier, self.origin, self.destination).to_lowercase()
    }

    fn carrier_info(&self) -> &'static Carrier {
        CARRIERS.iter().find(|c| c.code == self.carrier).expect("known carrier")
    }

    fn airport(code: &str) -> &'static Airport {
        AIRPORTS.iter().find(|a| a.code == code).expect("known airport")
    }

    /// Group 0 holds major-carrier flights into California.
    pub fn group(&self) -> usize {
        if self.carrier_info().major && Route::airport(self.destination).state == "CA" {
            0
        } else {
            1
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlightCorpusConfig {
    pub routes: Vec<Route>,
    pub min_lsos: usize,
    pub max_lsos: usize,
    /// Probability of flipping a label.
    pub noise: f64,
    pub seed: u64,
    pub train_fraction: f64,
}

fn route(carrier: &'static str, origin: &'static str, destination: &'static str) -> Route {
    Route {
        carrier,
        origin,
        destination,
    }
}

impl FlightCorpusConfig {
    /// Eight routes, four per group.
    pub fn mini_flights() -> Self {
        FlightCorpusConfig {
            routes: vec![
                route("DL", "ORD", "LAX"),
                route("AA", "ORD", "SFO"),
                route("UA", "DEN", "LAX"),
                route("DL", "ATL", "SFO"),
                route("B6", "LAX", "JFK"),
                route("NK", "LAS", "BOS"),
                route("AA", "ORD", "JFK"),
                route("B6", "BOS", "SFO"),
            ],
            min_lsos: 40,
            max_lsos: 80,
            noise: 0.05,
            seed: 2018,
            train_fraction: 0.8,
        }
    }

    /// `domains` distinct routes drawn with `seed`, with smaller domains.
    pub fn scaled(domains: usize, seed: u64) -> Result<Self> {
        let mut all = Vec::new();
        for c in CARRIERS {
            for o in AIRPORTS {
                for d in AIRPORTS {
                    if o.code != d.code {
                        all.push(route(c.code, o.code, d.code));
                    }
                }
            }
        }
        if domains > all.len() {
            return Err(Error::InvalidParameter(format!(
                "at most {} distinct routes are available, asked for {domains}",
                all.len()
            )));
        }
        all.shuffle(&mut job_rng(seed, "routes"));
        all.truncate(domains);
        all.sort_by_key(Route::id);
        Ok(FlightCorpusConfig {
            routes: all,
            min_lsos: 20,
            max_lsos: 30,
            noise: 0.05,
            seed,
            train_fraction: 0.8,
        })
    }
}

/// Generated files keyed by path relative to the corpus root.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneratedCorpus {
    pub files: BTreeMap<PathBuf, String>,
}

impl GeneratedCorpus {
    pub fn write(&self, root: impl AsRef<Path>) -> Result<()> {
        for (rel, text) in &self.files {
            let path = root.as_ref().join(rel);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn has(set: &[&str], x: &str) -> bool {
    set.contains(&x)
}

fn label(group: usize, weather: &[&str], time: &str) -> bool {
    match group {
        0 => has(weather, "Fog") && time != "MorningDep",
        _ => has(weather, "Snow") && time != "NightDep",
    }
}

fn sample(r: &Route, i: usize, date: NaiveDate, rng: &mut impl Rng, noise: f64) -> Result<Lso> {
    let group = r.group();
    let weather: Vec<&str> = WEATHER[group]
        .iter()
        .enumerate()
        .filter(|(k, _)| rng.random_bool(if *k == 0 { 0.5 } else { 0.35 }))
        .map(|(_, w)| *w)
        .collect();
    let time = TIMES[rng.random_range(0..TIMES.len())];
    let weekend = rng.random_bool(2.0 / 7.0);
    let mut y = label(group, &weather, time);
    if rng.random_bool(noise) {
        y = !y;
    }
    let temp: f64 = if group == 0 { 15.0 } else { 0.0 } + rng.random_range(-8.0..8.0);

    let mut text = String::new();
    let _ = writeln!(text, "ClassAssert(Departure d)");
    let _ = writeln!(text, "RoleAssert(hasCarrier d {})", r.carrier);
    let _ = writeln!(text, "RoleAssert(hasOri d {})", r.origin);
    let _ = writeln!(text, "RoleAssert(hasDes d {})", r.destination);
    let _ = writeln!(text, "ClassAssert(Carrier {})", r.carrier);
    let _ = writeln!(text, "ClassAssert(Airport {})", r.origin);
    let _ = writeln!(text, "ClassAssert(Airport {})", r.destination);
    let _ = writeln!(text, "RoleAssert(hasWea d wea)");
    for w in &weather {
        let _ = writeln!(text, "ClassAssert({w} wea)");
    }
    let _ = writeln!(text, "ClassAssert({time} d)");
    if weekend {
        let _ = writeln!(text, "ClassAssert(WeekendDep d)");
    }
    if y {
        let _ = writeln!(text, "ClassAssert(DelayedDep d)");
    }
    let ont = crate::ontology::parse_ontology(&text)?;
    let abox: Vec<ABoxAxiom> = ont.abox;
    let mut lso = Lso {
        id: format!("{}-{i:03}", r.id()),
        abox,
        ..Lso::default()
    };
    lso.annotations
        .insert(DATE_KEY.into(), date.format("%Y-%m-%d").to_string());
    lso.annotations.insert("car".into(), r.carrier.into());
    lso.annotations.insert("ori".into(), r.origin.into());
    lso.annotations.insert("des".into(), r.destination.into());
    lso.values.insert("temp".into(), (temp * 10.0).round() / 10.0);
    Ok(lso)
}

fn both_classes(lsos: &[Lso], idx: &[usize]) -> bool {
    let pos = idx.iter().filter(|&&i| lsos[i].abox.iter().any(is_delayed)).count();
    pos > 0 && pos < idx.len()
}

fn is_delayed(ax: &ABoxAxiom) -> bool {
    ax.to_string() == "ClassAssert(DelayedDep d)"
}

/// LSOs of one route, redrawn until both splits contain both classes.
pub fn route_samples(r: &Route, cfg: &FlightCorpusConfig) -> Result<Vec<Lso>> {
    let start = NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date");
    for attempt in 0..1000 {
        let mut rng = job_rng(cfg.seed, &format!("{}#{attempt}", r.id()));
        let n = rng.random_range(cfg.min_lsos..=cfg.max_lsos);
        let lsos = (0..n)
            .map(|i| sample(r, i, start + Days::new(i as u64), &mut rng, cfg.noise))
            .collect::<Result<Vec<_>>>()?;
        let split = split_indices(&lsos, cfg.train_fraction, cfg.seed);
        if both_classes(&lsos, &split.train) && both_classes(&lsos, &split.test) {
            return Ok(lsos);
        }
    }
    Err(Error::InvalidParameter(format!(
        "route {} never produced both classes in both splits",
        r.id()
    )))
}

fn kb_text() -> String {
    let mut out = String::from("# entity\tlabels\ttypes\tproperties\n");
    // Listed first so that an unchecked import would take it.
    out.push_str("song-lax\tLAX|L.A.X.\tSong|MusicalWork\tartist=The Game;year=2008\n");
    for a in AIRPORTS {
        let _ = writeln!(
            out,
            "apt-{}\t{}|{}\tAirport\tstate={};city={}",
            a.code.to_lowercase(),
            a.code,
            a.name,
            a.state,
            a.city
        );
    }
    for c in CARRIERS {
        let types = if c.major { "Airline|MajorAirline" } else { "Airline" };
        let _ = writeln!(
            out,
            "car-{}\t{}|{}\t{types}\thub={}",
            c.code.to_lowercase(),
            c.code,
            c.name,
            c.hub
        );
    }
    out
}

/// Builds every file of the corpus. The output depends only on `cfg`.
pub fn generate(cfg: &FlightCorpusConfig) -> Result<GeneratedCorpus> {
    let mut files = BTreeMap::new();
    files.insert(PathBuf::from("tbox.ont"), TBOX.to_string());
    files.insert(PathBuf::from("constraints.ont"), CONSTRAINTS.to_string());
    files.insert(PathBuf::from("mapping.txt"), MAPPING.to_string());
    files.insert(PathBuf::from("kb.tsv"), kb_text());
    let mut seen = std::collections::BTreeSet::new();
    for r in &cfg.routes {
        let id = r.id();
        if !seen.insert(id.clone()) {
            return Err(Error::InvalidParameter(format!("duplicate route {id}")));
        }
        let dir = PathBuf::from("domains").join(&id);
        files.insert(
            dir.join("domain.manifest"),
            format!(
                "id = {id}\ntarget = DelayedDep(d)\ntbox = ../../tbox.ont\nannotations = dat car ori des\ngroup = {}\n",
                r.group()
            ),
        );
        for lso in route_samples(r, cfg)? {
            let date = &lso.annotations[DATE_KEY];
            files.insert(dir.join("lsos").join(format!("{date}.abox")), write_lso(&lso));
        }
    }
    Ok(GeneratedCorpus { files })
}
