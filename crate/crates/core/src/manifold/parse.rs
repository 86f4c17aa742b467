//! Textual manifold descriptors, e.g. `sphere:radius=1,subdiv=3`.
//!
//! ```text
//! flat-torus:1x1[,cutoff=c]      exact flat torus (any dimension)
//! flat-torus:1x1,res=N           flat 2-torus mesh
//! sphere:radius=1,subdiv=3
//! torus-rev:R=2,r=1,res=64
//! ```
//! Mesh descriptors accept `scale=s` (homothety by `s`).

use std::collections::BTreeMap;

use super::{
    build_flat_torus, build_sphere, build_torus_of_revolution, AnalyticFlatTorus, Manifold,
};
use crate::error::{Error, Result};

/// Default cutoff for exact tori of dimension 3 and up, where the sample grid
/// grows as `(2c + 2)^n`.
pub const HIGH_DIMENSIONAL_CUTOFF: usize = 5;

struct Options {
    entries: BTreeMap<String, String>,
    source: String,
}

impl Options {
    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::invalid(format!("{}: cannot parse {key}={v}", self.source))),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| Error::invalid(format!("{}: missing {key}=...", self.source)))
    }

    fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            Some(k) => Err(Error::invalid(format!(
                "{}: unknown option '{k}'",
                self.source
            ))),
            None => Ok(()),
        }
    }
}

pub fn parse_manifold(descriptor: &str) -> Result<Manifold> {
    let (kind, rest) = descriptor.split_once(':').unwrap_or((descriptor, ""));
    let mut parts = rest.split(',').filter(|p| !p.is_empty()).peekable();
    let dims = if kind == "flat-torus" {
        match parts.next() {
            Some(d) if !d.contains('=') => Some(d),
            _ => {
                return Err(Error::invalid(format!(
                    "{descriptor}: expected periods like 1x1"
                )))
            }
        }
    } else {
        None
    };
    let mut entries = BTreeMap::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| {
            Error::invalid(format!("{descriptor}: expected key=value, got '{p}'"))
        })?;
        if entries.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::invalid(format!(
                "{descriptor}: repeated option '{k}'"
            )));
        }
    }
    let mut opts = Options {
        entries,
        source: descriptor.to_string(),
    };
    let scale: Option<f64> = opts.take("scale")?;

    let m = match kind {
        "flat-torus" => {
            let periods = dims
                .unwrap_or_default()
                .split('x')
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::invalid(format!("{descriptor}: bad periods")))?;
            match opts.take::<usize>("res")? {
                Some(res) => {
                    let [lx, ly] = periods[..] else {
                        return Err(Error::invalid(format!(
                            "{descriptor}: torus meshes are 2-dimensional"
                        )));
                    };
                    if opts.entries.contains_key("cutoff") {
                        return Err(Error::invalid(format!(
                            "{descriptor}: cutoff applies to the exact torus only"
                        )));
                    }
                    Manifold::Mesh(build_flat_torus([lx, ly], res)?.mesh)
                }
                None => {
                    if scale.is_some() {
                        return Err(Error::invalid(format!(
                            "{descriptor}: scale the periods instead"
                        )));
                    }
                    let default = if periods.len() <= 2 {
                        super::DEFAULT_TWIN_CUTOFF
                    } else {
                        HIGH_DIMENSIONAL_CUTOFF
                    };
                    let cutoff = opts.take("cutoff")?.unwrap_or(default);
                    Manifold::Flat(AnalyticFlatTorus::new(periods, cutoff)?)
                }
            }
        }
        "sphere" => {
            let radius = opts.take("radius")?.unwrap_or(1.0);
            let subdiv = opts.take("subdiv")?.unwrap_or(3);
            Manifold::Mesh(build_sphere(radius, subdiv)?)
        }
        "torus-rev" => {
            let major = opts.require("R")?;
            let minor = opts.require("r")?;
            let res = opts.take("res")?.unwrap_or(64);
            Manifold::Mesh(build_torus_of_revolution(major, minor, res)?)
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown manifold kind '{other}' (flat-torus, sphere, torus-rev)"
            )))
        }
    };
    opts.finish()?;
    match (m, scale) {
        (Manifold::Mesh(mesh), Some(s)) => Ok(Manifold::Mesh(mesh.scaled(s)?)),
        (m, _) => Ok(m),
    }
}
