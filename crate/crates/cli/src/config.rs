//! Run configuration: the JSON file given with `--config` merged with the
//! command-line overrides.

use std::path::Path;

use canard_core::connection::ConnectionConfig;
use canard_core::melnikov::MelnikovConfig;
use canard_core::shilnikov::ShilnikovConfig;
use canard_core::slow_manifold::ManifoldConfig;
use canard_core::{SlowFastSystem, Tolerances};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    system: Option<serde_json::Value>,
    tolerances: Option<Tolerances>,
    manifold: Option<ManifoldConfig>,
    melnikov: Option<MelnikovConfig>,
    connection: Option<ConnectionConfig>,
    shilnikov: Option<ShilnikovConfig>,
    seed: Option<u64>,
}

/// `--tol-*` flags; each one replaces the matching field everywhere a
/// tolerance set appears.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ToleranceOverrides {
    pub abs: Option<f64>,
    pub rel: Option<f64>,
    pub newton: Option<f64>,
    pub newton_iter: Option<usize>,
    pub event: Option<f64>,
}

impl ToleranceOverrides {
    fn apply(&self, t: &mut Tolerances) {
        if let Some(v) = self.abs {
            t.abs_tol = v;
        }
        if let Some(v) = self.rel {
            t.rel_tol = v;
        }
        if let Some(v) = self.newton {
            t.newton_tol = v;
        }
        if let Some(v) = self.newton_iter {
            t.newton_max_iter = v;
        }
        if let Some(v) = self.event {
            t.event_tol = v;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(serialize_with = "system_as_json")]
    pub system: SlowFastSystem,
    pub tolerances: Tolerances,
    pub manifold: ManifoldConfig,
    pub melnikov: MelnikovConfig,
    pub connection: ConnectionConfig,
    pub shilnikov: ShilnikovConfig,
    pub seed: u64,
}

fn system_as_json<S: serde::Serializer>(sys: &SlowFastSystem, s: S) -> Result<S::Ok, S::Error> {
    let v: serde_json::Value = serde_json::from_str(&sys.to_json()).map_err(serde::ser::Error::custom)?;
    v.serialize(s)
}

impl RunConfig {
    pub fn load(path: Option<&Path>, tol: &ToleranceOverrides, seed: Option<u64>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str::<ConfigFile>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => ConfigFile::default(),
        };
        let system = match &file.system {
            Some(v) => SlowFastSystem::from_json(&v.to_string()).map_err(|e| CliError::Config(e.to_string()))?,
            None => SlowFastSystem::canonical(0.0, 1.0),
        };
        let mut cfg = RunConfig {
            system,
            tolerances: file.tolerances.unwrap_or_default(),
            manifold: file.manifold.unwrap_or_default(),
            melnikov: file.melnikov.unwrap_or_default(),
            connection: file.connection.unwrap_or_default(),
            shilnikov: file.shilnikov.unwrap_or_default(),
            seed: seed.or(file.seed).unwrap_or(0),
        };
        tol.apply(&mut cfg.tolerances);
        tol.apply(&mut cfg.melnikov.tol);
        tol.apply(&mut cfg.connection.tol);
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let wrap = |what: &str, r: canard_core::Result<()>| r.map_err(|e| CliError::Config(format!("{what}: {e}")));
        wrap("tolerances", self.tolerances.validate())?;
        wrap("melnikov.tol", self.melnikov.tol.validate())?;
        wrap("manifold", self.manifold.validate())?;
        wrap("melnikov.manifold", self.melnikov.manifold.validate())?;
        wrap("connection", self.connection.validate())?;
        let s = &self.shilnikov;
        if !(s.alpha > 0.0 && s.alpha < 0.5 && s.tol > 0.0 && s.max_iter > 0 && s.eps11 > 0.0 && s.r10_max > 0.0) {
            return Err(CliError::Config("shilnikov: alpha must lie in (0, 1/2) and tolerances be positive".into()));
        }
        Ok(())
    }
}
