//! Server configuration, loaded once from TOML at startup.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bank_core::backup::BackupConfig;
use bank_core::BankConfig;
use serde::{Deserialize, Serialize};

/// Environment variable that, when set, replaces the `--config` path.
pub const CONFIG_ENV: &str = "BANK_CONFIG";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdminCredential {
    pub username: String,
    pub password: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: String,
    pub data_dir: PathBuf,
    pub bank: BankConfig,
    pub backup: BackupConfig,
    /// Created on first start if missing.
    pub admin: Option<AdminCredential>,
    /// How often background jobs wake up.
    pub tick_s: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("data"),
            bank: BankConfig::default(),
            backup: BackupConfig::default(),
            admin: None,
            tick_s: 30,
        }
    }
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: ServerConfig = toml::from_str(text).context("parsing configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading configuration {}", path.display()))?;
        Self::from_toml(&text)
    }

    /// `BANK_CONFIG` wins over the flag; with neither, defaults apply.
    pub fn resolve(flag: Option<&Path>) -> anyhow::Result<Self> {
        match std::env::var_os(CONFIG_ENV).map(PathBuf::from).or(flag.map(Path::to_path_buf)) {
            Some(path) => Self::load(&path),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.bank.validate()?;
        self.backup.validate()?;
        if self.tick_s == 0 {
            bail!("tick_s must be positive");
        }
        if let Some(admin) = &self.admin {
            if admin.username.trim().is_empty() || admin.password.is_empty() {
                bail!("admin username and password must not be empty");
            }
        }
        Ok(())
    }
}
