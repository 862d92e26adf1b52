use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use flowgroups::suspension::ElementJson;
use flowgroups::symbolic::{AllowedN, Presentation, SystemFile};
use flowgroups::{Error, FlowElement, Result};
use flowgroups::symbolic::System;
use serde::{Deserialize, Serialize};

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stored {
    systems: BTreeMap<String, SystemFile>,
    elements: BTreeMap<String, StoredElement>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredElement {
    system: String,
    element: ElementJson,
}

/// Named systems and elements persisted between invocations.
pub struct Session {
    path: PathBuf,
    stored: Stored,
    systems: BTreeMap<String, System>,
    dirty: bool,
}

pub fn system_file(sys: &System) -> Result<SystemFile> {
    let show = |w: &[u8]| sys.show_word(w);
    let mut f = SystemFile {
        alphabet: sys.alphabet().to_vec(),
        kind: String::new(),
        forbidden: None,
        allowed_n: None,
        rules: None,
        word: None,
    };
    match sys.presentation() {
        Presentation::Full => f.kind = "full".into(),
        Presentation::Periodic(w) => {
            f.kind = "periodic".into();
            f.word = Some(show(w));
        }
        Presentation::Forbidden(ws) => {
            f.kind = "sft".into();
            f.forbidden = Some(ws.iter().map(|w| show(w)).collect());
        }
        Presentation::AllowedN(n, ws) => {
            f.kind = "sft".into();
            f.allowed_n = Some(AllowedN { n: *n, words: ws.iter().map(|w| show(w)).collect() });
        }
        Presentation::Substitution(rules) => {
            f.kind = "substitution".into();
            f.rules = Some(sys.alphabet().iter().cloned().zip(rules.iter().map(|r| show(r))).collect());
        }
        Presentation::Induced => return Err(Error::Unsupported("induced systems cannot be stored".into())),
    }
    Ok(f)
}

impl Session {
    pub fn open(path: &Path) -> Result<Session> {
        let stored: Stored = if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?
        } else {
            Stored::default()
        };
        let mut systems = BTreeMap::new();
        for (name, f) in &stored.systems {
            systems.insert(name.clone(), f.build()?);
        }
        Ok(Session { path: path.to_path_buf(), stored, systems, dirty: false })
    }

    pub fn save(&self) -> Result<()> {
        if !self.dirty {
            return Ok(());
        }
        let text = serde_json::to_string_pretty(&self.stored).expect("session serializes");
        fs::write(&self.path, text + "\n").map_err(|e| Error::Input(format!("{}: {e}", self.path.display())))
    }

    pub fn add_system(&mut self, name: &str, sys: &System) -> Result<()> {
        self.stored.systems.insert(name.to_string(), system_file(sys)?);
        self.systems.insert(name.to_string(), sys.clone());
        self.dirty = true;
        Ok(())
    }

    pub fn system(&self, name: &str) -> Result<System> {
        self.systems.get(name).cloned().ok_or_else(|| Error::Input(format!("unknown system {name:?}")))
    }

    pub fn add_element(&mut self, name: &str, system: &str, g: &FlowElement) {
        self.stored
            .elements
            .insert(name.to_string(), StoredElement { system: system.to_string(), element: g.to_json() });
        self.dirty = true;
    }

    /// The element and the name of its system.
    pub fn element(&self, name: &str) -> Result<(FlowElement, String)> {
        let e = self.stored.elements.get(name).ok_or_else(|| Error::Input(format!("unknown element {name:?}")))?;
        let sys = self.system(&e.system)?;
        Ok((FlowElement::from_json(&sys, &e.element)?, e.system.clone()))
    }
}
