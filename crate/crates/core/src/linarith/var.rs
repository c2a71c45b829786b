//! Interned variable identifiers.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, Mutex};

struct Interner {
    names: Vec<Arc<str>>,
    index: HashMap<Arc<str>, u32>,
    fresh: u64,
}

static INTERNER: LazyLock<Mutex<Interner>> = LazyLock::new(|| {
    Mutex::new(Interner {
        names: Vec::new(),
        index: HashMap::new(),
        fresh: 0,
    })
});

/// A variable. Ids are process-global, so two `Var`s with the same name are
/// equal regardless of where they were created.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    pub fn named(name: &str) -> Var {
        let mut int = INTERNER.lock().expect("interner poisoned");
        if let Some(&id) = int.index.get(name) {
            return Var(id);
        }
        let id = int.names.len() as u32;
        let name: Arc<str> = Arc::from(name);
        int.names.push(name.clone());
        int.index.insert(name, id);
        Var(id)
    }

    /// A variable that does not clash with any parsed variable (parsed names
    /// start with an uppercase letter, fresh ones with `_`).
    pub fn fresh() -> Var {
        let mut int = INTERNER.lock().expect("interner poisoned");
        loop {
            int.fresh += 1;
            let name = format!("_{}", int.fresh);
            if !int.index.contains_key(name.as_str()) {
                let id = int.names.len() as u32;
                let name: Arc<str> = Arc::from(name.as_str());
                int.names.push(name.clone());
                int.index.insert(name, id);
                return Var(id);
            }
        }
    }

    /// Canonical positional variable `#i`, used for predicate-level
    /// invariants and properties.
    pub fn positional(i: usize) -> Var {
        Var::named(&format!("#{i}"))
    }

    pub fn positionals(n: usize) -> Vec<Var> {
        (0..n).map(Var::positional).collect()
    }

    pub fn name(&self) -> Arc<str> {
        INTERNER.lock().expect("interner poisoned").names[self.0 as usize].clone()
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
