//! Solver-agnostic sparse mixed-binary linear model.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::Dock;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Model symbol a column stands for. Door and node indices are zero-based;
/// `scenario` is the index into the instance's scenario list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Alpha { door: usize, level: usize },
    Beta { door: usize, level: usize },
    AlphaOut { scenario: usize },
    BetaOut { scenario: usize },
    X { scenario: usize, origin: usize, dock: Dock },
    Y { scenario: usize, destination: usize, dock: Dock },
    V { scenario: usize, origin: usize, strip: Dock, destination: usize, stack: Dock },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpVar {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpRow {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl MilpRow {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Dimension counts: rows, binary columns, continuous columns and
/// structural nonzeros of the rows (objective excluded).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ModelDims {
    pub n_rows: usize,
    pub n_binary: usize,
    pub n_continuous: usize,
    pub n_nonzeros: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenericMilp {
    pub name: String,
    vars: Vec<MilpVar>,
    symbols: Vec<Option<Symbol>>,
    rows: Vec<MilpRow>,
    index: BTreeMap<Symbol, usize>,
    pub objective_offset: f64,
}

impl GenericMilp {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    /// Declares a column. Panics if `symbol` was already declared.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        bounds: (f64, f64),
        objective: f64,
        symbol: Option<Symbol>,
    ) -> usize {
        let id = self.vars.len();
        if let Some(sym) = symbol {
            let prev = self.index.insert(sym, id);
            assert!(prev.is_none(), "symbol {sym:?} declared twice");
        }
        self.vars.push(MilpVar { name: name.into(), kind, lower: bounds.0, upper: bounds.1, objective });
        self.symbols.push(symbol);
        id
    }

    /// Adds a row, dropping zero coefficients and merging repeated columns.
    /// A row left without coefficients is not stored; the return value is
    /// `false` only when such an empty row is violated by its right-hand side.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> bool {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (j, a) in coeffs {
            assert!(j < self.vars.len(), "row references undeclared column {j}");
            *merged.entry(j).or_insert(0.0) += a;
        }
        let coeffs: Vec<(usize, f64)> = merged.into_iter().filter(|(_, a)| *a != 0.0).collect();
        if coeffs.is_empty() {
            return match sense {
                Sense::Le => rhs >= 0.0,
                Sense::Ge => rhs <= 0.0,
                Sense::Eq => rhs == 0.0,
            };
        }
        self.rows.push(MilpRow { name: name.into(), coeffs, sense, rhs });
        true
    }

    pub fn vars(&self) -> &[MilpVar] {
        &self.vars
    }

    pub fn vars_mut(&mut self) -> &mut [MilpVar] {
        &mut self.vars
    }

    pub fn rows(&self) -> &[MilpRow] {
        &self.rows
    }

    pub fn symbol(&self, var: usize) -> Option<Symbol> {
        self.symbols[var]
    }

    pub fn var_of(&self, symbol: &Symbol) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn symbol_map(&self) -> &BTreeMap<Symbol, usize> {
        &self.index
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.vars.iter().zip(x).map(|(v, xv)| v.objective * xv).sum::<f64>()
    }

    /// Largest row or bound violation of `x`, and whether every binary
    /// column is within `tol` of 0 or 1.
    pub fn max_violation(&self, x: &[f64], tol: f64) -> (f64, bool) {
        let mut worst: f64 = 0.0;
        let mut integral = true;
        for (v, &xv) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
            if v.kind == VarKind::Binary && (xv - libm::round(xv)).abs() > tol {
                integral = false;
            }
        }
        for r in &self.rows {
            worst = worst.max(r.violation(x));
        }
        (worst, integral)
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.vars.len() {
            return false;
        }
        let (viol, integral) = self.max_violation(x, tol);
        viol <= tol && integral
    }
}

pub fn count_dims(milp: &GenericMilp) -> ModelDims {
    let n_binary = milp.vars.iter().filter(|v| v.kind == VarKind::Binary).count();
    ModelDims {
        n_rows: milp.rows.len(),
        n_binary,
        n_continuous: milp.vars.len() - n_binary,
        n_nonzeros: milp.rows.iter().map(|r| r.coeffs.len()).sum(),
    }
}

fn dock_code(d: Dock) -> usize {
    match d {
        Dock::Outsourced => 0,
        Dock::Door(i) => i + 1,
    }
}

fn dock_from_code(c: usize) -> Dock {
    if c == 0 {
        Dock::Outsourced
    } else {
        Dock::Door(c - 1)
    }
}

impl Symbol {
    /// Column name used by the builders and the text exports. Indices are
    /// printed one-based; door 0 denotes the outsourcing door.
    pub fn name(&self) -> String {
        use alloc::format;
        match *self {
            Symbol::Alpha { door, level } => format!("alpha_{}_{}", door + 1, level),
            Symbol::Beta { door, level } => format!("beta_{}_{}", door + 1, level),
            Symbol::AlphaOut { scenario } => format!("a0_{}", scenario + 1),
            Symbol::BetaOut { scenario } => format!("b0_{}", scenario + 1),
            Symbol::X { scenario, origin, dock } => {
                format!("x_{}_{}_{}", scenario + 1, origin + 1, dock_code(dock))
            }
            Symbol::Y { scenario, destination, dock } => {
                format!("y_{}_{}_{}", scenario + 1, destination + 1, dock_code(dock))
            }
            Symbol::V { scenario, origin, strip, destination, stack } => format!(
                "v_{}_{}_{}_{}_{}",
                scenario + 1,
                origin + 1,
                dock_code(strip),
                destination + 1,
                dock_code(stack)
            ),
        }
    }

    /// Inverse of [`Symbol::name`].
    pub fn parse(name: &str) -> Option<Symbol> {
        let mut parts = name.split('_');
        let head = parts.next()?;
        let nums: Vec<usize> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        let one = |k: usize| nums.get(k).copied().filter(|&v| v >= 1).map(|v| v - 1);
        let sym = match (head, nums.len()) {
            ("alpha", 2) => Symbol::Alpha { door: one(0)?, level: nums[1] },
            ("beta", 2) => Symbol::Beta { door: one(0)?, level: nums[1] },
            ("a0", 1) => Symbol::AlphaOut { scenario: one(0)? },
            ("b0", 1) => Symbol::BetaOut { scenario: one(0)? },
            ("x", 3) => Symbol::X { scenario: one(0)?, origin: one(1)?, dock: dock_from_code(nums[2]) },
            ("y", 3) => Symbol::Y { scenario: one(0)?, destination: one(1)?, dock: dock_from_code(nums[2]) },
            ("v", 5) => Symbol::V {
                scenario: one(0)?,
                origin: one(1)?,
                strip: dock_from_code(nums[2]),
                destination: one(3)?,
                stack: dock_from_code(nums[4]),
            },
            _ => return None,
        };
        Some(sym)
    }
}
