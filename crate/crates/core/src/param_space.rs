//! Operators, their discrete parameter ranges, and the composite action space.
//!
//! An action assigns one value to every parameter of every operator. Actions
//! are numbered by mixed-radix encoding over the declared order: the first
//! operator's first parameter is the most significant digit.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub name: String,
    pub values: Vec<i64>,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, values: impl Into<Vec<i64>>) -> Self {
        Self {
            name: name.into(),
            values: values.into(),
        }
    }

    pub fn position(&self, value: i64) -> Option<usize> {
        self.values.iter().position(|&v| v == value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub name: String,
    pub parameters: Vec<ParameterSpec>,
}

impl OperatorSpec {
    pub fn new(name: impl Into<String>, parameters: Vec<ParameterSpec>) -> Self {
        Self {
            name: name.into(),
            parameters,
        }
    }
}

/// One operator's full parameter assignment, values in parameter order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ElementaryAction {
    pub operator: String,
    pub assignment: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Action {
    pub elementary: Vec<ElementaryAction>,
    pub index: usize,
}

impl Action {
    /// Looks up the value assigned to `operator.parameter`.
    pub fn value(&self, space: &ActionSpace, operator: &str, parameter: &str) -> Option<i64> {
        let (op_pos, op) = space
            .operators
            .iter()
            .enumerate()
            .find(|(_, o)| o.name == operator)?;
        let p_pos = op.parameters.iter().position(|p| p.name == parameter)?;
        Some(self.elementary[op_pos].assignment[p_pos])
    }

    /// All values flattened in declaration order.
    pub fn values(&self) -> impl Iterator<Item = i64> + '_ {
        self.elementary.iter().flat_map(|e| e.assignment.iter().copied())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} (", self.index)?;
        for (i, e) in self.elementary.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:", e.operator)?;
            for (j, v) in e.assignment.iter().enumerate() {
                if j > 0 {
                    write!(f, "/")?;
                }
                write!(f, "{v}")?;
            }
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    operators: Vec<OperatorSpec>,
    count: usize,
}

impl ActionSpace {
    pub fn new(operators: Vec<OperatorSpec>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::config("action space needs at least one operator"));
        }
        let mut op_names = HashSet::new();
        let mut count: usize = 1;
        for op in &operators {
            if !op_names.insert(op.name.as_str()) {
                return Err(Error::config(format!("duplicate operator `{}`", op.name)));
            }
            if op.parameters.is_empty() {
                return Err(Error::config(format!(
                    "operator `{}` declares no parameters",
                    op.name
                )));
            }
            let mut names = HashSet::new();
            for p in &op.parameters {
                if !names.insert(p.name.as_str()) {
                    return Err(Error::config(format!(
                        "duplicate parameter `{}.{}`",
                        op.name, p.name
                    )));
                }
                if p.values.is_empty() {
                    return Err(Error::config(format!(
                        "parameter `{}.{}` has an empty value range",
                        op.name, p.name
                    )));
                }
                let distinct: HashSet<_> = p.values.iter().collect();
                if distinct.len() != p.values.len() {
                    return Err(Error::config(format!(
                        "parameter `{}.{}` has duplicate values",
                        op.name, p.name
                    )));
                }
                count = count.checked_mul(p.values.len()).ok_or_else(|| {
                    Error::config("action space size overflows the index type")
                })?;
            }
        }
        Ok(Self { operators, count })
    }

    pub fn operators(&self) -> &[OperatorSpec] {
        &self.operators
    }

    pub fn count(&self) -> usize {
        self.count
    }

    fn radices(&self) -> impl DoubleEndedIterator<Item = &ParameterSpec> {
        self.operators.iter().flat_map(|o| o.parameters.iter())
    }

    pub fn action(&self, index: usize) -> Result<Action> {
        if index >= self.count {
            return Err(Error::OutOfRange {
                index,
                count: self.count,
            });
        }
        // Peel digits from the least significant end.
        let mut digits: Vec<usize> = Vec::new();
        let mut rest = index;
        for p in self.radices().rev() {
            digits.push(rest % p.values.len());
            rest /= p.values.len();
        }
        digits.reverse();
        let mut digits = digits.into_iter();
        let elementary = self
            .operators
            .iter()
            .map(|op| ElementaryAction {
                operator: op.name.clone(),
                assignment: op
                    .parameters
                    .iter()
                    .map(|p| p.values[digits.next().expect("one digit per parameter")])
                    .collect(),
            })
            .collect();
        Ok(Action { elementary, index })
    }

    /// Index of the action assigning `values` (flattened, declaration order).
    pub fn index_of(&self, values: &[i64]) -> Result<usize> {
        let params: Vec<_> = self.radices().collect();
        if values.len() != params.len() {
            return Err(Error::config(format!(
                "expected {} parameter values, got {}",
                params.len(),
                values.len()
            )));
        }
        let mut index = 0;
        for (p, &v) in params.iter().zip(values) {
            let digit = p.position(v).ok_or_else(|| {
                Error::config(format!(
                    "value {v} not in range of `{}`; legal values: {:?}",
                    p.name, p.values
                ))
            })?;
            index = index * p.values.len() + digit;
        }
        Ok(index)
    }

    /// Parses an assignment such as `n=13,k=3` or `GLCM.n=13,KMEANS.k=3`.
    ///
    /// Bare parameter names must be unambiguous across operators.
    pub fn parse_assignment(&self, text: &str) -> Result<usize> {
        let total: usize = self.operators.iter().map(|o| o.parameters.len()).sum();
        let mut values: Vec<Option<i64>> = vec![None; total];
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected name=value, got `{part}`")))?;
            let value: i64 = value.trim().parse().map_err(|_| {
                Error::config(format!("value `{}` for `{key}` is not an integer", value.trim()))
            })?;
            let slot = self.slot_of(key.trim())?;
            if values[slot].replace(value).is_some() {
                return Err(Error::config(format!("parameter `{key}` assigned twice")));
            }
        }
        let mut flat = Vec::with_capacity(total);
        for (slot, (op, p)) in self.qualified().enumerate() {
            flat.push(values[slot].ok_or_else(|| {
                Error::config(format!(
                    "missing value for `{}.{}`; legal values: {:?}",
                    op.name, p.name, p.values
                ))
            })?);
        }
        self.index_of(&flat)
    }

    fn qualified(&self) -> impl Iterator<Item = (&OperatorSpec, &ParameterSpec)> {
        self.operators
            .iter()
            .flat_map(|o| o.parameters.iter().map(move |p| (o, p)))
    }

    fn slot_of(&self, key: &str) -> Result<usize> {
        let matches: Vec<usize> = self
            .qualified()
            .enumerate()
            .filter(|(_, (o, p))| match key.split_once('.') {
                Some((op, param)) => o.name == op && p.name == param,
                None => p.name == key,
            })
            .map(|(i, _)| i)
            .collect();
        match matches.as_slice() {
            [slot] => Ok(*slot),
            [] => Err(Error::config(format!("unknown parameter `{key}`"))),
            _ => Err(Error::config(format!(
                "parameter `{key}` is ambiguous; qualify it as OPERATOR.{key}"
            ))),
        }
    }

    /// Human-readable `OP.param=value` pairs for an action.
    pub fn describe(&self, action: &Action) -> Vec<(String, i64)> {
        self.qualified()
            .zip(action.values())
            .map(|((o, p), v)| (format!("{}.{}", o.name, p.name), v))
            .collect()
    }
}

/// The GLCM-window x k-means space used throughout the experiments:
/// n in {9, 11, ..., 21}, k in {1, ..., 5}.
pub fn reference_operators() -> Vec<OperatorSpec> {
    vec![
        OperatorSpec::new(
            "GLCM",
            vec![ParameterSpec::new("n", (9..=21).step_by(2).collect::<Vec<_>>())],
        ),
        OperatorSpec::new("KMEANS", vec![ParameterSpec::new("k", (1..=5).collect::<Vec<_>>())]),
    ]
}
