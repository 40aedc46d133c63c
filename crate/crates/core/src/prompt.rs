//! Prompt rendering from in-context examples and parsing of agent replies.
//!
//! The prompt has four parts in a fixed order: task description, data
//! format, the in-context CSV block and the instruction. The CSV block uses
//! the header `x_1, x_2, ..., x_D, reward` with comma+space separators.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::population::{ActionVector, Bounds, Population};

/// How action values travel through text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum NumberFormat {
    /// Values in their natural units with a fixed number of decimals.
    Decimal { digits: usize },
    /// Integers `0..=max` mapped linearly onto `[lower, upper]` per dimension.
    IntegerGrid { max: u32 },
}

impl Default for NumberFormat {
    fn default() -> Self {
        NumberFormat::Decimal { digits: 3 }
    }
}

impl NumberFormat {
    pub const INTEGER_999: NumberFormat = NumberFormat::IntegerGrid { max: 999 };

    fn render_value(&self, value: f64, lower: f64, upper: f64) -> String {
        match *self {
            NumberFormat::Decimal { digits } => format!("{value:.digits$}"),
            NumberFormat::IntegerGrid { max } => {
                let t = if upper > lower {
                    (value - lower) / (upper - lower)
                } else {
                    0.0
                };
                format!("{}", (t * max as f64).round() as i64)
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("expected {expected}, found {found}")]
    Shape { expected: String, found: String },
    #[error("cannot read {cell:?} on row {row} as a number")]
    Format { row: usize, cell: String },
    #[error("row {row} column {col}: {value} outside [{lower}, {upper}]")]
    Bounds {
        row: usize,
        col: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
}

/// Extra sentence appended to the task description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintText(pub String);

impl ConstraintText {
    /// Sum-power constraint for `dim` power-allocation ratios.
    pub fn sum_power() -> Self {
        ConstraintText(
            "The action vector should satisfy 0<=x_d<=1 for d=1, ..., D and \\sum_{d=1}^{D}x_d<=1.".to_string(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    /// Placeholders: `{D}`, `{P}`, `{x_min}`, `{x_max}`.
    pub task_text: String,
    pub data_format_text: String,
    pub instruction_text: String,
    pub constraint_text: Option<ConstraintText>,
    pub format: NumberFormat,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            task_text: "You are an agent tasked to maximize a reward function by determining \
                        {D}-dimensional action vector [x_1, ..., x_{D}] whose elements are \
                        between {x_min} and {x_max}."
                .into(),
            data_format_text: "You are provided with the action-reward pairs. The first {D} \
                               columns stand for the action vectors, and the last column is \
                               the associated reward."
                .into(),
            instruction_text: "Generate {P} new action vectors different from all above that \
                               can improve the reward. Actions should be presented in a CSV \
                               format of shape ({P}, {D}) where different rows indicate \
                               different action vectors. Do not generate text and codes."
                .into(),
            constraint_text: None,
            format: NumberFormat::default(),
        }
    }
}

impl PromptTemplate {
    pub fn with_format(mut self, format: NumberFormat) -> Self {
        self.format = format;
        self
    }

    pub fn with_constraint(mut self, text: Option<ConstraintText>) -> Self {
        self.constraint_text = text;
        self
    }

    fn fill(&self, text: &str, p: usize, bounds: &Bounds) -> String {
        let (lo, hi) = self.bound_labels(bounds);
        text.replace("{D}", &bounds.dim().to_string())
            .replace("{P}", &p.to_string())
            .replace("{x_min}", &lo)
            .replace("{x_max}", &hi)
    }

    fn bound_labels(&self, bounds: &Bounds) -> (String, String) {
        if let NumberFormat::IntegerGrid { max } = self.format {
            return ("0".into(), max.to_string());
        }
        let label = |v: &[f64]| {
            if v.iter().all(|&x| x == v[0]) {
                trim_float(v[0])
            } else {
                let parts: Vec<String> = v.iter().map(|&x| trim_float(x)).collect();
                format!("[{}]", parts.join(", "))
            }
        };
        (label(bounds.lower()), label(bounds.upper()))
    }

    /// The CSV in-context block including its header line.
    pub fn render_examples(&self, examples: &Population, bounds: &Bounds) -> String {
        let d = bounds.dim();
        let mut out = String::new();
        for i in 1..=d {
            let _ = write!(out, "x_{i}, ");
        }
        out.push_str("reward\n");
        let rewards = examples.rewards();
        for (row, action) in examples.actions().iter().enumerate() {
            let cells: Vec<String> = action
                .values()
                .iter()
                .enumerate()
                .map(|(k, &v)| self.format.render_value(v, bounds.lower()[k], bounds.upper()[k]))
                .collect();
            out.push_str(&cells.join(", "));
            if let Some(r) = rewards {
                let _ = write!(out, ", {:.3}", r[row]);
            }
            out.push('\n');
        }
        out
    }

    /// Renders the full prompt. Pure: identical inputs give identical text.
    pub fn render(&self, examples: &Population, bounds: &Bounds, p: usize) -> String {
        let mut task = self.fill(&self.task_text, p, bounds);
        if let Some(c) = &self.constraint_text {
            task.push(' ');
            task.push_str(&c.0);
        }
        format!(
            "Task description: {task}\n\nData format: {}\n\nIn-context examples:\n{}\nInstruction: {}\n",
            self.fill(&self.data_format_text, p, bounds),
            self.render_examples(examples, bounds),
            self.fill(&self.instruction_text, p, bounds),
        )
    }
}

/// Renders the prompt with the default template and decimal format.
pub fn render_prompt(examples: &Population, bounds: &Bounds, p: usize, constraint: Option<ConstraintText>) -> String {
    PromptTemplate::default()
        .with_constraint(constraint)
        .render(examples, bounds, p)
}

fn trim_float(x: f64) -> String {
    format!("{x}")
}

fn is_data_line(line: &str) -> bool {
    matches!(line.chars().next(), Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.')
}

/// Parses `p` rows of `d` numbers. Prose lines and code fences are skipped;
/// malformed data rows are rejected, never repaired.
pub fn parse_population(text: &str, p: usize, bounds: &Bounds, format: NumberFormat) -> Result<Population, ParseError> {
    let d = bounds.dim();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.starts_with("```") || !is_data_line(line) {
            continue;
        }
        let row = rows.len();
        let cells: Vec<&str> = line.trim_end_matches(',').split(',').map(str::trim).collect();
        if cells.len() != d {
            return Err(ParseError::Shape {
                expected: format!("{d} values per row"),
                found: format!("{} on row {row}", cells.len()),
            });
        }
        let values = cells
            .iter()
            .map(|cell| {
                parse_cell(cell, format).ok_or_else(|| ParseError::Format {
                    row,
                    cell: cell.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(values);
    }
    if rows.len() != p {
        return Err(ParseError::Shape {
            expected: format!("{p} rows"),
            found: format!("{} rows", rows.len()),
        });
    }
    let mut actions = Vec::with_capacity(p);
    for (row, raw) in rows.into_iter().enumerate() {
        let mut values = Vec::with_capacity(d);
        for (col, v) in raw.into_iter().enumerate() {
            let (lo, hi) = (bounds.lower()[col], bounds.upper()[col]);
            let x = match format {
                NumberFormat::Decimal { .. } => v,
                NumberFormat::IntegerGrid { max } => {
                    if v < 0.0 || v > max as f64 {
                        return Err(ParseError::Bounds {
                            row,
                            col,
                            value: v,
                            lower: 0.0,
                            upper: max as f64,
                        });
                    }
                    lo + (hi - lo) * v / max as f64
                }
            };
            if x < lo || x > hi {
                return Err(ParseError::Bounds {
                    row,
                    col,
                    value: x,
                    lower: lo,
                    upper: hi,
                });
            }
            values.push(x);
        }
        actions.push(ActionVector::new(values, bounds).expect("checked above"));
    }
    Ok(Population::new(actions).expect("p >= 1 rows"))
}

fn parse_cell(cell: &str, format: NumberFormat) -> Option<f64> {
    match format {
        NumberFormat::Decimal { .. } => cell.parse::<f64>().ok().filter(|v| v.is_finite()),
        NumberFormat::IntegerGrid { .. } => cell.parse::<i64>().ok().map(|v| v as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize) -> Bounds {
        Bounds::unit(d)
    }

    #[test]
    fn renders_three_decimal_rows() {
        let b = unit(1);
        let ex = Population::evaluated(vec![ActionVector::new(vec![0.5], &b).unwrap()], vec![0.25]).unwrap();
        let text = render_prompt(&ex, &b, 1, None);
        assert!(text.contains("x_1, reward\n0.500, 0.250\n"), "{text}");
        assert_eq!(text, render_prompt(&ex, &b, 1, None));
    }

    #[test]
    fn four_parts_in_order() {
        let b = unit(2);
        let ex = Population::evaluated(
            Population::from_rows(&[vec![0.301, 0.713]], &b)
                .unwrap()
                .actions()
                .to_vec(),
            vec![1.732],
        )
        .unwrap();
        let text = render_prompt(&ex, &b, 5, Some(ConstraintText::sum_power()));
        let idx: Vec<usize> = [
            "Task description:",
            "Data format:",
            "In-context examples:",
            "Instruction:",
        ]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("The action vector should satisfy"));
        assert!(text.find("The action vector should satisfy").unwrap() < idx[1]);
        assert!(text.contains("x_1, x_2, reward\n0.301, 0.713, 1.732"));
        assert!(text.contains("shape (5, 2)"));
        assert!(text.contains("2-dimensional"));
    }

    #[test]
    fn integer_grid_rendering() {
        let b = unit(2);
        let ex = Population::evaluated(
            Population::from_rows(&[vec![1.0, 0.5]], &b).unwrap().actions().to_vec(),
            vec![0.1],
        )
        .unwrap();
        let t = PromptTemplate::default().with_format(NumberFormat::INTEGER_999);
        let s = t.render(&ex, &b, 1);
        assert!(s.contains("999, 500, 0.100"), "{s}");
        assert!(s.contains("between 0 and 999"));
    }

    #[test]
    fn parses_plain_rows() {
        let pop = parse_population("0.1,0.2\n0.3,0.4", 2, &unit(2), NumberFormat::default()).unwrap();
        assert_eq!(pop.rows(), vec![vec![0.1, 0.2], vec![0.3, 0.4]]);
    }

    #[test]
    fn strips_fences_and_prose() {
        let pop = parse_population("```\n0.1,0.2\n```", 1, &unit(2), NumberFormat::default()).unwrap();
        assert_eq!(pop.rows(), vec![vec![0.1, 0.2]]);
        let pop = parse_population(
            "Here are the actions:\n```csv\nx_1,x_2\n0.1, 0.2\n```\nGood luck.",
            1,
            &unit(2),
            NumberFormat::default(),
        )
        .unwrap();
        assert_eq!(pop.rows(), vec![vec![0.1, 0.2]]);
    }

    #[test]
    fn error_kinds_are_distinct() {
        let f = NumberFormat::default();
        assert!(matches!(
            parse_population("0.1,0.2", 2, &unit(2), f),
            Err(ParseError::Shape { .. })
        ));
        assert!(matches!(
            parse_population("0.1,0.2,0.3", 1, &unit(2), f),
            Err(ParseError::Shape { .. })
        ));
        assert!(matches!(
            parse_population("0.1,abc", 1, &unit(2), f),
            Err(ParseError::Format { .. })
        ));
        assert!(matches!(
            parse_population("0.1,1.5", 1, &unit(2), f),
            Err(ParseError::Bounds { col: 1, .. })
        ));
        assert!(matches!(
            parse_population("0.1,nan", 1, &unit(2), f),
            Err(ParseError::Format { .. })
        ));
    }

    #[test]
    fn integer_grid_parsing_normalizes() {
        let b = Bounds::uniform(2, 0.0, 2.0).unwrap();
        let pop = parse_population("999,0", 1, &b, NumberFormat::INTEGER_999).unwrap();
        assert_eq!(pop.rows(), vec![vec![2.0, 0.0]]);
        assert!(matches!(
            parse_population("1000,0", 1, &b, NumberFormat::INTEGER_999),
            Err(ParseError::Bounds { .. })
        ));
        assert!(matches!(
            parse_population("0.5,0", 1, &b, NumberFormat::INTEGER_999),
            Err(ParseError::Format { .. })
        ));
    }
}
