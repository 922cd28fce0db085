use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::pairs::{PairTable, Variable};
use super::StatsError;

/// Product-moment correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::DegenerateInput(format!("lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(StatsError::DegenerateInput("need at least two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::DegenerateInput("non-finite value".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateInput("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSeries {
    pub x: Variable,
    pub y: Variable,
    pub points: Vec<(f64, f64)>,
}

/// Pairwise correlations over Total, Difference, Ratio and Accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub variables: Vec<Variable>,
    pub matrix: Vec<Vec<f64>>,
    pub scatter: Vec<ScatterSeries>,
    pub pairs: PairTable,
}

impl CorrelationReport {
    pub fn get(&self, a: Variable, b: Variable) -> f64 {
        let i = self.variables.iter().position(|v| *v == a).expect("variable present");
        let j = self.variables.iter().position(|v| *v == b).expect("variable present");
        self.matrix[i][j]
    }

    /// Matrix, blank line, then one `x_variable,y_variable,x,y` row per point.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("variable");
        for v in &self.variables {
            out.push(',');
            out.push_str(v.label());
        }
        out.push('\n');
        for (i, v) in self.variables.iter().enumerate() {
            out.push_str(v.label());
            for r in &self.matrix[i] {
                let _ = write!(out, ",{r:.6}");
            }
            out.push('\n');
        }
        out.push_str("\nx_variable,y_variable,x,y\n");
        for s in &self.scatter {
            for (x, y) in &s.points {
                let _ = writeln!(out, "{},{},{x:.6},{y:.6}", s.x.label(), s.y.label());
            }
        }
        out
    }
}

/// Correlation matrix and scatter series over the observed rows of a pair table.
pub fn correlation_report(table: &PairTable) -> Result<CorrelationReport, StatsError> {
    let rows: Vec<_> = table.observed().collect();
    let column = |v: Variable| -> Vec<f64> { rows.iter().map(|r| r.variable(v).expect("observed row")).collect() };
    let variables = Variable::ALL.to_vec();
    let columns: Vec<Vec<f64>> = variables.iter().map(|v| column(*v)).collect();
    let k = variables.len();
    let mut matrix = vec![vec![0.0; k]; k];
    for i in 0..k {
        matrix[i][i] = 1.0;
        for j in i + 1..k {
            let r = pearson(&columns[i], &columns[j])?;
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
    }
    let mut scatter = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            scatter.push(ScatterSeries {
                x: variables[i],
                y: variables[j],
                points: columns[i].iter().copied().zip(columns[j].iter().copied()).collect(),
            });
        }
    }
    Ok(CorrelationReport { variables, matrix, scatter, pairs: table.clone() })
}
