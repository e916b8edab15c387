//! Glauber (heat-bath) dynamics on finite product spaces and the Dobrushin
//! interdependence parameters of the target measure.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{beckner_predictions, check_states, ModelBundle, Prediction};
use crate::dirichlet::Kernel;
use crate::error::{Error, Result};
use crate::numeric::ksum;
use crate::space::FiniteSpace;

/// Largest joint table for which Dobrushin parameters are computed exactly.
pub const DOBRUSHIN_LIMIT: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMeasure {
    /// Independent coordinates with the given marginals.
    Factorized { marginals: Vec<Vec<f64>> },
    /// Unnormalized weights over the product space in lexicographic order
    /// (first site most significant). Zero weight means outside the support.
    Joint { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub alphabet_sizes: Vec<usize>,
    pub measure: ProductMeasure,
}

impl ProductSpec {
    pub fn factorized(marginals: Vec<Vec<f64>>) -> Self {
        Self {
            alphabet_sizes: marginals.iter().map(|m| m.len()).collect(),
            measure: ProductMeasure::Factorized { marginals },
        }
    }

    pub fn joint(alphabet_sizes: Vec<usize>, weights: Vec<f64>) -> Self {
        Self { alphabet_sizes, measure: ProductMeasure::Joint { weights } }
    }

    pub fn sites(&self) -> usize {
        self.alphabet_sizes.len()
    }

    fn total(&self) -> Result<usize> {
        let mut n: usize = 1;
        for &k in &self.alphabet_sizes {
            if k == 0 {
                return Err(Error::InvalidArgument("empty alphabet".into()));
            }
            n = n.checked_mul(k).ok_or(Error::TooLarge { states: usize::MAX, limit: super::MAX_STATES })?;
            check_states(n)?;
        }
        Ok(n)
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.sites();
        let mut s = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.alphabet_sizes[i + 1];
        }
        s
    }

    fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.sites()];
        for i in (0..self.sites()).rev() {
            out[i] = idx % self.alphabet_sizes[i];
            idx /= self.alphabet_sizes[i];
        }
        out
    }

    /// Probability table over the full product space (zeros off support).
    pub fn table(&self) -> Result<Vec<f64>> {
        if self.sites() == 0 {
            return Err(Error::InvalidArgument("no sites".into()));
        }
        let total = self.total()?;
        match &self.measure {
            ProductMeasure::Factorized { marginals } => {
                if marginals.len() != self.sites() {
                    return Err(Error::DimensionMismatch { expected: self.sites(), got: marginals.len() });
                }
                for (i, m) in marginals.iter().enumerate() {
                    if m.len() != self.alphabet_sizes[i] {
                        return Err(Error::DimensionMismatch { expected: self.alphabet_sizes[i], got: m.len() });
                    }
                    if m.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || (ksum(m.iter().copied()) - 1.0).abs() > 1e-12
                    {
                        return Err(Error::InvalidMeasure(format!("marginal {i} is not a probability vector")));
                    }
                }
                Ok((0..total)
                    .map(|idx| {
                        let x = self.decode(idx);
                        x.iter().enumerate().fold(1.0, |acc, (i, &v)| acc * marginals[i][v])
                    })
                    .collect())
            }
            ProductMeasure::Joint { weights } => {
                if weights.len() != total {
                    return Err(Error::DimensionMismatch { expected: total, got: weights.len() });
                }
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                    return Err(Error::InvalidMeasure("joint weights must be finite and nonnegative".into()));
                }
                let z = ksum(weights.iter().copied());
                if !(z > 0.0) {
                    return Err(Error::InvalidMeasure("joint weights sum to zero".into()));
                }
                Ok(weights.iter().map(|w| w / z).collect())
            }
        }
    }
}

/// Heat-bath Glauber dynamics: each site is resampled at rate 1 from its
/// conditional law given the other sites.
pub fn build_glauber(spec: &ProductSpec) -> Result<ModelBundle> {
    let table = spec.table()?;
    let strides = spec.strides();
    let support: Vec<usize> = (0..table.len()).filter(|&i| table[i] > 0.0).collect();
    let mut index = vec![usize::MAX; table.len()];
    for (k, &i) in support.iter().enumerate() {
        index[i] = k;
    }
    let coords: Vec<Vec<usize>> = support.iter().map(|&i| spec.decode(i)).collect();
    let labels: Vec<String> =
        coords.iter().map(|c| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")).collect();
    let mu: Vec<f64> = support.iter().map(|&i| table[i]).collect();
    let space = FiniteSpace::new(labels, mu)?;
    let mut rates = Vec::new();
    for (k, &full) in support.iter().enumerate() {
        let x = &coords[k];
        for i in 0..spec.sites() {
            let base = full - x[i] * strides[i];
            let z = ksum((0..spec.alphabet_sizes[i]).map(|v| table[base + v * strides[i]]));
            for v in 0..spec.alphabet_sizes[i] {
                let y = base + v * strides[i];
                if v != x[i] && table[y] > 0.0 {
                    rates.push((k, index[y], table[y] / z));
                }
            }
        }
    }
    let kernel = Kernel::new(space, rates)?;
    kernel.ensure_irreducible()?;
    let mut predicted = Vec::new();
    match &spec.measure {
        ProductMeasure::Factorized { .. } => {
            let cite = "product measure: tensorization of entropy for single-site resampling";
            predicted.push(Prediction::lower("lambda", 1.0, cite));
            predicted.push(Prediction::lower("rho0", 1.0, cite));
            predicted.extend(beckner_predictions(1.0, "Beckner from modified log-Sobolev: alpha_p >= K_p rho0", None));
        }
        ProductMeasure::Joint { .. } if table.len() <= DOBRUSHIN_LIMIT => {
            predicted.extend(dobrushin_predictions(&dobrushin_parameters(spec)?));
        }
        ProductMeasure::Joint { .. } => {}
    }
    Ok(ModelBundle {
        name: "glauber".into(),
        kernel,
        coordinates: coords.iter().map(|c| c.iter().map(|&v| v as i64).collect()).collect(),
        predicted,
        metadata: serde_json::json!({"sites": spec.sites(), "alphabet_sizes": spec.alphabet_sizes}),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DobrushinParams {
    /// A_ij: worst total-variation change of the law of site i given the
    /// rest when site j changes.
    pub matrix: Vec<Vec<f64>>,
    pub operator_norm: f64,
    /// 1 − ‖A‖₂.
    pub alpha: f64,
    /// Smallest conditional probability of a site value given any subset of
    /// the other sites, over configurations in the support.
    pub beta: f64,
}

pub(crate) fn dobrushin_predictions(d: &DobrushinParams) -> Vec<Prediction> {
    let mut out = vec![
        Prediction::lower("dobrushin_alpha", d.alpha, "Dobrushin interdependence matrix: alpha = 1 - ||A||_2"),
        Prediction::lower("dobrushin_beta", d.beta, "minimal conditional probability over subsets"),
    ];
    if d.alpha > 0.0 && d.beta > 0.0 {
        let c = d.alpha * d.alpha * d.beta;
        let cite = "approximate tensorization under Dobrushin uniqueness: rho0 >= alpha^2 beta";
        out.push(Prediction::lower("rho0", c, cite));
        if d.beta < 1.0 {
            out.push(Prediction::lower(
                "rho1",
                std::f64::consts::LN_2 * c / (2.0 * (1.0 / d.beta).ln()),
                "approximate tensorization under Dobrushin uniqueness: rho1 >= log2 alpha^2 beta / (2 log(1/beta))",
            ));
        }
        out.extend(beckner_predictions(c, "Beckner from modified log-Sobolev: alpha_p >= K_p rho0", None));
    }
    out
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Exact Dobrushin parameters by enumeration; cost grows like
/// 2^sites · sites · |product space|.
pub fn dobrushin_parameters(spec: &ProductSpec) -> Result<DobrushinParams> {
    let table = spec.table()?;
    if table.len() > DOBRUSHIN_LIMIT || spec.sites() > 16 {
        return Err(Error::TooLarge { states: table.len(), limit: DOBRUSHIN_LIMIT });
    }
    let n = spec.sites();
    let k = &spec.alphabet_sizes;
    let strides = spec.strides();
    let conditional = |full: usize, i: usize, x_i: usize| -> Option<Vec<f64>> {
        let base = full - x_i * strides[i];
        let w: Vec<f64> = (0..k[i]).map(|v| table[base + v * strides[i]]).collect();
        let z: f64 = w.iter().sum();
        (z > 0.0).then(|| w.iter().map(|v| v / z).collect())
    };
    let mut a = vec![vec![0.0; n]; n];
    for full in 0..table.len() {
        let x = spec.decode(full);
        for i in 0..n {
            if x[i] != 0 {
                continue;
            }
            let Some(cx) = conditional(full, i, 0) else { continue };
            for j in 0..n {
                if j == i {
                    continue;
                }
                for b in x[j] + 1..k[j] {
                    let other = full + (b - x[j]) * strides[j];
                    if let Some(cy) = conditional(other, i, 0) {
                        let tv = total_variation(&cx, &cy);
                        if tv > a[i][j] {
                            a[i][j] = tv;
                        }
                    }
                }
            }
        }
    }
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let operator_norm = if n == 0 { 0.0 } else { m.singular_values().iter().cloned().fold(0.0, f64::max) };

    // β: min over J ⊊ I, i ∉ J, w ∈ supp of P(X_i = w_i | X_J = w_J).
    let support: Vec<usize> = (0..table.len()).filter(|&s| table[s] > 0.0).collect();
    let decoded: Vec<Vec<usize>> = support.iter().map(|&s| spec.decode(s)).collect();
    let mut beta = f64::INFINITY;
    let mut code_j = vec![0usize; table.len()];
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize == n {
            continue;
        }
        let sites_j: Vec<usize> = (0..n).filter(|&s| mask >> s & 1 == 1).collect();
        let mut size_j = 1usize;
        for &s in &sites_j {
            size_j *= k[s];
        }
        let mut marg_j = vec![0.0; size_j];
        for full in 0..table.len() {
            let x = spec.decode(full);
            let c = sites_j.iter().fold(0usize, |acc, &s| acc * k[s] + x[s]);
            code_j[full] = c;
            marg_j[c] += table[full];
        }
        for i in (0..n).filter(|&s| mask >> s & 1 == 0) {
            let mut marg_ji = vec![0.0; size_j * k[i]];
            for full in 0..table.len() {
                let xi = (full / strides[i]) % k[i];
                marg_ji[code_j[full] * k[i] + xi] += table[full];
            }
            for (w, &full) in decoded.iter().zip(&support) {
                let c = code_j[full];
                let p = marg_ji[c * k[i] + w[i]] / marg_j[c];
                if p < beta {
                    beta = p;
                }
            }
        }
    }
    if !beta.is_finite() {
        beta = 1.0;
    }
    Ok(DobrushinParams { matrix: a, operator_norm, alpha: 1.0 - operator_norm, beta })
}

/// Ising model μ(ε) ∝ exp(½ Σ J_ij ε_i ε_j − Σ h_i ε_i) on {−1, +1}^n under
/// Glauber dynamics. Alphabet index 0 is spin −1 and index 1 is spin +1.
pub fn build_ising(coupling: &[Vec<f64>], field: &[f64]) -> Result<ModelBundle> {
    let n = field.len();
    if n == 0 || n > 20 {
        return Err(Error::InvalidArgument(format!("Ising needs 1..=20 sites, got {n}")));
    }
    if coupling.len() != n || coupling.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: coupling.len() });
    }
    for i in 0..n {
        if coupling[i][i] != 0.0 {
            return Err(Error::InvalidArgument("coupling diagonal must vanish".into()));
        }
        for j in 0..n {
            if (coupling[i][j] - coupling[j][i]).abs() > 1e-12 || !coupling[i][j].is_finite() {
                return Err(Error::InvalidArgument("coupling must be finite and symmetric".into()));
            }
        }
    }
    let free = coupling.iter().all(|r| r.iter().all(|&v| v == 0.0));
    let spec = if free {
        ProductSpec::factorized(
            field
                .iter()
                .map(|&h| {
                    let (down, up) = ((h).exp(), (-h).exp());
                    vec![down / (down + up), up / (down + up)]
                })
                .collect(),
        )
    } else {
        let total = 1usize << n;
        let spin = |idx: usize, i: usize| if (idx >> (n - 1 - i)) & 1 == 1 { 1.0 } else { -1.0 };
        let logw: Vec<f64> = (0..total)
            .map(|idx| {
                let mut e = 0.0;
                for i in 0..n {
                    let si = spin(idx, i);
                    for j in 0..n {
                        e += 0.5 * coupling[i][j] * si * spin(idx, j);
                    }
                    e -= field[i] * si;
                }
                e
            })
            .collect();
        let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ProductSpec::joint(vec![2; n], logw.iter().map(|l| (l - top).exp()).collect())
    };
    let mut bundle = build_glauber(&spec)?;
    bundle.name = "ising".into();
    for c in bundle.coordinates.iter_mut() {
        for v in c.iter_mut() {
            *v = 2 * *v - 1;
        }
    }
    let row_sum = coupling.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let hmax = field.iter().map(|h| h.abs()).fold(0.0, f64::max);
    bundle.predicted.push(Prediction::lower(
        "dobrushin_alpha",
        1.0 - row_sum,
        "Ising: Dobrushin alpha >= 1 - max_i sum_j |J_ij|",
    ));
    bundle
        .predicted
        .push(Prediction::lower("dobrushin_beta", (-hmax).exp(), "Ising: beta >= c exp(-||h||_inf)").unspecified());
    bundle.metadata = serde_json::json!({"sites": n, "coupling": coupling, "field": field});
    Ok(bundle)
}
