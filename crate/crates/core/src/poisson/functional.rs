use serde::{Deserialize, Serialize};

use super::{dist2, PointConfiguration, Window};
use crate::error::{Error, Result};

/// Largest number of ordered tuples [`u_statistic`] will enumerate.
pub const U_STAT_LIMIT: f64 = 1e8;

/// A functional of finite configurations with its add and delete gradients.
/// The defaults recompute F; library functionals override them with local
/// updates. Implementations must be pure.
pub trait PoissonFunctional: Sync {
    fn evaluate(&self, eta: &PointConfiguration) -> f64;

    /// D_x⁺F(η) = F(η + δ_x) − F(η).
    fn add_gradient(&self, eta: &PointConfiguration, x: &[f64]) -> f64 {
        self.evaluate(&eta.with_point(x)) - self.evaluate(eta)
    }

    /// D⁻F(η) at the i-th point: F(η) − F(η − δ_{x_i}).
    fn delete_gradient(&self, eta: &PointConfiguration, i: usize) -> f64 {
        self.evaluate(eta) - self.evaluate(&eta.without(i))
    }

    /// Delete gradients at every point of η.
    fn delete_gradients(&self, eta: &PointConfiguration) -> Vec<f64> {
        (0..eta.len()).map(|i| self.delete_gradient(eta, i)).collect()
    }

    /// True when D_x⁺F ≥ 0 everywhere, so the λ-part of Γ₊(F) vanishes.
    fn is_increasing(&self) -> bool {
        false
    }

    fn label(&self) -> String;
}

/// Built-in functionals, addressed in configs as
/// `{"functional": "gilbert_edges", "radius": 0.1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "snake_case")]
pub enum LibraryFunctional {
    /// η(window).
    Count,
    /// Edges of the Gilbert graph: pairs at distance ≤ radius.
    GilbertEdges { radius: f64 },
    /// Triangles of the Gilbert graph.
    GilbertTriangles { radius: f64 },
    /// 1 if some point lies within `radius` of `center`.
    BallCovering { radius: f64, center: Vec<f64> },
    /// Points with no other point within `radius`. Not monotone.
    IsolatedPoints { radius: f64 },
}

impl LibraryFunctional {
    /// The five functionals used for Mecke validation, sized for `window`.
    pub fn library(window: &Window, radius: f64) -> Vec<LibraryFunctional> {
        vec![
            LibraryFunctional::Count,
            LibraryFunctional::GilbertEdges { radius },
            LibraryFunctional::GilbertTriangles { radius },
            LibraryFunctional::BallCovering { radius: 2.0 * radius, center: window.center() },
            LibraryFunctional::IsolatedPoints { radius },
        ]
    }

    pub fn validate(&self, window: &Window) -> Result<()> {
        let radius = match self {
            LibraryFunctional::Count => return Ok(()),
            LibraryFunctional::BallCovering { radius, center } => {
                if center.len() != window.dimension {
                    return Err(Error::DimensionMismatch { expected: window.dimension, got: center.len() });
                }
                *radius
            }
            LibraryFunctional::GilbertEdges { radius }
            | LibraryFunctional::GilbertTriangles { radius }
            | LibraryFunctional::IsolatedPoints { radius } => *radius,
        };
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        Ok(())
    }

    /// Order m when the functional is a U-statistic Σ^{≠} h with
    /// nonnegative symmetric h.
    pub fn u_stat_order(&self) -> Option<usize> {
        match self {
            LibraryFunctional::Count => Some(1),
            LibraryFunctional::GilbertEdges { .. } => Some(2),
            LibraryFunctional::GilbertTriangles { .. } => Some(3),
            _ => None,
        }
    }

    fn r2(&self) -> f64 {
        match self {
            LibraryFunctional::Count => 0.0,
            LibraryFunctional::GilbertEdges { radius }
            | LibraryFunctional::GilbertTriangles { radius }
            | LibraryFunctional::BallCovering { radius, .. }
            | LibraryFunctional::IsolatedPoints { radius } => radius * radius,
        }
    }
}

/// Indices of points within distance² `r2` of `x`, skipping `skip`.
fn neighbours(eta: &PointConfiguration, x: &[f64], r2: f64, skip: Option<usize>) -> Vec<usize> {
    eta.iter().enumerate().filter(|&(j, p)| Some(j) != skip && dist2(p, x) <= r2).map(|(j, _)| j).collect()
}

fn adjacency(eta: &PointConfiguration, r2: f64) -> Vec<Vec<usize>> {
    let n = eta.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dist2(eta.point(i), eta.point(j)) <= r2 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Adjacent pairs among `nb`.
fn linked_pairs(eta: &PointConfiguration, nb: &[usize], r2: f64) -> usize {
    let mut c = 0;
    for (a, &j) in nb.iter().enumerate() {
        for &k in &nb[a + 1..] {
            if dist2(eta.point(j), eta.point(k)) <= r2 {
                c += 1;
            }
        }
    }
    c
}

impl PoissonFunctional for LibraryFunctional {
    fn evaluate(&self, eta: &PointConfiguration) -> f64 {
        let r2 = self.r2();
        match self {
            LibraryFunctional::Count => eta.len() as f64,
            LibraryFunctional::GilbertEdges { .. } => {
                adjacency(eta, r2).iter().map(Vec::len).sum::<usize>() as f64 / 2.0
            }
            LibraryFunctional::GilbertTriangles { .. } => {
                let adj = adjacency(eta, r2);
                let mut t = 0;
                for (i, nb) in adj.iter().enumerate() {
                    let up: Vec<usize> = nb.iter().copied().filter(|&j| j > i).collect();
                    t += linked_pairs(eta, &up, r2);
                }
                t as f64
            }
            LibraryFunctional::BallCovering { center, .. } => {
                if eta.iter().any(|p| dist2(p, center) <= r2) {
                    1.0
                } else {
                    0.0
                }
            }
            LibraryFunctional::IsolatedPoints { .. } => {
                adjacency(eta, r2).iter().filter(|nb| nb.is_empty()).count() as f64
            }
        }
    }

    fn add_gradient(&self, eta: &PointConfiguration, x: &[f64]) -> f64 {
        let r2 = self.r2();
        match self {
            LibraryFunctional::Count => 1.0,
            LibraryFunctional::GilbertEdges { .. } => neighbours(eta, x, r2, None).len() as f64,
            LibraryFunctional::GilbertTriangles { .. } => linked_pairs(eta, &neighbours(eta, x, r2, None), r2) as f64,
            LibraryFunctional::BallCovering { center, .. } => {
                if dist2(x, center) <= r2 && self.evaluate(eta) == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LibraryFunctional::IsolatedPoints { .. } => {
                let nb = neighbours(eta, x, r2, None);
                let lost = nb.iter().filter(|&&j| neighbours(eta, eta.point(j), r2, Some(j)).is_empty()).count();
                (nb.is_empty() as usize) as f64 - lost as f64
            }
        }
    }

    fn delete_gradient(&self, eta: &PointConfiguration, i: usize) -> f64 {
        let r2 = self.r2();
        let x = eta.point(i);
        match self {
            LibraryFunctional::Count => 1.0,
            LibraryFunctional::GilbertEdges { .. } => neighbours(eta, x, r2, Some(i)).len() as f64,
            LibraryFunctional::GilbertTriangles { .. } => {
                linked_pairs(eta, &neighbours(eta, x, r2, Some(i)), r2) as f64
            }
            LibraryFunctional::BallCovering { center, .. } => {
                let covers = |j: usize| dist2(eta.point(j), center) <= r2;
                if covers(i) && !(0..eta.len()).any(|j| j != i && covers(j)) {
                    1.0
                } else {
                    0.0
                }
            }
            LibraryFunctional::IsolatedPoints { .. } => {
                let nb = neighbours(eta, x, r2, Some(i));
                let freed = nb.iter().filter(|&&j| neighbours(eta, eta.point(j), r2, Some(j)).len() == 1).count();
                (nb.is_empty() as usize) as f64 - freed as f64
            }
        }
    }

    fn delete_gradients(&self, eta: &PointConfiguration) -> Vec<f64> {
        let r2 = self.r2();
        match self {
            LibraryFunctional::Count => vec![1.0; eta.len()],
            LibraryFunctional::GilbertEdges { .. } => adjacency(eta, r2).iter().map(|nb| nb.len() as f64).collect(),
            LibraryFunctional::GilbertTriangles { .. } => {
                adjacency(eta, r2).iter().map(|nb| linked_pairs(eta, nb, r2) as f64).collect()
            }
            LibraryFunctional::IsolatedPoints { .. } => {
                let adj = adjacency(eta, r2);
                adj.iter()
                    .map(|nb| {
                        (nb.is_empty() as usize) as f64 - nb.iter().filter(|&&j| adj[j].len() == 1).count() as f64
                    })
                    .collect()
            }
            LibraryFunctional::BallCovering { .. } => (0..eta.len()).map(|i| self.delete_gradient(eta, i)).collect(),
        }
    }

    fn is_increasing(&self) -> bool {
        !matches!(self, LibraryFunctional::IsolatedPoints { .. })
    }

    fn label(&self) -> String {
        match self {
            LibraryFunctional::Count => "count".into(),
            LibraryFunctional::GilbertEdges { radius } => format!("gilbert_edges(r={radius})"),
            LibraryFunctional::GilbertTriangles { radius } => format!("gilbert_triangles(r={radius})"),
            LibraryFunctional::BallCovering { radius, .. } => format!("ball_covering(r={radius})"),
            LibraryFunctional::IsolatedPoints { radius } => format!("isolated_points(r={radius})"),
        }
    }
}

/// U(η) = Σ^{≠} h(X_{i_1}, …, X_{i_m}) over ordered tuples of distinct
/// indices.
pub fn u_statistic<H>(h: H, m: usize, eta: &PointConfiguration) -> Result<f64>
where
    H: Fn(&[&[f64]]) -> f64,
{
    if m == 0 {
        return Err(Error::InvalidArgument("kernel order must be at least 1".into()));
    }
    let n = eta.len();
    if (n as f64).powi(m as i32) > U_STAT_LIMIT {
        return Err(Error::TooLarge { states: n, limit: (U_STAT_LIMIT.powf(1.0 / m as f64)) as usize });
    }
    fn walk<'a, H: Fn(&[&[f64]]) -> f64>(
        eta: &'a PointConfiguration,
        h: &H,
        m: usize,
        idx: &mut Vec<usize>,
        args: &mut Vec<&'a [f64]>,
        acc: &mut f64,
    ) {
        if idx.len() == m {
            *acc += h(args);
            return;
        }
        for i in 0..eta.len() {
            if idx.contains(&i) {
                continue;
            }
            idx.push(i);
            args.push(eta.point(i));
            walk(eta, h, m, idx, args, acc);
            args.pop();
            idx.pop();
        }
    }
    let mut acc = 0.0;
    walk(eta, &h, m, &mut Vec::with_capacity(m), &mut Vec::with_capacity(m), &mut acc);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{stream_rng, Rng};
    use crate::poisson::{sample_with, Window};

    struct Recompute<'a>(&'a LibraryFunctional);

    impl PoissonFunctional for Recompute<'_> {
        fn evaluate(&self, eta: &PointConfiguration) -> f64 {
            self.0.evaluate(eta)
        }
        fn label(&self) -> String {
            "recompute".into()
        }
    }

    fn configs(n: usize) -> (Window, Vec<PointConfiguration>, Rng) {
        let w = Window::unit_cube(2, 25.0).unwrap();
        let mut rng = stream_rng(21, 0);
        let cs = (0..n).map(|_| sample_with(&w, &mut rng)).collect();
        (w, cs, rng)
    }

    #[test]
    fn local_gradients_match_recomputation() {
        let (w, cs, mut rng) = configs(30);
        for f in LibraryFunctional::library(&w, 0.2) {
            let slow = Recompute(&f);
            for eta in &cs {
                let x = w.uniform_point(&mut rng);
                assert_eq!(f.add_gradient(eta, &x), slow.add_gradient(eta, &x), "{}", f.label());
                let fast = f.delete_gradients(eta);
                for i in 0..eta.len() {
                    assert_eq!(fast[i], slow.delete_gradient(eta, i), "{}", f.label());
                    assert_eq!(f.delete_gradient(eta, i), fast[i]);
                }
            }
        }
    }

    #[test]
    fn add_then_delete_is_consistent() {
        let (w, cs, mut rng) = configs(30);
        for f in LibraryFunctional::library(&w, 0.2) {
            for eta in &cs {
                let x = w.uniform_point(&mut rng);
                let plus = eta.with_point(&x);
                assert_eq!(f.delete_gradient(&plus, eta.len()), f.add_gradient(eta, &x), "{}", f.label());
            }
        }
    }

    #[test]
    fn monotone_flags_hold() {
        let (w, cs, mut rng) = configs(20);
        for f in LibraryFunctional::library(&w, 0.25) {
            if !f.is_increasing() {
                continue;
            }
            for eta in &cs {
                assert!(f.add_gradient(eta, &w.uniform_point(&mut rng)) >= 0.0);
            }
        }
    }

    #[test]
    fn u_statistics_match_library() {
        let (_, cs, _) = configs(10);
        let r2 = 0.2f64 * 0.2;
        let edge = |a: &[f64], b: &[f64]| dist2(a, b) <= r2;
        for eta in &cs {
            let e = u_statistic(|p| 0.5 * edge(p[0], p[1]) as u8 as f64, 2, eta).unwrap();
            assert_eq!(e, LibraryFunctional::GilbertEdges { radius: 0.2 }.evaluate(eta));
            let t =
                u_statistic(|p| (edge(p[0], p[1]) && edge(p[1], p[2]) && edge(p[0], p[2])) as u8 as f64 / 6.0, 3, eta)
                    .unwrap();
            assert!((t - LibraryFunctional::GilbertTriangles { radius: 0.2 }.evaluate(eta)).abs() < 1e-9);
            let c = u_statistic(|_| 1.0, 1, eta).unwrap();
            assert_eq!(c, eta.len() as f64);
            assert_eq!(u_statistic(|_| 0.0, 3, eta).unwrap(), 0.0);
        }
    }

    #[test]
    fn u_statistic_guard() {
        let pts: Vec<Vec<f64>> = (0..500).map(|i| vec![i as f64]).collect();
        let eta = PointConfiguration::from_points(1, &pts).unwrap();
        assert!(matches!(u_statistic(|_| 1.0, 3, &eta), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn config_parsing() {
        let f: LibraryFunctional = serde_json::from_str(r#"{"functional": "gilbert_edges", "radius": 0.1}"#).unwrap();
        assert_eq!(f, LibraryFunctional::GilbertEdges { radius: 0.1 });
        let c: LibraryFunctional = serde_json::from_str(r#"{"functional": "count"}"#).unwrap();
        assert_eq!(c.u_stat_order(), Some(1));
        let w = Window::unit_cube(2, 1.0).unwrap();
        assert!(LibraryFunctional::GilbertEdges { radius: -1.0 }.validate(&w).is_err());
        assert!(LibraryFunctional::BallCovering { radius: 0.1, center: vec![0.5] }.validate(&w).is_err());
    }
}
