use nalgebra::{DMatrix, DVector};

use super::curvature::CurvatureBundle;
use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Bindings, Compiled, Expr};

/// Vector field in coordinate components.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(components: Vec<Expr>) -> VectorField {
        VectorField { components }
    }

    /// Parse one component string per coordinate.
    pub fn parse(chart: &Chart, components: &[&str]) -> Result<VectorField> {
        if components.len() != chart.dim() {
            return Err(Error::Dimension {
                expected: chart.dim(),
                got: components.len(),
            });
        }
        let c = components
            .iter()
            .map(|s| parse_expr(s, chart).map(|e| e.simplify()))
            .collect::<Result<_>>()?;
        Ok(VectorField::new(c))
    }

    /// The coordinate field `d/dx_i`.
    pub fn coordinate(n: usize, i: usize) -> VectorField {
        VectorField::new(
            (0..n)
                .map(|k| if k == i { Expr::one() } else { Expr::zero() })
                .collect(),
        )
    }

    pub fn constant(values: &[i64]) -> VectorField {
        VectorField::new(values.iter().map(|&v| Expr::constant(v)).collect())
    }

    pub fn zero(n: usize) -> VectorField {
        VectorField::new(vec![Expr::zero(); n])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn eval(&self, p: &[f64], bindings: &Bindings) -> Result<DVector<f64>> {
        let c = Compiled::new(&self.components, bindings)?;
        Ok(DVector::from_vec(c.eval(p)?))
    }

    /// The derivative `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(
            self.components
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| c * &f.differentiate(i))
                .collect(),
        )
        .simplify()
    }

    /// Lie bracket `[X, Y]^k = X(Y^k) - Y(X^k)`.
    pub fn bracket(&self, other: &VectorField) -> VectorField {
        VectorField::new(
            (0..self.dim())
                .map(|k| {
                    (self.apply(&other.components[k]) - other.apply(&self.components[k])).simplify()
                })
                .collect(),
        )
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField::new(self.components.iter().map(|c| (f * c).simplify()).collect())
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| (a + b).simplify())
                .collect(),
        )
    }
}

/// Span of a list of vector fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    generators: Vec<VectorField>,
}

impl Distribution {
    pub fn new(generators: Vec<VectorField>) -> Distribution {
        Distribution { generators }
    }

    /// `span(d/dx_i : i in indices)`.
    pub fn coordinate(n: usize, indices: &[usize]) -> Distribution {
        Distribution::new(
            indices
                .iter()
                .map(|&i| VectorField::coordinate(n, i))
                .collect(),
        )
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }
}

/// One-form in coordinate components.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    components: Vec<Expr>,
}

impl OneForm {
    pub fn new(components: Vec<Expr>) -> OneForm {
        OneForm { components }
    }

    pub fn parse(chart: &Chart, components: &[&str]) -> Result<OneForm> {
        Ok(OneForm::new(
            VectorField::parse(chart, components)?.components,
        ))
    }

    /// `df`.
    pub fn exact(f: &Expr, n: usize) -> OneForm {
        OneForm::new((0..n).map(|i| f.differentiate(i)).collect())
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Components of `d theta`: `(d theta)_{ij} = d_i theta_j - d_j theta_i`, `i < j`.
    pub fn exterior_derivative(&self) -> Vec<((usize, usize), Expr)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let e = (self.components[j].differentiate(i) - self.components[i].differentiate(j))
                    .simplify();
                out.push(((i, j), e));
            }
        }
        out
    }
}

/// Compiled values and first coordinate derivatives of a list of fields.
pub struct FieldJets {
    len: usize,
    coords: usize,
    count: usize,
    program: Compiled,
}

/// `values[f]` and `derivs[f][m] = d_m` of field `f` at one point.
#[derive(Clone, Debug)]
pub struct FieldJetValues {
    pub values: Vec<DVector<f64>>,
    pub derivs: Vec<Vec<DVector<f64>>>,
}

impl FieldJetValues {
    pub fn matrix(&self) -> DMatrix<f64> {
        if self.values.is_empty() {
            return DMatrix::zeros(0, 0);
        }
        DMatrix::from_columns(&self.values)
    }
}

impl FieldJets {
    pub fn new(fields: &[VectorField], n: usize, bindings: &Bindings) -> Result<FieldJets> {
        let comps: Vec<&[Expr]> = fields.iter().map(|f| f.components()).collect();
        FieldJets::from_components(&comps, n, n, bindings)
    }

    /// Jets of `len`-component fields over `coords` chart coordinates.
    pub fn from_components(
        fields: &[&[Expr]],
        len: usize,
        coords: usize,
        bindings: &Bindings,
    ) -> Result<FieldJets> {
        let mut exprs = Vec::new();
        for f in fields {
            if f.len() != len {
                return Err(Error::Dimension {
                    expected: len,
                    got: f.len(),
                });
            }
            exprs.extend(f.iter().cloned());
            for m in 0..coords {
                exprs.extend(f.iter().map(|c| c.differentiate(m)));
            }
        }
        Ok(FieldJets {
            len,
            coords,
            count: fields.len(),
            program: Compiled::new(&exprs, bindings)?,
        })
    }

    pub fn eval(&self, p: &[f64]) -> Result<FieldJetValues> {
        let (n, c) = (self.len, self.coords);
        let v = self.program.eval(p)?;
        let block = n * (c + 1);
        let mut values = Vec::with_capacity(self.count);
        let mut derivs = Vec::with_capacity(self.count);
        for f in 0..self.count {
            let base = f * block;
            values.push(DVector::from_column_slice(&v[base..base + n]));
            derivs.push(
                (0..c)
                    .map(|m| DVector::from_column_slice(&v[base + n * (m + 1)..base + n * (m + 2)]))
                    .collect(),
            );
        }
        Ok(FieldJetValues { values, derivs })
    }
}

/// Symbolic `nabla_X Y` from the bundle's Christoffel symbols.
pub fn covariant_derivative(
    bundle: &CurvatureBundle,
    x: &VectorField,
    y: &VectorField,
) -> VectorField {
    let n = bundle.n;
    VectorField::new(
        (0..n)
            .map(|k| {
                let mut terms = vec![x.apply(y.component(k))];
                for i in 0..n {
                    for j in 0..n {
                        let c = bundle.christoffel(k, i, j);
                        if c.is_zero() || x.component(i).is_zero() || y.component(j).is_zero() {
                            continue;
                        }
                        terms.push(c * x.component(i) * y.component(j));
                    }
                }
                Expr::sum(terms).simplify()
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_of_coordinate_and_twisted_field() {
        // [d1, x1 d2 + d3] = d2
        let c = Chart::numbered("x", 4);
        let a = VectorField::coordinate(4, 0);
        let b = VectorField::parse(&c, &["0", "x1", "1", "0"]).unwrap();
        let br = a.bracket(&b);
        assert_eq!(br, VectorField::coordinate(4, 1));
    }

    #[test]
    fn exact_forms_are_closed() {
        let c = Chart::numbered("x", 3);
        let f = parse_expr("x1*x2^2 + exp(x3)", &c).unwrap();
        let theta = OneForm::exact(&f, 3);
        assert!(theta.exterior_derivative().iter().all(|(_, e)| e.is_zero()));
    }

    #[test]
    fn jets_layout() {
        let c = Chart::numbered("x", 2);
        let f = VectorField::parse(&c, &["x1*x2", "x2^2"]).unwrap();
        let j = FieldJets::new(&[f], 2, &Bindings::new()).unwrap();
        let v = j.eval(&[2.0, 3.0]).unwrap();
        assert_eq!(v.values[0].as_slice(), &[6.0, 9.0]);
        assert_eq!(v.derivs[0][0].as_slice(), &[3.0, 0.0]);
        assert_eq!(v.derivs[0][1].as_slice(), &[2.0, 6.0]);
    }
}
