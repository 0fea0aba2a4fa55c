use crate::dataio::{Column, Dataset};
use crate::entities::EntitySet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// Closed interval `lo <= x <= hi` on a numeric attribute.
    Interval { lo: f64, hi: f64 },
    /// Membership in a set of categorical level codes (sorted, deduplicated).
    Levels(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Literal {
    pub attribute: usize,
    pub predicate: Predicate,
}

impl Literal {
    pub fn interval(attribute: usize, lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Literal {
            attribute,
            predicate: Predicate::Interval { lo, hi },
        }
    }

    pub fn levels(attribute: usize, mut codes: Vec<u32>) -> Self {
        codes.sort_unstable();
        codes.dedup();
        Literal {
            attribute,
            predicate: Predicate::Levels(codes),
        }
    }

    /// Whether row `row` of `column` satisfies the literal; missing values never do.
    pub fn holds(&self, column: &Column, row: usize) -> bool {
        match (&self.predicate, column) {
            (Predicate::Interval { lo, hi }, Column::Numeric(values)) => {
                values[row].is_some_and(|x| *lo <= x && x <= *hi)
            }
            (Predicate::Levels(codes), Column::Categorical { codes: col, .. }) => {
                col[row].is_some_and(|c| codes.binary_search(&c).is_ok())
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Lit(Literal),
    And(Vec<Node>),
    Or(Vec<Node>),
    Not(Box<Node>),
}

impl Node {
    /// Flattens nested same-operator nodes, collapses single-child And/Or and
    /// removes double negation.
    pub fn normalized(self) -> Node {
        match self {
            Node::Lit(l) => Node::Lit(l),
            Node::Not(inner) => match inner.normalized() {
                Node::Not(x) => *x,
                other => Node::Not(Box::new(other)),
            },
            Node::And(children) => flatten(children, true),
            Node::Or(children) => flatten(children, false),
        }
    }

    fn for_each_literal<'a>(&'a self, f: &mut impl FnMut(&'a Literal)) {
        match self {
            Node::Lit(l) => f(l),
            Node::And(c) | Node::Or(c) => c.iter().for_each(|n| n.for_each_literal(f)),
            Node::Not(n) => n.for_each_literal(f),
        }
    }

    fn support(&self, view: usize, dataset: &Dataset) -> EntitySet {
        match self {
            Node::Lit(l) => {
                let column = &dataset.views[view].attributes[l.attribute].column;
                let n = dataset.n_entities();
                EntitySet::from_indices(n, (0..n).filter(|&r| l.holds(column, r)))
            }
            Node::And(children) => {
                let mut it = children.iter();
                let mut acc = it.next().expect("non-empty And").support(view, dataset);
                for c in it {
                    acc.intersect_with(&c.support(view, dataset));
                }
                acc
            }
            Node::Or(children) => {
                let mut it = children.iter();
                let mut acc = it.next().expect("non-empty Or").support(view, dataset);
                for c in it {
                    acc.union_with(&c.support(view, dataset));
                }
                acc
            }
            Node::Not(inner) => inner.support(view, dataset).complement(),
        }
    }
}

fn flatten(children: Vec<Node>, and: bool) -> Node {
    let mut out = Vec::with_capacity(children.len());
    for c in children {
        match (c.normalized(), and) {
            (Node::And(inner), true) | (Node::Or(inner), false) => out.extend(inner),
            (other, _) => out.push(other),
        }
    }
    match out.len() {
        1 => out.pop().unwrap(),
        _ if and => Node::And(out),
        _ => Node::Or(out),
    }
}

/// A logical formula over the attributes of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub view: usize,
    pub root: Node,
}

impl Query {
    pub fn new(view: usize, root: Node) -> Self {
        Query {
            view,
            root: root.normalized(),
        }
    }

    pub fn literal(view: usize, lit: Literal) -> Self {
        Query {
            view,
            root: Node::Lit(lit),
        }
    }

    /// Conjunction of `literals`; panics on an empty list.
    pub fn conjunction(view: usize, literals: Vec<Literal>) -> Self {
        assert!(!literals.is_empty(), "empty conjunction");
        Query::new(view, Node::And(literals.into_iter().map(Node::Lit).collect()))
    }

    pub fn negated(&self) -> Query {
        Query::new(self.view, Node::Not(Box::new(self.root.clone())))
    }

    pub fn and(&self, other: &Query) -> Query {
        debug_assert_eq!(self.view, other.view);
        Query::new(self.view, Node::And(vec![self.root.clone(), other.root.clone()]))
    }

    pub fn or(&self, other: &Query) -> Query {
        debug_assert_eq!(self.view, other.view);
        Query::new(self.view, Node::Or(vec![self.root.clone(), other.root.clone()]))
    }

    pub fn literals(&self) -> Vec<&Literal> {
        let mut out = Vec::new();
        self.root.for_each_literal(&mut |l| out.push(l));
        out
    }

    /// Number of attribute occurrences (multiset size).
    pub fn literal_count(&self) -> usize {
        let mut n = 0;
        self.root.for_each_literal(&mut |_| n += 1);
        n
    }

    pub fn is_conjunction(&self) -> bool {
        match &self.root {
            Node::Lit(_) => true,
            Node::And(c) => c.iter().all(|n| matches!(n, Node::Lit(_))),
            _ => false,
        }
    }

    /// Top-level conjuncts; a non-And query is its own single conjunct.
    pub fn conjuncts(&self) -> &[Node] {
        match &self.root {
            Node::And(c) => c,
            other => std::slice::from_ref(other),
        }
    }

    /// The query with top-level conjunct `idx` removed; `None` if it is the only one.
    pub fn without_conjunct(&self, idx: usize) -> Option<Query> {
        let parts = self.conjuncts();
        if parts.len() < 2 {
            return None;
        }
        let rest: Vec<Node> = parts
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, n)| n.clone())
            .collect();
        Some(Query::new(self.view, Node::And(rest)))
    }

    /// Checks attribute indices and predicate/column kinds against `dataset`.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        let view = dataset.views.get(self.view).ok_or_else(|| Error::Query {
            query: format!("{self:?}"),
            message: format!("view index {} out of range", self.view),
        })?;
        for lit in self.literals() {
            let attr = view.attributes.get(lit.attribute).ok_or_else(|| Error::Query {
                query: format!("{self:?}"),
                message: format!(
                    "attribute index {} out of range for view `{}`",
                    lit.attribute, view.name
                ),
            })?;
            let ok = matches!(
                (&lit.predicate, &attr.column),
                (Predicate::Interval { .. }, Column::Numeric(_))
                    | (Predicate::Levels(_), Column::Categorical { .. })
            );
            if !ok {
                return Err(Error::Query {
                    query: format!("{self:?}"),
                    message: format!("predicate does not match the kind of `{}`", attr.name),
                });
            }
        }
        Ok(())
    }

    /// Entities satisfying the query.
    pub fn support(&self, dataset: &Dataset) -> EntitySet {
        self.root.support(self.view, dataset)
    }

    pub fn try_support(&self, dataset: &Dataset) -> Result<EntitySet> {
        self.validate(dataset)?;
        Ok(self.support(dataset))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{Attribute, View};

    fn ds() -> Dataset {
        let x = Attribute::numeric("x", vec![Some(0.0), Some(1.0), None, Some(3.0), Some(4.0)]);
        let y = Attribute::numeric("y", (0..5).map(|i| Some(i as f64)).collect());
        let c = Attribute::categorical("c", &[Some("a"), Some("b"), Some("a"), None, Some("c")]);
        let v0 = View::new("A", 5, vec![x, y, c]).unwrap();
        let v1 = View::new("B", 5, vec![Attribute::numeric("z", vec![Some(1.0); 5])]).unwrap();
        Dataset::new((0..5).map(|i| format!("e{i}")).collect(), vec![v0, v1]).unwrap()
    }

    fn ids(s: &EntitySet) -> Vec<usize> {
        s.iter().collect()
    }

    #[test]
    fn interval_literal_support() {
        let d = ds();
        let q = Query::literal(0, Literal::interval(1, 1.0, 3.0));
        assert_eq!(ids(&q.support(&d)), vec![1, 2, 3]);
    }

    #[test]
    fn missing_fails_literal() {
        let d = ds();
        let q = Query::literal(0, Literal::interval(0, -10.0, 10.0));
        assert_eq!(ids(&q.support(&d)), vec![0, 1, 3, 4]);
        let c = Query::literal(0, Literal::levels(2, vec![0, 1, 2]));
        assert_eq!(ids(&c.support(&d)), vec![0, 1, 2, 4]);
    }

    #[test]
    fn boolean_algebra() {
        let d = ds();
        let a = Query::literal(0, Literal::interval(1, 0.0, 1.0));
        let b = Query::literal(0, Literal::interval(1, 1.0, 2.0));
        assert_eq!(ids(&a.and(&b).support(&d)), vec![1]);
        assert_eq!(ids(&a.or(&b).support(&d)), vec![0, 1, 2]);
        assert_eq!(ids(&a.negated().support(&d)), vec![2, 3, 4]);
        let demorgan = a.and(&b).negated().support(&d);
        assert_eq!(demorgan, a.support(&d).intersection(&b.support(&d)).complement());
    }

    #[test]
    fn normalization() {
        let a = Node::Lit(Literal::interval(0, 0.0, 1.0));
        let b = Node::Lit(Literal::interval(1, 0.0, 1.0));
        let nested = Node::And(vec![Node::And(vec![a.clone(), b.clone()]), a.clone()]);
        assert_eq!(
            nested.normalized(),
            Node::And(vec![a.clone(), b.clone(), a.clone()])
        );
        let dbl = Node::Not(Box::new(Node::Not(Box::new(a.clone()))));
        assert_eq!(dbl.normalized(), a);
        assert_eq!(Node::And(vec![b.clone()]).normalized(), b);
    }

    #[test]
    fn out_of_range_attribute_is_an_error() {
        let d = ds();
        let q = Query::literal(0, Literal::interval(9, 0.0, 1.0));
        assert!(matches!(q.try_support(&d), Err(Error::Query { .. })));
    }

    #[test]
    fn conjunct_removal() {
        let q = Query::conjunction(
            0,
            vec![Literal::interval(0, 0.0, 1.0), Literal::interval(1, 0.0, 1.0)],
        );
        let r = q.without_conjunct(1).unwrap();
        assert_eq!(r, Query::literal(0, Literal::interval(0, 0.0, 1.0)));
        assert!(r.without_conjunct(0).is_none());
    }
}
