//! Abstract syntax of the query language.

use std::fmt;

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggOp {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggOp {
    pub const ALL: [AggOp; 5] = [AggOp::Count, AggOp::Sum, AggOp::Avg, AggOp::Min, AggOp::Max];

    pub fn keyword(self) -> &'static str {
        match self {
            AggOp::Count => "count",
            AggOp::Sum => "sum",
            AggOp::Avg => "avg",
            AggOp::Min => "min",
            AggOp::Max => "max",
        }
    }

    pub fn from_keyword(s: &str) -> Option<AggOp> {
        AggOp::ALL.into_iter().find(|op| op.keyword() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SortDir {
    Asc,
    Desc,
}

impl SortDir {
    pub fn keyword(self) -> &'static str {
        match self {
            SortDir::Asc => "asc",
            SortDir::Desc => "desc",
        }
    }

    /// The comparison that keeps rows ranked before a threshold value.
    pub fn comparison(self) -> CmpOp {
        match self {
            SortDir::Asc => CmpOp::Le,
            SortDir::Desc => CmpOp::Ge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ge,
    Le,
    /// Case-insensitive substring, written `=~`.
    Substr,
    /// `contains ( array , elem )`
    Contains,
    /// `in_array ( elem , array )`
    InArray,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ge,
        CmpOp::Le,
        CmpOp::Substr,
        CmpOp::Contains,
        CmpOp::InArray,
    ];

    pub fn token(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Substr => "=~",
            CmpOp::Contains => "contains",
            CmpOp::InArray => "in_array",
        }
    }

    /// Whether the operator is written in function-call form.
    pub fn is_prefix(self) -> bool {
        matches!(self, CmpOp::Contains | CmpOp::InArray)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn token(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Val(Value),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Distance(Box<Expr>, Box<Expr>),
    /// Aggregate over an array-typed field of the current row.
    AggOnArray(AggOp, String),
}

impl Expr {
    pub fn field(name: impl Into<String>) -> Expr {
        Expr::Val(Value::Field(name.into()))
    }

    pub fn distance(a: Expr, b: Expr) -> Expr {
        Expr::Distance(Box::new(a), Box::new(b))
    }

    /// Name of the column a computation adds when no alias is given.
    pub fn default_name(&self) -> String {
        match self {
            Expr::Distance(..) => "distance".into(),
            Expr::AggOnArray(op, _) => op.keyword().into(),
            Expr::Val(Value::Field(f)) => f.clone(),
            Expr::Val(_) | Expr::Binary(..) => "value".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Filter {
    True,
    False,
    Not(Box<Filter>),
    And(Box<Filter>, Box<Filter>),
    Or(Box<Filter>, Box<Filter>),
    Cmp {
        lhs: Value,
        op: CmpOp,
        rhs: Value,
    },
    /// Holds when some row of `subquery`, merged over the outer row with the
    /// subquery's fields shadowing, satisfies `filter`.
    Exists {
        subquery: Box<Query>,
        filter: Box<Filter>,
    },
}

impl Filter {
    pub fn cmp(lhs: Value, op: CmpOp, rhs: Value) -> Filter {
        Filter::Cmp { lhs, op, rhs }
    }

    pub fn negate(f: Filter) -> Filter {
        Filter::Not(Box::new(f))
    }

    pub fn and(a: Filter, b: Filter) -> Filter {
        Filter::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Filter, b: Filter) -> Filter {
        Filter::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(subquery: Query, filter: Filter) -> Filter {
        Filter::Exists {
            subquery: Box::new(subquery),
            filter: Box::new(filter),
        }
    }

    pub fn visit_values(&self, f: &mut impl FnMut(&Value)) {
        visit_filter_values(self, f);
    }

    pub fn visit_values_mut(&mut self, f: &mut impl FnMut(&mut Value)) {
        visit_filter_values_mut(self, f);
    }

    pub fn map_placeholders(&mut self, f: &mut impl FnMut(u32) -> Value) {
        self.visit_values_mut(&mut |v| v.map_placeholders(f));
    }

    /// Names of the fields this filter reads, outside any `exists` subquery.
    pub fn fields(&self) -> Vec<String> {
        let mut out = Vec::new();
        collect_filter_fields(self, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Table(String),
    Selection {
        inner: Box<Query>,
        filter: Filter,
    },
    Projection {
        fields: Vec<String>,
        inner: Box<Query>,
    },
    Aggregation {
        op: AggOp,
        field: Option<String>,
        inner: Box<Query>,
    },
    Computation {
        expr: Expr,
        alias: Option<String>,
        inner: Box<Query>,
    },
    Sort {
        field: String,
        dir: SortDir,
        inner: Box<Query>,
    },
    Index {
        inner: Box<Query>,
        position: Value,
    },
    Slice {
        inner: Box<Query>,
        from: Value,
        to: Value,
    },
    Join {
        left: Box<Query>,
        right: Box<Query>,
    },
}

impl Query {
    pub fn table(name: impl Into<String>) -> Query {
        Query::Table(name.into())
    }

    pub fn select(self, filter: Filter) -> Query {
        Query::Selection {
            inner: Box::new(self),
            filter,
        }
    }

    pub fn project(self, fields: Vec<String>) -> Query {
        Query::Projection {
            fields,
            inner: Box::new(self),
        }
    }

    pub fn aggregate(self, op: AggOp, field: Option<String>) -> Query {
        Query::Aggregation {
            op,
            field,
            inner: Box::new(self),
        }
    }

    pub fn compute(self, expr: Expr, alias: Option<String>) -> Query {
        Query::Computation {
            expr,
            alias,
            inner: Box::new(self),
        }
    }

    pub fn sort(self, field: impl Into<String>, dir: SortDir) -> Query {
        Query::Sort {
            field: field.into(),
            dir,
            inner: Box::new(self),
        }
    }

    pub fn index(self, position: Value) -> Query {
        Query::Index {
            inner: Box::new(self),
            position,
        }
    }

    pub fn slice(self, from: Value, to: Value) -> Query {
        Query::Slice {
            inner: Box::new(self),
            from,
            to,
        }
    }

    pub fn join(self, right: Query) -> Query {
        Query::Join {
            left: Box::new(self),
            right: Box::new(right),
        }
    }

    /// Every placeholder id in pre-order.
    pub fn placeholders(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.visit_values(&mut |v| v.placeholders(&mut out));
        out
    }

    pub fn visit_values(&self, f: &mut impl FnMut(&Value)) {
        match self {
            Query::Table(_) => {}
            Query::Selection { inner, filter } => {
                inner.visit_values(f);
                visit_filter_values(filter, f);
            }
            Query::Projection { inner, .. } | Query::Aggregation { inner, .. } | Query::Sort { inner, .. } => {
                inner.visit_values(f)
            }
            Query::Computation { expr, inner, .. } => {
                visit_expr_values(expr, f);
                inner.visit_values(f);
            }
            Query::Index { inner, position } => {
                inner.visit_values(f);
                f(position);
            }
            Query::Slice { inner, from, to } => {
                inner.visit_values(f);
                f(from);
                f(to);
            }
            Query::Join { left, right } => {
                left.visit_values(f);
                right.visit_values(f);
            }
        }
    }

    pub fn visit_values_mut(&mut self, f: &mut impl FnMut(&mut Value)) {
        match self {
            Query::Table(_) => {}
            Query::Selection { inner, filter } => {
                inner.visit_values_mut(f);
                visit_filter_values_mut(filter, f);
            }
            Query::Projection { inner, .. } | Query::Aggregation { inner, .. } | Query::Sort { inner, .. } => {
                inner.visit_values_mut(f)
            }
            Query::Computation { expr, inner, .. } => {
                visit_expr_values_mut(expr, f);
                inner.visit_values_mut(f);
            }
            Query::Index { inner, position } => {
                inner.visit_values_mut(f);
                f(position);
            }
            Query::Slice { inner, from, to } => {
                inner.visit_values_mut(f);
                f(from);
                f(to);
            }
            Query::Join { left, right } => {
                left.visit_values_mut(f);
                right.visit_values_mut(f);
            }
        }
    }

    /// Replaces every placeholder by `f(k)`.
    pub fn map_placeholders(&mut self, f: &mut impl FnMut(u32) -> Value) {
        self.visit_values_mut(&mut |v| v.map_placeholders(f));
    }

    pub fn uses_here(&self) -> bool {
        let mut found = false;
        self.visit_values(&mut |v| found |= matches!(v, Value::Here));
        found
    }

    pub fn uses_now(&self) -> bool {
        let mut found = false;
        self.visit_values(&mut |v| found |= matches!(v, Value::Now));
        found
    }

    /// Number of query nodes on the longest root-to-leaf path, counting
    /// subqueries inside `exists` filters.
    pub fn depth(&self) -> usize {
        1 + match self {
            Query::Table(_) => 0,
            Query::Selection { inner, filter } => inner.depth().max(filter_depth(filter)),
            Query::Projection { inner, .. }
            | Query::Aggregation { inner, .. }
            | Query::Computation { inner, .. }
            | Query::Sort { inner, .. }
            | Query::Index { inner, .. }
            | Query::Slice { inner, .. } => inner.depth(),
            Query::Join { left, right } => left.depth().max(right.depth()),
        }
    }
}

fn filter_depth(f: &Filter) -> usize {
    match f {
        Filter::Not(a) => filter_depth(a),
        Filter::And(a, b) | Filter::Or(a, b) => filter_depth(a).max(filter_depth(b)),
        Filter::Exists { subquery, filter } => subquery.depth().max(filter_depth(filter)),
        _ => 0,
    }
}

fn collect_filter_fields(filter: &Filter, out: &mut Vec<String>) {
    match filter {
        Filter::True | Filter::False => {}
        Filter::Not(a) => collect_filter_fields(a, out),
        Filter::And(a, b) | Filter::Or(a, b) => {
            collect_filter_fields(a, out);
            collect_filter_fields(b, out);
        }
        Filter::Cmp { lhs, rhs, .. } => {
            for v in [lhs, rhs] {
                if let Value::Field(name) = v {
                    if !out.contains(name) {
                        out.push(name.clone());
                    }
                }
            }
        }
        Filter::Exists { filter, .. } => collect_filter_fields(filter, out),
    }
}

fn visit_filter_values(filter: &Filter, f: &mut impl FnMut(&Value)) {
    match filter {
        Filter::True | Filter::False => {}
        Filter::Not(a) => visit_filter_values(a, f),
        Filter::And(a, b) | Filter::Or(a, b) => {
            visit_filter_values(a, f);
            visit_filter_values(b, f);
        }
        Filter::Cmp { lhs, rhs, .. } => {
            f(lhs);
            f(rhs);
        }
        Filter::Exists { subquery, filter } => {
            subquery.visit_values(f);
            visit_filter_values(filter, f);
        }
    }
}

fn visit_filter_values_mut(filter: &mut Filter, f: &mut impl FnMut(&mut Value)) {
    match filter {
        Filter::True | Filter::False => {}
        Filter::Not(a) => visit_filter_values_mut(a, f),
        Filter::And(a, b) | Filter::Or(a, b) => {
            visit_filter_values_mut(a, f);
            visit_filter_values_mut(b, f);
        }
        Filter::Cmp { lhs, rhs, .. } => {
            f(lhs);
            f(rhs);
        }
        Filter::Exists { subquery, filter } => {
            subquery.visit_values_mut(f);
            visit_filter_values_mut(filter, f);
        }
    }
}

fn visit_expr_values(expr: &Expr, f: &mut impl FnMut(&Value)) {
    match expr {
        Expr::Val(v) => f(v),
        Expr::Binary(_, a, b) | Expr::Distance(a, b) => {
            visit_expr_values(a, f);
            visit_expr_values(b, f);
        }
        Expr::AggOnArray(..) => {}
    }
}

fn visit_expr_values_mut(expr: &mut Expr, f: &mut impl FnMut(&mut Value)) {
    match expr {
        Expr::Val(v) => f(v),
        Expr::Binary(_, a, b) | Expr::Distance(a, b) => {
            visit_expr_values_mut(a, f);
            visit_expr_values_mut(b, f);
        }
        Expr::AggOnArray(..) => {}
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print(self))
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_filter(self))
    }
}
