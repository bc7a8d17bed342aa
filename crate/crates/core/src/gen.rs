//! Seeded random generation of values, substitutions and well-typed queries.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::annot::{AValue, Annotation, Color, ColorSubst, Raw};
use crate::ast::{Expr, Type};
use crate::eval::Env;
use crate::typecheck::TypeCtx;
use crate::value::{Bag, Value};

/// The generator for trial `trial` of a run seeded with `seed`. Each trial
/// gets its own stream, so trials can be replayed one at a time.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// A random value of type `ty`. Integers come from `domain`, bags have at
/// most `size_bound` elements.
pub fn random_value<R: Rng>(rng: &mut R, ty: &Type, domain: &[i64], size_bound: usize) -> Value {
    match ty {
        Type::Int => Value::Int(*domain.choose(rng).unwrap_or(&0)),
        Type::Bool => Value::Bool(rng.gen()),
        Type::Record(fs) => Value::Record(
            fs.iter()
                .map(|(n, t)| (n.clone(), random_value(rng, t, domain, size_bound)))
                .collect(),
        ),
        Type::Bag(t) => {
            let n = rng.gen_range(0..=size_bound);
            Value::Bag(
                (0..n)
                    .map(|_| random_value(rng, t, domain, size_bound))
                    .collect::<Bag>(),
            )
        }
    }
}

/// A random environment matching `ctx`.
pub fn random_env<R: Rng>(rng: &mut R, ctx: &TypeCtx, domain: &[i64], size_bound: usize) -> Env {
    ctx.iter()
        .map(|(x, t)| (x.to_owned(), random_value(rng, t, domain, size_bound)))
        .collect()
}

/// Annotates every node of `v` with a random subset (at most two colors)
/// of `palette`.
pub fn random_annotation<R: Rng>(rng: &mut R, v: &Value, palette: &[Color]) -> AValue {
    let ann: Annotation = (0..rng.gen_range(0..=2))
        .filter_map(|_| palette.choose(rng).cloned())
        .collect();
    match v {
        Value::Int(i) => AValue::int(*i, ann),
        Value::Bool(b) => AValue::boolean(*b, ann),
        Value::Record(fs) => AValue::record(
            fs.iter()
                .map(|(n, fv)| (n.clone(), random_annotation(rng, fv, palette)))
                .collect(),
            ann,
        ),
        Value::Bag(b) => AValue::bag(
            b.iter().map(|ev| random_annotation(rng, ev, palette)).collect(),
            ann,
        ),
    }
}

/// A random substitution over `colors`: about half of them are sent to a
/// random set of at most two colors drawn from `colors` and a few fresh
/// ones; the rest stay fixed.
pub fn random_subst<R: Rng>(rng: &mut R, colors: &Annotation) -> ColorSubst {
    let mut pool: Vec<Color> = colors.iter().cloned().collect();
    pool.extend((0..3).map(|i| Color::new(format!("fresh{i}"))));
    let mut alpha = ColorSubst::identity();
    for c in colors {
        if rng.gen_bool(0.5) {
            let image = (0..rng.gen_range(0..=2))
                .filter_map(|_| pool.choose(rng).cloned())
                .collect();
            alpha.set(c.clone(), image);
        }
    }
    alpha
}

/// Replaces the value at the root with a random one of type `ty` whose top
/// annotation is `top` and whose inner annotations are empty. Scalars are
/// drawn from `domain` plus the value in `original`, booleans flip or are
/// drawn at random.
pub fn random_replacement<R: Rng>(
    rng: &mut R,
    ty: &Type,
    original: Option<&AValue>,
    top: Annotation,
    domain: &[i64],
    size_bound: usize,
) -> AValue {
    let none = Annotation::new;
    match ty {
        Type::Int => {
            let mut choices = domain.to_vec();
            if let Some(Raw::Int(i)) = original.map(|v| &v.raw) {
                choices.push(*i);
            }
            AValue::int(*choices.choose(rng).unwrap_or(&0), top)
        }
        Type::Bool => match original.map(|v| &v.raw) {
            Some(Raw::Bool(b)) if rng.gen_bool(0.5) => AValue::boolean(!b, top),
            _ => AValue::boolean(rng.gen(), top),
        },
        Type::Record(fs) => AValue::record(
            fs.iter()
                .map(|(n, t)| {
                    let orig = original.and_then(|v| v.field(n));
                    (
                        n.clone(),
                        random_replacement(rng, t, orig, none(), domain, size_bound),
                    )
                })
                .collect(),
            top,
        ),
        Type::Bag(t) => {
            let n = rng.gen_range(0..=size_bound);
            let elems = (0..n)
                .map(|_| random_replacement(rng, t, None, none(), domain, size_bound))
                .collect();
            AValue::bag(elems, top)
        }
    }
}

/// Generates random well-typed queries over a context.
///
/// Expressions are built type-directed: the generator is asked for an
/// expression of a given type and picks a form that produces it. Every
/// empty collection carries its element type, so the output needs no
/// further elaboration.
pub struct QueryGen<'r, R> {
    rng: &'r mut R,
    scope: Vec<(String, Type)>,
    fresh: usize,
}

impl<'r, R: Rng> QueryGen<'r, R> {
    pub fn new(rng: &'r mut R, ctx: &TypeCtx) -> Self {
        QueryGen {
            rng,
            scope: ctx.iter().map(|(x, t)| (x.to_owned(), t.clone())).collect(),
            fresh: 0,
        }
    }

    /// A query of a randomly chosen result type.
    pub fn query(&mut self, depth: usize) -> Expr {
        let mut targets = vec![Type::Int, Type::Bool, Type::bag(Type::Int)];
        targets.extend(self.scope.iter().map(|(_, t)| t.clone()));
        let ty = targets.choose(self.rng).cloned().unwrap_or(Type::Int);
        self.expr(&ty, depth)
    }

    pub fn expr(&mut self, ty: &Type, depth: usize) -> Expr {
        if depth == 0 {
            return self.leaf(ty);
        }
        let d = depth - 1;
        match ty {
            Type::Int => match self.rng.gen_range(0..6) {
                0 => self.leaf(ty),
                1 => Expr::add(self.expr(ty, d), self.expr(ty, d)),
                2 => Expr::sum(self.expr(&Type::bag(Type::Int), d)),
                3 => self.conditional(ty, d),
                4 => {
                    let (x, src) = self.source(d);
                    self.scope.pop();
                    Expr::sum(Expr::comp(Expr::Int(1), &x, src))
                }
                _ => self.comprehension_sum(d),
            },
            Type::Bool => match self.rng.gen_range(0..5) {
                0 => self.leaf(ty),
                1 => Expr::not(self.expr(ty, d)),
                2 => Expr::and(self.expr(ty, d), self.expr(ty, d)),
                3 => {
                    let t = self.comparable_type();
                    Expr::eq(self.expr(&t, d), self.expr(&t, d))
                }
                _ => self.conditional(ty, d),
            },
            Type::Record(fs) => {
                if self.rng.gen_bool(0.3) {
                    return self.leaf(ty);
                }
                let fields = fs.iter().map(|(n, t)| (n.clone(), self.expr(t, d))).collect();
                Expr::Record(fields)
            }
            Type::Bag(et) => match self.rng.gen_range(0..8) {
                0 => self.leaf(ty),
                1 => Expr::singleton(self.expr(et, d)),
                2 => Expr::union(self.expr(ty, d), self.expr(ty, d)),
                3 => Expr::diff(self.expr(ty, d), self.expr(ty, d)),
                4 => self.conditional(ty, d),
                5 => Expr::flatten(self.expr(&Type::bag(ty.clone()), d)),
                _ => {
                    let (x, src) = self.source(d);
                    let body = if self.rng.gen_bool(0.5) {
                        self.expr(et, d)
                    } else {
                        let cond = self.expr(&Type::Bool, d);
                        let elem = self.expr(et, d);
                        self.scope.pop();
                        let filtered = Expr::if_then_else(
                            cond,
                            Expr::singleton(elem),
                            Expr::Empty(Some((**et).clone())),
                        );
                        return Expr::flatten(Expr::comp(filtered, &x, src));
                    };
                    self.scope.pop();
                    Expr::comp(body, &x, src)
                }
            },
        }
    }

    fn conditional(&mut self, ty: &Type, d: usize) -> Expr {
        Expr::if_then_else(self.expr(&Type::Bool, d), self.expr(ty, d), self.expr(ty, d))
    }

    // `sum({ body | x <- src })` with an integer body.
    fn comprehension_sum(&mut self, d: usize) -> Expr {
        let (x, src) = self.source(d);
        let body = self.expr(&Type::Int, d);
        self.scope.pop();
        Expr::sum(Expr::comp(body, &x, src))
    }

    /// Picks a comprehension source and pushes its fresh binder on the
    /// scope; the caller pops it after building the body.
    fn source(&mut self, d: usize) -> (String, Expr) {
        let bags: Vec<(String, Type)> = self
            .scope
            .iter()
            .filter(|(_, t)| matches!(t, Type::Bag(_)))
            .cloned()
            .collect();
        let (src, elem) = match bags.choose(self.rng) {
            Some((v, Type::Bag(et))) if self.rng.gen_bool(0.7) => (Expr::var(v), (**et).clone()),
            _ => (self.expr(&Type::bag(Type::Int), d), Type::Int),
        };
        let x = format!("v{}", self.fresh);
        self.fresh += 1;
        self.scope.push((x.clone(), elem));
        (x, src)
    }

    fn comparable_type(&mut self) -> Type {
        let mut options = vec![Type::Int, Type::Int, Type::Bool, Type::bag(Type::Int)];
        options.extend(
            self.scope
                .iter()
                .filter(|(_, t)| matches!(t, Type::Record(_)))
                .map(|(_, t)| t.clone()),
        );
        options.choose(self.rng).cloned().unwrap_or(Type::Int)
    }

    /// Variables and projections of the requested type, or a constant.
    fn leaf(&mut self, ty: &Type) -> Expr {
        let mut found = Vec::new();
        for (x, t) in &self.scope {
            if t == ty {
                found.push(Expr::var(x));
            }
            if let Type::Record(fs) = t {
                for (n, ft) in fs {
                    if ft == ty {
                        found.push(Expr::proj(Expr::var(x), n));
                    }
                }
            }
        }
        if !found.is_empty() && self.rng.gen_bool(0.75) {
            return found.swap_remove(self.rng.gen_range(0..found.len()));
        }
        match ty {
            Type::Int => Expr::Int(self.rng.gen_range(-1..=2)),
            Type::Bool => Expr::Bool(self.rng.gen()),
            Type::Record(fs) => Expr::Record(fs.iter().map(|(n, t)| (n.clone(), self.leaf(t))).collect()),
            Type::Bag(et) => {
                if self.rng.gen_bool(0.5) {
                    Expr::Empty(Some((**et).clone()))
                } else {
                    Expr::singleton(self.leaf(et))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_type;
    use crate::typecheck::check;

    fn ctx() -> TypeCtx {
        [
            ("R".to_owned(), parse_type("{(A: int, B: int)}").unwrap()),
            ("S".to_owned(), parse_type("{(C: int, D: {int})}").unwrap()),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn generated_queries_are_well_typed() {
        let ctx = ctx();
        for seed in 0..200 {
            let mut rng = trial_rng(seed, 0);
            let e = QueryGen::new(&mut rng, &ctx).query(4);
            let (elaborated, _) = check(&ctx, &e).unwrap_or_else(|err| panic!("{err}: {e:?}"));
            assert_eq!(elaborated, e);
        }
    }

    #[test]
    fn random_values_inhabit_their_type() {
        let ctx = ctx();
        let mut rng = trial_rng(1, 2);
        for _ in 0..50 {
            let env = random_env(&mut rng, &ctx, &[0, 1], 3);
            for (x, t) in ctx.iter() {
                assert!(env[x].has_type(t));
            }
        }
    }

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(7, 3).gen();
        assert_eq!(a, trial_rng(7, 3).gen::<u64>());
        assert_ne!(a, trial_rng(7, 4).gen::<u64>());
    }

    #[test]
    fn replacements_carry_only_the_top_color() {
        let mut rng = trial_rng(0, 0);
        let ty = parse_type("{(A: int, B: {bool})}").unwrap();
        let top = Annotation::from([Color::new("c")]);
        for _ in 0..20 {
            let v = random_replacement(&mut rng, &ty, None, top.clone(), &[0, 1], 2);
            assert!(v.has_shape(&ty));
            assert_eq!(v.colors(), top);
        }
    }
}
