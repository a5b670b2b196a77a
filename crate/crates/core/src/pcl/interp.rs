use std::collections::BTreeMap;

use super::{ErrorKind, Expr, Location, PclError, PclProgram};
use crate::powl::{
    make_activity, make_loop, make_partial_order, make_silent, make_xor, PowlError, PowlNode,
};

/// Evaluates a checked program with the model constructors only.
///
/// The interpreter touches nothing outside its arguments: no files, network,
/// environment or clock. Bindings live in an ordered map so evaluation is
/// fully deterministic.
pub fn interpret(program: &PclProgram) -> Result<PowlNode, PclError> {
    let mut env: BTreeMap<&str, PowlNode> = BTreeMap::new();
    for stmt in &program.statements {
        let node = eval(&stmt.expr, &mut env)?;
        env.insert(&stmt.target, node);
    }
    env.remove(program.final_ident.as_str()).ok_or_else(|| {
        PclError::new(
            ErrorKind::UndefinedIdent,
            program.final_loc,
            format!("final(...) names `{}`, which is not available", program.final_ident),
        )
    })
}

fn eval(expr: &Expr, env: &mut BTreeMap<&str, PowlNode>) -> Result<PowlNode, PclError> {
    match expr {
        Expr::Ref { name, loc } => env.remove(name.as_str()).ok_or_else(|| {
            PclError::new(
                ErrorKind::UndefinedIdent,
                *loc,
                format!("identifier `{name}` is not available (undefined or already used)"),
            )
        }),
        Expr::Activity { label, loc } => make_activity(label).map_err(|e| lift(e, *loc, &[])),
        Expr::Silent { .. } => Ok(make_silent()),
        Expr::Xor { children, loc } => {
            let children = children
                .iter()
                .map(|c| eval(c, env))
                .collect::<Result<Vec<_>, _>>()?;
            make_xor(children).map_err(|e| lift(e, *loc, &[]))
        }
        Expr::Loop { body, redo, loc } => {
            let body = eval(body, env)?;
            let redo = eval(redo, env)?;
            make_loop(body, redo).map_err(|e| lift(e, *loc, &[]))
        }
        Expr::PartialOrder {
            children,
            edges,
            loc,
        } => {
            let children = children
                .iter()
                .map(|c| eval(c, env))
                .collect::<Result<Vec<_>, _>>()?;
            let order: Vec<_> = edges.iter().map(|e| (e.from, e.to)).collect();
            let edge_locs: Vec<_> = edges.iter().map(|e| ((e.from, e.to), e.loc)).collect();
            make_partial_order(children, order).map_err(|e| lift(e, *loc, &edge_locs))
        }
    }
}

/// Wraps a constructor error with the source location that caused it.
fn lift(err: PowlError, call: Location, edges: &[((usize, usize), Location)]) -> PclError {
    let edge_loc = |from: usize, to: usize| {
        edges
            .iter()
            .find(|(e, _)| *e == (from, to))
            .map_or(call, |(_, l)| *l)
    };
    match err {
        PowlError::InvalidLabel { label, reason } => PclError::new(
            ErrorKind::InvalidLabel,
            call,
            format!("activity label {label:?} is invalid: {reason}"),
        ),
        PowlError::Arity { operator, min, got } => PclError::new(
            ErrorKind::Arity,
            call,
            format!("{operator} needs at least {min} submodels, got {got}"),
        ),
        PowlError::BadEdge { from, to, reason } => PclError::new(
            ErrorKind::BadEdge,
            edge_loc(from, to),
            format!(
                "order edge ({from}, {to}) is invalid: {reason}; edges use 0-based positions in \
                 the child list"
            ),
        ),
        PowlError::CyclicOrder { from, to } => PclError::new(
            ErrorKind::CyclicOrder,
            edge_loc(from, to),
            format!(
                "order edge ({from}, {to}) is part of a cycle; a partial order must be acyclic, \
                 so remove or reverse one of the edges in the cycle"
            ),
        ),
        PowlError::TooLarge { nodes } => PclError::new(
            ErrorKind::LimitExceeded,
            call,
            format!("the model would have {nodes} nodes; the limit is 500"),
        ),
    }
}
