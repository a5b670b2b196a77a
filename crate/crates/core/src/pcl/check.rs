use std::collections::BTreeMap;

use super::{ErrorKind, Location, PclError, PclProgram};

struct Binding {
    defined_at: Location,
    consumed_at: Option<Location>,
}

/// Enforces the identifier rules: assign once, define before use, consume at
/// most once, and leave nothing but the final model unconsumed. Reports the
/// first violation in statement order.
pub fn check(program: &PclProgram) -> Result<(), PclError> {
    let mut env: BTreeMap<&str, Binding> = BTreeMap::new();
    for stmt in &program.statements {
        for (name, loc) in stmt.expr.refs() {
            consume(&mut env, name, loc)?;
        }
        if let Some(prev) = env.get(stmt.target.as_str()) {
            return Err(PclError::new(
                ErrorKind::Reassignment,
                stmt.loc,
                format!(
                    "identifier `{}` is assigned again; it was already assigned at {}. Every \
                     identifier must be assigned exactly once, so use a new name",
                    stmt.target, prev.defined_at
                ),
            ));
        }
        env.insert(
            &stmt.target,
            Binding {
                defined_at: stmt.loc,
                consumed_at: None,
            },
        );
    }

    let final_name = program.final_ident.as_str();
    match env.get(final_name) {
        None => {
            return Err(PclError::new(
                ErrorKind::UndefinedIdent,
                program.final_loc,
                format!("final(...) names `{final_name}`, which is never assigned"),
            ))
        }
        Some(Binding {
            consumed_at: Some(at),
            ..
        }) => {
            return Err(PclError::new(
                ErrorKind::ReuseOfSubmodel,
                program.final_loc,
                format!(
                    "final(...) names `{final_name}`, but `{final_name}` is already used as a \
                     child at {at}; final must name the root model that contains all others"
                ),
            ))
        }
        Some(_) => {}
    }

    for stmt in &program.statements {
        let binding = &env[stmt.target.as_str()];
        if binding.consumed_at.is_none() && stmt.target != final_name {
            return Err(PclError::new(
                ErrorKind::UnusedSubmodel,
                stmt.loc,
                format!(
                    "submodel `{}` is defined but never used in the final model `{final_name}`; \
                     include it in an operator or remove it",
                    stmt.target
                ),
            ));
        }
    }
    Ok(())
}

fn consume(env: &mut BTreeMap<&str, Binding>, name: &str, loc: Location) -> Result<(), PclError> {
    let Some(binding) = env.get_mut(name) else {
        return Err(PclError::new(
            ErrorKind::UndefinedIdent,
            loc,
            format!("identifier `{name}` is used before it is assigned"),
        ));
    };
    if let Some(first) = binding.consumed_at {
        return Err(PclError::new(
            ErrorKind::ReuseOfSubmodel,
            loc,
            format!(
                "submodel `{name}` is used a second time (first use at {first}); each submodel \
                 can appear in only one place. To repeat a step, create a new submodel, e.g. a \
                 second activity with the same label"
            ),
        ));
    }
    binding.consumed_at = Some(loc);
    Ok(())
}
