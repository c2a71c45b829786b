//! Shared generators for property tests.

use proptest::prelude::*;

use crate::chc::{parse_program, Program};

pub fn arb_program() -> impl Strategy<Value = Program> {
    // Clause templates over two unary predicates p, q; constraints are
    // small bounds so that both feasible and infeasible trees occur.
    let bound = (-2i64..=2, prop::bool::ANY);
    let clause = (0usize..6, bound.clone(), bound);
    prop::collection::vec(clause, 2..=6).prop_map(|cs| {
        let mut text = String::from(":- initial(init/1).\nc0. init(X) :- X >= -3, X =< 3.\n");
        for (i, (shape, (k1, up1), (k2, up2))) in cs.into_iter().enumerate() {
            let r1 = if up1 { format!("X =< {k1}") } else { format!("X >= {k1}") };
            let r2 = if up2 { format!("Y =< {k2}") } else { format!("Y >= {k2}") };
            let body = match shape {
                0 => format!("false :- {r1}, p(X)"),
                1 => format!("p(X) :- {r1}, Y = X + 1, init(Y)"),
                2 => format!("p(X) :- {r1}, Y = X - 1, p(Y)"),
                3 => format!("q(X) :- {r1}, {r2}, p(X), p(Y)"),
                4 => format!("false :- {r1}, q(X)"),
                _ => format!("p(X) :- {r1}, {r2}, q(Y), init(X)"),
            };
            text.push_str(&format!("k{}. {body}.\n", i + 1));
        }
        parse_program(&text).unwrap()
    })
}

