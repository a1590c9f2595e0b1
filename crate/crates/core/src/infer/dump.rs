use super::AnnotatedProgram;
use crate::lang::ast::Decl;
use crate::lang::printer::{print_cost, print_decl_with, TypePrinter};

fn uses_comment<'a>(uses: impl Iterator<Item = (&'a crate::lang::ast::CostExpr, &'a str, &'a crate::lang::ast::Type)>) -> Option<String> {
    let tp = TypePrinter::with_rvars();
    let parts: Vec<String> = uses
        .map(|(scale, op, ty)| {
            let scale = match scale {
                crate::lang::ast::CostExpr::Lit(v) if *v == 1.0 => String::new(),
                c => format!("@({}) ", print_cost(c)),
            };
            format!("{scale}{op} : {}", tp.print(ty))
        })
        .collect();
    (!parts.is_empty()).then(|| format!("(* uses: {} *)", parts.join("; ")))
}

/// The program with rvars shown on every `repr`, implementation types in
/// desugared form, inferred let types, and the op uses of each body.
pub fn dump_annotated(ap: &AnnotatedProgram) -> String {
    let tp = TypePrinter::with_rvars();
    let mut out = String::new();
    let mut impl_idx = 0;
    for (i, d) in ap.program.decls.iter().enumerate() {
        match d {
            Decl::Impl(imp) => {
                let info = &ap.impls[impl_idx];
                impl_idx += 1;
                let mut shown = imp.clone();
                shown.annot = Some(info.ty.clone());
                out.push_str(&print_decl_with(&Decl::Impl(shown), tp));
                out.push('\n');
                if let Some(c) = uses_comment(info.uses.iter().map(|u| (&u.scale, u.op.as_str(), &u.ty))) {
                    out.push_str(&format!("  {c}\n"));
                }
            }
            Decl::Let { name, annot, .. } => {
                out.push_str(&print_decl_with(d, tp));
                out.push('\n');
                if let (None, Some(t)) = (annot, &ap.decl_types[i]) {
                    out.push_str(&format!("  (* {name} : {} *)\n", tp.print(t)));
                }
                let uses = ap.top_uses.iter().filter(|u| u.decl == i);
                if let Some(c) = uses_comment(uses.map(|u| (&u.scale, u.op.as_str(), &u.ty))) {
                    out.push_str(&format!("  {c}\n"));
                }
            }
            _ => {
                out.push_str(&print_decl_with(d, tp));
                out.push('\n');
            }
        }
    }
    out
}
