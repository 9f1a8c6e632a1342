#pragma once

#include <string>
#include <vector>

namespace lmx {

// A fixed-effects term: empty = intercept, one name = main effect,
// several = their interaction. Variables kept sorted lexicographically.
struct Term {
    std::vector<std::string> variables;

    bool is_intercept() const { return variables.empty(); }
    bool operator==(const Term&) const = default;
};

struct RandomSpec {
    std::vector<Term> slope_terms;  // always starts with the intercept term
    std::string grouping;

    bool operator==(const RandomSpec&) const = default;
};

struct FormulaAst {
    std::string response;
    std::vector<Term> fixed_terms;  // intercept first, interactions after their constituents
    std::vector<RandomSpec> random_specs;

    bool operator==(const FormulaAst&) const = default;
};

// Parses the model formula language:
//   formula := ident '~' term ('+' term)*
//   term    := '1' | ident | ident ':' ident | ident '*' ident
//            | '(' slope ('+' slope)* '|' ident ')'
//   slope   := '1' | ident
// `a*b` expands to a + b + a:b; duplicates are removed; the intercept is implicit.
FormulaAst parse_formula(const std::string& text);

// Canonical text; parse_formula(format_formula(ast)) == ast.
std::string format_formula(const FormulaAst& ast);

}  // namespace lmx
