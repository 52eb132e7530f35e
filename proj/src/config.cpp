#include "slq/config.hpp"

#include "slq/errors.hpp"
#include "slq/toml_lite.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace slq {

namespace {

using toml::Table;
using toml::Value;

[[noreturn]] void bad(const Value& v, const std::string& what)
{
    throw Error(ErrorCode::InvalidConfig, "config", what + " (" + v.where() + ")");
}

[[noreturn]] void bad(const std::string& what)
{
    throw Error(ErrorCode::InvalidConfig, "config", what);
}

void allow_only(const Table& t, const std::string& section, std::initializer_list<const char*> keys)
{
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : t) {
        if (!allowed.count(k)) bad(v, "unknown key '" + k + "' in " + section);
    }
}

const Table& table_of(const Value& v, const std::string& what)
{
    if (!v.is_table()) bad(v, what + " must be a table");
    return v.as_table();
}

double number_of(const Value& v, const std::string& what)
{
    if (!v.is_number()) bad(v, what + " must be a number");
    return v.as_number();
}

std::string string_of(const Value& v, const std::string& what)
{
    if (!v.is_string()) bad(v, what + " must be a string");
    return v.as_string();
}

long long integer_of(const Value& v, const std::string& what)
{
    if (!v.is_number() || !v.integral) bad(v, what + " must be an integer");
    return static_cast<long long>(v.as_number());
}

Matrix dense_matrix(const Value& v, Eigen::Index rows, Eigen::Index cols, const std::string& what)
{
    if (v.is_number()) {
        return Matrix::Identity(rows, cols) * v.as_number();
    }
    if (!v.is_array()) bad(v, what + " must be a number or an array");
    const auto& outer = v.as_array();
    const bool nested = !outer.empty() && outer.front().is_array();
    if (!nested) {
        if (cols != 1 || static_cast<Eigen::Index>(outer.size()) != rows) {
            bad(v, what + " must have " + std::to_string(rows) + "x" + std::to_string(cols) + " entries");
        }
        Matrix m(rows, 1);
        for (Eigen::Index i = 0; i < rows; ++i) m(i, 0) = number_of(outer[static_cast<std::size_t>(i)], what);
        return m;
    }
    if (static_cast<Eigen::Index>(outer.size()) != rows) {
        bad(v, what + " must have " + std::to_string(rows) + " rows");
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Value& row = outer[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.as_array().size()) != cols) {
            bad(row, what + " row " + std::to_string(i + 1) + " must have " + std::to_string(cols) + " entries");
        }
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = number_of(row.as_array()[static_cast<std::size_t>(j)], what);
        }
    }
    return m;
}

MatrixFunction family_function(const Table& t, Matrix value, double T, const Value& where, const std::string& what)
{
    const Value* fam = toml::find(t, "family");
    const std::string family = fam ? string_of(*fam, what + ".family") : "constant";
    if (family == "constant") {
        if (toml::find(t, "k") || toml::find(t, "c")) bad(where, what + ": constant family takes no parameters");
        return MatrixFunction::constant(std::move(value));
    }
    if (family == "exponential") {
        const Value* k = toml::find(t, "k");
        if (!k) bad(where, what + ": exponential family needs k");
        return MatrixFunction::exponential(std::move(value), number_of(*k, what + ".k"), T);
    }
    if (family == "rational") {
        const Value* c = toml::find(t, "c");
        if (!c) bad(where, what + ": rational family needs c");
        return MatrixFunction::rational(std::move(value), number_of(*c, what + ".c"));
    }
    bad(where, what + ": unknown family '" + family + "'");
}

MatrixFunction matrix_function(const Value* v, Eigen::Index rows, Eigen::Index cols, double T, const std::string& what)
{
    if (!v) return MatrixFunction::constant(Matrix::Zero(rows, cols));
    if (v->is_table()) {
        const Table& t = v->as_table();
        allow_only(t, what, {"value", "family", "k", "c"});
        const Value* value = toml::find(t, "value");
        if (!value) bad(*v, what + " needs 'value'");
        return family_function(t, dense_matrix(*value, rows, cols, what), T, *v, what);
    }
    return MatrixFunction::constant(dense_matrix(*v, rows, cols, what));
}

Expression parse_expression(const Value& v, const std::string& what)
{
    const std::string text = string_of(v, what);
    try {
        return Expression::parse(text);
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, "config", what + " at " + v.where() + ": " + e.what());
    }
}

RandomField random_field(const Value* v, Eigen::Index dim, double T, bool terminal, const std::string& what)
{
    if (!v) return RandomField::zero(dim, terminal);
    if (v->is_number() && v->as_number() == 0.0) return RandomField::zero(dim, terminal);
    if (v->is_array()) return RandomField::deterministic(dense_matrix(*v, dim, 1, what).col(0), terminal);
    if (!v->is_table()) bad(*v, what + " must be an array or a table");
    const Table& t = v->as_table();
    allow_only(t, what, {"base", "expr", "dB", "family", "k", "c"});
    const Value* base = toml::find(t, "base");
    if (!base) bad(*v, what + " needs 'base'");
    MatrixFunction f = family_function(t, dense_matrix(*base, dim, 1, what + ".base"), T, *v, what);
    const Value* expr = toml::find(t, "expr");
    Expression e = expr ? parse_expression(*expr, what + ".expr") : Expression::constant(1.0);
    RandomField field(std::move(f), std::move(e), terminal);
    if (const Value* d = toml::find(t, "dB")) field.declare_derivative(parse_expression(*d, what + ".dB"));
    return field;
}

}  // namespace

ProblemFile parse_problem(const std::string& text, const std::string& source_name)
{
    const Table root = toml::parse(text, source_name);
    allow_only(root, "problem file", {"grid", "dynamics", "cost", "constraint", "solver"});

    const Value* grid_v = toml::find(root, "grid");
    const Value* dyn_v = toml::find(root, "dynamics");
    const Value* cost_v = toml::find(root, "cost");
    if (!grid_v) bad("missing [grid] table");
    if (!dyn_v) bad("missing [dynamics] table");
    if (!cost_v) bad("missing [cost] table");

    const Table& grid_t = table_of(*grid_v, "[grid]");
    allow_only(grid_t, "[grid]", {"start", "end", "steps"});
    const Value* start = toml::find(grid_t, "start");
    const Value* end = toml::find(grid_t, "end");
    const Value* steps = toml::find(grid_t, "steps");
    if (!end) bad(*grid_v, "[grid] needs 'end'");
    const double s = start ? number_of(*start, "grid.start") : 0.0;
    const double T = number_of(*end, "grid.end");
    const long long N = steps ? integer_of(*steps, "grid.steps") : 200;
    if (N < 1 || N > 10000000) bad(*steps, "grid.steps out of range");

    ProblemFile out;
    SlqProblem& p = out.problem;
    p.grid = TimeGrid::make(s, T, static_cast<int>(N));

    const Table& dyn = table_of(*dyn_v, "[dynamics]");
    allow_only(dyn, "[dynamics]", {"xi", "controls", "A", "B", "C", "D"});
    const Value* xi = toml::find(dyn, "xi");
    const Value* controls = toml::find(dyn, "controls");
    if (!xi || !xi->is_array() || xi->as_array().empty()) bad(*dyn_v, "[dynamics] needs a non-empty array 'xi'");
    if (!controls) bad(*dyn_v, "[dynamics] needs 'controls'");
    const Eigen::Index n = static_cast<Eigen::Index>(xi->as_array().size());
    const long long m_ll = integer_of(*controls, "dynamics.controls");
    if (m_ll < 1 || m_ll > 1000) bad(*controls, "dynamics.controls out of range");
    const Eigen::Index m = static_cast<Eigen::Index>(m_ll);
    p.xi = dense_matrix(*xi, n, 1, "xi").col(0);
    p.A = matrix_function(toml::find(dyn, "A"), n, n, T, "A");
    p.B = matrix_function(toml::find(dyn, "B"), n, m, T, "B");
    p.C = matrix_function(toml::find(dyn, "C"), n, n, T, "C");
    p.D = matrix_function(toml::find(dyn, "D"), n, m, T, "D");

    const Table& cost = table_of(*cost_v, "[cost]");
    allow_only(cost, "[cost]", {"E", "F", "I", "M", "G", "K", "N"});
    if (!toml::find(cost, "I")) bad(*cost_v, "[cost] needs 'I'");
    p.E = matrix_function(toml::find(cost, "E"), n, n, T, "E");
    p.F = matrix_function(toml::find(cost, "F"), n, m, T, "F");
    p.I = matrix_function(toml::find(cost, "I"), m, m, T, "I");
    if (const Value* M = toml::find(cost, "M")) {
        if (M->is_table()) bad(*M, "M is a terminal weight and must be a constant matrix");
        p.M = dense_matrix(*M, n, n, "M");
    } else {
        p.M = Matrix::Zero(n, n);
    }
    p.G = random_field(toml::find(cost, "G"), n, T, false, "G");
    p.K = random_field(toml::find(cost, "K"), m, T, false, "K");
    p.N = random_field(toml::find(cost, "N"), n, T, true, "N");

    if (const Value* cons = toml::find(root, "constraint")) {
        if (!cons->is_array()) bad(*cons, "constraint must be declared with [[constraint]]");
        int index = 0;
        for (const Value& cv : cons->as_array()) {
            ++index;
            const Table& ct = table_of(cv, "[[constraint]]");
            allow_only(ct, "[[constraint]]", {"name", "kind", "a", "alpha", "beta", "gamma"});
            Constraint c;
            const Value* name = toml::find(ct, "name");
            c.name = name ? string_of(*name, "constraint.name") : "c" + std::to_string(index);
            const Value* kind = toml::find(ct, "kind");
            const std::string k = kind ? string_of(*kind, "constraint.kind") : "inequality";
            if (k == "inequality") {
                c.kind = ConstraintKind::Inequality;
            } else if (k == "equality") {
                c.kind = ConstraintKind::Equality;
            } else {
                bad(*kind, "constraint.kind must be \"inequality\" or \"equality\"");
            }
            const Value* a = toml::find(ct, "a");
            if (!a) bad(cv, "constraint needs 'a'");
            c.a = number_of(*a, "constraint.a");
            c.alpha = random_field(toml::find(ct, "alpha"), n, T, false, c.name + ".alpha");
            c.beta = random_field(toml::find(ct, "beta"), m, T, false, c.name + ".beta");
            c.gamma = random_field(toml::find(ct, "gamma"), n, T, true, c.name + ".gamma");
            p.constraints.push_back(std::move(c));
        }
    }
    p.normalize_constraints();

    if (const Value* sv = toml::find(root, "solver")) {
        const Table& st = table_of(*sv, "[solver]");
        allow_only(st, "[solver]", {"basis", "seed", "paths"});
        if (const Value* b = toml::find(st, "basis")) out.solver.basis = string_of(*b, "solver.basis");
        if (const Value* sd = toml::find(st, "seed")) {
            const long long v = integer_of(*sd, "solver.seed");
            if (v < 0) bad(*sd, "solver.seed must be non-negative");
            out.solver.seed = static_cast<std::uint64_t>(v);
        }
        if (const Value* pa = toml::find(st, "paths")) {
            const long long v = integer_of(*pa, "solver.paths");
            if (v < 1) bad(*pa, "solver.paths must be positive");
            out.solver.paths = static_cast<int>(v);
        }
    }
    return out;
}

ProblemFile load_problem_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "config", "cannot open problem file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_problem(buf.str(), path);
}

}  // namespace slq
