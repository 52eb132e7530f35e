#pragma once

#include "slq/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace slq {

/// Optional solver defaults carried by a problem file's [solver] table.
struct SolverSettings {
    std::optional<std::string> basis;
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
};

struct ProblemFile {
    SlqProblem problem;
    SolverSettings solver;
};

/// Builds a problem from the sections [grid], [dynamics], [cost], [[constraint]] and
/// the optional [solver]. Unknown keys and tables are errors. Constraints are
/// normalized to inequality-first order.
ProblemFile parse_problem(const std::string& text, const std::string& source_name = "<input>");
ProblemFile load_problem_file(const std::string& path);

}  // namespace slq
