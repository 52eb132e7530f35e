#pragma once

#include "slq/config.hpp"

#include <string>

namespace slq::test {

inline std::string problem_path(const std::string& name)
{
    return std::string(SLQ_PROBLEM_DIR) + "/" + name;
}

inline SlqProblem load(const std::string& name, int steps = 0)
{
    SlqProblem p = load_problem_file(problem_path(name)).problem;
    return steps > 0 ? p.with_steps(steps) : p;
}

inline double rel_diff(double a, double b)
{
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline double rel_diff(const Matrix& a, const Matrix& b)
{
    const double s = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return s == 0.0 ? 0.0 : (a - b).cwiseAbs().maxCoeff() / s;
}

/// Ex2 with the random terminal weights replaced by their values at B = 0, t = 1:
/// every coefficient is deterministic.
inline const char* kDeterministicProblem = R"(
[grid]
start = 0.0
end = 1.0
steps = 100

[dynamics]
xi = [1.0, 1.0]
controls = 2
A = -0.5
B = 1.0
C = 1.0
D = 0.0

[cost]
E = 0.0
F = 0.0
I = 1.0
M = 1.0
N = [0.7, 0.7]

[[constraint]]
name = "terminal-1"
a = -1.0
gamma = [0.8, 0.0]

[[constraint]]
name = "terminal-2"
a = 0.0
gamma = [0.0, 0.8]
)";

}  // namespace slq::test
