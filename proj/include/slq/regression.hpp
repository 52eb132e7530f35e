#pragma once

#include "slq/grid.hpp"
#include "slq/parallel.hpp"
#include "slq/random_field.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace slq {

/// Regression basis in the Brownian value b. Terms are "1", "B", "B^p" and "exp(cB)"
/// (also written "exp(c*B)", "exp(B)", "exp(-B)").
class Basis {
public:
    struct Function {
        bool exponential = false;
        int power = 0;
        double rate = 0.0;
        std::string label;

        double value(double b) const;
        double derivative(double b) const;
    };

    static Basis parse(std::string_view spec);
    static Basis standard();
    static Basis constant_only();

    Eigen::Index size() const { return static_cast<Eigen::Index>(functions_.size()); }
    const Function& operator[](Eigen::Index j) const { return functions_[static_cast<std::size_t>(j)]; }
    /// Index of the constant function, or −1.
    Eigen::Index constant_index() const;
    std::string spec() const;

    void evaluate(double b, double* out) const;
    void derivative(double b, double* out) const;
    /// n×size() matrix of raw basis values.
    Matrix design(const Eigen::Ref<const Vector>& b, Execution exec) const;
    Matrix derivative_design(const Eigen::Ref<const Vector>& b, Execution exec) const;

private:
    std::vector<Function> functions_;
};

/// Least-squares projection onto the basis at one node. Non-constant columns are
/// centred and scaled; the correlation matrix is inverted on its eigenvalues above
/// 1e−12 of the largest, so collinear or degenerate columns (e.g. at a node where
/// every path shares the same b) are projected out instead of failing.
class RegressionPlan {
public:
    RegressionPlan(const Basis& basis, const Eigen::Ref<const Vector>& b, Execution exec, bool keep_design = true);
    /// From a precomputed design basis.design(b).
    static RegressionPlan from_design(const Basis& basis, const Matrix& phi, Execution exec, bool keep_design = true);

    Eigen::Index paths() const { return n_; }
    /// Condition number of the kept spectrum relative to the full one (max/min over all eigenvalues).
    double condition() const { return condition_; }
    int dropped() const { return dropped_; }

    /// Standardized features of one b value (length = number of non-constant columns).
    void features(double b, double* out) const;
    Eigen::Index feature_count() const { return static_cast<Eigen::Index>(columns_.size()); }

    /// Raw coefficients (basis.size() × d) from the moments (1/n)Σ z yᵀ and mean y.
    Matrix coefficients(const Matrix& cross, const RowVector& mean) const;
    /// Fits targets (n × d). Requires keep_design.
    Matrix fit(const Eigen::Ref<const Matrix>& targets) const;
    /// Coefficient of determination of each target column for given coefficients.
    RowVector r_squared(const Eigen::Ref<const Matrix>& targets, const Matrix& coef,
                        const Eigen::Ref<const Vector>& b) const;

private:
    RegressionPlan() = default;
    void init(const Matrix& phi, bool keep_design);

    Basis basis_;
    Execution exec_ = Execution::Parallel;
    Eigen::Index n_ = 0;
    std::vector<Eigen::Index> columns_;  // basis indices of kept non-constant columns
    Vector mu_, sigma_;
    Matrix corr_pinv_;
    Matrix design_;  // n × columns_.size(), standardized
    double condition_ = 1.0;
    int dropped_ = 0;
};

/// Per-node regression coefficients, value(t_k, b) = Σ_j coef_k(j,:) φ_j(b) + Σ offsets(t_k, b).
class SurrogatePath {
public:
    SurrogatePath() = default;
    SurrogatePath(const TimeGrid& grid, const Basis& basis, Eigen::Index dim);

    const TimeGrid& grid() const { return grid_; }
    const Basis& basis() const { return basis_; }
    Eigen::Index dim() const { return dim_; }
    int nodes() const { return static_cast<int>(coef_.size()); }

    Matrix& coefficients(int k) { return coef_[static_cast<std::size_t>(k)]; }
    const Matrix& coefficients(int k) const { return coef_[static_cast<std::size_t>(k)]; }

    void add_offset(const RandomField& f);
    const std::vector<RandomField>& offsets() const { return offsets_; }

    Vector evaluate(int k, double b) const;
    /// Values on all paths at node k (n × dim).
    Matrix evaluate_node(int k, const Eigen::Ref<const Vector>& b, Execution exec) const;

    SurrogatePath scaled(double c) const;

private:
    TimeGrid grid_;
    Basis basis_;
    Eigen::Index dim_ = 0;
    std::vector<Matrix> coef_;
    std::vector<RandomField> offsets_;
};

}  // namespace slq
