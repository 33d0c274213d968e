#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "veloplan/conic_solver.hpp"
#include "veloplan/model.hpp"

namespace veloplan
{

struct IndexRange
{
    std::size_t start = 0;
    std::size_t count = 0;

    std::size_t operator[](std::size_t i) const { return start + i; }
    std::size_t end() const { return start + count; }
};

/// Column ranges of the physical variables inside the conic program.
/// f = F / M, t >= 1/sqrt(w), e >= max(eta f, f), and (y, z) split the
/// relaxed time bound into three hyperbolic constraints.
struct VariableMap
{
    IndexRange w, f, t, e, y, z;

    std::size_t total() const { return z.end(); }
};

struct ConicProgram
{
    ConicData data;
    VariableMap var_map;
    ProblemInstance instance;
    std::size_t orthant_rows = 0; // leading cone rows forming one orthant block
};

/// Affine scalar `coeff * x[index] + constant`; index empty for a constant.
struct AffineTerm
{
    std::optional<std::size_t> index;
    double coeff = 1.0;
    double constant = 0.0;

    static AffineTerm var(std::size_t i, double coeff = 1.0) { return {i, coeff, 0.0}; }
    static AffineTerm value(double v) { return {std::nullopt, 0.0, v}; }
};

/// Accumulates cone rows in "G x + s = h" form.
struct ConeRowBuilder
{
    std::vector<Eigen::Triplet<double>> g;
    std::vector<double> h;
    std::vector<Cone> cones;

    std::size_t rows() const { return h.size(); }
    /// Appends a row whose slack equals sum(terms) + constant.
    void add_row(std::initializer_list<AffineTerm> terms, double constant = 0.0);
};

/// Emits a 3-dimensional second-order cone enforcing a^2 <= b c through
/// ||(2a, b - c)|| <= b + c. Nonnegativity of b and c is implied.
void hyperbolic_to_soc(ConeRowBuilder &rows, const AffineTerm &a, const AffineTerm &b,
                       const AffineTerm &c);

/// Builds the SOCP relaxation of the speed-planning problem. Throws
/// InvalidParameter if the instance is invalid.
ConicProgram build_relaxation(const ProblemInstance &instance);

/// Same program without the power rows t_i >= M f_i / P_max.
ConicProgram build_relaxation_without_power(const ProblemInstance &instance);

/// Lifts a point (w, F) of the original problem into the program's variable
/// space with t = 1/sqrt(w), e = max(eta f, f), y = sqrt(t), z = 1/sqrt(t).
Eigen::VectorXd lift_point(const ConicProgram &program, const std::vector<double> &w,
                           const std::vector<double> &F);

/// Worst violations of the relaxed problem's constraints in native units
/// (positive = violated).
struct PhysicalResiduals
{
    double dynamics = 0.0;     // |f_i - (w_{i+1}-w_i)/h - gamma w_i - g(sin + c)| [N/kg]
    double initial = 0.0;      // |w_1 - w_init|
    double speed_max = 0.0;    // w_i - w_max_i
    double speed_min = 0.0;    // -w_i
    double force = 0.0;        // |f_i| - g mu
    double power = 0.0;        // M f_i / P_max - t_i
    double time_bound = 0.0;   // 1/sqrt(w_i) - t_i
    double epigraph = 0.0;     // max(eta f, f) - e
};

struct ExtractedSolution
{
    std::vector<double> w, f, t, e, y, z;
    Eigen::VectorXd duals; // [equality multipliers; cone multipliers]
    ResidualRecord residuals;
    PhysicalResiduals physical;
    double objective = 0.0; // h (lambda M sum e + sum t)
    SolverStatus status = SolverStatus::Optimal;
};

/// Slices a solver result by the variable map. Throws NoSolution unless the
/// status is Optimal or MaxIter.
ExtractedSolution extract_solution(const ConicProgram &program, const ConicSolution &raw);

/// Residuals of the relaxed constraints at a physical point.
PhysicalResiduals physical_residuals(const ProblemInstance &instance, const std::vector<double> &w,
                                     const std::vector<double> &f, const std::vector<double> &t,
                                     const std::vector<double> &e);

double relaxation_objective(const ProblemInstance &instance, const std::vector<double> &t,
                            const std::vector<double> &e);

/// Plain-text dump: sizes, then sparse (row, col, value) triplets of c, A, b,
/// G, h, then one line per cone ("l <dim>" or "q <dim>").
void write_triplets(const ConicProgram &program, std::ostream &out);

} // namespace veloplan
