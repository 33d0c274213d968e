#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "veloplan/model.hpp"

namespace veloplan
{

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct Cone
{
    enum class Kind
    {
        Nonnegative,
        SecondOrder,
    };

    Kind kind = Kind::Nonnegative;
    std::size_t dim = 0;
};

/// Conic program in the form
///
///   minimize    c'x
///   subject to  A x = b
///               G x + s = h,   s in K = K_1 x ... x K_m
///
/// where each K_j is a nonnegative orthant or a second-order cone
/// { (u0, u1) : ||u1|| <= u0 }. Rows of G are grouped by cone in list order.
struct ConicData
{
    Eigen::VectorXd c;
    SparseMatrix A;
    Eigen::VectorXd b;
    SparseMatrix G;
    Eigen::VectorXd h;
    std::vector<Cone> cones;

    std::size_t num_vars() const { return static_cast<std::size_t>(c.size()); }
    std::size_t num_eq() const { return static_cast<std::size_t>(b.size()); }
    std::size_t cone_rows() const { return static_cast<std::size_t>(h.size()); }
    /// Number of orthant coordinates plus number of second-order cones.
    std::size_t degree() const;
};

/// Throws InvalidParameter if dimensions or cone sizes are inconsistent.
void check_well_formed(const ConicData &data);

struct SolverConfig
{
    double eq_tol = 1e-9;
    double gap_tol = 1e-9;
    int max_iters = 200;
    bool equilibrate = true;
};

/// Relative KKT residuals, each normalized by (1 + magnitude of the data).
struct ResidualRecord
{
    double primal = 0.0; // max of equality and cone-slack infeasibility
    double dual = 0.0;   // max of stationarity and dual-cone infeasibility
    double gap = 0.0;    // |c'x + b'y + h'z| / max(1, |c'x|)

    double primal_eq = 0.0;
    double primal_cone = 0.0;
    double dual_eq = 0.0;
    double dual_cone = 0.0;
};

struct IterationInfo
{
    int iteration = 0;
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
    double mu = 0.0; // complementarity (s'z + kappa tau) / (degree + 1)
    double step = 0.0;
    double sigma = 0.0;
};

/// Farkas-style evidence attached when the embedding converges to kappa > 0.
struct InfeasibilityCertificate
{
    bool primal_infeasible = false; // ray (y, z): A'y + G'z = 0, b'y + h'z < 0, z in K
    bool dual_infeasible = false;   // ray x: A x = 0, G x + s = 0, c'x < 0, s in K
    double ray_residual = 0.0;      // normalized residual of the ray equations
    std::string summary;
};

struct ConicSolution
{
    Eigen::VectorXd primal;    // x
    Eigen::VectorXd slack;     // s
    Eigen::VectorXd dual_eq;   // y
    Eigen::VectorXd dual_cone; // z
    SolverStatus status = SolverStatus::NumericalFailure;
    int iterations = 0;
    ResidualRecord final_residuals;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double wall_time = 0.0;
    std::vector<IterationInfo> history;
    std::optional<InfeasibilityCertificate> certificate;
};

/// Primal-dual interior-point method on the homogeneous self-dual embedding
/// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
/// Deterministic and single-threaded; numerical breakdown is reported through
/// the status, never thrown.
ConicSolution solve_socp(const ConicData &data, const SolverConfig &config = {});

/// Recomputes the residuals of (x, y, z) from the problem data alone; the slack
/// is taken as h - G x.
ResidualRecord kkt_residuals(const ConicData &data, const ConicSolution &solution);
ResidualRecord kkt_residuals(const ConicData &data, const Eigen::VectorXd &x,
                             const Eigen::VectorXd &y, const Eigen::VectorXd &z);

/// Largest violation of `u in K`, zero if inside: max(-u_i) on orthants,
/// max(||u1|| - u0) on second-order cones.
double cone_violation(const std::vector<Cone> &cones, const Eigen::VectorXd &u);

namespace detail
{

/// Nesterov-Todd scaling of one cone block. For a second-order cone
/// W = eta * [wb0, wb1'; wb1, I + wb1 wb1' / (1 + wb0)], symmetric, with
/// W z = W^{-1} s = lambda.
struct NtBlock
{
    Cone::Kind kind = Cone::Kind::Nonnegative;
    std::size_t offset = 0;
    std::size_t dim = 0;
    double eta = 1.0;
    Eigen::VectorXd wbar; // SOC: normalized scaling point; orthant: sqrt(s/z)
};

struct NtScaling
{
    std::vector<NtBlock> blocks;
    Eigen::VectorXd lambda;

    static NtScaling compute(const std::vector<Cone> &cones, const Eigen::VectorXd &s,
                             const Eigen::VectorXd &z);
    Eigen::VectorXd apply(const Eigen::VectorXd &v) const;         // W v
    Eigen::VectorXd apply_inverse(const Eigen::VectorXd &v) const; // W^{-1} v
};

/// Jordan product u o v on the cone product.
Eigen::VectorXd jordan_product(const std::vector<Cone> &cones, const Eigen::VectorXd &u,
                               const Eigen::VectorXd &v);
/// Solves u o x = v for x (u in the interior).
Eigen::VectorXd jordan_divide(const std::vector<Cone> &cones, const Eigen::VectorXd &u,
                              const Eigen::VectorXd &v);
/// Largest alpha >= 0 with u + alpha d in K (u interior); +inf if unbounded.
double max_step(const std::vector<Cone> &cones, const Eigen::VectorXd &u,
                const Eigen::VectorXd &d);

} // namespace detail

} // namespace veloplan
