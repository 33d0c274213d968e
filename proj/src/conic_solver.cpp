#include "veloplan/conic_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "veloplan/error.hpp"
#include "sparse_ldl.hpp"

namespace veloplan
{

using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStepFraction = 0.99;
constexpr double kKktRegularization = 1e-8;
constexpr double kPivotTolerance = 1e-13;
constexpr double kDynamicRegularization = 1e-7;
constexpr int kRefinementSteps = 12;
constexpr double kInfeasibilityTol = 1e-8;
constexpr int kRuizPasses = 25;

struct NumericalBreakdown
{
    const char *reason;
};

double inf_norm(const Vec &v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Vec cone_identity(const std::vector<Cone> &cones, std::size_t m)
{
    Vec e = Vec::Zero(static_cast<Eigen::Index>(m));
    std::size_t offset = 0;
    for (const Cone &cone : cones)
    {
        if (cone.kind == Cone::Kind::Nonnegative)
            e.segment(offset, cone.dim).setOnes();
        else
            e[offset] = 1.0;
        offset += cone.dim;
    }
    return e;
}

/// Moves u into the interior of K along the identity direction if needed.
void push_into_cone(const std::vector<Cone> &cones, Vec &u)
{
    const double alpha = cone_violation(cones, u);
    double margin = kInf;
    std::size_t offset = 0;
    for (const Cone &cone : cones)
    {
        if (cone.kind == Cone::Kind::Nonnegative)
            margin = std::min(margin, u.segment(offset, cone.dim).minCoeff());
        else
            margin = std::min(margin, u[offset] - u.segment(offset + 1, cone.dim - 1).norm());
        offset += cone.dim;
    }
    if (margin <= 0.0)
        u += (1.0 + alpha) * cone_identity(cones, static_cast<std::size_t>(u.size()));
}

/// Diagonal Ruiz equilibration of [A; G]. Rows of one second-order cone share
/// a single factor.
struct Equilibration
{
    Vec col;      // D
    Vec row_eq;   // E
    Vec row_cone; // F

    Equilibration(std::size_t n, std::size_t p, std::size_t m)
        : col(Vec::Ones(static_cast<Eigen::Index>(n))),
          row_eq(Vec::Ones(static_cast<Eigen::Index>(p))),
          row_cone(Vec::Ones(static_cast<Eigen::Index>(m)))
    {
    }

    void run(SparseMatrix &A, SparseMatrix &G, const std::vector<Cone> &cones)
    {
        const Eigen::Index n = A.cols();
        std::vector<std::pair<std::size_t, std::size_t>> soc_ranges;
        std::size_t offset = 0;
        for (const Cone &cone : cones)
        {
            if (cone.kind == Cone::Kind::SecondOrder)
                soc_ranges.emplace_back(offset, cone.dim);
            offset += cone.dim;
        }

        auto safe = [](double norm) { return norm > 1e-30 ? 1.0 / std::sqrt(norm) : 1.0; };
        for (int pass = 0; pass < kRuizPasses; ++pass)
        {
            Vec col_norm = Vec::Zero(n);
            Vec eq_norm = Vec::Zero(A.rows());
            Vec cone_norm = Vec::Zero(G.rows());
            for (Eigen::Index j = 0; j < n; ++j)
            {
                for (SparseMatrix::InnerIterator it(A, j); it; ++it)
                {
                    const double a = std::abs(it.value());
                    col_norm[j] = std::max(col_norm[j], a);
                    eq_norm[it.row()] = std::max(eq_norm[it.row()], a);
                }
                for (SparseMatrix::InnerIterator it(G, j); it; ++it)
                {
                    const double a = std::abs(it.value());
                    col_norm[j] = std::max(col_norm[j], a);
                    cone_norm[it.row()] = std::max(cone_norm[it.row()], a);
                }
            }
            for (const auto &[start, dim] : soc_ranges)
            {
                const double shared = cone_norm.segment(start, dim).maxCoeff();
                cone_norm.segment(start, dim).setConstant(shared);
            }

            double worst = 0.0;
            for (const Vec *v : {&col_norm, &eq_norm, &cone_norm})
                for (Eigen::Index i = 0; i < v->size(); ++i)
                    if ((*v)[i] > 1e-30)
                        worst = std::max(worst, std::abs(1.0 - (*v)[i]));
            if (worst < 1e-3)
                break;

            const Vec d = col_norm.unaryExpr(safe);
            const Vec e = eq_norm.unaryExpr(safe);
            const Vec f = cone_norm.unaryExpr(safe);
            A = e.asDiagonal() * A * d.asDiagonal();
            G = f.asDiagonal() * G * d.asDiagonal();
            col = col.cwiseProduct(d);
            row_eq = row_eq.cwiseProduct(e);
            row_cone = row_cone.cwiseProduct(f);
        }
    }
};

/// KKT system in the scaled variable u = W z:
///   [ +dI      A'   G'W^-1 ]
///   [  A      -dI    0     ]
///   [ W^-1 G   0    -I     ]
/// solved by sparse LDL' with iterative refinement against the
/// unregularized operator.
class KktSystem
{
public:
    KktSystem(const SparseMatrix &A, const SparseMatrix &G, const std::vector<Cone> &cones)
        : A_(A), G_(G), At_(A.transpose()), Gt_(G.transpose()), Grow_(G), n_(A.cols()),
          p_(A.rows()), m_(G.rows())
    {
        const Eigen::Index dim = n_ + p_ + m_;
        matrix_.resize(dim, dim);
        std::size_t offset = 0;
        for (const Cone &cone : cones)
        {
            if (cone.kind == Cone::Kind::SecondOrder)
            {
                std::vector<int> columns;
                for (std::size_t r = offset; r < offset + cone.dim; ++r)
                    for (RowMatrix::InnerIterator it(Grow_, static_cast<Eigen::Index>(r)); it; ++it)
                        columns.push_back(static_cast<int>(it.col()));
                std::sort(columns.begin(), columns.end());
                columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
                soc_columns_.push_back(std::move(columns));
            }
            offset += cone.dim;
        }
    }

    void factor(const detail::NtScaling &scaling)
    {
        scaling_ = &scaling;
        std::vector<Triplet> triplets;
        triplets.reserve(static_cast<std::size_t>(2 * (A_.nonZeros() + 3 * G_.nonZeros()) + n_ +
                                                  p_ + m_));
        for (Eigen::Index j = 0; j < n_; ++j)
        {
            triplets.emplace_back(j, j, kKktRegularization);
            for (SparseMatrix::InnerIterator it(A_, j); it; ++it)
                triplets.emplace_back(n_ + it.row(), j, it.value());
        }
        for (Eigen::Index i = 0; i < p_; ++i)
            triplets.emplace_back(n_ + i, n_ + i, -kKktRegularization);
        for (Eigen::Index i = 0; i < m_; ++i)
            triplets.emplace_back(n_ + p_ + i, n_ + p_ + i, -1.0);
        append_scaled_g(scaling, triplets);
        const std::size_t lower = triplets.size();
        for (std::size_t k = 0; k < lower; ++k)
            if (triplets[k].row() != triplets[k].col())
                triplets.emplace_back(triplets[k].col(), triplets[k].row(), triplets[k].value());
        matrix_.setFromTriplets(triplets.begin(), triplets.end());

        if (!analyzed_)
        {
            std::vector<int> signs(static_cast<std::size_t>(n_ + p_ + m_), -1);
            std::fill(signs.begin(), signs.begin() + n_, 1);
            ldl_.analyze(matrix_, std::move(signs));
            analyzed_ = true;
        }
        ldl_.factorize(matrix_, kPivotTolerance, kDynamicRegularization);
    }

    /// Solves the unscaled system [0 A' G'; A 0 0; G 0 -W'W] v = rhs.
    Vec solve(const Vec &rhs) const
    {
        Vec scaled = rhs;
        scaled.tail(m_) = scaling_->apply_inverse(rhs.tail(m_));
        Vec sol = ldl_.solve(scaled);
        double best = inf_norm(scaled - multiply(sol));
        const double target = 1e-14 * (1.0 + inf_norm(scaled));
        for (int k = 0; k < kRefinementSteps && best > target; ++k)
        {
            const Vec candidate = sol + ldl_.solve(scaled - multiply(sol));
            const double error = inf_norm(scaled - multiply(candidate));
            if (!(error < best))
                break;
            sol = candidate;
            best = error;
        }
        if (!sol.allFinite())
            throw NumericalBreakdown{"non-finite KKT solution"};
        sol.tail(m_) = scaling_->apply_inverse(sol.tail(m_));
        return sol;
    }

private:
    using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

    /// Lower-triangle triplets of W^-1 G, one dense row pattern per cone.
    void append_scaled_g(const detail::NtScaling &scaling, std::vector<Triplet> &out) const
    {
        const auto base = static_cast<int>(n_ + p_);
        std::size_t soc = 0;
        Eigen::VectorXd row_values(n_);
        for (const detail::NtBlock &block : scaling.blocks)
        {
            if (block.kind == Cone::Kind::Nonnegative)
            {
                for (std::size_t r = block.offset; r < block.offset + block.dim; ++r)
                {
                    const double inv = 1.0 / block.wbar[static_cast<Eigen::Index>(r - block.offset)];
                    for (RowMatrix::InnerIterator it(Grow_, static_cast<Eigen::Index>(r)); it; ++it)
                        out.emplace_back(base + static_cast<int>(r), static_cast<int>(it.col()),
                                         inv * it.value());
                }
                continue;
            }
            const std::vector<int> &columns = soc_columns_[soc++];
            const Eigen::MatrixXd winv = inverse_block(block);
            for (std::size_t i = 0; i < block.dim; ++i)
            {
                for (int col : columns)
                    row_values[col] = 0.0;
                for (std::size_t k = 0; k < block.dim; ++k)
                {
                    const double coeff = winv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                    for (RowMatrix::InnerIterator it(Grow_, static_cast<Eigen::Index>(block.offset + k));
                         it; ++it)
                        row_values[it.col()] += coeff * it.value();
                }
                for (int col : columns)
                    out.emplace_back(base + static_cast<int>(block.offset + i), col, row_values[col]);
            }
        }
    }

    static Eigen::MatrixXd inverse_block(const detail::NtBlock &block)
    {
        // W^-1 = (1/eta) [wbar0, -wbar1'; -wbar1, I + wbar1 wbar1' / (1 + wbar0)].
        const auto dim = static_cast<Eigen::Index>(block.dim);
        const Vec tail = block.wbar.tail(dim - 1);
        Eigen::MatrixXd winv(dim, dim);
        winv(0, 0) = block.wbar[0];
        winv.block(0, 1, 1, dim - 1) = -tail.transpose();
        winv.block(1, 0, dim - 1, 1) = -tail;
        winv.bottomRightCorner(dim - 1, dim - 1) =
            Eigen::MatrixXd::Identity(dim - 1, dim - 1) + tail * tail.transpose() / (1.0 + block.wbar[0]);
        return winv / block.eta;
    }

    Vec multiply(const Vec &v) const
    {
        const Vec vz = scaling_->apply_inverse(v.tail(m_));
        const Vec gx = scaling_->apply_inverse(G_ * v.head(n_));
        Vec out(v.size());
        out.head(n_) = At_ * v.segment(n_, p_) + Gt_ * vz;
        out.segment(n_, p_) = A_ * v.head(n_);
        out.tail(m_) = gx - v.tail(m_);
        return out;
    }

    const SparseMatrix &A_;
    const SparseMatrix &G_;
    SparseMatrix At_;
    SparseMatrix Gt_;
    RowMatrix Grow_;
    Eigen::Index n_, p_, m_;
    std::vector<std::vector<int>> soc_columns_;
    SparseMatrix matrix_;
    detail::SparseLdl ldl_;
    bool analyzed_ = false;
    const detail::NtScaling *scaling_ = nullptr;
};

struct Direction
{
    Vec dx, dy, dz, ds;
    double dtau = 0.0;
    double dkappa = 0.0;
};

} // namespace

std::size_t ConicData::degree() const
{
    std::size_t deg = 0;
    for (const Cone &cone : cones)
        deg += cone.kind == Cone::Kind::Nonnegative ? cone.dim : 1;
    return deg;
}

void check_well_formed(const ConicData &data)
{
    const auto n = static_cast<Eigen::Index>(data.num_vars());
    auto fail = [](const std::string &what) { throw Error(ErrorCode::InvalidParameter, what); };
    if (data.A.cols() != n || data.A.rows() != data.b.size())
        fail("equality block dimensions do not match");
    if (data.G.cols() != n || data.G.rows() != data.h.size())
        fail("cone block dimensions do not match");
    std::size_t total = 0;
    for (const Cone &cone : data.cones)
    {
        if (cone.dim < 1)
            fail("cone of dimension zero");
        total += cone.dim;
    }
    if (total != data.cone_rows())
        fail("cone dimensions do not sum to the number of cone rows");
    if (!data.c.allFinite() || !data.b.allFinite() || !data.h.allFinite())
        fail("non-finite problem data");
}

double cone_violation(const std::vector<Cone> &cones, const Vec &u)
{
    double worst = 0.0;
    std::size_t offset = 0;
    for (const Cone &cone : cones)
    {
        if (cone.kind == Cone::Kind::Nonnegative)
        {
            worst = std::max(worst, -u.segment(offset, cone.dim).minCoeff());
        }
        else
        {
            const double tail = cone.dim > 1 ? u.segment(offset + 1, cone.dim - 1).norm() : 0.0;
            worst = std::max(worst, tail - u[offset]);
        }
        offset += cone.dim;
    }
    return std::max(worst, 0.0);
}

ResidualRecord kkt_residuals(const ConicData &data, const Vec &x, const Vec &y, const Vec &z)
{
    if (x.size() != static_cast<Eigen::Index>(data.num_vars()) ||
        y.size() != static_cast<Eigen::Index>(data.num_eq()) ||
        z.size() != static_cast<Eigen::Index>(data.cone_rows()))
        throw Error(ErrorCode::InvalidParameter, "solution dimensions do not match the program");

    const Vec s = data.h - data.G * x;
    ResidualRecord r;
    r.primal_eq = inf_norm(data.A * x - data.b) / (1.0 + inf_norm(data.b));
    r.primal_cone = cone_violation(data.cones, s) / (1.0 + inf_norm(data.h));
    r.dual_eq = inf_norm(data.A.transpose() * y + data.G.transpose() * z + data.c) /
                (1.0 + inf_norm(data.c));
    r.dual_cone = cone_violation(data.cones, z) / (1.0 + inf_norm(data.c));
    r.primal = std::max(r.primal_eq, r.primal_cone);
    r.dual = std::max(r.dual_eq, r.dual_cone);
    const double pcost = data.c.dot(x);
    const double dcost = -data.b.dot(y) - data.h.dot(z);
    r.gap = std::abs(pcost - dcost) / std::max(1.0, std::abs(pcost));
    return r;
}

ResidualRecord kkt_residuals(const ConicData &data, const ConicSolution &solution)
{
    return kkt_residuals(data, solution.primal, solution.dual_eq, solution.dual_cone);
}

ConicSolution solve_socp(const ConicData &data, const SolverConfig &config)
{
    check_well_formed(data);
    if (!(config.eq_tol > 0.0) || !(config.gap_tol > 0.0) || config.max_iters < 1)
        throw Error(ErrorCode::InvalidParameter, "solver tolerances must be positive");

    const auto started = std::chrono::steady_clock::now();
    const auto n = static_cast<Eigen::Index>(data.num_vars());
    const auto p = static_cast<Eigen::Index>(data.num_eq());
    const auto m = static_cast<Eigen::Index>(data.cone_rows());
    const std::vector<Cone> &cones = data.cones;
    const double degree = static_cast<double>(data.degree());

    SparseMatrix A = data.A;
    SparseMatrix G = data.G;
    A.makeCompressed();
    G.makeCompressed();
    Equilibration scale(data.num_vars(), data.num_eq(), data.cone_rows());
    if (config.equilibrate)
        scale.run(A, G, cones);
    const Vec c = scale.col.cwiseProduct(data.c);
    const Vec b = scale.row_eq.cwiseProduct(data.b);
    const Vec h = scale.row_cone.cwiseProduct(data.h);
    const SparseMatrix At = A.transpose();
    const SparseMatrix Gt = G.transpose();

    ConicSolution out;
    Vec x, y, z, s;
    double tau = 1.0;
    double kappa = 1.0;

    auto stack = [&](const Vec &vx, const Vec &vy, const Vec &vz) {
        Vec v(n + p + m);
        v << vx, vy, vz;
        return v;
    };
    auto unscaled = [&](double t) {
        out.primal = scale.col.cwiseProduct(x) / t;
        out.dual_eq = scale.row_eq.cwiseProduct(y) / t;
        out.dual_cone = scale.row_cone.cwiseProduct(z) / t;
        out.slack = s.cwiseQuotient(scale.row_cone) / t;
    };

    KktSystem kkt(A, G, cones);
    try
    {
        // Initial point from two least-squares style solves with W = I.
        {
            const auto identity = detail::NtScaling::compute(cones, cone_identity(cones, m),
                                                             cone_identity(cones, m));
            kkt.factor(identity);
            const Vec primal = kkt.solve(stack(Vec::Zero(n), b, h));
            x = primal.head(n);
            s = -primal.tail(m);
            push_into_cone(cones, s);
            const Vec dual = kkt.solve(stack(-c, Vec::Zero(p), Vec::Zero(m)));
            y = dual.segment(n, p);
            z = dual.tail(m);
            push_into_cone(cones, z);
        }

        const Vec unit = cone_identity(cones, m);
        out.status = SolverStatus::MaxIter;
        for (int iter = 0;; ++iter)
        {
            const Vec r1 = At * y + Gt * z + c * tau;
            const Vec r2 = A * x - b * tau;
            const Vec r3 = G * x + s - h * tau;
            const double r4 = c.dot(x) + b.dot(y) + h.dot(z) + kappa;
            const double mu = (s.dot(z) + kappa * tau) / (degree + 1.0);

            unscaled(tau);
            const ResidualRecord rec = kkt_residuals(data, out.primal, out.dual_eq, out.dual_cone);
            IterationInfo info;
            info.iteration = iter;
            info.primal = rec.primal;
            info.dual = rec.dual;
            info.gap = rec.gap;
            info.mu = mu;
            out.history.push_back(info);
            out.iterations = iter;

            if (rec.primal <= config.eq_tol && rec.dual <= config.eq_tol &&
                rec.gap <= config.gap_tol)
            {
                out.status = SolverStatus::Optimal;
                break;
            }

            // Infeasibility rays from the embedding (unscaled, not divided by tau).
            if (kappa > tau)
            {
                const Vec xr = scale.col.cwiseProduct(x);
                const Vec yr = scale.row_eq.cwiseProduct(y);
                const Vec zr = scale.row_cone.cwiseProduct(z);
                const Vec sr = s.cwiseQuotient(scale.row_cone);
                const double dual_ray = data.b.dot(yr) + data.h.dot(zr);
                const double primal_ray = data.c.dot(xr);
                if (dual_ray < 0.0)
                {
                    const double res = inf_norm(data.A.transpose() * yr + data.G.transpose() * zr) /
                                       -dual_ray;
                    if (res <= kInfeasibilityTol)
                    {
                        InfeasibilityCertificate cert;
                        cert.primal_infeasible = true;
                        cert.ray_residual = res;
                        std::ostringstream msg;
                        msg << "primal infeasible: b'y + h'z = " << dual_ray
                            << " < 0 with ||A'y + G'z|| / |b'y + h'z| = " << res;
                        cert.summary = msg.str();
                        out.certificate = cert;
                        out.status = SolverStatus::Infeasible;
                        break;
                    }
                }
                if (primal_ray < 0.0)
                {
                    const double res =
                        std::max(inf_norm(data.A * xr), inf_norm(data.G * xr + sr)) / -primal_ray;
                    if (res <= kInfeasibilityTol)
                    {
                        InfeasibilityCertificate cert;
                        cert.dual_infeasible = true;
                        cert.ray_residual = res;
                        std::ostringstream msg;
                        msg << "dual infeasible (unbounded): c'x = " << primal_ray
                            << " < 0 with ray residual " << res;
                        cert.summary = msg.str();
                        out.certificate = cert;
                        out.status = SolverStatus::Infeasible;
                        break;
                    }
                }
            }

            if (iter >= config.max_iters)
                break;

            const auto scaling = detail::NtScaling::compute(cones, s, z);
            const Vec &lambda = scaling.lambda;
            kkt.factor(scaling);
            const Vec u1 = kkt.solve(stack(-c, b, h));
            const double u1_dot = c.dot(u1.head(n)) + b.dot(u1.segment(n, p)) + h.dot(u1.tail(m));

            auto direction = [&](double keep, const Vec &xi, double zeta) {
                const Vec lxi = detail::jordan_divide(cones, lambda, xi);
                const Vec u2 = kkt.solve(stack(-keep * r1, -keep * r2, -keep * r3 - scaling.apply(lxi)));
                const double u2_dot =
                    c.dot(u2.head(n)) + b.dot(u2.segment(n, p)) + h.dot(u2.tail(m));
                Direction d;
                d.dtau = (-keep * r4 - zeta / tau - u2_dot) / (u1_dot - kappa / tau);
                d.dx = u2.head(n) + d.dtau * u1.head(n);
                d.dy = u2.segment(n, p) + d.dtau * u1.segment(n, p);
                d.dz = u2.tail(m) + d.dtau * u1.tail(m);
                d.ds = scaling.apply(lxi - scaling.apply(d.dz));
                d.dkappa = (zeta - kappa * d.dtau) / tau;
                return d;
            };
            auto step_to_boundary = [&](const Direction &d) {
                double alpha = std::min(detail::max_step(cones, lambda, scaling.apply_inverse(d.ds)),
                                        detail::max_step(cones, lambda, scaling.apply(d.dz)));
                if (d.dtau < 0.0)
                    alpha = std::min(alpha, -tau / d.dtau);
                if (d.dkappa < 0.0)
                    alpha = std::min(alpha, -kappa / d.dkappa);
                return alpha;
            };

            const Vec lambda_sq = detail::jordan_product(cones, lambda, lambda);
            const Direction affine = direction(1.0, -lambda_sq, -kappa * tau);
            const double alpha_affine = std::min(1.0, step_to_boundary(affine));
            const double sigma = std::clamp(std::pow(1.0 - alpha_affine, 3), 0.0, 1.0);

            const Vec second_order = detail::jordan_product(
                cones, scaling.apply_inverse(affine.ds), scaling.apply(affine.dz));
            const Vec xi = -lambda_sq - second_order + sigma * mu * unit;
            const double zeta = -kappa * tau - affine.dkappa * affine.dtau + sigma * mu;
            const Direction d = direction(1.0 - sigma, xi, zeta);
            const double alpha = std::min(1.0, kStepFraction * step_to_boundary(d));
            if (!(alpha > 1e-12) || !std::isfinite(alpha))
                throw NumericalBreakdown{"step length collapsed"};

            x += alpha * d.dx;
            y += alpha * d.dy;
            z += alpha * d.dz;
            s += alpha * d.ds;
            tau += alpha * d.dtau;
            kappa += alpha * d.dkappa;
            out.history.back().step = alpha;
            out.history.back().sigma = sigma;
        }
    }
    catch (const NumericalBreakdown &)
    {
        out.status = SolverStatus::NumericalFailure;
    }

    if (x.size() == n && tau > 0.0)
        unscaled(tau);
    else
    {
        out.primal = Vec::Zero(n);
        out.dual_eq = Vec::Zero(p);
        out.dual_cone = Vec::Zero(m);
        out.slack = Vec::Zero(m);
    }
    out.final_residuals = kkt_residuals(data, out);
    out.primal_objective = data.c.dot(out.primal);
    out.dual_objective = -data.b.dot(out.dual_eq) - data.h.dot(out.dual_cone);
    out.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

namespace detail
{

NtScaling NtScaling::compute(const std::vector<Cone> &cones, const Vec &s, const Vec &z)
{
    NtScaling w;
    w.lambda.resize(s.size());
    std::size_t offset = 0;
    for (const Cone &cone : cones)
    {
        NtBlock block;
        block.kind = cone.kind;
        block.offset = offset;
        block.dim = cone.dim;
        const auto sb = s.segment(offset, cone.dim);
        const auto zb = z.segment(offset, cone.dim);
        if (cone.kind == Cone::Kind::Nonnegative)
        {
            if ((sb.array() <= 0.0).any() || (zb.array() <= 0.0).any())
                throw NumericalBreakdown{"orthant iterate left the cone"};
            block.wbar = (sb.array() / zb.array()).sqrt();
            w.lambda.segment(offset, cone.dim) = (sb.array() * zb.array()).sqrt();
        }
        else
        {
            const double s_tail = sb.tail(cone.dim - 1).norm();
            const double z_tail = zb.tail(cone.dim - 1).norm();
            const double s_res = (sb[0] - s_tail) * (sb[0] + s_tail);
            const double z_res = (zb[0] - z_tail) * (zb[0] + z_tail);
            if (!(s_res > 0.0) || !(z_res > 0.0) || sb[0] <= 0.0 || zb[0] <= 0.0)
                throw NumericalBreakdown{"second-order iterate left the cone"};
            const double s_norm = std::sqrt(s_res);
            const double z_norm = std::sqrt(z_res);
            const Vec sbar = sb / s_norm;
            const Vec zbar = zb / z_norm;
            const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
            block.wbar.resize(static_cast<Eigen::Index>(cone.dim));
            block.wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
            block.wbar.tail(cone.dim - 1) =
                (sbar.tail(cone.dim - 1) - zbar.tail(cone.dim - 1)) / (2.0 * gamma);
            block.eta = std::sqrt(s_norm / z_norm);
        }
        w.blocks.push_back(std::move(block));
        offset += cone.dim;
    }
    // lambda = W z for the second-order blocks.
    for (const NtBlock &block : w.blocks)
    {
        if (block.kind == Cone::Kind::SecondOrder)
        {
            const Vec zb = z.segment(block.offset, block.dim);
            const double a = block.wbar.tail(block.dim - 1).dot(zb.tail(block.dim - 1));
            w.lambda[block.offset] = block.eta * (block.wbar[0] * zb[0] + a);
            w.lambda.segment(block.offset + 1, block.dim - 1) =
                block.eta * (zb.tail(block.dim - 1) +
                             (a / (1.0 + block.wbar[0]) + zb[0]) * block.wbar.tail(block.dim - 1));
        }
    }
    return w;
}

Vec NtScaling::apply(const Vec &v) const
{
    Vec out(v.size());
    for (const NtBlock &block : blocks)
    {
        const auto vb = v.segment(block.offset, block.dim);
        if (block.kind == Cone::Kind::Nonnegative)
        {
            out.segment(block.offset, block.dim) = block.wbar.cwiseProduct(vb);
            continue;
        }
        const std::size_t k = block.dim - 1;
        const double a = block.wbar.tail(k).dot(vb.tail(k));
        out[block.offset] = block.eta * (block.wbar[0] * vb[0] + a);
        out.segment(block.offset + 1, k) =
            block.eta * (vb.tail(k) + (a / (1.0 + block.wbar[0]) + vb[0]) * block.wbar.tail(k));
    }
    return out;
}

Vec NtScaling::apply_inverse(const Vec &v) const
{
    Vec out(v.size());
    for (const NtBlock &block : blocks)
    {
        const auto vb = v.segment(block.offset, block.dim);
        if (block.kind == Cone::Kind::Nonnegative)
        {
            out.segment(block.offset, block.dim) = vb.cwiseQuotient(block.wbar);
            continue;
        }
        const std::size_t k = block.dim - 1;
        const double a = block.wbar.tail(k).dot(vb.tail(k));
        out[block.offset] = (block.wbar[0] * vb[0] - a) / block.eta;
        out.segment(block.offset + 1, k) =
            (vb.tail(k) + (a / (1.0 + block.wbar[0]) - vb[0]) * block.wbar.tail(k)) / block.eta;
    }
    return out;
}

Vec jordan_product(const std::vector<Cone> &cones, const Vec &u, const Vec &v)
{
    Vec out(u.size());
    std::size_t offset = 0;
    for (const Cone &cone : cones)
    {
        const auto ub = u.segment(offset, cone.dim);
        const auto vb = v.segment(offset, cone.dim);
        if (cone.kind == Cone::Kind::Nonnegative)
        {
            out.segment(offset, cone.dim) = ub.cwiseProduct(vb);
        }
        else
        {
            const std::size_t k = cone.dim - 1;
            out[offset] = ub.dot(vb);
            out.segment(offset + 1, k) = ub[0] * vb.tail(k) + vb[0] * ub.tail(k);
        }
        offset += cone.dim;
    }
    return out;
}

Vec jordan_divide(const std::vector<Cone> &cones, const Vec &u, const Vec &v)
{
    Vec out(u.size());
    std::size_t offset = 0;
    for (const Cone &cone : cones)
    {
        const auto ub = u.segment(offset, cone.dim);
        const auto vb = v.segment(offset, cone.dim);
        if (cone.kind == Cone::Kind::Nonnegative)
        {
            out.segment(offset, cone.dim) = vb.cwiseQuotient(ub);
        }
        else
        {
            const std::size_t k = cone.dim - 1;
            const double tail = ub.tail(k).norm();
            const double det = (ub[0] - tail) * (ub[0] + tail);
            const double x0 = (ub[0] * vb[0] - ub.tail(k).dot(vb.tail(k))) / det;
            out[offset] = x0;
            out.segment(offset + 1, k) = (vb.tail(k) - x0 * ub.tail(k)) / ub[0];
        }
        offset += cone.dim;
    }
    return out;
}

double max_step(const std::vector<Cone> &cones, const Vec &u, const Vec &d)
{
    double alpha = kInf;
    std::size_t offset = 0;
    for (const Cone &cone : cones)
    {
        if (cone.kind == Cone::Kind::Nonnegative)
        {
            for (std::size_t i = offset; i < offset + cone.dim; ++i)
            {
                const auto ii = static_cast<Eigen::Index>(i);
                if (d[ii] < 0.0)
                    alpha = std::min(alpha, -u[ii] / d[ii]);
            }
            offset += cone.dim;
            continue;
        }
        // f(a) = (u0 + a d0)^2 - ||u1 + a d1||^2 = qa a^2 + qb a + qc, qc > 0.
        const std::size_t k = cone.dim - 1;
        const auto ub = u.segment(offset, cone.dim);
        const auto db = d.segment(offset, cone.dim);
        const double qa = db[0] * db[0] - db.tail(k).squaredNorm();
        const double qb = 2.0 * (ub[0] * db[0] - ub.tail(k).dot(db.tail(k)));
        const double u_tail = ub.tail(k).norm();
        const double qc = (ub[0] - u_tail) * (ub[0] + u_tail);
        double root = kInf;
        if (std::abs(qa) < 1e-300)
        {
            if (qb < 0.0)
                root = -qc / qb;
        }
        else
        {
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc >= 0.0)
            {
                const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
                for (double r : {q / qa, q != 0.0 ? qc / q : kInf})
                    if (r > 0.0)
                        root = std::min(root, r);
            }
        }
        // Apex crossing.
        if (db[0] < 0.0)
            root = std::min(root, -ub[0] / db[0]);
        alpha = std::min(alpha, root);
        offset += cone.dim;
    }
    return alpha;
}

} // namespace detail

} // namespace veloplan
