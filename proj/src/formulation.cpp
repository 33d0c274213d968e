#include "veloplan/formulation.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "veloplan/error.hpp"

namespace veloplan
{

using Triplet = Eigen::Triplet<double>;

void ConeRowBuilder::add_row(std::initializer_list<AffineTerm> terms, double constant)
{
    const auto row = static_cast<int>(h.size());
    for (const AffineTerm &term : terms)
    {
        constant += term.constant;
        if (term.index && term.coeff != 0.0)
            g.emplace_back(row, static_cast<int>(*term.index), -term.coeff);
    }
    h.push_back(constant);
}

void hyperbolic_to_soc(ConeRowBuilder &rows, const AffineTerm &a, const AffineTerm &b,
                       const AffineTerm &c)
{
    auto scaled = [](AffineTerm t, double k) {
        t.coeff *= k;
        t.constant *= k;
        return t;
    };
    rows.add_row({b, c});
    rows.add_row({scaled(a, 2.0)});
    rows.add_row({b, scaled(c, -1.0)});
    rows.cones.push_back({Cone::Kind::SecondOrder, 3});
}

namespace
{

ConicProgram build(const ProblemInstance &instance, bool with_power)
{
    require_valid(instance);
    const VehicleParams &v = instance.vehicle;
    const PathProfile &path = instance.path;
    const std::size_t n = path.points();
    const std::size_t steps = n - 1;
    const double h = path.step;
    const double gmu = kGravity * v.friction;

    ConicProgram program;
    program.instance = instance;
    VariableMap &map = program.var_map;
    map.w = {0, n};
    map.f = {map.w.end(), steps};
    map.t = {map.f.end(), steps};
    map.e = {map.t.end(), steps};
    map.y = {map.e.end(), steps};
    map.z = {map.y.end(), steps};
    const std::size_t nvars = map.total();

    ConicData &data = program.data;
    data.c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nvars));
    for (std::size_t i = 0; i < steps; ++i)
    {
        data.c[static_cast<Eigen::Index>(map.t[i])] = h;
        data.c[static_cast<Eigen::Index>(map.e[i])] = h * instance.lambda * v.mass;
    }

    // Equalities, ordered by step: w_1 = w_init, then the dynamics of step i.
    std::vector<Triplet> eq;
    data.b.resize(static_cast<Eigen::Index>(n));
    eq.emplace_back(0, static_cast<int>(map.w[0]), 1.0);
    data.b[0] = instance.w_init;
    for (std::size_t i = 0; i < steps; ++i)
    {
        const int row = static_cast<int>(i + 1);
        eq.emplace_back(row, static_cast<int>(map.f[i]), 1.0);
        eq.emplace_back(row, static_cast<int>(map.w[i]), 1.0 / h - v.normalized_drag);
        eq.emplace_back(row, static_cast<int>(map.w[i + 1]), -1.0 / h);
        data.b[row] = kGravity * (path.slope_sin[i] + v.rolling_coeff);
    }
    data.A.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nvars));
    data.A.setFromTriplets(eq.begin(), eq.end());

    using T = AffineTerm;
    ConeRowBuilder rows;
    for (std::size_t i = 0; i < n; ++i)
    {
        rows.add_row({T::var(map.w[i])});
        rows.add_row({T::var(map.w[i], -1.0)}, path.w_max[i]);
    }
    for (std::size_t i = 0; i < steps; ++i)
    {
        const std::size_t f = map.f[i], t = map.t[i], e = map.e[i];
        rows.add_row({T::var(f, -1.0)}, gmu);
        rows.add_row({T::var(f)}, gmu);
        if (with_power)
            rows.add_row({T::var(t), T::var(f, -v.mass / v.max_power)});
        rows.add_row({T::var(e), T::var(f, -v.regen_fraction)});
        rows.add_row({T::var(e), T::var(f, -1.0)});
        rows.add_row({T::var(e, -1.0)}, gmu);
        rows.add_row({T::var(map.y[i])});
        rows.add_row({T::var(map.z[i])});
    }
    program.orthant_rows = rows.rows();
    rows.cones.push_back({Cone::Kind::Nonnegative, rows.rows()});

    // t_i >= 1/sqrt(w_i) as 1 <= z y, y^2 <= t, z^2 <= t w.
    for (std::size_t i = 0; i < steps; ++i)
    {
        hyperbolic_to_soc(rows, T::value(1.0), T::var(map.z[i]), T::var(map.y[i]));
        hyperbolic_to_soc(rows, T::var(map.y[i]), T::var(map.t[i]), T::value(1.0));
        hyperbolic_to_soc(rows, T::var(map.z[i]), T::var(map.t[i]), T::var(map.w[i]));
    }

    data.G.resize(static_cast<Eigen::Index>(rows.rows()), static_cast<Eigen::Index>(nvars));
    data.G.setFromTriplets(rows.g.begin(), rows.g.end());
    data.h = Eigen::Map<const Eigen::VectorXd>(rows.h.data(), static_cast<Eigen::Index>(rows.h.size()));
    data.cones = std::move(rows.cones);
    data.A.makeCompressed();
    data.G.makeCompressed();
    return program;
}

std::vector<double> slice(const Eigen::VectorXd &x, const IndexRange &range)
{
    return {x.data() + range.start, x.data() + range.end()};
}

} // namespace

ConicProgram build_relaxation(const ProblemInstance &instance) { return build(instance, true); }

ConicProgram build_relaxation_without_power(const ProblemInstance &instance)
{
    return build(instance, false);
}

Eigen::VectorXd lift_point(const ConicProgram &program, const std::vector<double> &w,
                           const std::vector<double> &F)
{
    const VariableMap &map = program.var_map;
    const VehicleParams &v = program.instance.vehicle;
    if (w.size() != map.w.count || F.size() != map.f.count)
        throw Error(ErrorCode::InvalidParameter, "lift_point: length mismatch");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(map.total()));
    for (std::size_t i = 0; i < w.size(); ++i)
        x[static_cast<Eigen::Index>(map.w[i])] = w[i];
    for (std::size_t i = 0; i < F.size(); ++i)
    {
        if (!(w[i] > 0.0))
            throw Error(ErrorCode::SingularSpeed, "lift_point: non-positive w on a step");
        const double f = F[i] / v.mass;
        const double t = 1.0 / std::sqrt(w[i]);
        x[static_cast<Eigen::Index>(map.f[i])] = f;
        x[static_cast<Eigen::Index>(map.t[i])] = t;
        x[static_cast<Eigen::Index>(map.e[i])] = std::max(v.regen_fraction * f, f);
        x[static_cast<Eigen::Index>(map.y[i])] = std::sqrt(t);
        x[static_cast<Eigen::Index>(map.z[i])] = 1.0 / std::sqrt(t);
    }
    return x;
}

PhysicalResiduals physical_residuals(const ProblemInstance &instance, const std::vector<double> &w,
                                     const std::vector<double> &f, const std::vector<double> &t,
                                     const std::vector<double> &e)
{
    const VehicleParams &v = instance.vehicle;
    const PathProfile &path = instance.path;
    const double h = path.step;
    PhysicalResiduals r;
    r.initial = std::abs(w.front() - instance.w_init);
    r.speed_max = -std::numeric_limits<double>::infinity();
    r.speed_min = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < w.size(); ++i)
    {
        r.speed_max = std::max(r.speed_max, w[i] - path.w_max[i]);
        r.speed_min = std::max(r.speed_min, -w[i]);
    }
    r.force = r.power = r.time_bound = r.epigraph = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i)
    {
        const double rhs = (w[i + 1] - w[i]) / h + v.normalized_drag * w[i] +
                           kGravity * (path.slope_sin[i] + v.rolling_coeff);
        r.dynamics = std::max(r.dynamics, std::abs(f[i] - rhs));
        r.force = std::max(r.force, std::abs(f[i]) - kGravity * v.friction);
        r.power = std::max(r.power, v.mass * f[i] / v.max_power - t[i]);
        r.time_bound = std::max(r.time_bound, w[i] > 0.0 ? 1.0 / std::sqrt(w[i]) - t[i]
                                                         : std::numeric_limits<double>::infinity());
        r.epigraph = std::max(r.epigraph, std::max(v.regen_fraction * f[i], f[i]) - e[i]);
    }
    return r;
}

double relaxation_objective(const ProblemInstance &instance, const std::vector<double> &t,
                            const std::vector<double> &e)
{
    double sum_t = 0.0, sum_e = 0.0;
    for (double ti : t)
        sum_t += ti;
    for (double ei : e)
        sum_e += ei;
    return instance.path.step * (instance.lambda * instance.vehicle.mass * sum_e + sum_t);
}

ExtractedSolution extract_solution(const ConicProgram &program, const ConicSolution &raw)
{
    if (raw.status != SolverStatus::Optimal && raw.status != SolverStatus::MaxIter)
        throw Error(ErrorCode::NoSolution,
                    std::string("no solution to extract (status ") + to_string(raw.status) + ")");
    const VariableMap &map = program.var_map;
    if (raw.primal.size() != static_cast<Eigen::Index>(map.total()))
        throw Error(ErrorCode::InvalidParameter, "solution does not match the program");

    ExtractedSolution out;
    out.status = raw.status;
    out.w = slice(raw.primal, map.w);
    out.f = slice(raw.primal, map.f);
    out.t = slice(raw.primal, map.t);
    out.e = slice(raw.primal, map.e);
    out.y = slice(raw.primal, map.y);
    out.z = slice(raw.primal, map.z);
    out.duals.resize(raw.dual_eq.size() + raw.dual_cone.size());
    out.duals << raw.dual_eq, raw.dual_cone;
    out.residuals = kkt_residuals(program.data, raw);
    out.physical = physical_residuals(program.instance, out.w, out.f, out.t, out.e);
    out.objective = relaxation_objective(program.instance, out.t, out.e);
    return out;
}

void write_triplets(const ConicProgram &program, std::ostream &out)
{
    const ConicData &d = program.data;
    const auto old_precision = out.precision(17);
    out << "vars " << d.num_vars() << " eq " << d.num_eq() << " cone_rows " << d.cone_rows()
        << '\n';
    auto dense = [&](const char *name, const Eigen::VectorXd &v) {
        out << name << '\n';
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (v[i] != 0.0)
                out << i << " 0 " << v[i] << '\n';
    };
    auto sparse = [&](const char *name, const SparseMatrix &m) {
        out << name << '\n';
        for (Eigen::Index j = 0; j < m.outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(m, j); it; ++it)
                out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    };
    dense("c", d.c);
    sparse("A", d.A);
    dense("b", d.b);
    sparse("G", d.G);
    dense("h", d.h);
    out << "cones\n";
    for (const Cone &cone : d.cones)
        out << (cone.kind == Cone::Kind::Nonnegative ? 'l' : 'q') << ' ' << cone.dim << '\n';
    out.precision(old_precision);
}

} // namespace veloplan
