#pragma once

// Up-looking sparse LDL' for quasi-definite KKT matrices. A pivot whose
// magnitude does not exceed the tolerance is replaced by delta times its
// expected sign.

#include <cmath>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>

namespace veloplan::detail
{

class SparseLdl
{
public:
    using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

    /// `full` holds both triangles; `signs[i]` is +1 or -1, the expected sign
    /// of pivot i.
    void analyze(const Matrix &full, std::vector<int> signs)
    {
        const int n = static_cast<int>(full.cols());
        n_ = n;
        signs_ = std::move(signs);

        Eigen::AMDOrdering<int> amd;
        Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> order;
        amd(full, order);
        perm_.assign(order.indices().data(), order.indices().data() + n);
        inverse_.assign(static_cast<std::size_t>(n), 0);
        for (int k = 0; k < n; ++k)
            inverse_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(k)])] = k;

        parent_.assign(static_cast<std::size_t>(n), -1);
        nonzeros_.assign(static_cast<std::size_t>(n), 0);
        std::vector<int> flag(static_cast<std::size_t>(n), 0);
        const int *col_start = full.outerIndexPtr();
        const int *rows = full.innerIndexPtr();
        for (int k = 0; k < n; ++k)
        {
            flag[k] = k;
            const int kk = perm_[k];
            for (int p = col_start[kk]; p < col_start[kk + 1]; ++p)
            {
                for (int i = inverse_[rows[p]]; i < k && flag[i] != k; i = parent_[i])
                {
                    if (parent_[i] == -1)
                        parent_[i] = k;
                    ++nonzeros_[i];
                    flag[i] = k;
                }
            }
        }
        col_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
        for (int k = 0; k < n; ++k)
            col_ptr_[k + 1] = col_ptr_[k] + nonzeros_[k];
        row_idx_.assign(static_cast<std::size_t>(col_ptr_[n]), 0);
        values_.assign(static_cast<std::size_t>(col_ptr_[n]), 0.0);
        diag_.assign(static_cast<std::size_t>(n), 0.0);
    }

    /// Numeric factorization of a matrix with the analyzed pattern. Returns the
    /// number of pivots that had to be regularized.
    int factorize(const Matrix &full, double pivot_tol, double delta)
    {
        const int n = n_;
        std::vector<double> y(static_cast<std::size_t>(n), 0.0);
        std::vector<int> pattern(static_cast<std::size_t>(n), 0);
        std::vector<int> flag(static_cast<std::size_t>(n), 0);
        std::fill(nonzeros_.begin(), nonzeros_.end(), 0);
        const int *col_start = full.outerIndexPtr();
        const int *rows = full.innerIndexPtr();
        const double *vals = full.valuePtr();
        int regularized = 0;

        for (int k = 0; k < n; ++k)
        {
            int top = n;
            flag[k] = k;
            const int kk = perm_[k];
            for (int p = col_start[kk]; p < col_start[kk + 1]; ++p)
            {
                int i = inverse_[rows[p]];
                if (i > k)
                    continue;
                y[i] += vals[p];
                int len = 0;
                for (; flag[i] != k; i = parent_[i])
                {
                    pattern[len++] = i;
                    flag[i] = k;
                }
                while (len > 0)
                    pattern[--top] = pattern[--len];
            }
            double d = y[k];
            y[k] = 0.0;
            for (; top < n; ++top)
            {
                const int i = pattern[top];
                const double yi = y[i];
                y[i] = 0.0;
                const int end = col_ptr_[i] + nonzeros_[i];
                for (int p = col_ptr_[i]; p < end; ++p)
                    y[row_idx_[p]] -= values_[p] * yi;
                const double lki = yi / diag_[i];
                d -= lki * yi;
                row_idx_[end] = k;
                values_[end] = lki;
                ++nonzeros_[i];
            }
            const int sign = signs_[static_cast<std::size_t>(kk)];
            if (!(std::abs(d) > pivot_tol))
            {
                d = sign * delta;
                ++regularized;
            }
            diag_[k] = d;
        }
        return regularized;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd &b) const
    {
        const int n = n_;
        std::vector<double> x(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            x[k] = b[perm_[k]];
        for (int j = 0; j < n; ++j)
            for (int p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p)
                x[row_idx_[p]] -= values_[p] * x[j];
        for (int j = 0; j < n; ++j)
            x[j] /= diag_[j];
        for (int j = n - 1; j >= 0; --j)
            for (int p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p)
                x[j] -= values_[p] * x[row_idx_[p]];
        Eigen::VectorXd out(n);
        for (int k = 0; k < n; ++k)
            out[perm_[k]] = x[k];
        return out;
    }

    std::size_t factor_nonzeros() const { return values_.size(); }

private:
    int n_ = 0;
    std::vector<int> signs_;
    std::vector<int> perm_;    // pivot k is original index perm_[k]
    std::vector<int> inverse_; // original index -> pivot position
    std::vector<int> parent_;  // elimination tree
    std::vector<int> nonzeros_;
    std::vector<int> col_ptr_;
    std::vector<int> row_idx_;
    std::vector<double> values_;
    std::vector<double> diag_;
};

} // namespace veloplan::detail
