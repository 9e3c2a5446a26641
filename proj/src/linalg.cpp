#include "styler/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "styler/errors.hpp"

namespace styler {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a)
{
    double acc = 0.0;
    const Eigen::Index n = a.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i != j) acc += a(i, j) * a(i, j);
        }
    }
    return std::sqrt(acc);
}

}  // namespace

SymEig sym_eig(const Eigen::MatrixXd& input, JacobiOptions opts)
{
    if (input.rows() != input.cols()) {
        throw ContractViolation("sym_eig needs a square matrix");
    }
    if (!input.allFinite()) {
        throw InvalidInput("sym_eig: matrix has non-finite entries");
    }
    const Eigen::Index n = input.rows();
    const double max_abs = n > 0 ? input.cwiseAbs().maxCoeff() : 0.0;
    if (n > 0 && (input - input.transpose()).cwiseAbs().maxCoeff() > 1e-6 * max_abs) {
        throw ContractViolation("sym_eig: matrix is not symmetric");
    }

    Eigen::MatrixXd a = 0.5 * (input + input.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double threshold = opts.relative_tolerance * a.norm();

    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        if (off_diagonal_norm(a) <= threshold) break;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // A <- Jᵀ A J, touching only rows/columns p and q.
                for (Eigen::Index r = 0; r < n; ++r) {
                    const double arp = a(r, p);
                    const double arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                for (Eigen::Index r = 0; r < n; ++r) {
                    const double apr = a(p, r);
                    const double aqr = a(q, r);
                    a(p, r) = c * apr - s * aqr;
                    a(q, r) = s * apr + c * aqr;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Eigen::Index r = 0; r < n; ++r) {
                    const double vrp = v(r, p);
                    const double vrq = v(r, q);
                    v(r, p) = c * vrp - s * vrq;
                    v(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

    SymEig out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
    }
    return out;
}

Eigen::MatrixXd as_matrix(const Tensor& f)
{
    const Eigen::Index c = f.channels();
    const Eigen::Index n = static_cast<Eigen::Index>(f.shape().plane());
    using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajorF>(f.data(), c, n).cast<double>();
}

Tensor from_matrix(const Eigen::MatrixXd& m, int h, int w)
{
    if (m.cols() != static_cast<Eigen::Index>(h) * w) {
        throw InvalidInput("matrix column count does not match spatial size");
    }
    Tensor out(static_cast<int>(m.rows()), h, w);
    using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMajorF>(out.data(), m.rows(), m.cols()) = m.cast<float>();
    return out;
}

Moments covariance(const Tensor& f)
{
    if (f.shape().plane() == 0) {
        throw InvalidInput("covariance of an empty feature map");
    }
    if (!f.all_finite()) {
        throw NumericError("covariance: feature has non-finite values");
    }
    Eigen::MatrixXd x = as_matrix(f);
    const double n = static_cast<double>(x.cols());
    Moments m;
    m.mean = x.rowwise().sum() / n;
    x.colwise() -= m.mean;
    m.cov = Eigen::MatrixXd::Zero(x.rows(), x.rows());
    m.cov.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / n);
    m.cov = m.cov.selfadjointView<Eigen::Lower>();
    return m;
}

Tensor finite_diff_grad(const ScalarFn& fn, const Tensor& x, double eps)
{
    if (!(eps > 0.0)) {
        throw InvalidInput("finite_diff_grad: eps must be positive");
    }
    Tensor grad(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float original = x[i];
        const float up = static_cast<float>(original + eps);
        const float down = static_cast<float>(original - eps);
        probe[i] = up;
        const double f_up = fn(probe);
        probe[i] = down;
        const double f_down = fn(probe);
        probe[i] = original;
        if (!std::isfinite(f_up) || !std::isfinite(f_down)) {
            throw NumericError("finite_diff_grad: function returned a non-finite value");
        }
        grad[i] = static_cast<float>((f_up - f_down) / (static_cast<double>(up) - static_cast<double>(down)));
    }
    return grad;
}

}  // namespace styler
