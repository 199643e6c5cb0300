#include "snmlab/model.hpp"

#include "snmlab/errors.hpp"
#include "snmlab/io.hpp"

namespace snmlab {

double act(double z, int q) {
    if (z <= 0.0) return 0.0;
    double result = z;
    for (int k = 1; k < q; ++k) result *= z;
    return result;
}

double act_prime(double z, int q) {
    if (z <= 0.0) return 0.0;
    double result = static_cast<double>(q);
    for (int k = 1; k < q; ++k) result *= z;
    return result;
}

double forward_pair(const Eigen::MatrixXd& w_plus, const Eigen::MatrixXd& w_minus,
                    const Eigen::VectorXd& patch1, const Eigen::VectorXd& patch2, int q) {
    if (w_plus.rows() != w_minus.rows() || w_plus.cols() != w_minus.cols())
        throw ShapeError("forward_pair: weight banks must have identical shapes");
    if (patch1.size() != w_plus.cols() || patch2.size() != w_plus.cols())
        throw ShapeError("forward_pair: patch dimension does not match weights");

    const int m = static_cast<int>(w_plus.rows());
    double f_plus = 0.0;
    double f_minus = 0.0;
    for (int r = 0; r < m; ++r) {
        f_plus += act(w_plus.row(r).dot(patch1), q) + act(w_plus.row(r).dot(patch2), q);
        f_minus += act(w_minus.row(r).dot(patch1), q) + act(w_minus.row(r).dot(patch2), q);
    }
    return (f_plus - f_minus) / static_cast<double>(m);
}

double forward_cnn(const ModelParams& params, const Dataset& dataset, int i) {
    if (i < 0 || i >= dataset.n())
        throw ShapeError("forward_cnn: sample index out of range: " + format_int(i));
    const Eigen::VectorXd patch1 = dataset.labels[i] * dataset.mu;
    return forward_pair(params.w_plus, params.w_minus, patch1,
                        dataset.noise.row(i).transpose(), params.q);
}

double forward_gcn(const ModelParams& params, const Dataset& dataset, int i) {
    if (i < 0 || i >= dataset.n())
        throw ShapeError("forward_gcn: sample index out of range: " + format_int(i));
    const Eigen::VectorXd patch1 = dataset.agg_labels[i] * dataset.mu;
    return forward_pair(params.w_plus, params.w_minus, patch1,
                        dataset.agg_noise.row(i).transpose(), params.q);
}

ModelParams init_weights(int m, int d, double sigma0, int q, Rng& rng) {
    if (m < 1 || d < 1) throw ConfigError("init_weights: m and d must be positive");
    if (!(sigma0 > 0.0)) throw ConfigError("init_weights: sigma0 must be positive");

    ModelParams params;
    params.q = q;
    params.sigma0 = sigma0;
    params.w_plus.resize(m, d);
    params.w_minus.resize(m, d);
    for (int r = 0; r < m; ++r)
        for (int k = 0; k < d; ++k) params.w_plus(r, k) = rng.gaussian(0.0, sigma0);
    for (int r = 0; r < m; ++r)
        for (int k = 0; k < d; ++k) params.w_minus(r, k) = rng.gaussian(0.0, sigma0);
    return params;
}

} // namespace snmlab
