#include "snmlab/decomposition.hpp"

#include <cmath>
#include <sstream>

#include "snmlab/errors.hpp"
#include "snmlab/io.hpp"

namespace snmlab {

namespace {

void cache_norms(CoeffState& state, const Dataset& dataset) {
    if (state.noise_norm_sq.size() == 0) {
        state.mu_norm_sq = dataset.mu_norm_sq;
        state.noise_norm_sq = dataset.noise_norm_sq;
    }
}

void check_step_args(const CoeffState& state, const ModelParams& params,
                     const Dataset& dataset, const Eigen::VectorXd& loss_derivs) {
    if (loss_derivs.size() != dataset.n())
        throw ShapeError("step_coeffs: loss_derivs length != n");
    if (state.width() != params.width() || state.samples() != dataset.n())
        throw ShapeError("step_coeffs: state dimensions do not match params/dataset");
}

} // namespace

CoeffState init_coeffs(int m, int n) {
    if (m < 1 || n < 1) throw ConfigError("init_coeffs: m and n must be positive");
    CoeffState state;
    state.gamma = Eigen::MatrixXd::Zero(2, m);
    for (int j = 0; j < 2; ++j) {
        state.rho_bar[j] = Eigen::MatrixXd::Zero(m, n);
        state.rho_under[j] = Eigen::MatrixXd::Zero(m, n);
    }
    return state;
}

void step_coeffs_gcn(CoeffState& state, const ModelParams& params, const Dataset& dataset,
                     const Eigen::VectorXd& loss_derivs, double eta) {
    check_step_args(state, params, dataset, loss_derivs);
    cache_norms(state, dataset);

    const int n = dataset.n();
    const int m = params.width();
    const int q = params.q;
    const double scale = -eta / (static_cast<double>(n) * static_cast<double>(m));

    // A + I as a dense double matrix for the neighborhood sums.
    Eigen::MatrixXd adj_tilde = dataset.adj.cast<double>();
    adj_tilde.diagonal().setOnes();

    const Eigen::VectorXd inv_deg =
        dataset.degrees.cast<double>().cwiseInverse();

    for (int j = 0; j < 2; ++j) {
        const double js = bank_sign(j);
        const Eigen::MatrixXd& bank = params.bank(j);
        const Eigen::VectorXd mu_dot = bank * dataset.mu;            // m
        const Eigen::MatrixXd pre = bank * dataset.agg_noise.transpose();  // m x n

        // gamma_{j,r} += -(eta/nm) sum_i l'_i sigma'(<w, y~_i mu>) y_i y~_i ||mu||^2
        Eigen::VectorXd weighted(n);
        for (int i = 0; i < n; ++i)
            weighted[i] = loss_derivs[i] * dataset.labels[i] * dataset.agg_labels[i];
        Eigen::MatrixXd sig_prime(m, n);
        for (int r = 0; r < m; ++r)
            for (int i = 0; i < n; ++i)
                sig_prime(r, i) = act_prime(dataset.agg_labels[i] * mu_dot[r], q);
        state.gamma.row(j) += (scale * state.mu_norm_sq) * (sig_prime * weighted).transpose();

        // u_{r,k} = -(eta/nm) l'_k sigma'(<w_{j,r}, xi~_k>) / D_k  (>= 0);
        // rho_bar_{j,r,i} += ||xi_i||^2 * sum_{k in N(i), y_k=j} u_{r,k},
        // rho_under symmetric with the y_k = -j columns and opposite sign.
        Eigen::MatrixXd u(m, n);
        for (int r = 0; r < m; ++r)
            for (int k = 0; k < n; ++k)
                u(r, k) = scale * loss_derivs[k] * act_prime(pre(r, k), q) * inv_deg[k];

        Eigen::MatrixXd u_same = u;
        Eigen::MatrixXd u_opp = u;
        for (int k = 0; k < n; ++k) {
            if (dataset.labels[k] == js)
                u_opp.col(k).setZero();
            else
                u_same.col(k).setZero();
        }
        const Eigen::MatrixXd same_sums = u_same * adj_tilde;  // m x n
        const Eigen::MatrixXd opp_sums = u_opp * adj_tilde;
        for (int i = 0; i < n; ++i) {
            state.rho_bar[j].col(i) += state.noise_norm_sq[i] * same_sums.col(i);
            state.rho_under[j].col(i) -= state.noise_norm_sq[i] * opp_sums.col(i);
        }
    }
}

void step_coeffs_cnn(CoeffState& state, const ModelParams& params, const Dataset& dataset,
                     const Eigen::VectorXd& loss_derivs, double eta) {
    check_step_args(state, params, dataset, loss_derivs);
    cache_norms(state, dataset);

    const int n = dataset.n();
    const int m = params.width();
    const int q = params.q;
    const double scale = -eta / (static_cast<double>(n) * static_cast<double>(m));

    for (int j = 0; j < 2; ++j) {
        const double js = bank_sign(j);
        const Eigen::MatrixXd& bank = params.bank(j);
        const Eigen::VectorXd mu_dot = bank * dataset.mu;
        const Eigen::MatrixXd pre = bank * dataset.noise.transpose();  // m x n

        // y_i^2 = 1 in the gamma factor y_i * y_i ||mu||^2.
        Eigen::MatrixXd sig_prime(m, n);
        for (int r = 0; r < m; ++r)
            for (int i = 0; i < n; ++i)
                sig_prime(r, i) = act_prime(dataset.labels[i] * mu_dot[r], q);
        state.gamma.row(j) += (scale * state.mu_norm_sq) * (sig_prime * loss_derivs).transpose();

        for (int i = 0; i < n; ++i) {
            const double inv_deg = 1.0;
            const bool same_class = dataset.labels[i] == js;
            for (int r = 0; r < m; ++r) {
                const double u = scale * loss_derivs[i] * act_prime(pre(r, i), q) * inv_deg;
                if (same_class)
                    state.rho_bar[j](r, i) += state.noise_norm_sq[i] * u;
                else
                    state.rho_under[j](r, i) -= state.noise_norm_sq[i] * u;
            }
        }
    }
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd>
reconstruct_weights(const CoeffState& state, const Eigen::MatrixXd& w0_plus,
                    const Eigen::MatrixXd& w0_minus, const Eigen::VectorXd& mu,
                    const Eigen::MatrixXd& noise) {
    const double mu_norm_sq = mu.squaredNorm();
    const Eigen::VectorXd noise_norm_sq = noise.rowwise().squaredNorm();
    const Eigen::RowVectorXd mu_unit = mu.transpose() / mu_norm_sq;

    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> result(w0_plus, w0_minus);
    for (int j = 0; j < 2; ++j) {
        Eigen::MatrixXd& bank = (j == 0) ? result.first : result.second;
        const double js = bank_sign(j);
        const Eigen::MatrixXd rho = state.rho_bar[j] + state.rho_under[j];  // m x n
        bank += js * state.gamma.row(j).transpose() * mu_unit;
        bank += rho * noise_norm_sq.cwiseInverse().asDiagonal() * noise;
    }
    return result;
}

ProjectedCoeffs project_coeffs(const ModelParams& params, const ModelParams& params0,
                               const Eigen::VectorXd& mu, const Eigen::MatrixXd& noise) {
    const int n = static_cast<int>(noise.rows());
    const int d = static_cast<int>(mu.size());
    const int m = params.width();
    if (d <= n + 1)
        throw ConfigError("project_coeffs: requires d > n+1 for an independent basis");

    // Basis columns mu/||mu||^2, xi_i/||xi_i||^2 -- the decomposition's own scaling.
    Eigen::MatrixXd basis(d, n + 1);
    basis.col(0) = mu / mu.squaredNorm();
    for (int i = 0; i < n; ++i)
        basis.col(i + 1) = noise.row(i).transpose() / noise.row(i).squaredNorm();

    const Eigen::MatrixXd gram = basis.transpose() * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double lambda_min = eig.eigenvalues().minCoeff();
    const double lambda_max = eig.eigenvalues().maxCoeff();
    const double condition = (lambda_min > 0.0)
                                 ? lambda_max / lambda_min
                                 : std::numeric_limits<double>::infinity();
    if (!(condition < 1e12))
        throw DegenerateBasisError("project_coeffs: Gram condition number " +
                                   format_double(condition) + " exceeds 1e12");
    const Eigen::LDLT<Eigen::MatrixXd> solver(gram);

    ProjectedCoeffs out;
    out.gram_condition = condition;
    out.gamma_hat.resize(2, m);
    double worst = 0.0;
    for (int j = 0; j < 2; ++j) {
        const double js = bank_sign(j);
        const Eigen::MatrixXd delta =
            (params.bank(j) - params0.bank(j)).transpose();     // d x m
        const Eigen::MatrixXd coeffs = solver.solve(basis.transpose() * delta);  // (n+1) x m
        out.gamma_hat.row(j) = js * coeffs.row(0);
        out.rho_hat[j] = coeffs.bottomRows(n).transpose();      // m x n

        const Eigen::MatrixXd resid = delta - basis * coeffs;
        for (int r = 0; r < m; ++r) {
            const double denom = std::max(delta.col(r).norm(), 1e-300);
            worst = std::max(worst, resid.col(r).norm() / denom);
        }
    }
    out.max_rel_residual = worst;
    return out;
}

CoeffSummary summary(const CoeffState& state) {
    CoeffSummary s;
    s.max_gamma_plus = state.gamma.row(0).maxCoeff();
    s.max_gamma_minus = state.gamma.row(1).maxCoeff();
    for (int j = 0; j < 2; ++j) {
        const Eigen::MatrixXd net = state.rho_bar[j] + state.rho_under[j];
        s.max_abs_rho = std::max(s.max_abs_rho, net.cwiseAbs().maxCoeff());
    }
    return s;
}

double reconstruction_residual(const CoeffState& state, const ModelParams& params,
                               const ModelParams& params0, const Eigen::VectorXd& mu,
                               const Eigen::MatrixXd& noise) {
    const auto [hat_plus, hat_minus] =
        reconstruct_weights(state, params0.w_plus, params0.w_minus, mu, noise);
    const double err = std::sqrt((hat_plus - params.w_plus).squaredNorm() +
                                 (hat_minus - params.w_minus).squaredNorm());
    const double moved = std::sqrt((params.w_plus - params0.w_plus).squaredNorm() +
                                   (params.w_minus - params0.w_minus).squaredNorm());
    return err / std::max(moved, 1e-300);
}

std::string coeff_trace_rows(const CoeffState& state, int epoch) {
    std::ostringstream out;
    for (int j = 0; j < 2; ++j) {
        const int js = (j == 0) ? 1 : -1;
        for (int r = 0; r < state.width(); ++r) {
            out << format_int(epoch) << ',' << format_int(js) << ',' << format_int(r) << ','
                << format_double(state.gamma(j, r)) << ','
                << format_double(state.rho_bar[j].row(r).maxCoeff()) << ','
                << format_double(state.rho_under[j].row(r).minCoeff()) << '\n';
        }
    }
    return out.str();
}

} // namespace snmlab
