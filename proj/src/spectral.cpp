#include "switchheat/spectral.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include <json.hpp>

namespace switchheat::spectral {

namespace {

constexpr double kPi = std::numbers::pi;

void require_same_basis(const Basis& expected, const SpectralField& field,
                        const char* op) {
    if (!(field.basis == expected))
        throw config_error(std::string(op) + ": field basis does not match");
    if (field.coeffs.size() != expected.K)
        throw config_error(std::string(op) + ": coefficient count != K");
}

/// Entries <dn_m, dd_k> of the change matrix between the two sine families;
/// the frequencies (2m-1)/2 and k never coincide, so the denominator is
/// always nonzero.
double dn_dot_dd(int m, int k) {
    const double num = 8.0 * k;
    const double den = kPi * (double((2 * m - 1) * (2 * m - 1)) - 4.0 * double(k) * k);
    const double sign = ((m + k) % 2 == 0) ? -1.0 : 1.0;
    return sign * num / den;
}

} // namespace

Basis::Basis(BasisKind kind_, double L_, double D_, int K_)
    : kind(kind_), L(L_), D(D_), K(K_) {
    if (!(L > 0.0) || !std::isfinite(L))
        throw config_error("Basis: L must be positive and finite");
    if (!(D > 0.0) || !std::isfinite(D))
        throw config_error("Basis: D must be positive and finite");
    if (K < 1)
        throw config_error("Basis: K must be at least 1");
}

double Basis::eigenvalue(int k) const {
    if (k < 1 || k > K)
        throw std::invalid_argument("Basis::eigenvalue: mode index out of range");
    if (kind == BasisKind::dd) {
        const double w = double(k) * kPi / L;
        return D * w * w;
    }
    const double w = double(2 * k - 1) * kPi / (2.0 * L);
    return D * w * w;
}

double Basis::eval(int k, double x) const {
    if (k < 1 || k > K)
        throw std::invalid_argument("Basis::eval: mode index out of range");
    const double amp = std::sqrt(2.0 / L);
    if (kind == BasisKind::dd) return amp * std::sin(double(k) * kPi * x / L);
    return amp * std::sin(double(2 * k - 1) * kPi * x / (2.0 * L));
}

Eigen::ArrayXd Basis::eigenvalues() const {
    Eigen::ArrayXd out(K);
    for (int k = 1; k <= K; ++k) out[k - 1] = eigenvalue(k);
    return out;
}

void Params::validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(r0) || !positive(r1))
        throw config_error("Params: switching rates must be positive and finite");
    if (!positive(D) || !positive(L))
        throw config_error("Params: D and L must be positive and finite");
    if (!(b >= 0.0) || !std::isfinite(b))
        throw config_error("Params: b must be nonnegative and finite");
}

SpectralField decay_flow(const Basis& basis, double t, const SpectralField& field) {
    require_same_basis(basis, field, "decay_flow");
    if (!(t >= 0.0))
        throw std::invalid_argument("decay_flow: t must be nonnegative");
    if (t == 0.0) return field;
    SpectralField out{basis, (field.coeffs.array() * (-t * basis.eigenvalues()).exp()).matrix()};
    return out;
}

SpectralField ramp_flow(const Basis& basis, const RampData& ramp, double t,
                        const SpectralField& field) {
    require_same_basis(basis, field, "ramp_flow");
    if (ramp.c.size() != basis.K)
        throw config_error("ramp_flow: ramp is not in this basis");
    if (!(t >= 0.0))
        throw std::invalid_argument("ramp_flow: t must be nonnegative");
    if (t == 0.0) return field;
    Eigen::ArrayXd decay = (-t * basis.eigenvalues()).exp();
    SpectralField out{basis,
                      (ramp.c.array() + decay * (field.coeffs - ramp.c).array()).matrix()};
    return out;
}

RampData project_ramp(const Basis& basis, double b) {
    RampData ramp;
    ramp.b = b;
    ramp.c.resize(basis.K);
    for (int k = 1; k <= basis.K; ++k) {
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        if (basis.kind == BasisKind::dd) {
            ramp.c[k - 1] = sign * b * std::sqrt(2.0 * basis.L) / (double(k) * kPi);
        } else {
            const double q = double(2 * k - 1);
            ramp.c[k - 1] =
                sign * 4.0 * std::sqrt(2.0) * std::sqrt(basis.L) * b / (kPi * kPi * q * q);
        }
    }
    return ramp;
}

Eigen::MatrixXd basis_transfer(const Basis& from, const Basis& to) {
    if (from.kind == to.kind)
        throw config_error("basis_transfer: bases have the same kind");
    if (!from.same_box(to))
        throw config_error("basis_transfer: bases disagree on L, D, or K");
    const int K = from.K;
    Eigen::MatrixXd T(K, K);
    if (to.kind == BasisKind::dn) {
        for (int m = 1; m <= K; ++m)
            for (int k = 1; k <= K; ++k) T(m - 1, k - 1) = dn_dot_dd(m, k);
    } else {
        for (int m = 1; m <= K; ++m)
            for (int k = 1; k <= K; ++k) T(k - 1, m - 1) = dn_dot_dd(m, k);
    }
    return T;
}

double evaluate(const SpectralField& field, double x) {
    const Basis& basis = field.basis;
    if (!(x >= 0.0 && x <= basis.L))
        throw std::invalid_argument("evaluate: x outside [0, L]");
    double acc = 0.0;
    for (int k = 1; k <= basis.K; ++k) acc += field.coeffs[k - 1] * basis.eval(k, x);
    return acc;
}

Eigen::MatrixXd evaluation_matrix(const Basis& basis, int grid) {
    if (grid < 2) throw config_error("evaluation_matrix: grid must be at least 2");
    Eigen::MatrixXd M(grid - 1, basis.K);
    for (int j = 1; j < grid; ++j) {
        const double x = double(j) * basis.L / double(grid);
        for (int k = 1; k <= basis.K; ++k) M(j - 1, k - 1) = basis.eval(k, x);
    }
    return M;
}

Eigen::VectorXd interior_grid(double L, int grid) {
    if (grid < 2) throw config_error("interior_grid: grid must be at least 2");
    Eigen::VectorXd x(grid - 1);
    for (int j = 1; j < grid; ++j) x[j - 1] = double(j) * L / double(grid);
    return x;
}

std::string to_json(const SpectralField& field) {
    nlohmann::json j;
    j["basis"] = field.basis.kind == BasisKind::dd ? "dd" : "dn";
    j["L"] = field.basis.L;
    j["D"] = field.basis.D;
    j["K"] = field.basis.K;
    j["coeffs"] = std::vector<double>(field.coeffs.data(),
                                      field.coeffs.data() + field.coeffs.size());
    return j.dump();
}

hybrid::FlowPair<Coeffs> make_flow_pair(Example example, const Params& params, int K) {
    params.validate();
    Basis dd(BasisKind::dd, params.L, params.D, K);
    const Eigen::ArrayXd beta = dd.eigenvalues();
    const Coeffs ramp_c = project_ramp(dd, params.b).c;

    hybrid::FlowPair<Coeffs> pair;
    pair.norm = [](const Coeffs& v) { return v.norm(); };

    pair.phi0.apply = [beta, ramp_c](double t, const Coeffs& u) -> Coeffs {
        if (t == 0.0) return u;
        Eigen::ArrayXd decay = (-t * beta).exp();
        return (ramp_c.array() + decay * (u - ramp_c).array()).matrix();
    };
    const double beta1 = beta[0];
    pair.phi0.contraction_modulus = [beta1](double t) { return std::exp(-beta1 * t); };
    pair.phi0.modulus_rate = beta1;

    if (example == Example::dd) {
        pair.phi1.apply = [beta](double t, const Coeffs& u) -> Coeffs {
            if (t == 0.0) return u;
            return (u.array() * (-t * beta).exp()).matrix();
        };
        pair.phi1.contraction_modulus = [beta1](double t) { return std::exp(-beta1 * t); };
        pair.phi1.modulus_rate = beta1;
    } else {
        Basis dn(BasisKind::dn, params.L, params.D, K);
        const Eigen::ArrayXd alpha = dn.eigenvalues();
        const Eigen::MatrixXd T = basis_transfer(dd, dn);
        pair.phi1.apply = [alpha, T](double t, const Coeffs& u) -> Coeffs {
            if (t == 0.0) return u;
            Coeffs projected = T * u;
            projected.array() *= (-t * alpha).exp();
            return T.transpose() * projected;
        };
        const double alpha1 = alpha[0];
        pair.phi1.contraction_modulus = [alpha1](double t) { return std::exp(-alpha1 * t); };
        pair.phi1.modulus_rate = alpha1;
    }
    return pair;
}

HeatModel make_heat_model(Example example, const Params& params, int K) {
    HeatModel model;
    model.example = example;
    model.params = params;
    model.basis = Basis(BasisKind::dd, params.L, params.D, K);
    model.ramp = project_ramp(model.basis, params.b);
    model.flows = make_flow_pair(example, params, K);
    return model;
}

} // namespace switchheat::spectral
