#pragma once

#include <string>

#include <Eigen/Dense>

#include "switchheat/errors.hpp"
#include "switchheat/hybrid.hpp"

namespace switchheat::spectral {

using Coeffs = Eigen::VectorXd;

// ============================================================================
// Bases
// ============================================================================

/// Eigenbasis of the diffusion operator on [0, L] under one of the two
/// boundary configurations, truncated to K modes:
///  - dd: Dirichlet at both ends;    b_k = sqrt(2/L) sin(k pi x / L),
///        rates D (k pi / L)^2.
///  - dn: Dirichlet left, Neumann right;
///        a_k = sqrt(2/L) sin((2k-1) pi x / (2L)),
///        rates D (2k-1)^2 pi^2 / (4 L^2).
enum class BasisKind { dd, dn };

struct Basis {
    BasisKind kind = BasisKind::dd;
    double L = 1.0;
    double D = 1.0;
    int K = 64;

    Basis() = default;
    Basis(BasisKind kind_, double L_, double D_, int K_);

    /// Decay rate of mode k (1-based); strictly increasing in k.
    [[nodiscard]] double eigenvalue(int k) const;

    /// Mode k (1-based) evaluated at x in [0, L].
    [[nodiscard]] double eval(int k, double x) const;

    [[nodiscard]] Eigen::ArrayXd eigenvalues() const;

    [[nodiscard]] bool same_box(const Basis& other) const {
        return L == other.L && D == other.D && K == other.K;
    }
    friend bool operator==(const Basis&, const Basis&) = default;
};

/// A field as coefficients over a basis. The basis is orthonormal, so the
/// L2 norm is the coefficient norm.
struct SpectralField {
    Basis basis;
    Coeffs coeffs;

    [[nodiscard]] double norm() const { return coeffs.norm(); }
};

/// Coefficients of the boundary ramp c(x) = (b/L) x in a given basis, the
/// fixed point of the forcing flow.
struct RampData {
    double b = 0.0;
    Coeffs c;
};

// ============================================================================
// Operations
// ============================================================================

/// Homogeneous semigroup: multiply coefficient k by e^{-lambda_k t}.
[[nodiscard]] SpectralField decay_flow(const Basis& basis, double t,
                                       const SpectralField& field);

/// Inhomogeneous semigroup with the ramp as fixed point:
/// coefficient k maps to c_k + e^{-lambda_k t} (f_k - c_k).
[[nodiscard]] SpectralField ramp_flow(const Basis& basis, const RampData& ramp,
                                      double t, const SpectralField& field);

/// Closed-form ramp projection in either basis.
[[nodiscard]] RampData project_ramp(const Basis& basis, double b);

/// Cross-basis change matrix T with T(m, k) = <to_m, from_k>, in closed form.
/// The two sine families never share a frequency, so every entry is regular.
/// Requires equal L, D, K and different kinds.
[[nodiscard]] Eigen::MatrixXd basis_transfer(const Basis& from, const Basis& to);

/// Pointwise synthesis sum_k coeffs_k basis_k(x); x must lie in [0, L].
[[nodiscard]] double evaluate(const SpectralField& field, double x);

/// Row matrix of basis values at the interior grid x = j L / G, j = 1..G-1,
/// so fields evaluate on the whole grid as matrix * coeffs.
[[nodiscard]] Eigen::MatrixXd evaluation_matrix(const Basis& basis, int grid);

/// Interior grid abscissae matching evaluation_matrix.
[[nodiscard]] Eigen::VectorXd interior_grid(double L, int grid);

/// JSON snapshot {"basis": .., "L": .., "D": .., "K": .., "coeffs": [..]}.
[[nodiscard]] std::string to_json(const SpectralField& field);

// ============================================================================
// The two worked examples as engine flow pairs
// ============================================================================

/// Which boundary-switching example to build: dd alternates the right-end
/// value between b and 0 (Dirichlet both ways); dn alternates between value
/// b and an insulating (Neumann) condition.
enum class Example { dd, dn };

/// Physical parameters shared by the examples and their closed forms.
struct Params {
    double r0 = 1.0; ///< switching rate out of the forcing phase
    double r1 = 1.0; ///< switching rate out of the relaxation phase
    double D = 1.0;  ///< diffusivity
    double L = 1.0;  ///< domain length
    double b = 1.0;  ///< boundary concentration during forcing

    void validate() const;
    [[nodiscard]] double occupancy() const { return r0 / (r0 + r1); }
};

/// A ready-to-run example: the engine flow pair plus the structures needed
/// to interpret its state. Engine coefficients always live in the dd basis;
/// the dn example conjugates its relaxation flow through the basis-transfer
/// matrix, since the forcing flow's fixed point is exact in the dd basis.
struct HeatModel {
    Example example = Example::dd;
    Params params;
    Basis basis;    ///< engine basis (kind dd)
    RampData ramp;  ///< forcing fixed point in the engine basis
    hybrid::FlowPair<Coeffs> flows;

    [[nodiscard]] SpectralField field(const Coeffs& coeffs) const {
        return {basis, coeffs};
    }
    [[nodiscard]] Coeffs zero() const { return Coeffs::Zero(basis.K); }
};

[[nodiscard]] hybrid::FlowPair<Coeffs> make_flow_pair(Example example,
                                                      const Params& params, int K);

[[nodiscard]] HeatModel make_heat_model(Example example, const Params& params, int K);

} // namespace switchheat::spectral
