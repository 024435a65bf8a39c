// model.hpp: two-level non-Hermitian Hamiltonian family, its discriminant,
// closed-form spectrum, regime classification and analytic exceptional points.
//
// The family is
//
//     H(λ, ω) = [ e1(λ) - i γ1/2        ω        ]
//               [       ω         e2(λ) - i γ2/2 ]
//
// with affine level positions e_k(λ) = a_k + b_k λ and λ-independent widths
// and coupling.  The two eigenvalues coalesce where the discriminant
//
//     F = ((e1 - e2) - i (γ1 - γ2)/2)^2 + 4 ω^2
//
// vanishes.  For real ω this happens at λ = λ_cr and ω = ±|γ1 - γ2|/4.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include "bpl/error.hpp"

namespace bpl {

using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};

struct ModelParams {
    double a1 = 0.0;
    double b1 = 1.0;
    double a2 = 0.0;
    double b2 = -1.0;
    double gamma1 = 1.0;
    double gamma2 = 0.0;

    double e1(double lambda) const noexcept { return a1 + b1 * lambda; }
    double e2(double lambda) const noexcept { return a2 + b2 * lambda; }

    // γ1 = 1, γ2 = 0, e1 = λ, e2 = -λ: EPs at (0, ±0.25).
    static ModelParams reference() noexcept { return {}; }

    // Equal widths: the degeneracy at (λ_cr, 0) is a diabolic point.
    static ModelParams diabolic_reference() noexcept {
        return {0.0, 1.0, 0.0, -1.0, 0.5, 0.5};
    }
};

struct ParamPoint {
    double lambda = 0.0;
    double omega = 0.0;

    friend bool operator==(const ParamPoint&, const ParamPoint&) = default;
};

inline double distance(const ParamPoint& p, const ParamPoint& q) noexcept {
    return std::hypot(p.lambda - q.lambda, p.omega - q.omega);
}

inline bool is_finite(const ParamPoint& p) noexcept {
    return std::isfinite(p.lambda) && std::isfinite(p.omega);
}

// Dense 2x2 complex matrix, row-major.
class Mat2 {
public:
    constexpr Mat2() = default;
    constexpr Mat2(Complex m00, Complex m01, Complex m10, Complex m11)
        : m_{{{m00, m01}, {m10, m11}}} {}

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    constexpr Complex& operator()(int i, int j) { return m_[i][j]; }
    constexpr const Complex& operator()(int i, int j) const { return m_[i][j]; }

    Complex trace() const { return m_[0][0] + m_[1][1]; }
    Complex det() const { return m_[0][0] * m_[1][1] - m_[0][1] * m_[1][0]; }

    Mat2 inverse() const {
        const Complex d = det();
        return {m_[1][1] / d, -m_[0][1] / d, -m_[1][0] / d, m_[0][0] / d};
    }

    double max_abs() const {
        double r = 0.0;
        for (const auto& row : m_)
            for (const auto& x : row) r = std::max(r, std::abs(x));
        return r;
    }

    bool is_finite() const {
        for (const auto& row : m_)
            for (const auto& x : row)
                if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
        return true;
    }

    friend Mat2 operator*(const Mat2& x, const Mat2& y) {
        Mat2 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r(i, j) = x(i, 0) * y(0, j) + x(i, 1) * y(1, j);
        return r;
    }
    friend Mat2 operator+(const Mat2& x, const Mat2& y) {
        return {x(0, 0) + y(0, 0), x(0, 1) + y(0, 1), x(1, 0) + y(1, 0), x(1, 1) + y(1, 1)};
    }
    friend Mat2 operator-(const Mat2& x, const Mat2& y) {
        return {x(0, 0) - y(0, 0), x(0, 1) - y(0, 1), x(1, 0) - y(1, 0), x(1, 1) - y(1, 1)};
    }
    friend Mat2 operator*(Complex s, const Mat2& x) {
        return {s * x(0, 0), s * x(0, 1), s * x(1, 0), s * x(1, 1)};
    }

private:
    std::array<std::array<Complex, 2>, 2> m_{};
};

// E = position - iΓ/2 for both members of the pair.
struct ComplexEnergyPair {
    Complex ePlus;
    Complex eMinus;
};

enum class Regime { Overcritical, Critical, Subcritical };

constexpr std::string_view to_string(Regime r) noexcept {
    switch (r) {
    case Regime::Overcritical: return "overcritical";
    case Regime::Critical: return "critical";
    case Regime::Subcritical: return "subcritical";
    }
    return "unknown";
}

// Short tags used in sweep tables.
constexpr std::string_view short_tag(Regime r) noexcept {
    switch (r) {
    case Regime::Overcritical: return "over";
    case Regime::Critical: return "crit";
    case Regime::Subcritical: return "sub";
    }
    return "?";
}

inline constexpr double kDefaultRegimeTolerance = 1e-10;

inline Mat2 hamiltonian(const ModelParams& params, const ParamPoint& p) {
    const Complex h11{params.e1(p.lambda), -0.5 * params.gamma1};
    const Complex h22{params.e2(p.lambda), -0.5 * params.gamma2};
    return {h11, p.omega, p.omega, h22};
}

inline Complex discriminant(const ModelParams& params, const ParamPoint& p) {
    const Complex detuning{params.e1(p.lambda) - params.e2(p.lambda),
                           -0.5 * (params.gamma1 - params.gamma2)};
    return detuning * detuning + 4.0 * p.omega * p.omega;
}

// (1/2) trace ± (1/2) √F on the principal branch of the square root.
inline ComplexEnergyPair eigenvalues_closed_form(const ModelParams& params, const ParamPoint& p) {
    const Complex halfTrace =
        0.5 * Complex{params.e1(p.lambda) + params.e2(p.lambda),
                      -0.5 * (params.gamma1 + params.gamma2)};
    const Complex halfRoot = 0.5 * std::sqrt(discriminant(params, p));
    return {halfTrace + halfRoot, halfTrace - halfRoot};
}

inline double crossing_lambda(const ModelParams& params) {
    if (params.b1 == params.b2) {
        throw Error(ErrorKind::ParallelLevels,
                    "levels have equal slope b1 = b2, no finite crossing");
    }
    return (params.a2 - params.a1) / (params.b1 - params.b2);
}

// |γ1 - γ2| / 4
inline double critical_coupling(const ModelParams& params) noexcept {
    return 0.25 * std::abs(params.gamma1 - params.gamma2);
}

// Positive-ω point first.
inline std::array<ParamPoint, 2> ep_locations(const ModelParams& params) {
    const double lambdaCr = crossing_lambda(params);
    if (params.gamma1 == params.gamma2) {
        throw Error(ErrorKind::DegenerateToDP,
                    "equal widths: the exceptional points merge into the diabolic point");
    }
    const double omegaCr = critical_coupling(params);
    return {ParamPoint{lambdaCr, omegaCr}, ParamPoint{lambdaCr, -omegaCr}};
}

// Sign of Re F at the crossing, 4ω² - (γ1-γ2)²/4.
inline Regime classify_regime(const ModelParams& params, double omega,
                              double tolerance = kDefaultRegimeTolerance) {
    (void)crossing_lambda(params);
    const double dg = params.gamma1 - params.gamma2;
    const double realF = 4.0 * omega * omega - 0.25 * dg * dg;
    if (realF > tolerance) return Regime::Overcritical;
    if (realF < -tolerance) return Regime::Subcritical;
    return Regime::Critical;
}

// Regime tag from the sign of Re F at an arbitrary point of the plane.
inline Regime regime_at(const ModelParams& params, const ParamPoint& p,
                        double tolerance = kDefaultRegimeTolerance) {
    const double realF = discriminant(params, p).real();
    if (realF > tolerance) return Regime::Overcritical;
    if (realF < -tolerance) return Regime::Subcritical;
    return Regime::Critical;
}

inline constexpr double kStagnationFloor = 1e-12;

struct EpSearchOptions {
    int maxIterations = 100;
    double tolerance = 1e-14; // on |F|
};

struct EpSearchResult {
    ParamPoint point;
    double residual = 0.0; // |F| at point
    int iterations = 0;
};

// Damped Newton on (Re F, Im F) = 0 over the real (λ, ω) plane, which
// monotonically decreases |F|^2.  Throws NoConvergence after the iteration cap.
inline EpSearchResult find_ep_numeric(const ModelParams& params, ParamPoint seed,
                                      const EpSearchOptions& opts = {}) {
    if (!is_finite(seed)) throw Error(ErrorKind::NonFinite, "EP search seed is not finite");
    const double db = params.b1 - params.b2;
    ParamPoint p = seed;
    Complex f = discriminant(params, p);
    for (int it = 0; it < opts.maxIterations; ++it) {
        if (std::abs(f) <= opts.tolerance) return {p, std::abs(f), it};

        const Complex detuning{params.e1(p.lambda) - params.e2(p.lambda),
                               -0.5 * (params.gamma1 - params.gamma2)};
        const Complex dLambda = 2.0 * detuning * db;
        const Complex dOmega = 8.0 * p.omega;
        // [Re dλ  Re dω] [x]   [-Re F]
        // [Im dλ  Im dω] [y] = [-Im F]
        const double j00 = dLambda.real(), j01 = dOmega.real();
        const double j10 = dLambda.imag(), j11 = dOmega.imag();
        const double jdet = j00 * j11 - j01 * j10;
        double stepL, stepW;
        if (std::abs(jdet) > 1e-300) {
            stepL = (-f.real() * j11 + f.imag() * j01) / jdet;
            stepW = (-f.imag() * j00 + f.real() * j10) / jdet;
        } else {
            // gradient of |F|^2 / 2
            stepL = -(f.real() * j00 + f.imag() * j10);
            stepW = -(f.real() * j01 + f.imag() * j11);
        }

        double t = 1.0;
        ParamPoint trial{p.lambda + stepL, p.omega + stepW};
        Complex ft = discriminant(params, trial);
        for (int halving = 0; halving < 60 && !(std::abs(ft) < std::abs(f)); ++halving) {
            t *= 0.5;
            trial = {p.lambda + t * stepL, p.omega + t * stepW};
            ft = discriminant(params, trial);
        }
        if (!(std::abs(ft) < std::abs(f))) {
            // stagnated: accept only if already at the rounding floor
            if (std::abs(f) <= kStagnationFloor) return {p, std::abs(f), it};
            break;
        }
        p = trial;
        f = ft;
    }
    if (std::abs(f) <= opts.tolerance) return {p, std::abs(f), opts.maxIterations};
    throw Error(ErrorKind::NoConvergence,
                "|F| = " + std::to_string(std::abs(f)) + " after " +
                    std::to_string(opts.maxIterations) + " iterations");
}

} // namespace bpl
