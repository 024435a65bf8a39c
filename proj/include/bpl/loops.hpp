// loops.hpp: closed loops in the (λ, ω) plane and the monodromy of the
// eigenbranches transported around them.
//
// The monodromy matrix is M[i][j] = u_i · w_j, the c-product of the
// c-normalized start vector of branch i with the end vector of branch j.
// Two transport gauges are offered:
//
//   Gauge::Biorthogonal  the end vectors are the c-parallel transported,
//                        c-normalized vectors.  The c-norm fixes each vector
//                        up to sign, so this gauge is rigid; an EP loop gives
//                        M^2 = -I.
//   Gauge::Regular       each branch is additionally carried with the factor
//                        sqrt(E_j - E_other) continued along the loop and
//                        divided by its start value.  These vectors stay
//                        finite through the exceptional point, where the two
//                        eigenvectors become collinear as ψ1 = ±iψ2; an EP
//                        loop gives ψ1 -> -iψ2, ψ2 -> +iψ1 and M^2 = I.
//
// Around a diabolic point the level gap does not wind, so both gauges agree
// and give M = -I.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bpl/error.hpp"
#include "bpl/model.hpp"
#include "bpl/tracker.hpp"

namespace bpl {

enum class Orientation { CCW, CW };

struct LoopSpec {
    ParamPoint center;
    double radiusLambda = 0.1;
    double radiusOmega = 0.1;
    int steps = 2000;
    Orientation orientation = Orientation::CCW;
    int windings = 1;
};

inline constexpr int kMinLoopSteps = 4;
inline constexpr int kMinMonodromySteps = 16;
inline constexpr double kMonodromyTolerance = 1e-6;

// Ellipse sampled at steps*windings + 1 angles; first and last point coincide
// exactly, and the CW list is the CCW list reversed.
inline std::vector<ParamPoint> make_loop(const LoopSpec& spec) {
    if (!is_finite(spec.center) || !std::isfinite(spec.radiusLambda) ||
        !std::isfinite(spec.radiusOmega)) {
        throw Error(ErrorKind::BadSpec, "loop has non-finite geometry");
    }
    if (!(spec.radiusLambda > 0.0) || !(spec.radiusOmega > 0.0)) {
        throw Error(ErrorKind::BadSpec, "loop radii must be positive");
    }
    if (spec.steps < kMinLoopSteps) {
        throw Error(ErrorKind::BadSpec, "loop needs at least " + std::to_string(kMinLoopSteps) + " steps");
    }
    if (spec.windings < 1) throw Error(ErrorKind::BadSpec, "windings must be >= 1");

    const std::size_t total = static_cast<std::size_t>(spec.steps) * spec.windings;
    std::vector<ParamPoint> points;
    points.reserve(total + 1);
    for (std::size_t k = 0; k <= total; ++k) {
        std::size_t index = k % spec.steps;
        if (spec.orientation == Orientation::CW) index = (spec.steps - index) % spec.steps;
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(index) / spec.steps;
        points.push_back({spec.center.lambda + spec.radiusLambda * std::cos(theta),
                          spec.center.omega + spec.radiusOmega * std::sin(theta)});
    }
    return points;
}

enum class Gauge { Regular, Biorthogonal };

constexpr std::string_view to_string(Gauge g) noexcept {
    return g == Gauge::Regular ? "regular" : "biorthogonal";
}

struct MonodromyResult {
    Mat2 matrix;
    Permutation permutation = Permutation::Identity;
    std::array<Complex, 2> phaseFactors{Complex{1.0}, Complex{1.0}};
    // (-π, π]; for a permuting loop, half the phase of the diagonal of M^2.
    std::array<double, 2> geometricPhases{0.0, 0.0};
    double residualOffDiagonal = 0.0; // largest entry that the permutation says is zero
    ParamPoint basePoint;
    Gauge gauge = Gauge::Regular;
    std::size_t refinedPoints = 0;
};

// Maps std::arg's [-π, π] onto (-π, π].
inline double principal_phase(double phase) noexcept {
    return phase <= -std::numbers::pi ? phase + 2.0 * std::numbers::pi : phase;
}

inline MonodromyResult monodromy_from_matrix(const Mat2& m, const ParamPoint& base, Gauge gauge) {
    MonodromyResult r;
    r.matrix = m;
    r.basePoint = base;
    r.gauge = gauge;
    const double diag = std::abs(m(0, 0)) + std::abs(m(1, 1));
    const double off = std::abs(m(0, 1)) + std::abs(m(1, 0));
    if (diag >= off) {
        r.permutation = Permutation::Identity;
        r.residualOffDiagonal = std::max(std::abs(m(0, 1)), std::abs(m(1, 0)));
        for (int j = 0; j < 2; ++j) {
            r.phaseFactors[j] = m(j, j) / std::abs(m(j, j));
            r.geometricPhases[j] = principal_phase(std::arg(m(j, j)));
        }
    } else {
        r.permutation = Permutation::Swap;
        r.residualOffDiagonal = std::max(std::abs(m(0, 0)), std::abs(m(1, 1)));
        const Mat2 sq = m * m;
        for (int j = 0; j < 2; ++j) {
            r.phaseFactors[j] = m(1 - j, j) / std::abs(m(1 - j, j));
            r.geometricPhases[j] = 0.5 * principal_phase(std::arg(sq(j, j)));
        }
    }
    return r;
}

inline MonodromyResult monodromy_from_path(const TrackedPath& tracked, Gauge gauge = Gauge::Regular) {
    if (tracked.size() < 2) throw Error(ErrorKind::BadSpec, "tracked path is empty");
    const BranchPair& start = tracked.branches.front();
    const BranchPair& end = tracked.branches.back();
    if (start[0].selfOrthogonal || start[1].selfOrthogonal) {
        throw Error(ErrorKind::DegenerateBasis, "start branches are self-orthogonal");
    }
    Mat2 m;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = c_product(start[i].vec, end[j].vec);
    if (gauge == Gauge::Regular) {
        const auto& r0 = tracked.gapRoots.front();
        const auto& r1 = tracked.gapRoots.back();
        for (int j = 0; j < 2; ++j) {
            const Complex carried = r1[j] / r0[j];
            for (int i = 0; i < 2; ++i) m(i, j) *= carried;
        }
    }
    MonodromyResult r = monodromy_from_matrix(m, tracked.points.front(), gauge);
    r.refinedPoints = tracked.size();
    return r;
}

inline MonodromyResult monodromy(const ModelParams& params, const LoopSpec& spec,
                                 Gauge gauge = Gauge::Regular, const TrackerOptions& opts = {}) {
    if (spec.steps < kMinMonodromySteps) {
        throw Error(ErrorKind::BadSpec,
                    "monodromy loops need at least " + std::to_string(kMinMonodromySteps) + " steps");
    }
    const TrackedPath tracked = trace_path(params, make_loop(spec), opts);
    return monodromy_from_path(tracked, gauge);
}

// Apply m1, then m2.
inline MonodromyResult compose(const MonodromyResult& m1, const MonodromyResult& m2) {
    if (distance(m1.basePoint, m2.basePoint) > 1e-12 || m1.gauge != m2.gauge) {
        throw Error(ErrorKind::GaugeMismatch, "monodromies have different base points or gauges");
    }
    MonodromyResult r = monodromy_from_matrix(m2.matrix * m1.matrix, m1.basePoint, m1.gauge);
    r.refinedPoints = m1.refinedPoints + m2.refinedPoints;
    return r;
}

inline MonodromyResult identity_monodromy(const ParamPoint& base, Gauge gauge = Gauge::Regular) {
    return monodromy_from_matrix(Mat2::identity(), base, gauge);
}

// Holonomy phase of a branch that returns to itself.
inline double geometric_phase(const TrackedPath& tracked, int branchIndex,
                              Gauge gauge = Gauge::Regular) {
    if (branchIndex != 0 && branchIndex != 1) throw Error(ErrorKind::BadSpec, "branch index must be 0 or 1");
    const MonodromyResult r = monodromy_from_path(tracked, gauge);
    if (r.permutation != Permutation::Identity) {
        throw Error(ErrorKind::BranchNotClosed, "the path exchanges the branches");
    }
    return r.geometricPhases[branchIndex];
}

// Gauge-invariant reading of a monodromy matrix.
enum class Pattern { Restored, SignFlip, Exchanged, ExchangedFourthOrder, Other };

constexpr std::string_view to_string(Pattern p) noexcept {
    switch (p) {
    case Pattern::Restored: return "restored";
    case Pattern::SignFlip: return "sign-flip";
    case Pattern::Exchanged: return "exchanged";
    case Pattern::ExchangedFourthOrder: return "exchanged-fourth-order";
    case Pattern::Other: return "other";
    }
    return "other";
}

inline Pattern classify_pattern(const Mat2& m, double tol = kMonodromyTolerance) {
    if ((m - Mat2::identity()).max_abs() < tol) return Pattern::Restored;
    if ((m + Mat2::identity()).max_abs() < tol) return Pattern::SignFlip;
    const bool swap = std::max(std::abs(m(0, 0)), std::abs(m(1, 1))) < tol;
    if (swap && std::abs(m.trace()) < tol) {
        if (std::abs(m.det() + 1.0) < tol) return Pattern::Exchanged;
        if (std::abs(m.det() - 1.0) < tol) return Pattern::ExchangedFourthOrder;
    }
    return Pattern::Other;
}

enum class Preset { EpOnce, EpTwice, EpReversed, DpOnce };

constexpr std::string_view to_string(Preset p) noexcept {
    switch (p) {
    case Preset::EpOnce: return "EpOnce";
    case Preset::EpTwice: return "EpTwice";
    case Preset::EpReversed: return "EpReversed";
    case Preset::DpOnce: return "DpOnce";
    }
    return "";
}

inline std::optional<Preset> parse_preset(std::string_view name) {
    for (Preset p : {Preset::EpOnce, Preset::EpTwice, Preset::EpReversed, Preset::DpOnce}) {
        if (name == to_string(p)) return p;
    }
    return std::nullopt;
}

struct PresetOptions {
    int steps = 2000;
    // ω-radius of the loop; the λ-radius is scaled so both axes move the
    // detuning e1 - e2 by the same amount as 2ω.  Defaults: 0.4 |ω_cr| around
    // an EP, 0.1 around the DP.
    std::optional<double> radius;
    Gauge gauge = Gauge::Regular;
    TrackerOptions tracker;
};

struct Verdict {
    std::string expected;
    std::string observed;
    bool pass = false;
};

struct PresetRun {
    Preset preset = Preset::EpOnce;
    LoopSpec loop;
    MonodromyResult result;
    Verdict verdict;
};

inline LoopSpec preset_loop(const ModelParams& params, Preset preset, const PresetOptions& opts = {}) {
    if (params.b1 == params.b2) {
        throw Error(ErrorKind::PresetPreconditionViolated, "presets need crossing levels (b1 != b2)");
    }
    const double lambdaCr = crossing_lambda(params);
    const double widthGap = std::abs(params.gamma1 - params.gamma2);
    const bool equalWidths = widthGap <= 1e-12 * std::max({1.0, std::abs(params.gamma1), std::abs(params.gamma2)});

    LoopSpec spec;
    spec.steps = opts.steps;
    double radius = 0.0;
    if (preset == Preset::DpOnce) {
        if (!equalWidths) {
            throw Error(ErrorKind::PresetPreconditionViolated, "DpOnce needs gamma1 == gamma2");
        }
        spec.center = {lambdaCr, 0.0};
        radius = opts.radius.value_or(0.1);
    } else {
        if (equalWidths) {
            throw Error(ErrorKind::PresetPreconditionViolated,
                        std::string(to_string(preset)) + " needs gamma1 != gamma2");
        }
        spec.center = ep_locations(params)[0];
        radius = opts.radius.value_or(0.4 * critical_coupling(params));
    }
    spec.radiusOmega = radius;
    spec.radiusLambda = 2.0 * radius / std::abs(params.b1 - params.b2);
    spec.windings = preset == Preset::EpTwice ? 2 : 1;
    spec.orientation = preset == Preset::EpReversed ? Orientation::CW : Orientation::CCW;
    return spec;
}

inline PresetRun run_preset(const ModelParams& params, Preset preset, const PresetOptions& opts = {}) {
    PresetRun run;
    run.preset = preset;
    run.loop = preset_loop(params, preset, opts);
    run.result = monodromy(params, run.loop, opts.gauge, opts.tracker);
    const Mat2& m = run.result.matrix;
    const double tol = kMonodromyTolerance;

    switch (preset) {
    case Preset::EpOnce:
        run.verdict.expected = to_string(Pattern::Exchanged);
        run.verdict.observed = to_string(classify_pattern(m));
        break;
    case Preset::EpTwice:
        run.verdict.expected = to_string(Pattern::Restored);
        run.verdict.observed = to_string(classify_pattern(m));
        break;
    case Preset::EpReversed: {
        LoopSpec forward = run.loop;
        forward.orientation = Orientation::CCW;
        const MonodromyResult ccw = monodromy(params, forward, opts.gauge, opts.tracker);
        const Mat2 roundTrip = m * ccw.matrix;
        run.verdict.expected = "inverse";
        run.verdict.observed = (roundTrip - Mat2::identity()).max_abs() < tol
                                   ? "inverse"
                                   : std::string(to_string(classify_pattern(m)));
        break;
    }
    case Preset::DpOnce: {
        run.verdict.expected = to_string(Pattern::SignFlip);
        const auto& g = run.result.geometricPhases;
        const bool berry = std::abs(std::abs(g[0]) - std::numbers::pi) < 1e-3 &&
                           std::abs(std::abs(g[1]) - std::numbers::pi) < 1e-3;
        const Pattern p = classify_pattern(m);
        run.verdict.observed = p == Pattern::SignFlip && !berry ? "sign-flip-without-pi-phase"
                                                                 : std::string(to_string(p));
        break;
    }
    }
    run.verdict.pass = run.verdict.expected == run.verdict.observed;
    return run;
}

} // namespace bpl
