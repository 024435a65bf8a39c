#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "bpl/loops.hpp"
#include "oracles.hpp"

using namespace bpl;

namespace {

const ModelParams kRef = ModelParams::reference();
const ModelParams kDp = ModelParams::diabolic_reference();
constexpr double kPi = std::numbers::pi;

LoopSpec around(ParamPoint c, double r, int steps = 2000) {
    LoopSpec s;
    s.center = c;
    s.radiusLambda = r;
    s.radiusOmega = r;
    s.steps = steps;
    return s;
}

double distance_to(const Mat2& a, const Mat2& b) { return (a - b).max_abs(); }

const Mat2 kSwapPlusMinus{0.0, kI, -kI, 0.0};

// Follows the two roots of the characteristic polynomial around the loop by
// nearest-neighbour continuation on a fine grid and reports whether the
// starting root 0 ends on the other root.
bool oracle_exchanges(const ModelParams& params, const LoopSpec& spec) {
    const int n = 20000 * spec.windings;
    auto point_at = [&](int k) {
        double t = 2.0 * kPi * k / 20000.0;
        if (spec.orientation == Orientation::CW) t = -t;
        return ParamPoint{spec.center.lambda + spec.radiusLambda * std::cos(t),
                          spec.center.omega + spec.radiusOmega * std::sin(t)};
    };
    const auto start = test::characteristic_roots(hamiltonian(params, point_at(0)));
    Complex e = start[0];
    for (int k = 1; k <= n; ++k) {
        const auto r = test::characteristic_roots(hamiltonian(params, point_at(k)));
        e = std::abs(r[0] - e) <= std::abs(r[1] - e) ? r[0] : r[1];
    }
    return std::abs(e - start[1]) < std::abs(e - start[0]);
}

} // namespace

TEST(MakeLoop, FourStepsHitCardinalPoints) {
    LoopSpec s = around({0.0, 0.25}, 1.0, 4);
    s.radiusOmega = 2.0;
    const auto pts = make_loop(s);
    ASSERT_EQ(pts.size(), 5u);
    const ParamPoint expected[] = {{1.0, 0.25}, {0.0, 2.25}, {-1.0, 0.25}, {0.0, -1.75}, {1.0, 0.25}};
    for (int k = 0; k < 5; ++k) {
        EXPECT_NEAR(pts[k].lambda, expected[k].lambda, 1e-15);
        EXPECT_NEAR(pts[k].omega, expected[k].omega, 1e-15);
    }
    EXPECT_EQ(pts.front(), pts.back());
}

TEST(MakeLoop, WindingsAndOrientation) {
    LoopSpec s = around({0.3, -0.1}, 0.2, 7);
    const auto once = make_loop(s);
    s.windings = 2;
    const auto twice = make_loop(s);
    ASSERT_EQ(twice.size(), 15u);
    for (int k = 0; k < 8; ++k) {
        EXPECT_EQ(twice[k], once[k]);
        EXPECT_EQ(twice[k + 7], once[k]);
    }
    s.windings = 1;
    s.orientation = Orientation::CW;
    const auto cw = make_loop(s);
    ASSERT_EQ(cw.size(), once.size());
    for (std::size_t k = 0; k < cw.size(); ++k) EXPECT_EQ(cw[k], once[once.size() - 1 - k]);
}

TEST(MakeLoop, RejectsBadSpecs) {
    auto kind_of = [](LoopSpec s) {
        try {
            make_loop(s);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::NoConvergence;
    };
    LoopSpec s = around({0.0, 0.0}, 0.1, 3);
    EXPECT_EQ(kind_of(s), ErrorKind::BadSpec);
    s = around({0.0, 0.0}, 0.0, 100);
    EXPECT_EQ(kind_of(s), ErrorKind::BadSpec);
    s = around({0.0, 0.0}, 0.1, 100);
    s.windings = 0;
    EXPECT_EQ(kind_of(s), ErrorKind::BadSpec);
    s = around({std::nan(""), 0.0}, 0.1, 100);
    EXPECT_EQ(kind_of(s), ErrorKind::BadSpec);
    EXPECT_THROW(monodromy(kRef, around({1.0, 1.0}, 0.1, 15)), Error);
}

TEST(Monodromy, ContractibleLoopIsIdentity) {
    const auto m = monodromy(kRef, around({1.0, 1.0}, 0.1));
    EXPECT_EQ(m.permutation, Permutation::Identity);
    EXPECT_LT(distance_to(m.matrix, Mat2::identity()), 1e-6);
    for (int j = 0; j < 2; ++j) {
        EXPECT_LT(std::abs(m.phaseFactors[j] - 1.0), 1e-6);
        EXPECT_NEAR(m.geometricPhases[j], 0.0, 1e-6);
    }
    EXPECT_EQ(classify_pattern(m.matrix), Pattern::Restored);
}

TEST(Monodromy, EpLoopExchangesWithQuarterPhases) {
    const LoopSpec s = around({0.0, 0.25}, 0.1);
    const auto m = monodromy(kRef, s);
    EXPECT_EQ(m.permutation, Permutation::Swap);
    EXPECT_TRUE(oracle_exchanges(kRef, s));
    EXPECT_LT(std::abs(m.matrix.trace()), 1e-6);
    EXPECT_LT(std::abs(m.matrix.det() + 1.0), 1e-6);
    EXPECT_LT(m.residualOffDiagonal, 1e-6);
    for (int j = 0; j < 2; ++j) EXPECT_LT(std::abs(std::abs(m.phaseFactors[j].imag()) - 1.0), 1e-6);
    EXPECT_LT(std::abs(m.phaseFactors[0] + m.phaseFactors[1]), 1e-6);
    EXPECT_EQ(classify_pattern(m.matrix), Pattern::Exchanged);
}

TEST(Monodromy, WindingPowers) {
    LoopSpec s = around({0.0, 0.25}, 0.1);
    const Mat2 once = monodromy(kRef, s).matrix;
    s.windings = 2;
    const Mat2 twice = monodromy(kRef, s).matrix;
    s.windings = 3;
    const Mat2 thrice = monodromy(kRef, s).matrix;
    EXPECT_LT(distance_to(twice, Mat2::identity()), 1e-6);
    EXPECT_LT(distance_to(twice, once * once), 1e-6);
    EXPECT_LT(distance_to(thrice, once * once * once), 1e-6);
    EXPECT_FALSE(oracle_exchanges(kRef, {.center = {0.0, 0.25}, .radiusLambda = 0.1, .radiusOmega = 0.1,
                                         .windings = 2}));
}

TEST(Monodromy, ReversedLoopIsInverse) {
    LoopSpec s = around({0.0, 0.25}, 0.1);
    const auto ccw = monodromy(kRef, s);
    s.orientation = Orientation::CW;
    const auto cw = monodromy(kRef, s);
    EXPECT_LT(distance_to(cw.matrix * ccw.matrix, Mat2::identity()), 1e-6);
    EXPECT_LT(distance_to(cw.matrix, ccw.matrix.inverse()), 1e-6);
    const auto both = compose(ccw, cw);
    EXPECT_LT(distance_to(both.matrix, Mat2::identity()), 1e-6);
}

TEST(Monodromy, DeformationInvariance) {
    const auto base = monodromy(kRef, around({0.0, 0.25}, 0.1));
    const auto small = monodromy(kRef, around({0.0, 0.25}, 0.05));
    LoopSpec ellipse = around({0.02, 0.26}, 0.15);
    ellipse.radiusOmega = 0.06;
    const auto squashed = monodromy(kRef, ellipse);
    // same base-point-independent data: pattern, trace, det
    for (const auto* m : {&small, &squashed}) {
        EXPECT_EQ(classify_pattern(m->matrix), Pattern::Exchanged);
        EXPECT_LT(std::abs(m->matrix.trace() - base.matrix.trace()), 1e-6);
        EXPECT_LT(std::abs(m->matrix.det() - base.matrix.det()), 1e-6);
    }
    // same base point: identical matrix
    LoopSpec shifted = around({0.0, 0.25}, 0.1);
    shifted.center = {-0.05, 0.25};
    shifted.radiusLambda = 0.15;
    EXPECT_LT(distance(make_loop(shifted).front(), make_loop(around({0.0, 0.25}, 0.1)).front()), 1e-15);
    EXPECT_LT(distance_to(monodromy(kRef, shifted).matrix, base.matrix), 1e-6);
}

TEST(Monodromy, StepDoublingStability) {
    for (const ParamPoint c : {ParamPoint{0.0, 0.25}, ParamPoint{1.0, 1.0}}) {
        const auto coarse = monodromy(kRef, around(c, 0.1, 2000));
        const auto fine = monodromy(kRef, around(c, 0.1, 4000));
        EXPECT_LT(distance_to(coarse.matrix, fine.matrix), 1e-6);
    }
}

TEST(Monodromy, BiorthogonalGaugeIsFourthOrder) {
    LoopSpec s = around({0.0, 0.25}, 0.1);
    const auto once = monodromy(kRef, s, Gauge::Biorthogonal);
    EXPECT_EQ(once.permutation, Permutation::Swap);
    EXPECT_LT(std::abs(once.matrix.det() - 1.0), 1e-6);
    EXPECT_EQ(classify_pattern(once.matrix), Pattern::ExchangedFourthOrder);
    EXPECT_TRUE(distance_to(once.matrix, Mat2{0.0, 1.0, -1.0, 0.0}) < 1e-6 ||
                distance_to(once.matrix, Mat2{0.0, -1.0, 1.0, 0.0}) < 1e-6);
    s.windings = 2;
    EXPECT_EQ(classify_pattern(monodromy(kRef, s, Gauge::Biorthogonal).matrix), Pattern::SignFlip);
    s.windings = 4;
    EXPECT_EQ(classify_pattern(monodromy(kRef, s, Gauge::Biorthogonal).matrix), Pattern::Restored);
}

TEST(Monodromy, DiabolicLoopFlipsSign) {
    for (Gauge g : {Gauge::Regular, Gauge::Biorthogonal}) {
        const auto m = monodromy(kDp, around({0.0, 0.0}, 0.1), g);
        EXPECT_EQ(m.permutation, Permutation::Identity);
        EXPECT_LT(distance_to(m.matrix, Mat2{-1.0, 0.0, 0.0, -1.0}), 1e-6);
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(m.geometricPhases[j]), kPi, 1e-6);
    }
}

TEST(Monodromy, PropertyOneEpEnclosed) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int k = 0; k < 25; ++k) {
        ModelParams p{u(rng) - 0.5, 0.5 + u(rng), u(rng) - 0.5, -0.5 - u(rng), 0.2 + u(rng), u(rng) * 0.1};
        const double wcr = critical_coupling(p);
        const ParamPoint ep = ep_locations(p)[k % 2];
        LoopSpec s;
        s.center = {ep.lambda + 0.1 * wcr * (u(rng) - 0.5), ep.omega + 0.1 * wcr * (u(rng) - 0.5)};
        s.radiusOmega = (0.3 + 0.4 * u(rng)) * wcr;
        s.radiusLambda = 2.0 * s.radiusOmega / std::abs(p.b1 - p.b2) * (0.7 + 0.6 * u(rng));
        s.orientation = u(rng) < 0.5 ? Orientation::CCW : Orientation::CW;
        const auto m = monodromy(p, s);
        EXPECT_EQ(classify_pattern(m.matrix), Pattern::Exchanged) << "sample " << k;
        EXPECT_EQ(m.permutation == Permutation::Swap, oracle_exchanges(p, s)) << "sample " << k;
        ++checked;
    }
    EXPECT_EQ(checked, 25);
}

TEST(Monodromy, PropertyContractibleLoops) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 25; ++k) {
        ModelParams p{u(rng) - 0.5, 0.5 + u(rng), u(rng) - 0.5, -0.5 - u(rng), 0.2 + u(rng), u(rng) * 0.1};
        const double wcr = critical_coupling(p);
        // a loop well above the upper EP
        LoopSpec s;
        s.center = {crossing_lambda(p) + u(rng) - 0.5, wcr * (2.5 + u(rng))};
        s.radiusOmega = 0.5 * wcr;
        s.radiusLambda = 0.1 + 0.3 * u(rng);
        const auto m = monodromy(p, s);
        EXPECT_EQ(classify_pattern(m.matrix), Pattern::Restored) << "sample " << k;
    }
}

TEST(Compose, IdentityAndSelf) {
    const LoopSpec s = around({0.0, 0.25}, 0.1);
    const auto m = monodromy(kRef, s);
    const auto id = identity_monodromy(m.basePoint);
    EXPECT_LT(distance_to(compose(m, id).matrix, m.matrix), 1e-15);
    EXPECT_LT(distance_to(compose(id, m).matrix, m.matrix), 1e-15);
    const auto twice = compose(m, m);
    EXPECT_EQ(twice.permutation, Permutation::Identity);
    EXPECT_LT(distance_to(twice.matrix, Mat2::identity()), 1e-6);
}

TEST(Compose, MismatchIsRejected) {
    const auto m = monodromy(kRef, around({0.0, 0.25}, 0.1));
    const auto other = monodromy(kRef, around({1.0, 1.0}, 0.1));
    const auto bio = monodromy(kRef, around({0.0, 0.25}, 0.1), Gauge::Biorthogonal);
    for (const auto* x : {&other, &bio}) {
        try {
            compose(m, *x);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::GaugeMismatch);
        }
    }
}

TEST(Compose, FromMatrixReadsPermutationAndPhases) {
    const auto r = monodromy_from_matrix(kSwapPlusMinus, {0.0, 0.0}, Gauge::Regular);
    EXPECT_EQ(r.permutation, Permutation::Swap);
    EXPECT_LT(std::abs(r.phaseFactors[0] - Complex(0.0, -1.0)), 1e-15);
    EXPECT_LT(std::abs(r.phaseFactors[1] - Complex(0.0, 1.0)), 1e-15);
    EXPECT_NEAR(r.geometricPhases[0], 0.0, 1e-15);
    const auto flip = monodromy_from_matrix(Mat2{-1.0, 0.0, 0.0, -1.0}, {0.0, 0.0}, Gauge::Regular);
    EXPECT_DOUBLE_EQ(flip.geometricPhases[0], kPi);
    EXPECT_DOUBLE_EQ(flip.geometricPhases[1], kPi);
}

TEST(GeometricPhase, ValuesAndErrors) {
    const auto contractible = trace_path(kRef, make_loop(around({1.0, 1.0}, 0.1)));
    EXPECT_NEAR(geometric_phase(contractible, 0), 0.0, 1e-6);
    const auto dp = trace_path(kDp, make_loop(around({0.0, 0.0}, 0.1)));
    EXPECT_NEAR(std::abs(geometric_phase(dp, 1)), kPi, 1e-6);

    LoopSpec twice = around({0.0, 0.25}, 0.1);
    twice.windings = 2;
    EXPECT_NEAR(geometric_phase(trace_path(kRef, make_loop(twice)), 0), 0.0, 1e-6);

    const auto once = trace_path(kRef, make_loop(around({0.0, 0.25}, 0.1)));
    try {
        geometric_phase(once, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BranchNotClosed);
    }
    EXPECT_THROW(geometric_phase(contractible, 2), Error);
}

TEST(Presets, AllPassOnDefaults) {
    for (Preset p : {Preset::EpOnce, Preset::EpTwice, Preset::EpReversed}) {
        const auto run = run_preset(kRef, p);
        EXPECT_TRUE(run.verdict.pass) << to_string(p) << ": " << run.verdict.observed;
    }
    const auto dp = run_preset(kDp, Preset::DpOnce);
    EXPECT_TRUE(dp.verdict.pass) << dp.verdict.observed;
}

TEST(Presets, LoopGeometry) {
    const auto once = preset_loop(kRef, Preset::EpOnce);
    EXPECT_DOUBLE_EQ(once.center.lambda, 0.0);
    EXPECT_DOUBLE_EQ(once.center.omega, 0.25);
    EXPECT_DOUBLE_EQ(once.radiusOmega, 0.1);
    EXPECT_DOUBLE_EQ(once.radiusLambda, 0.1);
    EXPECT_EQ(preset_loop(kRef, Preset::EpTwice).windings, 2);
    EXPECT_EQ(preset_loop(kRef, Preset::EpReversed).orientation, Orientation::CW);
    EXPECT_EQ(parse_preset("EpOnce"), Preset::EpOnce);
    EXPECT_FALSE(parse_preset("eponce").has_value());
}

TEST(Presets, PreconditionsAndBiorthogonalVerdict) {
    auto kind_of = [](const ModelParams& p, Preset preset) {
        try {
            preset_loop(p, preset);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::NoConvergence;
    };
    EXPECT_EQ(kind_of(kRef, Preset::DpOnce), ErrorKind::PresetPreconditionViolated);
    EXPECT_EQ(kind_of(kDp, Preset::EpOnce), ErrorKind::PresetPreconditionViolated);
    ModelParams parallel = kRef;
    parallel.b2 = parallel.b1;
    EXPECT_EQ(kind_of(parallel, Preset::EpOnce), ErrorKind::PresetPreconditionViolated);

    PresetOptions opts;
    opts.gauge = Gauge::Biorthogonal;
    const auto run = run_preset(kRef, Preset::EpTwice, opts);
    EXPECT_FALSE(run.verdict.pass);
    EXPECT_EQ(run.verdict.observed, "sign-flip");
}
