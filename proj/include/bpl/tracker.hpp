// tracker.hpp: direct 2x2 eigensolver for complex symmetric matrices and
// adiabatic continuation of both eigenbranches along a parameter path.
//
// Eigenvectors are normalized with the unconjugated (c-)product, v·v = 1, so
// eigenvectors of distinct eigenvalues are c-orthogonal.  Close to an
// exceptional point the c-norm of any eigenvector goes to zero; once
// |v·v| < kSelfOrthogonalThreshold for the Euclidean-normalized vector the
// branch keeps the Euclidean normalization and is flagged selfOrthogonal.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bpl/error.hpp"
#include "bpl/model.hpp"

namespace bpl {

using Vec2 = std::array<Complex, 2>;

// v·w without conjugation.
inline Complex c_product(const Vec2& v, const Vec2& w) noexcept {
    return v[0] * w[0] + v[1] * w[1];
}

inline double euclidean_norm(const Vec2& v) noexcept {
    return std::sqrt(std::norm(v[0]) + std::norm(v[1]));
}

inline Vec2 scaled(Complex s, const Vec2& v) noexcept { return {s * v[0], s * v[1]}; }

inline constexpr double kSelfOrthogonalThreshold = 1e-8;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kOrthogonalStepThreshold = 1e-12;

struct Branch {
    Complex energy;
    Vec2 vec{};
    Complex cNorm{1.0, 0.0};
    bool selfOrthogonal = false;
};

using BranchPair = std::array<Branch, 2>;

enum class Permutation { Identity, Swap };

constexpr const char* to_string(Permutation p) noexcept {
    return p == Permutation::Identity ? "identity" : "swap";
}

// |v·v| / (v*·v); 1 for real vectors, 0 for the self-orthogonal EP vector.
inline double self_orthogonality_measure(const Vec2& v) noexcept {
    const double n2 = std::norm(v[0]) + std::norm(v[1]);
    if (n2 == 0.0) return 0.0;
    return std::abs(c_product(v, v)) / n2;
}

inline double self_orthogonality_measure(const Branch& b) noexcept {
    return self_orthogonality_measure(b.vec);
}

// Distance of the two eigenvectors from the collinear form v1 = ±i v2: each
// vector takes the phase of its c-normalization, is scaled to unit Euclidean
// length, and the better sign is reported.  Goes to 0 at the exceptional point.
inline double collinearity_defect(const Branch& first, const Branch& second) {
    const auto aligned = [](const Vec2& v) {
        const Complex c = c_product(v, v);
        const Vec2 w = c == 0.0 ? v : scaled(1.0 / std::sqrt(c), v);
        return scaled(1.0 / euclidean_norm(w), w);
    };
    const Vec2 v1 = aligned(first.vec);
    const Vec2 v2 = aligned(second.vec);
    double best = std::numeric_limits<double>::infinity();
    for (double s : {1.0, -1.0}) {
        const Vec2 d{v1[0] - s * kI * v2[0], v1[1] - s * kI * v2[1]};
        best = std::min(best, euclidean_norm(d));
    }
    return best;
}

namespace detail {

// Sign convention: the largest component has Re > 0 (Im > 0 if purely imaginary).
inline Vec2 canonical_sign(Vec2 v) noexcept {
    const Complex& big = std::abs(v[0]) >= std::abs(v[1]) ? v[0] : v[1];
    const bool flip = big.real() < 0.0 || (big.real() == 0.0 && big.imag() < 0.0);
    if (flip) v = {-v[0], -v[1]};
    return v;
}

inline Branch make_branch(Complex energy, Vec2 v) {
    const double n = euclidean_norm(v);
    v = scaled(1.0 / n, v);
    Branch b;
    b.energy = energy;
    if (std::abs(c_product(v, v)) < kSelfOrthogonalThreshold) {
        const Complex& big = std::abs(v[0]) >= std::abs(v[1]) ? v[0] : v[1];
        b.vec = scaled(std::conj(big) / std::abs(big), v);
        b.selfOrthogonal = true;
    } else {
        b.vec = canonical_sign(scaled(1.0 / std::sqrt(c_product(v, v)), v));
    }
    b.cNorm = c_product(b.vec, b.vec);
    return b;
}

// Larger-norm column of adj(H - E I), or a basis vector when H = E I.
inline Vec2 null_vector(const Mat2& h, Complex energy, int fallbackAxis) {
    const Complex p = h(0, 0) - energy, q = h(0, 1);
    const Complex r = h(1, 0), s = h(1, 1) - energy;
    const Vec2 c1{s, -r};
    const Vec2 c2{-q, p};
    const double n1 = euclidean_norm(c1), n2 = euclidean_norm(c2);
    if (std::max(n1, n2) == 0.0) {
        return fallbackAxis == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    }
    return n1 >= n2 ? c1 : c2;
}

} // namespace detail

// Energies from the characteristic quadratic E^2 - tr E + det = 0: the
// larger-magnitude root directly, the other via the product of roots.  The
// first branch carries the +√disc root.
inline BranchPair solve_eigen(const Mat2& h) {
    if (!h.is_finite()) throw Error(ErrorKind::NonFinite, "matrix has non-finite entries");
    const double scale = std::max(1.0, h.max_abs());
    if (std::abs(h(0, 1) - h(1, 0)) > kSymmetryTolerance * scale) {
        throw Error(ErrorKind::NotSymmetric, "off-diagonal entries differ");
    }

    const Complex tr = h.trace();
    const Complex det = h.det();
    const Complex diff = h(0, 0) - h(1, 1);
    const Complex root = std::sqrt(diff * diff + 4.0 * h(0, 1) * h(1, 0));

    Complex plus, minus;
    if (std::abs(tr + root) >= std::abs(tr - root)) {
        plus = 0.5 * (tr + root);
        minus = plus != 0.0 ? det / plus : Complex{0.0};
    } else {
        minus = 0.5 * (tr - root);
        plus = minus != 0.0 ? det / minus : Complex{0.0};
    }

    return {detail::make_branch(plus, detail::null_vector(h, plus, 0)),
            detail::make_branch(minus, detail::null_vector(h, minus, 1))};
}

// Pairing of `next` with `prev` minimizing the summed complex-energy
// distance; ties are broken by the larger summed |c-overlap|.
inline Permutation match_branches(const BranchPair& prev, const BranchPair& next) {
    const double keep = std::abs(prev[0].energy - next[0].energy) +
                        std::abs(prev[1].energy - next[1].energy);
    const double swap = std::abs(prev[0].energy - next[1].energy) +
                        std::abs(prev[1].energy - next[0].energy);
    const double scale = std::max({1.0, std::abs(prev[0].energy), std::abs(prev[1].energy)});
    if (std::abs(keep - swap) >= 1e-14 * scale) {
        return keep < swap ? Permutation::Identity : Permutation::Swap;
    }

    const double keepOverlap = std::abs(c_product(prev[0].vec, next[0].vec)) +
                               std::abs(c_product(prev[1].vec, next[1].vec));
    const double swapOverlap = std::abs(c_product(prev[0].vec, next[1].vec)) +
                               std::abs(c_product(prev[1].vec, next[0].vec));
    if (std::abs(keepOverlap - swapOverlap) <= 1e-12 * std::max(keepOverlap, swapOverlap)) {
        throw Error(ErrorKind::AmbiguousMatch, "energy and overlap totals both tie");
    }
    return keepOverlap > swapOverlap ? Permutation::Identity : Permutation::Swap;
}

inline BranchPair permuted(const BranchPair& pair, Permutation p) {
    return p == Permutation::Identity ? pair : BranchPair{pair[1], pair[0]};
}

struct TransportedBranch {
    Branch branch;
    Complex factor;
};

// Multiplies next.vec by the unit factor that makes prev.vec·next.vec real
// and positive.
inline TransportedBranch transport_phase_with_factor(const Branch& prev, const Branch& next) {
    if (next.selfOrthogonal) {
        throw Error(ErrorKind::OrthogonalStep, "target branch is self-orthogonal");
    }
    const Complex overlap = c_product(prev.vec, next.vec);
    const double mag = std::abs(overlap);
    if (!(mag >= kOrthogonalStepThreshold)) {
        throw Error(ErrorKind::OrthogonalStep, "consecutive eigenvectors are c-orthogonal");
    }
    const Complex factor = std::conj(overlap) / mag;
    Branch out = next;
    out.vec = scaled(factor, next.vec);
    out.cNorm = c_product(out.vec, out.vec);
    return {out, factor};
}

inline Branch transport_phase(const Branch& prev, const Branch& next) {
    return transport_phase_with_factor(prev, next).branch;
}

struct TrackerOptions {
    double epGuard = 1e-6; // on |F|
    double maxJump = 0.1;  // energy step relative to the level gap
    int maxDepth = 20;
};

struct TransportStep {
    Permutation permutation = Permutation::Identity;
    std::array<Complex, 2> phase{Complex{1.0}, Complex{1.0}};
    int depth = 0;
};

// One entry of points/branches/gapRoots per refined path point; transportLog
// has one entry per step, so it is one shorter.  gapRoots[k][j] is the
// square root of E_j - E_other continued along the path.
struct TrackedPath {
    std::vector<ParamPoint> points;
    std::vector<BranchPair> branches;
    std::vector<TransportStep> transportLog;
    std::vector<std::array<Complex, 2>> gapRoots;

    std::size_t size() const noexcept { return points.size(); }
};

namespace detail {

inline Complex continue_root(Complex value, Complex previousRoot) {
    const Complex r = std::sqrt(value);
    return std::abs(r - previousRoot) <= std::abs(r + previousRoot) ? r : -r;
}

inline std::string describe(const ParamPoint& p) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << p.lambda << ", " << p.omega << ")";
    return os.str();
}

class PathTracer {
public:
    PathTracer(const ModelParams& params, const TrackerOptions& opts, TrackedPath& out)
        : params_(params), opts_(opts), out_(out) {}

    void start(const ParamPoint& p) {
        if (std::abs(discriminant(params_, p)) < opts_.epGuard) {
            throw Error(ErrorKind::PathThroughEP, "path starts at the branch point " + describe(p));
        }
        const BranchPair b = solve_eigen(hamiltonian(params_, p));
        if (b[0].selfOrthogonal || b[1].selfOrthogonal) {
            throw Error(ErrorKind::PathThroughEP, "path starts at the branch point " + describe(p));
        }
        out_.points.push_back(p);
        out_.branches.push_back(b);
        out_.gapRoots.push_back(
            {std::sqrt(b[0].energy - b[1].energy), std::sqrt(b[1].energy - b[0].energy)});
    }

    void advance(const ParamPoint& to) { advance(to, 0); }

private:
    struct Step {
        BranchPair branches;
        TransportStep log;
        std::array<Complex, 2> gapRoots;
    };

    // false: the step must be refined.
    bool try_step(const ParamPoint& to, int depth, Step& step) const {
        if (std::abs(discriminant(params_, to)) < opts_.epGuard) return false;
        const BranchPair& prev = out_.branches.back();
        const BranchPair solved = solve_eigen(hamiltonian(params_, to));
        if (solved[0].selfOrthogonal || solved[1].selfOrthogonal) return false;

        Permutation perm;
        try {
            perm = match_branches(prev, solved);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::AmbiguousMatch) return false;
            throw;
        }
        const BranchPair next = permuted(solved, perm);

        const double gap = std::max(std::abs(prev[0].energy - prev[1].energy),
                                    std::abs(next[0].energy - next[1].energy));
        const double jump = std::max(std::abs(next[0].energy - prev[0].energy),
                                     std::abs(next[1].energy - prev[1].energy));
        if (jump > opts_.maxJump * gap) return false;

        step.log.permutation = perm;
        step.log.depth = depth;
        for (int j = 0; j < 2; ++j) {
            TransportedBranch t;
            try {
                t = transport_phase_with_factor(prev[j], next[j]);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::OrthogonalStep) return false;
                throw;
            }
            // Back onto the c-normalized representative nearest the
            // transported vector, so the c-norm stays exactly 1.
            Complex root = std::sqrt(t.branch.cNorm);
            if (std::abs(root - 1.0) > std::abs(root + 1.0)) root = -root;
            t.branch.vec = scaled(1.0 / root, t.branch.vec);
            t.branch.cNorm = c_product(t.branch.vec, t.branch.vec);
            step.branches[j] = t.branch;
            step.log.phase[j] = t.factor / root;
        }
        const auto& roots = out_.gapRoots.back();
        step.gapRoots = {continue_root(next[0].energy - next[1].energy, roots[0]),
                         continue_root(next[1].energy - next[0].energy, roots[1])};
        return true;
    }

    void advance(const ParamPoint& to, int depth) {
        if (!is_finite(to)) throw Error(ErrorKind::NonFinite, "non-finite path point");
        Step step;
        if (try_step(to, depth, step)) {
            out_.points.push_back(to);
            out_.branches.push_back(step.branches);
            out_.transportLog.push_back(step.log);
            out_.gapRoots.push_back(step.gapRoots);
            return;
        }
        if (depth >= opts_.maxDepth) {
            throw Error(ErrorKind::PathThroughEP,
                        "refinement depth exhausted approaching " + describe(to));
        }
        const ParamPoint from = out_.points.back();
        const ParamPoint mid{0.5 * (from.lambda + to.lambda), 0.5 * (from.omega + to.omega)};
        advance(mid, depth + 1);
        advance(to, depth + 1);
    }

    const ModelParams& params_;
    const TrackerOptions& opts_;
    TrackedPath& out_;
};

} // namespace detail

// Follows both eigenbranches along `path`, inserting midpoints wherever a
// step is ambiguous, too close to the branch point or too large.
inline TrackedPath trace_path(const ModelParams& params, const std::vector<ParamPoint>& path,
                              const TrackerOptions& opts = {}) {
    if (path.size() < 2) throw Error(ErrorKind::BadSpec, "path needs at least two points");
    for (std::size_t k = 0; k < path.size(); ++k) {
        if (!is_finite(path[k])) throw Error(ErrorKind::NonFinite, "non-finite path point");
        if (k > 0 && path[k] == path[k - 1]) {
            throw Error(ErrorKind::BadSpec, "consecutive path points coincide");
        }
    }

    TrackedPath out;
    out.points.reserve(path.size());
    out.branches.reserve(path.size());
    out.gapRoots.reserve(path.size());
    out.transportLog.reserve(path.size());

    detail::PathTracer tracer(params, opts, out);
    tracer.start(path.front());
    for (std::size_t k = 1; k < path.size(); ++k) tracer.advance(path[k]);
    return out;
}

} // namespace bpl
