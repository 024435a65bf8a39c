// cli.hpp: configuration parsing and command implementations behind the
// branchpoint-lab executable.
//
// Exit codes: 0 success (or preset verdict passed), 1 verdict failed or other
// runtime failure, 2 configuration/usage error, 3 precondition violated,
// 4 no convergence, 5 path through the branch point.

#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bpl/error.hpp"
#include "bpl/io.hpp"
#include "bpl/loops.hpp"
#include "bpl/model.hpp"
#include "bpl/tracker.hpp"

namespace bpl::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitPrecondition = 3,
    kExitNoConvergence = 4,
    kExitPathThroughEP = 5,
};

inline int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::ParallelLevels:
    case ErrorKind::DegenerateToDP:
    case ErrorKind::PresetPreconditionViolated: return kExitPrecondition;
    case ErrorKind::NoConvergence: return kExitNoConvergence;
    case ErrorKind::PathThroughEP: return kExitPathThroughEP;
    case ErrorKind::BadSpec: return kExitConfig;
    default: return kExitFailure;
    }
}

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Logging

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

inline LogLevel log_level_from_env() {
    const char* v = std::getenv("BPL_LOG");
    if (v == nullptr) return LogLevel::Error;
    const std::string_view s(v);
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    return LogLevel::Error;
}

class Logger {
public:
    Logger(std::ostream& err, LogLevel level) : err_(err), level_(level) {}

    void error(std::string_view msg) const { write(LogLevel::Error, "error", msg); }
    void info(std::string_view msg) const { write(LogLevel::Info, "info", msg); }
    void debug(std::string_view msg) const { write(LogLevel::Debug, "debug", msg); }

private:
    void write(LogLevel at, std::string_view tag, std::string_view msg) const {
        if (static_cast<int>(at) <= static_cast<int>(level_)) {
            err_ << "branchpoint-lab [" << tag << "] " << msg << '\n';
        }
    }

    std::ostream& err_;
    LogLevel level_;
};

// ---------------------------------------------------------------------------
// Configuration

enum class Format { Csv, Json };

struct SegmentSpec {
    ParamPoint from{-1.0, 0.5};
    ParamPoint to{1.0, 0.5};
    int steps = 200;
};

struct SweepGrid {
    double lambdaMin = -1.0;
    double lambdaMax = 1.0;
    double omegaMin = 0.0;
    double omegaMax = 0.5;
    int nLambda = 41;
    int nOmega = 41;
};

struct Config {
    ModelParams model;
    bool modelGiven = false;
    TrackerOptions tracker;

    std::vector<double> classifyOmegas{0.1, 0.25, 0.5};
    double regimeTolerance = kDefaultRegimeTolerance;

    ParamPoint findEpSeed{0.1, 0.3};
    EpSearchOptions findEp;

    std::optional<SegmentSpec> traceSegment;
    std::optional<LoopSpec> traceLoop;

    std::optional<std::string> preset;
    std::optional<double> presetRadius;
    int presetSteps = 2000;
    std::optional<LoopSpec> monodromyLoop;
    Gauge gauge = Gauge::Regular;

    SweepGrid sweep;

    std::string outputDir = ".";
    Format format = Format::Csv;
};

namespace detail {

// Reads members of one JSON object; finish() rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) {
        if (!j_.contains(key)) return false;
        seen_.insert(key);
        return true;
    }

    const Json& child(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string where(const std::string& key) const { return path_ + "." + key; }

    void number(const std::string& key, double& target) {
        if (has(key)) target = as_number(j_.at(key), where(key));
    }

    void integer(const std::string& key, int& target) {
        if (!has(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
        target = v.get<int>();
    }

    void string(const std::string& key, std::string& target) {
        if (!has(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        target = v.get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
        }
    }

    static double as_number(const Json& v, const std::string& where) {
        if (!v.is_number()) throw ConfigError(where + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(where + ": must be finite");
        return x;
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline ParamPoint read_point(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    ParamPoint p;
    r.number("lambda", p.lambda);
    r.number("omega", p.omega);
    r.finish();
    return p;
}

inline Orientation read_orientation(const std::string& s, const std::string& path) {
    if (s == "ccw") return Orientation::CCW;
    if (s == "cw") return Orientation::CW;
    throw ConfigError(path + ": orientation must be \"ccw\" or \"cw\"");
}

inline LoopSpec read_loop(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    LoopSpec spec;
    if (r.has("center")) spec.center = read_point(r.child("center"), r.where("center"));
    r.number("radiusLambda", spec.radiusLambda);
    r.number("radiusOmega", spec.radiusOmega);
    r.integer("steps", spec.steps);
    r.integer("windings", spec.windings);
    std::string orientation = "ccw";
    r.string("orientation", orientation);
    spec.orientation = read_orientation(orientation, r.where("orientation"));
    r.finish();
    if (!(spec.radiusLambda > 0.0) || !(spec.radiusOmega > 0.0)) throw ConfigError(path + ": radii must be positive");
    if (spec.steps < kMinMonodromySteps) throw ConfigError(path + ".steps: must be >= 16");
    if (spec.windings < 1) throw ConfigError(path + ".windings: must be >= 1");
    return spec;
}

inline void read_model(const Json& j, Config& cfg) {
    ObjectReader r(j, "model");
    r.number("a1", cfg.model.a1);
    r.number("b1", cfg.model.b1);
    r.number("a2", cfg.model.a2);
    r.number("b2", cfg.model.b2);
    r.number("gamma1", cfg.model.gamma1);
    r.number("gamma2", cfg.model.gamma2);
    r.finish();
    if (cfg.model.gamma1 < 0.0 || cfg.model.gamma2 < 0.0) throw ConfigError("model: widths must be >= 0");
    cfg.modelGiven = true;
}

inline void read_tracker(const Json& j, Config& cfg) {
    ObjectReader r(j, "tracker");
    r.number("epGuard", cfg.tracker.epGuard);
    r.number("maxJump", cfg.tracker.maxJump);
    r.integer("maxDepth", cfg.tracker.maxDepth);
    r.finish();
    if (!(cfg.tracker.epGuard >= 0.0)) throw ConfigError("tracker.epGuard: must be >= 0");
    if (!(cfg.tracker.maxJump > 0.0)) throw ConfigError("tracker.maxJump: must be > 0");
    if (cfg.tracker.maxDepth < 0) throw ConfigError("tracker.maxDepth: must be >= 0");
}

inline void read_classify(const Json& j, Config& cfg) {
    ObjectReader r(j, "classify");
    if (r.has("omegas")) {
        const Json& arr = r.child("omegas");
        if (!arr.is_array()) throw ConfigError("classify.omegas: expected an array");
        cfg.classifyOmegas.clear();
        for (const auto& v : arr) cfg.classifyOmegas.push_back(ObjectReader::as_number(v, "classify.omegas"));
    }
    r.number("tolerance", cfg.regimeTolerance);
    r.finish();
}

inline void read_find_ep(const Json& j, Config& cfg) {
    ObjectReader r(j, "findEp");
    if (r.has("seed")) cfg.findEpSeed = read_point(r.child("seed"), "findEp.seed");
    r.integer("maxIterations", cfg.findEp.maxIterations);
    r.number("tolerance", cfg.findEp.tolerance);
    r.finish();
    if (cfg.findEp.maxIterations < 1) throw ConfigError("findEp.maxIterations: must be >= 1");
}

inline void read_trace(const Json& j, Config& cfg) {
    ObjectReader r(j, "trace");
    if (r.has("segment")) {
        ObjectReader s(r.child("segment"), "trace.segment");
        SegmentSpec seg;
        if (s.has("from")) seg.from = read_point(s.child("from"), "trace.segment.from");
        if (s.has("to")) seg.to = read_point(s.child("to"), "trace.segment.to");
        s.integer("steps", seg.steps);
        s.finish();
        if (seg.steps < 1) throw ConfigError("trace.segment.steps: must be >= 1");
        if (seg.from == seg.to) throw ConfigError("trace.segment: from and to coincide");
        cfg.traceSegment = seg;
    }
    if (r.has("loop")) cfg.traceLoop = read_loop(r.child("loop"), "trace.loop");
    r.finish();
    if (cfg.traceSegment && cfg.traceLoop) throw ConfigError("trace: give either segment or loop, not both");
}

inline Gauge read_gauge(const std::string& s) {
    if (s == "regular") return Gauge::Regular;
    if (s == "biorthogonal") return Gauge::Biorthogonal;
    throw ConfigError("monodromy.gauge: must be \"regular\" or \"biorthogonal\"");
}

inline void read_monodromy(const Json& j, Config& cfg) {
    ObjectReader r(j, "monodromy");
    if (r.has("preset")) {
        std::string name;
        r.string("preset", name);
        cfg.preset = name;
    }
    if (r.has("radius")) {
        double radius = 0.0;
        r.number("radius", radius);
        if (!(radius > 0.0)) throw ConfigError("monodromy.radius: must be > 0");
        cfg.presetRadius = radius;
    }
    r.integer("steps", cfg.presetSteps);
    if (cfg.presetSteps < kMinMonodromySteps) throw ConfigError("monodromy.steps: must be >= 16");
    if (r.has("loop")) cfg.monodromyLoop = read_loop(r.child("loop"), "monodromy.loop");
    std::string gauge(to_string(cfg.gauge));
    r.string("gauge", gauge);
    cfg.gauge = read_gauge(gauge);
    r.finish();
}

inline void read_sweep(const Json& j, Config& cfg) {
    ObjectReader r(j, "sweep");
    r.number("lambdaMin", cfg.sweep.lambdaMin);
    r.number("lambdaMax", cfg.sweep.lambdaMax);
    r.number("omegaMin", cfg.sweep.omegaMin);
    r.number("omegaMax", cfg.sweep.omegaMax);
    r.integer("nLambda", cfg.sweep.nLambda);
    r.integer("nOmega", cfg.sweep.nOmega);
    r.number("tolerance", cfg.regimeTolerance);
    r.finish();
    if (!(cfg.sweep.lambdaMin < cfg.sweep.lambdaMax)) throw ConfigError("sweep: lambdaMin must be < lambdaMax");
    if (!(cfg.sweep.omegaMin < cfg.sweep.omegaMax)) throw ConfigError("sweep: omegaMin must be < omegaMax");
    if (cfg.sweep.nLambda < 2 || cfg.sweep.nOmega < 2) throw ConfigError("sweep: nLambda and nOmega must be >= 2");
}

inline Format read_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw ConfigError("output.format: must be \"csv\" or \"json\"");
}

inline void read_output(const Json& j, Config& cfg) {
    ObjectReader r(j, "output");
    r.string("directory", cfg.outputDir);
    std::string format = "csv";
    r.string("format", format);
    cfg.format = read_format(format);
    r.finish();
}

} // namespace detail

inline Config parse_config(const Json& j) {
    Config cfg;
    detail::ObjectReader r(j, "config");
    if (r.has("model")) detail::read_model(r.child("model"), cfg);
    if (r.has("tracker")) detail::read_tracker(r.child("tracker"), cfg);
    if (r.has("classify")) detail::read_classify(r.child("classify"), cfg);
    if (r.has("findEp")) detail::read_find_ep(r.child("findEp"), cfg);
    if (r.has("trace")) detail::read_trace(r.child("trace"), cfg);
    if (r.has("monodromy")) detail::read_monodromy(r.child("monodromy"), cfg);
    if (r.has("sweep")) detail::read_sweep(r.child("sweep"), cfg);
    if (r.has("output")) detail::read_output(r.child("output"), cfg);
    r.finish();
    return cfg;
}

inline Config parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

inline Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// JSON helpers

inline Json to_json(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

inline Json to_json(const ParamPoint& p) { return Json{{"lambda", p.lambda}, {"omega", p.omega}}; }

inline Json to_json(const Mat2& m) {
    return Json::array({Json::array({to_json(m(0, 0)), to_json(m(0, 1))}),
                        Json::array({to_json(m(1, 0)), to_json(m(1, 1))})});
}

inline Json to_json(const LoopSpec& s) {
    return Json{{"center", to_json(s.center)},
                {"radiusLambda", s.radiusLambda},
                {"radiusOmega", s.radiusOmega},
                {"steps", s.steps},
                {"orientation", s.orientation == Orientation::CCW ? "ccw" : "cw"},
                {"windings", s.windings}};
}

inline Json to_json(const MonodromyResult& r) {
    return Json{{"gauge", std::string(to_string(r.gauge))},
                {"basePoint", to_json(r.basePoint)},
                {"matrix", to_json(r.matrix)},
                {"permutation", to_string(r.permutation)},
                {"phaseFactors", Json::array({to_json(r.phaseFactors[0]), to_json(r.phaseFactors[1])})},
                {"geometricPhases", Json::array({r.geometricPhases[0], r.geometricPhases[1]})},
                {"residualOffDiagonal", r.residualOffDiagonal},
                {"trace", to_json(r.matrix.trace())},
                {"det", to_json(r.matrix.det())},
                {"pattern", std::string(to_string(classify_pattern(r.matrix)))},
                {"refinedPoints", r.refinedPoints}};
}

// ---------------------------------------------------------------------------
// Commands

struct Context {
    Config config;
    std::ostream& out;
    const Logger& log;
};

inline std::filesystem::path output_file(const Config& cfg, std::string_view stem) {
    std::filesystem::path dir(cfg.outputDir);
    std::filesystem::create_directories(dir);
    return dir / (std::string(stem) + (cfg.format == Format::Json ? ".json" : ".csv"));
}

inline int cmd_classify(Context& ctx) {
    const Config& cfg = ctx.config;
    const double lambdaCr = crossing_lambda(cfg.model);
    Json report;
    report["lambdaCr"] = lambdaCr;
    report["criticalCoupling"] = critical_coupling(cfg.model);
    if (cfg.model.gamma1 == cfg.model.gamma2) {
        report["exceptionalPoints"] = nullptr;
        report["degeneracy"] = "DegenerateToDP";
        report["diabolicPoint"] = to_json(ParamPoint{lambdaCr, 0.0});
    } else {
        const auto eps = ep_locations(cfg.model);
        report["exceptionalPoints"] = Json::array({to_json(eps[0]), to_json(eps[1])});
    }
    Json regimes = Json::array();
    for (double omega : cfg.classifyOmegas) {
        const Regime regime = classify_regime(cfg.model, omega, cfg.regimeTolerance);
        regimes.push_back(Json{{"omega", omega}, {"regime", std::string(to_string(regime))}});
    }
    report["regimes"] = regimes;

    if (cfg.format == Format::Json) {
        ctx.out << report.dump(2) << '\n';
        return kExitOk;
    }
    auto& o = ctx.out;
    o << "lambda_cr = " << io::format_double(lambdaCr) << '\n';
    o << "critical coupling |gamma1-gamma2|/4 = " << io::format_double(critical_coupling(cfg.model)) << '\n';
    if (report["exceptionalPoints"].is_null()) {
        o << "exceptional points: DegenerateToDP (diabolic point at (" << io::format_double(lambdaCr)
          << ", 0))\n";
    } else {
        const auto eps = ep_locations(cfg.model);
        for (const auto& p : eps) {
            o << "EP at (" << io::format_double(p.lambda) << ", " << io::format_double(p.omega) << ")\n";
        }
    }
    for (double omega : cfg.classifyOmegas) {
        o << "omega = " << io::format_double(omega) << ": "
          << to_string(classify_regime(cfg.model, omega, cfg.regimeTolerance)) << '\n';
    }
    return kExitOk;
}

inline int cmd_find_ep(Context& ctx) {
    const Config& cfg = ctx.config;
    const auto analytic = ep_locations(cfg.model);
    const EpSearchResult found = find_ep_numeric(cfg.model, cfg.findEpSeed, cfg.findEp);
    const ParamPoint& nearest =
        distance(found.point, analytic[0]) <= distance(found.point, analytic[1]) ? analytic[0] : analytic[1];
    const double dist = distance(found.point, nearest);
    ctx.log.debug("Newton iterations: " + std::to_string(found.iterations));
    if (!(found.residual < 1e-10)) {
        throw Error(ErrorKind::NoConvergence, "|F| at the numeric optimum is not below 1e-10");
    }

    if (cfg.format == Format::Json) {
        Json report{{"seed", to_json(cfg.findEpSeed)},
                    {"numeric", to_json(found.point)},
                    {"analytic", to_json(nearest)},
                    {"distance", dist},
                    {"absF", found.residual},
                    {"iterations", found.iterations}};
        ctx.out << report.dump(2) << '\n';
        return kExitOk;
    }
    auto& o = ctx.out;
    o << "numeric EP  = (" << io::format_double(found.point.lambda) << ", "
      << io::format_double(found.point.omega) << ")\n";
    o << "analytic EP = (" << io::format_double(nearest.lambda) << ", " << io::format_double(nearest.omega)
      << ")\n";
    o << "distance    = " << io::format_double(dist) << '\n';
    o << "|F|         = " << io::format_double(found.residual) << '\n';
    return kExitOk;
}

inline std::vector<ParamPoint> segment_points(const SegmentSpec& seg) {
    std::vector<ParamPoint> pts;
    pts.reserve(seg.steps + 1);
    for (int k = 0; k <= seg.steps; ++k) {
        const double t = static_cast<double>(k) / seg.steps;
        pts.push_back({seg.from.lambda + t * (seg.to.lambda - seg.from.lambda),
                       seg.from.omega + t * (seg.to.omega - seg.from.omega)});
    }
    return pts;
}

inline const std::vector<std::string_view>& trace_columns() {
    static const std::vector<std::string_view> cols{
        "step",  "lambda", "omega", "reE1",  "imE1",  "reE2",  "imE2",      "rev1a",    "imv1a",
        "rev1b", "imv1b",  "rev2a", "imv2a", "rev2b", "imv2b", "selfOrth1", "selfOrth2"};
    return cols;
}

inline void write_trace(std::ostream& os, const TrackedPath& path, Format format) {
    if (format == Format::Csv) {
        io::CsvWriter w(os, trace_columns());
        for (std::size_t k = 0; k < path.size(); ++k) {
            const auto& b = path.branches[k];
            w.field(static_cast<long long>(k)).field(path.points[k].lambda).field(path.points[k].omega);
            w.field(b[0].energy).field(b[1].energy);
            w.field(b[0].vec[0]).field(b[0].vec[1]).field(b[1].vec[0]).field(b[1].vec[1]);
            w.field(self_orthogonality_measure(b[0])).field(self_orthogonality_measure(b[1]));
            w.end_row();
        }
        return;
    }
    Json rows = Json::array();
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto& b = path.branches[k];
        const double values[] = {path.points[k].lambda, path.points[k].omega,
                                 b[0].energy.real(),    b[0].energy.imag(),
                                 b[1].energy.real(),    b[1].energy.imag(),
                                 b[0].vec[0].real(),    b[0].vec[0].imag(),
                                 b[0].vec[1].real(),    b[0].vec[1].imag(),
                                 b[1].vec[0].real(),    b[1].vec[0].imag(),
                                 b[1].vec[1].real(),    b[1].vec[1].imag(),
                                 self_orthogonality_measure(b[0]), self_orthogonality_measure(b[1])};
        Json row;
        row["step"] = k;
        const auto& cols = trace_columns();
        for (std::size_t c = 1; c < cols.size(); ++c) row[std::string(cols[c])] = values[c - 1];
        rows.push_back(row);
    }
    os << Json{{"format", "branchpoint-lab v1"}, {"rows", rows}}.dump(2) << '\n';
}

inline int cmd_trace(Context& ctx) {
    const Config& cfg = ctx.config;
    std::vector<ParamPoint> requested;
    if (cfg.traceLoop) {
        requested = make_loop(*cfg.traceLoop);
    } else {
        requested = segment_points(cfg.traceSegment.value_or(SegmentSpec{}));
    }
    const TrackedPath path = trace_path(cfg.model, requested, cfg.tracker);
    const auto file = output_file(cfg, "trace");
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot write " + file.string());
    write_trace(os, path, cfg.format);
    ctx.log.info("requested " + std::to_string(requested.size()) + " points, refined to " +
                 std::to_string(path.size()));
    ctx.out << file.string() << '\n';
    return kExitOk;
}

inline int cmd_monodromy(Context& ctx) {
    const Config& cfg = ctx.config;
    Json report;
    int code = kExitOk;
    if (cfg.preset) {
        const auto preset = parse_preset(*cfg.preset);
        if (!preset) throw ConfigError("unknown preset \"" + *cfg.preset + "\"");
        ModelParams model = cfg.model;
        if (!cfg.modelGiven && *preset == Preset::DpOnce) model = ModelParams::diabolic_reference();
        PresetOptions opts;
        opts.gauge = cfg.gauge;
        opts.radius = cfg.presetRadius;
        opts.tracker = cfg.tracker;
        opts.steps = cfg.presetSteps;
        const PresetRun run = run_preset(model, *preset, opts);
        report["preset"] = std::string(to_string(*preset));
        report["loop"] = to_json(run.loop);
        report["result"] = to_json(run.result);
        report["verdict"] = Json{{"expected", run.verdict.expected},
                                 {"observed", run.verdict.observed},
                                 {"pass", run.verdict.pass}};
        code = run.verdict.pass ? kExitOk : kExitFailure;
    } else {
        if (!cfg.monodromyLoop) throw ConfigError("monodromy: give a preset or an explicit loop");
        const MonodromyResult r = monodromy(cfg.model, *cfg.monodromyLoop, cfg.gauge, cfg.tracker);
        report["preset"] = nullptr;
        report["loop"] = to_json(*cfg.monodromyLoop);
        report["result"] = to_json(r);
    }
    const std::string text = report.dump(2);
    std::filesystem::create_directories(cfg.outputDir);
    const auto file = std::filesystem::path(cfg.outputDir) / "monodromy.json";
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot write " + file.string());
    os << text << '\n';
    ctx.out << text << '\n';
    return code;
}

inline int cmd_sweep(Context& ctx) {
    const Config& cfg = ctx.config;
    const SweepGrid& g = cfg.sweep;
    const auto file = output_file(cfg, "sweep");
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot write " + file.string());

    const auto at = [&](int i, int j) {
        return ParamPoint{g.lambdaMin + (g.lambdaMax - g.lambdaMin) * i / (g.nLambda - 1),
                          g.omegaMin + (g.omegaMax - g.omegaMin) * j / (g.nOmega - 1)};
    };
    if (cfg.format == Format::Csv) {
        io::CsvWriter w(os, {"lambda", "omega", "reF", "imF", "reEplus", "imEplus", "reEminus", "imEminus",
                             "regime"});
        for (int i = 0; i < g.nLambda; ++i) {
            for (int j = 0; j < g.nOmega; ++j) {
                const ParamPoint p = at(i, j);
                const auto e = eigenvalues_closed_form(cfg.model, p);
                w.field(p.lambda).field(p.omega).field(discriminant(cfg.model, p));
                w.field(e.ePlus).field(e.eMinus).field(short_tag(regime_at(cfg.model, p, cfg.regimeTolerance)));
                w.end_row();
            }
        }
    } else {
        Json rows = Json::array();
        for (int i = 0; i < g.nLambda; ++i) {
            for (int j = 0; j < g.nOmega; ++j) {
                const ParamPoint p = at(i, j);
                const auto e = eigenvalues_closed_form(cfg.model, p);
                const Complex f = discriminant(cfg.model, p);
                rows.push_back(Json{{"lambda", p.lambda},
                                    {"omega", p.omega},
                                    {"reF", f.real()},
                                    {"imF", f.imag()},
                                    {"reEplus", e.ePlus.real()},
                                    {"imEplus", e.ePlus.imag()},
                                    {"reEminus", e.eMinus.real()},
                                    {"imEminus", e.eMinus.imag()},
                                    {"regime", std::string(short_tag(regime_at(cfg.model, p, cfg.regimeTolerance)))}});
            }
        }
        os << Json{{"format", "branchpoint-lab v1"}, {"rows", rows}}.dump(2) << '\n';
    }
    ctx.out << file.string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    const Logger log(err, log_level_from_env());

    CLI::App app{"Exceptional-point laboratory for the two-level non-Hermitian model", "branchpoint-lab"};
    app.require_subcommand(1);
    std::string configPath;
    std::string outDir;
    std::string format;
    int steps = 0;
    std::string preset;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", configPath, "JSON configuration file");
        sub->add_option("--out", outDir, "output directory");
        sub->add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--steps", steps, "steps per segment or loop winding")->check(CLI::PositiveNumber);
        sub->add_option("--preset", preset, "EpOnce, EpTwice, EpReversed or DpOnce");
    };
    CLI::App* classify = app.add_subcommand("classify", "crossing, exceptional points and coupling regimes");
    CLI::App* findEp = app.add_subcommand("find-ep", "numerical search for F = 0 checked against the formula");
    CLI::App* trace = app.add_subcommand("trace", "track both eigenbranches along a segment or loop (CSV)");
    CLI::App* mono = app.add_subcommand("monodromy", "monodromy of a loop or a preset experiment (JSON)");
    CLI::App* sweep = app.add_subcommand("sweep", "discriminant, eigenvalues and regime over a grid (CSV)");
    for (CLI::App* sub : {classify, findEp, trace, mono, sweep}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        log.error(e.what());
        return kExitConfig;
    }

    try {
        Config cfg = configPath.empty() ? Config{} : load_config(configPath);
        if (!outDir.empty()) cfg.outputDir = outDir;
        if (!format.empty()) cfg.format = detail::read_format(format);
        if (!preset.empty()) cfg.preset = preset;
        if (steps > 0) {
            if (cfg.traceLoop) {
                cfg.traceLoop->steps = steps;
            } else {
                SegmentSpec seg = cfg.traceSegment.value_or(SegmentSpec{});
                seg.steps = steps;
                cfg.traceSegment = seg;
            }
            if (cfg.monodromyLoop) cfg.monodromyLoop->steps = steps;
            cfg.presetSteps = steps;
        }

        Context ctx{cfg, out, log};
        if (*classify) return cmd_classify(ctx);
        if (*findEp) return cmd_find_ep(ctx);
        if (*trace) return cmd_trace(ctx);
        if (*mono) return cmd_monodromy(ctx);
        return cmd_sweep(ctx);
    } catch (const ConfigError& e) {
        log.error(std::string("config: ") + e.what());
        return kExitConfig;
    } catch (const Error& e) {
        log.error(e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitFailure;
    }
}

} // namespace bpl::cli
