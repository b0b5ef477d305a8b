#pragma once

// Experiment configuration: a flat key = value text format with one parse
// path. Repeated `curve = ...` lines accumulate; every other key is scalar
// and may appear once. `--override key=value` replaces a scalar key after
// the file is read. The exact grammar is documented in the README.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "impbond/background.hpp"
#include "impbond/geometry.hpp"

namespace impbond {

class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct CurveSpec {
    CurveKind kind = CurveKind::Circle;
    double radius = 0;            // disk
    double a = 0, b = 0;          // ellipse semi-axes
    double scale = 0;             // kite
    double base = 0, amp = 0;     // star
    int lobes = 0;                // star
    double cx = 0, cy = 0;
    int n = 0;
    int region = -1;              // -1: every curve bounds its own inclusion
    bool reversed = false;
};

struct BackgroundSpec {
    enum class Kind { Linear, Poly } kind = Kind::Linear;
    double gx = 1, gy = 0;
    int degree = 1;
    bool imaginary = false;
};

struct ExperimentConfig {
    std::string label = "case";
    std::string out_dir = "out";
    std::vector<CurveSpec> curves;
    BackgroundSpec background;
    std::vector<double> gammas;
    std::vector<double> eps;
    double annulus_r0 = 1, annulus_r1 = 2;
    int annulus_nr = 8, annulus_nt = 64;
    bool has_segment = false;
    double seg_x0 = 0, seg_y0 = 0, seg_x1 = 0, seg_y1 = 0;
    int seg_n = 0;
    int segment_samples = 33;     // mid-gap probe count for blow-up studies
    std::vector<double> farfield_radii{10, 100, 1000};
    double clearance = 5;
    double gap_clearance = 0.5;
    unsigned long seed = 0;
    int threads = 1;
    bool allow_large_geometry = false;
    std::optional<double> excision_inner;
    std::map<std::string, double> tolerances;  // keys written as tol.<name>

    double tol(const std::string& name, double fallback) const {
        auto it = tolerances.find(name);
        return it == tolerances.end() ? fallback : it->second;
    }
};

namespace detail {

struct RawEntry {
    std::string key, value;
    int line = 0;  // 0 marks a command-line override
};

inline std::string where(int line) {
    return line == 0 ? std::string("override") : "line " + std::to_string(line);
}

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& tok, const std::string& ctx) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || tok.empty())
        throw config_error(ctx + ": expected a number, got '" + tok + "'");
    return v;
}

inline long parse_long(const std::string& tok, const std::string& ctx) {
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end != tok.c_str() + tok.size() || tok.empty())
        throw config_error(ctx + ": expected an integer, got '" + tok + "'");
    return v;
}

inline bool parse_bool(const std::string& tok, const std::string& ctx) {
    if (tok == "true" || tok == "1") return true;
    if (tok == "false" || tok == "0") return false;
    throw config_error(ctx + ": expected true/false, got '" + tok + "'");
}

inline std::pair<double, double> parse_pair(const std::string& tok, const std::string& ctx) {
    const size_t comma = tok.find(',');
    if (comma == std::string::npos)
        throw config_error(ctx + ": expected x,y (comma separated), got '" + tok + "'");
    return {parse_double(tok.substr(0, comma), ctx), parse_double(tok.substr(comma + 1), ctx)};
}

// key=value attribute tokens after the leading kind word.
inline std::map<std::string, std::string> parse_attrs(const std::vector<std::string>& toks,
                                                      size_t first, const std::string& ctx) {
    std::map<std::string, std::string> attrs;
    for (size_t k = first; k < toks.size(); ++k) {
        const size_t eq = toks[k].find('=');
        if (eq == std::string::npos)
            throw config_error(ctx + ": expected key=value, got '" + toks[k] + "'");
        const std::string key = toks[k].substr(0, eq);
        if (!attrs.emplace(key, toks[k].substr(eq + 1)).second)
            throw config_error(ctx + ": duplicate attribute '" + key + "'");
    }
    return attrs;
}

inline CurveSpec parse_curve(const std::string& value, int line) {
    const std::string ctx = where(line) + ", curve";
    const auto toks = split_ws(value);
    if (toks.empty()) throw config_error(ctx + ": missing curve kind");
    CurveSpec c;
    auto attrs = parse_attrs(toks, 1, ctx);
    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = attrs.find(key);
        if (it == attrs.end()) return std::nullopt;
        std::string v = it->second;
        attrs.erase(it);
        return v;
    };
    auto need = [&](const char* key) {
        auto v = take(key);
        if (!v) throw config_error(ctx + ": missing attribute '" + std::string(key) + "'");
        return *v;
    };
    if (toks[0] == "disk") {
        c.kind = CurveKind::Circle;
        c.radius = parse_double(need("radius"), ctx);
    } else if (toks[0] == "ellipse") {
        c.kind = CurveKind::Ellipse;
        c.a = parse_double(need("a"), ctx);
        c.b = parse_double(need("b"), ctx);
    } else if (toks[0] == "kite") {
        c.kind = CurveKind::Kite;
        c.scale = parse_double(need("scale"), ctx);
    } else if (toks[0] == "star") {
        c.kind = CurveKind::Star;
        c.base = parse_double(need("base"), ctx);
        c.amp = parse_double(need("amp"), ctx);
        c.lobes = int(parse_long(need("lobes"), ctx));
    } else {
        throw config_error(ctx + ": unknown curve kind '" + toks[0] +
                           "' (expected disk, ellipse, kite or star)");
    }
    c.n = int(parse_long(need("n"), ctx));
    if (auto v = take("center")) {
        auto [x, y] = parse_pair(*v, ctx);
        c.cx = x;
        c.cy = y;
    }
    if (auto v = take("region")) c.region = int(parse_long(*v, ctx));
    if (auto v = take("reversed")) c.reversed = parse_bool(*v, ctx);
    if (!attrs.empty())
        throw config_error(ctx + ": unknown attribute '" + attrs.begin()->first + "'");
    if (c.n < 16 || c.n % 2 != 0)
        throw config_error(ctx + ": n must be even and at least 16");
    return c;
}

inline BackgroundSpec parse_background(const std::string& value, int line) {
    const std::string ctx = where(line) + ", background";
    const auto toks = split_ws(value);
    if (toks.empty()) throw config_error(ctx + ": missing background kind");
    BackgroundSpec b;
    auto attrs = parse_attrs(toks, 1, ctx);
    if (toks[0] == "linear") {
        b.kind = BackgroundSpec::Kind::Linear;
        auto it = attrs.find("dir");
        if (it == attrs.end()) throw config_error(ctx + ": missing attribute 'dir'");
        auto [x, y] = parse_pair(it->second, ctx);
        b.gx = x;
        b.gy = y;
        attrs.erase(it);
    } else if (toks[0] == "poly") {
        b.kind = BackgroundSpec::Kind::Poly;
        auto it = attrs.find("degree");
        if (it == attrs.end()) throw config_error(ctx + ": missing attribute 'degree'");
        b.degree = int(parse_long(it->second, ctx));
        if (b.degree < 1) throw config_error(ctx + ": degree must be at least 1");
        attrs.erase(it);
        if (auto p = attrs.find("part"); p != attrs.end()) {
            if (p->second == "re") b.imaginary = false;
            else if (p->second == "im") b.imaginary = true;
            else throw config_error(ctx + ": part must be re or im");
            attrs.erase(p);
        }
    } else {
        throw config_error(ctx + ": unknown background kind '" + toks[0] +
                           "' (expected linear or poly)");
    }
    if (!attrs.empty())
        throw config_error(ctx + ": unknown attribute '" + attrs.begin()->first + "'");
    return b;
}

inline std::vector<double> parse_list(const std::string& value, const std::string& ctx) {
    std::vector<double> out;
    for (const auto& tok : split_ws(value)) out.push_back(parse_double(tok, ctx));
    if (out.empty()) throw config_error(ctx + ": empty list");
    return out;
}

}  // namespace detail

// Reads raw key = value entries; '#' starts a comment, blank lines skipped.
inline std::vector<detail::RawEntry> read_config_entries(std::istream& in) {
    std::vector<detail::RawEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string text = detail::trim(line);
        if (text.empty()) continue;
        const size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw config_error(detail::where(lineno) + ": expected key = value, got '" + text + "'");
        detail::RawEntry e;
        e.key = detail::trim(text.substr(0, eq));
        e.value = detail::trim(text.substr(eq + 1));
        e.line = lineno;
        if (e.key.empty()) throw config_error(detail::where(lineno) + ": empty key");
        entries.push_back(e);
    }
    return entries;
}

// Applies --override key=value: replaces every file entry with that key.
// List-building keys cannot be overridden (there is no way to name one line).
inline void apply_overrides(std::vector<detail::RawEntry>& entries,
                            const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        const size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw config_error("override: expected key=value, got '" + ov + "'");
        detail::RawEntry e;
        e.key = detail::trim(ov.substr(0, eq));
        e.value = detail::trim(ov.substr(eq + 1));
        e.line = 0;
        if (e.key == "curve")
            throw config_error("override: 'curve' lines cannot be overridden; edit the config");
        std::erase_if(entries, [&](const detail::RawEntry& x) { return x.key == e.key; });
        entries.push_back(e);
    }
}

inline ExperimentConfig interpret_config(const std::vector<detail::RawEntry>& entries) {
    ExperimentConfig cfg;
    std::map<std::string, int> seen;
    bool have_gamma = false, have_grid = false;
    int gamma_line = 0;

    for (const auto& e : entries) {
        const std::string ctx = detail::where(e.line) + ", " + e.key;
        if (e.key != "curve") {
            if (auto [it, fresh] = seen.emplace(e.key, e.line); !fresh)
                throw config_error(ctx + ": duplicate key (first at " +
                                   detail::where(it->second) + ")");
        }
        if (e.key == "curve") {
            cfg.curves.push_back(detail::parse_curve(e.value, e.line));
        } else if (e.key == "background") {
            cfg.background = detail::parse_background(e.value, e.line);
        } else if (e.key == "label") {
            cfg.label = e.value;
        } else if (e.key == "out") {
            cfg.out_dir = e.value;
        } else if (e.key == "gamma") {
            cfg.gammas = detail::parse_list(e.value, ctx);
            have_gamma = true;
            gamma_line = e.line;
        } else if (e.key == "gamma_grid") {
            const auto toks = detail::split_ws(e.value);
            if (toks.size() != 4)
                throw config_error(ctx + ": expected 'min max points log|linear'");
            const double lo = detail::parse_double(toks[0], ctx);
            const double hi = detail::parse_double(toks[1], ctx);
            const int pts = int(detail::parse_long(toks[2], ctx));
            if (pts < 1) throw config_error(ctx + ": points must be at least 1");
            if (toks[3] == "log") {
                if (!(lo > 0)) throw config_error(ctx + ": log spacing requires min > 0");
                cfg.gammas.resize(pts);
                for (int k = 0; k < pts; ++k)
                    cfg.gammas[k] = pts == 1 ? lo
                                             : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) *
                                                                           double(k) / double(pts - 1));
            } else if (toks[3] == "linear") {
                cfg.gammas.resize(pts);
                for (int k = 0; k < pts; ++k)
                    cfg.gammas[k] = pts == 1 ? lo : lo + (hi - lo) * double(k) / double(pts - 1);
            } else {
                throw config_error(ctx + ": spacing must be log or linear");
            }
            have_grid = true;
            gamma_line = e.line;
        } else if (e.key == "eps") {
            cfg.eps = detail::parse_list(e.value, ctx);
        } else if (e.key == "annulus") {
            const auto toks = detail::split_ws(e.value);
            if (toks.size() != 4) throw config_error(ctx + ": expected 'r0 r1 nradii nangles'");
            cfg.annulus_r0 = detail::parse_double(toks[0], ctx);
            cfg.annulus_r1 = detail::parse_double(toks[1], ctx);
            cfg.annulus_nr = int(detail::parse_long(toks[2], ctx));
            cfg.annulus_nt = int(detail::parse_long(toks[3], ctx));
        } else if (e.key == "segment") {
            const auto toks = detail::split_ws(e.value);
            if (toks.size() != 3) throw config_error(ctx + ": expected 'x0,y0 x1,y1 n'");
            std::tie(cfg.seg_x0, cfg.seg_y0) = detail::parse_pair(toks[0], ctx);
            std::tie(cfg.seg_x1, cfg.seg_y1) = detail::parse_pair(toks[1], ctx);
            cfg.seg_n = int(detail::parse_long(toks[2], ctx));
            cfg.has_segment = true;
        } else if (e.key == "segment_samples") {
            cfg.segment_samples = int(detail::parse_long(e.value, ctx));
        } else if (e.key == "farfield_radii") {
            cfg.farfield_radii = detail::parse_list(e.value, ctx);
        } else if (e.key == "clearance") {
            cfg.clearance = detail::parse_double(e.value, ctx);
        } else if (e.key == "gap_clearance") {
            cfg.gap_clearance = detail::parse_double(e.value, ctx);
        } else if (e.key == "seed") {
            cfg.seed = static_cast<unsigned long>(detail::parse_long(e.value, ctx));
        } else if (e.key == "threads") {
            cfg.threads = int(detail::parse_long(e.value, ctx));
        } else if (e.key == "allow_large_geometry") {
            cfg.allow_large_geometry = detail::parse_bool(e.value, ctx);
        } else if (e.key == "excision_inner") {
            cfg.excision_inner = detail::parse_double(e.value, ctx);
        } else if (e.key.rfind("tol.", 0) == 0) {
            const std::string name = e.key.substr(4);
            if (name.empty()) throw config_error(ctx + ": empty tolerance name");
            cfg.tolerances[name] = detail::parse_double(e.value, ctx);
        } else {
            throw config_error(ctx + ": unknown key");
        }
    }

    if (have_gamma && have_grid)
        throw config_error(detail::where(gamma_line) +
                           ": gamma and gamma_grid are mutually exclusive");
    if (cfg.gammas.empty()) cfg.gammas = {0.0};

    for (double g : cfg.gammas)
        if (!(g >= 0)) throw config_error("gamma: values must be nonnegative");
    for (double e : cfg.eps)
        if (!(e > 0)) throw config_error("eps: values must be positive");
    for (double r : cfg.farfield_radii)
        if (!(r > 0)) throw config_error("farfield_radii: values must be positive");
    if (!(cfg.annulus_r0 > 0) || !(cfg.annulus_r1 >= cfg.annulus_r0))
        throw config_error("annulus: need 0 < r0 <= r1");
    if (cfg.annulus_nr < 1 || cfg.annulus_nt < 1)
        throw config_error("annulus: need at least one radius and one angle");
    if (cfg.has_segment && cfg.seg_n < 2) throw config_error("segment: need at least 2 points");
    if (cfg.segment_samples < 2) throw config_error("segment_samples: need at least 2");
    if (!(cfg.clearance >= 0)) throw config_error("clearance: must be nonnegative");
    if (!(cfg.gap_clearance >= 0)) throw config_error("gap_clearance: must be nonnegative");
    if (cfg.threads < 1) throw config_error("threads: must be at least 1");
    if (cfg.excision_inner && !(*cfg.excision_inner > 0))
        throw config_error("excision_inner: must be positive");
    return cfg;
}

// Curve construction from a spec (validation lives in the Curve factories).
template <typename Scalar = double>
Curve<Scalar> make_curve(const CurveSpec& s) {
    const Vec2<Scalar> c(Scalar(s.cx), Scalar(s.cy));
    Curve<Scalar> curve;
    switch (s.kind) {
        case CurveKind::Circle:
            curve = Curve<Scalar>::circle(c, Scalar(s.radius), s.reversed);
            break;
        case CurveKind::Ellipse:
            curve = Curve<Scalar>::ellipse(c, Scalar(s.a), Scalar(s.b), Scalar(0), s.reversed);
            break;
        case CurveKind::Kite: curve = Curve<Scalar>::kite(c, Scalar(s.scale), s.reversed); break;
        case CurveKind::Star:
            curve = Curve<Scalar>::star(c, Scalar(s.base), Scalar(s.amp), s.lobes, s.reversed);
            break;
    }
    return curve;
}

// Radius of a bounding circle around the configured geometry. The logarithmic
// capacity of a set inside a disk of radius r is at most r, so enclosing
// radius < 1 certifies the capacity condition the theory needs in 2-D.
template <typename Scalar = double>
Scalar config_enclosing_radius(const ExperimentConfig& cfg) {
    Scalar lo_x = std::numeric_limits<Scalar>::max(), hi_x = std::numeric_limits<Scalar>::lowest();
    Scalar lo_y = lo_x, hi_y = hi_x;
    std::vector<Vec2<Scalar>> pts;
    for (const auto& spec : cfg.curves) {
        const Curve<Scalar> curve = make_curve<Scalar>(spec);
        for (int k = 0; k < 256; ++k) {
            const Vec2<Scalar> p =
                detail::curve_point(curve, two_pi<Scalar> * Scalar(k) / Scalar(256));
            lo_x = std::min(lo_x, p.x());
            hi_x = std::max(hi_x, p.x());
            lo_y = std::min(lo_y, p.y());
            hi_y = std::max(hi_y, p.y());
            pts.push_back(p);
        }
    }
    const Vec2<Scalar> center(Scalar(0.5) * (lo_x + hi_x), Scalar(0.5) * (lo_y + hi_y));
    Scalar r = 0;
    for (const auto& p : pts) r = std::max(r, (p - center).norm());
    return r;
}

// Full validation pass that needs curve geometry: capacity guard.
inline void validate_geometry(const ExperimentConfig& cfg) {
    if (cfg.curves.empty()) throw config_error("config defines no curves");
    if (cfg.allow_large_geometry) return;
    const double r = config_enclosing_radius(cfg);
    if (!(r < 1))
        throw config_error(
            "geometry does not fit inside the unit disk (enclosing radius " + std::to_string(r) +
            "); the 2-D capacity condition may fail. Rescale the curves or set "
            "allow_large_geometry = true");
}

template <typename Scalar = double>
Assembly<Scalar> build_assembly(const ExperimentConfig& cfg) {
    std::vector<BoundaryComponent<Scalar>> comps;
    std::vector<int> regions;
    bool any_region = false, all_region = true;
    for (const auto& spec : cfg.curves) {
        comps.push_back(build_component(make_curve<Scalar>(spec), spec.n));
        regions.push_back(spec.region);
        if (spec.region >= 0) any_region = true;
        else all_region = false;
    }
    if (any_region && !all_region)
        throw config_error("curve: either all curves or none must carry region=");
    if (!any_region) regions.clear();
    return assemble(std::move(comps), regions);
}

template <typename Scalar = double>
HarmonicBackground<Scalar> build_background(const ExperimentConfig& cfg) {
    if (cfg.background.kind == BackgroundSpec::Kind::Linear)
        return HarmonicBackground<Scalar>::linear(
            Vec2<Scalar>(Scalar(cfg.background.gx), Scalar(cfg.background.gy)));
    return HarmonicBackground<Scalar>::harmonic_poly(cfg.background.degree,
                                                     cfg.background.imaginary);
}

inline ExperimentConfig load_config(const std::string& path,
                                    const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    auto entries = read_config_entries(in);
    apply_overrides(entries, overrides);
    ExperimentConfig cfg = interpret_config(entries);
    validate_geometry(cfg);
    return cfg;
}

}  // namespace impbond
