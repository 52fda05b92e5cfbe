#pragma once

#include <wolffkit/absorption.hpp>
#include <wolffkit/measure.hpp>
#include <wolffkit/report.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace wolffkit::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kSchema = "wolffkit/1";

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Round-trip formatting of a double; infinities spelled inf / -inf.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- numbers that may be infinite --------------------------------------------

inline json number_to_json(double v) {
    if (std::isinf(v)) return json{{"value", nullptr}, {"infinite", true}};
    if (std::isnan(v)) return nullptr;
    return v;
}

inline double number_from_json(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_object()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

inline json ext_to_json(const ExtReal& v) {
    if (v.infinite) return json{{"value", nullptr}, {"infinite", true}};
    return json{{"value", v.value}, {"infinite", false}};
}

inline ExtReal ext_from_json(const json& j) {
    if (j.at("infinite").get<bool>()) return ExtReal::inf();
    return ExtReal::finite(j.at("value").get<double>());
}

inline Radius radius_from_string(const std::string& s) {
    if (s == "inf" || s == "infinity") return Radius::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ParameterError("R must be a positive number or inf");
    }
    if (used != s.size()) throw ParameterError("R must be a positive number or inf");
    return Radius::finite(v);
}

inline json radius_to_json(const Radius& R) {
    if (R.is_infinite()) return json{{"value", nullptr}, {"infinite", true}};
    return json{{"value", R.value()}, {"infinite", false}};
}

// ---- domain / fields -----------------------------------------------------------

inline Domain domain_from_json(const json& j) {
    try {
        const int n = j.at("n").get<int>();
        Point lo = j.at("lo").get<Point>();
        Point hi = j.at("hi").get<Point>();
        std::vector<int> res = j.at("res").get<std::vector<int>>();
        require(static_cast<int>(lo.size()) == n, "domain lo/hi/res have matching dimension");
        return Domain(std::move(lo), std::move(hi), std::move(res));
    } catch (const json::exception& e) {
        throw InputError(std::string("domain: ") + e.what());
    }
}

inline json domain_to_json(const Domain& d) {
    return json{{"n", d.dim()}, {"lo", d.lo()}, {"hi", d.hi()}, {"res", d.res()}};
}

/// Field CSV: header x0,...,x{N-1},value then one row per cell (row-major order).
inline std::string field_csv(const ScalarField& f) {
    const Domain& g = f.domain();
    const int n = g.dim();
    std::string out;
    for (int d = 0; d < n; ++d) out += "x" + std::to_string(d) + ",";
    out += "value\n";
    Point x(n);
    for (std::size_t c = 0; c < f.size(); ++c) {
        g.cell_center(c, x.data());
        for (int d = 0; d < n; ++d) {
            out += format_double(x[d]);
            out += ',';
        }
        out += format_double(f[c]);
        out += '\n';
    }
    return out;
}

inline void write_field_csv(const fs::path& path, const ScalarField& f) { write_text(path, field_csv(f)); }

/// Density CSV: cell values only, row-major, separated by commas and/or whitespace.
inline ScalarField read_density_csv(const fs::path& path, const Domain& domain) {
    std::string text = read_text(path);
    for (char& ch : text) {
        if (ch == ',' || ch == ';') ch = ' ';
    }
    std::istringstream in(text);
    std::vector<double> values;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw InputError(path.string() + ": not a number: " + tok);
        }
    }
    if (values.size() != domain.cell_count()) {
        throw InputError(path.string() + ": expected " + std::to_string(domain.cell_count()) + " values, got " +
                         std::to_string(values.size()));
    }
    return ScalarField(domain, std::move(values));
}

// ---- measures ------------------------------------------------------------------

inline Measure measure_from_json(const json& j, const fs::path& base_dir) {
    Measure mu;
    try {
        if (j.contains("atoms")) {
            for (const auto& a : j.at("atoms")) mu.atoms.push_back({a.at("x").get<Point>(), a.at("w").get<double>()});
        }
        if (j.contains("density") && !j.at("density").is_null()) {
            const auto& d = j.at("density");
            const Domain dom = domain_from_json(d.at("domain"));
            fs::path file = d.at("file").get<std::string>();
            if (file.is_relative()) file = base_dir / file;
            mu.density = read_density_csv(file, dom);
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("measure: ") + e.what());
    }
    for (const auto& a : mu.atoms) {
        require(a.w >= 0.0 && std::isfinite(a.w), "atom weight nonnegative");
    }
    if (mu.density) {
        for (double v : mu.density->values()) require(v >= 0.0 && std::isfinite(v), "density nonnegative");
    }
    return mu;
}

/// Plain measures load as the positive part; {"positive":..,"negative":..} as a signed pair.
inline SignedMeasure signed_measure_from_json(const json& j, const fs::path& base_dir) {
    if (j.contains("positive") || j.contains("negative")) {
        SignedMeasure s;
        if (j.contains("positive")) s.positive = measure_from_json(j.at("positive"), base_dir);
        if (j.contains("negative")) s.negative = measure_from_json(j.at("negative"), base_dir);
        return s;
    }
    return SignedMeasure{measure_from_json(j, base_dir), Measure{}};
}

inline SignedMeasure read_measure(const fs::path& path) {
    return signed_measure_from_json(read_json(path), path.parent_path());
}

/// Atoms only (densities are referenced by file and not re-serialized here).
inline json atoms_to_json(const Measure& mu) {
    json atoms = json::array();
    for (const auto& a : mu.atoms) atoms.push_back(json{{"x", a.x}, {"w", a.w}});
    return json{{"atoms", atoms}};
}

// ---- absorption ----------------------------------------------------------------

inline AbsorptionSpec absorption_from_json(const json& j) {
    const std::string kind = j.value("kind", "none");
    if (kind == "none") return AbsorptionSpec::none();
    if (kind == "power") return AbsorptionSpec::power(j.at("q").get<double>(), j.value("beta", 0.0));
    if (kind == "exponential") return AbsorptionSpec::exponential(j.at("tau").get<double>(), j.value("lambda", 1.0));
    throw ParameterError("absorption kind must be none, power or exponential");
}

inline json absorption_to_json(const AbsorptionSpec& a) {
    switch (a.kind) {
        case AbsorptionSpec::Kind::None: return json{{"kind", "none"}};
        case AbsorptionSpec::Kind::Power: return json{{"kind", "power"}, {"q", a.q}, {"beta", a.beta}};
        case AbsorptionSpec::Kind::Exponential:
            return json{{"kind", "exponential"}, {"tau", a.tau}, {"lambda", a.lambda}};
        case AbsorptionSpec::Kind::Custom: return json{{"kind", "custom"}};
    }
    return json{{"kind", "none"}};
}

// ---- reports -------------------------------------------------------------------

inline json report_to_json(const FitReport& r) {
    json constants = json::object();
    for (const auto& [k, v] : r.constants) constants[k] = number_to_json(v);
    json rows = json::array();
    for (const auto& row : r.rows) {
        json jr = json::array();
        for (double v : row) jr.push_back(number_to_json(v));
        rows.push_back(jr);
    }
    return json{{"schema", kSchema},
                {"experiment", r.experiment},
                {"fingerprints", r.fingerprints},
                {"constants", constants},
                {"samples", r.samples},
                {"ratio_min", number_to_json(r.ratio_min)},
                {"ratio_max", number_to_json(r.ratio_max)},
                {"ratio_median", number_to_json(r.ratio_median)},
                {"pass", r.pass},
                {"notes", r.notes},
                {"columns", r.columns},
                {"rows", rows}};
}

inline FitReport report_from_json(const json& j) {
    FitReport r;
    r.experiment = j.at("experiment").get<std::string>();
    r.fingerprints = j.at("fingerprints").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("constants").items()) r.constants[k] = number_from_json(v);
    r.samples = j.at("samples").get<std::size_t>();
    r.ratio_min = number_from_json(j.at("ratio_min"));
    r.ratio_max = number_from_json(j.at("ratio_max"));
    r.ratio_median = number_from_json(j.at("ratio_median"));
    r.pass = j.at("pass").get<bool>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
    r.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
        std::vector<double> vals;
        for (const auto& v : row) vals.push_back(number_from_json(v));
        r.rows.push_back(std::move(vals));
    }
    return r;
}

inline json criterion_to_json(const CriterionReport& r) {
    json inputs = json::object();
    for (const auto& [k, v] : r.inputs) inputs[k] = number_to_json(v);
    return json{{"schema", kSchema},
                {"criterion", r.name},
                {"inputs", inputs},
                {"threshold", ext_to_json(r.threshold)},
                {"measured", ext_to_json(r.measured)},
                {"verdict", to_string(r.verdict)},
                {"notes", r.notes}};
}

inline CriterionReport criterion_from_json(const json& j) {
    CriterionReport r;
    r.name = j.at("criterion").get<std::string>();
    for (const auto& [k, v] : j.at("inputs").items()) r.inputs[k] = number_from_json(v);
    r.threshold = ext_from_json(j.at("threshold"));
    r.measured = ext_from_json(j.at("measured"));
    const std::string v = j.at("verdict").get<std::string>();
    r.verdict = v == "pass" ? Verdict::Pass : v == "fail" ? Verdict::Fail : Verdict::Inconclusive;
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
}

}  // namespace wolffkit::io
