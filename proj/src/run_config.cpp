#include "chtd/run_config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <type_traits>

#include "chtd/detail/byte_io.hpp"
#include "chtd/error.hpp"

namespace chtd {

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "problem",        "elements",      "basis",         "s",
        "p",              "a",             "rank",          "mode",
        "tol",            "max_sweeps",    "seed",          "quad_points",
        "greedy_refine",  "source",        "reference",     "reference_points",
        "output_dir",     "verbatim_sign", "study_grids",   "study_ranks",
        "study_variants", "bench_sizes",   "bench_time_elements", "fdm_safety",
        "memory_guard_bytes"};
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) parts.push_back(trim(item));
    return parts;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
        throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
        throw ConfigError(key, "expected a number, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& item : split(v, ',')) out.push_back(static_cast<std::size_t>(to_unsigned(key, item)));
    if (out.empty()) throw ConfigError(key, "expected a non-empty list");
    return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_same_v<T, std::string>)
            s += xs[i];
        else
            s += std::to_string(xs[i]);
    }
    return s;
}

using KeyValues = std::map<std::string, std::string>;

void parse_lines(const std::string& text, KeyValues& kv) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
}

RunConfig resolve(const KeyValues& kv) {
    for (const auto& [key, value] : kv)
        if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end())
            throw ConfigError(key, "unknown key");

    auto get = [&kv](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };

    RunConfig c;
    if (auto v = get("problem")) {
        if (*v == "poisson2d")
            c.problem = ProblemId::Poisson2d;
        else if (*v == "diffusion4d")
            c.problem = ProblemId::Diffusion4d;
        else
            throw ConfigError("problem", "expected poisson2d or diffusion4d, got '" + *v + "'");
    }
    const std::size_t n_dims = c.problem == ProblemId::Poisson2d ? 2 : 4;
    if (auto v = get("elements")) {
        c.elements = to_list("elements", *v);
        if (c.elements.size() == 1) c.elements.assign(n_dims, c.elements.front());
    } else {
        c.elements = c.problem == ProblemId::Poisson2d ? std::vector<std::size_t>{32, 32}
                                                      : std::vector<std::size_t>{20, 20, 20, 40};
    }
    if (c.elements.size() != n_dims)
        throw ConfigError("elements", "expected " + std::to_string(n_dims) + " element counts");
    for (std::size_t n : c.elements)
        if (n < 2) throw ConfigError("elements", "every dimension needs at least 2 elements");

    const std::string basis = get("basis").value_or("fe_linear");
    if (basis == "fe_linear") {
        c.hyper = Hyperparams::fe_linear();
    } else if (basis == "chidenn") {
        c.hyper.kind = BasisKind::Chidenn;
        c.hyper.s = static_cast<std::size_t>(to_unsigned("s", get("s").value_or("2")));
        c.hyper.p = static_cast<std::size_t>(to_unsigned("p", get("p").value_or(std::to_string(c.hyper.s))));
        c.hyper.a = get("a") ? to_real("a", *get("a")) : static_cast<double>(c.hyper.s);
        if (c.hyper.s == 0) throw ConfigError("s", "patch size must be at least 1");
        if (c.hyper.p > c.hyper.s) throw ConfigError("p", "p must not exceed s");
        if (!(c.hyper.a > 0.0)) throw ConfigError("a", "dilation must be positive");
    } else {
        throw ConfigError("basis", "expected fe_linear or chidenn, got '" + basis + "'");
    }
    if (basis == "fe_linear")
        for (const char* key : {"s", "p", "a"})
            if (get(key)) throw ConfigError(key, "only meaningful with basis = chidenn");

    if (auto v = get("rank")) c.solver.rank = static_cast<std::size_t>(to_unsigned("rank", *v));
    if (c.solver.rank == 0) throw ConfigError("rank", "must be at least 1");
    if (auto v = get("mode")) {
        if (*v == "full_als")
            c.solver.mode = SolveMode::FullAls;
        else if (*v == "greedy")
            c.solver.mode = SolveMode::Greedy;
        else
            throw ConfigError("mode", "expected full_als or greedy, got '" + *v + "'");
    }
    if (auto v = get("tol")) c.solver.tol = to_real("tol", *v);
    if (!(c.solver.tol > 0.0)) throw ConfigError("tol", "must be positive");
    if (auto v = get("max_sweeps")) c.solver.max_sweeps = static_cast<std::size_t>(to_unsigned("max_sweeps", *v));
    if (c.solver.max_sweeps == 0) throw ConfigError("max_sweeps", "must be at least 1");
    if (auto v = get("seed")) c.solver.seed = to_unsigned("seed", *v);
    if (auto v = get("quad_points"); v && *v != "default") {
        const auto q = static_cast<std::size_t>(to_unsigned("quad_points", *v));
        if (q < 1 || q > kMaxGaussPoints)
            throw ConfigError("quad_points", "must lie in 1.." + std::to_string(kMaxGaussPoints));
        c.solver.quad_points = q;
    }
    if (auto v = get("greedy_refine")) c.solver.greedy_refine = to_bool("greedy_refine", *v);

    if (auto v = get("source")) {
        if (*v == "gaussian")
            c.source = PoissonSource::Gaussian;
        else if (*v == "manufactured")
            c.source = PoissonSource::Manufactured;
        else
            throw ConfigError("source", "expected gaussian or manufactured, got '" + *v + "'");
        if (c.problem != ProblemId::Poisson2d) throw ConfigError("source", "only meaningful for poisson2d");
    }
    if (auto v = get("reference")) {
        if (*v == "grid")
            c.reference = ReferenceKind::Grid;
        else if (*v == "dense")
            c.reference = ReferenceKind::Dense;
        else if (*v == "exact")
            c.reference = ReferenceKind::Exact;
        else
            throw ConfigError("reference", "expected grid, dense or exact, got '" + *v + "'");
    }
    if (c.reference == ReferenceKind::Exact && c.source != PoissonSource::Manufactured)
        throw ConfigError("reference", "exact reference requires source = manufactured");
    if (auto v = get("reference_points")) c.reference_points = static_cast<std::size_t>(to_unsigned("reference_points", *v));
    if (c.reference_points < 3) throw ConfigError("reference_points", "must be at least 3");

    if (auto v = get("output_dir")) {
        if (v->empty()) throw ConfigError("output_dir", "must not be empty");
        c.output_dir = *v;
    }
    if (auto v = get("verbatim_sign")) {
        c.verbatim_sign = to_bool("verbatim_sign", *v);
        if (c.verbatim_sign && c.problem != ProblemId::Diffusion4d)
            throw ConfigError("verbatim_sign", "only meaningful for diffusion4d");
    }

    if (auto v = get("study_grids")) c.study_grids = to_list("study_grids", *v);
    for (std::size_t n : c.study_grids)
        if (n < 2) throw ConfigError("study_grids", "every grid needs at least 2 elements");
    if (auto v = get("study_ranks")) c.study_ranks = to_list("study_ranks", *v);
    for (std::size_t m : c.study_ranks)
        if (m == 0) throw ConfigError("study_ranks", "ranks must be at least 1");
    if (auto v = get("study_variants")) {
        c.study_variants.clear();
        for (const auto& item : split(*v, ',')) {
            try {
                c.study_variants.push_back(parse_hyper(item));
            } catch (const InvalidArgument& e) {
                throw ConfigError("study_variants", e.what());
            }
        }
        if (c.study_variants.empty()) throw ConfigError("study_variants", "expected a non-empty list");
    }
    if (auto v = get("bench_sizes")) c.bench_sizes = to_list("bench_sizes", *v);
    for (std::size_t n : c.bench_sizes)
        if (n < 3) throw ConfigError("bench_sizes", "every size needs at least 3 points");
    if (auto v = get("bench_time_elements"))
        c.bench_time_elements = static_cast<std::size_t>(to_unsigned("bench_time_elements", *v));
    if (c.bench_time_elements < 2) throw ConfigError("bench_time_elements", "must be at least 2");
    if (auto v = get("fdm_safety")) c.fdm_safety = to_real("fdm_safety", *v);
    if (!(c.fdm_safety > 0.0)) throw ConfigError("fdm_safety", "must be positive");
    if (auto v = get("memory_guard_bytes")) c.memory_guard_bytes = to_unsigned("memory_guard_bytes", *v);
    return c;
}

}  // namespace

WeakProblem RunConfig::build_problem() const {
    if (problem == ProblemId::Poisson2d) {
        const std::array<std::size_t, 2> n{elements.at(0), elements.at(1)};
        return source == PoissonSource::Manufactured ? manufactured_poisson2d_problem(n, hyper)
                                                     : poisson2d_problem(n, hyper);
    }
    const std::array<std::size_t, 4> n{elements.at(0), elements.at(1), elements.at(2), elements.at(3)};
    return diffusion_spacetime_problem(n, hyper, verbatim_sign);
}

RunConfig parse_config_text(const std::string& text, const ConfigOverrides& overrides) {
    KeyValues kv;
    parse_lines(text, kv);
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') kv["output_dir"] = env;
    for (const auto& [key, value] : overrides) kv[key] = value;
    return resolve(kv);
}

RunConfig parse_config(const std::optional<std::filesystem::path>& file, const ConfigOverrides& overrides) {
    std::string text;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw ConfigError("config", "cannot open " + file->string());
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    return parse_config_text(text, overrides);
}

std::string to_string(ProblemId id) { return id == ProblemId::Poisson2d ? "poisson2d" : "diffusion4d"; }

std::string to_string(SolveMode mode) { return mode == SolveMode::FullAls ? "full_als" : "greedy"; }

std::string describe_hyper(const Hyperparams& hyper) {
    if (hyper.kind == BasisKind::FeLinear) return "fe_linear";
    return "chidenn:" + std::to_string(hyper.s) + ":" + std::to_string(hyper.p) + ":" + detail::format_double(hyper.a);
}

Hyperparams parse_hyper(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() == 1 && parts[0] == "fe_linear") return Hyperparams::fe_linear();
    if (parts.empty() || parts[0] != "chidenn" || parts.size() < 3 || parts.size() > 4)
        throw InvalidArgument("expected fe_linear or chidenn:s:p[:a], got '" + text + "'");
    const auto s = static_cast<std::size_t>(to_unsigned("s", parts[1]));
    const auto p = static_cast<std::size_t>(to_unsigned("p", parts[2]));
    std::optional<double> a;
    if (parts.size() == 4) a = to_real("a", parts[3]);
    return Hyperparams::chidenn(s, p, a);
}

std::string describe_config(const RunConfig& c) {
    std::ostringstream out;
    auto line = [&out](const std::string& key, const std::string& value) { out << key << " = " << value << '\n'; };
    line("problem", to_string(c.problem));
    line("elements", join(c.elements));
    line("basis", c.hyper.kind == BasisKind::FeLinear ? "fe_linear" : "chidenn");
    if (c.hyper.kind == BasisKind::Chidenn) {
        line("s", std::to_string(c.hyper.s));
        line("p", std::to_string(c.hyper.p));
        line("a", detail::format_double(c.hyper.a));
    }
    line("rank", std::to_string(c.solver.rank));
    line("mode", to_string(c.solver.mode));
    line("tol", detail::format_double(c.solver.tol));
    line("max_sweeps", std::to_string(c.solver.max_sweeps));
    line("seed", std::to_string(c.solver.seed));
    line("quad_points", c.solver.quad_points ? std::to_string(*c.solver.quad_points) : "default");
    line("greedy_refine", c.solver.greedy_refine ? "true" : "false");
    if (c.problem == ProblemId::Poisson2d)
        line("source", c.source == PoissonSource::Gaussian ? "gaussian" : "manufactured");
    const char* refs[] = {"grid", "dense", "exact"};
    line("reference", refs[static_cast<int>(c.reference)]);
    line("reference_points", std::to_string(c.reference_points));
    line("output_dir", c.output_dir.string());
    if (c.problem == ProblemId::Diffusion4d) line("verbatim_sign", c.verbatim_sign ? "true" : "false");
    line("study_grids", join(c.study_grids));
    line("study_ranks", join(c.study_ranks));
    std::vector<std::string> variants;
    for (const auto& h : c.study_variants) variants.push_back(describe_hyper(h));
    line("study_variants", join(variants));
    line("bench_sizes", join(c.bench_sizes));
    line("bench_time_elements", std::to_string(c.bench_time_elements));
    line("fdm_safety", detail::format_double(c.fdm_safety));
    line("memory_guard_bytes", std::to_string(c.memory_guard_bytes));
    return out.str();
}

}  // namespace chtd
