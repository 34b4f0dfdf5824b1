#include "mfgc/cli/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "mfgc/errors.hpp"

namespace mfgc::cli {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed access to one TOML table with unknown-key rejection and located errors.
class Block {
public:
    Block(const toml::table& table, std::string path, std::string origin, std::set<std::string> allowed)
        : table_(table), path_(std::move(path)), origin_(std::move(origin)) {
        for (const auto& [k, node] : table_) {
            const std::string key(k.str());
            if (!allowed.count(key)) fail(node, key, "unknown key");
        }
    }

    bool has(const std::string& key) const { return table_.contains(key); }
    const toml::node* node(const std::string& key) const { return table_.get(key); }

    [[noreturn]] void fail(const toml::node& n, const std::string& key, const std::string& what) const {
        std::ostringstream os;
        os << origin_;
        if (n.source().begin.line > 0) os << ":" << n.source().begin.line;
        os << ": key '" << join(path_, key) << "': " << what;
        throw ConfigError(os.str());
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        if (const auto* n = node(key)) fail(*n, key, what);
        throw ConfigError(origin_ + ": key '" + join(path_, key) + "': " + what);
    }

    std::optional<double> number(const std::string& key) const {
        const toml::node* n = node(key);
        if (!n) return std::nullopt;
        if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return *v;
        fail(*n, key, "expected a number");
    }

    double number(const std::string& key, double fallback) const { return number(key).value_or(fallback); }

    std::optional<std::int64_t> integer(const std::string& key) const {
        const toml::node* n = node(key);
        if (!n) return std::nullopt;
        if (n->is_integer()) return *n->value<std::int64_t>();
        if (n->is_floating_point()) {
            const double d = *n->value<double>();
            if (std::isfinite(d) && d == std::floor(d)) return static_cast<std::int64_t>(d);
        }
        fail(*n, key, "expected an integer");
    }

    std::size_t count(const std::string& key, std::size_t fallback, std::size_t min_value) const {
        const auto v = integer(key);
        if (!v) return fallback;
        if (*v < static_cast<std::int64_t>(min_value)) fail(key, "must be at least " + std::to_string(min_value));
        return static_cast<std::size_t>(*v);
    }

    std::optional<std::string> string(const std::string& key) const {
        const toml::node* n = node(key);
        if (!n) return std::nullopt;
        if (n->is_string()) return *n->value<std::string>();
        fail(*n, key, "expected a string");
    }

    std::optional<bool> boolean(const std::string& key) const {
        const toml::node* n = node(key);
        if (!n) return std::nullopt;
        if (n->is_boolean()) return *n->value<bool>();
        fail(*n, key, "expected true or false");
    }

    std::vector<double> numbers(const std::string& key) const {
        const toml::node* n = node(key);
        if (!n) return {};
        const toml::array* arr = n->as_array();
        if (!arr) fail(*n, key, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : *arr) {
            if (!(e.is_floating_point() || e.is_integer())) fail(*n, key, "expected an array of numbers");
            out.push_back(*e.value<double>());
        }
        return out;
    }

    std::vector<std::string> strings(const std::string& key) const {
        const toml::node* n = node(key);
        if (!n) return {};
        const toml::array* arr = n->as_array();
        if (!arr) fail(*n, key, "expected an array of strings");
        std::vector<std::string> out;
        for (const auto& e : *arr) {
            if (!e.is_string()) fail(*n, key, "expected an array of strings");
            out.push_back(*e.value<std::string>());
        }
        return out;
    }

    const toml::table* subtable(const std::string& key) const {
        const toml::node* n = node(key);
        if (!n) return nullptr;
        if (const auto* t = n->as_table()) return t;
        fail(*n, key, "expected a table");
    }

    Block sub(const std::string& key, std::set<std::string> allowed) const {
        return Block(*subtable(key), join(path_, key), origin_, std::move(allowed));
    }

    const std::string& path() const { return path_; }
    const std::string& origin() const { return origin_; }

private:
    const toml::table& table_;
    std::string path_;
    std::string origin_;
};

void require(const Block& b, const std::string& key, bool ok, const std::string& what) {
    if (!ok) b.fail(key, what);
}

Profile read_profile(const Block& parent, const std::string& key, Profile fallback) {
    const toml::node* n = parent.node(key);
    if (!n) return fallback;
    Profile p;
    if (n->is_floating_point() || n->is_integer()) {
        p.constant = *n->value<double>();
        return p;
    }
    if (!n->is_table()) parent.fail(*n, key, "expected a number or a profile table");
    const toml::table& t = *n->as_table();
    const std::string type = t.contains("type") && t.get("type")->is_string() ? *t.get("type")->value<std::string>()
                                                                              : std::string("fourier");
    if (type == "fourier") {
        const Block b(t, join(parent.path(), key), parent.origin(), {"type", "constant", "cos", "sin"});
        p.kind = Profile::Kind::Fourier;
        p.constant = b.number("constant", 0.0);
        p.cos = b.numbers("cos");
        p.sin = b.numbers("sin");
    } else if (type == "von_mises") {
        const Block b(t, join(parent.path(), key), parent.origin(), {"type", "center", "concentration"});
        p.kind = Profile::Kind::VonMises;
        p.center = b.number("center", 0.5);
        p.concentration = b.number("concentration", 1.0);
        require(b, "concentration", p.concentration >= 0.0, "must be non-negative");
    } else {
        const Block b(t, join(parent.path(), key), parent.origin(),
                      {"type", "constant", "cos", "sin", "center", "concentration"});
        b.fail("type", "expected \"fourier\" or \"von_mises\"");
    }
    return p;
}

KernelSpec read_kernel(const Block& model) {
    KernelSpec k;
    const toml::table* t = model.subtable("kernel");
    if (!t) return k;
    const std::string type = t->contains("type") && t->get("type")->is_string()
                                 ? *t->get("type")->value<std::string>()
                                 : std::string("cosine");
    const std::string path = join(model.path(), "kernel");
    if (type == "cosine") {
        const Block b(*t, path, model.origin(), {"type", "kappa"});
        k.kind = KernelSpec::Kind::Cosine;
        k.kappa = b.number("kappa", k.kappa);
        require(b, "kappa", k.kappa >= 0.0 && k.kappa <= 1.0, "must lie in [0, 1]");
    } else if (type == "gaussian") {
        const Block b(*t, path, model.origin(), {"type", "weight", "length"});
        k.kind = KernelSpec::Kind::Gaussian;
        k.weight = b.number("weight", k.weight);
        k.length = b.number("length", k.length);
        require(b, "weight", k.weight > 0.0, "must be positive");
        require(b, "length", k.length > 0.0, "must be positive");
    } else if (type == "constant") {
        const Block b(*t, path, model.origin(), {"type", "value"});
        k.kind = KernelSpec::Kind::Constant;
        k.value = b.number("value", k.value);
        require(b, "value", k.value > 0.0, "must be positive");
    } else {
        const Block b(*t, path, model.origin(), {"type", "kappa", "weight", "length", "value"});
        b.fail("type", "expected \"cosine\", \"gaussian\" or \"constant\"");
    }
    return k;
}

ModelBlock read_model(const Block& root) {
    if (!root.subtable("model")) throw ConfigError(root.origin() + ": missing [model] table");
    const toml::table& t = *root.subtable("model");
    const toml::node* vnode = t.get("variant");
    if (!vnode || !vnode->is_string()) throw ConfigError(root.origin() + ": key 'model.variant': required string");
    ModelBlock m;
    m.variant = *vnode->value<std::string>();

    if (m.variant == "linear_demand") {
        const Block b(t, "model", root.origin(), {"variant", "eps"});
        m.eps = b.number("eps", m.eps);
        require(b, "eps", m.eps >= 0.0 && std::isfinite(m.eps), "must be a finite number >= 0");
    } else if (m.variant == "neg_corr_resources") {
        const Block b(t, "model", root.origin(), {"variant", "coupling"});
        m.coupling = b.number("coupling", m.coupling);
        require(b, "coupling", std::abs(m.coupling) < 1.0, "|coupling| must be < 1");
    } else if (m.variant == "price_impact") {
        const Block b(t, "model", root.origin(), {"variant", "eps_tilde"});
        m.eps_tilde = b.number("eps_tilde", m.eps_tilde);
        require(b, "eps_tilde", m.eps_tilde > 0.0 && m.eps_tilde < 0.5, "must lie in (0, 1/2)");
    } else if (m.variant == "crowd_motion") {
        const Block b(t, "model", root.origin(), {"variant", "theta", "lambda_tilde", "a", "b", "q0", "kernel"});
        m.theta = b.number("theta", m.theta);
        m.lambda_tilde = b.number("lambda_tilde", m.lambda_tilde);
        m.a = b.number("a", m.a);
        m.b = b.number("b", m.b);
        m.q0 = b.number("q0", m.q0);
        require(b, "theta", m.theta >= 0.0 && m.theta <= 1.0, "must lie in [0, 1]");
        require(b, "lambda_tilde", std::abs(m.lambda_tilde) < 1.0, "must lie in (-1, 1)");
        require(b, "a", m.a >= 2.0, "must be >= 2");
        require(b, "b", m.b >= 2.0, "must be >= 2");
        require(b, "q0", m.q0 >= 1.0, "must be >= 1");
        m.kernel = read_kernel(b);
    } else if (m.variant == "flocking") {
        const Block b(t, "model", root.origin(), {"variant", "kernel"});
        m.kernel = read_kernel(b);
    } else {
        const Block b(t, "model", root.origin(), {"variant"});
        b.fail("variant", "unknown variant \"" + m.variant +
                              "\" (expected linear_demand, neg_corr_resources, price_impact, crowd_motion or flocking)");
    }
    return m;
}

void read_solver(const Block& root, RunConfig& cfg) {
    if (!root.subtable("solver")) return;
    const Block b = root.sub("solver", {"M", "omega", "tol_outer", "max_outer", "tol_mu", "max_mu", "nu", "hjb_gradient",
                                        "cfl_guard", "continuation", "initial_guess"});
    SolverConfig& s = cfg.solver;
    s.M = b.number("M", s.M);
    require(b, "M", s.M > 0.0, "must be positive");
    s.omega = b.number("omega", s.omega);
    require(b, "omega", s.omega > 0.0 && s.omega <= 1.0, "must lie in (0, 1]");
    s.tol_outer = b.number("tol_outer", s.tol_outer);
    require(b, "tol_outer", s.tol_outer > 0.0, "must be positive");
    s.max_outer = b.count("max_outer", s.max_outer, 1);
    s.tol_mu = b.number("tol_mu", s.tol_mu);
    require(b, "tol_mu", s.tol_mu > 0.0, "must be positive");
    s.max_mu = b.count("max_mu", s.max_mu, 1);
    s.scheme.nu = b.number("nu", s.scheme.nu);
    require(b, "nu", s.scheme.nu > 0.0 && std::isfinite(s.scheme.nu), "must be positive");
    if (auto g = b.string("hjb_gradient")) {
        if (*g == "centered") s.scheme.hjb_gradient = Advection::Centered;
        else if (*g == "upwind") s.scheme.hjb_gradient = Advection::Upwind;
        else b.fail("hjb_gradient", "expected \"centered\" or \"upwind\"");
    }
    s.scheme.cfl_guard = b.boolean("cfl_guard").value_or(s.scheme.cfl_guard);
    s.continuation = b.numbers("continuation");
    for (std::size_t i = 0; i < s.continuation.size(); ++i) {
        require(b, "continuation", s.continuation[i] > 0.0, "entries must be positive");
        require(b, "continuation", i == 0 || s.continuation[i] > s.continuation[i - 1], "must be strictly increasing");
    }
    if (auto g = b.string("initial_guess")) {
        if (*g == "zero") s.initial_guess = InitialGuess::Zero;
        else if (*g == "terminal") s.initial_guess = InitialGuess::Terminal;
        else b.fail("initial_guess", "expected \"zero\" or \"terminal\"");
    }
}

void read_constants(const Block& root, RunConfig& cfg) {
    if (!root.subtable("constants")) return;
    const Block b = root.sub("constants", {"q", "q0", "lambda0", "C0", "lambda1", "lambda2", "beta0"});
    StructuralConstants c;
    for (const char* k : {"q", "lambda0", "C0"})
        if (!b.has(k)) b.fail(k, "required when overriding constants");
    c.q = *b.number("q");
    c.q0 = b.number("q0", c.q0);
    c.lambda0 = *b.number("lambda0");
    c.C0 = *b.number("C0");
    c.lambda1 = b.number("lambda1");
    c.lambda2 = b.number("lambda2");
    c.beta0 = b.number("beta0", c.beta0);
    require(b, "q", c.q > 1.0, "must be > 1");
    require(b, "q0", c.q0 >= 1.0, "must be >= 1");
    require(b, "lambda0", c.lambda0 >= 0.0 && c.lambda0 < 1.0, "must lie in [0, 1)");
    require(b, "C0", c.C0 > 0.0, "must be positive");
    require(b, "beta0", c.beta0 > 0.0 && c.beta0 <= 1.0, "must lie in (0, 1]");
    cfg.constants = c;
}

nlohmann::json to_json(const toml::node& n) {
    if (const auto* t = n.as_table()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = to_json(v);
        return out;
    }
    if (const auto* a = n.as_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : *a) out.push_back(to_json(v));
        return out;
    }
    if (n.is_integer()) return *n.value<std::int64_t>();
    if (n.is_floating_point()) {
        const double d = *n.value<double>();
        if (std::isnan(d)) return "nan";
        if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
        return d;
    }
    if (n.is_boolean()) return *n.value<bool>();
    if (n.is_string()) return *n.value<std::string>();
    return nullptr;
}

void insert_json(toml::table& t, const std::string& key, const nlohmann::json& j);

toml::array json_array(const nlohmann::json& j) {
    toml::array arr;
    for (const auto& e : j) {
        if (e.is_number_integer()) arr.push_back(e.get<std::int64_t>());
        else if (e.is_number()) arr.push_back(e.get<double>());
        else if (e.is_boolean()) arr.push_back(e.get<bool>());
        else if (e.is_string()) arr.push_back(e.get<std::string>());
        else throw ConfigError("config echo: unsupported array element");
    }
    return arr;
}

toml::table json_table(const nlohmann::json& j) {
    toml::table t;
    for (const auto& [k, v] : j.items()) insert_json(t, k, v);
    return t;
}

void insert_json(toml::table& t, const std::string& key, const nlohmann::json& j) {
    if (j.is_object()) t.insert(key, json_table(j));
    else if (j.is_array()) t.insert(key, json_array(j));
    else if (j.is_number_integer()) t.insert(key, j.get<std::int64_t>());
    else if (j.is_number()) t.insert(key, j.get<double>());
    else if (j.is_boolean()) t.insert(key, j.get<bool>());
    else if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") t.insert(key, std::numeric_limits<double>::infinity());
        else if (s == "-inf") t.insert(key, -std::numeric_limits<double>::infinity());
        else if (s == "nan") t.insert(key, std::numeric_limits<double>::quiet_NaN());
        else t.insert(key, s);
    } else throw ConfigError("config echo: unsupported value at key '" + key + "'");
}

RunConfig parse_table(const toml::table& doc, const std::string& origin) {
    const Block root(doc, "", origin,
                     {"seed", "model", "running_cost", "terminal_cost", "initial_density", "grid", "solver", "constants",
                      "output", "check"});
    RunConfig cfg;
    if (auto s = root.integer("seed")) {
        require(root, "seed", *s >= 0, "must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(*s);
    }
    cfg.model = read_model(root);

    if (root.subtable("running_cost")) {
        const Block b = root.sub("running_cost", {"f0", "local_coupling"});
        cfg.f0 = read_profile(b, "f0", cfg.f0);
        cfg.local_coupling = b.number("local_coupling", 0.0);
    }
    if (root.subtable("terminal_cost")) {
        const Block b = root.sub("terminal_cost", {"g0", "density_coupling"});
        cfg.g0 = read_profile(b, "g0", cfg.g0);
        cfg.density_coupling = b.number("density_coupling", 0.0);
    }
    if (root.subtable("initial_density")) {
        const Block b = root.sub("initial_density", {"profile"});
        cfg.m0 = read_profile(b, "profile", cfg.m0);
    }
    if (root.subtable("grid")) {
        const Block b = root.sub("grid", {"n", "T", "nt"});
        cfg.n = b.count("n", cfg.n, 4);
        cfg.T = b.number("T", cfg.T);
        require(b, "T", cfg.T > 0.0 && std::isfinite(cfg.T), "must be positive");
        cfg.nt = b.count("nt", cfg.nt, 1);
    }
    read_solver(root, cfg);
    read_constants(root, cfg);
    if (root.subtable("output")) {
        const Block b = root.sub("output", {"directory", "formats"});
        cfg.output_dir = b.string("directory").value_or(cfg.output_dir);
        if (b.has("formats")) {
            cfg.formats = b.strings("formats");
            for (const auto& f : cfg.formats)
                require(b, "formats", f == "csv" || f == "json", "entries must be \"csv\" or \"json\"");
        }
    }
    if (root.subtable("check")) {
        const Block b = root.sub("check", {"samples", "p_max", "h4_tuples"});
        cfg.check.samples = b.count("samples", cfg.check.samples, 1);
        cfg.check.p_max = b.number("p_max", cfg.check.p_max);
        require(b, "p_max", cfg.check.p_max > 0.0, "must be positive");
        cfg.check.h4_tuples = b.count("h4_tuples", 0, 0);
    }

    // Positivity of m0 is checked here so the error names the key.
    const TorusGrid grid(cfg.n);
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!(cfg.m0(grid.node(i)) > 0.0))
            throw ConfigError(origin + ": key 'initial_density.profile': density must be positive on every node");

    cfg.echo = to_json(doc);
    return cfg;
}

toml::table parse_text(const std::string& text, const std::string& origin) {
    try {
        return toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << origin << ":" << e.source().begin.line << ": " << e.description();
        throw ConfigError(os.str());
    }
}

} // namespace

double Profile::operator()(double x) const {
    const double w = 2.0 * std::numbers::pi * x;
    if (kind == Kind::VonMises) return std::exp(concentration * std::cos(w - 2.0 * std::numbers::pi * center));
    double v = constant;
    for (std::size_t k = 0; k < cos.size(); ++k) v += cos[k] * std::cos(static_cast<double>(k + 1) * w);
    for (std::size_t k = 0; k < sin.size(); ++k) v += sin[k] * std::sin(static_cast<double>(k + 1) * w);
    return v;
}

KernelTable KernelSpec::build(const TorusGrid& grid) const {
    switch (kind) {
    case Kind::Cosine: return KernelTable::cosine(grid, kappa);
    case Kind::Gaussian: return KernelTable::gaussian(grid, weight, length);
    case Kind::Constant: return KernelTable::constant(grid, value);
    }
    return KernelTable::constant(grid, value);
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    return parse_table(parse_text(text, origin), origin);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

RunConfig with_override(const std::string& text, const std::string& origin, const std::string& key, double value) {
    toml::table doc = parse_text(text, origin);
    toml::table* t = &doc;
    std::string rest = key;
    for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
        const std::string head = rest.substr(0, dot);
        rest = rest.substr(dot + 1);
        if (!t->contains(head)) t->insert(head, toml::table{});
        t = t->get(head)->as_table();
        if (!t) throw ConfigError(origin + ": key '" + key + "': '" + head + "' is not a table");
    }
    if (rest.empty()) throw ConfigError(origin + ": sweep key '" + key + "' is malformed");
    const toml::node* old = t->get(rest);
    if (old && !(old->is_integer() || old->is_floating_point()))
        throw ConfigError(origin + ": key '" + key + "': sweep parameter must be numeric");
    if (old && old->is_integer() && value == std::floor(value)) t->insert_or_assign(rest, static_cast<std::int64_t>(value));
    else t->insert_or_assign(rest, value);
    return parse_table(doc, origin);
}

RunConfig config_from_echo(const nlohmann::json& echo) {
    if (!echo.is_object()) throw ConfigError("summary.json: config_echo is not an object");
    return parse_table(json_table(echo), "config_echo");
}

Model build_model(const RunConfig& cfg) {
    const TorusGrid grid(cfg.n);
    const auto& mb = cfg.model;
    ModelSpec spec;
    if (mb.variant == "linear_demand") spec = LinearDemand{mb.eps};
    else if (mb.variant == "neg_corr_resources") spec = NegCorrResources{mb.coupling};
    else if (mb.variant == "price_impact") spec = PriceImpact{mb.eps_tilde};
    else if (mb.variant == "crowd_motion")
        spec = CrowdMotion{mb.theta, mb.lambda_tilde, mb.a, mb.b, mb.q0, mb.kernel.build(grid)};
    else if (mb.variant == "flocking") spec = Flocking{mb.kernel.build(grid)};
    else throw ConfigError("unknown model variant " + mb.variant);

    RunningCost running;
    running.local_coupling = cfg.local_coupling;
    TerminalCost terminal;
    terminal.density_coupling = cfg.density_coupling;
    running.f0.resize(grid.size());
    terminal.g0.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        running.f0[i] = cfg.f0(grid.node(i));
        terminal.g0[i] = cfg.g0(grid.node(i));
    }
    try {
        Model model(grid, std::move(spec), std::move(running), std::move(terminal));
        if (cfg.constants) model.override_constants(*cfg.constants);
        return model;
    } catch (const mfgc::Error& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

ScalarField build_initial_density(const RunConfig& cfg, const TorusGrid& grid) {
    ScalarField m = ScalarField::sample(grid, cfg.m0);
    const double mass = integrate(m);
    for (double& v : m) v /= mass;
    return m;
}

std::string resolve_output_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("MFGC_OUT"); env && *env) return env;
    return cfg.output_dir;
}

} // namespace mfgc::cli
