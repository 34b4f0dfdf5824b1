#include "mfgc/cli/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mfgc/diagnostics.hpp"

namespace mfgc::cli {

namespace {

// nlohmann writes NaN and infinities as null; keep them distinguishable.
nlohmann::json num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

nlohmann::json opt(const std::optional<double>& v) { return v ? num(*v) : nlohmann::json(nullptr); }

} // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class Tag>
void write_field_csv(const std::string& path, const std::vector<NodalField<Tag>>& traj, const TimeGrid& tgrid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,x,value\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const std::string t = format_double(tgrid.time(k));
        const auto& f = traj[k];
        for (std::size_t i = 0; i < f.size(); ++i)
            out << t << ',' << format_double(f.grid().node(i)) << ',' << format_double(f[i]) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

template void write_field_csv(const std::string&, const std::vector<ScalarField>&, const TimeGrid&);
template void write_field_csv(const std::string&, const std::vector<ControlField>&, const TimeGrid&);

std::vector<std::vector<double>> read_field_csv(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "t,x,value") throw std::runtime_error(path + ": missing t,x,value header");
    std::vector<std::vector<double>> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto c2 = line.rfind(',');
        if (c2 == std::string::npos) throw std::runtime_error(path + ":" + std::to_string(row) + ": malformed row");
        const double v = std::strtod(line.c_str() + c2 + 1, nullptr);
        if (out.empty() || out.back().size() == n) out.emplace_back();
        out.back().push_back(v);
    }
    if (out.empty() || out.back().size() != n)
        throw std::runtime_error(path + ": row count is not a multiple of n = " + std::to_string(n));
    return out;
}

nlohmann::json to_json(const DiagnosticsReport& d) {
    nlohmann::json j;
    j["mass_max_dev"] = num(d.mass_max_dev);
    j["m_min"] = num(d.m_min);
    j["energy_identity_residual"] = num(d.energy_identity_residual);
    j["lambda_bound_margin"] = num(d.lambda_bound_margin);
    j["grad_value_ratio"] = num(d.grad_value_ratio);
    j["max_principle_margin"] = opt(d.max_principle_margin);
    if (d.small_param)
        j["small_param"] = {{"ok", d.small_param->ok}, {"lhs", num(d.small_param->lhs)}, {"rhs", num(d.small_param->rhs)}};
    else
        j["small_param"] = nullptr;
    j["b3_side_condition"] = d.b3_side_condition;
    j["verified"] = d.verified();
    return j;
}

nlohmann::json to_json(const StructuralConstants& c) {
    return {{"q", num(c.q)},           {"q0", num(c.q0)},           {"lambda0", num(c.lambda0)},
            {"C0", num(c.C0)},         {"lambda1", opt(c.lambda1)}, {"lambda2", opt(c.lambda2)},
            {"beta0", num(c.beta0)}};
}

nlohmann::json to_json(const AssumptionReport& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["n_samples"] = r.n_samples;
    j["p_max"] = num(r.p_max);
    j["constants"] = to_json(r.constants);
    j["total_violations"] = r.total_violations();
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
        nlohmann::json e{{"name", c.name},
                         {"declared", c.declared},
                         {"samples", c.samples},
                         {"violations", c.violations},
                         {"worst_margin", num(c.worst_margin)}};
        if (c.witness) {
            const auto& w = *c.witness;
            e["witness"] = {{"sample_index", w.sample_index}, {"node", w.node},   {"x", num(w.x)},
                            {"p", num(w.p)},                   {"lhs", num(w.lhs)}, {"rhs", num(w.rhs)},
                            {"margin", num(w.margin)},         {"m", w.m},        {"alpha", w.alpha}};
            if (!w.alpha2.empty()) e["witness"]["alpha2"] = w.alpha2;
        }
        checks.push_back(std::move(e));
    }
    j["checks"] = std::move(checks);
    if (r.small_param)
        j["small_param"] = {{"ok", r.small_param->ok}, {"lhs", num(r.small_param->lhs)}, {"rhs", num(r.small_param->rhs)}};
    j["b3_side_condition"] = r.b3_side_condition;
    return j;
}

nlohmann::json summary_json(const SolveResult& result, const Model& model, const nlohmann::json& config_echo) {
    nlohmann::json j;
    j["converged"] = result.converged;
    j["outer_iterations"] = result.outer_iterations;
    nlohmann::json hist = nlohmann::json::array();
    for (double r : result.residual_history) hist.push_back(num(r));
    j["residual_history"] = std::move(hist);
    j["diagnostics"] = to_json(result.diagnostics);
    j["config_echo"] = config_echo;
    j["diverged"] = result.diverged;
    j["verified"] = result.converged && result.diagnostics.verified();
    j["model"] = variant_name(model.spec());
    j["constants"] = to_json(model.constants());
    j["system_residuals"] = {{"hjb", num(result.system_residuals.hjb)},
                             {"fpk", num(result.system_residuals.fpk)},
                             {"mu", num(result.system_residuals.mu)}};
    j["M"] = num(result.M);
    j["truncation_inactive"] = result.truncation_inactive;
    j["max_mu_contraction"] = num(result.max_mu_contraction);
    return j;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

} // namespace mfgc::cli
